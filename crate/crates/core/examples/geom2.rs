use softdrop::data::{generate, DatasetSpec, Provenance};
use softdrop::loss::{final_loss, SmoothingConfig};
use softdrop::model::Model;
use softdrop::optim::OptimizerState;
use softdrop::tensor::{dot, l2_norm, l2_normalize, softmax};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() {
    let lambda: f64 = std::env::args().nth(1).map_or(0.0, |s| s.parse().unwrap());
    let spec = DatasetSpec { open_noise_rate: 0.2, seed: 1, ..DatasetSpec::default() };
    let bundle = generate(&spec).unwrap();
    let train = &bundle.train;
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let mut model = Model::init(16, Some(32), 16, 20, 30.0, &mut rng).unwrap();
    let mut opt = OptimizerState::new(&model, 0.9, 0.01, 5, 80).unwrap();
    let smoothing = SmoothingConfig::new(0.5, 20).unwrap();

    println!("lambda = {lambda}");
    println!("epoch  ||f||  spread  cos_y   pair_gap  H(clean)  H(open)");
    for epoch in 1..=80usize {
        if epoch % 16 == 0 || epoch == 1 || epoch == 8 || epoch == 80 {
            let mut units: Vec<Vec<f64>> = Vec::new();
            let (mut fnorm, mut cos_y, mut gap, mut h_clean, mut h_open) = (0.0, 0.0, 0.0, 0.0, 0.0);
            let (mut n_clean, mut n_open) = (0usize, 0usize);
            for s in &train.samples {
                let tr = model.forward_trace(&s.features).unwrap();
                let h = softmax(&tr.logits).unwrap().entropy();
                if s.provenance == Provenance::Clean {
                    if units.len() < 100 { units.push(l2_normalize(&tr.feature).unwrap()); }
                    fnorm += l2_norm(&tr.feature);
                    cos_y += tr.logits[s.label] / 30.0;
                    gap += (tr.logits[s.label] - tr.logits[s.label ^ 1]) / 30.0;
                    h_clean += h; n_clean += 1;
                } else { h_open += h; n_open += 1; }
            }
            let (mut acc, mut cnt) = (0.0, 0usize);
            for i in 0..units.len() { for j in (i + 1)..units.len() { acc += dot(&units[i], &units[j]); cnt += 1; } }
            println!("{:>4}  {:5.2}  {:6.3}  {:6.3}  {:8.4}  {:8.3}  {:7.3}",
                epoch, fnorm / n_clean as f64, acc / cnt as f64, cos_y / n_clean as f64,
                gap / n_clean as f64, h_clean / n_clean as f64, h_open / n_open as f64);
        }
        let lr = opt.lr_at_epoch(epoch).unwrap();
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng);
        for batch in order.chunks(32) {
            let samples: Vec<(&[f64], usize)> = batch.iter()
                .map(|&i| (train.samples[i].features.as_slice(), train.samples[i].label)).collect();
            let (_, grads) = final_loss(&model, &samples, &smoothing).unwrap();
            opt.step(&mut model, &grads, lr).unwrap();
            // decoupled weight decay on encoder weight matrices
            if lambda > 0.0 {
                let e = model.encoder.as_mut().unwrap();
                let shrink = 1.0 - lr * lambda;
                for v in e.w1.data_mut() { *v *= shrink; }
                if let Some(w2) = &mut e.w2 { for v in w2.data_mut() { *v *= shrink; } }
            }
        }
    }
}

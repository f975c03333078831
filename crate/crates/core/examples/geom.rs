use softdrop::data::{generate, DatasetSpec, Provenance};
use softdrop::loss::{final_loss, SmoothingConfig};
use softdrop::model::Model;
use softdrop::optim::OptimizerState;
use softdrop::tensor::{dot, l2_norm, l2_normalize, softmax};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() {
    let spec = DatasetSpec { open_noise_rate: 0.2, seed: 1, ..DatasetSpec::default() };
    let bundle = generate(&spec).unwrap();
    let train = &bundle.train;
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let mut model = Model::init(16, Some(32), 16, 20, 30.0, &mut rng).unwrap();
    let mut opt = OptimizerState::new(&model, 0.9, 0.01, 5, 80).unwrap();
    let smoothing = SmoothingConfig::new(0.5, 20).unwrap();

    println!("epoch  ||f||   feat_spread  cos_y   pair_gap  H(clean)  H(open)");
    for epoch in 1..=80usize {
        // geometry probe on 200 clean + all open samples
        if epoch == 1 || epoch % 8 == 0 || epoch == 80 {
            let mut units: Vec<Vec<f64>> = Vec::new();
            let (mut fnorm, mut cos_y, mut gap, mut h_clean, mut h_open) = (0.0, 0.0, 0.0, 0.0, 0.0);
            let (mut n_clean, mut n_open) = (0usize, 0usize);
            for s in &train.samples {
                let tr = model.forward_trace(&s.features).unwrap();
                let h = softmax(&tr.logits).unwrap().entropy();
                if s.provenance == Provenance::Clean {
                    if n_clean < 200 {
                        units.push(l2_normalize(&tr.feature).unwrap());
                    }
                    fnorm += l2_norm(&tr.feature);
                    cos_y += tr.logits[s.label] / 30.0;
                    gap += (tr.logits[s.label] - tr.logits[s.label ^ 1]) / 30.0;
                    h_clean += h;
                    n_clean += 1;
                } else {
                    h_open += h;
                    n_open += 1;
                }
            }
            let mut spread = 0.0;
            let mut cnt = 0;
            for i in 0..units.len().min(100) {
                for j in (i + 1)..units.len().min(100) {
                    spread += dot(&units[i], &units[j]);
                    cnt += 1;
                }
            }
            println!(
                "{:>4}  {:6.2}  {:10.3}  {:6.3}  {:8.4}  {:8.3}  {:7.3}",
                epoch,
                fnorm / n_clean as f64,
                spread / cnt as f64,
                cos_y / n_clean as f64,
                gap / n_clean as f64,
                h_clean / n_clean as f64,
                h_open / n_open as f64
            );
        }
        // plain training epoch on everything (no selection) to watch dynamics
        let lr = opt.lr_at_epoch(epoch).unwrap();
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng);
        for batch in order.chunks(32) {
            let samples: Vec<(&[f64], usize)> = batch
                .iter()
                .map(|&i| (train.samples[i].features.as_slice(), train.samples[i].label))
                .collect();
            let (_, grads) = final_loss(&model, &samples, &smoothing).unwrap();
            opt.step(&mut model, &grads, lr).unwrap();
        }
    }
}

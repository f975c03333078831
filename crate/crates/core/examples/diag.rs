use softdrop::data::{generate, DatasetSpec};
use softdrop::model::Model;
use softdrop::tensor::{l2_norm, softmax};
use softdrop::train::{run_training, TrainConfig};

fn stats(model: &Model, ds: &softdrop::data::Dataset, label: &str) {
    let mut cos_y = 0.0;
    let mut cos_other_max = 0.0;
    let mut entropy = 0.0;
    let mut fnorm = 0.0;
    let mut pair_gap = 0.0;
    for s in &ds.samples {
        let trace = model.forward_trace(&s.features).unwrap();
        let logits = &trace.logits;
        let scale = model.classifier.scale;
        cos_y += logits[s.label] / scale;
        let other = logits
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != s.label)
            .map(|(_, &l)| l / scale)
            .fold(f64::NEG_INFINITY, f64::max);
        cos_other_max += other;
        let partner = s.label ^ 1;
        pair_gap += (logits[s.label] - logits[partner]) / scale;
        entropy += softmax(logits).unwrap().entropy();
        fnorm += l2_norm(&trace.feature);
    }
    let n = ds.samples.len() as f64;
    println!(
        "{label}: cos_y {:.3}  max_other {:.3}  pair_gap {:.3}  H(p) {:.3}  ||f|| {:.3}",
        cos_y / n, cos_other_max / n, pair_gap / n, entropy / n, fnorm / n
    );
}

fn main() {
    let spec = DatasetSpec { open_noise_rate: 0.2, seed: 1, ..DatasetSpec::default() };
    let bundle = generate(&spec).unwrap();
    let config = TrainConfig { seed: 1, ..TrainConfig::default() };
    let out = run_training(&bundle, &config).unwrap();
    let best = Model::from_checkpoint(&out.best_checkpoint).unwrap();
    stats(&best, &bundle.test, "test(best)");
    stats(&best, &bundle.train, "train(best)");
    // Angular spread of classifier rows: mean pairwise cosine.
    let w = &best.classifier.weights;
    let mut acc = 0.0;
    let mut cnt = 0;
    for i in 0..w.rows() {
        for j in (i + 1)..w.rows() {
            acc += softdrop::tensor::dot(w.row(i), w.row(j));
            cnt += 1;
        }
    }
    println!("mean pairwise row cosine: {:.3}", acc / cnt as f64);
}

use softdrop::data::{generate, DatasetSpec};
use softdrop::report::auroc;
use softdrop::train::{run_training, SelectionStrategy, TrainConfig};

fn auroc_window(out: &softdrop::train::TrainOutput, lo: usize, hi: usize) -> f64 {
    let mut total = 0.0;
    let mut count = 0;
    for r in &out.records {
        if r.epoch < lo || r.epoch > hi || r.outcome.scores.is_empty() { continue; }
        let pos: Vec<f64> = r.outcome.scores.iter().zip(&out.train_provenance)
            .filter(|(_, p)| p.token() == "open").map(|(s, _)| *s).collect();
        let neg: Vec<f64> = r.outcome.scores.iter().zip(&out.train_provenance)
            .filter(|(_, p)| p.token() != "open").map(|(s, _)| *s).collect();
        total += auroc(&pos, &neg).unwrap();
        count += 1;
    }
    if count == 0 { return f64::NAN; }
    total / count as f64
}

fn main() {
    let a: Vec<String> = std::env::args().collect();
    let sigma: f64 = a[1].parse().unwrap();
    let rmin: f64 = a[2].parse().unwrap();
    let rmax: f64 = a[3].parse().unwrap();
    let cmin: f64 = a[4].parse().unwrap();
    let seed: u64 = a[5].parse().unwrap();
    let spec = DatasetSpec {
        open_noise_rate: 0.2, within_class_std: sigma,
        radial_min: rmin, radial_max: rmax, center_min_angle_deg: cmin, seed,
        ..DatasetSpec::default()
    };
    let bundle = generate(&spec).unwrap();
    let cfg = |strategy| TrainConfig { strategy, seed, ..TrainConfig::default() };
    let prob = run_training(&bundle, &cfg(SelectionStrategy::GlobalProbCe)).unwrap();
    let mut violations = 0;
    for r in &prob.records {
        if r.epoch > prob.config.ramp_epochs {
            if let (Some(c), Some(o)) = (r.mean_score_clean, r.mean_score_open) {
                if o <= c { violations += 1; }
            }
        }
    }
    let none = run_training(&bundle, &cfg(SelectionStrategy::NoSelection)).unwrap();
    println!(
        "sig {sigma} r[{rmin},{rmax}] cmin {cmin} seed {seed}: AUROC[11-20] {:.3} viol {violations} prob {:.4} none {:.4} gap {:+.2}",
        auroc_window(&prob, 11, 20),
        prob.best_test_accuracy, none.best_test_accuracy,
        100.0 * (prob.best_test_accuracy - none.best_test_accuracy)
    );
}

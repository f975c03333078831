use softdrop::data::{generate, DatasetSpec};
use softdrop::train::{run_training, SelectionStrategy, TrainConfig};

fn main() {
    let sigma: f64 = std::env::args().nth(1).map_or(0.12, |s| s.parse().unwrap());
    let mut rows: Vec<(String, f64, f64)> = Vec::new();
    for (open, close) in [(0.0, 0.0), (0.2, 0.0), (0.0, 0.1), (0.2, 0.1)] {
        let (mut none_sum, mut prob_sum) = (0.0, 0.0);
        for seed in [1u64, 2, 3] {
            let spec = DatasetSpec {
                open_noise_rate: open, close_noise_rate: close,
                within_class_std: sigma, open_cluster_count: 6, seed,
                ..DatasetSpec::default()
            };
            let b = generate(&spec).unwrap();
            let none = run_training(&b, &TrainConfig {
                strategy: SelectionStrategy::NoSelection, seed, ..TrainConfig::default()
            }).unwrap();
            let prob = run_training(&b, &TrainConfig { seed, ..TrainConfig::default() }).unwrap();
            none_sum += none.best_test_accuracy;
            prob_sum += prob.best_test_accuracy;
        }
        rows.push((format!("open {open} close {close}"), none_sum / 3.0, prob_sum / 3.0));
    }
    println!("sigma {sigma}  (3-seed means)");
    for (label, none, prob) in rows {
        println!("{label}: none {none:.4}  prob {prob:.4}  (prob-none {:+.2})", 100.0 * (prob - none));
    }
}

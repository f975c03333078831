use softdrop::data::{generate, DatasetSpec};
use softdrop::train::{run_training, SelectionStrategy, TrainConfig};

fn main() {
    let a: Vec<String> = std::env::args().collect();
    let sigma: f64 = a[1].parse().unwrap();
    let clusters: usize = a[2].parse().unwrap();
    let margin: f64 = a[3].parse().unwrap();
    let omega: f64 = a[4].parse().unwrap();
    let (mut none0, mut noneo, mut probo, mut losso) = (0.0, 0.0, 0.0, 0.0);
    for seed in [1u64, 2, 3] {
        let clean_spec = DatasetSpec { within_class_std: sigma, seed, ..DatasetSpec::default() };
        let open_spec = DatasetSpec {
            open_noise_rate: 0.2, open_cluster_count: clusters, open_margin_deg: margin,
            within_class_std: sigma, seed, ..DatasetSpec::default()
        };
        let bc = generate(&clean_spec).unwrap();
        let bo = generate(&open_spec).unwrap();
        let mk = |s| TrainConfig { strategy: s, label_weight: omega, seed, ..TrainConfig::default() };
        none0 += run_training(&bc, &mk(SelectionStrategy::NoSelection)).unwrap().best_test_accuracy;
        noneo += run_training(&bo, &mk(SelectionStrategy::NoSelection)).unwrap().best_test_accuracy;
        probo += run_training(&bo, &mk(SelectionStrategy::GlobalProbCe)).unwrap().best_test_accuracy;
        losso += run_training(&bo, &mk(SelectionStrategy::GlobalLossCe)).unwrap().best_test_accuracy;
    }
    println!(
        "sig {sigma} k {clusters} m {margin} w {omega}: clean-none {:.4} | open-none {:.4} (harm {:+.2}) | open-prob {:.4} (p-n {:+.2}) | open-loss {:.4} (p-l {:+.2})",
        none0 / 3.0, noneo / 3.0, 100.0 * (noneo - none0) / 3.0,
        probo / 3.0, 100.0 * (probo - noneo) / 3.0,
        losso / 3.0, 100.0 * (probo - losso) / 3.0
    );
}

use softdrop::data::{generate, DatasetSpec};
use softdrop::selection::{overlap_rate, DropSchedule, OverlapWindow};
use softdrop::train::{run_training, SelectionStrategy, TrainConfig, TrainOutput};

fn mean_window3_overlap(out: &TrainOutput) -> f64 {
    let sched = DropSchedule::new(out.config.max_drop_rate, out.config.ramp_epochs).unwrap();
    let dropped = out.dropped_by_epoch();
    let (mut total, mut count) = (0.0, 0);
    for t in (2 * out.config.ramp_epochs)..=out.config.epochs {
        if let Ok(o) = overlap_rate(&dropped, OverlapWindow::LastThree, t, &sched, out.n_train) {
            total += o; count += 1;
        }
    }
    total / count as f64
}

fn main() {
    let a: Vec<String> = std::env::args().collect();
    let sigma: f64 = a[1].parse().unwrap();
    let clusters: usize = a[2].parse().unwrap();
    let margin: f64 = a[3].parse().unwrap();
    let hard: f64 = a[4].parse().unwrap();
    let hf: f64 = a[5].parse().unwrap();
    let omega: f64 = a[6].parse().unwrap();
    let seeds = [1u64, 2, 3, 4, 5];
    let strategies = [
        SelectionStrategy::GlobalProbCe, SelectionStrategy::NoSelection,
        SelectionStrategy::GlobalLossCe, SelectionStrategy::MinibatchProbCe,
    ];
    let mut sums = std::collections::BTreeMap::<&str, f64>::new();
    let mut pn_worst = f64::INFINITY;
    let mut pl_worst = f64::INFINITY;
    for &seed in &seeds {
        let spec = DatasetSpec {
            open_noise_rate: 0.2, close_noise_rate: 0.1,
            within_class_std: sigma, open_cluster_count: clusters, open_margin_deg: margin,
            hard_fraction: hard, hard_std_factor: hf, seed,
            ..DatasetSpec::default()
        };
        let b = generate(&spec).unwrap();
        let mut outs = Vec::new();
        for s in strategies {
            outs.push(run_training(&b, &TrainConfig {
                strategy: s, label_weight: omega, seed, ..TrainConfig::default()
            }).unwrap());
        }
        pn_worst = pn_worst.min(outs[0].best_test_accuracy - outs[1].best_test_accuracy);
        pl_worst = pl_worst.min(outs[0].best_test_accuracy - outs[2].best_test_accuracy);
        *sums.entry("prob").or_default() += outs[0].best_test_accuracy;
        *sums.entry("none").or_default() += outs[1].best_test_accuracy;
        *sums.entry("loss").or_default() += outs[2].best_test_accuracy;
        *sums.entry("mb").or_default() += outs[3].best_test_accuracy;
        *sums.entry("prob_tr").or_default() += outs[0].best_train_accuracy;
        *sums.entry("mb_tr").or_default() += outs[3].best_train_accuracy;
        *sums.entry("prob_ov").or_default() += mean_window3_overlap(&outs[0]);
        *sums.entry("mb_ov").or_default() += mean_window3_overlap(&outs[3]);
    }
    let n = seeds.len() as f64;
    let g = |k: &str| sums[k] / n;
    println!(
        "s{sigma} k{clusters} m{margin} h{hard}x{hf} w{omega}: prob {:.4} none {:.4} loss {:.4} | p-n {:+.2} (worst {:+.2}) p-l {:+.2} (worst {:+.2}) | C6 {} {} | C7 {:.3}>{:.3} {}",
        g("prob"), g("none"), g("loss"),
        100.0 * (g("prob") - g("none")), 100.0 * pn_worst,
        100.0 * (g("prob") - g("loss")), 100.0 * pl_worst,
        g("mb_tr") >= g("prob_tr"), g("prob") >= g("mb"),
        g("prob_ov"), g("mb_ov"), g("prob_ov") > g("mb_ov")
    );
}

use softdrop::data::{generate, DatasetSpec};
use softdrop::report::auroc;
use softdrop::selection::{overlap_rate, DropSchedule, OverlapWindow};
use softdrop::train::{run_training, SelectionStrategy, TrainConfig, TrainOutput};

fn auroc_window(out: &TrainOutput, lo: usize, hi: usize) -> f64 {
    let (mut total, mut count) = (0.0, 0);
    for r in &out.records {
        if r.epoch < lo || r.epoch > hi || r.outcome.scores.is_empty() { continue; }
        let pos: Vec<f64> = r.outcome.scores.iter().zip(&out.train_provenance)
            .filter(|(_, p)| p.token() == "open").map(|(s, _)| *s).collect();
        let neg: Vec<f64> = r.outcome.scores.iter().zip(&out.train_provenance)
            .filter(|(_, p)| p.token() != "open").map(|(s, _)| *s).collect();
        total += auroc(&pos, &neg).unwrap();
        count += 1;
    }
    total / count as f64
}

fn mean_window3_overlap(out: &TrainOutput) -> f64 {
    let sched = DropSchedule::new(out.config.max_drop_rate, out.config.ramp_epochs).unwrap();
    let dropped = out.dropped_by_epoch();
    let (mut total, mut count) = (0.0, 0);
    for t in (2 * out.config.ramp_epochs)..=out.config.epochs {
        if let Ok(o) = overlap_rate(&dropped, OverlapWindow::LastThree, t, &sched, out.n_train) {
            total += o;
            count += 1;
        }
    }
    total / count as f64
}

fn main() {
    let a: Vec<String> = std::env::args().collect();
    let sigma: f64 = a.get(1).map_or(0.05, |s| s.parse().unwrap());
    let clusters: usize = a.get(2).map_or(12, |s| s.parse().unwrap());
    let seeds: Vec<u64> = vec![1, 2, 3, 4, 5];

    let base_spec = DatasetSpec { within_class_std: sigma, open_cluster_count: clusters, ..DatasetSpec::default() };
    let strategies = [
        SelectionStrategy::GlobalProbCe,
        SelectionStrategy::NoSelection,
        SelectionStrategy::GlobalLossCe,
        SelectionStrategy::MinibatchProbCe,
    ];

    println!("sigma {sigma} clusters {clusters}");
    let (mut c4_min_auroc, mut c4_viol) = (f64::INFINITY, 0usize);
    let mut sums = std::collections::BTreeMap::<&str, f64>::new();
    for &seed in &seeds {
        // C4: 20% open only
        let spec4 = DatasetSpec { open_noise_rate: 0.2, seed, ..base_spec.clone() };
        let b4 = generate(&spec4).unwrap();
        let prob4 = run_training(&b4, &TrainConfig { seed, ..TrainConfig::default() }).unwrap();
        let au = auroc_window(&prob4, 11, 20);
        c4_min_auroc = c4_min_auroc.min(au);
        for r in &prob4.records {
            if r.epoch > 10 {
                if let (Some(c), Some(o)) = (r.mean_score_clean, r.mean_score_open) {
                    if o <= c { c4_viol += 1; }
                }
            }
        }

        // C5/C6/C7: 20% open + 10% close
        let spec5 = DatasetSpec { open_noise_rate: 0.2, close_noise_rate: 0.1, seed, ..base_spec.clone() };
        let b5 = generate(&spec5).unwrap();
        let mut outs = Vec::new();
        for s in strategies {
            outs.push(run_training(&b5, &TrainConfig { strategy: s, seed, ..TrainConfig::default() }).unwrap());
        }
        let (prob, none, loss, mb) = (&outs[0], &outs[1], &outs[2], &outs[3]);
        *sums.entry("prob_test").or_default() += prob.best_test_accuracy;
        *sums.entry("none_test").or_default() += none.best_test_accuracy;
        *sums.entry("loss_test").or_default() += loss.best_test_accuracy;
        *sums.entry("mb_test").or_default() += mb.best_test_accuracy;
        *sums.entry("prob_train").or_default() += prob.best_train_accuracy;
        *sums.entry("mb_train").or_default() += mb.best_train_accuracy;
        *sums.entry("prob_ov3").or_default() += mean_window3_overlap(prob);
        *sums.entry("mb_ov3").or_default() += mean_window3_overlap(mb);

        // C11: zero noise
        let spec0 = DatasetSpec { seed, ..base_spec.clone() };
        let b0 = generate(&spec0).unwrap();
        let p0 = run_training(&b0, &TrainConfig { seed, ..TrainConfig::default() }).unwrap();
        let n0 = run_training(&b0, &TrainConfig { strategy: SelectionStrategy::NoSelection, seed, ..TrainConfig::default() }).unwrap();
        *sums.entry("clean_prob").or_default() += p0.best_test_accuracy;
        *sums.entry("clean_none").or_default() += n0.best_test_accuracy;
        eprint!(".");
    }
    eprintln!();
    let n = seeds.len() as f64;
    let g = |k: &str| sums[k] / n;
    println!("C4: min AUROC[11-20] {:.3} (need >=0.85), open<=clean violations {}", c4_min_auroc, c4_viol);
    println!("C5: prob {:.4} none {:.4} loss {:.4} | prob-none {:+.2} pts (need >=3) | prob-loss {:+.2} pts (need >=0)",
        g("prob_test"), g("none_test"), g("loss_test"),
        100.0*(g("prob_test")-g("none_test")), 100.0*(g("prob_test")-g("loss_test")));
    println!("C6: train mb {:.4} >= prob {:.4}? {} | test prob {:.4} >= mb {:.4}? {}",
        g("mb_train"), g("prob_train"), g("mb_train") >= g("prob_train"),
        g("prob_test"), g("mb_test"), g("prob_test") >= g("mb_test"));
    println!("C7: window3 overlap prob {:.3} > mb {:.3}? {}", g("prob_ov3"), g("mb_ov3"), g("prob_ov3") > g("mb_ov3"));
    println!("C11: zero-noise prob {:.4} vs none {:.4} (|diff| {:.2} pts, need <=2)",
        g("clean_prob"), g("clean_none"), 100.0*(g("clean_prob")-g("clean_none")).abs());
}

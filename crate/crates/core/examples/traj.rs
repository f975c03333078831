use softdrop::data::{generate, DatasetSpec};
use softdrop::train::{run_training, SelectionStrategy, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).map_or(1, |s| s.parse().unwrap());
    let open: f64 = args.get(2).map_or(0.2, |s| s.parse().unwrap());
    let close: f64 = args.get(3).map_or(0.0, |s| s.parse().unwrap());
    let strategy = match args.get(4).map(String::as_str) {
        Some("none") => SelectionStrategy::NoSelection,
        Some("loss") => SelectionStrategy::GlobalLossCe,
        Some("mb") => SelectionStrategy::MinibatchProbCe,
        _ => SelectionStrategy::GlobalProbCe,
    };
    let spec = DatasetSpec {
        open_noise_rate: open,
        close_noise_rate: close,
        seed,
        ..DatasetSpec::default()
    };
    let bundle = generate(&spec).unwrap();
    let config = TrainConfig {
        strategy,
        seed,
        ..TrainConfig::default()
    };
    let t0 = std::time::Instant::now();
    let out = run_training(&bundle, &config).unwrap();
    eprintln!("run took {:?}", t0.elapsed());
    println!("epoch  lr      r      c_clean  c_close  c_open  train  val    test   drop_open_recall");
    for r in &out.records {
        if r.epoch % 4 != 0 && r.epoch > 12 && r.epoch != 1 {
            continue;
        }
        let recall = if r.outcome.dropped.is_empty() {
            "-".to_string()
        } else {
            let open_dropped = r
                .outcome
                .dropped
                .iter()
                .filter(|&&i| out.train_provenance[i].token() == "open")
                .count();
            let open_total = out
                .train_provenance
                .iter()
                .filter(|p| p.token() == "open")
                .count();
            if open_total == 0 { "-".into() } else { format!("{:.3}", open_dropped as f64 / open_total as f64) }
        };
        println!(
            "{:>3}  {:.4}  {:.3}  {:>7}  {:>7}  {:>7}  {:.3}  {:.3}  {:.3}  {}",
            r.epoch,
            r.learning_rate,
            r.drop_rate,
            r.mean_score_clean.map_or("-".into(), |v| format!("{v:.3}")),
            r.mean_score_close.map_or("-".into(), |v| format!("{v:.3}")),
            r.mean_score_open.map_or("-".into(), |v| format!("{v:.3}")),
            r.train_accuracy,
            r.val_accuracy,
            r.test_accuracy,
            recall
        );
    }
    println!(
        "best epoch {} val {:.4}  | best test {:.4} train {:.4} | final val {:.4} test {:.4}",
        out.best_epoch, out.best_val_accuracy, out.best_test_accuracy, out.best_train_accuracy,
        out.final_val_accuracy, out.final_test_accuracy
    );
}

//! Figure-data generation from a finished run directory: accuracy and overlap
//! trajectories, per-provenance score means, noise-identification quality
//! (precision/recall/AUROC against provenance ground truth), and the
//! per-mini-batch noise-rate histogram.
//!
//! Everything is emitted as CSV so any plotting stack can consume it.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::data::{histogram_unit_interval, shuffled_partition};
use crate::error::{Error, Result};
use crate::runfiles::{
    read_epochs_csv, read_selection_csv, read_summary_json, EpochRow, SelectionRow, EPOCHS_CSV,
    SELECTION_CSV, SUMMARY_JSON,
};
use crate::selection::{overlap_rate, DropSchedule, OverlapWindow};

pub const ACCURACY_CSV: &str = "accuracy_vs_epoch.csv";
pub const OVERLAP_CSV: &str = "overlap_vs_epoch.csv";
pub const SCORES_CSV: &str = "scores_by_provenance.csv";
pub const NOISE_ID_CSV: &str = "noise_id_quality.csv";
pub const BATCH_HIST_CSV: &str = "batch_noise_hist.csv";

/// Histogram bin count for the batch noise-rate figure.
pub const HIST_BINS: usize = 24;

/// Area under the ROC curve for separating `positive` from `negative` scores,
/// computed rank-based (Mann-Whitney U) with ties counted half.
pub fn auroc(positive: &[f64], negative: &[f64]) -> Result<f64> {
    if positive.is_empty() || negative.is_empty() {
        return Err(Error::contract("AUROC needs both positive and negative scores"));
    }
    if positive.iter().chain(negative).any(|s| !s.is_finite()) {
        return Err(Error::contract("AUROC scores must be finite"));
    }
    let mut all: Vec<(f64, bool)> = positive
        .iter()
        .map(|&s| (s, true))
        .chain(negative.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite scores"));

    // Average ranks over tie groups, then the U statistic.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i + 1;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for item in &all[i..j] {
            if item.1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let np = positive.len() as f64;
    let nn = negative.len() as f64;
    let u = rank_sum_pos - np * (np + 1.0) / 2.0;
    Ok(u / (np * nn))
}

/// Precision and recall of "dropped" as a detector of open-set noise.
/// Returns `(precision, recall)`; precision is `None` when nothing was
/// dropped, recall is `None` when there is no open noise.
pub fn open_noise_precision_recall(
    dropped_open: usize,
    dropped_total: usize,
    open_total: usize,
) -> (Option<f64>, Option<f64>) {
    let precision = (dropped_total > 0).then(|| dropped_open as f64 / dropped_total as f64);
    let recall = (open_total > 0).then(|| dropped_open as f64 / open_total as f64);
    (precision, recall)
}

fn opt_cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Per-epoch selection rows grouped and ordered by epoch.
fn rows_by_epoch(rows: &[SelectionRow]) -> BTreeMap<usize, Vec<&SelectionRow>> {
    let mut map: BTreeMap<usize, Vec<&SelectionRow>> = BTreeMap::new();
    for row in rows {
        map.entry(row.epoch).or_default().push(row);
    }
    map
}

fn write_accuracy_csv(rows: &[EpochRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "train_accuracy", "val_accuracy", "test_accuracy"])?;
    for r in rows {
        w.write_record(&[
            r.epoch.to_string(),
            r.train_accuracy.to_string(),
            r.val_accuracy.to_string(),
            r.test_accuracy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_overlap_csv(
    rows: &[EpochRow],
    dropped: &BTreeMap<usize, BTreeSet<usize>>,
    sched: &DropSchedule,
    n_train: usize,
    path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "overlap_all_epochs", "overlap_window3"])?;
    for r in rows {
        // Overlap is recorded past the ramp; cells stay empty where the
        // window is undefined or nothing was ever dropped.
        let (all, win3) = if r.epoch > sched.ramp_epochs {
            (
                overlap_rate(dropped, OverlapWindow::AllEpochs, r.epoch, sched, n_train).ok(),
                overlap_rate(dropped, OverlapWindow::LastThree, r.epoch, sched, n_train).ok(),
            )
        } else {
            (None, None)
        };
        w.write_record(&[r.epoch.to_string(), opt_cell(all), opt_cell(win3)])?;
    }
    w.flush()?;
    Ok(())
}

fn write_scores_csv(
    rows: &[EpochRow],
    by_epoch: &BTreeMap<usize, Vec<&SelectionRow>>,
    path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "mean_score_clean", "mean_score_close", "mean_score_open"])?;
    for r in rows {
        let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
        if let Some(epoch_rows) = by_epoch.get(&r.epoch) {
            for row in epoch_rows {
                if let Some(score) = row.score {
                    let e = sums.entry(row.provenance.as_str()).or_insert((0.0, 0));
                    e.0 += score;
                    e.1 += 1;
                }
            }
        }
        let mean = |key: &str| {
            sums.get(key)
                .filter(|(_, c)| *c > 0)
                .map(|(s, c)| s / *c as f64)
        };
        w.write_record(&[
            r.epoch.to_string(),
            opt_cell(mean("clean")),
            opt_cell(mean("close")),
            opt_cell(mean("open")),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_noise_id_csv(
    rows: &[EpochRow],
    by_epoch: &BTreeMap<usize, Vec<&SelectionRow>>,
    path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "precision", "recall", "auroc"])?;
    for r in rows {
        let mut precision = None;
        let mut recall = None;
        let mut roc = None;
        if let Some(epoch_rows) = by_epoch.get(&r.epoch) {
            let open_total = epoch_rows.iter().filter(|x| x.provenance == "open").count();
            let dropped: Vec<_> = epoch_rows.iter().filter(|x| !x.kept).collect();
            let dropped_open = dropped.iter().filter(|x| x.provenance == "open").count();
            if !dropped.is_empty() {
                let (p, rec) =
                    open_noise_precision_recall(dropped_open, dropped.len(), open_total);
                precision = p;
                recall = rec;
            }
            let pos: Vec<f64> = epoch_rows
                .iter()
                .filter(|x| x.provenance == "open")
                .filter_map(|x| x.score)
                .collect();
            let neg: Vec<f64> = epoch_rows
                .iter()
                .filter(|x| x.provenance != "open")
                .filter_map(|x| x.score)
                .collect();
            if !pos.is_empty() && !neg.is_empty() {
                roc = Some(auroc(&pos, &neg)?);
            }
        }
        w.write_record(&[
            r.epoch.to_string(),
            opt_cell(precision),
            opt_cell(recall),
            opt_cell(roc),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_batch_hist_csv(
    noise_flags: &[bool],
    epochs: usize,
    batch_size: usize,
    seed: u64,
    path: &Path,
) -> Result<()> {
    // Seeded shuffles of the realized noise composition, one per epoch,
    // counting the noise rate of every batch.
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = noise_flags.len();
    let mut rates = Vec::new();
    for _ in 0..epochs {
        for batch in shuffled_partition(n, batch_size, &mut rng) {
            let noisy = batch.iter().filter(|&&i| noise_flags[i]).count();
            rates.push(noisy as f64 / batch.len() as f64);
        }
    }
    let hist = histogram_unit_interval(&rates, HIST_BINS);
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_low", "bin_high", "count"])?;
    for (i, count) in hist.iter().enumerate() {
        w.write_record(&[
            (i as f64 / HIST_BINS as f64).to_string(),
            ((i + 1) as f64 / HIST_BINS as f64).to_string(),
            count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `epochs.csv`, `selection.csv`, and `summary.json` from `run_dir` and
/// writes the five figure-data CSVs into `out_dir`. Returns the created paths.
///
/// The per-sample log is required; callers should surface its absence with a
/// hint to re-run training with per-sample logging enabled.
pub fn write_report(run_dir: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let epochs_path = run_dir.join(EPOCHS_CSV);
    let selection_path = run_dir.join(SELECTION_CSV);
    if !selection_path.exists() {
        return Err(Error::Config(format!(
            "missing {}: re-run training with the per-sample log enabled",
            selection_path.display()
        )));
    }
    let rows = read_epochs_csv(&epochs_path)?;
    let selection = read_selection_csv(&selection_path)?;
    let summary = read_summary_json(&run_dir.join(SUMMARY_JSON))?;
    let sched = DropSchedule::new(summary.config.max_drop_rate, summary.config.ramp_epochs)?;

    let by_epoch = rows_by_epoch(&selection);
    let mut dropped: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (epoch, epoch_rows) in &by_epoch {
        // Positional index within the epoch matches the engine's sample index.
        let set: BTreeSet<usize> = epoch_rows
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.kept)
            .map(|(i, _)| i)
            .collect();
        if !set.is_empty() {
            dropped.insert(*epoch, set);
        }
    }

    // Noise flags in stable positional order, from any epoch's rows.
    let noise_flags: Vec<bool> = by_epoch
        .values()
        .next()
        .map(|rows| rows.iter().map(|r| r.provenance != "clean").collect())
        .unwrap_or_default();
    if noise_flags.len() != summary.n_train {
        return Err(Error::contract(
            "selection.csv does not cover the training set recorded in summary.json",
        ));
    }

    fs::create_dir_all(out_dir)?;
    let paths = [
        out_dir.join(ACCURACY_CSV),
        out_dir.join(OVERLAP_CSV),
        out_dir.join(SCORES_CSV),
        out_dir.join(NOISE_ID_CSV),
        out_dir.join(BATCH_HIST_CSV),
    ];
    write_accuracy_csv(&rows, &paths[0])?;
    write_overlap_csv(&rows, &dropped, &sched, summary.n_train, &paths[1])?;
    write_scores_csv(&rows, &by_epoch, &paths[2])?;
    write_noise_id_csv(&rows, &by_epoch, &paths[3])?;
    write_batch_hist_csv(
        &noise_flags,
        summary.config.epochs,
        summary.config.batch_size,
        summary.seed,
        &paths[4],
    )?;
    Ok(paths.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    // O(n^2) reference: fraction of (positive, negative) pairs ranked
    // correctly, ties worth half.
    fn pairwise_auroc(pos: &[f64], neg: &[f64]) -> f64 {
        let mut total = 0.0;
        for &p in pos {
            for &n in neg {
                total += if p > n {
                    1.0
                } else if p == n {
                    0.5
                } else {
                    0.0
                };
            }
        }
        total / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn perfect_detector_scores_one() {
        // The score IS the ground truth.
        let auc = auroc(&[1.0, 1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert_eq!(auc, 1.0);
    }

    #[test]
    fn random_equal_scores_give_half() {
        let auc = auroc(&[0.5, 0.5], &[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(auc, 0.5);
    }

    #[test]
    fn inverted_detector_scores_zero() {
        let auc = auroc(&[0.0, 0.1], &[0.9, 1.0]).unwrap();
        assert_eq!(auc, 0.0);
    }

    #[test]
    fn auroc_matches_pairwise_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(55);
        for _ in 0..30 {
            let np = rng.random_range(1..40);
            let nn = rng.random_range(1..40);
            // Quantized scores force plenty of ties.
            let pos: Vec<f64> =
                (0..np).map(|_| (rng.random_range(0..10) as f64) / 5.0 + 0.4).collect();
            let neg: Vec<f64> = (0..nn).map(|_| (rng.random_range(0..10) as f64) / 5.0).collect();
            let fast = auroc(&pos, &neg).unwrap();
            let slow = pairwise_auroc(&pos, &neg);
            assert!((fast - slow).abs() < 1e-9, "fast {fast} slow {slow}");
        }
    }

    #[test]
    fn auroc_requires_both_classes() {
        assert!(auroc(&[], &[1.0]).is_err());
        assert!(auroc(&[1.0], &[]).is_err());
    }

    #[test]
    fn precision_recall_edge_cases() {
        assert_eq!(open_noise_precision_recall(3, 4, 6), (Some(0.75), Some(0.5)));
        assert_eq!(open_noise_precision_recall(0, 0, 6).0, None);
        assert_eq!(open_noise_precision_recall(0, 4, 0).1, None);
    }
}

//! On-disk formats for a training run directory: `epochs.csv` (one row per
//! epoch), the opt-in `selection.csv` (one row per sample per epoch),
//! `summary.json`, and `best_model.json`. Writers and readers live together
//! so the schemas cannot drift apart.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelCheckpoint;
use crate::train::{EpochRecord, SelectionStrategy, TrainConfig, TrainOutput};

pub const EPOCHS_CSV: &str = "epochs.csv";
pub const SELECTION_CSV: &str = "selection.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const BEST_MODEL_JSON: &str = "best_model.json";

fn opt_cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn parse_opt_cell(s: &str, what: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::contract(format!("invalid {what}: {s:?}")))
}

fn parse_cell<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse::<T>()
        .map_err(|_| Error::contract(format!("invalid {what}: {s:?}")))
}

const EPOCH_HEADER: [&str; 12] = [
    "epoch",
    "learning_rate",
    "drop_rate",
    "kept",
    "dropped",
    "mean_train_loss",
    "train_accuracy",
    "val_accuracy",
    "test_accuracy",
    "mean_score_clean",
    "mean_score_close",
    "mean_score_open",
];

pub fn write_epochs_csv(records: &[EpochRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(EPOCH_HEADER)?;
    for r in records {
        w.write_record(&[
            r.epoch.to_string(),
            r.learning_rate.to_string(),
            r.drop_rate.to_string(),
            r.outcome.kept.len().to_string(),
            r.outcome.dropped.len().to_string(),
            r.mean_train_loss.to_string(),
            r.train_accuracy.to_string(),
            r.val_accuracy.to_string(),
            r.test_accuracy.to_string(),
            opt_cell(r.mean_score_clean),
            opt_cell(r.mean_score_close),
            opt_cell(r.mean_score_open),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One parsed row of `epochs.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub learning_rate: f64,
    pub drop_rate: f64,
    pub kept: usize,
    pub dropped: usize,
    pub mean_train_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    pub mean_score_clean: Option<f64>,
    pub mean_score_close: Option<f64>,
    pub mean_score_open: Option<f64>,
}

pub fn read_epochs_csv(path: &Path) -> Result<Vec<EpochRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() != EPOCH_HEADER.len() {
            return Err(Error::contract("epochs.csv row has wrong arity"));
        }
        rows.push(EpochRow {
            epoch: parse_cell(&record[0], "epoch")?,
            learning_rate: parse_cell(&record[1], "learning_rate")?,
            drop_rate: parse_cell(&record[2], "drop_rate")?,
            kept: parse_cell(&record[3], "kept")?,
            dropped: parse_cell(&record[4], "dropped")?,
            mean_train_loss: parse_cell(&record[5], "mean_train_loss")?,
            train_accuracy: parse_cell(&record[6], "train_accuracy")?,
            val_accuracy: parse_cell(&record[7], "val_accuracy")?,
            test_accuracy: parse_cell(&record[8], "test_accuracy")?,
            mean_score_clean: parse_opt_cell(&record[9], "mean_score_clean")?,
            mean_score_close: parse_opt_cell(&record[10], "mean_score_close")?,
            mean_score_open: parse_opt_cell(&record[11], "mean_score_open")?,
        });
    }
    Ok(rows)
}

/// Per-sample selection log: epoch, stable sample id, the selection score
/// (empty while undefined), kept flag, and the ground-truth provenance tag.
pub fn write_selection_csv(output: &TrainOutput, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "sample_id", "score", "kept", "true_provenance"])?;
    let n = output.n_train;
    for r in &output.records {
        let mut kept = vec![false; n];
        for &i in &r.outcome.kept {
            kept[i] = true;
        }
        let scored = !r.outcome.scores.is_empty();
        for i in 0..n {
            let score = if scored {
                r.outcome.scores[i].to_string()
            } else {
                String::new()
            };
            w.write_record(&[
                r.epoch.to_string(),
                output.train_ids[i].to_string(),
                score,
                if kept[i] { "1" } else { "0" }.to_string(),
                output.train_provenance[i].token().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One parsed row of `selection.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub epoch: usize,
    pub sample_id: usize,
    pub score: Option<f64>,
    pub kept: bool,
    pub provenance: String,
}

pub fn read_selection_csv(path: &Path) -> Result<Vec<SelectionRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() != 5 {
            return Err(Error::contract("selection.csv row has wrong arity"));
        }
        rows.push(SelectionRow {
            epoch: parse_cell(&record[0], "epoch")?,
            sample_id: parse_cell(&record[1], "sample_id")?,
            score: parse_opt_cell(&record[2], "score")?,
            kept: &record[3] == "1",
            provenance: record[4].to_string(),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceCounts {
    pub clean: usize,
    pub close: usize,
    pub open: usize,
}

/// Final metrics plus a full config echo; enough to reproduce the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub strategy: SelectionStrategy,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub provenance_counts: ProvenanceCounts,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub best_test_accuracy: f64,
    pub best_train_accuracy: f64,
    pub final_val_accuracy: f64,
    pub final_test_accuracy: f64,
    pub config: TrainConfig,
}

impl RunSummary {
    pub fn from_output(output: &TrainOutput) -> Self {
        let mut counts = ProvenanceCounts {
            clean: 0,
            close: 0,
            open: 0,
        };
        for p in &output.train_provenance {
            match p.token() {
                "clean" => counts.clean += 1,
                "close" => counts.close += 1,
                _ => counts.open += 1,
            }
        }
        RunSummary {
            seed: output.config.seed,
            strategy: output.config.strategy,
            n_train: output.n_train,
            n_val: output.n_val,
            n_test: output.n_test,
            provenance_counts: counts,
            best_epoch: output.best_epoch,
            best_val_accuracy: output.best_val_accuracy,
            best_test_accuracy: output.best_test_accuracy,
            best_train_accuracy: output.best_train_accuracy,
            final_val_accuracy: output.final_val_accuracy,
            final_test_accuracy: output.final_test_accuracy,
            config: output.config.clone(),
        }
    }
}

pub fn write_summary_json(summary: &RunSummary, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(())
}

pub fn read_summary_json(path: &Path) -> Result<RunSummary> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_checkpoint_json(ckpt: &ModelCheckpoint, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string(ckpt)? + "\n")?;
    Ok(())
}

pub fn read_checkpoint_json(path: &Path) -> Result<ModelCheckpoint> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Writes a run's artifacts into `dir` and returns the created paths.
pub fn write_run_artifacts(
    output: &TrainOutput,
    dir: &Path,
    per_sample_log: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let epochs = dir.join(EPOCHS_CSV);
    write_epochs_csv(&output.records, &epochs)?;
    written.push(epochs);

    if per_sample_log {
        let selection = dir.join(SELECTION_CSV);
        write_selection_csv(output, &selection)?;
        written.push(selection);
    }

    let best = dir.join(BEST_MODEL_JSON);
    write_checkpoint_json(&output.best_checkpoint, &best)?;
    written.push(best);

    let summary = dir.join(SUMMARY_JSON);
    write_summary_json(&RunSummary::from_output(output), &summary)?;
    written.push(summary);

    Ok(written)
}

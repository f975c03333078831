//! Training engine: per-epoch full-dataset probability pass, instability
//! scoring, ramped selection, mini-batch updates on the kept set, and
//! validation-based model selection. Also runs the baseline pipelines
//! (no selection, loss-score selection, per-mini-batch selection) for
//! comparison.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::data::{provenance_group_means, Dataset, DatasetBundle, Provenance};
use crate::error::{Error, Result};
use crate::loss::{final_loss, SmoothingConfig};
use crate::model::{Model, ModelCheckpoint};
use crate::optim::OptimizerState;
use crate::selection::{
    select_by_loss, select_global, select_minibatch, DropSchedule, ProbabilityHistory,
    SelectionOutcome, EPS_LOG,
};
use crate::tensor::{argmax, ProbVector};

/// Which per-epoch selector feeds the training step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionStrategy {
    /// Whole-set selection on prediction-instability scores.
    #[serde(rename = "global-prob-ce")]
    GlobalProbCe,
    /// Whole-set selection on current-epoch loss (small-loss baseline).
    #[serde(rename = "global-loss-ce")]
    GlobalLossCe,
    /// Per-mini-batch selection on instability scores (fixed per-batch budget).
    #[serde(rename = "minibatch-prob-ce")]
    MinibatchProbCe,
    /// Train on everything (no-correction baseline).
    #[serde(rename = "none")]
    NoSelection,
}

impl SelectionStrategy {
    pub fn token(&self) -> &'static str {
        match self {
            SelectionStrategy::GlobalProbCe => "global-prob-ce",
            SelectionStrategy::GlobalLossCe => "global-loss-ce",
            SelectionStrategy::MinibatchProbCe => "minibatch-prob-ce",
            SelectionStrategy::NoSelection => "none",
        }
    }
}

/// Everything one training run needs. `{}` is a valid JSON config; unknown
/// keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub strategy: SelectionStrategy,
    /// Maximum drop rate tau.
    pub max_drop_rate: f64,
    /// Epochs until the drop rate saturates.
    pub ramp_epochs: usize,
    /// Label-smoothing weight on the labeled class.
    pub label_weight: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub momentum: f64,
    pub warmup_epochs: usize,
    /// Fraction of the training set held out when the bundle has no
    /// validation split. Held-out samples get no gradients and no scores.
    pub validation_fraction: f64,
    /// Encoder hidden width; `null` means a purely affine encoder.
    pub hidden_dim: Option<usize>,
    /// Feature dimension fed to the cosine head.
    pub embed_dim: usize,
    /// Cosine logit scale.
    pub scale: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            strategy: SelectionStrategy::GlobalProbCe,
            max_drop_rate: 0.25,
            ramp_epochs: 10,
            label_weight: 0.5,
            epochs: 80,
            batch_size: 32,
            base_lr: 0.01,
            momentum: 0.9,
            warmup_epochs: 5,
            validation_fraction: 1.0 / 6.0,
            hidden_dim: Some(32),
            embed_dim: 16,
            scale: 30.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, n_train: usize) -> Result<()> {
        DropSchedule::new(self.max_drop_rate, self.ramp_epochs)?;
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if self.epochs < self.ramp_epochs {
            return Err(Error::config("total epochs must cover the drop ramp"));
        }
        if self.batch_size == 0 || self.batch_size > n_train {
            return Err(Error::config(format!(
                "batch size {} invalid for {} training samples",
                self.batch_size, n_train
            )));
        }
        if !(0.0..=0.5).contains(&self.validation_fraction) {
            return Err(Error::config("validation fraction must lie in [0, 0.5]"));
        }
        if !(self.label_weight > 0.0 && self.label_weight <= 1.0) {
            return Err(Error::config("label weight must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("momentum must lie in [0, 1)"));
        }
        if !(self.base_lr > 0.0) {
            return Err(Error::config("base learning rate must be positive"));
        }
        if self.embed_dim == 0 {
            return Err(Error::config("embedding dimension must be positive"));
        }
        if !(self.scale > 0.0) {
            return Err(Error::config("scale must be positive"));
        }
        Ok(())
    }

    pub fn schedule(&self) -> DropSchedule {
        DropSchedule {
            max_rate: self.max_drop_rate,
            ramp_epochs: self.ramp_epochs,
        }
    }
}

/// One row of the per-epoch log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Drop rate actually applied (0 while selection is off).
    pub drop_rate: f64,
    pub outcome: SelectionOutcome,
    pub selection_active: bool,
    /// Mean smoothed loss over the samples that received gradients.
    pub mean_train_loss: f64,
    /// Assigned-label accuracy on the full training set, measured on the
    /// epoch-start parameters during the probability pass.
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    /// Mean selection score per provenance group, when scores exist.
    pub mean_score_clean: Option<f64>,
    pub mean_score_close: Option<f64>,
    pub mean_score_open: Option<f64>,
}

/// A finished training run.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub config: TrainConfig,
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub best_checkpoint: ModelCheckpoint,
    pub final_model: Model,
    /// Best-checkpoint accuracy on the full (noisy) training set.
    pub best_train_accuracy: f64,
    /// Best-checkpoint accuracy on the test set.
    pub best_test_accuracy: f64,
    pub final_val_accuracy: f64,
    pub final_test_accuracy: f64,
    /// Provenance tags of the effective training set, index-aligned with
    /// selection outcomes. Diagnostics only.
    pub train_provenance: Vec<Provenance>,
    /// Stable sample ids of the effective training set.
    pub train_ids: Vec<usize>,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
}

impl TrainOutput {
    /// Dropped index sets per selection-active epoch, for overlap analysis.
    pub fn dropped_by_epoch(&self) -> BTreeMap<usize, BTreeSet<usize>> {
        self.records
            .iter()
            .filter(|r| r.selection_active)
            .map(|r| (r.epoch, r.outcome.dropped.iter().copied().collect()))
            .collect()
    }
}

/// Accuracy plus per-sample prediction details.
#[derive(Debug, Clone)]
pub struct EvalResult {
    pub accuracy: f64,
    pub probabilities: Vec<ProbVector>,
    pub predictions: Vec<usize>,
}

/// Assigned-label accuracy of argmax predictions, with the per-sample
/// probability distributions that produced them.
pub fn evaluate(model: &Model, dataset: &Dataset) -> Result<EvalResult> {
    if dataset.is_empty() {
        return Err(Error::contract("cannot evaluate on an empty dataset"));
    }
    let mut probabilities = Vec::with_capacity(dataset.len());
    let mut predictions = Vec::with_capacity(dataset.len());
    let mut correct = 0usize;
    for sample in &dataset.samples {
        let logits = model.forward(&sample.features)?;
        let probs = crate::tensor::softmax(&logits)?;
        let pred = argmax(&logits);
        if pred == sample.label {
            correct += 1;
        }
        probabilities.push(probs);
        predictions.push(pred);
    }
    Ok(EvalResult {
        accuracy: correct as f64 / dataset.len() as f64,
        probabilities,
        predictions,
    })
}

struct InferencePass {
    probs: Vec<ProbVector>,
    /// Per-sample cross-entropy against the assigned label.
    losses: Vec<f64>,
    accuracy: f64,
}

fn inference_pass(model: &Model, dataset: &Dataset) -> Result<InferencePass> {
    let eval = evaluate(model, dataset)?;
    let losses = eval
        .probabilities
        .iter()
        .zip(&dataset.samples)
        .map(|(p, s)| -p.values()[s.label].max(EPS_LOG).ln())
        .collect();
    Ok(InferencePass {
        probs: eval.probabilities,
        losses,
        accuracy: eval.accuracy,
    })
}

fn subset(dataset: &Dataset, indices: &[usize]) -> Dataset {
    Dataset {
        samples: indices.iter().map(|&i| dataset.samples[i].clone()).collect(),
        classes: dataset.classes,
        feature_dim: dataset.feature_dim,
    }
}

/// Runs the full training loop on the bundle.
///
/// Each epoch: refresh probabilities for every training sample (dropped ones
/// included), score instability once two snapshots exist, update the drop
/// rate, select the kept set (everything during the first two epochs), take
/// mini-batch gradient steps on the kept set, then evaluate and retain the
/// best-validation checkpoint.
pub fn run_training(bundle: &DatasetBundle, config: &TrainConfig) -> Result<TrainOutput> {
    config.validate(bundle.train.len())?;
    if bundle.train.is_empty() {
        return Err(Error::contract("training set is empty"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut model = Model::init(
        bundle.train.feature_dim,
        config.hidden_dim,
        config.embed_dim,
        bundle.train.classes,
        config.scale,
        &mut rng,
    )?;

    // Validation: prefer the bundle's clean split; otherwise hold out a
    // fraction of the (noisy) training set.
    let (train_ds, val_ds) = if !bundle.validation.is_empty() {
        (bundle.train.clone(), bundle.validation.clone())
    } else {
        let n = bundle.train.len();
        let n_val = (config.validation_fraction * n as f64).round() as usize;
        if n_val == 0 {
            return Err(Error::config(
                "no validation data: bundle has none and the hold-out fraction rounds to zero",
            ));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let (val_idx, train_idx) = order.split_at(n_val);
        let mut val_idx = val_idx.to_vec();
        let mut train_idx = train_idx.to_vec();
        val_idx.sort_unstable();
        train_idx.sort_unstable();
        (subset(&bundle.train, &train_idx), subset(&bundle.train, &val_idx))
    };
    if bundle.test.is_empty() {
        return Err(Error::contract("test set is empty"));
    }
    config.validate(train_ds.len())?;

    let n = train_ds.len();
    let sched = config.schedule();
    let smoothing = SmoothingConfig::new(config.label_weight, train_ds.classes)?;
    let mut optimizer = OptimizerState::new(
        &model,
        config.momentum,
        config.base_lr,
        config.warmup_epochs,
        config.epochs,
    )?;
    let mut history = ProbabilityHistory::new(n);
    let provenance: Vec<Provenance> = train_ds.samples.iter().map(|s| s.provenance).collect();
    let train_ids: Vec<usize> = train_ds.samples.iter().map(|s| s.id).collect();

    let mut records: Vec<EpochRecord> = Vec::with_capacity(config.epochs);
    let mut best_epoch = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    let mut best_checkpoint: Option<ModelCheckpoint> = None;

    let diverged = |reason: String, best: &Option<ModelCheckpoint>| Error::Diverged {
        reason,
        checkpoint: best.clone().map(Box::new),
    };

    for epoch in 1..=config.epochs {
        // (a) Probability pass on the epoch-start parameters, before any of
        // this epoch's updates, so scores compare two settled states.
        let pass = inference_pass(&model, &train_ds)?;

        // (b) Instability scores need the two previous snapshots (epoch > 2).
        let instability = if history.ready() {
            Some(history.scores()?)
        } else {
            None
        };

        // (c) Scheduled drop rate.
        let rate = sched.rate_at(epoch);

        // The mini-batch baseline partitions the full set up front and both
        // selects and trains within those batches; global strategies select
        // first and batch the kept set afterwards.
        let mut minibatch_partition: Option<Vec<Vec<usize>>> = None;

        // (d) Selection. The first two epochs always keep everything.
        let selection_possible = match config.strategy {
            SelectionStrategy::NoSelection => false,
            SelectionStrategy::GlobalProbCe | SelectionStrategy::MinibatchProbCe => {
                instability.is_some()
            }
            SelectionStrategy::GlobalLossCe => epoch > 2,
        };
        let mut outcome = if selection_possible {
            match config.strategy {
                SelectionStrategy::GlobalProbCe => {
                    select_global(instability.as_ref().expect("scores ready"), rate)?
                }
                SelectionStrategy::GlobalLossCe => select_by_loss(&pass.losses, rate)?,
                SelectionStrategy::MinibatchProbCe => {
                    let mut order: Vec<usize> = (0..n).collect();
                    order.shuffle(&mut rng);
                    let partition: Vec<Vec<usize>> = order
                        .chunks(config.batch_size)
                        .map(|c| c.to_vec())
                        .collect();
                    let out = select_minibatch(
                        instability.as_ref().expect("scores ready"),
                        rate,
                        &partition,
                    )?;
                    minibatch_partition = Some(partition);
                    out
                }
                SelectionStrategy::NoSelection => unreachable!(),
            }
        } else {
            // Diagnostics still get whatever scores exist.
            let scores = match config.strategy {
                SelectionStrategy::GlobalLossCe => pass.losses.clone(),
                _ => instability.clone().unwrap_or_default(),
            };
            SelectionOutcome::keep_all(n, scores)
        };
        outcome.epoch = epoch;
        let selection_active = selection_possible;

        if selection_active
            && matches!(
                config.strategy,
                SelectionStrategy::GlobalProbCe | SelectionStrategy::GlobalLossCe
            )
        {
            debug_assert!(
                match (outcome.mean_dropped_score(), outcome.mean_kept_score()) {
                    (Some(d), Some(k)) => d >= k,
                    _ => true,
                },
                "global selection must drop higher-scoring samples"
            );
        }

        // Snapshot this epoch's probabilities after scoring, keeping two.
        history.push(pass.probs)?;

        // (e) Mini-batch updates on the kept set.
        let lr = optimizer.lr_at_epoch(epoch)?;
        let batches: Vec<Vec<usize>> = match &minibatch_partition {
            Some(partition) => {
                let kept: HashSet<usize> = outcome.kept.iter().copied().collect();
                partition
                    .iter()
                    .map(|batch| {
                        batch.iter().copied().filter(|i| kept.contains(i)).collect()
                    })
                    .filter(|b: &Vec<usize>| !b.is_empty())
                    .collect()
            }
            None => {
                let mut kept = outcome.kept.clone();
                kept.shuffle(&mut rng);
                kept.chunks(config.batch_size).map(|c| c.to_vec()).collect()
            }
        };

        let mut loss_sum = 0.0;
        let mut trained = 0usize;
        for batch in &batches {
            let samples: Vec<(&[f64], usize)> = batch
                .iter()
                .map(|&i| {
                    let s = &train_ds.samples[i];
                    (s.features.as_slice(), s.label)
                })
                .collect();
            let (loss, grads) = final_loss(&model, &samples, &smoothing)?;
            if !loss.is_finite() {
                return Err(diverged(
                    format!("non-finite loss at epoch {epoch}"),
                    &best_checkpoint,
                ));
            }
            optimizer.step(&mut model, &grads, lr).map_err(|e| match e {
                Error::Diverged { reason, .. } => diverged(
                    format!("{reason} at epoch {epoch}"),
                    &best_checkpoint,
                ),
                other => other,
            })?;
            loss_sum += loss * batch.len() as f64;
            trained += batch.len();
        }
        let mean_train_loss = if trained > 0 { loss_sum / trained as f64 } else { 0.0 };

        // (f) Evaluate and keep the best-validation checkpoint.
        let val_accuracy = evaluate(&model, &val_ds)?.accuracy;
        let test_accuracy = evaluate(&model, &bundle.test)?.accuracy;
        if val_accuracy > best_val {
            best_val = val_accuracy;
            best_epoch = epoch;
            best_checkpoint = Some(model.to_checkpoint(config.seed, epoch));
        }

        let group_means = if outcome.scores.is_empty() {
            BTreeMap::new()
        } else {
            provenance_group_means(&outcome.scores, &provenance)
        };
        let flat = |key: &str| group_means.get(key).copied().flatten();
        records.push(EpochRecord {
            epoch,
            learning_rate: lr,
            drop_rate: if selection_active { rate } else { 0.0 },
            selection_active,
            mean_train_loss,
            train_accuracy: pass.accuracy,
            val_accuracy,
            test_accuracy,
            mean_score_clean: flat("clean"),
            mean_score_close: flat("close"),
            mean_score_open: flat("open"),
            outcome,
        });
    }

    let best_checkpoint = best_checkpoint.expect("at least one epoch ran");
    let best_model = Model::from_checkpoint(&best_checkpoint)?;
    let best_train_accuracy = evaluate(&best_model, &train_ds)?.accuracy;
    let best_test_accuracy = evaluate(&best_model, &bundle.test)?.accuracy;
    let last = records.last().expect("at least one epoch ran");

    Ok(TrainOutput {
        config: config.clone(),
        best_epoch,
        best_val_accuracy: best_val,
        best_train_accuracy,
        best_test_accuracy,
        final_val_accuracy: last.val_accuracy,
        final_test_accuracy: last.test_accuracy,
        best_checkpoint,
        final_model: model,
        train_provenance: provenance,
        train_ids,
        n_train: n,
        n_val: val_ds.len(),
        n_test: bundle.test.len(),
        records,
    })
}

/// Results of running several pipelines on the same data and seed.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub runs: Vec<TrainOutput>,
}

impl ComparisonReport {
    pub fn run_for(&self, strategy: SelectionStrategy) -> Option<&TrainOutput> {
        self.runs.iter().find(|r| r.config.strategy == strategy)
    }
}

/// Runs every config on the shared bundle. Configs must agree on the seed so
/// pipelines differ only in their selection mechanism.
pub fn run_comparison(bundle: &DatasetBundle, configs: &[TrainConfig]) -> Result<ComparisonReport> {
    if configs.is_empty() {
        return Err(Error::contract("comparison needs at least one config"));
    }
    let seed = configs[0].seed;
    if configs.iter().any(|c| c.seed != seed) {
        return Err(Error::contract("comparison configs must share one seed"));
    }
    let runs = configs
        .iter()
        .map(|c| run_training(bundle, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport { runs })
}

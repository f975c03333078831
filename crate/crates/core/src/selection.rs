//! Sample selection: prediction-instability scoring over consecutive epochs,
//! the ramped drop schedule, global and per-mini-batch selection, the
//! loss-score baseline, and the overlap-rate stability metric.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::tensor::ProbVector;

/// Probabilities below this are clamped before taking logs.
pub const EPS_LOG: f64 = 1e-12;

/// Instability score between the two most recent epoch-level predictions:
/// the cross-entropy of the newer distribution against the older one,
/// `-sum_j recent_j * log(older_j)`.
///
/// Samples the network cannot settle on keep shifting their predicted
/// distribution, which makes this score large; stable predictions drive it
/// toward the entropy of the prediction itself.
pub fn prob_cross_entropy(recent: &ProbVector, older: &ProbVector) -> Result<f64> {
    if recent.len() != older.len() {
        return Err(Error::contract(format!(
            "probability length mismatch: {} vs {}",
            recent.len(),
            older.len()
        )));
    }
    let score = -recent
        .values()
        .iter()
        .zip(older.values())
        .map(|(&p_new, &p_old)| p_new * p_old.max(EPS_LOG).ln())
        .sum::<f64>();
    Ok(score)
}

/// Ring buffer of the two most recent epoch-level probability snapshots for
/// every sample in the training set, dropped samples included.
#[derive(Debug, Clone, Default)]
pub struct ProbabilityHistory {
    newest: Option<Vec<ProbVector>>,
    previous: Option<Vec<ProbVector>>,
    len: usize,
}

impl ProbabilityHistory {
    pub fn new(len: usize) -> Self {
        ProbabilityHistory {
            newest: None,
            previous: None,
            len,
        }
    }

    /// Records this epoch's probabilities for every sample, discarding
    /// anything older than two epochs.
    pub fn push(&mut self, probs: Vec<ProbVector>) -> Result<()> {
        if probs.len() != self.len {
            return Err(Error::contract(format!(
                "expected probabilities for {} samples, got {}",
                self.len,
                probs.len()
            )));
        }
        self.previous = self.newest.take();
        self.newest = Some(probs);
        Ok(())
    }

    /// True once two epochs have been recorded.
    pub fn ready(&self) -> bool {
        self.newest.is_some() && self.previous.is_some()
    }

    /// Per-sample instability scores from the stored pair of snapshots.
    pub fn scores(&self) -> Result<Vec<f64>> {
        let (newest, previous) = match (&self.newest, &self.previous) {
            (Some(n), Some(p)) => (n, p),
            _ => {
                return Err(Error::contract(
                    "scores undefined before two epochs of probabilities exist",
                ))
            }
        };
        newest
            .iter()
            .zip(previous)
            .map(|(n, p)| prob_cross_entropy(n, p))
            .collect()
    }
}

/// Ramped drop schedule: the dropped fraction grows linearly until it reaches
/// `max_rate` at `ramp_epochs`, then stays there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropSchedule {
    /// Maximum drop rate, in `[0, 1)`.
    pub max_rate: f64,
    /// Epoch at which the maximum is reached.
    pub ramp_epochs: usize,
}

impl DropSchedule {
    pub fn new(max_rate: f64, ramp_epochs: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&max_rate) {
            return Err(Error::config("max drop rate must lie in [0, 1)"));
        }
        if ramp_epochs == 0 {
            return Err(Error::config("ramp epochs must be at least 1"));
        }
        Ok(DropSchedule {
            max_rate,
            ramp_epochs,
        })
    }

    /// `r(t) = max_rate * min(t / ramp_epochs, 1)` for a 1-based epoch.
    pub fn rate_at(&self, epoch: usize) -> f64 {
        self.max_rate * (epoch as f64 / self.ramp_epochs as f64).min(1.0)
    }
}

/// Result of one epoch's selection: which samples train and which sit out.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    /// Epoch the selection belongs to; stamped by the training engine.
    pub epoch: usize,
    /// Kept (training) indices in ascending order.
    pub kept: Vec<usize>,
    /// Dropped indices in ascending order.
    pub dropped: Vec<usize>,
    /// The scores selection ran on, indexed by sample.
    pub scores: Vec<f64>,
    /// Drop rate that was applied.
    pub rate: f64,
}

impl SelectionOutcome {
    /// Selection that keeps everything (warm-up epochs, no-selection runs).
    pub fn keep_all(n: usize, scores: Vec<f64>) -> Self {
        SelectionOutcome {
            epoch: 0,
            kept: (0..n).collect(),
            dropped: Vec::new(),
            scores,
            rate: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.kept.len() + self.dropped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mean_kept_score(&self) -> Option<f64> {
        mean_of(&self.scores, &self.kept)
    }

    pub fn mean_dropped_score(&self) -> Option<f64> {
        mean_of(&self.scores, &self.dropped)
    }
}

fn mean_of(scores: &[f64], idx: &[usize]) -> Option<f64> {
    if idx.is_empty() || scores.is_empty() {
        return None;
    }
    Some(idx.iter().map(|&i| scores[i]).sum::<f64>() / idx.len() as f64)
}

/// Number of samples to keep: `ceil((1 - rate) * n)`, with a small slack so
/// products that are integers up to float rounding do not get bumped up.
fn kept_size(n: usize, rate: f64) -> usize {
    (((1.0 - rate) * n as f64) - 1e-9).ceil().max(1.0) as usize
}

fn validate_scores(scores: &[f64], rate: f64) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::contract("selection over an empty dataset"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::contract("selection scores must be finite"));
    }
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::contract("drop rate must lie in [0, 1)"));
    }
    Ok(())
}

/// Keeps the `ceil((1 - rate) * N)` smallest-score samples over the whole set.
/// Ties at the cut resolve to the lower sample index.
///
/// This is the exact minimizer of the total kept score under the size
/// constraint, which the brute-force subset oracle in the test suite confirms.
pub fn select_global(scores: &[f64], rate: f64) -> Result<SelectionOutcome> {
    validate_scores(scores, rate)?;
    let n = scores.len();
    let keep = kept_size(n, rate);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .partial_cmp(&scores[b])
            .expect("scores are finite")
            .then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = order[..keep].to_vec();
    let mut dropped: Vec<usize> = order[keep..].to_vec();
    kept.sort_unstable();
    dropped.sort_unstable();
    Ok(SelectionOutcome {
        epoch: 0,
        kept,
        dropped,
        scores: scores.to_vec(),
        rate,
    })
}

/// Small-loss baseline: identical contract to [`select_global`] but the
/// scores are current-epoch per-sample losses instead of instability scores.
pub fn select_by_loss(losses: &[f64], rate: f64) -> Result<SelectionOutcome> {
    select_global(losses, rate)
}

/// Per-mini-batch baseline: within each batch of the partition, keeps the
/// `ceil((1 - rate) * |batch|)` smallest-score samples independently.
///
/// Because every batch drops the same fraction regardless of how much noise
/// landed in it, clean samples get dropped from quiet batches while noisy
/// ones survive in loud batches.
pub fn select_minibatch(
    scores: &[f64],
    rate: f64,
    partition: &[Vec<usize>],
) -> Result<SelectionOutcome> {
    validate_scores(scores, rate)?;
    let n = scores.len();
    let mut seen = vec![false; n];
    let mut covered = 0usize;
    for batch in partition {
        for &i in batch {
            if i >= n || seen[i] {
                return Err(Error::contract(
                    "batch partition must cover all indices disjointly",
                ));
            }
            seen[i] = true;
            covered += 1;
        }
    }
    if covered != n {
        return Err(Error::contract(
            "batch partition must cover all indices disjointly",
        ));
    }

    let mut kept = Vec::with_capacity(n);
    let mut dropped = Vec::new();
    for batch in partition {
        if batch.is_empty() {
            continue;
        }
        let keep = kept_size(batch.len(), rate);
        let mut order = batch.clone();
        order.sort_by(|&a, &b| {
            scores[a]
                .partial_cmp(&scores[b])
                .expect("scores are finite")
                .then(a.cmp(&b))
        });
        kept.extend_from_slice(&order[..keep]);
        dropped.extend_from_slice(&order[keep..]);
    }
    kept.sort_unstable();
    dropped.sort_unstable();
    Ok(SelectionOutcome {
        epoch: 0,
        kept,
        dropped,
        scores: scores.to_vec(),
        rate,
    })
}

/// Window over which dropped sets are intersected for the overlap rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapWindow {
    /// Every recorded selection epoch up to and including `t`.
    AllEpochs,
    /// Epochs `t-2`, `t-1`, `t`.
    LastThree,
}

/// Selection-stability metric: the fraction of the drop budget occupied by
/// samples dropped in *every* epoch of the window,
/// `O = |intersection of dropped sets| / (N * r(t))`.
///
/// Recorded only past the ramp (`t > ramp_epochs`), where the drop rate has
/// saturated.
pub fn overlap_rate(
    dropped_by_epoch: &BTreeMap<usize, BTreeSet<usize>>,
    window: OverlapWindow,
    epoch: usize,
    sched: &DropSchedule,
    n: usize,
) -> Result<f64> {
    if epoch <= sched.ramp_epochs {
        return Err(Error::contract(format!(
            "overlap rate is recorded only for epochs past the ramp ({} <= {})",
            epoch, sched.ramp_epochs
        )));
    }
    if !dropped_by_epoch.contains_key(&epoch) {
        return Err(Error::contract(format!("no dropped set recorded for epoch {epoch}")));
    }
    let first_recorded = *dropped_by_epoch
        .keys()
        .next()
        .expect("map contains at least `epoch`");
    let window_start = match window {
        OverlapWindow::AllEpochs => first_recorded,
        OverlapWindow::LastThree => {
            if epoch < first_recorded + 2 {
                return Err(Error::contract(
                    "three-epoch window extends before the first selection epoch",
                ));
            }
            epoch - 2
        }
    };
    let mut overlap: Option<BTreeSet<usize>> = None;
    for t in window_start..=epoch {
        let set = dropped_by_epoch.get(&t).ok_or_else(|| {
            Error::contract(format!("window epoch {t} has no recorded dropped set"))
        })?;
        overlap = Some(match overlap {
            None => set.clone(),
            Some(acc) => acc.intersection(set).copied().collect(),
        });
    }
    let budget = n as f64 * sched.rate_at(epoch);
    if !(budget > 0.0) {
        return Err(Error::contract("overlap undefined for a zero drop budget"));
    }
    Ok(overlap.map_or(0, |s| s.len()) as f64 / budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::softmax;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn pv(values: &[f64]) -> ProbVector {
        ProbVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn identical_uniforms_score_their_entropy() {
        let u = pv(&[0.25; 4]);
        let score = prob_cross_entropy(&u, &u).unwrap();
        assert!((score - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn perfect_agreement_on_a_point_mass_scores_zero() {
        let p = pv(&[1.0, 0.0]);
        assert_eq!(prob_cross_entropy(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn forced_arithmetic_example() {
        let recent = pv(&[0.5, 0.5]);
        let older = pv(&[0.9, 0.1]);
        let want = -(0.5 * 0.9f64.ln() + 0.5 * 0.1f64.ln());
        let got = prob_cross_entropy(&recent, &older).unwrap();
        assert!((got - want).abs() < 1e-12);
        assert!((got - 1.20397).abs() < 1e-5);
    }

    #[test]
    fn length_mismatch_is_contract_violation() {
        let a = pv(&[0.5, 0.5]);
        let b = pv(&[0.4, 0.3, 0.3]);
        assert!(prob_cross_entropy(&a, &b).is_err());
    }

    #[test]
    fn self_score_equals_entropy_on_random_distributions() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for _ in 0..30 {
            let m = rng.random_range(2..9);
            let logits: Vec<f64> = (0..m).map(|_| rng.random_range(-4.0..4.0)).collect();
            let p = softmax(&logits).unwrap();
            let score = prob_cross_entropy(&p, &p).unwrap();
            assert!((score - p.entropy()).abs() < 1e-9);
        }
    }

    #[test]
    fn drop_rate_table() {
        let sched = DropSchedule::new(0.25, 10).unwrap();
        assert_eq!(sched.rate_at(10), 0.25);
        assert_eq!(sched.rate_at(5), 0.125);
        assert_eq!(sched.rate_at(50), 0.25);
    }

    #[test]
    fn drop_rate_is_non_decreasing_and_saturates() {
        let sched = DropSchedule::new(0.2, 7).unwrap();
        let mut prev = 0.0;
        for t in 1..40 {
            let r = sched.rate_at(t);
            assert!(r >= prev);
            assert!(r <= sched.max_rate + 1e-15);
            if t >= 7 {
                assert_eq!(r, 0.2);
            }
            prev = r;
        }
    }

    #[test]
    fn global_selection_keeps_three_smallest() {
        let out = select_global(&[0.1, 0.9, 0.3, 0.8, 0.2], 0.4).unwrap();
        assert_eq!(out.kept, vec![0, 2, 4]);
        assert_eq!(out.dropped, vec![1, 3]);
    }

    #[test]
    fn zero_rate_keeps_everything() {
        let out = select_global(&[0.5, 0.1, 0.7], 0.0).unwrap();
        assert_eq!(out.kept, vec![0, 1, 2]);
        assert!(out.dropped.is_empty());
    }

    #[test]
    fn empty_dataset_is_contract_violation() {
        assert!(select_global(&[], 0.1).is_err());
    }

    #[test]
    fn kept_size_satisfies_ceiling_exactly() {
        // 0.9 * 2000 is not exactly representable; the slack keeps ceil honest.
        assert_eq!(kept_size(2000, 0.1), 1800);
        assert_eq!(kept_size(5, 0.4), 3);
        assert_eq!(kept_size(7, 0.25), 6); // ceil(5.25)
        assert_eq!(kept_size(3, 0.0), 3);
    }

    #[test]
    fn global_selection_matches_exhaustive_subset_oracle() {
        // Brute force over all subsets of the kept size.
        fn best_subset_sum(scores: &[f64], keep: usize) -> f64 {
            let n = scores.len();
            let mut best = f64::INFINITY;
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize != keep {
                    continue;
                }
                let sum: f64 = (0..n)
                    .filter(|&i| mask & (1 << i) != 0)
                    .map(|i| scores[i])
                    .sum();
                best = best.min(sum);
            }
            best
        }
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..25 {
            let n = rng.random_range(3..=12);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
            let rate: f64 = rng.random_range(0.0..0.8);
            let out = select_global(&scores, rate).unwrap();
            let kept_sum: f64 = out.kept.iter().map(|&i| scores[i]).sum();
            let oracle = best_subset_sum(&scores, out.kept.len());
            assert!((kept_sum - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn selection_is_rank_based() {
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        for _ in 0..20 {
            let n = rng.random_range(4..40);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let rate: f64 = rng.random_range(0.0..0.9);
            let base = select_global(&scores, rate).unwrap();
            // Strictly increasing transforms preserve ranks.
            let exp: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
            let affine: Vec<f64> = scores.iter().map(|s| 2.0 * s + 1.0).collect();
            let atan: Vec<f64> = scores.iter().map(|s| s.atan()).collect();
            for transformed in [exp, affine, atan] {
                let out = select_global(&transformed, rate).unwrap();
                assert_eq!(out.kept, base.kept);
                assert_eq!(out.dropped, base.dropped);
            }
        }
    }

    #[test]
    fn dropped_mean_dominates_kept_mean() {
        let mut rng = ChaCha12Rng::seed_from_u64(44);
        for _ in 0..30 {
            let n = rng.random_range(2..60);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..6.0)).collect();
            let rate: f64 = rng.random_range(0.01..0.9);
            let out = select_global(&scores, rate).unwrap();
            if let (Some(kept), Some(dropped)) = (out.mean_kept_score(), out.mean_dropped_score()) {
                assert!(dropped >= kept);
            }
        }
    }

    #[test]
    fn kept_max_at_most_dropped_min() {
        let mut rng = ChaCha12Rng::seed_from_u64(45);
        for _ in 0..30 {
            let n = rng.random_range(2..40);
            let scores: Vec<f64> = (0..n).map(|_| (rng.random_range(0..6) as f64) / 2.0).collect();
            let out = select_global(&scores, 0.3).unwrap();
            let kept_max = out.kept.iter().map(|&i| scores[i]).fold(f64::NEG_INFINITY, f64::max);
            let dropped_min = out.dropped.iter().map(|&i| scores[i]).fold(f64::INFINITY, f64::min);
            assert!(kept_max <= dropped_min);
        }
    }

    #[test]
    fn select_by_loss_shares_the_global_contract() {
        let out = select_by_loss(&[0.1, 0.9, 0.3, 0.8, 0.2], 0.4).unwrap();
        assert_eq!(out.kept, vec![0, 2, 4]);
        let all = select_by_loss(&[0.5, 0.1, 0.7], 0.0).unwrap();
        assert_eq!(all.kept.len(), 3);
        assert!(select_by_loss(&[], 0.1).is_err());
    }

    #[test]
    fn single_batch_minibatch_equals_global() {
        let mut rng = ChaCha12Rng::seed_from_u64(46);
        for _ in 0..20 {
            let n = rng.random_range(2..40);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let rate: f64 = rng.random_range(0.0..0.9);
            let whole: Vec<Vec<usize>> = vec![(0..n).collect()];
            let mb = select_minibatch(&scores, rate, &whole).unwrap();
            let global = select_global(&scores, rate).unwrap();
            assert_eq!(mb.kept, global.kept);
            assert_eq!(mb.dropped, global.dropped);
        }
    }

    #[test]
    fn minibatch_drops_clean_samples_when_noise_is_imbalanced() {
        // All high scores ("noise") land in batch 0; batch 1 is uniformly low
        // ("clean"). Per-batch budgets still force drops from batch 1 and
        // keep part of batch 0.
        let scores = [9.0, 8.0, 7.5, 8.5, 0.1, 0.2, 0.3, 0.4];
        let partition = vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]];
        let rate = 0.25;
        let out = select_minibatch(&scores, rate, &partition).unwrap();
        // Batch 0 keeps 3 of its noisy members.
        assert!(out.kept.iter().filter(|&&i| i < 4).count() == 3);
        // Batch 1 drops one clean member (index 7, its largest).
        assert!(out.dropped.contains(&7));
        // Global selection at the same rate would have dropped only noise.
        let global = select_global(&scores, rate).unwrap();
        assert!(global.dropped.iter().all(|&i| i < 4));
    }

    #[test]
    fn minibatch_zero_rate_keeps_all() {
        let scores = [0.3, 0.1, 0.7, 0.2];
        let partition = vec![vec![2, 0], vec![3, 1]];
        let out = select_minibatch(&scores, 0.0, &partition).unwrap();
        assert_eq!(out.kept, vec![0, 1, 2, 3]);
        assert!(out.dropped.is_empty());
    }

    #[test]
    fn minibatch_rejects_bad_partitions() {
        let scores = [0.1, 0.2, 0.3];
        assert!(select_minibatch(&scores, 0.1, &[vec![0, 1]]).is_err());
        assert!(select_minibatch(&scores, 0.1, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(select_minibatch(&scores, 0.1, &[vec![0, 1], vec![2, 5]]).is_err());
    }

    fn dropped_map(sets: &[(usize, &[usize])]) -> BTreeMap<usize, BTreeSet<usize>> {
        sets.iter()
            .map(|(t, s)| (*t, s.iter().copied().collect()))
            .collect()
    }

    #[test]
    fn identical_dropped_sets_give_full_overlap() {
        let sched = DropSchedule::new(0.2, 2).unwrap();
        let set: Vec<usize> = (0..20).collect();
        let map = dropped_map(&[(3, &set), (4, &set), (5, &set)]);
        let o = overlap_rate(&map, OverlapWindow::LastThree, 5, &sched, 100).unwrap();
        assert_eq!(o, 1.0);
        let o_all = overlap_rate(&map, OverlapWindow::AllEpochs, 5, &sched, 100).unwrap();
        assert_eq!(o_all, 1.0);
    }

    #[test]
    fn disjoint_dropped_sets_give_zero_overlap() {
        let sched = DropSchedule::new(0.2, 2).unwrap();
        let map = dropped_map(&[(3, &[0, 1]), (4, &[2, 3]), (5, &[4, 5])]);
        let o = overlap_rate(&map, OverlapWindow::LastThree, 5, &sched, 10).unwrap();
        assert_eq!(o, 0.0);
    }

    #[test]
    fn overlap_forced_set_arithmetic() {
        let sched = DropSchedule::new(0.2, 2).unwrap();
        let map = dropped_map(&[(3, &[1, 2, 3, 4]), (4, &[3, 4, 5, 6]), (5, &[2, 3, 4, 7])]);
        let o = overlap_rate(&map, OverlapWindow::LastThree, 5, &sched, 20).unwrap();
        assert!((o - 0.5).abs() < 1e-15);
    }

    #[test]
    fn overlap_window_violations_are_contract_errors() {
        let sched = DropSchedule::new(0.2, 10).unwrap();
        let map = dropped_map(&[(11, &[1]), (12, &[1]), (13, &[1])]);
        // At or before the ramp end.
        assert!(overlap_rate(&map, OverlapWindow::AllEpochs, 10, &sched, 10).is_err());
        // Window of three reaching before the first recorded epoch.
        assert!(overlap_rate(&map, OverlapWindow::LastThree, 12, &sched, 10).is_err());
        // Epoch without a recorded set.
        assert!(overlap_rate(&map, OverlapWindow::AllEpochs, 14, &sched, 10).is_err());
        // Valid case for contrast.
        assert!(overlap_rate(&map, OverlapWindow::LastThree, 13, &sched, 10).is_ok());
    }

    #[test]
    fn history_scores_require_two_epochs() {
        let mut h = ProbabilityHistory::new(2);
        assert!(!h.ready());
        assert!(h.scores().is_err());
        h.push(vec![pv(&[0.5, 0.5]), pv(&[0.9, 0.1])]).unwrap();
        assert!(!h.ready());
        h.push(vec![pv(&[0.6, 0.4]), pv(&[0.8, 0.2])]).unwrap();
        assert!(h.ready());
        let scores = h.scores().unwrap();
        assert_eq!(scores.len(), 2);
        // Newest distribution weights the log of the older one.
        let want = -(0.6 * 0.5f64.ln() + 0.4 * 0.5f64.ln());
        assert!((scores[0] - want).abs() < 1e-12);
    }

    #[test]
    fn history_rejects_wrong_length() {
        let mut h = ProbabilityHistory::new(3);
        assert!(h.push(vec![pv(&[0.5, 0.5])]).is_err());
    }
}

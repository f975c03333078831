//! Synthetic fine-grained classification data with controllable close-set and
//! open-set label noise, plus the hypergeometric view of per-batch noise
//! counts under uniform shuffling.
//!
//! Classes come in confusable pairs: two unit-direction centers a few degrees
//! apart. Close-set noise relabels a sample to its pair partner; open-set
//! noise replaces a sample's features with a direction far from every center.
//! Noise is injected by exact counts so the realized noise rate is known.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{dot, l2_normalize};

/// Where a sample really came from. Written by the generator, read only by
/// diagnostics and tests; training never sees it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Clean,
    /// Mislabeled, but the true class exists in the label set.
    CloseNoise { true_label: usize },
    /// Irrelevant sample whose true class is outside the label set.
    OpenNoise,
}

impl Provenance {
    pub fn is_noise(&self) -> bool {
        !matches!(self, Provenance::Clean)
    }

    pub fn token(&self) -> &'static str {
        match self {
            Provenance::Clean => "clean",
            Provenance::CloseNoise { .. } => "close",
            Provenance::OpenNoise => "open",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: usize,
    pub features: Vec<f64>,
    /// The label training sees; wrong for noisy samples.
    pub label: usize,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub classes: usize,
    pub feature_dim: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Counts of (clean, close, open) samples.
    pub fn provenance_counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for s in &self.samples {
            match s.provenance {
                Provenance::Clean => counts.0 += 1,
                Provenance::CloseNoise { .. } => counts.1 += 1,
                Provenance::OpenNoise => counts.2 += 1,
            }
        }
        counts
    }

    /// Fraction of samples whose provenance is not clean.
    pub fn noise_rate(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let noisy = self.samples.iter().filter(|s| s.provenance.is_noise()).count();
        noisy as f64 / self.samples.len() as f64
    }
}

/// Train/validation/test triple; validation and test are always clean.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

/// Generator configuration. Every field has a default, so `{}` is a valid
/// JSON spec; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSpec {
    /// Number of classes; must be even when close-set noise is used,
    /// because close noise swaps labels within a class pair.
    pub classes: usize,
    pub feature_dim: usize,
    /// Training samples generated per class before noise injection.
    pub per_class_train: usize,
    pub per_class_val: usize,
    pub per_class_test: usize,
    /// Fraction of the training set relabeled to the pair partner.
    pub close_noise_rate: f64,
    /// Fraction of the training set replaced by off-manifold samples.
    pub open_noise_rate: f64,
    /// Angular separation between the two centers of a pair, degrees.
    pub pair_angle_deg: f64,
    /// Minimum angle between any two pair base directions, degrees.
    pub center_min_angle_deg: f64,
    /// Minimum angle between an open-noise direction and every center, degrees.
    pub open_margin_deg: f64,
    /// Number of shared off-manifold directions the open-set samples cluster
    /// around. Irrelevant web content repeats (the same kind of chart or logo
    /// crawled under many labels), so one direction serves many samples with
    /// conflicting assigned labels.
    pub open_cluster_count: usize,
    /// Isotropic within-class standard deviation around the center direction.
    pub within_class_std: f64,
    /// Fraction of class-conditional samples drawn as hard examples: valid,
    /// correctly labeled members sitting far out on the class fringe, the way
    /// cluttered or occluded web images do. Applies to train, validation, and
    /// test draws alike.
    pub hard_fraction: f64,
    /// Multiplier on the within-class deviation for hard examples.
    pub hard_std_factor: f64,
    /// Radial scale range; features are not unit-norm by construction.
    pub radial_min: f64,
    pub radial_max: f64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            classes: 20,
            feature_dim: 16,
            per_class_train: 100,
            per_class_val: 20,
            per_class_test: 30,
            close_noise_rate: 0.0,
            open_noise_rate: 0.0,
            pair_angle_deg: 15.0,
            center_min_angle_deg: 75.0,
            open_margin_deg: 45.0,
            open_cluster_count: 12,
            within_class_std: 0.05,
            hard_fraction: 0.0,
            hard_std_factor: 2.5,
            radial_min: 6.0,
            radial_max: 12.0,
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::config("at least 2 classes required"));
        }
        if self.feature_dim < 3 {
            return Err(Error::config("feature dimension must be at least 3"));
        }
        if self.per_class_train == 0 {
            return Err(Error::config("per-class training count must be positive"));
        }
        for (name, rate) in [
            ("close_noise_rate", self.close_noise_rate),
            ("open_noise_rate", self.open_noise_rate),
        ] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::config(format!("{name} must lie in [0, 1)")));
            }
        }
        if self.close_noise_rate + self.open_noise_rate >= 1.0 {
            return Err(Error::config("noise rates must sum to less than 1"));
        }
        if self.close_noise_rate > 0.0 && self.classes % 2 != 0 {
            return Err(Error::config(
                "close-set noise swaps within class pairs and needs an even class count",
            ));
        }
        if !(self.pair_angle_deg > 0.0 && self.pair_angle_deg < 90.0) {
            return Err(Error::config("pair angle must lie in (0, 90) degrees"));
        }
        if !(self.center_min_angle_deg > self.pair_angle_deg) {
            return Err(Error::config("center separation must exceed the pair angle"));
        }
        if !(self.open_margin_deg > 0.0 && self.open_margin_deg < 90.0) {
            return Err(Error::config("open margin must lie in (0, 90) degrees"));
        }
        if self.open_noise_rate > 0.0 && self.open_cluster_count == 0 {
            return Err(Error::config("open noise needs at least one cluster direction"));
        }
        if !(self.within_class_std > 0.0) {
            return Err(Error::config("within-class std must be positive"));
        }
        if !(0.0..1.0).contains(&self.hard_fraction) {
            return Err(Error::config("hard fraction must lie in [0, 1)"));
        }
        if !(self.hard_std_factor >= 1.0) {
            return Err(Error::config("hard std factor must be at least 1"));
        }
        if !(self.radial_min > 0.0 && self.radial_max >= self.radial_min) {
            return Err(Error::config("radial scale range is invalid"));
        }
        Ok(())
    }

    pub fn train_size(&self) -> usize {
        self.classes * self.per_class_train
    }
}

fn random_unit(rng: &mut ChaCha12Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(u) = l2_normalize(&v) {
            return u;
        }
    }
}

fn angle_deg(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos().to_degrees()
}

const PLACEMENT_ATTEMPTS: usize = 20_000;

/// Unit direction at least `min_angle_deg` away from every row of `existing`.
fn rejection_sample_direction(
    rng: &mut ChaCha12Rng,
    dim: usize,
    existing: &[Vec<f64>],
    min_angle_deg: f64,
    what: &str,
) -> Result<Vec<f64>> {
    for _ in 0..PLACEMENT_ATTEMPTS {
        let candidate = random_unit(rng, dim);
        if existing.iter().all(|c| angle_deg(&candidate, c) >= min_angle_deg) {
            return Ok(candidate);
        }
    }
    Err(Error::config(format!(
        "could not place {what}: no direction at least {min_angle_deg} degrees from \
         {} existing directions in {dim} dimensions",
        existing.len()
    )))
}

/// Unit vector orthogonal to `axis`.
fn orthogonal_direction(rng: &mut ChaCha12Rng, axis: &[f64]) -> Vec<f64> {
    loop {
        let v = random_unit(rng, axis.len());
        let radial = dot(&v, axis);
        let perp: Vec<f64> = v.iter().zip(axis).map(|(vi, ai)| vi - radial * ai).collect();
        if let Ok(u) = l2_normalize(&perp) {
            return u;
        }
    }
}

/// Off-manifold direction just past the margin: rotated away from a random
/// class center by `margin..margin+15` degrees, still at least `margin` from
/// every center. Irrelevant web content is related to the domain, not
/// uniformly random, which is what makes it harmful to train on.
fn near_margin_direction(
    rng: &mut ChaCha12Rng,
    centers: &[Vec<f64>],
    margin_deg: f64,
) -> Result<Vec<f64>> {
    for _ in 0..PLACEMENT_ATTEMPTS {
        let anchor = &centers[rng.random_range(0..centers.len())];
        let tangent = orthogonal_direction(rng, anchor);
        let angle = (margin_deg + rng.random_range(0.0..15.0)).to_radians();
        let candidate: Vec<f64> = anchor
            .iter()
            .zip(&tangent)
            .map(|(c, t)| angle.cos() * c + angle.sin() * t)
            .collect();
        if centers.iter().all(|c| angle_deg(&candidate, c) >= margin_deg) {
            return Ok(candidate);
        }
    }
    Err(Error::config(format!(
        "could not place an open-set direction at least {margin_deg} degrees from every center"
    )))
}

/// Class centers: unit directions generated in confusable pairs.
fn place_centers(spec: &DatasetSpec, rng: &mut ChaCha12Rng) -> Result<Vec<Vec<f64>>> {
    let pairs = spec.classes.div_ceil(2);
    let mut bases: Vec<Vec<f64>> = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let base = rejection_sample_direction(
            rng,
            spec.feature_dim,
            &bases,
            spec.center_min_angle_deg,
            "class pair base",
        )?;
        bases.push(base);
    }
    let half = (spec.pair_angle_deg / 2.0).to_radians();
    let mut centers = Vec::with_capacity(spec.classes);
    for base in &bases {
        let tangent = orthogonal_direction(rng, base);
        let plus: Vec<f64> = base
            .iter()
            .zip(&tangent)
            .map(|(b, t)| half.cos() * b + half.sin() * t)
            .collect();
        let minus: Vec<f64> = base
            .iter()
            .zip(&tangent)
            .map(|(b, t)| half.cos() * b - half.sin() * t)
            .collect();
        centers.push(plus);
        if centers.len() < spec.classes {
            centers.push(minus);
        }
    }
    Ok(centers)
}

fn cluster_sample(rng: &mut ChaCha12Rng, center: &[f64], spec: &DatasetSpec) -> Vec<f64> {
    let radial: f64 = rng.random_range(spec.radial_min..=spec.radial_max);
    let mut std = spec.within_class_std;
    if spec.hard_fraction > 0.0 && rng.random_range(0.0..1.0) < spec.hard_fraction {
        std *= spec.hard_std_factor;
    }
    center
        .iter()
        .map(|c| radial * (c + std * rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

/// The pair partner of a class: pairs are (0,1), (2,3), ...
pub fn pair_partner(class: usize) -> usize {
    class ^ 1
}

/// Deterministically generates a train/validation/test bundle from the spec.
///
/// The training set has exactly `round(rate * N)` open and close noisy
/// samples; validation and test contain only clean samples.
pub fn generate(spec: &DatasetSpec) -> Result<DatasetBundle> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let centers = place_centers(spec, &mut rng)?;

    let n_train = spec.train_size();
    let mut next_id = 0;
    let mut make_split = |per_class: usize, rng: &mut ChaCha12Rng| -> Dataset {
        let mut samples = Vec::with_capacity(spec.classes * per_class);
        for class in 0..spec.classes {
            for _ in 0..per_class {
                samples.push(Sample {
                    id: next_id,
                    features: cluster_sample(rng, &centers[class], spec),
                    label: class,
                    provenance: Provenance::Clean,
                });
                next_id += 1;
            }
        }
        Dataset {
            samples,
            classes: spec.classes,
            feature_dim: spec.feature_dim,
        }
    };

    let mut train = make_split(spec.per_class_train, &mut rng);
    let validation = make_split(spec.per_class_val, &mut rng);
    let test = make_split(spec.per_class_test, &mut rng);

    // Exact-count noise injection over a seeded permutation of the train set.
    let n_open = (spec.open_noise_rate * n_train as f64).round() as usize;
    let n_close = (spec.close_noise_rate * n_train as f64).round() as usize;
    let mut order: Vec<usize> = (0..n_train).collect();
    order.shuffle(&mut rng);
    // Off-manifold directions are shared: each hosts many open samples whose
    // assigned labels conflict, the way repeated irrelevant web content does.
    let open_dirs: Vec<Vec<f64>> = (0..if n_open > 0 { spec.open_cluster_count } else { 0 })
        .map(|_| near_margin_direction(&mut rng, &centers, spec.open_margin_deg))
        .collect::<Result<_>>()?;
    for (slot, &i) in order.iter().take(n_open).enumerate() {
        let direction = &open_dirs[slot % open_dirs.len()];
        train.samples[i].features = cluster_sample(&mut rng, direction, spec);
        train.samples[i].provenance = Provenance::OpenNoise;
    }
    for &i in order.iter().skip(n_open).take(n_close) {
        let true_label = train.samples[i].label;
        train.samples[i].label = pair_partner(true_label);
        train.samples[i].provenance = Provenance::CloseNoise { true_label };
    }

    Ok(DatasetBundle {
        train,
        validation,
        test,
    })
}

/// Hypergeometric pmf: probability of drawing exactly `k` marked items in
/// `draws` draws without replacement from a population of `population` items
/// of which `successes` are marked. Computed in log space.
pub fn hypergeometric_pmf(
    population: usize,
    successes: usize,
    draws: usize,
    k: usize,
) -> Result<f64> {
    if successes > population {
        return Err(Error::contract("successes exceed population"));
    }
    if draws > population {
        return Err(Error::contract("draws exceed population"));
    }
    let lower = draws.saturating_sub(population - successes);
    let upper = successes.min(draws);
    if k < lower || k > upper {
        return Ok(0.0);
    }
    let ln = ln_choose(successes, k) + ln_choose(population - successes, draws - k)
        - ln_choose(population, draws);
    Ok(ln.exp())
}

/// log of the binomial coefficient, accumulated term by term. Requires k <= n.
fn ln_choose(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    let k = k.min(n - k); // symmetric; use the smaller side
    let mut acc = 0.0;
    for i in 1..=k {
        acc += ((n - k + i) as f64).ln() - (i as f64).ln();
    }
    acc
}

/// Summary of how noise spreads over a batch partition.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRateStats {
    pub dataset_size: usize,
    /// Overall noise rate from provenance tags.
    pub noise_rate: f64,
    pub batch_sizes: Vec<usize>,
    /// Noisy-sample count per batch, in partition order.
    pub noise_counts: Vec<usize>,
}

impl NoiseRateStats {
    /// Per-batch noise rates `N_i / N_b`.
    pub fn rates(&self) -> Vec<f64> {
        self.noise_counts
            .iter()
            .zip(&self.batch_sizes)
            .map(|(&n, &b)| n as f64 / b as f64)
            .collect()
    }

    pub fn mean_count(&self) -> f64 {
        if self.noise_counts.is_empty() {
            return 0.0;
        }
        self.noise_counts.iter().sum::<usize>() as f64 / self.noise_counts.len() as f64
    }

    /// Unbiased sample variance of the per-batch noise counts.
    pub fn count_variance(&self) -> f64 {
        let n = self.noise_counts.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean_count();
        self.noise_counts
            .iter()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1) as f64
    }

    /// Histogram of per-batch noise rates over `[0, 1]` with `bins` bins.
    pub fn rate_histogram(&self, bins: usize) -> Vec<usize> {
        histogram_unit_interval(&self.rates(), bins)
    }
}

/// Histogram over `[0, 1]`; values at 1.0 land in the last bin.
pub fn histogram_unit_interval(values: &[f64], bins: usize) -> Vec<usize> {
    let mut counts = vec![0usize; bins];
    for &v in values {
        let bin = ((v * bins as f64) as usize).min(bins - 1);
        counts[bin] += 1;
    }
    counts
}

/// Counts noisy samples (by provenance) in every batch of the partition.
pub fn batch_noise_stats(dataset: &Dataset, partition: &[Vec<usize>]) -> Result<NoiseRateStats> {
    let n = dataset.len();
    let mut seen = vec![false; n];
    for batch in partition {
        for &i in batch {
            if i >= n || seen[i] {
                return Err(Error::contract(
                    "batch partition must cover dataset indices disjointly",
                ));
            }
            seen[i] = true;
        }
    }
    let noise_counts: Vec<usize> = partition
        .iter()
        .map(|batch| {
            batch
                .iter()
                .filter(|&&i| dataset.samples[i].provenance.is_noise())
                .count()
        })
        .collect();
    Ok(NoiseRateStats {
        dataset_size: n,
        noise_rate: dataset.noise_rate(),
        batch_sizes: partition.iter().map(|b| b.len()).collect(),
        noise_counts,
    })
}

/// Splits `0..n` into consecutive chunks of `batch_size` after a seeded shuffle.
pub fn shuffled_partition(n: usize, batch_size: usize, rng: &mut ChaCha12Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch_size).map(|c| c.to_vec()).collect()
}

// ---------------------------------------------------------------------------
// File formats: one CSV per split plus a JSON sidecar with the generator spec.
// ---------------------------------------------------------------------------

/// CSV encoding: `sample_id,label,provenance,true_label,f0..f{d-1}`.
/// `true_label` is -1 for open-set noise, the original class for close-set
/// noise, and the assigned label for clean samples.
pub fn write_dataset_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![
        "sample_id".to_string(),
        "label".to_string(),
        "provenance".to_string(),
        "true_label".to_string(),
    ];
    header.extend((0..dataset.feature_dim).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for s in &dataset.samples {
        let true_label: i64 = match s.provenance {
            Provenance::Clean => s.label as i64,
            Provenance::CloseNoise { true_label } => true_label as i64,
            Provenance::OpenNoise => -1,
        };
        let mut record = vec![
            s.id.to_string(),
            s.label.to_string(),
            s.provenance.token().to_string(),
            true_label.to_string(),
        ];
        record.extend(s.features.iter().map(|f| f.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv(path: &Path, classes: usize) -> Result<Dataset> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let feature_dim = headers.len().saturating_sub(4);
    if feature_dim == 0 {
        return Err(Error::contract("dataset CSV has no feature columns"));
    }
    let parse = |s: &str, what: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::contract(format!("invalid {what}: {s:?}")))
    };
    let mut samples = Vec::new();
    for row in r.records() {
        let row = row?;
        if row.len() != feature_dim + 4 {
            return Err(Error::contract("dataset CSV row has wrong arity"));
        }
        let id: usize = row[0]
            .parse()
            .map_err(|_| Error::contract("invalid sample_id"))?;
        let label: usize = row[1]
            .parse()
            .map_err(|_| Error::contract("invalid label"))?;
        let true_label: i64 = row[3]
            .parse()
            .map_err(|_| Error::contract("invalid true_label"))?;
        let provenance = match &row[2] {
            "clean" => Provenance::Clean,
            "close" => Provenance::CloseNoise {
                true_label: usize::try_from(true_label)
                    .map_err(|_| Error::contract("close sample without a true label"))?,
            },
            "open" => Provenance::OpenNoise,
            other => return Err(Error::contract(format!("unknown provenance {other:?}"))),
        };
        let mut features = Vec::with_capacity(feature_dim);
        for i in 0..feature_dim {
            features.push(parse(&row[4 + i], "feature")?);
        }
        if label >= classes {
            return Err(Error::contract("label out of range for class count"));
        }
        samples.push(Sample {
            id,
            features,
            label,
            provenance,
        });
    }
    Ok(Dataset {
        samples,
        classes,
        feature_dim,
    })
}

pub const TRAIN_CSV: &str = "train.csv";
pub const VALIDATION_CSV: &str = "validation.csv";
pub const TEST_CSV: &str = "test.csv";
pub const SPEC_JSON: &str = "dataset_spec.json";

/// Writes the three split CSVs and the spec sidecar into `dir`.
pub fn write_bundle(dir: &Path, bundle: &DatasetBundle, spec: &DatasetSpec) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_dataset_csv(&bundle.train, &dir.join(TRAIN_CSV))?;
    write_dataset_csv(&bundle.validation, &dir.join(VALIDATION_CSV))?;
    write_dataset_csv(&bundle.test, &dir.join(TEST_CSV))?;
    let json = serde_json::to_string_pretty(spec)?;
    fs::write(dir.join(SPEC_JSON), json + "\n")?;
    Ok(())
}

/// Reads a bundle written by [`write_bundle`], using the sidecar for shapes.
pub fn read_bundle(dir: &Path) -> Result<(DatasetBundle, DatasetSpec)> {
    let spec: DatasetSpec = serde_json::from_str(&fs::read_to_string(dir.join(SPEC_JSON))?)?;
    let bundle = DatasetBundle {
        train: read_dataset_csv(&dir.join(TRAIN_CSV), spec.classes)?,
        validation: read_dataset_csv(&dir.join(VALIDATION_CSV), spec.classes)?,
        test: read_dataset_csv(&dir.join(TEST_CSV), spec.classes)?,
    };
    Ok((bundle, spec))
}

/// Per-provenance mean of a per-sample statistic; `None` for empty groups.
pub fn provenance_group_means(
    values: &[f64],
    provenance: &[Provenance],
) -> BTreeMap<&'static str, Option<f64>> {
    let mut sums: BTreeMap<&'static str, (f64, usize)> =
        [("clean", (0.0, 0)), ("close", (0.0, 0)), ("open", (0.0, 0))]
            .into_iter()
            .collect();
    for (v, p) in values.iter().zip(provenance) {
        let entry = sums.get_mut(p.token()).expect("all tokens present");
        entry.0 += v;
        entry.1 += 1;
    }
    sums.into_iter()
        .map(|(k, (sum, count))| (k, if count > 0 { Some(sum / count as f64) } else { None }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> DatasetSpec {
        DatasetSpec {
            classes: 4,
            feature_dim: 8,
            per_class_train: 25,
            per_class_val: 5,
            per_class_test: 5,
            seed: 7,
            ..DatasetSpec::default()
        }
    }

    #[test]
    fn no_noise_means_all_clean() {
        let bundle = generate(&small_spec()).unwrap();
        let (clean, close, open) = bundle.train.provenance_counts();
        assert_eq!((clean, close, open), (100, 0, 0));
    }

    #[test]
    fn noise_counts_are_exact() {
        let spec = DatasetSpec {
            open_noise_rate: 0.2,
            close_noise_rate: 0.1,
            ..small_spec()
        };
        let bundle = generate(&spec).unwrap();
        let (_, close, open) = bundle.train.provenance_counts();
        assert_eq!(open, 20);
        assert_eq!(close, 10);
        assert_eq!(bundle.train.len(), 100);
        assert!((bundle.train.noise_rate() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn same_seed_gives_identical_datasets() {
        let spec = DatasetSpec {
            open_noise_rate: 0.15,
            close_noise_rate: 0.05,
            ..small_spec()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.validation, b.validation);
        assert_eq!(a.test, b.test);
    }

    #[test]
    fn validation_and_test_are_clean() {
        let spec = DatasetSpec {
            open_noise_rate: 0.3,
            close_noise_rate: 0.2,
            ..small_spec()
        };
        let bundle = generate(&spec).unwrap();
        assert!(bundle.validation.samples.iter().all(|s| s.provenance == Provenance::Clean));
        assert!(bundle.test.samples.iter().all(|s| s.provenance == Provenance::Clean));
    }

    #[test]
    fn close_noise_swaps_within_the_pair() {
        let spec = DatasetSpec {
            close_noise_rate: 0.2,
            ..small_spec()
        };
        let bundle = generate(&spec).unwrap();
        for s in &bundle.train.samples {
            if let Provenance::CloseNoise { true_label } = s.provenance {
                assert_eq!(s.label, pair_partner(true_label));
                assert_ne!(s.label, true_label);
            }
        }
    }

    #[test]
    fn open_noise_is_far_from_every_center_direction() {
        let spec = DatasetSpec {
            open_noise_rate: 0.2,
            within_class_std: 0.01,
            ..small_spec()
        };
        let bundle = generate(&spec).unwrap();
        // Clean cluster means sit near their centers; open samples must be far
        // from all clean directions. Check angle against per-class mean dirs.
        let mut class_dirs: Vec<Vec<f64>> = vec![vec![0.0; spec.feature_dim]; spec.classes];
        for s in &bundle.test.samples {
            for (a, f) in class_dirs[s.label].iter_mut().zip(&s.features) {
                *a += f;
            }
        }
        let class_dirs: Vec<Vec<f64>> =
            class_dirs.iter().map(|v| l2_normalize(v).unwrap()).collect();
        for s in &bundle.train.samples {
            if s.provenance == Provenance::OpenNoise {
                let dir = l2_normalize(&s.features).unwrap();
                for c in &class_dirs {
                    assert!(angle_deg(&dir, c) > 30.0, "open sample too close to a class");
                }
            }
        }
    }

    #[test]
    fn infeasible_geometry_is_a_configuration_error() {
        // 3 dimensions cannot host 25 pair bases at 60 degrees separation.
        let spec = DatasetSpec {
            classes: 50,
            feature_dim: 3,
            ..small_spec()
        };
        assert!(matches!(generate(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn odd_classes_with_close_noise_rejected() {
        let spec = DatasetSpec {
            classes: 5,
            close_noise_rate: 0.1,
            ..small_spec()
        };
        assert!(generate(&spec).is_err());
        let ok = DatasetSpec {
            classes: 5,
            close_noise_rate: 0.0,
            per_class_train: 5,
            per_class_val: 1,
            per_class_test: 1,
            ..small_spec()
        };
        assert!(generate(&ok).is_ok());
    }

    #[test]
    fn hypergeometric_draw_everything() {
        assert_eq!(hypergeometric_pmf(10, 5, 10, 5).unwrap(), 1.0);
    }

    #[test]
    fn hypergeometric_single_draw() {
        assert!((hypergeometric_pmf(10, 5, 1, 1).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hypergeometric_out_of_support_is_zero() {
        assert_eq!(hypergeometric_pmf(10, 5, 3, 4).unwrap(), 0.0);
        // Lower support bound: 8 draws from 10 with 5 marked forces k >= 3.
        assert_eq!(hypergeometric_pmf(10, 5, 8, 2).unwrap(), 0.0);
    }

    #[test]
    fn hypergeometric_rejects_bad_parameters() {
        assert!(hypergeometric_pmf(10, 11, 3, 1).is_err());
        assert!(hypergeometric_pmf(10, 5, 11, 1).is_err());
    }

    #[test]
    fn hypergeometric_mean_matches_closed_form() {
        // Full-support summation: mean = n * K / N.
        let (n_pop, k_marked, n_draws) = (1000, 200, 50);
        let mut mean = 0.0;
        let mut total = 0.0;
        for k in 0..=n_draws {
            let p = hypergeometric_pmf(n_pop, k_marked, n_draws, k).unwrap();
            mean += k as f64 * p;
            total += p;
        }
        assert!((total - 1.0).abs() < 1e-9);
        assert!((mean - 10.0).abs() < 1e-9);
    }

    #[test]
    fn batch_stats_on_noise_free_data() {
        let bundle = generate(&small_spec()).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let partition = shuffled_partition(bundle.train.len(), 10, &mut rng);
        let stats = batch_noise_stats(&bundle.train, &partition).unwrap();
        assert!(stats.rates().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn single_batch_rate_equals_dataset_rate() {
        let spec = DatasetSpec {
            open_noise_rate: 0.2,
            ..small_spec()
        };
        let bundle = generate(&spec).unwrap();
        let whole: Vec<Vec<usize>> = vec![(0..bundle.train.len()).collect()];
        let stats = batch_noise_stats(&bundle.train, &whole).unwrap();
        assert_eq!(stats.rates(), vec![bundle.train.noise_rate()]);
    }

    #[test]
    fn batch_stats_reject_bad_partition() {
        let bundle = generate(&small_spec()).unwrap();
        let n = bundle.train.len();
        assert!(batch_noise_stats(&bundle.train, &[vec![0, 0]]).is_err());
        assert!(batch_noise_stats(&bundle.train, &[vec![n]]).is_err());
    }

    #[test]
    fn csv_roundtrip_is_lossless() {
        let spec = DatasetSpec {
            open_noise_rate: 0.2,
            close_noise_rate: 0.1,
            ..small_spec()
        };
        let bundle = generate(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_bundle(dir.path(), &bundle, &spec).unwrap();
        let (back, spec_back) = read_bundle(dir.path()).unwrap();
        assert_eq!(spec, spec_back);
        assert_eq!(bundle.train, back.train);
        assert_eq!(bundle.validation, back.validation);
        assert_eq!(bundle.test, back.test);
    }

    #[test]
    fn bundle_write_is_byte_identical_across_runs() {
        let spec = DatasetSpec {
            open_noise_rate: 0.25,
            ..small_spec()
        };
        let bundle = generate(&spec).unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        write_bundle(d1.path(), &bundle, &spec).unwrap();
        write_bundle(d2.path(), &bundle, &spec).unwrap();
        for name in [TRAIN_CSV, VALIDATION_CSV, TEST_CSV, SPEC_JSON] {
            let a = fs::read(d1.path().join(name)).unwrap();
            let b = fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between runs");
        }
    }

    #[test]
    fn histogram_bins_cover_unit_interval() {
        let h = histogram_unit_interval(&[0.0, 0.5, 0.999, 1.0], 4);
        assert_eq!(h, vec![1, 0, 1, 2]);
        assert_eq!(h.iter().sum::<usize>(), 4);
    }
}

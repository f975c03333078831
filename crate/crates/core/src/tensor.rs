//! Minimal dense numeric kernel: matrices, vector helpers, a stable softmax,
//! and a central-difference gradient oracle used by the test suites.
//!
//! Everything is `f64` and single-threaded with a fixed accumulation order so
//! runs are bit-reproducible per seed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norms at or below this threshold are treated as zero vectors.
pub const EPS_NORM: f64 = 1e-12;

/// Row-major dense matrix of `f64` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from row-major data, validating length and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::contract(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("matrix data contains non-finite entries"));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::contract("ragged rows"));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        DenseMatrix::from_vec(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Standard matrix product with row-major accumulation order.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::contract(format!(
                "matmul dimension mismatch: {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        if out.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("matmul produced non-finite entries"));
        }
        Ok(out)
    }

    /// `A * v` for a column vector `v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::contract(format!(
                "matvec dimension mismatch: {}x{} * {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            out[i] = dot(self.row(i), v);
        }
        Ok(out)
    }

    /// `A^T * v`.
    pub fn tr_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::contract(format!(
                "tr_matvec dimension mismatch: {}x{}^T * {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let a = v[i];
            for (o, w) in out.iter_mut().zip(self.row(i)) {
                *o += a * w;
            }
        }
        Ok(out)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Returns `v / ||v||`. Near-zero vectors are rejected.
pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let norm = l2_norm(v);
    if !(norm > EPS_NORM) {
        return Err(Error::degenerate(format!(
            "cannot normalize vector with norm {norm:.3e}"
        )));
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

/// A probability distribution over at least two classes.
///
/// Entries lie in `[0, 1]` and sum to one within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::contract("probability vector needs at least 2 classes"));
        }
        if values.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::contract("probabilities must lie in [0, 1]"));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::contract(format!(
                "probabilities sum to {sum}, expected 1 within 1e-9"
            )));
        }
        Ok(ProbVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .0
            .iter()
            .map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 })
            .sum::<f64>()
    }
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax via max subtraction.
pub fn softmax(logits: &[f64]) -> Result<ProbVector> {
    if logits.len() < 2 {
        return Err(Error::contract("softmax needs at least 2 logits"));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("softmax input contains non-finite logits"));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&h| (h - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    ProbVector::new(exps.iter().map(|e| e / sum).collect())
}

/// Central-difference gradient: `(f(x + h e_i) - f(x - h e_i)) / 2h` per coordinate.
///
/// This is the independent oracle the gradient tests check analytic
/// derivatives against; evaluation failures from `f` are propagated.
pub fn finite_diff_gradient<F>(mut f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::contract("finite-difference step must be positive"));
    }
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let plus = f(&probe)?;
        probe[i] = x[i] - h;
        let minus = f(&probe)?;
        probe[i] = x[i];
        grad[i] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// Relative difference between two gradients: `||a - b|| / max(||a||, ||b||, tiny)`.
pub fn gradient_rel_error(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    diff / l2_norm(a).max(l2_norm(b)).max(1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_matrix(rng: &mut ChaCha12Rng, rows: usize, cols: usize) -> DenseMatrix {
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        DenseMatrix::from_vec(rows, cols, data).unwrap()
    }

    // Independent reference for matmul: a separately written naive triple loop.
    fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for k in 0..a.cols() {
                    acc += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    #[test]
    fn matmul_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 3, 3);
        let id = DenseMatrix::identity(3);
        assert_eq!(id.matmul(&a).unwrap(), a);
    }

    #[test]
    fn matmul_forced_arithmetic() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.data(), &[3.0, 7.0]);
    }

    #[test]
    fn matmul_matches_naive_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 5, 4);
        let b = random_matrix(&mut rng, 4, 3);
        let got = a.matmul(&b).unwrap();
        let want = naive_matmul(&a, &b);
        for (x, y) in got.data().iter().zip(want.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(Error::Contract(_))));
    }

    #[test]
    fn matmul_associativity_on_random_instances() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 4, 3);
            let b = random_matrix(&mut rng, 3, 5);
            let c = random_matrix(&mut rng, 5, 2);
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            for (x, y) in left.data().iter().zip(right.data()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn normalize_forced_arithmetic() {
        let v = l2_normalize(&[3.0, 4.0]).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-12);
        assert!((v[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn normalize_is_idempotent() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..20 {
            let v: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
            let once = l2_normalize(&v).unwrap();
            let twice = l2_normalize(&once).unwrap();
            assert!((l2_norm(&once) - 1.0).abs() < 1e-12);
            for (a, b) in once.iter().zip(&twice) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normalize_rejects_zero_vector() {
        assert!(matches!(l2_normalize(&[0.0, 0.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn softmax_symmetry() {
        let p = softmax(&[0.0, 0.0, 0.0]).unwrap();
        for &v in p.values() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_forced_arithmetic() {
        let p = softmax(&[2.0f64.ln(), 0.0, 0.0]).unwrap();
        assert!((p.values()[0] - 0.5).abs() < 1e-12);
        assert!((p.values()[1] - 0.25).abs() < 1e-12);
        assert!((p.values()[2] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn softmax_large_logit_does_not_overflow() {
        let p = softmax(&[1000.0, 0.0]).unwrap();
        assert_eq!(p.values()[0], 1.0);
        assert_eq!(p.values()[1], 0.0);
    }

    #[test]
    fn softmax_rejects_non_finite() {
        assert!(matches!(softmax(&[f64::NAN, 0.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn softmax_sums_to_one_and_is_shift_invariant() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..50 {
            let logits: Vec<f64> = (0..7).map(|_| rng.random_range(-30.0..30.0)).collect();
            let shift: f64 = rng.random_range(-100.0..100.0);
            let p = softmax(&logits).unwrap();
            assert!((p.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let shifted: Vec<f64> = logits.iter().map(|v| v + shift).collect();
            let q = softmax(&shifted).unwrap();
            for (a, b) in p.values().iter().zip(q.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn finite_diff_known_derivative() {
        // f(x) = ||x||^2 has gradient 2x.
        let grad = finite_diff_gradient(|x| Ok(dot(x, x)), &[1.0, 2.0], 1e-5).unwrap();
        assert!((grad[0] - 2.0).abs() < 1e-6);
        assert!((grad[1] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn finite_diff_constant_function() {
        let grad = finite_diff_gradient(|_| Ok(3.5), &[1.0, -2.0, 0.3], 1e-5).unwrap();
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn finite_diff_rejects_bad_step() {
        assert!(finite_diff_gradient(|_| Ok(0.0), &[1.0], 0.0).is_err());
    }

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbVector::new(vec![1.0]).is_err());
        assert!(ProbVector::new(vec![0.7, 0.7]).is_err());
        assert!(ProbVector::new(vec![-0.1, 1.1]).is_err());
    }
}

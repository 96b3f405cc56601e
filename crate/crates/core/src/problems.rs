//! Finite-sum objectives `f = (1/m) Σ f_i` with value, gradient, component
//! and partial-derivative oracles.

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::numerics::{dot_unchecked, norm2, SparseRowMatrix, Vector};

const LIPSCHITZ_POWER_TOL: f64 = 1e-12;
const LIPSCHITZ_POWER_MAX_ITER: usize = 20_000;

/// Documented curvature bound for the completion loss; `sup |ℓ''| = 1`.
pub const COMPLETION_CURVATURE: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct ObservedEntry {
    pub row: usize,
    pub col: usize,
    pub target: f64,
}

#[derive(Clone, Debug)]
pub enum ProblemKind {
    LogisticL1 {
        data: SparseRowMatrix,
        labels: Vec<f64>,
    },
    /// Iterate is the row-major flattening of a `rows × cols` matrix.
    MatrixCompletion {
        rows: usize,
        cols: usize,
        entries: Vec<ObservedEntry>,
        slot: Vec<Option<usize>>,
    },
    /// `f_i(x) = ½ Σ_j w_ij (x_j − c_ij)²`.
    Quadratic {
        centers: Vec<Vec<f64>>,
        weights: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug)]
pub struct Problem {
    kind: ProblemKind,
    dim: usize,
    components: usize,
    lipschitz: f64,
    component_lipschitz: f64,
    reference_value: Option<f64>,
}

impl Problem {
    pub fn logistic(data: SparseRowMatrix, labels: Vec<f64>) -> Result<Self> {
        if data.rows() != labels.len() {
            return Err(Error::dim(data.rows(), labels.len()));
        }
        if data.rows() == 0 || data.cols() == 0 {
            return Err(Error::Domain("empty logistic dataset".into()));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::Domain(format!("label {bad} is not ±1")));
        }
        let m = data.rows();
        let lambda = gram_lambda_max(&data)?;
        let max_row_sq = (0..m)
            .map(|i| data.row(i).1.iter().map(|v| v * v).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(Problem {
            dim: data.cols(),
            components: m,
            lipschitz: (lambda / (4.0 * m as f64)).max(f64::MIN_POSITIVE),
            component_lipschitz: (max_row_sq / 4.0).max(f64::MIN_POSITIVE),
            kind: ProblemKind::LogisticL1 { data, labels },
            reference_value: None,
        })
    }

    pub fn completion(rows: usize, cols: usize, entries: Vec<ObservedEntry>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.is_empty() {
            return Err(Error::Domain("empty completion problem".into()));
        }
        let mut slot = vec![None; rows * cols];
        for (k, e) in entries.iter().enumerate() {
            if e.row >= rows || e.col >= cols {
                return Err(Error::Domain(format!(
                    "entry ({}, {}) outside {rows}×{cols}",
                    e.row, e.col
                )));
            }
            if !e.target.is_finite() {
                return Err(Error::Domain("non-finite target".into()));
            }
            let p = e.row * cols + e.col;
            if slot[p].is_some() {
                return Err(Error::Domain(format!("duplicate entry ({}, {})", e.row, e.col)));
            }
            slot[p] = Some(k);
        }
        let count = entries.len();
        Ok(Problem {
            dim: rows * cols,
            components: count,
            lipschitz: COMPLETION_CURVATURE / count as f64,
            component_lipschitz: COMPLETION_CURVATURE,
            kind: ProblemKind::MatrixCompletion {
                rows,
                cols,
                entries,
                slot,
            },
            reference_value: None,
        })
    }

    /// `½‖x − c‖²` as a single component.
    pub fn quadratic(center: Vec<f64>) -> Result<Self> {
        let n = center.len();
        Self::weighted_quadratic(vec![center], vec![vec![1.0; n]])
    }

    pub fn weighted_quadratic(centers: Vec<Vec<f64>>, weights: Vec<Vec<f64>>) -> Result<Self> {
        let m = centers.len();
        if m == 0 || weights.len() != m {
            return Err(Error::dim(m, weights.len()));
        }
        let n = centers[0].len();
        if n == 0 {
            return Err(Error::Domain("empty quadratic".into()));
        }
        for (c, w) in centers.iter().zip(&weights) {
            if c.len() != n {
                return Err(Error::dim(n, c.len()));
            }
            if w.len() != n {
                return Err(Error::dim(n, w.len()));
            }
            if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) || c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("quadratic weights must be positive and finite".into()));
            }
        }
        let lipschitz = (0..n)
            .map(|j| weights.iter().map(|w| w[j]).sum::<f64>() / m as f64)
            .fold(0.0, f64::max);
        let component_lipschitz = weights.iter().flatten().copied().fold(0.0, f64::max);
        Ok(Problem {
            dim: n,
            components: m,
            lipschitz,
            component_lipschitz,
            kind: ProblemKind::Quadratic { centers, weights },
            reference_value: None,
        })
    }

    pub fn kind(&self) -> &ProblemKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn with_reference_value(mut self, f_star: f64) -> Self {
        self.reference_value = Some(f_star);
        self
    }

    pub fn reference_value(&self) -> Option<f64> {
        self.reference_value
    }

    /// Upper bound on the Lipschitz constant of `∇f`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    /// Upper bound on the Lipschitz constants of every `∇f_i`.
    pub fn component_lipschitz_bound(&self) -> f64 {
        self.component_lipschitz
    }

    /// `(Ã, y)` for problems of the form `f̃(Ãx)`.
    pub fn logistic_parts(&self) -> Option<(&SparseRowMatrix, &[f64])> {
        match &self.kind {
            ProblemKind::LogisticL1 { data, labels } => Some((data, labels)),
            _ => None,
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::dim(self.dim, x.len()));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let m = self.components as f64;
        Ok(match &self.kind {
            ProblemKind::LogisticL1 { data, labels } => {
                let total: f64 = labels
                    .iter()
                    .enumerate()
                    .map(|(i, y)| softplus(-y * data.row_dot(i, x)))
                    .sum();
                total / m
            }
            ProblemKind::MatrixCompletion { cols, entries, .. } => {
                let total: f64 = entries
                    .iter()
                    .map(|e| completion_loss(x[e.row * cols + e.col] - e.target))
                    .sum();
                total / m
            }
            ProblemKind::Quadratic { centers, weights } => {
                let mut total = 0.0;
                for (c, w) in centers.iter().zip(weights) {
                    for j in 0..self.dim {
                        total += 0.5 * w[j] * (x[j] - c[j]).powi(2);
                    }
                }
                total / m
            }
        })
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vector> {
        self.check(x)?;
        let mut out = vec![0.0; self.dim];
        let scale = 1.0 / self.components as f64;
        for i in 0..self.components {
            self.add_component_grad(i, x, scale, &mut out);
        }
        Ok(Vector::from_vec(out))
    }

    pub fn component_grad(&self, i: usize, x: &[f64]) -> Result<Vector> {
        self.check(x)?;
        self.check_component(i)?;
        let mut out = vec![0.0; self.dim];
        self.add_component_grad(i, x, 1.0, &mut out);
        Ok(Vector::from_vec(out))
    }

    pub(crate) fn check_component(&self, i: usize) -> Result<()> {
        if i >= self.components {
            return Err(Error::Domain(format!(
                "component {i} out of range (m = {})",
                self.components
            )));
        }
        Ok(())
    }

    /// `out += alpha · ∇f_i(x)`; indices and lengths are trusted.
    pub(crate) fn add_component_grad(&self, i: usize, x: &[f64], alpha: f64, out: &mut [f64]) {
        match &self.kind {
            ProblemKind::LogisticL1 { data, labels } => {
                let y = labels[i];
                let coef = logistic_dloss(y, data.row_dot(i, x));
                data.add_row_into(i, alpha * coef, out);
            }
            ProblemKind::MatrixCompletion { cols, entries, .. } => {
                let e = &entries[i];
                let p = e.row * cols + e.col;
                out[p] += alpha * completion_dloss(x[p] - e.target);
            }
            ProblemKind::Quadratic { centers, weights } => {
                let (c, w) = (&centers[i], &weights[i]);
                for j in 0..out.len() {
                    out[j] += alpha * w[j] * (x[j] - c[j]);
                }
            }
        }
    }

    /// `∂f/∂x_j`.
    pub fn partial(&self, j: usize, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        if j >= self.dim {
            return Err(Error::Domain(format!("coordinate {j} out of range (n = {})", self.dim)));
        }
        let m = self.components as f64;
        Ok(match &self.kind {
            ProblemKind::LogisticL1 { data, labels } => {
                let mut total = 0.0;
                for (i, &y) in labels.iter().enumerate() {
                    let (idx, vals) = data.row(i);
                    if let Ok(k) = idx.binary_search(&j) {
                        total += logistic_dloss(y, data.row_dot(i, x)) * vals[k];
                    }
                }
                total / m
            }
            ProblemKind::MatrixCompletion { entries, slot, .. } => match slot[j] {
                Some(k) => completion_dloss(x[j] - entries[k].target) / m,
                None => 0.0,
            },
            ProblemKind::Quadratic { centers, weights } => {
                let total: f64 = centers
                    .iter()
                    .zip(weights)
                    .map(|(c, w)| w[j] * (x[j] - c[j]))
                    .sum();
                total / m
            }
        })
    }
}

/// Frank-Wolfe gap `⟨∇f(x), x − lmo(∇f(x))⟩`.
pub fn fw_gap(problem: &Problem, x: &[f64], set: &ConstraintSet) -> Result<f64> {
    let g = problem.grad(x)?;
    let s = set.lmo(&g)?;
    Ok(g.iter()
        .zip(x.iter().zip(s.iter()))
        .map(|(gi, (xi, si))| gi * (xi - si))
        .sum())
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Derivative in `z` of `ln(1 + exp(−y z))`.
pub fn logistic_dloss(y: f64, z: f64) -> f64 {
    -y * sigmoid(-y * z)
}

/// `ℓ(z) = z² / (2 + z²)`.
pub fn completion_loss(z: f64) -> f64 {
    let z2 = z * z;
    z2 / (2.0 + z2)
}

/// `ℓ'(z) = 4z / (2 + z²)²`.
pub fn completion_dloss(z: f64) -> f64 {
    let d = 2.0 + z * z;
    4.0 * z / (d * d)
}

/// `λ_max(AᵀA)` by power iteration on the sparse rows.
fn gram_lambda_max(a: &SparseRowMatrix) -> Result<f64> {
    let n = a.cols();
    let mut v: Vec<f64> = (0..n).map(|j| 1.0 + (j as f64 * 0.618_033_988_75).fract()).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|c| *c /= nv);
    let mut prev = f64::NAN;
    for _ in 0..LIPSCHITZ_POWER_MAX_ITER {
        let w = a.mul_vec(&v)?;
        let rq = dot_unchecked(&w, &w);
        let z = a.transpose_mul_vec(&w)?;
        let zn = norm2(&z);
        if zn == 0.0 {
            return Ok(0.0);
        }
        v = z.iter().map(|c| c / zn).collect();
        if prev.is_finite() && (rq - prev).abs() <= LIPSCHITZ_POWER_TOL * rq {
            // ‖AᵀAv‖ ≥ vᵀAᵀAv for unit v, and is the tighter estimate.
            return Ok(zn);
        }
        prev = rq;
    }
    Err(Error::NonConvergence {
        iterations: LIPSCHITZ_POWER_MAX_ITER,
        residual: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_logistic(rows: usize, cols: usize, seed: u64) -> Problem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let labels = (0..rows).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        Problem::logistic(SparseRowMatrix::from_dense(rows, cols, &data).unwrap(), labels).unwrap()
    }

    fn random_completion(seed: u64) -> Problem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        for r in 0..4 {
            for c in 0..3 {
                if rng.gen_bool(0.6) {
                    entries.push(ObservedEntry {
                        row: r,
                        col: c,
                        target: rng.gen_range(-2.0..2.0),
                    });
                }
            }
        }
        entries.push(ObservedEntry { row: 3, col: 2, target: 0.5 });
        entries.dedup_by(|a, b| a.row == b.row && a.col == b.col);
        Problem::completion(4, 3, entries).unwrap()
    }

    fn random_quadratic(m: usize, n: usize, seed: u64) -> Problem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let weights = (0..m).map(|_| (0..n).map(|_| rng.gen_range(0.5..2.0)).collect()).collect();
        Problem::weighted_quadratic(centers, weights).unwrap()
    }

    fn central_difference(p: &Problem, x: &[f64]) -> Vec<f64> {
        let h = 1e-6 * (1.0 + norm2(x));
        (0..x.len())
            .map(|j| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[j] += h;
                b[j] -= h;
                (p.value(&a).unwrap() - p.value(&b).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn value_examples() {
        let p = random_logistic(7, 3, 1);
        assert!((p.value(&[0.0; 3]).unwrap() - 2f64.ln()).abs() < 1e-15);
        let entries = vec![
            ObservedEntry { row: 0, col: 1, target: 0.3 },
            ObservedEntry { row: 1, col: 0, target: -1.0 },
        ];
        let c = Problem::completion(2, 2, entries).unwrap();
        assert_eq!(c.value(&[9.0, 0.3, -1.0, 4.0]).unwrap(), 0.0);
        let q = Problem::quadratic(vec![0.0, 0.0]).unwrap();
        assert_eq!(q.value(&[3.0, 4.0]).unwrap(), 12.5);
    }

    #[test]
    fn gradient_examples() {
        let q = Problem::quadratic(vec![0.0, 0.0]).unwrap();
        assert_eq!(q.grad(&[3.0, -4.0]).unwrap().as_slice(), &[3.0, -4.0]);
        let a = SparseRowMatrix::from_rows(2, vec![vec![(0, 1.0)]]).unwrap();
        let p = Problem::logistic(a, vec![1.0]).unwrap();
        assert_eq!(p.grad(&[0.0, 0.0]).unwrap().as_slice(), &[-0.5, 0.0]);
        assert!((completion_dloss(1.0) - 4.0 / 9.0).abs() < 1e-15);
        let h = 1e-6;
        let fd = (completion_loss(1.0 + h) - completion_loss(1.0 - h)) / (2.0 * h);
        assert!((fd - 4.0 / 9.0).abs() / (4.0 / 9.0) < 1e-5);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(Problem::quadratic(vec![1.0, 2.0]).unwrap().lipschitz_bound(), 1.0);
        let m = 4;
        let eye: Vec<f64> = (0..m * m).map(|k| if k % (m + 1) == 0 { 1.0 } else { 0.0 }).collect();
        let p = Problem::logistic(SparseRowMatrix::from_dense(m, m, &eye).unwrap(), vec![1.0; m]).unwrap();
        assert!((p.lipschitz_bound() - 1.0 / (4.0 * m as f64)).abs() < 1e-12);
    }

    #[test]
    fn logistic_lipschitz_matches_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = DMatrix::from_row_slice(5, 3, &data);
        let lam = (a.transpose() * &a).symmetric_eigenvalues().max();
        let p = Problem::logistic(SparseRowMatrix::from_dense(5, 3, &data).unwrap(), vec![1.0; 5]).unwrap();
        assert!((p.lipschitz_bound() - lam / 20.0).abs() <= 1e-9 * lam);
    }

    #[test]
    fn logistic_lipschitz_bounds_sampled_ratios() {
        let p = random_logistic(5, 3, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let y: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let gx = p.grad(&x).unwrap();
            let gy = p.grad(&y).unwrap();
            let ratio = norm2(&gx.sub(&gy)) / norm2(&Vector::from_vec(x.clone()).sub(&y));
            assert!(ratio <= p.lipschitz_bound() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn completion_curvature_constant_is_an_upper_bound() {
        // ℓ''(z) = (8 − 12z²)/(2 + z²)³ scanned on a fine grid.
        let sup = (-40_000..=40_000)
            .map(|k| {
                let z = k as f64 * 1e-3;
                ((8.0 - 12.0 * z * z) / (2.0 + z * z).powi(3)).abs()
            })
            .fold(0.0, f64::max);
        assert!(sup <= COMPLETION_CURVATURE);
        assert!((sup - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fw_gap_examples() {
        let set = ConstraintSet::l1_ball(1.0, 2).unwrap();
        let q0 = Problem::quadratic(vec![0.0, 0.0]).unwrap();
        assert_eq!(fw_gap(&q0, &[0.0, 0.0], &set).unwrap(), 0.0);
        let far = Problem::quadratic(vec![10.0, 0.0]).unwrap();
        assert_eq!(fw_gap(&far, &[1.0, 0.0], &set).unwrap(), 0.0);
        assert_eq!(fw_gap(&far, &[-1.0, 0.0], &set).unwrap(), 22.0);
    }

    #[test]
    fn index_errors() {
        let q = random_quadratic(3, 2, 1);
        assert!(q.component_grad(3, &[0.0, 0.0]).is_err());
        assert!(q.partial(2, &[0.0, 0.0]).is_err());
        assert!(q.value(&[0.0]).is_err());
        assert!(Problem::logistic(SparseRowMatrix::from_rows(1, vec![vec![]]).unwrap(), vec![0.0]).is_err());
    }

    fn all_problems() -> Vec<Problem> {
        vec![random_logistic(6, 4, 3), random_completion(4), random_quadratic(4, 3, 5)]
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for p in all_problems() {
            for _ in 0..100 {
                let x: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let g = p.grad(&x).unwrap();
                let fd = central_difference(&p, &x);
                let err = norm2(&g.sub(&fd));
                assert!(err <= 1e-5 * norm2(&g).max(1e-3), "err {err}");
                for j in 0..p.dim() {
                    assert!((p.partial(j, &x).unwrap() - g[j]).abs() <= 1e-14 * (1.0 + g[j].abs()));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn component_average_is_full_gradient(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for p in all_problems() {
                let x: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let mut avg = vec![0.0; p.dim()];
                for i in 0..p.components() {
                    let gi = p.component_grad(i, &x).unwrap();
                    for (a, b) in avg.iter_mut().zip(gi.iter()) {
                        *a += b / p.components() as f64;
                    }
                }
                let g = p.grad(&x).unwrap();
                for (a, b) in avg.iter().zip(g.iter()) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn completion_loss_bounded(z in -1e6f64..1e6) {
            let l = completion_loss(z);
            prop_assert!((0.0..1.0).contains(&l));
        }

        #[test]
        fn fw_gap_nonnegative(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_logistic(6, 4, seed);
            let set = ConstraintSet::l1_ball(2.0, 4).unwrap();
            let raw: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
            prop_assert!(fw_gap(&p, &raw, &set).unwrap() >= 0.0);
        }
    }
}

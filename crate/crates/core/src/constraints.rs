//! Compact convex constraint sets: linear minimization oracles, membership
//! and diameter.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{mat_t_vec, mat_vec, norm1, norm2, DenseMatrix, Vector};

pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-9;
pub const DEFAULT_POWER_TOL: f64 = 1e-10;
pub const DEFAULT_POWER_MAX_ITER: usize = 1000;
const POWER_SEED: u64 = 0x5eed_b5f3;

#[derive(Clone, Debug, PartialEq)]
pub enum SetKind {
    L1Ball { radius: f64, dim: usize },
    /// Matrices are flattened row-major.
    NuclearBall { radius: f64, rows: usize, cols: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSet {
    kind: SetKind,
    tolerance: f64,
    power_tol: f64,
    power_max_iter: usize,
}

impl ConstraintSet {
    pub fn l1_ball(radius: f64, dim: usize) -> Result<Self> {
        check_radius(radius)?;
        if dim == 0 {
            return Err(Error::config("dim", "dimension must be positive"));
        }
        Ok(Self::with_kind(SetKind::L1Ball { radius, dim }))
    }

    pub fn nuclear_ball(radius: f64, rows: usize, cols: usize) -> Result<Self> {
        check_radius(radius)?;
        if rows == 0 || cols == 0 {
            return Err(Error::config("shape", "matrix dimensions must be positive"));
        }
        Ok(Self::with_kind(SetKind::NuclearBall { radius, rows, cols }))
    }

    fn with_kind(kind: SetKind) -> Self {
        ConstraintSet {
            kind,
            tolerance: DEFAULT_FEASIBILITY_TOL,
            power_tol: DEFAULT_POWER_TOL,
            power_max_iter: DEFAULT_POWER_MAX_ITER,
        }
    }

    /// Power-iteration settings for the nuclear oracle.
    pub fn with_power_iteration(mut self, tol: f64, max_iter: usize) -> Self {
        self.power_tol = tol;
        self.power_max_iter = max_iter;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn radius(&self) -> f64 {
        match self.kind {
            SetKind::L1Ball { radius, .. } | SetKind::NuclearBall { radius, .. } => radius,
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Length of the flattened point representation.
    pub fn dim(&self) -> usize {
        match self.kind {
            SetKind::L1Ball { dim, .. } => dim,
            SetKind::NuclearBall { rows, cols, .. } => rows * cols,
        }
    }

    /// `argmin_{s ∈ C} ⟨s, g⟩`.
    pub fn lmo(&self, g: &[f64]) -> Result<Vector> {
        if g.len() != self.dim() {
            return Err(Error::dim(self.dim(), g.len()));
        }
        match self.kind {
            SetKind::L1Ball { radius, .. } => Ok(lmo_l1(g, radius)),
            SetKind::NuclearBall { radius, rows, cols } => {
                match lmo_nuclear_flat(g, rows, cols, radius, self.power_tol, self.power_max_iter) {
                    // Nearly tied top singular values stall power iteration.
                    Err(Error::NonConvergence { .. }) => Ok(lmo_nuclear_svd(g, rows, cols, radius)),
                    other => other,
                }
            }
        }
    }

    /// True iff the set's norm of `x` is at most `τ(1 + tol)`.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::dim(self.dim(), x.len()));
        }
        let norm = match self.kind {
            SetKind::L1Ball { .. } => norm1(x),
            SetKind::NuclearBall { rows, cols, .. } => nuclear_norm(rows, cols, x),
        };
        Ok(norm <= self.radius() * (1.0 + self.tolerance))
    }

    /// Euclidean (Frobenius) diameter.
    pub fn diameter(&self) -> f64 {
        2.0 * self.radius()
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::config("tau", "radius must be positive and finite"));
    }
    Ok(())
}

/// ℓ1-ball oracle: `−τ·sign(g_i)·e_i` for the first index maximizing `|g_i|`,
/// with `sign(0) = +1`.
pub fn lmo_l1(g: &[f64], radius: f64) -> Vector {
    let mut best = 0;
    let mut best_abs = f64::NEG_INFINITY;
    for (j, v) in g.iter().enumerate() {
        if v.abs() > best_abs {
            best_abs = v.abs();
            best = j;
        }
    }
    let sign = if g[best] < 0.0 { -1.0 } else { 1.0 };
    Vector::basis(g.len(), best, -radius * sign)
}

/// Nuclear-ball oracle `−τ u₁v₁ᵀ` via power iteration on `GᵀG`.
pub fn lmo_nuclear(
    g: &DenseMatrix,
    radius: f64,
    tol: f64,
    max_iter: usize,
) -> Result<DenseMatrix> {
    let flat = lmo_nuclear_flat(g.as_slice(), g.rows(), g.cols(), radius, tol, max_iter)?;
    DenseMatrix::from_row_major(g.rows(), g.cols(), flat.into_inner())
}

fn lmo_nuclear_flat(
    g: &[f64],
    rows: usize,
    cols: usize,
    radius: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vector> {
    if g.iter().all(|&v| v == 0.0) {
        return Ok(Vector::zeros(rows * cols));
    }
    let (u, v) = leading_singular_pair(g, rows, cols, tol, max_iter)?;
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        let ur = -radius * u[r];
        for c in 0..cols {
            out[r * cols + c] = ur * v[c];
        }
    }
    Ok(Vector::from_vec(out))
}

/// Exact oracle from a dense SVD.
fn lmo_nuclear_svd(g: &[f64], rows: usize, cols: usize, radius: f64) -> Vector {
    let svd = DMatrix::from_row_slice(rows, cols, g).svd(true, true);
    let k = svd.singular_values.imax();
    let u = svd.u.expect("requested").column(k).clone_owned();
    let v_t = svd.v_t.expect("requested").row(k).clone_owned();
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = -radius * u[r] * v_t[c];
        }
    }
    Vector::from_vec(out)
}

/// Leading left/right singular vectors of a nonzero `rows × cols` matrix.
pub(crate) fn leading_singular_pair(
    g: &[f64],
    rows: usize,
    cols: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED ^ ((rows as u64) << 20) ^ cols as u64);
    let mut v: Vec<f64> = (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v);
    if norm2(&mat_vec(g, rows, cols, &v)) == 0.0 {
        // Start vector in the null space; restart from the heaviest column.
        let mut col_sq = vec![0.0; cols];
        for r in 0..rows {
            for c in 0..cols {
                col_sq[c] += g[r * cols + c] * g[r * cols + c];
            }
        }
        let j = (0..cols)
            .max_by(|&a, &b| col_sq[a].total_cmp(&col_sq[b]))
            .unwrap_or(0);
        v = vec![0.0; cols];
        v[j] = 1.0;
    }

    let mut prev = f64::NAN;
    let mut change = f64::INFINITY;
    let mut converged = None;
    for k in 0..max_iter {
        let w = mat_vec(g, rows, cols, &v);
        let rq = norm2(&w).powi(2);
        if !power_step(g, rows, cols, &w, &mut v) {
            converged = Some(0);
            break;
        }
        if prev.is_finite() {
            change = (rq - prev).abs() / rq.max(f64::MIN_POSITIVE);
            if change <= tol {
                converged = Some(k + 1);
                break;
            }
        }
        prev = rq;
    }
    let Some(used) = converged else {
        return Err(Error::NonConvergence {
            iterations: max_iter,
            residual: change,
        });
    };
    // The quotient settles at twice the rate of the vector; polish `v`.
    for _ in 0..used.min(max_iter - used) {
        let w = mat_vec(g, rows, cols, &v);
        if !power_step(g, rows, cols, &w, &mut v) {
            break;
        }
    }
    let mut u = mat_vec(g, rows, cols, &v);
    normalize(&mut u);
    Ok((u, v))
}

/// `v ← GᵀGv/‖GᵀGv‖` given `w = Gv`; false when `GᵀGv = 0`.
fn power_step(g: &[f64], rows: usize, cols: usize, w: &[f64], v: &mut Vec<f64>) -> bool {
    let mut z = mat_t_vec(g, rows, cols, w);
    let zn = norm2(&z);
    if zn == 0.0 {
        return false;
    }
    z.iter_mut().for_each(|x| *x /= zn);
    *v = z;
    true
}

fn normalize(v: &mut [f64]) {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Singular values of a row-major matrix by dense SVD, descending.
pub fn singular_values(rows: usize, cols: usize, data: &[f64]) -> Vec<f64> {
    let m = DMatrix::from_row_slice(rows, cols, data);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn nuclear_norm(rows: usize, cols: usize, data: &[f64]) -> f64 {
    singular_values(rows, cols, data).iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dot_unchecked;
    use rand::Rng;
    use proptest::prelude::*;

    /// All 2n vertices ±τe_j, minimizing ⟨v, g⟩ by enumeration.
    fn brute_force_l1(g: &[f64], radius: f64) -> f64 {
        let n = g.len();
        (0..n)
            .flat_map(|j| [radius, -radius].map(|s| Vector::basis(n, j, s)))
            .map(|v| dot_unchecked(&v, g))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn lmo_l1_examples() {
        assert_eq!(lmo_l1(&[3.0, -1.0, 2.0], 2.0).as_slice(), &[-2.0, 0.0, 0.0]);
        assert_eq!(lmo_l1(&[0.0, 0.0, 0.0], 1.0).as_slice(), &[-1.0, 0.0, 0.0]);
        assert_eq!(lmo_l1(&[0.0, 0.0, -5.0], 1.0).as_slice(), &[0.0, 0.0, 1.0]);
        let g = [3.0, -1.0, 2.0];
        assert_eq!(dot_unchecked(&lmo_l1(&g, 2.0), &g), brute_force_l1(&g, 2.0));
    }

    #[test]
    fn lmo_l1_tie_prefers_smallest_index() {
        assert_eq!(lmo_l1(&[1.0, -1.0], 1.0).as_slice(), &[-1.0, 0.0]);
        assert_eq!(lmo_l1(&[-2.0, 2.0], 1.0).as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn lmo_nuclear_diag() {
        let g = DenseMatrix::from_row_major(2, 2, vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        let v = lmo_nuclear(&g, 1.0, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).unwrap();
        let expected = [-1.0, 0.0, 0.0, 0.0];
        for (a, b) in v.as_slice().iter().zip(expected) {
            assert!((a - b).abs() < 1e-8, "{:?}", v);
        }
    }

    #[test]
    fn stalled_power_iteration_falls_back_to_svd() {
        let g = DenseMatrix::from_row_major(2, 2, vec![1.0, 0.0, 0.0, 0.999]).unwrap();
        assert!(matches!(
            lmo_nuclear(&g, 1.0, 1e-14, 3),
            Err(Error::NonConvergence { iterations: 3, .. })
        ));
        let set = ConstraintSet::nuclear_ball(1.0, 2, 2).unwrap().with_power_iteration(1e-14, 3);
        let v = set.lmo(g.as_slice()).unwrap();
        let inner = dot_unchecked(&v, g.as_slice());
        assert!((inner + 1.0).abs() < 1e-12);
    }

    #[test]
    fn lmo_nuclear_zero() {
        let g = DenseMatrix::zeros(2, 2);
        let v = lmo_nuclear(&g, 1.0, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).unwrap();
        assert!(v.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn lmo_nuclear_random_3x3_matches_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = DenseMatrix::from_row_major(3, 3, data.clone()).unwrap();
        let v = lmo_nuclear(&g, 2.0, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).unwrap();
        let sigma1 = singular_values(3, 3, &data)[0];
        let obj = dot_unchecked(v.as_slice(), &data);
        assert!((obj + 2.0 * sigma1).abs() < 1e-8);
    }

    #[test]
    fn lmo_nuclear_non_convergence_reports_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<f64> = (0..400).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = DenseMatrix::from_row_major(20, 20, data).unwrap();
        match lmo_nuclear(&g, 1.0, 1e-300, 2) {
            Err(Error::NonConvergence { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual.is_finite());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn membership_examples() {
        let l1 = ConstraintSet::l1_ball(1.0, 2).unwrap();
        assert!(l1.contains(&[0.5, -0.4]).unwrap());
        assert!(!l1.contains(&[1.1, 0.0]).unwrap());
        assert!(l1.contains(&[1.0]).is_err());
        let nuc = ConstraintSet::nuclear_ball(3.0, 2, 2).unwrap();
        assert!(nuc.contains(&[3.0, 0.0, 0.0, 0.0]).unwrap());
        assert!(!nuc.contains(&[2.0, 0.0, 0.0, 2.0]).unwrap());
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(ConstraintSet::l1_ball(1.0, 3).unwrap().diameter(), 2.0);
        assert_eq!(ConstraintSet::l1_ball(5.0, 3).unwrap().diameter(), 10.0);
        assert_eq!(ConstraintSet::nuclear_ball(1.0, 2, 3).unwrap().diameter(), 2.0);
        // Vertex-pair oracle: max distance over ±τe_i pairs.
        let (tau, n) = (5.0, 3);
        let verts: Vec<Vector> = (0..n)
            .flat_map(|j| [tau, -tau].map(|s| Vector::basis(n, j, s)))
            .collect();
        let mut best: f64 = 0.0;
        for a in &verts {
            for b in &verts {
                best = best.max(norm2(&a.sub(b)));
            }
        }
        assert_eq!(best, 10.0);
    }

    #[test]
    fn rejects_bad_radius() {
        assert!(ConstraintSet::l1_ball(0.0, 3).is_err());
        assert!(ConstraintSet::nuclear_ball(-1.0, 2, 2).is_err());
    }

    proptest! {
        #[test]
        fn lmo_l1_beats_every_vertex(g in proptest::collection::vec(-10.0f64..10.0, 1..12), tau in 0.1f64..10.0) {
            let s = lmo_l1(&g, tau);
            prop_assert!(dot_unchecked(&s, &g) <= brute_force_l1(&g, tau));
            prop_assert_eq!(s.iter().filter(|v| **v != 0.0).count(), 1);
            prop_assert!(ConstraintSet::l1_ball(tau, g.len()).unwrap().contains(&s).unwrap());
        }

        #[test]
        fn lmo_l1_positively_homogeneous(g in proptest::collection::vec(-10.0f64..10.0, 1..12), c in 1e-3f64..1e3) {
            let scaled: Vec<f64> = g.iter().map(|v| c * v).collect();
            prop_assert_eq!(lmo_l1(&g, 1.0), lmo_l1(&scaled, 1.0));
        }
    }
}

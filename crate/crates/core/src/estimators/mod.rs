//! Gradient estimators `m^t ≈ ∇f(x^t)` with their own memory and random
//! stream.
//!
//! Every update is split into a draw (the random choice for this step) and a
//! deterministic transition [`Estimator::step_with`]. [`Estimator::step`]
//! samples a draw from the internal stream; [`Estimator::outcomes`] lists
//! every possible draw with its probability, which lets tests compute exact
//! conditional expectations through the same code path.
//!
//! Stream order per step: the Bernoulli draw (L-SVRG, SARAH) comes first,
//! then the batch or coordinate draw. SARAH skips the batch draw on a
//! refresh.

mod params;
mod recursion;

pub use params::{table1_params, EstimatorParams};
pub use recursion::{
    conditional_mean, enumerate_step, measure_recursion, recursion_lipschitz, RecursionReport, RecursionStep,
    ENUMERATION_LIMIT,
};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::Vector;
use crate::problems::{logistic_dloss, Problem};
use crate::schedules::Schedule;

/// Cap on enumerated outcomes per step.
pub const MAX_OUTCOMES: usize = 200_000;

#[derive(Clone, Debug, PartialEq)]
pub enum EstimatorKind {
    Full,
    Sag { batch: usize },
    Saga { batch: usize },
    LSvrg { batch: usize, p: f64 },
    Sarah { batch: usize, p: f64 },
    Sega,
    /// `at_current` evaluates the sampled partial at `x^t` instead of `x^{t−1}`.
    Jaguar { at_current: bool },
    Zoja { tau_zo: f64 },
    /// Momentum weights come from a Heavy-Ball schedule.
    HeavyBall { batch: usize, momentum: Schedule },
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Full => "full",
            EstimatorKind::Sag { .. } => "sag",
            EstimatorKind::Saga { .. } => "saga",
            EstimatorKind::LSvrg { .. } => "lsvrg",
            EstimatorKind::Sarah { .. } => "sarah",
            EstimatorKind::Sega => "sega",
            EstimatorKind::Jaguar { .. } => "jaguar",
            EstimatorKind::Zoja { .. } => "zoja",
            EstimatorKind::HeavyBall { .. } => "heavyball",
        }
    }

    pub fn batch(&self) -> Option<usize> {
        match *self {
            EstimatorKind::Sag { batch }
            | EstimatorKind::Saga { batch }
            | EstimatorKind::LSvrg { batch, .. }
            | EstimatorKind::Sarah { batch, .. }
            | EstimatorKind::HeavyBall { batch, .. } => Some(batch),
            _ => None,
        }
    }

    pub fn validate(&self, components: usize) -> Result<()> {
        if let Some(b) = self.batch() {
            if b == 0 || b > components {
                return Err(Error::config(
                    "batch",
                    format!("batch size {b} outside [1, {components}]"),
                ));
            }
        }
        match *self {
            EstimatorKind::LSvrg { p, .. } if !(p > 0.0 && p <= 1.0) => {
                Err(Error::config("p", "must lie in ]0, 1]"))
            }
            EstimatorKind::Sarah { p, .. } if !(0.0..=1.0).contains(&p) => {
                Err(Error::config("p", "must lie in [0, 1]"))
            }
            EstimatorKind::Zoja { tau_zo } if !(tau_zo > 0.0 && tau_zo.is_finite()) => {
                Err(Error::config("tau_zo", "must be positive"))
            }
            EstimatorKind::HeavyBall { momentum, .. } if !momentum.is_heavy_ball() => Err(
                Error::config("schedule", "heavy ball needs a heavy-ball momentum schedule"),
            ),
            _ => Ok(()),
        }
    }
}

/// One step's random choice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Draw {
    None,
    Batch(Vec<usize>),
    Coordinate(usize),
    /// Bernoulli(p) outcome followed by a batch (empty when unused).
    Refresh { refresh: bool, batch: Vec<usize> },
}

#[derive(Clone, Debug)]
pub struct Estimator {
    kind: EstimatorKind,
    dim: usize,
    components: usize,
    estimate: Vec<f64>,
    /// SAGA: `y_i`, row-major `m × n`.
    table: Vec<f64>,
    table_mean: Vec<f64>,
    /// SAG dual variable `α ∈ R^m`.
    dual: Vec<f64>,
    /// L-SVRG anchor `w` and `∇f(w)`.
    anchor: Vec<f64>,
    anchor_grad: Vec<f64>,
    /// SEGA memory `h`.
    memory: Vec<f64>,
    rng: ChaCha8Rng,
}

impl Estimator {
    /// Builds the state at `x⁰` and returns the samples charged.
    pub fn init(kind: EstimatorKind, problem: &Problem, x0: &[f64], seed: u64) -> Result<(Self, u64)> {
        kind.validate(problem.components())?;
        let n = problem.dim();
        let m = problem.components();
        if x0.len() != n {
            return Err(Error::dim(n, x0.len()));
        }
        let mut est = Estimator {
            kind: kind.clone(),
            dim: n,
            components: m,
            estimate: Vec::new(),
            table: Vec::new(),
            table_mean: Vec::new(),
            dual: Vec::new(),
            anchor: Vec::new(),
            anchor_grad: Vec::new(),
            memory: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        let samples = match kind {
            EstimatorKind::Full | EstimatorKind::Sarah { .. } | EstimatorKind::Jaguar { .. } => {
                est.estimate = problem.grad(x0)?.into_inner();
                m as u64
            }
            EstimatorKind::Saga { .. } => {
                est.table = vec![0.0; m * n];
                est.table_mean = vec![0.0; n];
                for i in 0..m {
                    let row = &mut est.table[i * n..(i + 1) * n];
                    problem.add_component_grad(i, x0, 1.0, row);
                    for (a, b) in est.table_mean.iter_mut().zip(row.iter()) {
                        *a += b / m as f64;
                    }
                }
                est.estimate = est.table_mean.clone();
                m as u64
            }
            EstimatorKind::LSvrg { .. } => {
                est.anchor = x0.to_vec();
                est.anchor_grad = problem.grad(x0)?.into_inner();
                est.estimate = est.anchor_grad.clone();
                m as u64
            }
            EstimatorKind::Sega => {
                est.memory = problem.grad(x0)?.into_inner();
                est.estimate = est.memory.clone();
                m as u64
            }
            EstimatorKind::Zoja { tau_zo } => {
                let f0 = problem.value(x0)?;
                let mut probe = x0.to_vec();
                est.estimate = (0..n)
                    .map(|j| {
                        probe[j] += tau_zo;
                        let v = problem.value(&probe);
                        probe[j] = x0[j];
                        v.map(|fj| (fj - f0) / tau_zo)
                    })
                    .collect::<Result<_>>()?;
                n as u64 + 1
            }
            EstimatorKind::HeavyBall { .. } => {
                est.estimate = vec![0.0; n];
                0
            }
            EstimatorKind::Sag { .. } => {
                let (data, labels) = problem.logistic_parts().ok_or_else(|| {
                    Error::config("estimator", "sag needs a logistic problem of the form f̃(Ãx)")
                })?;
                est.dual = (0..m)
                    .map(|i| logistic_dloss(labels[i], data.row_dot(i, x0)) / m as f64)
                    .collect();
                est.estimate = data.transpose_mul_vec(&est.dual)?.into_inner();
                m as u64
            }
        };
        Ok((est, samples))
    }

    pub fn kind(&self) -> &EstimatorKind {
        &self.kind
    }

    /// Current `m^t`.
    pub fn estimate(&self) -> &[f64] {
        &self.estimate
    }

    pub fn dual(&self) -> &[f64] {
        &self.dual
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn memory(&self) -> &[f64] {
        &self.memory
    }

    pub fn table_row(&self, i: usize) -> &[f64] {
        &self.table[i * self.dim..(i + 1) * self.dim]
    }

    /// Whether the step size is measured through `Ã` (SAG).
    pub fn uses_geometry_map(&self) -> bool {
        matches!(self.kind, EstimatorKind::Sag { .. })
    }

    /// Samples this step's draw from the internal stream.
    pub fn sample_draw(&mut self) -> Draw {
        let m = self.components;
        let n = self.dim;
        let rng = &mut self.rng;
        let batch = |rng: &mut ChaCha8Rng, b: usize| {
            let mut v = index::sample(rng, m, b).into_vec();
            v.sort_unstable();
            v
        };
        match self.kind {
            EstimatorKind::Full => Draw::None,
            EstimatorKind::Sag { batch: b }
            | EstimatorKind::Saga { batch: b }
            | EstimatorKind::HeavyBall { batch: b, .. } => Draw::Batch(batch(rng, b)),
            EstimatorKind::LSvrg { batch: b, p } => {
                let refresh = rng.gen_bool(p);
                Draw::Refresh { refresh, batch: batch(rng, b) }
            }
            EstimatorKind::Sarah { batch: b, p } => {
                let refresh = rng.gen_bool(p);
                let batch = if refresh { Vec::new() } else { batch(rng, b) };
                Draw::Refresh { refresh, batch }
            }
            EstimatorKind::Sega | EstimatorKind::Jaguar { .. } | EstimatorKind::Zoja { .. } => {
                Draw::Coordinate(rng.gen_range(0..n))
            }
        }
    }

    /// Every draw with its probability, in a fixed order.
    pub fn outcomes(&self) -> Result<Vec<(f64, Draw)>> {
        let m = self.components;
        let n = self.dim;
        let subsets = |b: usize| -> Result<Vec<Vec<usize>>> {
            let count = binomial(m, b);
            if count > MAX_OUTCOMES as f64 {
                return Err(Error::TooLarge(format!("C({m}, {b}) batches")));
            }
            Ok(combinations(m, b))
        };
        Ok(match self.kind {
            EstimatorKind::Full => vec![(1.0, Draw::None)],
            EstimatorKind::Sag { batch: b }
            | EstimatorKind::Saga { batch: b }
            | EstimatorKind::HeavyBall { batch: b, .. } => {
                let all = subsets(b)?;
                let pr = 1.0 / all.len() as f64;
                all.into_iter().map(|s| (pr, Draw::Batch(s))).collect()
            }
            EstimatorKind::LSvrg { batch: b, p } => {
                let all = subsets(b)?;
                let pr = 1.0 / all.len() as f64;
                let mut out = Vec::with_capacity(2 * all.len());
                for refresh in [true, false] {
                    let w = if refresh { p } else { 1.0 - p };
                    if w > 0.0 {
                        out.extend(
                            all.iter()
                                .map(|s| (w * pr, Draw::Refresh { refresh, batch: s.clone() })),
                        );
                    }
                }
                out
            }
            EstimatorKind::Sarah { batch: b, p } => {
                let mut out = Vec::new();
                if p > 0.0 {
                    out.push((p, Draw::Refresh { refresh: true, batch: Vec::new() }));
                }
                if p < 1.0 {
                    let all = subsets(b)?;
                    let pr = (1.0 - p) / all.len() as f64;
                    out.extend(
                        all.into_iter()
                            .map(|s| (pr, Draw::Refresh { refresh: false, batch: s })),
                    );
                }
                out
            }
            EstimatorKind::Sega | EstimatorKind::Jaguar { .. } | EstimatorKind::Zoja { .. } => {
                if n > MAX_OUTCOMES {
                    return Err(Error::TooLarge(format!("{n} coordinates")));
                }
                (0..n).map(|j| (1.0 / n as f64, Draw::Coordinate(j))).collect()
            }
        })
    }

    /// Samples a draw and applies it; returns the samples charged.
    pub fn step(&mut self, problem: &Problem, x: &[f64], x_prev: &[f64], t: usize) -> Result<u64> {
        let draw = self.sample_draw();
        self.step_with(problem, x, x_prev, t, &draw)
    }

    /// Deterministic transition to `m^t` for a given draw.
    pub fn step_with(
        &mut self,
        problem: &Problem,
        x: &[f64],
        x_prev: &[f64],
        t: usize,
        draw: &Draw,
    ) -> Result<u64> {
        let n = self.dim;
        let m = self.components;
        if x.len() != n {
            return Err(Error::dim(n, x.len()));
        }
        if x_prev.len() != n {
            return Err(Error::dim(n, x_prev.len()));
        }
        let bad_draw = || Error::Invariant(format!("draw {draw:?} does not fit {}", self.kind.name()));
        match (&self.kind, draw) {
            (EstimatorKind::Full, Draw::None) => {
                self.estimate = problem.grad(x)?.into_inner();
                Ok(m as u64)
            }
            (EstimatorKind::Saga { .. }, Draw::Batch(s)) => {
                check_batch(s, m)?;
                let scale = 1.0 / s.len() as f64;
                let mut est = self.table_mean.clone();
                let mut g = vec![0.0; n];
                for &i in s {
                    g.iter_mut().for_each(|v| *v = 0.0);
                    problem.add_component_grad(i, x, 1.0, &mut g);
                    let y = &mut self.table[i * n..(i + 1) * n];
                    for (((e, mean), yj), gj) in est.iter_mut().zip(&mut self.table_mean).zip(y).zip(&g) {
                        let d = gj - *yj;
                        *e += scale * d;
                        *mean += d / m as f64;
                        *yj = *gj;
                    }
                }
                self.estimate = est;
                Ok(s.len() as u64)
            }
            (EstimatorKind::LSvrg { .. }, Draw::Refresh { refresh, batch: s }) => {
                check_batch(s, m)?;
                let mut samples = s.len() as u64;
                if *refresh {
                    self.anchor = x_prev.to_vec();
                    self.anchor_grad = problem.grad(x_prev)?.into_inner();
                    samples += m as u64;
                }
                let scale = 1.0 / s.len() as f64;
                let mut est = self.anchor_grad.clone();
                for &i in s {
                    problem.add_component_grad(i, x, scale, &mut est);
                    problem.add_component_grad(i, &self.anchor, -scale, &mut est);
                }
                self.estimate = est;
                Ok(samples)
            }
            (EstimatorKind::Sarah { .. }, Draw::Refresh { refresh: true, .. }) => {
                self.estimate = problem.grad(x)?.into_inner();
                Ok(m as u64)
            }
            (EstimatorKind::Sarah { .. }, Draw::Refresh { refresh: false, batch: s }) => {
                check_batch(s, m)?;
                let scale = 1.0 / s.len() as f64;
                for &i in s {
                    problem.add_component_grad(i, x, scale, &mut self.estimate);
                    problem.add_component_grad(i, x_prev, -scale, &mut self.estimate);
                }
                Ok(s.len() as u64)
            }
            (EstimatorKind::Sega, &Draw::Coordinate(j)) => {
                check_coordinate(j, n)?;
                let g = problem.partial(j, x)?;
                let mut est = self.memory.clone();
                est[j] += n as f64 * (g - self.memory[j]);
                self.memory[j] = g;
                self.estimate = est;
                Ok(1)
            }
            (&EstimatorKind::Jaguar { at_current }, &Draw::Coordinate(j)) => {
                check_coordinate(j, n)?;
                let point = if at_current { x } else { x_prev };
                self.estimate[j] = problem.partial(j, point)?;
                Ok(1)
            }
            (&EstimatorKind::Zoja { tau_zo }, &Draw::Coordinate(j)) => {
                check_coordinate(j, n)?;
                self.estimate[j] = forward_difference(problem, x_prev, j, tau_zo)?;
                Ok(2)
            }
            (EstimatorKind::HeavyBall { momentum, .. }, Draw::Batch(s)) => {
                check_batch(s, m)?;
                let rho = momentum.momentum(t)?;
                let scale = rho / s.len() as f64;
                self.estimate.iter_mut().for_each(|v| *v *= 1.0 - rho);
                for &i in s {
                    problem.add_component_grad(i, x, scale, &mut self.estimate);
                }
                Ok(s.len() as u64)
            }
            (EstimatorKind::Sag { .. }, Draw::Batch(s)) => {
                check_batch(s, m)?;
                let (data, labels) = problem.logistic_parts().ok_or_else(bad_draw)?;
                for &i in s {
                    let fresh = logistic_dloss(labels[i], data.row_dot(i, x)) / m as f64;
                    data.add_row_into(i, fresh - self.dual[i], &mut self.estimate);
                    self.dual[i] = fresh;
                }
                Ok(s.len() as u64)
            }
            _ => Err(bad_draw()),
        }
    }

    /// `Δ^t` in the space where the estimator's recursion is stated: the
    /// dual space `α − ∇f̃(Ãx)` for SAG, otherwise `m − ∇f(x)`.
    pub fn error_vector(&self, problem: &Problem, x: &[f64]) -> Result<Vec<f64>> {
        if self.uses_geometry_map() {
            let (data, labels) = problem
                .logistic_parts()
                .ok_or_else(|| Error::Invariant("sag state on a non-logistic problem".into()))?;
            let m = self.components as f64;
            Ok((0..self.components)
                .map(|i| self.dual[i] - logistic_dloss(labels[i], data.row_dot(i, x)) / m)
                .collect())
        } else {
            let g = problem.grad(x)?;
            Ok(self.estimate.iter().zip(g.iter()).map(|(a, b)| a - b).collect())
        }
    }

    pub fn estimate_vector(&self) -> Vector {
        Vector::from_vec(self.estimate.clone())
    }
}

/// `(f(x + τe_j) − f(x))/τ`.
pub fn forward_difference(problem: &Problem, x: &[f64], j: usize, tau: f64) -> Result<f64> {
    let mut probe = x.to_vec();
    probe[j] += tau;
    Ok((problem.value(&probe)? - problem.value(x)?) / tau)
}

fn check_batch(s: &[usize], m: usize) -> Result<()> {
    if s.is_empty() || s.windows(2).any(|w| w[0] >= w[1]) || s.iter().any(|&i| i >= m) {
        return Err(Error::Invariant(format!("malformed batch {s:?} for m = {m}")));
    }
    Ok(())
}

fn check_coordinate(j: usize, n: usize) -> Result<()> {
    if j >= n {
        return Err(Error::Invariant(format!("coordinate {j} out of range (n = {n})")));
    }
    Ok(())
}

fn binomial(m: usize, b: usize) -> f64 {
    (0..b).fold(1.0, |acc, k| acc * (m - k) as f64 / (k + 1) as f64)
}

/// All `b`-subsets of `0..m` in lexicographic order.
fn combinations(m: usize, b: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if b > m {
        return out;
    }
    let mut cur: Vec<usize> = (0..b).collect();
    loop {
        out.push(cur.clone());
        let mut k = b;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if cur[k] < m - b + k {
                break;
            }
        }
        cur[k] += 1;
        for j in k + 1..b {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::ObservedEntry;

    fn two_components() -> Problem {
        // ∇f₁ = (1,0), ∇f₂ = (0,1) at x = (1,1) with centers (0,1) and (1,0).
        Problem::weighted_quadratic(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        )
        .unwrap()
    }

    #[test]
    fn combinations_enumerate_all_subsets() {
        let c = combinations(4, 2);
        assert_eq!(c.len(), 6);
        assert_eq!(c[0], vec![0, 1]);
        assert_eq!(c[5], vec![2, 3]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(binomial(4, 2), 6.0);
    }

    #[test]
    fn heavy_ball_starts_at_zero() {
        let p = Problem::quadratic(vec![1.0, 2.0]).unwrap();
        let kind = EstimatorKind::HeavyBall { batch: 1, momentum: Schedule::HeavyBallNonconvex };
        let (e, samples) = Estimator::init(kind, &p, &[0.5, 0.5], 0).unwrap();
        assert_eq!(e.estimate(), &[0.0, 0.0]);
        assert_eq!(samples, 0);
    }

    #[test]
    fn saga_init_fills_table() {
        let p = Problem::quadratic(vec![0.0, 0.0]).unwrap();
        let (e, samples) = Estimator::init(EstimatorKind::Saga { batch: 1 }, &p, &[1.0, 2.0], 0).unwrap();
        assert_eq!(e.table_row(0), &[1.0, 2.0]);
        assert_eq!(e.estimate(), &[1.0, 2.0]);
        assert_eq!(samples, 1);
    }

    #[test]
    fn zoja_init_forward_differences() {
        // x² = 2·(½(x − 0)²) with weight 2.
        let p = Problem::weighted_quadratic(vec![vec![0.0]], vec![vec![2.0]]).unwrap();
        let (e, samples) = Estimator::init(EstimatorKind::Zoja { tau_zo: 0.1 }, &p, &[1.0], 0).unwrap();
        assert!((e.estimate()[0] - 2.1).abs() < 1e-12);
        assert_eq!(samples, 2);
    }

    #[test]
    fn batch_larger_than_components_is_rejected() {
        let p = two_components();
        let err = Estimator::init(EstimatorKind::Saga { batch: 3 }, &p, &[0.0, 0.0], 0).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
        let sag = Estimator::init(EstimatorKind::Sag { batch: 1 }, &p, &[0.0, 0.0], 0);
        assert!(sag.is_err());
    }

    #[test]
    fn saga_step_example() {
        let p = two_components();
        let x = [1.0, 1.0];
        let (mut e, _) = Estimator::init(EstimatorKind::Saga { batch: 1 }, &p, &x, 0).unwrap();
        e.table.iter_mut().for_each(|v| *v = 0.0);
        e.table_mean = vec![0.0, 0.0];
        let base = e.clone();
        let samples = e.step_with(&p, &x, &x, 1, &Draw::Batch(vec![0])).unwrap();
        assert_eq!(e.estimate(), &[1.0, 0.0]);
        assert_eq!(samples, 1);
        let mean = conditional_mean(&base, &p, &x, &x, 1).unwrap();
        assert_eq!(mean, vec![0.5, 0.5]);
    }

    #[test]
    fn sega_step_example() {
        // ∇f(x) = x − c = (1, 2) at x = 0 with c = (−1, −2).
        let p = Problem::quadratic(vec![-1.0, -2.0]).unwrap();
        let x = [0.0, 0.0];
        let (mut e, _) = Estimator::init(EstimatorKind::Sega, &p, &x, 0).unwrap();
        e.memory = vec![0.0, 0.0];
        let base = e.clone();
        e.step_with(&p, &x, &x, 1, &Draw::Coordinate(0)).unwrap();
        assert_eq!(e.estimate(), &[2.0, 0.0]);
        assert_eq!(e.memory(), &[1.0, 0.0]);
        assert_eq!(conditional_mean(&base, &p, &x, &x, 1).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn sarah_with_p_one_is_exact() {
        let p = two_components();
        let (mut e, _) =
            Estimator::init(EstimatorKind::Sarah { batch: 1, p: 1.0 }, &p, &[0.0, 0.0], 3).unwrap();
        let x = [0.3, -0.2];
        let samples = e.step(&p, &x, &[0.0, 0.0], 1).unwrap();
        assert_eq!(e.estimate(), p.grad(&x).unwrap().as_slice());
        assert_eq!(samples, 2);
    }

    #[test]
    fn heavy_ball_convex_combination() {
        // Component gradient at x is (0, 2).
        let p = Problem::quadratic(vec![0.0, -2.0]).unwrap();
        let kind = EstimatorKind::HeavyBall { batch: 1, momentum: Schedule::HeavyBallNonconvex };
        let (mut e, _) = Estimator::init(kind, &p, &[0.0, 0.0], 0).unwrap();
        e.estimate = vec![2.0, 0.0];
        // ρ̃_3 = 1/√4 = 0.5.
        e.step_with(&p, &[0.0, 0.0], &[0.0, 0.0], 3, &Draw::Batch(vec![0])).unwrap();
        assert_eq!(e.estimate(), &[1.0, 1.0]);
    }

    #[test]
    fn full_batch_saga_and_lsvrg_are_exact() {
        let p = two_components();
        let x0 = [0.2, 0.1];
        let x1 = [-0.4, 0.3];
        for kind in [EstimatorKind::Saga { batch: 2 }, EstimatorKind::LSvrg { batch: 2, p: 0.3 }] {
            let (mut e, _) = Estimator::init(kind, &p, &x0, 9).unwrap();
            e.step(&p, &x1, &x0, 1).unwrap();
            let g = p.grad(&x1).unwrap();
            for (a, b) in e.estimate().iter().zip(g.iter()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sag_tracks_dual_gradient() {
        use crate::numerics::SparseRowMatrix;
        let a = SparseRowMatrix::from_dense(3, 2, &[1.0, 0.5, -0.3, 2.0, 0.0, 1.0]).unwrap();
        let p = Problem::logistic(a, vec![1.0, -1.0, 1.0]).unwrap();
        let x0 = [0.1, -0.2];
        let (mut e, samples) = Estimator::init(EstimatorKind::Sag { batch: 3 }, &p, &x0, 1).unwrap();
        assert_eq!(samples, 3);
        let g0 = p.grad(&x0).unwrap();
        for (a, b) in e.estimate().iter().zip(g0.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        let x1 = [0.4, 0.3];
        e.step(&p, &x1, &x0, 1).unwrap();
        assert!(e.error_vector(&p, &x1).unwrap().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn outcomes_probabilities_sum_to_one() {
        let p = Problem::weighted_quadratic(
            (0..4).map(|i| vec![i as f64, 0.0, 1.0]).collect(),
            vec![vec![1.0; 3]; 4],
        )
        .unwrap();
        let kinds = [
            EstimatorKind::Full,
            EstimatorKind::Saga { batch: 2 },
            EstimatorKind::LSvrg { batch: 2, p: 0.25 },
            EstimatorKind::Sarah { batch: 2, p: 0.25 },
            EstimatorKind::Sega,
            EstimatorKind::Jaguar { at_current: false },
            EstimatorKind::Zoja { tau_zo: 0.01 },
            EstimatorKind::HeavyBall { batch: 2, momentum: Schedule::HeavyBallQuasar { rho: 1.0 } },
        ];
        for kind in kinds {
            let (e, _) = Estimator::init(kind.clone(), &p, &[0.0; 3], 0).unwrap();
            let total: f64 = e.outcomes().unwrap().iter().map(|(w, _)| w).sum();
            assert!((total - 1.0).abs() < 1e-14, "{kind:?}");
        }
    }

    #[test]
    fn draws_are_reproducible_and_seed_dependent() {
        let entries = (0..6)
            .map(|k| ObservedEntry { row: k / 3, col: k % 3, target: k as f64 })
            .collect();
        let p = Problem::completion(2, 3, entries).unwrap();
        let kind = EstimatorKind::LSvrg { batch: 3, p: 0.5 };
        let draws = |seed| {
            let (mut e, _) = Estimator::init(kind.clone(), &p, &[0.0; 6], seed).unwrap();
            (0..20).map(|_| e.sample_draw()).collect::<Vec<_>>()
        };
        assert_eq!(draws(4), draws(4));
        assert_ne!(draws(4), draws(5));
    }

    #[test]
    fn mismatched_draw_is_an_invariant_error() {
        let p = two_components();
        let (mut e, _) = Estimator::init(EstimatorKind::Sega, &p, &[0.0, 0.0], 0).unwrap();
        let err = e.step_with(&p, &[0.0, 0.0], &[0.0, 0.0], 1, &Draw::None).unwrap_err();
        assert!(matches!(err, Error::Invariant(_)));
        assert!(e.step_with(&p, &[0.0], &[0.0, 0.0], 1, &Draw::Coordinate(0)).is_err());
    }
}

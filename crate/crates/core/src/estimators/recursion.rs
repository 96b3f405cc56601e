//! Exact conditional expectations over all draws of one estimator step, and
//! the empirical check of the error recursion along a solver trajectory.

use super::{table1_params, Draw, Estimator, EstimatorKind, EstimatorParams};
use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::parallel::{map_ordered, Execution};
use crate::problems::Problem;
use crate::solver::{Method, Run, SolverConfig};

/// Largest component count and dimension accepted for enumeration.
pub const ENUMERATION_LIMIT: usize = 6;

/// Every successor state of `est` with its probability.
pub fn enumerate_step(
    est: &Estimator,
    problem: &Problem,
    x: &[f64],
    x_prev: &[f64],
    t: usize,
) -> Result<Vec<(f64, Estimator)>> {
    let outcomes = est.outcomes()?;
    map_ordered(Execution::default(), &outcomes, |(w, draw): &(f64, Draw)| {
        let mut next = est.clone();
        next.step_with(problem, x, x_prev, t, draw)?;
        Ok((*w, next))
    })
    .into_iter()
    .collect()
}

/// `E_{t−1}[m^t]` by enumeration.
pub fn conditional_mean(
    est: &Estimator,
    problem: &Problem,
    x: &[f64],
    x_prev: &[f64],
    t: usize,
) -> Result<Vec<f64>> {
    let mut mean = vec![0.0; x.len()];
    for (w, next) in enumerate_step(est, problem, x, x_prev, t)? {
        for (a, b) in mean.iter_mut().zip(next.estimate()) {
            *a += w * b;
        }
    }
    Ok(mean)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecursionStep {
    pub t: usize,
    /// `E_{t−1}‖Δ^t‖²`.
    pub lhs: f64,
    /// Right-hand side of the error recursion.
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct RecursionReport {
    pub estimator: String,
    pub params: EstimatorParams,
    pub lipschitz: f64,
    pub diameter: f64,
    pub steps: Vec<RecursionStep>,
}

impl RecursionReport {
    pub fn max_ratio(&self) -> f64 {
        self.steps.iter().map(|s| s.ratio).fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.steps.iter().all(|s| s.lhs <= s.rhs * (1.0 + tol))
    }
}

/// Smoothness constant matching how each estimator's recursion is stated:
/// per-component for the finite-sum variance-reduced estimators, the dual
/// objective `f̃` for SAG, and `∇f` otherwise.
pub fn recursion_lipschitz(kind: &EstimatorKind, problem: &Problem) -> f64 {
    match kind {
        EstimatorKind::Saga { .. } | EstimatorKind::LSvrg { .. } | EstimatorKind::Sarah { .. } => {
            problem.component_lipschitz_bound()
        }
        EstimatorKind::Sag { .. } => 1.0 / (4.0 * problem.components() as f64),
        _ => problem.lipschitz_bound(),
    }
}

/// `σ_t²` for the estimators whose recursion carries one (zero otherwise).
fn sigma_sq(est: &Estimator, problem: &Problem, x: &[f64]) -> Result<f64> {
    Ok(match est.kind() {
        EstimatorKind::Saga { .. } => {
            let m = problem.components();
            let mut total = 0.0;
            for j in 0..m {
                let g = problem.component_grad(j, x)?;
                total += g.iter().zip(est.table_row(j)).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            }
            total / m as f64
        }
        EstimatorKind::LSvrg { .. } => {
            x.iter().zip(est.anchor()).map(|(a, b)| (a - b).powi(2)).sum()
        }
        EstimatorKind::Sega => {
            let g = problem.grad(x)?;
            g.iter().zip(est.memory()).map(|(a, b)| (a - b).powi(2)).sum()
        }
        _ => 0.0,
    })
}

/// Exact variance of the Heavy-Ball inner minibatch gradient at `x`.
fn minibatch_variance(batch: usize, problem: &Problem, x: &[f64]) -> Result<f64> {
    let g = problem.grad(x)?;
    let subsets = super::combinations(problem.components(), batch);
    let w = 1.0 / subsets.len() as f64;
    let mut var = 0.0;
    for s in subsets {
        let mut gs = vec![0.0; x.len()];
        for &i in &s {
            problem.add_component_grad(i, x, 1.0 / batch as f64, &mut gs);
        }
        var += w * gs.iter().zip(g.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    Ok(var)
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// Follows a BSFW trajectory for `steps` iterations and, before each
/// estimator update at `t ≥ 1`, compares the exact `E_{t−1}‖Δ^t‖²` with
/// `(1−ρ1)‖Δ^{t−1}‖² + Aσ²_{t−1} + η²_{t−1}BD² + C`.
pub fn measure_recursion(
    problem: &Problem,
    set: &ConstraintSet,
    cfg: &SolverConfig,
    steps: usize,
) -> Result<RecursionReport> {
    if problem.components() > ENUMERATION_LIMIT || problem.dim() > ENUMERATION_LIMIT {
        return Err(Error::TooLarge(format!(
            "m = {}, n = {} (limit {ENUMERATION_LIMIT})",
            problem.components(),
            problem.dim()
        )));
    }
    if cfg.horizon < steps + 1 {
        return Err(Error::config("T", "horizon must exceed the number of measured steps"));
    }
    let kind = cfg.estimator.clone();
    let lipschitz = recursion_lipschitz(&kind, problem);
    let params = table1_params(&kind, problem.dim(), problem.components(), lipschitz, cfg.horizon)?;
    let mut run = Run::start(problem, set, cfg, Method::Bsfw)?;
    let diameter = run.diameter;

    let mut prev_delta = norm_sq(&run.estimator.error_vector(problem, &run.x)?);
    let mut prev_sigma = sigma_sq(&run.estimator, problem, &run.x)?;
    let mut out = Vec::with_capacity(steps);
    run.iterate()?;
    for t in 1..=steps {
        let successors = enumerate_step(&run.estimator, problem, &run.x, &run.x_prev, t)?;
        let mut lhs = 0.0;
        for (w, next) in &successors {
            lhs += w * norm_sq(&next.error_vector(problem, &run.x)?);
        }
        let sigma_term = match &kind {
            EstimatorKind::HeavyBall { batch, momentum } => {
                let rho = momentum.momentum(t)?;
                params.a * rho * rho * minibatch_variance(*batch, problem, &run.x)?
            }
            _ => params.a * prev_sigma,
        };
        let eta_prev = cfg.schedule.eta(t - 1)?;
        let rhs = (1.0 - params.rho1) * prev_delta
            + sigma_term
            + eta_prev * eta_prev * params.b * diameter * diameter
            + params.c;
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        out.push(RecursionStep { t, lhs, rhs, ratio });

        run.iterate()?;
        let x_t = run.x_prev.clone();
        prev_delta = norm_sq(&run.estimator.error_vector(problem, &x_t)?);
        prev_sigma = sigma_sq(&run.estimator, problem, &x_t)?;
    }
    Ok(RecursionReport {
        estimator: kind.name().to_string(),
        params,
        lipschitz,
        diameter,
        steps: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::Schedule;

    fn quad(m: usize, n: usize) -> Problem {
        let centers = (0..m)
            .map(|i| (0..n).map(|j| ((i * 7 + j * 3) % 5) as f64 * 0.4 - 0.8).collect())
            .collect();
        let weights = (0..m)
            .map(|i| (0..n).map(|j| 0.5 + ((i + 2 * j) % 3) as f64 * 0.5).collect())
            .collect();
        Problem::weighted_quadratic(centers, weights).unwrap()
    }

    fn cfg(kind: EstimatorKind) -> SolverConfig {
        let mut c = SolverConfig::new(kind, Schedule::StochNonconvexAnytime, 30);
        c.seed = 3;
        c
    }

    #[test]
    fn full_gradient_has_zero_error() {
        let p = quad(3, 2);
        let set = ConstraintSet::l1_ball(1.0, 2).unwrap();
        let r = measure_recursion(&p, &set, &cfg(EstimatorKind::Full), 5).unwrap();
        assert!(r.steps.iter().all(|s| s.lhs == 0.0));
        assert!(r.passes(1e-9));
    }

    #[test]
    fn jaguar_one_step() {
        let p = quad(1, 2);
        let set = ConstraintSet::l1_ball(1.0, 2).unwrap();
        let r = measure_recursion(&p, &set, &cfg(EstimatorKind::Jaguar { at_current: false }), 1).unwrap();
        assert_eq!(r.steps.len(), 1);
        assert!(r.max_ratio() <= 1.0 + 1e-9);
    }

    #[test]
    fn saga_three_components() {
        let p = quad(3, 2);
        let set = ConstraintSet::l1_ball(1.0, 2).unwrap();
        let r = measure_recursion(&p, &set, &cfg(EstimatorKind::Saga { batch: 1 }), 10).unwrap();
        assert!(r.passes(1e-9), "{:?}", r.steps);
    }

    #[test]
    fn too_large_is_rejected() {
        let p = quad(7, 2);
        let set = ConstraintSet::l1_ball(1.0, 2).unwrap();
        let err = measure_recursion(&p, &set, &cfg(EstimatorKind::Full), 1).unwrap_err();
        assert!(matches!(err, Error::TooLarge(_)));
    }
}

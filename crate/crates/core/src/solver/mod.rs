//! Boosted and vanilla stochastic Frank-Wolfe loops with per-iteration
//! traces and runtime invariant checks.

mod bounds;

pub use bounds::{theorem_bound, BoundInputs, BoundKind};

use crate::boosting::{align, boost, BoostConfig};
use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::estimators::{Estimator, EstimatorKind};
use crate::numerics::{dist2, norm2, Vector};
use crate::problems::{fw_gap, Problem};
use crate::schedules::Schedule;

/// Slack on the alignment comparison at boosted iterations.
pub const ALIGNMENT_SLACK: f64 = 1e-12;
/// Slack on `‖x^{t+1} − x^t‖ ≤ η_t D`.
pub const MOVEMENT_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Bsfw,
    Sfw,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Bsfw => "bsfw",
            Method::Sfw => "sfw",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub estimator: EstimatorKind,
    pub schedule: Schedule,
    pub boost: BoostConfig,
    /// Maximum number of iterations `T`.
    pub horizon: usize,
    pub seed: u64,
    pub record_gap: bool,
    /// Record `‖Δ^t‖²` (one full gradient per iteration).
    pub record_delta: bool,
    pub retain_iterates: bool,
    /// `x⁰ = lmo(m_init)`; the zero vector when absent.
    pub m_init: Option<Vector>,
    /// Stop before the iteration at which cumulative samples reach this.
    pub sample_budget: Option<u64>,
}

impl SolverConfig {
    pub fn new(estimator: EstimatorKind, schedule: Schedule, horizon: usize) -> Self {
        SolverConfig {
            estimator,
            schedule,
            boost: BoostConfig::default(),
            horizon,
            seed: 0,
            record_gap: false,
            record_delta: false,
            retain_iterates: false,
            m_init: None,
            sample_budget: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        BoostConfig::new(self.boost.max_rounds, self.boost.delta)?;
        if let Some(h) = self.schedule.horizon() {
            if self.horizon > h {
                return Err(Error::config(
                    "T",
                    format!("run length {} exceeds the schedule horizon {h}", self.horizon),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRow {
    pub t: usize,
    /// `f(x^t)`.
    pub loss: f64,
    pub eta: f64,
    pub gamma: f64,
    pub boosted: bool,
    pub lmo_calls: usize,
    pub lmo_calls_cum: u64,
    pub grad_samples_cum: u64,
    pub gap: Option<f64>,
    pub delta_sq: Option<f64>,
    /// `‖x^{t+1} − x^t‖`, through `Ã` for SAG.
    pub movement: f64,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub method: Method,
    pub estimator: String,
    pub seed: u64,
    pub rows: Vec<IterationRow>,
    /// `x⁰ … x^T` when retained.
    pub iterates: Vec<Vector>,
    pub x0: Vector,
    pub final_x: Vector,
    pub final_loss: f64,
    pub final_gap: Option<f64>,
    pub total_samples: u64,
    pub total_lmo_calls: u64,
    /// Diameter that bounds `movement` per unit of step decay.
    pub movement_diameter: f64,
    pub alignment_checks: usize,
    pub alignment_violations: usize,
}

impl RunRecord {
    pub fn iterations(&self) -> usize {
        self.rows.len()
    }
}

/// Loop state; `iterate` performs one full iteration.
pub(crate) struct Run<'a> {
    pub problem: &'a Problem,
    pub set: &'a ConstraintSet,
    pub cfg: &'a SolverConfig,
    pub method: Method,
    pub estimator: Estimator,
    pub x: Vector,
    pub x_prev: Vector,
    pub t: usize,
    pub samples: u64,
    pub lmo_calls: u64,
    pub diameter: f64,
    pub alignment_checks: usize,
    pub alignment_violations: usize,
}

impl<'a> Run<'a> {
    pub fn start(problem: &'a Problem, set: &'a ConstraintSet, cfg: &'a SolverConfig, method: Method) -> Result<Self> {
        cfg.validate()?;
        let n = set.dim();
        if problem.dim() != n {
            return Err(Error::dim(n, problem.dim()));
        }
        let m_init = cfg.m_init.clone().unwrap_or_else(|| Vector::zeros(n));
        let x = set.lmo(&m_init)?;
        ensure_feasible(set, &x, 0)?;
        let (estimator, samples) = Estimator::init(cfg.estimator.clone(), problem, &x, cfg.seed)?;
        let diameter = if estimator.uses_geometry_map() {
            geometry_diameter(problem, set)?
        } else {
            set.diameter()
        };
        Ok(Run {
            problem,
            set,
            cfg,
            method,
            estimator,
            x_prev: x.clone(),
            x,
            t: 0,
            samples,
            lmo_calls: 0,
            diameter,
            alignment_checks: 0,
            alignment_violations: 0,
        })
    }

    /// True when another iteration is allowed.
    pub fn may_continue(&self) -> bool {
        self.t < self.cfg.horizon && self.cfg.sample_budget.is_none_or(|b| self.samples < b)
    }

    pub fn iterate(&mut self) -> Result<IterationRow> {
        let t = self.t;
        if t >= 1 {
            self.samples += self.estimator.step(self.problem, &self.x, &self.x_prev, t)?;
        }
        let eta = self.cfg.schedule.eta(t)?;
        let loss = self.problem.value(&self.x)?;
        let gap = if self.cfg.record_gap {
            Some(fw_gap(self.problem, &self.x, self.set)?)
        } else {
            None
        };
        let delta_sq = if self.cfg.record_delta {
            Some(self.estimator.error_vector(self.problem, &self.x)?.iter().map(|v| v * v).sum())
        } else {
            None
        };
        let m = self.estimator.estimate();

        let (x_next, gamma, k_t) = match self.method {
            Method::Sfw => {
                let s = self.set.lmo(m)?;
                let mut x_next = self.x.clone();
                x_next.axpy(eta, &s.sub(&self.x));
                (x_next, 1.0, 1)
            }
            Method::Bsfw => {
                let out = boost(m, &self.x, self.set, &self.cfg.boost)?;
                let fw = out.first_vertex.sub(&self.x);
                let gamma = if out.is_zero() {
                    1.0
                } else {
                    let ratio = if self.estimator.uses_geometry_map() {
                        let a = self.problem.logistic_parts().expect("checked at init").0;
                        norm2(&a.mul_vec(&fw)?) / norm2(&a.mul_vec(&out.direction)?)
                    } else {
                        norm2(&fw) / norm2(&out.direction)
                    };
                    (eta * ratio).min(1.0)
                };
                let mut x_next = self.x.clone();
                if gamma < 1.0 {
                    let neg_m: Vec<f64> = m.iter().map(|v| -v).collect();
                    self.alignment_checks += 1;
                    if align(&neg_m, &out.direction)? < align(&neg_m, &fw)? - ALIGNMENT_SLACK {
                        self.alignment_violations += 1;
                    }
                    x_next.axpy(gamma, &out.direction);
                } else {
                    x_next.axpy(eta, &fw);
                }
                (x_next, gamma, out.rounds)
            }
        };

        ensure_feasible(self.set, &x_next, t + 1)?;
        let step = x_next.sub(&self.x);
        let movement = if self.estimator.uses_geometry_map() {
            norm2(&self.problem.logistic_parts().expect("checked at init").0.mul_vec(&step)?)
        } else {
            norm2(&step)
        };
        self.lmo_calls += k_t as u64;
        self.x_prev = std::mem::replace(&mut self.x, x_next);
        self.t += 1;
        Ok(IterationRow {
            t,
            loss,
            eta,
            gamma,
            boosted: gamma < 1.0,
            lmo_calls: k_t,
            lmo_calls_cum: self.lmo_calls,
            grad_samples_cum: self.samples,
            gap,
            delta_sq,
            movement,
        })
    }
}

fn ensure_feasible(set: &ConstraintSet, x: &[f64], t: usize) -> Result<()> {
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Invariant(format!("non-finite iterate at t = {t}")));
    }
    if !set.contains(x)? {
        return Err(Error::Invariant(format!(
            "iterate x^{t} left the constraint set (radius {})",
            set.radius()
        )));
    }
    Ok(())
}

/// `max_{x,y ∈ C} ‖Ã(x − y)‖`: `2τ` times the largest column norm on the ℓ1 ball.
pub fn geometry_diameter(problem: &Problem, set: &ConstraintSet) -> Result<f64> {
    let (data, _) = problem
        .logistic_parts()
        .ok_or_else(|| Error::config("estimator", "geometry map needs a logistic problem"))?;
    match set.kind() {
        crate::constraints::SetKind::L1Ball { radius, .. } => {
            Ok(2.0 * radius * data.column_norms().into_iter().fold(0.0, f64::max))
        }
        _ => Err(Error::config("estimator", "geometry map needs an ℓ1 ball")),
    }
}

pub fn run(problem: &Problem, set: &ConstraintSet, cfg: &SolverConfig, method: Method) -> Result<RunRecord> {
    let mut state = Run::start(problem, set, cfg, method)?;
    let x0 = state.x.clone();
    let mut iterates = Vec::new();
    if cfg.retain_iterates {
        iterates.push(x0.clone());
    }
    let mut rows = Vec::with_capacity(cfg.horizon.min(1 << 20));
    while state.may_continue() {
        rows.push(state.iterate()?);
        if cfg.retain_iterates {
            iterates.push(state.x.clone());
        }
    }
    let final_loss = problem.value(&state.x)?;
    let final_gap = if cfg.record_gap {
        Some(fw_gap(problem, &state.x, set)?)
    } else {
        None
    };
    Ok(RunRecord {
        method,
        estimator: cfg.estimator.name().to_string(),
        seed: cfg.seed,
        rows,
        iterates,
        x0,
        final_x: state.x,
        final_loss,
        final_gap,
        total_samples: state.samples,
        total_lmo_calls: state.lmo_calls,
        movement_diameter: state.diameter,
        alignment_checks: state.alignment_checks,
        alignment_violations: state.alignment_violations,
    })
}

pub fn run_bsfw(problem: &Problem, set: &ConstraintSet, cfg: &SolverConfig) -> Result<RunRecord> {
    run(problem, set, cfg, Method::Bsfw)
}

pub fn run_sfw(problem: &Problem, set: &ConstraintSet, cfg: &SolverConfig) -> Result<RunRecord> {
    run(problem, set, cfg, Method::Sfw)
}

/// `‖x^t − x^{t−1}‖ ≤ η_{t−1}D + 1e−9` for every recorded step.
pub fn iterate_step_bound_check(record: &RunRecord) -> bool {
    record
        .rows
        .iter()
        .all(|r| r.movement <= r.eta * record.movement_diameter + MOVEMENT_SLACK)
}

/// Same check over explicit iterates and step decays.
pub fn step_bound_holds(iterates: &[Vector], etas: &[f64], diameter: f64) -> bool {
    iterates
        .windows(2)
        .zip(etas)
        .all(|(w, eta)| dist2(&w[1], &w[0]) <= eta * diameter + MOVEMENT_SLACK)
}

/// Percentage of iterations with `γ_t < 1`.
pub fn boosting_percentage(record: &RunRecord) -> Result<f64> {
    if record.rows.is_empty() {
        return Err(Error::Domain("boosting percentage of an empty run".into()));
    }
    let boosted = record.rows.iter().filter(|r| r.boosted).count();
    Ok(100.0 * boosted as f64 / record.rows.len() as f64)
}

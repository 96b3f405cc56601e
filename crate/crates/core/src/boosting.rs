//! Gradient-boosted descent direction: a greedy conical decomposition of
//! `−m` built from repeated oracle calls.

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::numerics::{dot_unchecked, norm2, Vector};

const MASS_EPS: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoostConfig {
    pub max_rounds: usize,
    pub delta: f64,
}

impl BoostConfig {
    pub fn new(max_rounds: usize, delta: f64) -> Result<Self> {
        if max_rounds == 0 {
            return Err(Error::config("K", "must be at least 1"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::config("delta", "must lie in ]0, 1]"));
        }
        Ok(BoostConfig { max_rounds, delta })
    }
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            max_rounds: 10_000,
            delta: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoostOutcome {
    /// Normalized direction `ψ/Λ`, or zero when the mass vanished.
    pub direction: Vector,
    pub mass: f64,
    /// Oracle calls issued.
    pub rounds: usize,
    /// First vertex returned by the oracle.
    pub first_vertex: Vector,
    pub final_alignment: f64,
}

impl BoostOutcome {
    pub fn is_zero(&self) -> bool {
        self.mass == 0.0
    }
}

/// Cosine similarity with the convention `align(d, 0) = −1`.
pub fn align(d: &[f64], d_hat: &[f64]) -> Result<f64> {
    if d.len() != d_hat.len() {
        return Err(Error::dim(d.len(), d_hat.len()));
    }
    let nh = norm2(d_hat);
    if nh == 0.0 {
        return Ok(-1.0);
    }
    let nd = norm2(d);
    if nd == 0.0 {
        return Err(Error::Domain("align of a zero reference direction".into()));
    }
    Ok((dot_unchecked(d, d_hat) / (nd * nh)).clamp(-1.0, 1.0))
}

/// `align(d, ·)` with `‖d‖` precomputed and nonzero.
fn align_with(d: &[f64], d_norm: f64, d_hat: &[f64]) -> f64 {
    let nh = norm2(d_hat);
    if nh == 0.0 {
        return -1.0;
    }
    (dot_unchecked(d, d_hat) / (d_norm * nh)).clamp(-1.0, 1.0)
}

pub fn boost(m: &[f64], x: &[f64], set: &ConstraintSet, cfg: &BoostConfig) -> Result<BoostOutcome> {
    boost_inner(m, x, set, cfg, None)
}

/// As [`boost`], also returning `align(−m, ψ^k)` after every accepted round
/// (the first entry is the starting value −1).
pub fn boost_traced(
    m: &[f64],
    x: &[f64],
    set: &ConstraintSet,
    cfg: &BoostConfig,
) -> Result<(BoostOutcome, Vec<f64>)> {
    let mut trace = Vec::new();
    let out = boost_inner(m, x, set, cfg, Some(&mut trace))?;
    Ok((out, trace))
}

fn boost_inner(
    m: &[f64],
    x: &[f64],
    set: &ConstraintSet,
    cfg: &BoostConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<BoostOutcome> {
    let n = set.dim();
    if m.len() != n {
        return Err(Error::dim(n, m.len()));
    }
    if x.len() != n {
        return Err(Error::dim(n, x.len()));
    }
    let neg_m: Vec<f64> = m.iter().map(|v| -v).collect();
    let m_norm = norm2(m);
    if m_norm == 0.0 {
        let first_vertex = set.lmo(m)?;
        return Ok(BoostOutcome {
            direction: Vector::zeros(n),
            mass: 0.0,
            rounds: 1,
            first_vertex,
            final_alignment: -1.0,
        });
    }

    let mut psi = vec![0.0; n];
    let mut psi_norm = 0.0;
    let mut psi_align = -1.0;
    let mut mass = 0.0;
    let mut first_vertex = None;
    let mut rounds = 0;
    let mut residual = vec![0.0; n];
    let mut neg_residual = vec![0.0; n];
    let mut phi = vec![0.0; n];
    if let Some(t) = trace.as_deref_mut() {
        t.push(psi_align);
    }

    while rounds < cfg.max_rounds {
        for i in 0..n {
            residual[i] = neg_m[i] - psi[i];
            neg_residual[i] = -residual[i];
        }
        let v = set.lmo(&neg_residual)?;
        let fw: Vec<f64> = v.iter().zip(x).map(|(a, b)| a - b).collect();
        if first_vertex.is_none() {
            first_vertex = Some(v);
        }

        let fw_score = dot_unchecked(&residual, &fw);
        let away = if psi_norm > 0.0 {
            let a: Vec<f64> = psi.iter().map(|p| -p / psi_norm).collect();
            let score = dot_unchecked(&residual, &a);
            (score > fw_score).then_some((a, score))
        } else {
            None
        };
        let is_away = away.is_some();
        let (u, score) = match away {
            Some(pair) => pair,
            None => (fw, fw_score),
        };

        rounds += 1;
        if u.iter().all(|&c| c == 0.0) {
            break;
        }
        let lambda = score / dot_unchecked(&u, &u);
        if lambda <= 0.0 || !lambda.is_finite() {
            break;
        }
        for i in 0..n {
            phi[i] = psi[i] + lambda * u[i];
        }
        let phi_align = align_with(&neg_m, m_norm, &phi);
        if phi_align - psi_align < cfg.delta {
            break;
        }
        if is_away {
            mass *= 1.0 - lambda / psi_norm;
        } else {
            mass += lambda;
        }
        std::mem::swap(&mut psi, &mut phi);
        psi_norm = norm2(&psi);
        psi_align = phi_align;
        if let Some(t) = trace.as_deref_mut() {
            t.push(psi_align);
        }
    }

    let first_vertex = first_vertex.expect("at least one round is always issued");
    let (direction, mass) = if mass > MASS_EPS {
        (Vector::from_vec(psi.iter().map(|p| p / mass).collect()), mass)
    } else {
        (Vector::zeros(n), 0.0)
    };
    Ok(BoostOutcome {
        direction,
        mass,
        rounds,
        first_vertex,
        final_alignment: psi_align,
    })
}

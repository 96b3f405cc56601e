//! Closed-form right-hand sides of the convergence guarantees.

use crate::error::{Error, Result};
use crate::estimators::EstimatorParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    /// Deterministic quasar-convex: `max{F₀, 2LD²/ρ²}/(t+1)`.
    DetQuasar,
    /// Deterministic nonconvex: `(F₀ + LD²)/√(t+1)`.
    DetNonconvex,
    /// Stochastic nonconvex with `η = 1/√T`.
    StochNonconvex,
    /// Heavy Ball nonconvex with `η_t = (t+2)^{-3/4}`.
    HeavyBallNonconvex,
}

impl std::str::FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t1" | "det-quasar" => Ok(BoundKind::DetQuasar),
            "t2" | "det-nonconvex" => Ok(BoundKind::DetNonconvex),
            "t5" | "stoch-nonconvex" => Ok(BoundKind::StochNonconvex),
            "hbncv" | "heavyball-nonconvex" => Ok(BoundKind::HeavyBallNonconvex),
            other => Err(Error::config("bound", format!("unknown bound kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundInputs {
    /// Initial suboptimality `F₀`.
    pub f0: f64,
    pub lipschitz: f64,
    pub diameter: f64,
    /// Quasar-convexity parameter.
    pub rho: f64,
    /// Initial Lyapunov value for the stochastic nonconvex bound.
    pub r0: f64,
    /// Heavy Ball error constant.
    pub m_h: f64,
    pub params: EstimatorParams,
}

impl BoundInputs {
    pub fn new(f0: f64, lipschitz: f64, diameter: f64) -> Self {
        BoundInputs {
            f0,
            lipschitz,
            diameter,
            rho: 1.0,
            r0: f0,
            m_h: 0.0,
            params: EstimatorParams { rho1: 1.0, rho2: 1.0, a: 0.0, b: 0.0, c: 0.0, e: 0.0 },
        }
    }
}

/// Evaluates the bound at iteration `t` (for the horizon bounds, `t` is `T`).
pub fn theorem_bound(kind: BoundKind, inp: &BoundInputs, t: usize) -> Result<f64> {
    let tf = t as f64;
    let (l, d) = (inp.lipschitz, inp.diameter);
    let check = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("bound input {what} out of range")))
        }
    };
    check(l >= 0.0 && d >= 0.0 && inp.f0.is_finite(), "L/D/F0")?;
    match kind {
        BoundKind::DetQuasar => {
            check(inp.rho > 0.0 && inp.rho <= 1.0, "rho")?;
            Ok(inp.f0.max(2.0 * l * d * d / (inp.rho * inp.rho)) / (tf + 1.0))
        }
        BoundKind::DetNonconvex => Ok((inp.f0 + l * d * d) / (tf + 1.0).sqrt()),
        BoundKind::StochNonconvex => {
            check(t >= 1, "T")?;
            let p = inp.params;
            check(p.rho1 > 0.0 && p.rho2 > 0.0, "rho1/rho2")?;
            let st = tf.sqrt();
            let inner = d * d / (p.rho1 * tf) * (p.b + p.a * p.e / p.rho2) + p.c / p.rho1;
            Ok(inp.r0 / st + d * d * l / (2.0 * st) + d * inner.sqrt())
        }
        BoundKind::HeavyBallNonconvex => {
            check(t >= 1 && inp.m_h >= 0.0, "T/M_h")?;
            let num = inp.f0 + 2.0 * d * inp.m_h.sqrt() * (1.0 + tf.ln()) + l * d * d;
            Ok(num / (4.0 * ((tf + 2.0).powf(0.25) - 2f64.powf(0.25))))
        }
    }
}

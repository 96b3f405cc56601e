//! Step decays `η_t` and Heavy-Ball momentum weights `ρ̃_t`.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Schedule {
    /// `2/(ρ(t+2))`.
    DetQuasar { rho: f64 },
    /// `1/√(t+1)`.
    DetNonconvexAnytime,
    /// `1/√(T+1)`.
    DetNonconvexHorizon { horizon: usize },
    /// Constant, then `2/(ρ(2d+t−t₀))` after `t₀ = ⌊T/2⌋`, with `d = 2/min(ρ1, ρ2)`.
    StochQuasarHorizon { rho: f64, rho1: f64, rho2: f64, horizon: usize },
    /// `2/(ρ(t+ν))`, `ν = max(2, 4/min(ρ1, ρ2))`.
    StochQuasarAnytime { rho: f64, rho1: f64, rho2: f64 },
    /// `1/√T`.
    StochNonconvexHorizon { horizon: usize },
    StochNonconvexAnytime,
    /// `η_t = 2/(ρ(t+9))`, `ρ̃_t = 4/(t+8)^{2/3}`.
    HeavyBallQuasar { rho: f64 },
    /// `η_t = 1/(t+2)^{3/4}`, `ρ̃_t = 1/√(t+1)`.
    HeavyBallNonconvex,
    Constant { eta: f64 },
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let rho_ok = |r: f64| r > 0.0 && r <= 1.0;
        let ok = match *self {
            Schedule::DetQuasar { rho } | Schedule::HeavyBallQuasar { rho } => rho_ok(rho),
            Schedule::StochQuasarAnytime { rho, rho1, rho2 } => {
                rho_ok(rho) && rho_ok(rho1) && rho_ok(rho2)
            }
            Schedule::StochQuasarHorizon { rho, rho1, rho2, horizon } => {
                rho_ok(rho) && rho_ok(rho1) && rho_ok(rho2) && horizon >= 1
            }
            Schedule::DetNonconvexHorizon { horizon } | Schedule::StochNonconvexHorizon { horizon } => {
                horizon >= 1
            }
            Schedule::Constant { eta } => eta > 0.0 && eta <= 1.0,
            Schedule::DetNonconvexAnytime
            | Schedule::StochNonconvexAnytime
            | Schedule::HeavyBallNonconvex => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config("schedule", format!("invalid parameters in {self:?}")))
        }
    }

    pub fn horizon(&self) -> Option<usize> {
        match *self {
            Schedule::DetNonconvexHorizon { horizon }
            | Schedule::StochQuasarHorizon { horizon, .. }
            | Schedule::StochNonconvexHorizon { horizon } => Some(horizon),
            _ => None,
        }
    }

    pub fn is_heavy_ball(&self) -> bool {
        matches!(self, Schedule::HeavyBallQuasar { .. } | Schedule::HeavyBallNonconvex)
    }

    pub fn eta(&self, t: usize) -> Result<f64> {
        if let Some(h) = self.horizon() {
            if t >= h {
                return Err(Error::Domain(format!("t = {t} outside horizon {h}")));
            }
        }
        let tf = t as f64;
        let eta = match *self {
            Schedule::DetQuasar { rho } => 2.0 / (rho * (tf + 2.0)),
            Schedule::DetNonconvexAnytime | Schedule::StochNonconvexAnytime => {
                1.0 / (tf + 1.0).sqrt()
            }
            Schedule::DetNonconvexHorizon { horizon } => 1.0 / (horizon as f64 + 1.0).sqrt(),
            Schedule::StochQuasarHorizon { rho, rho1, rho2, horizon } => {
                let d = 2.0 / rho1.min(rho2);
                let t0 = horizon / 2;
                if horizon as f64 <= d || t < t0 {
                    1.0 / (rho * d)
                } else {
                    2.0 / (rho * (2.0 * d + (t - t0) as f64))
                }
            }
            Schedule::StochQuasarAnytime { rho, rho1, rho2 } => {
                let nu = f64::max(2.0, 4.0 / rho1.min(rho2));
                2.0 / (rho * (tf + nu))
            }
            Schedule::StochNonconvexHorizon { horizon } => 1.0 / (horizon as f64).sqrt(),
            Schedule::HeavyBallQuasar { rho } => 2.0 / (rho * (tf + 9.0)),
            Schedule::HeavyBallNonconvex => 1.0 / (tf + 2.0).powf(0.75),
            Schedule::Constant { eta } => eta,
        };
        Ok(eta.min(1.0))
    }

    pub fn momentum(&self, t: usize) -> Result<f64> {
        let tf = t as f64;
        match *self {
            Schedule::HeavyBallQuasar { .. } => {
                let c = (tf + 8.0).cbrt();
                Ok((4.0 / (c * c)).min(1.0))
            }
            Schedule::HeavyBallNonconvex => Ok(1.0 / (tf + 1.0).sqrt()),
            _ => Err(Error::Domain(format!("{self:?} has no momentum weights"))),
        }
    }
}

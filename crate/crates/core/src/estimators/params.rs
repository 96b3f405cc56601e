use super::EstimatorKind;
use crate::error::Result;

/// Constants of the error recursion
/// `E‖Δ^t‖² ≤ (1−ρ1)‖Δ^{t−1}‖² + Aσ²_{t−1} + η²_{t−1}BD² + C`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorParams {
    pub rho1: f64,
    pub rho2: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
}

/// Recursion constants for `kind` with dimension `n`, `m` components, smoothness `l`
/// and horizon `horizon` (used by Heavy Ball only).
pub fn table1_params(kind: &EstimatorKind, n: usize, m: usize, l: f64, horizon: usize) -> Result<EstimatorParams> {
    let (nf, mf, l2) = (n as f64, m as f64, l * l);
    let zero = EstimatorParams { rho1: 1.0, rho2: 1.0, a: 0.0, b: 0.0, c: 0.0, e: 0.0 };
    Ok(match *kind {
        EstimatorKind::Full => zero,
        EstimatorKind::Sag { batch } => {
            let bs = batch as f64;
            EstimatorParams {
                rho1: bs / (2.0 * mf),
                b: (1.0 - bs / mf) * (1.0 + 2.0 * mf / bs) * l2,
                ..zero
            }
        }
        EstimatorKind::LSvrg { batch, p } => {
            let bs = batch as f64;
            EstimatorParams {
                rho1: 1.0,
                rho2: p / 2.0,
                a: l2 / bs - p * l2 / (2.0 * bs),
                b: 8.0 * l2 / (p * bs),
                c: 0.0,
                e: 8.0 / p,
            }
        }
        EstimatorKind::Saga { batch } => {
            let bs = batch as f64;
            EstimatorParams {
                rho1: 1.0,
                rho2: bs / (2.0 * mf),
                a: 1.0 / bs + 1.0 / (2.0 * mf),
                b: l2 / (bs * mf) * (1.0 + 2.0 * mf / bs),
                c: 0.0,
                e: 2.0 * mf * l2 / bs,
            }
        }
        EstimatorKind::Sega => EstimatorParams {
            rho1: 1.0,
            rho2: 1.0 / (2.0 * nf),
            a: nf,
            b: nf * nf * l2,
            c: 0.0,
            e: 3.0 * l2 * nf,
        },
        EstimatorKind::Jaguar { .. } => EstimatorParams {
            rho1: 1.0 / (2.0 * nf),
            b: 3.0 * nf * l2,
            ..zero
        },
        EstimatorKind::Zoja { tau_zo } => EstimatorParams {
            rho1: 1.0 / (4.0 * nf),
            b: 3.0 * nf * l2,
            c: 2.0 * nf * l2 * tau_zo * tau_zo,
            ..zero
        },
        EstimatorKind::Sarah { batch, p } => EstimatorParams {
            rho1: p,
            b: (1.0 - p) * l2 / batch as f64,
            ..zero
        },
        EstimatorKind::HeavyBall { momentum, .. } => {
            let rho_t = momentum.momentum(horizon)?;
            let tf = horizon as f64;
            EstimatorParams {
                rho1: rho_t / 2.0,
                rho2: 1.0 - ((tf + 7.0) / (tf + 8.0)).powf(4.0 / 3.0),
                a: 1.0,
                b: 2.0 * l2 / rho_t,
                c: 0.0,
                e: 0.0,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::Schedule;

    #[test]
    fn sarah_row() {
        let p = table1_params(&EstimatorKind::Sarah { batch: 2, p: 0.5 }, 3, 10, 1.0, 0).unwrap();
        assert_eq!(p, EstimatorParams { rho1: 0.5, rho2: 1.0, a: 0.0, b: 0.25, c: 0.0, e: 0.0 });
    }

    #[test]
    fn jaguar_row() {
        let p = table1_params(&EstimatorKind::Jaguar { at_current: false }, 4, 10, 1.0, 0).unwrap();
        assert_eq!(p.rho1, 0.125);
        assert_eq!(p.b, 12.0);
    }

    #[test]
    fn full_row_is_degenerate() {
        let p = table1_params(&EstimatorKind::Full, 4, 10, 3.0, 0).unwrap();
        assert_eq!(p, EstimatorParams { rho1: 1.0, rho2: 1.0, a: 0.0, b: 0.0, c: 0.0, e: 0.0 });
    }

    #[test]
    fn saga_and_zoja_rows() {
        let p = table1_params(&EstimatorKind::Saga { batch: 2 }, 3, 4, 2.0, 0).unwrap();
        assert_eq!(p.rho2, 0.25);
        assert_eq!(p.a, 0.5 + 0.125);
        assert_eq!(p.b, 4.0 / 8.0 * 5.0);
        assert_eq!(p.e, 16.0);
        let z = table1_params(&EstimatorKind::Zoja { tau_zo: 0.5 }, 3, 4, 2.0, 0).unwrap();
        assert_eq!(z.c, 2.0 * 3.0 * 4.0 * 0.25);
        assert_eq!(z.rho1, 1.0 / 12.0);
    }

    #[test]
    fn heavy_ball_row_uses_horizon() {
        let kind = EstimatorKind::HeavyBall { batch: 1, momentum: Schedule::HeavyBallQuasar { rho: 1.0 } };
        let p = table1_params(&kind, 3, 4, 1.0, 0).unwrap();
        assert_eq!(p.rho1, 0.5);
        assert_eq!(p.b, 2.0);
        assert!((p.rho2 - (1.0 - (7.0f64 / 8.0).powf(4.0 / 3.0))).abs() < 1e-15);
    }
}

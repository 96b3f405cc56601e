//! Boosted stochastic Frank-Wolfe.
//!
//! Projection-free minimization of `f(x) = (1/m) Σ f_i(x)` over an ℓ1 or
//! nuclear-norm ball. Each iteration replaces the single Frank-Wolfe vertex
//! with a conic combination of vertices built by [`boosting::boost`], fed by
//! one of the gradient estimators in [`estimators`].
//!
//! ```
//! use bsfw::constraints::ConstraintSet;
//! use bsfw::estimators::EstimatorKind;
//! use bsfw::problems::Problem;
//! use bsfw::schedules::Schedule;
//! use bsfw::solver::{run_bsfw, SolverConfig};
//!
//! let problem = Problem::quadratic(vec![0.3, -0.2]).unwrap();
//! let set = ConstraintSet::l1_ball(1.0, 2).unwrap();
//! let cfg = SolverConfig::new(EstimatorKind::Full, Schedule::DetQuasar { rho: 1.0 }, 200);
//! let rec = run_bsfw(&problem, &set, &cfg).unwrap();
//! assert!(rec.final_loss < 1e-3);
//! ```

pub mod boosting;
pub mod constraints;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod ingest;
pub mod numerics;
pub mod parallel;
pub mod problems;
pub mod schedules;
pub mod solver;

pub use error::{Error, Result};

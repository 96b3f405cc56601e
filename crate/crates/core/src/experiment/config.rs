//! `key = value` experiment configuration.

use std::path::PathBuf;

use crate::boosting::BoostConfig;
use crate::error::{Error, Result};
use crate::estimators::{table1_params, EstimatorKind};
use crate::schedules::Schedule;
use crate::solver::Method;

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    Logistic {
        dataset: Option<PathBuf>,
        n: usize,
        m: usize,
        sparsity: f64,
    },
    Completion {
        rows: usize,
        cols: usize,
        observed: usize,
        rank: usize,
    },
}

impl ProblemSpec {
    pub fn is_convex(&self) -> bool {
        matches!(self, ProblemSpec::Logistic { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleChoice {
    Auto,
    DetQuasar,
    DetNonconvex,
    DetNonconvexHorizon,
    StochQuasarHorizon,
    StochQuasarAnytime,
    StochNonconvexHorizon,
    StochNonconvexAnytime,
    HeavyBallQuasar,
    HeavyBallNonconvex,
    Constant,
}

impl std::str::FromStr for ScheduleChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => ScheduleChoice::Auto,
            "det-quasar" => ScheduleChoice::DetQuasar,
            "det-nonconvex" => ScheduleChoice::DetNonconvex,
            "det-nonconvex-horizon" => ScheduleChoice::DetNonconvexHorizon,
            "stoch-quasar-horizon" => ScheduleChoice::StochQuasarHorizon,
            "stoch-quasar-anytime" => ScheduleChoice::StochQuasarAnytime,
            "stoch-nonconvex-horizon" => ScheduleChoice::StochNonconvexHorizon,
            "stoch-nonconvex-anytime" => ScheduleChoice::StochNonconvexAnytime,
            "hb-quasar" => ScheduleChoice::HeavyBallQuasar,
            "hb-nonconvex" => ScheduleChoice::HeavyBallNonconvex,
            "constant" => ScheduleChoice::Constant,
            other => return Err(Error::config("schedule", format!("unknown schedule `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub tau: f64,
    pub data_seed: u64,
    pub estimators: Vec<String>,
    pub methods: Vec<Method>,
    pub schedule: ScheduleChoice,
    pub rho: f64,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub eta: Option<f64>,
    pub boost: BoostConfig,
    pub horizon: usize,
    /// Gradient-sample budget in passes over the data.
    pub epochs: Option<f64>,
    pub batch: usize,
    pub p: f64,
    pub tau_zo: f64,
    pub jaguar_at_current: bool,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub record_gap: bool,
    pub record_delta: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: ProblemSpec::Logistic {
                dataset: None,
                n: 500,
                m: 2000,
                sparsity: 0.02,
            },
            tau: 20.0,
            data_seed: 0,
            estimators: vec!["saga".into()],
            methods: vec![Method::Bsfw, Method::Sfw],
            schedule: ScheduleChoice::Auto,
            rho: 1.0,
            rho1: None,
            rho2: None,
            eta: None,
            boost: BoostConfig::default(),
            horizon: 1000,
            epochs: None,
            batch: 100,
            p: 0.05,
            tau_zo: 1e-4,
            jaguar_at_current: false,
            seeds: vec![0],
            out: PathBuf::from("out"),
            record_gap: false,
            record_delta: false,
        }
    }
}

pub const KEYS: &[&str] = &[
    "problem", "dataset", "n", "m", "sparsity", "rows", "cols", "observed", "rank", "tau",
    "data_seed", "estimators", "estimator", "methods", "schedule", "rho", "rho1", "rho2", "eta",
    "K", "delta", "T", "epochs", "batch", "p", "tau_zo", "jaguar_at_current", "seeds", "seed",
    "out", "record_gap", "record_delta",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::config(key, format!("expected a boolean, got `{v}`"))),
    }
}

/// Raw settings before the problem-dependent defaults are resolved.
#[derive(Default)]
struct Raw {
    problem: Option<String>,
    dataset: Option<PathBuf>,
    n: Option<usize>,
    m: Option<usize>,
    sparsity: Option<f64>,
    rows: Option<usize>,
    cols: Option<usize>,
    observed: Option<usize>,
    rank: Option<usize>,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_with(text, &[])
}

/// Parses `text`, then applies `overrides` as if appended to it.
pub fn parse_config_with(text: &str, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    let mut pairs = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| Error::Parse {
            line: k + 1,
            message: format!("expected `key = value`, got `{body}`"),
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    pairs.extend(overrides.iter().cloned());

    let mut cfg = ExperimentConfig::default();
    let mut raw = Raw::default();
    let mut k_rounds = cfg.boost.max_rounds;
    let mut delta = cfg.boost.delta;
    for (key, v) in &pairs {
        let v = v.as_str();
        match key.as_str() {
            "problem" => raw.problem = Some(v.to_string()),
            "dataset" => raw.dataset = Some(PathBuf::from(v)),
            "n" => raw.n = Some(num(key, v)?),
            "m" => raw.m = Some(num(key, v)?),
            "sparsity" => raw.sparsity = Some(num(key, v)?),
            "rows" => raw.rows = Some(num(key, v)?),
            "cols" => raw.cols = Some(num(key, v)?),
            "observed" => raw.observed = Some(num(key, v)?),
            "rank" => raw.rank = Some(num(key, v)?),
            "tau" => cfg.tau = num(key, v)?,
            "data_seed" => cfg.data_seed = num(key, v)?,
            "estimators" | "estimator" => cfg.estimators = list(key, v)?,
            "methods" => {
                cfg.methods = list::<String>(key, v)?
                    .iter()
                    .map(|s| match s.as_str() {
                        "bsfw" => Ok(Method::Bsfw),
                        "sfw" => Ok(Method::Sfw),
                        other => Err(Error::config("methods", format!("unknown method `{other}`"))),
                    })
                    .collect::<Result<_>>()?
            }
            "schedule" => cfg.schedule = v.parse()?,
            "rho" => cfg.rho = num(key, v)?,
            "rho1" => cfg.rho1 = Some(num(key, v)?),
            "rho2" => cfg.rho2 = Some(num(key, v)?),
            "eta" => cfg.eta = Some(num(key, v)?),
            "K" => k_rounds = num(key, v)?,
            "delta" => delta = num(key, v)?,
            "T" => cfg.horizon = num(key, v)?,
            "epochs" => cfg.epochs = Some(num(key, v)?),
            "batch" => cfg.batch = num(key, v)?,
            "p" => cfg.p = num(key, v)?,
            "tau_zo" => cfg.tau_zo = num(key, v)?,
            "jaguar_at_current" => cfg.jaguar_at_current = flag(key, v)?,
            "seeds" | "seed" => cfg.seeds = list(key, v)?,
            "out" => cfg.out = PathBuf::from(v),
            "record_gap" => cfg.record_gap = flag(key, v)?,
            "record_delta" => cfg.record_delta = flag(key, v)?,
            other => return Err(Error::config(other, "unknown key")),
        }
    }
    cfg.boost = BoostConfig::new(k_rounds, delta)?;
    cfg.problem = match raw.problem.as_deref().unwrap_or("logistic") {
        "logistic" => ProblemSpec::Logistic {
            dataset: raw.dataset,
            n: raw.n.unwrap_or(500),
            m: raw.m.unwrap_or(2000),
            sparsity: raw.sparsity.unwrap_or(0.02),
        },
        "completion" => ProblemSpec::Completion {
            rows: raw.rows.unwrap_or(12),
            cols: raw.cols.unwrap_or(10),
            observed: raw.observed.unwrap_or(40),
            rank: raw.rank.unwrap_or(2),
        },
        other => return Err(Error::config("problem", format!("unknown problem `{other}`"))),
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    let unit = |x: f64| x > 0.0 && x <= 1.0;
    if !(cfg.tau > 0.0 && cfg.tau.is_finite()) {
        return Err(Error::config("tau", "must be positive"));
    }
    if cfg.estimators.is_empty() {
        return Err(Error::config("estimators", "at least one estimator is required"));
    }
    for name in &cfg.estimators {
        if !ESTIMATOR_NAMES.contains(&name.as_str()) {
            return Err(Error::config("estimators", format!("unknown estimator `{name}`")));
        }
    }
    if cfg.methods.is_empty() {
        return Err(Error::config("methods", "at least one method is required"));
    }
    if cfg.seeds.is_empty() {
        return Err(Error::config("seeds", "at least one seed is required"));
    }
    if !unit(cfg.rho) {
        return Err(Error::config("rho", "must lie in ]0, 1]"));
    }
    for (key, v) in [("rho1", cfg.rho1), ("rho2", cfg.rho2), ("eta", cfg.eta)] {
        if v.is_some_and(|x| !unit(x)) {
            return Err(Error::config(key, "must lie in ]0, 1]"));
        }
    }
    if cfg.schedule == ScheduleChoice::Constant && cfg.eta.is_none() {
        return Err(Error::config("eta", "required by the constant schedule"));
    }
    if cfg.horizon == 0 {
        return Err(Error::config("T", "must be at least 1"));
    }
    if cfg.epochs.is_some_and(|e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::config("epochs", "must be positive"));
    }
    if cfg.batch == 0 {
        return Err(Error::config("batch", "must be at least 1"));
    }
    if !unit(cfg.p) {
        return Err(Error::config("p", "must lie in ]0, 1]"));
    }
    if !(cfg.tau_zo > 0.0 && cfg.tau_zo.is_finite()) {
        return Err(Error::config("tau_zo", "must be positive"));
    }
    match cfg.problem {
        ProblemSpec::Logistic { n, m, sparsity, .. } => {
            if n == 0 || m == 0 {
                return Err(Error::config("n", "n and m must be positive"));
            }
            if !unit(sparsity) {
                return Err(Error::config("sparsity", "must lie in ]0, 1]"));
            }
        }
        ProblemSpec::Completion { rows, cols, observed, rank } => {
            if rows == 0 || cols == 0 || rank == 0 || observed == 0 {
                return Err(Error::config("rows", "dimensions, rank and observed must be positive"));
            }
            if observed > rows * cols {
                return Err(Error::config("observed", "exceeds the number of entries"));
            }
            if cfg.estimators.iter().any(|e| e == "sag") {
                return Err(Error::config("estimators", "sag needs the logistic problem"));
            }
        }
    }
    Ok(())
}

pub const ESTIMATOR_NAMES: &[&str] = &[
    "full", "sag", "saga", "lsvrg", "sarah", "sega", "jaguar", "zoja", "heavyball",
];

impl ExperimentConfig {
    fn momentum(&self) -> Schedule {
        match self.schedule {
            ScheduleChoice::HeavyBallQuasar => Schedule::HeavyBallQuasar { rho: self.rho },
            ScheduleChoice::HeavyBallNonconvex => Schedule::HeavyBallNonconvex,
            _ if self.problem.is_convex() => Schedule::HeavyBallQuasar { rho: self.rho },
            _ => Schedule::HeavyBallNonconvex,
        }
    }

    /// Estimator for `name`, with batch sizes clamped to `components`.
    pub fn estimator_kind(&self, name: &str, components: usize) -> Result<EstimatorKind> {
        let batch = self.batch.min(components);
        Ok(match name {
            "full" => EstimatorKind::Full,
            "sag" => EstimatorKind::Sag { batch },
            "saga" => EstimatorKind::Saga { batch },
            "lsvrg" => EstimatorKind::LSvrg { batch, p: self.p },
            "sarah" => EstimatorKind::Sarah { batch, p: self.p },
            "sega" => EstimatorKind::Sega,
            "jaguar" => EstimatorKind::Jaguar { at_current: self.jaguar_at_current },
            "zoja" => EstimatorKind::Zoja { tau_zo: self.tau_zo },
            "heavyball" => EstimatorKind::HeavyBall { batch, momentum: self.momentum() },
            other => return Err(Error::config("estimators", format!("unknown estimator `{other}`"))),
        })
    }

    /// Step decay for `kind`; `auto` follows the matching convergence theorem.
    pub fn schedule_for(&self, kind: &EstimatorKind, n: usize, m: usize) -> Result<Schedule> {
        let t = self.horizon;
        let rho = self.rho;
        let base = table1_params(kind, n, m, 1.0, t)?;
        let rho1 = self.rho1.unwrap_or(base.rho1.min(1.0));
        let rho2 = self.rho2.unwrap_or(base.rho2.min(1.0));
        let convex = self.problem.is_convex();
        let s = match self.schedule {
            ScheduleChoice::Auto => match kind {
                EstimatorKind::Full if convex => Schedule::DetQuasar { rho },
                EstimatorKind::Full => Schedule::DetNonconvexAnytime,
                EstimatorKind::HeavyBall { .. } if convex => Schedule::HeavyBallQuasar { rho },
                EstimatorKind::HeavyBall { .. } => Schedule::HeavyBallNonconvex,
                _ if convex => Schedule::StochQuasarAnytime { rho, rho1, rho2 },
                _ => Schedule::StochNonconvexHorizon { horizon: t },
            },
            ScheduleChoice::DetQuasar => Schedule::DetQuasar { rho },
            ScheduleChoice::DetNonconvex => Schedule::DetNonconvexAnytime,
            ScheduleChoice::DetNonconvexHorizon => Schedule::DetNonconvexHorizon { horizon: t },
            ScheduleChoice::StochQuasarHorizon => {
                Schedule::StochQuasarHorizon { rho, rho1, rho2, horizon: t }
            }
            ScheduleChoice::StochQuasarAnytime => Schedule::StochQuasarAnytime { rho, rho1, rho2 },
            ScheduleChoice::StochNonconvexHorizon => Schedule::StochNonconvexHorizon { horizon: t },
            ScheduleChoice::StochNonconvexAnytime => Schedule::StochNonconvexAnytime,
            ScheduleChoice::HeavyBallQuasar => Schedule::HeavyBallQuasar { rho },
            ScheduleChoice::HeavyBallNonconvex => Schedule::HeavyBallNonconvex,
            ScheduleChoice::Constant => Schedule::Constant {
                eta: self.eta.expect("validated"),
            },
        };
        s.validate()?;
        Ok(s)
    }
}

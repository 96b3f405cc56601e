//! Experiment orchestration: one trace per estimator × method × seed plus a
//! summary table, and the paired BSFW/SFW comparison.

mod config;
mod report;

pub use config::{
    parse_config, parse_config_with, ExperimentConfig, ProblemSpec, ScheduleChoice, ESTIMATOR_NAMES, KEYS,
};
pub use report::{
    compare, read_summary, write_summary, write_trace, Comparison, EstimatorComparison, SummaryRow, TRACE_HEADER,
    SUMMARY_HEADER,
};

use std::fs;
use std::path::PathBuf;

use crate::constraints::ConstraintSet;
use crate::error::Result;
use crate::ingest::{read_libsvm_file, synth_completion, synth_logistic};
use crate::parallel::{map_ordered, Execution};
use crate::problems::Problem;
use crate::solver::{boosting_percentage, run, Method, RunRecord, SolverConfig};

/// Problem instance and feasible set described by `cfg`.
pub fn build_instance(cfg: &ExperimentConfig) -> Result<(Problem, ConstraintSet)> {
    match &cfg.problem {
        ProblemSpec::Logistic { dataset, n, m, sparsity } => {
            let ds = match dataset {
                Some(path) => read_libsvm_file(path, None)?,
                None => synth_logistic(*n, *m, *sparsity, cfg.data_seed)?,
            };
            let cols = ds.features.cols();
            Ok((ds.into_problem()?, ConstraintSet::l1_ball(cfg.tau, cols)?))
        }
        ProblemSpec::Completion { rows, cols, observed, rank } => Ok((
            synth_completion(*rows, *cols, *observed, *rank, cfg.data_seed)?,
            ConstraintSet::nuclear_ball(cfg.tau, *rows, *cols)?,
        )),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub estimator: String,
    pub method: Method,
    pub seed: u64,
}

impl Cell {
    pub fn run_id(&self) -> String {
        format!("{}-{}-{}", self.estimator, self.method.name(), self.seed)
    }

    pub fn file_name(&self) -> String {
        format!("{}_{}_seed{}.csv", self.estimator, self.method.name(), self.seed)
    }
}

/// Cells in output order: estimator, then seed, then method.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for e in &cfg.estimators {
        for &seed in &cfg.seeds {
            for &method in &cfg.methods {
                out.push(Cell { estimator: e.clone(), method, seed });
            }
        }
    }
    out
}

pub fn solver_config(cfg: &ExperimentConfig, problem: &Problem, cell: &Cell) -> Result<SolverConfig> {
    let kind = cfg.estimator_kind(&cell.estimator, problem.components())?;
    kind.validate(problem.components())?;
    let schedule = cfg.schedule_for(&kind, problem.dim(), problem.components())?;
    let mut sc = SolverConfig::new(kind, schedule, cfg.horizon);
    sc.boost = cfg.boost;
    sc.seed = cell.seed;
    sc.record_gap = cfg.record_gap;
    sc.record_delta = cfg.record_delta;
    sc.sample_budget = cfg
        .epochs
        .map(|e| (e * problem.components() as f64).ceil() as u64);
    Ok(sc)
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub records: Vec<(Cell, RunRecord)>,
    pub summary: Vec<SummaryRow>,
    pub files: Vec<PathBuf>,
}

pub fn summary_row(cell: &Cell, rec: &RunRecord) -> SummaryRow {
    let iterations = rec.iterations();
    SummaryRow {
        run_id: cell.run_id(),
        estimator: cell.estimator.clone(),
        method: cell.method,
        seed: cell.seed,
        iterations,
        final_loss: rec.final_loss,
        final_gap: rec.final_gap,
        boosting_percentage: boosting_percentage(rec).unwrap_or(0.0),
        total_lmo_calls: rec.total_lmo_calls,
        total_samples: rec.total_samples,
    }
}

/// Runs every cell without touching the filesystem.
pub fn run_cells(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<(Cell, RunRecord)>> {
    let (problem, set) = build_instance(cfg)?;
    let cells = cells(cfg);
    map_ordered(exec, &cells, |cell| {
        let sc = solver_config(cfg, &problem, cell)?;
        Ok((cell.clone(), run(&problem, &set, &sc, cell.method)?))
    })
    .into_iter()
    .collect()
}

/// Runs every cell and writes the traces plus `summary.csv` under `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentOutput> {
    let records = run_cells(cfg, exec)?;
    fs::create_dir_all(&cfg.out)?;
    let mut files = Vec::new();
    let mut summary = Vec::new();
    for (cell, rec) in &records {
        let path = cfg.out.join(cell.file_name());
        write_trace(fs::File::create(&path)?, &cell.run_id(), &cell.estimator, cell.seed, rec)?;
        files.push(path);
        summary.push(summary_row(cell, rec));
    }
    let path = cfg.out.join("summary.csv");
    write_summary(fs::File::create(&path)?, &summary)?;
    files.push(path);
    Ok(ExperimentOutput { records, summary, files })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        parse_config(
            "n = 8\nm = 20\nsparsity = 0.5\ntau = 2\nestimators = saga, sarah\nseeds = 1, 2\nT = 15\nbatch = 4\nK = 20",
        )
        .unwrap()
    }

    #[test]
    fn cell_order_and_names() {
        let c = cells(&tiny());
        assert_eq!(c.len(), 8);
        assert_eq!(c[0].run_id(), "saga-bsfw-1");
        assert_eq!(c[1].file_name(), "saga_sfw_seed1.csv");
        assert_eq!(c[7].run_id(), "sarah-sfw-2");
    }

    #[test]
    fn writes_traces_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny();
        cfg.out = dir.path().to_path_buf();
        let out = run_experiment(&cfg, Execution::default()).unwrap();
        assert_eq!(out.files.len(), 9);
        let back = read_summary(fs::File::open(dir.path().join("summary.csv")).unwrap()).unwrap();
        assert_eq!(back.len(), 8);
        assert_eq!(back, out.summary);
        let trace = fs::read_to_string(dir.path().join("sarah_bsfw_seed2.csv")).unwrap();
        assert_eq!(trace.lines().count(), 16);
        assert!(trace.starts_with(&TRACE_HEADER.join(",")));
    }

    #[test]
    fn execution_modes_agree() {
        let cfg = tiny();
        let a = run_cells(&cfg, Execution::Sequential).unwrap();
        let b = run_cells(&cfg, Execution::Parallel).unwrap();
        for ((ca, ra), (cb, rb)) in a.iter().zip(&b) {
            assert_eq!(ca, cb);
            assert_eq!(ra.rows, rb.rows);
        }
    }

    #[test]
    fn epochs_set_a_sample_budget() {
        let mut cfg = tiny();
        cfg.epochs = Some(2.0);
        cfg.horizon = 10_000;
        let recs = run_cells(&cfg, Execution::Sequential).unwrap();
        for (_, r) in &recs {
            assert!(r.total_samples >= 40 && r.total_samples < 40 + 20);
            assert!(r.iterations() < 10_000);
        }
    }
}

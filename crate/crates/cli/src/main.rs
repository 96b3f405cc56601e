use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bsfw::constraints::ConstraintSet;
use bsfw::estimators::{measure_recursion, EstimatorKind};
use bsfw::experiment::{compare, parse_config_with, read_summary, run_experiment};
use bsfw::ingest::synth_logistic;
use bsfw::parallel::Execution;
use bsfw::problems::Problem;
use bsfw::schedules::Schedule;
use bsfw::solver::{theorem_bound, BoundInputs, BoundKind, SolverConfig};
use bsfw::Error;

#[derive(Parser)]
#[command(name = "bsfw", version, about = "Boosted stochastic Frank-Wolfe experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every estimator × method × seed cell and write CSV traces.
    Run(Box<RunArgs>),
    /// Summarize paired BSFW/SFW runs from a summary.csv.
    Compare {
        summary: PathBuf,
    },
    /// Check the estimator error recursions on a small finite-sum problem.
    ValidateEstimators {
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Evaluate a convergence bound.
    Bounds {
        /// t1, t2, t5 or hbncv.
        #[arg(long)]
        kind: BoundKind,
        #[arg(long)]
        f0: f64,
        #[arg(long = "L")]
        lipschitz: f64,
        #[arg(long = "D")]
        diameter: f64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long = "T")]
        t: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` configuration file; flags override it.
    config: Option<PathBuf>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long = "K")]
    k: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long = "T")]
    t: Option<String>,
    /// Comma-separated estimator names.
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    schedule: Option<String>,
    /// Comma-separated seeds.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    batch: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long = "tau-zo")]
    tau_zo: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Extra `key=value` settings.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    sequential: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Parse { .. } | Error::Domain(_) | Error::Dimension { .. } => 1,
        Error::Invariant(_) | Error::NonConvergence { .. } | Error::TooLarge(_) => 2,
        Error::Io(_) => 3,
    }
}

fn cmd_run(args: RunArgs) -> bsfw::Result<()> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path)?,
        None => String::new(),
    };
    let mut overrides = Vec::new();
    for (key, v) in [
        ("tau", &args.tau),
        ("K", &args.k),
        ("delta", &args.delta),
        ("T", &args.t),
        ("estimators", &args.estimator),
        ("schedule", &args.schedule),
        ("seeds", &args.seed),
        ("batch", &args.batch),
        ("p", &args.p),
        ("tau_zo", &args.tau_zo),
        ("out", &args.out),
    ] {
        if let Some(v) = v {
            overrides.push((key.to_string(), v.clone()));
        }
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config { key: kv.clone(), message: "expected KEY=VALUE".into() })?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    let cfg = parse_config_with(&text, &overrides)?;
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    let out = run_experiment(&cfg, exec)?;
    println!("run_id,iterations,final_loss,boosting_percentage,total_samples");
    for r in &out.summary {
        println!(
            "{},{},{:.6e},{:.1},{}",
            r.run_id, r.iterations, r.final_loss, r.boosting_percentage, r.total_samples
        );
    }
    eprintln!("wrote {} files to {}", out.files.len(), cfg.out.display());
    Ok(())
}

fn cmd_compare(summary: PathBuf) -> bsfw::Result<()> {
    let rows = read_summary(fs::File::open(&summary)?)?;
    let c = compare(&rows)?;
    println!("estimator,pairs,bsfw_median,sfw_median,bsfw_wins,ties,boosting_pct,flagged");
    for e in &c.estimators {
        println!(
            "{},{},{:.6e},{:.6e},{},{},{:.1},{}",
            e.estimator,
            e.pairs,
            e.bsfw_median_loss,
            e.sfw_median_loss,
            e.bsfw_wins,
            e.ties,
            e.mean_boosting_percentage,
            e.flagged
        );
    }
    println!("total: BSFW lower in {}/{} pairs", c.total_wins(), c.total_pairs());
    Ok(())
}

fn validation_problem() -> bsfw::Result<Problem> {
    let centers = vec![
        vec![0.6, -0.2, 0.1],
        vec![-0.4, 0.5, 0.0],
        vec![0.2, 0.3, -0.7],
        vec![0.9, -0.6, 0.4],
        vec![-0.1, 0.0, 0.8],
    ];
    let weights = vec![
        vec![1.0, 2.0, 0.5],
        vec![0.5, 1.0, 1.5],
        vec![2.0, 0.5, 1.0],
        vec![1.0, 1.0, 1.0],
        vec![1.5, 0.5, 2.0],
    ];
    Problem::weighted_quadratic(centers, weights)
}

fn cmd_validate(steps: usize, seed: u64, tol: f64) -> bsfw::Result<()> {
    let quad = validation_problem()?;
    let quad_set = ConstraintSet::l1_ball(1.0, quad.dim())?;
    // SAG works in the logistic dual.
    let logistic = synth_logistic(3, 4, 0.7, 8)?.into_problem()?;
    let log_set = ConstraintSet::l1_ball(5.0, logistic.dim())?;
    let horizon = steps + 1;
    let kinds = [
        EstimatorKind::Full,
        EstimatorKind::Sag { batch: 2 },
        EstimatorKind::Saga { batch: 2 },
        EstimatorKind::LSvrg { batch: 2, p: 0.3 },
        EstimatorKind::Sarah { batch: 2, p: 0.3 },
        EstimatorKind::Sega,
        EstimatorKind::Jaguar { at_current: false },
        EstimatorKind::Zoja { tau_zo: 1e-3 },
        EstimatorKind::HeavyBall { batch: 2, momentum: Schedule::HeavyBallNonconvex },
    ];
    let mut failed = Vec::new();
    println!("estimator,steps,max_ratio,pass");
    for kind in kinds {
        let (problem, set) = match kind {
            EstimatorKind::Sag { .. } => (&logistic, &log_set),
            _ => (&quad, &quad_set),
        };
        let mut cfg = SolverConfig::new(kind, Schedule::StochNonconvexHorizon { horizon }, horizon);
        cfg.seed = seed;
        let report = measure_recursion(problem, set, &cfg, steps)?;
        let pass = report.passes(tol);
        println!("{},{},{:.6},{}", report.estimator, report.steps.len(), report.max_ratio(), pass);
        if !pass {
            failed.push(report.estimator);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Invariant(format!("recursion exceeded for {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(*args),
        Command::Compare { summary } => cmd_compare(summary),
        Command::ValidateEstimators { steps, seed, tol } => cmd_validate(steps, seed, tol),
        Command::Bounds { kind, f0, lipschitz, diameter, rho, t } => {
            let mut inp = BoundInputs::new(f0, lipschitz, diameter);
            inp.rho = rho;
            theorem_bound(kind, &inp, t).map(|v| println!("{v:.16e}"))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

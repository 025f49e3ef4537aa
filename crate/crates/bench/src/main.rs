//! `oclab`: run optimal-control benchmarks, train the learned controllers,
//! and render the comparison artifacts.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use oclab_bench::artifacts::{gen_data, train_operator_stage, train_pdeop_stage, StageOutcome};
use oclab_bench::config::ExperimentConfig;
use oclab_bench::plot::Series;
use oclab_bench::record::append_to_ledger;
use oclab_bench::runner::run_experiment;
use oclab_bench::suite::{default_suite, operator_triptychs, parse_suite, run_suite, SuiteOptions};
use oclab_bench::systems::{MethodId, SystemId, TargetId};
use oclab_bench::table::{render_table, TableRow};
use oclab_bench::ArtifactPaths;

#[derive(Parser)]
#[command(
    name = "oclab",
    version,
    about = "Benchmarks classical and learned controllers on three PDE plants"
)]
struct Cli {
    /// Output directory for ledgers, records, tables, and plots.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,

    /// Dataset/checkpoint directory; defaults to `{out}/artifacts`.
    #[arg(long, global = true)]
    artifacts: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a config file.
    Simulate {
        /// Path to a `key = value` experiment config.
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one experiment assembled from command-line flags.
    Baseline(BaselineArgs),
    /// Sample the control/rollout training datasets.
    GenData {
        #[command(flatten)]
        stage: StageArgs,
        /// Sampling seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit the one-step neural operators to the stored datasets.
    TrainOperator {
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Train the neural controllers against the fitted operators.
    TrainPdeop {
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Run a suite of experiments in parallel and render the table.
    Bench {
        /// Manifest listing config paths (one per line); defaults to the
        /// stock nine-row matrix.
        #[arg(long)]
        suite: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Render operator fidelity triptychs from stored artifacts.
    Plot,
}

#[derive(Args)]
struct BaselineArgs {
    /// Plant: voltage, heat, or burgers.
    #[arg(long)]
    system: SystemId,
    /// Controller: direct, adjoint, lmpc, nmpc, or pdeop.
    #[arg(long)]
    method: MethodId,
    /// Target profile: constant, ramp, sine, parabola, or zero.
    #[arg(long)]
    target: TargetId,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Spatial points (defaults per system).
    #[arg(long)]
    n: Option<usize>,
    /// Time steps (defaults per system).
    #[arg(long)]
    steps: Option<usize>,
    /// Receding horizon for lmpc/nmpc (and adjoint on heat).
    #[arg(long)]
    horizon: Option<usize>,
    /// Optimizer iteration cap.
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Args)]
struct StageArgs {
    /// Restrict to one system; all three when omitted.
    #[arg(long)]
    system: Option<SystemId>,
    /// Rebuild even when the outputs already exist.
    #[arg(long)]
    force: bool,
}

impl StageArgs {
    fn systems(&self) -> Vec<SystemId> {
        match self.system {
            Some(system) => vec![system],
            None => SystemId::ALL.to_vec(),
        }
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let out = cli.out.clone();
    let artifacts = ArtifactPaths::new(
        cli.artifacts
            .clone()
            .unwrap_or_else(|| out.join("artifacts")),
    );

    match cli.command {
        Command::Simulate { config } => {
            let experiment = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            run_single(experiment, &out, &artifacts)
        }
        Command::Baseline(args) => {
            let mut experiment = ExperimentConfig::new(args.system, args.method, args.target);
            experiment.seed = args.seed;
            experiment.n = args.n;
            experiment.steps = args.steps;
            experiment.horizon = args.horizon;
            experiment.max_iters = args.max_iters;
            run_single(experiment, &out, &artifacts)
        }
        Command::GenData { stage, seed } => {
            for system in stage.systems() {
                let outcome = gen_data(system, &artifacts, seed, stage.force)?;
                report_stage(&format!("gen-data {system}"), outcome);
            }
            Ok(())
        }
        Command::TrainOperator { stage } => {
            for system in stage.systems() {
                let outcome = train_operator_stage(system, &artifacts, stage.force)?;
                report_stage(&format!("train-operator {system}"), outcome);
            }
            Ok(())
        }
        Command::TrainPdeop { stage } => {
            for system in stage.systems() {
                let outcome = train_pdeop_stage(system, &artifacts, stage.force)?;
                report_stage(&format!("train-pdeop {system}"), outcome);
            }
            Ok(())
        }
        Command::Bench { suite, jobs } => {
            let configs = match suite {
                Some(path) => parse_suite(&path)
                    .with_context(|| format!("reading suite {}", path.display()))?,
                None => default_suite(),
            };
            let options = SuiteOptions {
                jobs,
                out: out.clone(),
                artifacts,
            };
            let report = run_suite(&configs, &options)?;
            print!("{}", report.table_text);
            for row in &report.rows {
                if let Err(message) = &row.outcome {
                    eprintln!(
                        "failed: {} {} {}: {message}",
                        row.system, row.method, row.target
                    );
                }
            }
            println!(
                "{} of {} rows succeeded; outputs in {}",
                report.rows.len() - report.failures,
                report.rows.len(),
                out.display()
            );
            if report.failures == report.rows.len() && !report.rows.is_empty() {
                bail!("every row failed");
            }
            Ok(())
        }
        Command::Plot => {
            let written = operator_triptychs(&artifacts, &out.join("plots"))?;
            if written.is_empty() {
                println!(
                    "no operator checkpoints under {}; run gen-data and train-operator first",
                    artifacts.root().display()
                );
            }
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn report_stage(stage: &str, outcome: StageOutcome) {
    match outcome {
        StageOutcome::Built => println!("{stage}: built"),
        StageOutcome::Skipped => println!("{stage}: up to date (use --force to rebuild)"),
    }
}

/// Runs one experiment, appends it to the ledger, writes its JSON record and
/// terminal-profile plot, and prints a one-row table.
fn run_single(
    experiment: ExperimentConfig,
    out: &PathBuf,
    artifacts: &ArtifactPaths,
) -> anyhow::Result<()> {
    // Paths named inside the config file win over the CLI defaults.
    let out = experiment.out.clone().unwrap_or_else(|| out.clone());
    let artifacts = experiment
        .artifacts
        .clone()
        .map(ArtifactPaths::new)
        .unwrap_or_else(|| artifacts.clone());

    let resolved = experiment.resolve()?;
    let run = run_experiment(&resolved, &artifacts)?;

    append_to_ledger(&out.join("ledger.csv"), &run.record)?;
    run.record
        .write_json(&out.join("records").join(format!("{}.json", resolved.hash())))?;

    let series = vec![
        Series::dashed("target", run.target.iter().copied().collect()),
        Series::solid(
            resolved.method.to_string(),
            run.terminal.iter().copied().collect(),
        ),
    ];
    let plot = out.join("plots").join(format!(
        "{}_{}_{}.svg",
        resolved.system, resolved.target, resolved.method
    ));
    oclab_bench::plot::write_overlay_svg(
        &plot,
        &format!(
            "{} / {}: terminal state, n={}",
            resolved.system, resolved.target, resolved.n
        ),
        &run.xs,
        &series,
    )?;

    print!("{}", render_table(&[TableRow::from_record(&run.record)]));
    println!("record {}; plot {}", resolved.hash(), plot.display());
    Ok(())
}

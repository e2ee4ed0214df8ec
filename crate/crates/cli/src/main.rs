//! `sorq` — run seeded experiments, measure estimator bias, and solve MDPs
//! exactly from the command line.
//!
//! Exit codes: 0 on success, 1 on configuration errors, 2 when any run was
//! aborted by divergence (non-finite Q values).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use sorq_core::bias::{double_estimator_bias, single_max_bias, sor_weighted_bias, EstimatorProblem};
use sorq_core::harness::{
    self, aggregate, any_diverged, run_experiment, run_experiment_parallel, GroupField,
};
use sorq_core::mdp::TabularMdp;
use sorq_core::rng::substream;

#[derive(Parser)]
#[command(name = "sorq", version, about = "Over-relaxed Q-learning lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and emit records as CSV.
    Run(RunArgs),
    /// Monte-Carlo estimator-bias grid, emitted as CSV.
    Bias(BiasArgs),
    /// Solve an MDP file exactly and print the fixed point.
    Oracle(OracleArgs),
    /// Inspect the shipped experiment presets.
    Presets(PresetArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON, schema sorq-experiment/1).
    #[arg(long)]
    config: PathBuf,
    /// Write records CSV here (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render an SVG plot of the first metric, averaged over seeds.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Worker threads for running (agent, seed) pairs.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

#[derive(Args)]
struct BiasArgs {
    /// Grid file (JSON), see README for the schema.
    #[arg(long)]
    grid: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// MDP file (JSON).
    #[arg(long)]
    mdp: PathBuf,
    /// Relaxation weight: a real, or "star" for w*.
    #[arg(long, default_value = "1")]
    w: String,
    /// Convergence tolerance in the ∞-norm.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_iter: usize,
}

#[derive(Args)]
struct PresetArgs {
    #[command(subcommand)]
    command: PresetCommand,
}

#[derive(Subcommand)]
enum PresetCommand {
    /// List the shipped preset names.
    List,
    /// Print a preset as a config file.
    Show { name: String },
}

/// Bias grid file: the cross product of the listed values, one CSV row per
/// (estimator, d, w, k, coupled) cell.
#[derive(Deserialize)]
struct BiasGrid {
    arm_mean: f64,
    arm_std: f64,
    #[serde(default = "default_d")]
    d: Vec<usize>,
    #[serde(default = "default_w")]
    w: Vec<f64>,
    #[serde(default = "default_k")]
    k: Vec<usize>,
    #[serde(default = "default_coupled")]
    coupled: Vec<bool>,
    trials: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_estimators")]
    estimators: Vec<String>,
}

fn default_d() -> Vec<usize> {
    vec![38]
}
fn default_w() -> Vec<f64> {
    vec![1.0]
}
fn default_k() -> Vec<usize> {
    vec![1]
}
fn default_coupled() -> Vec<bool> {
    vec![true]
}
fn default_estimators() -> Vec<String> {
    vec!["single".into(), "sor".into(), "double".into()]
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run(args) => {
            let spec = harness::ExperimentSpec::load_json(&args.config)?;
            let records = if args.parallel > 1 {
                run_experiment_parallel(&spec, args.parallel)?
            } else {
                run_experiment(&spec)?
            };
            match &args.out {
                Some(path) => {
                    let file = std::fs::File::create(path)?;
                    harness::write_records_csv(&records, std::io::BufWriter::new(file))?;
                }
                None => {
                    harness::write_records_csv(&records, std::io::stdout().lock())?;
                }
            }
            if let Some(plot_path) = &args.plot {
                let metric_tag = records
                    .iter()
                    .map(|r| r.metric.as_str())
                    .find(|m| *m != harness::DIVERGED_TAG)
                    .ok_or("no metric records to plot")?
                    .to_string();
                let plottable: Vec<_> = records
                    .iter()
                    .filter(|r| r.metric == metric_tag)
                    .cloned()
                    .collect();
                let summaries = aggregate(
                    &plottable,
                    &[GroupField::Algorithm, GroupField::Index, GroupField::Metric],
                )?;
                harness::write_plot(&summaries, plot_path)?;
            }
            if any_diverged(&records) {
                eprintln!("warning: at least one run diverged and was truncated");
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bias(args) => {
            let grid: BiasGrid = serde_json::from_str(&std::fs::read_to_string(&args.grid)?)?;
            let mut out = String::from("estimator,d,w,k,coupled,trials,bias,se\n");
            let mut stream_id = 0u64;
            for estimator in &grid.estimators {
                for &d in &grid.d {
                    for &w in &grid.w {
                        for &k in &grid.k {
                            for &coupled in &grid.coupled {
                                let problem = EstimatorProblem::symmetric(
                                    d,
                                    grid.arm_mean,
                                    grid.arm_std,
                                    k,
                                    w,
                                    coupled,
                                );
                                let mut rng = substream(grid.seed, stream_id);
                                stream_id += 1;
                                let est = match estimator.as_str() {
                                    "single" => single_max_bias(&problem, grid.trials, &mut rng),
                                    "sor" => sor_weighted_bias(&problem, grid.trials, &mut rng),
                                    "double" => {
                                        double_estimator_bias(&problem, grid.trials, &mut rng)
                                    }
                                    other => {
                                        return Err(format!(
                                            "unknown estimator '{other}' (single|sor|double)"
                                        )
                                        .into())
                                    }
                                };
                                out.push_str(&format!(
                                    "{estimator},{d},{w},{k},{coupled},{},{:.16e},{:.16e}\n",
                                    grid.trials, est.bias, est.std_error
                                ));
                            }
                        }
                    }
                }
            }
            std::fs::write(&args.out, out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle(args) => {
            let mdp = TabularMdp::load_json(&args.mdp)?;
            let violations = mdp.validate();
            if !violations.is_empty() {
                for v in &violations {
                    eprintln!("invalid mdp: {v}");
                }
                return Ok(ExitCode::from(1));
            }
            let w_star = mdp.sor_star();
            let w = match args.w.as_str() {
                "star" => w_star,
                text => text.parse::<f64>().map_err(|_| "bad --w (real or 'star')")?,
            };
            let (q, iterations) = mdp.solve_fixed_point(w, args.tol, args.max_iter)?;
            println!("w_star: {w_star:.12}");
            println!("w: {w:.12}");
            println!("iterations: {iterations}");
            println!("state,action,q");
            for state in 0..mdp.n_states {
                for action in 0..mdp.n_actions {
                    println!("{state},{action},{:.16e}", q[(state, action)]);
                }
            }
            let (values, _) = q.greedy_values_and_policy();
            println!("state,value");
            for (state, value) in values.iter().enumerate() {
                println!("{state},{value:.16e}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Presets(args) => {
            match args.command {
                PresetCommand::List => {
                    for name in harness::preset_names() {
                        println!("{name}");
                    }
                }
                PresetCommand::Show { name } => {
                    let preset = harness::preset_by_name(&name)
                        .ok_or_else(|| format!("unknown preset '{name}'"))?;
                    println!("{}", preset.to_json_string()?);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

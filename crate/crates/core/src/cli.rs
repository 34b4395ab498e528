//! The `monmdp` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::agents::AgentKind;
use crate::envs::{self, file::load_monmdp};
use crate::experiments::{
    self, report, run_suite, AggregateResult, Experiment, ExperimentConfig, SweepOptions,
};
use crate::model::{JointAction, MonMdp};
use crate::planning;
use crate::taxonomy;

#[derive(Debug, Parser)]
#[command(name = "monmdp", version, about = "Tabular experiments on monitored MDPs")]
pub struct Cli {
    /// Worker threads for seed-level parallelism. Results do not depend on it.
    #[arg(long, global = true, default_value_t = default_jobs())]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = "MONMDP_OUT", default_value = "monmdp-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Values to sweep.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = vec![-10.0, 0.0, 1.0])]
    pub values: Vec<f64>,
    /// Instances (names or files).
    #[arg(long, value_delimiter = ',', default_values_t = vec!["simple".to_string(), "penalty".to_string(), "button".to_string()])]
    pub envs: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed_base: u64,
    #[arg(long, default_value_t = 10_000)]
    pub steps: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an agent on many seeds and write curves, aggregate and policy CSVs.
    Run {
        /// Instance name (see list-envs) or path to an instance file.
        #[arg(long)]
        env: String,
        /// oracle, constant-assign(C), ignore, joint, sequential or reward-model.
        #[arg(long)]
        agent: AgentKind,
        /// Gaussian reward noise (sd 0.05) and the longer noisy protocol.
        #[arg(long)]
        noisy: bool,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        /// Training steps; defaults to 10,000 (100,000 with --noisy).
        #[arg(long)]
        steps: Option<u64>,
        /// Convergence window; defaults to a fifth of the training steps.
        #[arg(long)]
        window: Option<u64>,
        #[arg(long, allow_hyphen_values = true, default_value_t = -10.0)]
        q_init: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// ConstantAssign with each value assigned to unobservable rewards.
    SweepUnobservable(SweepArgs),
    /// Every agent with each initial Q-value.
    SweepQinit(SweepArgs),
    /// Print the solvability analysis of an instance.
    Classify {
        #[arg(long)]
        env: String,
        /// Print a CSV row instead of the text report.
        #[arg(long)]
        csv: bool,
    },
    /// Train one seed (or plan) and draw the greedy policy.
    RenderPolicy {
        #[arg(long)]
        env: String,
        /// Agent to train; omit to draw the optimal policy.
        #[arg(long)]
        agent: Option<AgentKind>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
    },
    /// List the built-in instances with their monitor metadata.
    ListEnvs,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Load(#[from] envs::file::LoadError),
    #[error("{0}")]
    Experiment(#[from] experiments::ExperimentError),
    #[error("{0}")]
    Planning(#[from] planning::PlanningError),
    #[error("unknown instance `{0}` (see list-envs)")]
    UnknownEnv(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Resolves an instance name or file path.
pub fn resolve_env(spec: &str) -> Result<MonMdp, CliError> {
    if let Some(m) = envs::by_name(spec) {
        return Ok(m);
    }
    let path = Path::new(spec);
    if path.exists() || spec.ends_with(".toml") {
        return Ok(load_monmdp(path)?);
    }
    Err(CliError::UnknownEnv(spec.to_string()))
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let jobs = cli.jobs.max(1);
    match cli.command {
        Command::Run {
            env,
            agent,
            noisy,
            seeds,
            seed_base,
            steps,
            window,
            q_init,
            out,
        } => {
            let mdp = resolve_env(&env)?;
            let mut cfg = ExperimentConfig::standard(agent, noisy);
            cfg.n_seeds = seeds;
            cfg.seed_base = seed_base;
            cfg.agent.q_init = q_init;
            if let Some(s) = steps {
                cfg.total_steps = s;
                cfg.convergence_window = s / 5;
            }
            if let Some(w) = window {
                cfg.convergence_window = w;
            }
            let exp = Experiment::new(mdp, cfg)?;
            let agg = run_suite(&exp, jobs)?;
            write_outputs(&out.out, "run", std::slice::from_ref(&agg), Some(&exp), jobs)?;
            print_aggregate(std::slice::from_ref(&agg));
        }
        Command::SweepUnobservable(args) => {
            let mdps = args.envs.iter().map(|e| resolve_env(e)).collect::<Result<Vec<_>, _>>()?;
            let results = experiments::ablation_unobservable_value(&mdps, &args.values, &sweep_options(&args, jobs))?;
            write_outputs(&args.out.out, "sweep-unobservable", &results, None, jobs)?;
            print_aggregate(&results);
        }
        Command::SweepQinit(args) => {
            let mdps = args.envs.iter().map(|e| resolve_env(e)).collect::<Result<Vec<_>, _>>()?;
            let pairs = experiments::ablation_qinit(&mdps, &args.values, &sweep_options(&args, jobs))?;
            let results: Vec<AggregateResult> = pairs
                .into_iter()
                .map(|(q, mut agg)| {
                    agg.agent = format!("{}[q_init={q}]", agg.agent);
                    agg
                })
                .collect();
            write_outputs(&args.out.out, "sweep-qinit", &results, None, jobs)?;
            print_aggregate(&results);
        }
        Command::Classify { env, csv } => {
            let mdp = resolve_env(&env)?;
            let c = taxonomy::classify(&mdp)?;
            if csv {
                println!("{}", taxonomy::Classification::CSV_HEADER.join(","));
                println!("{}", c.csv_row().join(","));
            } else {
                print!("{}", c.report());
            }
        }
        Command::RenderPolicy {
            env,
            agent,
            seed,
            steps,
        } => {
            let mdp = resolve_env(&env)?;
            let policy: Vec<Option<JointAction>> = match agent {
                Some(kind) => {
                    let mut cfg = ExperimentConfig::standard(kind, false);
                    cfg.n_seeds = 1;
                    cfg.total_steps = steps;
                    cfg.convergence_window = steps / 5;
                    let exp = Experiment::new(mdp.clone(), cfg)?;
                    experiments::run_training(&exp, seed).policy
                }
                None => {
                    let plan = planning::plan_optimal(&mdp)?;
                    (0..mdp.n_joint_states())
                        .map(|js| plan.policy.action(js).map(|a| mdp.action_at(a)))
                        .collect()
                }
            };
            print!("{}", report::render_policy(&mdp, &policy));
        }
        Command::ListEnvs => {
            println!("name,monitor_states,monitor_actions,dimensionality,explicit_monitor_actions,description");
            for e in envs::catalog() {
                let m = (e.build)();
                let mon = m.monitor();
                println!(
                    "{},{},{},{},{},{}",
                    e.name,
                    mon.n_mon_states(),
                    mon.n_mon_actions(),
                    mon.n_mon_states() * mon.n_mon_actions(),
                    mon.n_mon_actions() > 1,
                    e.summary
                );
            }
        }
    }
    Ok(())
}

fn sweep_options(args: &SweepArgs, jobs: usize) -> SweepOptions {
    SweepOptions {
        n_seeds: args.seeds,
        seed_base: args.seed_base,
        total_steps: args.steps,
        jobs,
    }
}

fn print_aggregate(results: &[AggregateResult]) {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let _ = writeln!(out, "{}", report::AGGREGATE_HEADER.join(","));
    for a in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            a.monmdp,
            a.agent,
            a.noisy,
            a.percent_optimal,
            a.mean_steps.map(|v| format!("{v:.1}")).unwrap_or_default(),
            a.ci95.map(|v| format!("{v:.1}")).unwrap_or_default(),
            a.n_seeds
        );
    }
}

fn write_outputs(
    dir: &Path,
    command: &str,
    results: &[AggregateResult],
    exp: Option<&Experiment>,
    jobs: usize,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    report::write_curves(&dir.join("curves.csv"), results)?;
    report::write_aggregate(&dir.join("aggregate.csv"), results)?;
    let mut files = vec!["curves.csv", "aggregate.csv"];
    let mut config = serde_json::Value::Null;
    if let Some(exp) = exp {
        if let Some(run) = results.first().and_then(|a| a.runs.first()) {
            report::export_policy(exp.mdp(), &run.policy, &dir.join("policy.csv"))?;
            files.push("policy.csv");
        }
        let c = exp.config();
        config = json!({
            "monmdp": exp.mdp().name,
            "gamma": exp.mdp().gamma(),
            "horizon": exp.mdp().horizon(),
            "agent": c.agent.kind.to_string(),
            "q_init": c.agent.q_init,
            "learning_rate": c.agent.learning_rate,
            "oracle_reward_model": c.agent.use_reward_model_in_oracle,
            "total_steps": c.total_steps,
            "eval_every": c.eval_every,
            "convergence_window": c.convergence_window,
            "convergence_tol": experiments::CONVERGENCE_TOL,
            "n_seeds": c.n_seeds,
            "seed_base": c.seed_base,
            "noisy": c.noisy,
            "noise_sd": if c.noisy { c.noise_sd } else { 0.0 },
            "optimal_return": exp.optimal_return(),
        });
    }
    let manifest = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "jobs": jobs,
        "config": config,
        "suites": results.iter().map(|a| json!({
            "monmdp": a.monmdp,
            "agent": a.agent,
            "noisy": a.noisy,
            "n_seeds": a.n_seeds,
            "optimal_return": a.optimal_return,
        })).collect::<Vec<_>>(),
        "files": files,
    });
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    std::fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(())
}

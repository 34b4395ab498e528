//! Multi-seed training runs with exact greedy evaluation.

pub mod convergence;
pub mod report;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::agents::{Agent, AgentConfig, AgentKind, Schedule, Tie};
use crate::model::{JointAction, ModelError, MonMdp};
use crate::planning::{self, JointModel, PlanningError, RewardMode};
use crate::sim;

pub use convergence::{detect_convergence, CONVERGENCE_TOL};

/// Standard deviation of the Gaussian reward noise in noisy runs.
pub const NOISE_SD: f64 = 0.05;
/// Distance to the optimal return under which a run counts as optimal.
pub const OPTIMAL_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Planning(#[from] PlanningError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv { path: String, source: csv::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub agent: AgentConfig,
    pub total_steps: u64,
    pub eval_every: u64,
    pub convergence_window: u64,
    pub n_seeds: u64,
    pub seed_base: u64,
    pub noisy: bool,
    pub noise_sd: f64,
}

impl ExperimentConfig {
    /// The benchmark protocol: 10,000 steps and a 2,000-step window, or 100,000 and
    /// 20,000 with noisy rewards; evaluation every 10 steps; 100 seeds.
    pub fn standard(kind: AgentKind, noisy: bool) -> Self {
        let mut agent = AgentConfig::new(kind);
        agent.use_reward_model_in_oracle = noisy;
        Self {
            agent,
            total_steps: if noisy { 100_000 } else { 10_000 },
            eval_every: 10,
            convergence_window: if noisy { 20_000 } else { 2_000 },
            n_seeds: 100,
            seed_base: 0,
            noisy,
            noise_sd: NOISE_SD,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.agent.validate().map_err(ExperimentError::Config)?;
        if self.eval_every == 0 || self.total_steps % self.eval_every != 0 {
            return Err(ExperimentError::Config(format!(
                "eval_every ({}) must divide total_steps ({})",
                self.eval_every, self.total_steps
            )));
        }
        if self.convergence_window >= self.total_steps {
            return Err(ExperimentError::Config(format!(
                "convergence window ({}) must be shorter than training ({})",
                self.convergence_window, self.total_steps
            )));
        }
        if self.n_seeds == 0 {
            return Err(ExperimentError::Config("need at least one seed".into()));
        }
        Ok(())
    }
}

/// Outcome of one seeded training run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    /// `(training step, expected discounted return of the greedy policy)`.
    pub curve: Vec<(u64, f64)>,
    pub converged: bool,
    pub convergence_step: Option<u64>,
    pub converged_to_optimal: bool,
    pub final_return: f64,
    /// Greedy joint action per joint state; `None` at terminal states.
    pub policy: Vec<Option<JointAction>>,
    pub agent: Agent,
}

/// Seed-level summary of a suite.
#[derive(Debug, Clone)]
pub struct AggregateResult {
    pub monmdp: String,
    pub agent: String,
    pub noisy: bool,
    pub percent_optimal: f64,
    /// Mean convergence step over the seeds that reached an optimal policy.
    pub mean_steps: Option<f64>,
    pub ci95: Option<f64>,
    pub n_seeds: usize,
    pub optimal_return: f64,
    pub runs: Vec<RunResult>,
}

/// A prepared experiment: the training model, the noise-free evaluation chain and
/// the optimal reference return.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    mdp: MonMdp,
    train: MonMdp,
    eval: JointModel,
    optimal_return: f64,
}

impl Experiment {
    pub fn new(mdp: MonMdp, mut config: ExperimentConfig) -> Result<Self, ExperimentError> {
        config.agent.gamma = mdp.gamma();
        config.validate()?;
        let clean = mdp.with_noise(0.0)?;
        let train = if config.noisy {
            mdp.with_noise(config.noise_sd)?
        } else {
            clean.clone()
        };
        let eval = planning::joint_transition(&clean, &RewardMode::Joint)?;
        let optimal_return = planning::plan_optimal(&clean)?.expected_return;
        Ok(Self {
            config,
            mdp: clean,
            train,
            eval,
            optimal_return,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn mdp(&self) -> &MonMdp {
        &self.mdp
    }

    pub fn optimal_return(&self) -> f64 {
        self.optimal_return
    }

    fn greedy_policy(&self, agent: &Agent, salt: u64) -> Vec<Option<JointAction>> {
        let mut tie = Tie::<ChaCha8Rng>::Fixed(salt);
        (0..self.mdp.n_joint_states())
            .map(|js| {
                let s = self.mdp.state_at(js);
                (!self.mdp.is_terminal(s)).then(|| agent.greedy(s, &mut tie))
            })
            .collect()
    }

    fn evaluate(&self, agent: &Agent, salt: u64) -> f64 {
        let mut tie = Tie::<ChaCha8Rng>::Fixed(salt);
        let mdp = &self.mdp;
        self.eval
            .evaluate_with(mdp.horizon(), |js| {
                Some(mdp.action_index(agent.greedy(mdp.state_at(js), &mut tie)))
            })
            .expect("greedy policy is defined everywhere")
    }
}

fn eval_salt(seed: u64) -> u64 {
    seed ^ 0x5eed_e7a1_0000_0000
}

/// Trains one agent from scratch with the given seed.
pub fn run_training(exp: &Experiment, seed: u64) -> RunResult {
    let cfg = &exp.config;
    let mdp = &exp.train;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agent = Agent::new(cfg.agent.clone(), mdp);
    let schedule = Schedule {
        total_steps: cfg.total_steps,
    };
    let salt = eval_salt(seed);
    let mut curve = Vec::with_capacity((cfg.total_steps / cfg.eval_every) as usize);
    let mut state = sim::reset(mdp, &mut rng);
    let mut episode_steps = 0;
    for t in 0..cfg.total_steps {
        let action = agent.act(state, schedule.epsilon(t), &mut rng);
        let step = sim::step(mdp, state, action, &mut rng).expect("agent acts from live states");
        agent.observe(&step, &mut rng);
        episode_steps += 1;
        if step.done || episode_steps >= mdp.horizon() {
            state = sim::reset(mdp, &mut rng);
            episode_steps = 0;
        } else {
            state = step.next_state;
        }
        if (t + 1) % cfg.eval_every == 0 {
            curve.push((t + 1, exp.evaluate(&agent, salt)));
        }
    }
    let final_return = curve.last().map_or(f64::NAN, |c| c.1);
    let convergence_step = detect_convergence(&curve, cfg.convergence_window, CONVERGENCE_TOL);
    let converged = convergence_step.is_some();
    RunResult {
        seed,
        converged,
        convergence_step,
        converged_to_optimal: converged && (final_return - exp.optimal_return).abs() < OPTIMAL_TOL,
        final_return,
        policy: exp.greedy_policy(&agent, salt),
        curve,
        agent,
    }
}

/// Runs seeds `seed_base .. seed_base + n_seeds` on `jobs` threads. The result does
/// not depend on `jobs`.
pub fn run_suite(exp: &Experiment, jobs: usize) -> Result<AggregateResult, ExperimentError> {
    let cfg = &exp.config;
    let seeds: Vec<u64> = (0..cfg.n_seeds).map(|i| cfg.seed_base + i).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let runs: Vec<RunResult> = pool.install(|| seeds.par_iter().map(|&s| run_training(exp, s)).collect());
    Ok(aggregate(exp, runs))
}

fn aggregate(exp: &Experiment, runs: Vec<RunResult>) -> AggregateResult {
    let steps: Vec<f64> = runs
        .iter()
        .filter(|r| r.converged_to_optimal)
        .filter_map(|r| r.convergence_step)
        .map(|s| s as f64)
        .collect();
    let (mean_steps, ci95) = mean_ci(&steps);
    AggregateResult {
        monmdp: exp.mdp.name.clone(),
        agent: exp.config.agent.kind.to_string(),
        noisy: exp.config.noisy,
        percent_optimal: 100.0 * steps.len() as f64 / runs.len() as f64,
        mean_steps,
        ci95,
        n_seeds: runs.len(),
        optimal_return: exp.optimal_return,
        runs,
    }
}

/// Mean and 95% normal-approximation half-width.
pub fn mean_ci(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (Some(mean), Some(0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(1.96 * var.sqrt() / n.sqrt()))
}

/// Shared knobs for the sweeps.
#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub n_seeds: u64,
    pub seed_base: u64,
    pub total_steps: u64,
    pub jobs: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            n_seeds: 100,
            seed_base: 0,
            total_steps: 10_000,
            jobs: 1,
        }
    }
}

fn sweep_config(kind: AgentKind, opts: &SweepOptions) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::standard(kind, false);
    cfg.n_seeds = opts.n_seeds;
    cfg.seed_base = opts.seed_base;
    cfg.total_steps = opts.total_steps;
    cfg.convergence_window = cfg.convergence_window.min(opts.total_steps / 5);
    cfg
}

/// ConstantAssign with each value in `values` on each instance.
pub fn ablation_unobservable_value(
    mdps: &[MonMdp],
    values: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<AggregateResult>, ExperimentError> {
    let mut out = Vec::new();
    for mdp in mdps {
        for &c in values {
            let exp = Experiment::new(mdp.clone(), sweep_config(AgentKind::ConstantAssign(c), opts))?;
            out.push(run_suite(&exp, opts.jobs)?);
        }
    }
    Ok(out)
}

/// Every agent with each Q-table initial value in `values` on each instance.
/// Returns `(q_init, result)` pairs.
pub fn ablation_qinit(
    mdps: &[MonMdp],
    values: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<(f64, AggregateResult)>, ExperimentError> {
    let mut out = Vec::new();
    for mdp in mdps {
        for &q in values {
            for kind in AgentKind::ALL {
                let mut cfg = sweep_config(kind, opts);
                cfg.agent.q_init = q;
                let exp = Experiment::new(mdp.clone(), cfg)?;
                out.push((q, run_suite(&exp, opts.jobs)?));
            }
        }
    }
    Ok(out)
}

//! Finite monitored MDPs: an environment MDP paired with a monitor process.
//!
//! The agent acts jointly in both processes. The environment produces a hidden
//! reward, the monitor decides what (if anything) of that reward the agent gets
//! to see, and the monitor pays its own, always-visible reward.
//!
//! All tables are dense and row-major. Models are validated at construction and
//! immutable afterwards, so they can be shared read-only between runs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::GridLayout;

/// Tolerance for probability rows summing to one.
pub const ROW_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{what} must be positive")]
    EmptySpace { what: &'static str },
    #[error("{table} has {actual} entries, expected {expected}")]
    Shape {
        table: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("{table} row {row} sums to {sum}, expected 1")]
    RowSum {
        table: &'static str,
        row: String,
        sum: f64,
    },
    #[error("{table} entry {entry} is {value}, expected a probability in [0, 1]")]
    Probability {
        table: &'static str,
        entry: String,
        value: f64,
    },
    #[error("{table} entry {entry} is not finite")]
    NotFinite { table: &'static str, entry: String },
    #[error("reward mean {value} at (s={state}, a={action}) lies outside reward bounds [{lo}, {hi}]")]
    RewardOutOfBounds {
        state: usize,
        action: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("terminal state {state} must be absorbing with zero reward (action {action})")]
    TerminalNotAbsorbing { state: usize, action: usize },
    #[error("reward noise standard deviation must be finite and nonnegative, got {0}")]
    Noise(f64),
    #[error("monitor declared truthful but proxy rule at (mon_state={mon_state}, mon_action={mon_action}, next_mon_state={next_mon_state}) is {rule:?}")]
    Untruthful {
        mon_state: usize,
        mon_action: usize,
        next_mon_state: usize,
        rule: ProxyRule,
    },
    #[error("monitor is sized for {monitor_states} env states x {monitor_actions} env actions, environment has {env_states} x {env_actions}")]
    DimensionMismatch {
        monitor_states: usize,
        monitor_actions: usize,
        env_states: usize,
        env_actions: usize,
    },
    #[error("discount must lie in [0, 1), got {0}")]
    Discount(f64),
    #[error("horizon must be at least 1")]
    Horizon,
    #[error("{what} index {index} out of range (size {size})")]
    Index {
        what: &'static str,
        index: usize,
        size: usize,
    },
    #[error("cannot step from terminal environment state {0}")]
    TerminalStep(usize),
    #[error("{0}")]
    Invalid(String),
}

/// What the agent sees in place of the environment reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Proxy {
    Value(f64),
    Unobservable,
}

impl Proxy {
    pub fn value(self) -> Option<f64> {
        match self {
            Proxy::Value(v) => Some(v),
            Proxy::Unobservable => None,
        }
    }

    pub fn is_observed(self) -> bool {
        matches!(self, Proxy::Value(_))
    }
}

/// Deterministic monitor-function output for one `(mon_state, mon_action, next_mon_state)`
/// configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ProxyRule {
    /// Show the environment reward as is.
    Reveal,
    /// Show nothing.
    Hide,
    /// Show the reward clipped to `[lo, hi]`.
    Clip { lo: f64, hi: f64 },
    /// Show the reward plus a constant offset.
    Shift { offset: f64 },
}

impl ProxyRule {
    pub fn apply(self, reward: f64) -> Proxy {
        match self {
            ProxyRule::Reveal => Proxy::Value(reward),
            ProxyRule::Hide => Proxy::Unobservable,
            ProxyRule::Clip { lo, hi } => Proxy::Value(reward.clamp(lo, hi)),
            ProxyRule::Shift { offset } => Proxy::Value(reward + offset),
        }
    }

    /// Whether the rule can only ever produce the exact reward or nothing.
    pub fn is_truthful(self) -> bool {
        matches!(self, ProxyRule::Reveal | ProxyRule::Hide)
    }

    pub fn is_observable(self) -> bool {
        !matches!(self, ProxyRule::Hide)
    }
}

fn check_finite(table: &'static str, values: &[f64]) -> Result<(), ModelError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(ModelError::NotFinite {
            table,
            entry: i.to_string(),
        }),
        None => Ok(()),
    }
}

fn check_distribution(table: &'static str, row: String, probs: &[f64]) -> Result<(), ModelError> {
    for (i, &p) in probs.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(ModelError::Probability {
                table,
                entry: format!("{row}[{i}]"),
                value: p,
            });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > ROW_TOL {
        return Err(ModelError::RowSum { table, row, sum });
    }
    Ok(())
}

fn check_len(table: &'static str, expected: usize, actual: usize) -> Result<(), ModelError> {
    if expected != actual {
        return Err(ModelError::Shape {
            table,
            expected,
            actual,
        });
    }
    Ok(())
}

/// Finite environment MDP. Rewards are `reward_mean + N(0, reward_noise_sd^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvModel {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    reward_mean: Vec<f64>,
    reward_noise_sd: f64,
    terminal: Vec<bool>,
    initial_dist: Vec<f64>,
    reward_bounds: (f64, f64),
}

impl EnvModel {
    /// `transition` is indexed `[state][action][next_state]`, `reward_mean` `[state][action]`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward_mean: Vec<f64>,
        reward_noise_sd: f64,
        terminal: Vec<bool>,
        initial_dist: Vec<f64>,
        reward_bounds: (f64, f64),
    ) -> Result<Self, ModelError> {
        let env = Self {
            n_states,
            n_actions,
            transition,
            reward_mean,
            reward_noise_sd,
            terminal,
            initial_dist,
            reward_bounds,
        };
        env.validate()?;
        Ok(env)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let (ns, na) = (self.n_states, self.n_actions);
        if ns == 0 {
            return Err(ModelError::EmptySpace { what: "n_states" });
        }
        if na == 0 {
            return Err(ModelError::EmptySpace { what: "n_actions" });
        }
        check_len("env transition", ns * na * ns, self.transition.len())?;
        check_len("env reward_mean", ns * na, self.reward_mean.len())?;
        check_len("env terminal", ns, self.terminal.len())?;
        check_len("env initial_dist", ns, self.initial_dist.len())?;
        check_finite("env reward_mean", &self.reward_mean)?;
        if !self.reward_noise_sd.is_finite() || self.reward_noise_sd < 0.0 {
            return Err(ModelError::Noise(self.reward_noise_sd));
        }
        let (lo, hi) = self.reward_bounds;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(ModelError::Invalid(format!(
                "reward bounds [{lo}, {hi}] are not a finite interval"
            )));
        }
        for s in 0..ns {
            for a in 0..na {
                check_distribution(
                    "env transition",
                    format!("(s={s}, a={a})"),
                    self.transition(s, a),
                )?;
                let r = self.reward_mean(s, a);
                if r < lo || r > hi {
                    return Err(ModelError::RewardOutOfBounds {
                        state: s,
                        action: a,
                        value: r,
                        lo,
                        hi,
                    });
                }
                if self.terminal[s] && (self.transition(s, a)[s] != 1.0 || r != 0.0) {
                    return Err(ModelError::TerminalNotAbsorbing {
                        state: s,
                        action: a,
                    });
                }
            }
        }
        check_distribution("env initial_dist", "initial".into(), &self.initial_dist)?;
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Distribution over next states for `(state, action)`.
    pub fn transition(&self, state: usize, action: usize) -> &[f64] {
        let start = (state * self.n_actions + action) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub fn transition_table(&self) -> &[f64] {
        &self.transition
    }

    pub fn reward_mean(&self, state: usize, action: usize) -> f64 {
        self.reward_mean[state * self.n_actions + action]
    }

    pub fn reward_table(&self) -> &[f64] {
        &self.reward_mean
    }

    pub fn reward_noise_sd(&self) -> f64 {
        self.reward_noise_sd
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal[state]
    }

    pub fn terminal_mask(&self) -> &[bool] {
        &self.terminal
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn reward_bounds(&self) -> (f64, f64) {
        self.reward_bounds
    }

    /// Probability that `(state, action)` lands in a terminal state.
    pub fn terminal_probability(&self, state: usize, action: usize) -> f64 {
        self.transition(state, action)
            .iter()
            .zip(&self.terminal)
            .filter(|(_, &t)| t)
            .map(|(p, _)| p)
            .sum()
    }

    pub fn with_noise(&self, sd: f64) -> Result<Self, ModelError> {
        let mut env = self.clone();
        env.reward_noise_sd = sd;
        env.validate()?;
        Ok(env)
    }

    /// Same dynamics with a different mean-reward table. The bounds are widened to
    /// cover the new table.
    pub fn with_reward_means(&self, reward_mean: Vec<f64>) -> Result<Self, ModelError> {
        let mut env = self.clone();
        check_len("env reward_mean", self.reward_mean.len(), reward_mean.len())?;
        let (mut lo, mut hi) = env.reward_bounds;
        for &r in &reward_mean {
            lo = lo.min(r);
            hi = hi.max(r);
        }
        env.reward_mean = reward_mean;
        env.reward_bounds = (lo, hi);
        env.validate()?;
        Ok(env)
    }
}

/// Finite monitor process.
///
/// * transition: `[mon_state][env_state][mon_action][env_action][next_mon_state]`
/// * reward: `[mon_state][mon_action][env_state][env_action][next_mon_state]`
/// * proxy: `[mon_state][mon_action][next_mon_state]`
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorModel {
    n_mon_states: usize,
    n_mon_actions: usize,
    n_env_states: usize,
    n_env_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    proxy: Vec<ProxyRule>,
    initial_dist: Vec<f64>,
    truthful: bool,
}

impl MonitorModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_mon_states: usize,
        n_mon_actions: usize,
        n_env_states: usize,
        n_env_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        proxy: Vec<ProxyRule>,
        initial_dist: Vec<f64>,
        truthful: bool,
    ) -> Result<Self, ModelError> {
        let monitor = Self {
            n_mon_states,
            n_mon_actions,
            n_env_states,
            n_env_actions,
            transition,
            reward,
            proxy,
            initial_dist,
            truthful,
        };
        monitor.validate()?;
        Ok(monitor)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let (nm, nam, ne, nae) = (
            self.n_mon_states,
            self.n_mon_actions,
            self.n_env_states,
            self.n_env_actions,
        );
        if nm == 0 {
            return Err(ModelError::EmptySpace {
                what: "n_mon_states",
            });
        }
        if nam == 0 {
            return Err(ModelError::EmptySpace {
                what: "n_mon_actions",
            });
        }
        check_len("monitor transition", nm * ne * nam * nae * nm, self.transition.len())?;
        check_len("monitor reward", nm * nam * ne * nae * nm, self.reward.len())?;
        check_len("monitor proxy", nm * nam * nm, self.proxy.len())?;
        check_len("monitor initial_dist", nm, self.initial_dist.len())?;
        check_finite("monitor reward", &self.reward)?;
        for sm in 0..nm {
            for se in 0..ne {
                for am in 0..nam {
                    for ae in 0..nae {
                        check_distribution(
                            "monitor transition",
                            format!("(mon_state={sm}, env_state={se}, mon_action={am}, env_action={ae})"),
                            self.transition(sm, se, am, ae),
                        )?;
                    }
                }
            }
        }
        check_distribution("monitor initial_dist", "initial".into(), &self.initial_dist)?;
        if self.truthful {
            for sm in 0..nm {
                for am in 0..nam {
                    for sm2 in 0..nm {
                        let rule = self.proxy_rule(sm, am, sm2);
                        if !rule.is_truthful() {
                            return Err(ModelError::Untruthful {
                                mon_state: sm,
                                mon_action: am,
                                next_mon_state: sm2,
                                rule,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_mon_states(&self) -> usize {
        self.n_mon_states
    }

    pub fn n_mon_actions(&self) -> usize {
        self.n_mon_actions
    }

    pub fn n_env_states(&self) -> usize {
        self.n_env_states
    }

    pub fn n_env_actions(&self) -> usize {
        self.n_env_actions
    }

    /// Distribution over the next monitor state.
    pub fn transition(
        &self,
        mon_state: usize,
        env_state: usize,
        mon_action: usize,
        env_action: usize,
    ) -> &[f64] {
        let row = ((mon_state * self.n_env_states + env_state) * self.n_mon_actions + mon_action)
            * self.n_env_actions
            + env_action;
        &self.transition[row * self.n_mon_states..(row + 1) * self.n_mon_states]
    }

    pub fn transition_table(&self) -> &[f64] {
        &self.transition
    }

    pub fn reward(
        &self,
        mon_state: usize,
        mon_action: usize,
        env_state: usize,
        env_action: usize,
        next_mon_state: usize,
    ) -> f64 {
        let idx = (((mon_state * self.n_mon_actions + mon_action) * self.n_env_states + env_state)
            * self.n_env_actions
            + env_action)
            * self.n_mon_states
            + next_mon_state;
        self.reward[idx]
    }

    pub fn reward_table(&self) -> &[f64] {
        &self.reward
    }

    pub fn proxy_rule(&self, mon_state: usize, mon_action: usize, next_mon_state: usize) -> ProxyRule {
        self.proxy[(mon_state * self.n_mon_actions + mon_action) * self.n_mon_states + next_mon_state]
    }

    pub fn proxy_table(&self) -> &[ProxyRule] {
        &self.proxy
    }

    /// The monitor function: what the agent observes given the hidden reward.
    pub fn monitor_fn(
        &self,
        hidden_reward: f64,
        mon_state: usize,
        mon_action: usize,
        next_mon_state: usize,
    ) -> Proxy {
        self.proxy_rule(mon_state, mon_action, next_mon_state)
            .apply(hidden_reward)
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn is_truthful(&self) -> bool {
        self.truthful
    }

    /// Copy of this monitor that reveals every reward (keeps dynamics and costs).
    pub fn revealing_all(&self) -> Self {
        let mut m = self.clone();
        m.proxy.iter_mut().for_each(|r| *r = ProxyRule::Reveal);
        m.truthful = true;
        m
    }
}

/// Human-readable names used by rendering and CSV export.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Labels {
    pub env_actions: Vec<String>,
    pub mon_states: Vec<String>,
    pub mon_actions: Vec<String>,
}

impl Labels {
    pub fn numbered(n_env_actions: usize, n_mon_states: usize, n_mon_actions: usize) -> Self {
        Self {
            env_actions: (0..n_env_actions).map(|i| format!("a{i}")).collect(),
            mon_states: (0..n_mon_states).map(|i| format!("m{i}")).collect(),
            mon_actions: (0..n_mon_actions).map(|i| format!("q{i}")).collect(),
        }
    }
}

/// Joint state `(env_state, mon_state)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointState {
    pub env: usize,
    pub mon: usize,
}

/// Joint action `(env_action, mon_action)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointAction {
    pub env: usize,
    pub mon: usize,
}

/// Environment, monitor and discount, plus the per-episode step cap.
#[derive(Debug, Clone, PartialEq)]
pub struct MonMdp {
    pub name: String,
    env: EnvModel,
    monitor: MonitorModel,
    gamma: f64,
    horizon: usize,
    labels: Labels,
    layout: Option<GridLayout>,
}

impl MonMdp {
    pub fn new(
        name: impl Into<String>,
        env: EnvModel,
        monitor: MonitorModel,
        gamma: f64,
        horizon: usize,
    ) -> Result<Self, ModelError> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(ModelError::Discount(gamma));
        }
        if horizon == 0 {
            return Err(ModelError::Horizon);
        }
        if monitor.n_env_states != env.n_states || monitor.n_env_actions != env.n_actions {
            return Err(ModelError::DimensionMismatch {
                monitor_states: monitor.n_env_states,
                monitor_actions: monitor.n_env_actions,
                env_states: env.n_states,
                env_actions: env.n_actions,
            });
        }
        let labels = Labels::numbered(env.n_actions, monitor.n_mon_states, monitor.n_mon_actions);
        Ok(Self {
            name: name.into(),
            env,
            monitor,
            gamma,
            horizon,
            labels,
            layout: None,
        })
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self, ModelError> {
        let ok = labels.env_actions.len() == self.env.n_actions
            && labels.mon_states.len() == self.monitor.n_mon_states
            && labels.mon_actions.len() == self.monitor.n_mon_actions;
        if !ok {
            return Err(ModelError::Invalid("label counts do not match model sizes".into()));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_layout(mut self, layout: GridLayout) -> Self {
        self.layout = Some(layout);
        self
    }

    pub fn with_noise(&self, sd: f64) -> Result<Self, ModelError> {
        let mut m = self.clone();
        m.env = self.env.with_noise(sd)?;
        Ok(m)
    }

    pub fn with_env(&self, env: EnvModel) -> Result<Self, ModelError> {
        let mut m = Self::new(self.name.clone(), env, self.monitor.clone(), self.gamma, self.horizon)?;
        m.labels = self.labels.clone();
        m.layout = self.layout.clone();
        Ok(m)
    }

    pub fn with_monitor(&self, monitor: MonitorModel) -> Result<Self, ModelError> {
        let mut m = Self::new(self.name.clone(), self.env.clone(), monitor, self.gamma, self.horizon)?;
        m.labels = self.labels.clone();
        m.layout = self.layout.clone();
        Ok(m)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self, ModelError> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(ModelError::Discount(gamma));
        }
        let mut m = self.clone();
        m.gamma = gamma;
        Ok(m)
    }

    pub fn env(&self) -> &EnvModel {
        &self.env
    }

    pub fn monitor(&self) -> &MonitorModel {
        &self.monitor
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn layout(&self) -> Option<&GridLayout> {
        self.layout.as_ref()
    }

    pub fn n_joint_states(&self) -> usize {
        self.env.n_states * self.monitor.n_mon_states
    }

    pub fn n_joint_actions(&self) -> usize {
        self.env.n_actions * self.monitor.n_mon_actions
    }

    pub fn state_index(&self, s: JointState) -> usize {
        s.env * self.monitor.n_mon_states + s.mon
    }

    pub fn state_at(&self, index: usize) -> JointState {
        JointState {
            env: index / self.monitor.n_mon_states,
            mon: index % self.monitor.n_mon_states,
        }
    }

    pub fn action_index(&self, a: JointAction) -> usize {
        a.env * self.monitor.n_mon_actions + a.mon
    }

    pub fn action_at(&self, index: usize) -> JointAction {
        JointAction {
            env: index / self.monitor.n_mon_actions,
            mon: index % self.monitor.n_mon_actions,
        }
    }

    pub fn check_state(&self, s: JointState) -> Result<(), ModelError> {
        if s.env >= self.env.n_states {
            return Err(ModelError::Index {
                what: "env state",
                index: s.env,
                size: self.env.n_states,
            });
        }
        if s.mon >= self.monitor.n_mon_states {
            return Err(ModelError::Index {
                what: "monitor state",
                index: s.mon,
                size: self.monitor.n_mon_states,
            });
        }
        Ok(())
    }

    pub fn check_action(&self, a: JointAction) -> Result<(), ModelError> {
        if a.env >= self.env.n_actions {
            return Err(ModelError::Index {
                what: "env action",
                index: a.env,
                size: self.env.n_actions,
            });
        }
        if a.mon >= self.monitor.n_mon_actions {
            return Err(ModelError::Index {
                what: "monitor action",
                index: a.mon,
                size: self.monitor.n_mon_actions,
            });
        }
        Ok(())
    }

    pub fn is_terminal(&self, s: JointState) -> bool {
        self.env.is_terminal(s.env)
    }

    /// Expected monitor reward for a joint state-action pair.
    pub fn expected_mon_reward(&self, s: JointState, a: JointAction) -> f64 {
        self.monitor
            .transition(s.mon, s.env, a.mon, a.env)
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(sm2, &p)| p * self.monitor.reward(s.mon, a.mon, s.env, a.env, sm2))
            .sum()
    }

    /// Initial distribution over joint states.
    pub fn initial_joint(&self) -> Vec<f64> {
        let nm = self.monitor.n_mon_states;
        let mut d = vec![0.0; self.n_joint_states()];
        for (se, &pe) in self.env.initial_dist.iter().enumerate() {
            for (sm, &pm) in self.monitor.initial_dist.iter().enumerate() {
                d[se * nm + sm] = pe * pm;
            }
        }
        d
    }
}

/// Dense action-value table over `n_states x n_actions`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(n_states: usize, n_actions: usize, init: f64) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![init; n_states * n_actions],
        }
    }

    pub fn from_values(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self, ModelError> {
        check_len("q table", n_states * n_actions, values.len())?;
        check_finite("q table", &values)?;
        Ok(Self {
            n_states,
            n_actions,
            values,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.values[state * self.n_actions + action] = value;
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.n_actions..(state + 1) * self.n_actions]
    }

    pub fn max(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Actions whose value is within `tol` of the row maximum.
    pub fn near_greedy(&self, state: usize, tol: f64) -> Vec<usize> {
        let m = self.max(state);
        self.row(state)
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= m - tol)
            .map(|(a, _)| a)
            .collect()
    }
}

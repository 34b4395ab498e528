//! Tabular learners that differ in how they handle unobservable rewards.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::model::{JointAction, JointState, MonMdp, QTable};
use crate::sim::{Feedback, ObservedStep};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgentKind {
    /// Sees the hidden environment reward.
    Oracle,
    /// Replaces an unobservable reward with a constant.
    ConstantAssign(f64),
    /// Skips updates whose reward is unobservable.
    Ignore,
    /// Separate environment and monitor tables, actions chosen together.
    Joint,
    /// Separate environment and monitor tables, environment action chosen first.
    Sequential,
    /// Learns a running mean of observed rewards and uses it in every update.
    RewardModel,
}

impl AgentKind {
    pub const ALL: [AgentKind; 6] = [
        AgentKind::Oracle,
        AgentKind::ConstantAssign(0.0),
        AgentKind::Ignore,
        AgentKind::Joint,
        AgentKind::Sequential,
        AgentKind::RewardModel,
    ];
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentKind::Oracle => write!(f, "oracle"),
            AgentKind::ConstantAssign(c) => write!(f, "constant-assign({c})"),
            AgentKind::Ignore => write!(f, "ignore"),
            AgentKind::Joint => write!(f, "joint"),
            AgentKind::Sequential => write!(f, "sequential"),
            AgentKind::RewardModel => write!(f, "reward-model"),
        }
    }
}

impl FromStr for AgentKind {
    type Err = String;

    /// Accepts the display names; `constant-assign` alone means `c = 0`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Ok(match s.as_str() {
            "oracle" => AgentKind::Oracle,
            "ignore" => AgentKind::Ignore,
            "joint" => AgentKind::Joint,
            "sequential" => AgentKind::Sequential,
            "reward-model" => AgentKind::RewardModel,
            "constant-assign" => AgentKind::ConstantAssign(0.0),
            _ => {
                let c = s
                    .strip_prefix("constant-assign(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("unknown agent `{s}`"))?;
                AgentKind::ConstantAssign(c)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub kind: AgentKind,
    pub q_init: f64,
    pub learning_rate: f64,
    pub gamma: f64,
    /// Oracle substitutes its own reward model for the observed reward.
    pub use_reward_model_in_oracle: bool,
}

impl AgentConfig {
    pub fn new(kind: AgentKind) -> Self {
        Self {
            kind,
            q_init: -10.0,
            learning_rate: 1.0,
            gamma: 0.99,
            use_reward_model_in_oracle: false,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(format!("learning rate must lie in (0, 1], got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(format!("discount must lie in [0, 1), got {}", self.gamma));
        }
        if !self.q_init.is_finite() {
            return Err("q_init must be finite".into());
        }
        Ok(())
    }
}

/// Linearly decaying exploration rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub total_steps: u64,
}

impl Schedule {
    pub fn epsilon(&self, step: u64) -> f64 {
        if self.total_steps == 0 {
            return 0.0;
        }
        (1.0 - step as f64 / self.total_steps as f64).clamp(0.0, 1.0)
    }
}

/// Running means of observed environment rewards per `(env_state, env_action)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModelTable {
    n_actions: usize,
    means: Vec<f64>,
    counts: Vec<u64>,
}

impl RewardModelTable {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_actions,
            means: vec![0.0; n_states * n_actions],
            counts: vec![0; n_states * n_actions],
        }
    }

    pub fn observe(&mut self, state: usize, action: usize, value: f64) {
        let i = state * self.n_actions + action;
        self.counts[i] += 1;
        self.means[i] += (value - self.means[i]) / self.counts[i] as f64;
    }

    pub fn mean(&self, state: usize, action: usize) -> f64 {
        self.means[state * self.n_actions + action]
    }

    pub fn count(&self, state: usize, action: usize) -> u64 {
        self.counts[state * self.n_actions + action]
    }
}

/// How argmax ties are resolved.
pub enum Tie<'a, R: Rng + ?Sized> {
    /// Uniformly at random.
    Random(&'a mut R),
    /// By a fixed pseudo-random ranking derived from the salt.
    Fixed(u64),
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl<R: Rng + ?Sized> Tie<'_, R> {
    /// Index of a maximal value. `context` distinguishes call sites for fixed ties.
    pub fn argmax(&mut self, values: impl Iterator<Item = f64>, context: u64) -> usize {
        let mut best = f64::NEG_INFINITY;
        let mut pick = 0;
        let mut ties = 0u32;
        let mut best_rank = u64::MAX;
        for (i, v) in values.enumerate() {
            if v > best || ties == 0 {
                best = v;
                pick = i;
                ties = 1;
                if let Tie::Fixed(salt) = self {
                    best_rank = mix(mix(*salt ^ context) ^ i as u64);
                }
            } else if v == best {
                ties += 1;
                match self {
                    Tie::Random(rng) => {
                        if rng.random_range(0..ties) == 0 {
                            pick = i;
                        }
                    }
                    Tie::Fixed(salt) => {
                        let rank = mix(mix(*salt ^ context) ^ i as u64);
                        if rank < best_rank {
                            best_rank = rank;
                            pick = i;
                        }
                    }
                }
            }
        }
        pick
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub env_states: usize,
    pub env_actions: usize,
    pub mon_states: usize,
    pub mon_actions: usize,
}

impl Dims {
    pub fn of(mdp: &MonMdp) -> Self {
        Self {
            env_states: mdp.env().n_states(),
            env_actions: mdp.env().n_actions(),
            mon_states: mdp.monitor().n_mon_states(),
            mon_actions: mdp.monitor().n_mon_actions(),
        }
    }

    fn state(&self, s: JointState) -> usize {
        s.env * self.mon_states + s.mon
    }

    fn action(&self, a: JointAction) -> usize {
        a.env * self.mon_actions + a.mon
    }

    fn split(&self, a: usize) -> JointAction {
        JointAction {
            env: a / self.mon_actions,
            mon: a % self.mon_actions,
        }
    }

    /// Row of the monitor table for `(env_state, env_action, mon_state)`.
    fn mon_row(&self, env_state: usize, env_action: usize, mon_state: usize) -> usize {
        (env_state * self.env_actions + env_action) * self.mon_states + mon_state
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tables {
    Flat(QTable),
    /// `env` is indexed `[env_state][env_action]`, `mon` is indexed
    /// `[env_state][env_action][mon_state][mon_action]`.
    Split { env: QTable, mon: QTable },
}

/// A learner and its tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    config: AgentConfig,
    dims: Dims,
    tables: Tables,
    reward_model: Option<RewardModelTable>,
}

impl Agent {
    pub fn new(config: AgentConfig, mdp: &MonMdp) -> Self {
        let dims = Dims::of(mdp);
        let tables = match config.kind {
            AgentKind::Joint | AgentKind::Sequential => Tables::Split {
                env: QTable::new(dims.env_states, dims.env_actions, config.q_init),
                mon: QTable::new(
                    dims.env_states * dims.env_actions * dims.mon_states,
                    dims.mon_actions,
                    config.q_init,
                ),
            },
            _ => Tables::Flat(QTable::new(
                dims.env_states * dims.mon_states,
                dims.env_actions * dims.mon_actions,
                config.q_init,
            )),
        };
        let reward_model = match config.kind {
            AgentKind::RewardModel => true,
            AgentKind::Oracle => config.use_reward_model_in_oracle,
            _ => false,
        }
        .then(|| RewardModelTable::new(dims.env_states, dims.env_actions));
        Self {
            config,
            dims,
            tables,
            reward_model,
        }
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn kind(&self) -> AgentKind {
        self.config.kind
    }

    /// Joint Q-table, for the single-table learners.
    pub fn q(&self) -> Option<&QTable> {
        match &self.tables {
            Tables::Flat(q) => Some(q),
            Tables::Split { .. } => None,
        }
    }

    /// Environment table `[env_state][env_action]`, for Joint and Sequential.
    pub fn q_env(&self) -> Option<&QTable> {
        match &self.tables {
            Tables::Split { env, .. } => Some(env),
            Tables::Flat(_) => None,
        }
    }

    /// Monitor-table value `Q^M(env_state, env_action, mon_state, mon_action)`.
    pub fn q_mon(&self, env_state: usize, env_action: usize, mon_state: usize, mon_action: usize) -> Option<f64> {
        match &self.tables {
            Tables::Split { mon, .. } => Some(mon.get(self.dims.mon_row(env_state, env_action, mon_state), mon_action)),
            Tables::Flat(_) => None,
        }
    }

    pub fn reward_model(&self) -> Option<&RewardModelTable> {
        self.reward_model.as_ref()
    }

    /// Value the agent's greedy rule assigns to a joint action.
    pub fn action_value(&self, s: JointState, a: JointAction) -> f64 {
        match &self.tables {
            Tables::Flat(q) => q.get(self.dims.state(s), self.dims.action(a)),
            Tables::Split { env, mon } => {
                env.get(s.env, a.env) + mon.get(self.dims.mon_row(s.env, a.env, s.mon), a.mon)
            }
        }
    }

    /// ε-greedy action.
    pub fn act<R: Rng + ?Sized>(&self, s: JointState, epsilon: f64, rng: &mut R) -> JointAction {
        if epsilon > 0.0 && rng.random::<f64>() < epsilon {
            let n = self.dims.env_actions * self.dims.mon_actions;
            return self.dims.split(rng.random_range(0..n));
        }
        self.greedy(s, &mut Tie::Random(rng))
    }

    /// Greedy action under the agent's selection rule.
    pub fn greedy<R: Rng + ?Sized>(&self, s: JointState, tie: &mut Tie<'_, R>) -> JointAction {
        let d = &self.dims;
        let key = d.state(s) as u64;
        match (&self.tables, self.config.kind) {
            (Tables::Flat(q), _) => d.split(tie.argmax(q.row(d.state(s)).iter().copied(), key)),
            (Tables::Split { env, mon }, AgentKind::Sequential) => {
                let ae = tie.argmax(env.row(s.env).iter().copied(), key << 1);
                let am = tie.argmax(mon.row(d.mon_row(s.env, ae, s.mon)).iter().copied(), (key << 1) | 1);
                JointAction { env: ae, mon: am }
            }
            (Tables::Split { env, mon }, _) => {
                let values = (0..d.env_actions * d.mon_actions).map(|i| {
                    let a = d.split(i);
                    env.get(s.env, a.env) + mon.get(d.mon_row(s.env, a.env, s.mon), a.mon)
                });
                d.split(tie.argmax(values, key))
            }
        }
    }

    /// Applies the agent's update rule to one transition. Only the oracle reads the
    /// hidden reward; every other rule receives the redacted feedback.
    pub fn observe<R: Rng + ?Sized>(&mut self, step: &ObservedStep, rng: &mut R) {
        let fb = step.feedback();
        match self.config.kind {
            AgentKind::Oracle => self.update_oracle(step),
            AgentKind::ConstantAssign(c) => self.update_constant_assign(&fb, c),
            AgentKind::Ignore => self.update_ignore(&fb),
            AgentKind::Joint => self.update_joint(&fb),
            AgentKind::Sequential => self.update_sequential(&fb, rng),
            AgentKind::RewardModel => self.update_reward_model(&fb),
        }
    }

    fn flat_update(&mut self, fb: &Feedback, env_reward: f64) {
        let (gamma, alpha) = (self.config.gamma, self.config.learning_rate);
        let d = self.dims;
        let Tables::Flat(q) = &mut self.tables else {
            panic!("single-table update on a two-table agent");
        };
        let next = if fb.done { 0.0 } else { q.max(d.state(fb.next_state)) };
        let target = env_reward + fb.mon_reward + gamma * next;
        let (s, a) = (d.state(fb.state), d.action(fb.action));
        q.set(s, a, (1.0 - alpha) * q.get(s, a) + alpha * target);
    }

    pub fn update_oracle(&mut self, step: &ObservedStep) {
        let fb = step.feedback();
        let mut r = step.hidden_env_reward;
        if let Some(model) = &mut self.reward_model {
            model.observe(fb.state.env, fb.action.env, r);
            r = model.mean(fb.state.env, fb.action.env);
        }
        self.flat_update(&fb, r);
    }

    pub fn update_constant_assign(&mut self, fb: &Feedback, c: f64) {
        self.flat_update(fb, fb.proxy.value().unwrap_or(c));
    }

    pub fn update_ignore(&mut self, fb: &Feedback) {
        if let Some(r) = fb.proxy.value() {
            self.flat_update(fb, r);
        }
    }

    pub fn update_reward_model(&mut self, fb: &Feedback) {
        let model = self.reward_model.as_mut().expect("reward-model agent has a reward table");
        if let Some(v) = fb.proxy.value() {
            model.observe(fb.state.env, fb.action.env, v);
        }
        let r = model.mean(fb.state.env, fb.action.env);
        self.flat_update(fb, r);
    }

    fn update_env_table(&mut self, fb: &Feedback) {
        let (gamma, alpha) = (self.config.gamma, self.config.learning_rate);
        let Tables::Split { env, .. } = &mut self.tables else {
            panic!("two-table update on a single-table agent");
        };
        if let Some(r) = fb.proxy.value() {
            let next = if fb.done { 0.0 } else { env.max(fb.next_state.env) };
            let (s, a) = (fb.state.env, fb.action.env);
            env.set(s, a, (1.0 - alpha) * env.get(s, a) + alpha * (r + gamma * next));
        }
    }

    fn set_mon(&mut self, fb: &Feedback, next: f64) {
        let (gamma, alpha) = (self.config.gamma, self.config.learning_rate);
        let d = self.dims;
        let Tables::Split { mon, .. } = &mut self.tables else {
            panic!("two-table update on a single-table agent");
        };
        let row = d.mon_row(fb.state.env, fb.action.env, fb.state.mon);
        let target = fb.mon_reward + gamma * next;
        mon.set(row, fb.action.mon, (1.0 - alpha) * mon.get(row, fb.action.mon) + alpha * target);
    }

    pub fn update_joint(&mut self, fb: &Feedback) {
        self.update_env_table(fb);
        let d = self.dims;
        let next = match &self.tables {
            Tables::Split { mon, .. } if !fb.done => (0..d.env_actions)
                .map(|ae| mon.max(d.mon_row(fb.next_state.env, ae, fb.next_state.mon)))
                .fold(f64::NEG_INFINITY, f64::max),
            _ => 0.0,
        };
        self.set_mon(fb, next);
    }

    pub fn update_sequential<R: Rng + ?Sized>(&mut self, fb: &Feedback, rng: &mut R) {
        self.update_env_table(fb);
        let d = self.dims;
        let next = match &self.tables {
            Tables::Split { env, mon } if !fb.done => {
                let ae = Tie::Random(rng).argmax(env.row(fb.next_state.env).iter().copied(), 0);
                mon.max(d.mon_row(fb.next_state.env, ae, fb.next_state.mon))
            }
            _ => 0.0,
        };
        self.set_mon(fb, next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs;
    use crate::model::Proxy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn step(state: JointState, action: JointAction, proxy: Proxy, hidden: f64, mon: f64, next: JointState, done: bool) -> ObservedStep {
        ObservedStep {
            state,
            action,
            proxy,
            mon_reward: mon,
            hidden_env_reward: hidden,
            next_state: next,
            done,
        }
    }

    const S0: JointState = JointState { env: 0, mon: 0 };
    const S1: JointState = JointState { env: 1, mon: 0 };
    const A: JointAction = JointAction { env: 2, mon: 0 };

    #[test]
    fn kind_names_round_trip() {
        for k in AgentKind::ALL.iter().chain(&[AgentKind::ConstantAssign(-10.0), AgentKind::ConstantAssign(1.0)]) {
            assert_eq!(k.to_string().parse::<AgentKind>().unwrap(), *k);
        }
        assert!("q-learning".parse::<AgentKind>().is_err());
    }

    #[test]
    fn schedule_endpoints() {
        let s = Schedule { total_steps: 100 };
        assert_eq!(s.epsilon(0), 1.0);
        assert_eq!(s.epsilon(100), 0.0);
        assert!(s.epsilon(30) > s.epsilon(31));
    }

    #[test]
    fn terminal_transition_overwrites_with_reward() {
        let mdp = envs::make_simple();
        let mut agent = Agent::new(AgentConfig::new(AgentKind::Oracle), &mdp);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        agent.observe(&step(S0, A, Proxy::Unobservable, 1.0, 0.0, S1, true), &mut rng);
        assert_eq!(agent.q().unwrap().get(0, 4), 1.0);
    }

    #[test]
    fn non_terminal_bootstraps_from_next_max() {
        let mdp = envs::make_simple();
        let mut agent = Agent::new(AgentConfig::new(AgentKind::ConstantAssign(0.0)), &mdp);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        agent.observe(&step(S0, A, Proxy::Unobservable, 5.0, -0.2, S1, false), &mut rng);
        let expected = 0.0 - 0.2 + 0.99 * -10.0;
        assert_eq!(agent.q().unwrap().get(0, 4), expected);
    }

    #[test]
    fn ignore_leaves_table_untouched_on_unobservable() {
        let mdp = envs::make_simple();
        let mut agent = Agent::new(AgentConfig::new(AgentKind::Ignore), &mdp);
        let before = agent.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        agent.observe(&step(S0, A, Proxy::Unobservable, 1.0, 3.0, S1, false), &mut rng);
        assert_eq!(agent, before);
    }

    #[test]
    fn reward_model_uses_mean_before_and_after_observation() {
        let mdp = envs::make_simple();
        let mut agent = Agent::new(AgentConfig::new(AgentKind::RewardModel), &mdp);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        agent.observe(&step(S0, A, Proxy::Unobservable, 1.0, 0.0, S1, true), &mut rng);
        assert_eq!(agent.q().unwrap().get(0, 4), 0.0);
        agent.observe(&step(S0, A, Proxy::Value(0.5), 0.5, 0.0, S1, true), &mut rng);
        agent.observe(&step(S0, A, Proxy::Value(1.5), 1.5, 0.0, S1, true), &mut rng);
        let rm = agent.reward_model().unwrap();
        assert_eq!((rm.mean(0, 2), rm.count(0, 2)), (1.0, 2));
        agent.observe(&step(S0, A, Proxy::Unobservable, 9.0, 0.0, S1, true), &mut rng);
        assert_eq!(agent.q().unwrap().get(0, 4), 1.0);
    }

    #[test]
    fn joint_env_table_skips_unobservable_but_monitor_table_updates() {
        let mdp = envs::make_simple();
        let mut agent = Agent::new(AgentConfig::new(AgentKind::Joint), &mdp);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        agent.observe(&step(S0, A, Proxy::Unobservable, 1.0, -0.2, S1, true), &mut rng);
        assert_eq!(agent.q_env().unwrap().get(0, 2), -10.0);
        assert_eq!(agent.q_mon(0, 2, 0, 0), Some(-0.2));
        agent.observe(&step(S0, A, Proxy::Value(1.0), 1.0, -0.2, S1, true), &mut rng);
        assert_eq!(agent.q_env().unwrap().get(0, 2), 1.0);
    }

    #[test]
    fn fixed_ties_are_stable_and_random_ties_spread() {
        let values = [1.0, 3.0, 3.0, 3.0];
        let mut t = Tie::<ChaCha8Rng>::Fixed(17);
        let a = t.argmax(values.iter().copied(), 5);
        for _ in 0..10 {
            assert_eq!(t.argmax(values.iter().copied(), 5), a);
        }
        assert!(a >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0; 4];
        for _ in 0..3000 {
            counts[Tie::Random(&mut rng).argmax(values.iter().copied(), 0)] += 1;
        }
        assert_eq!(counts[0], 0);
        assert!(counts[1..].iter().all(|&c| (900..1100).contains(&c)), "{counts:?}");
    }

    #[test]
    fn epsilon_one_is_uniform() {
        let mdp = envs::make_simple();
        let agent = Agent::new(AgentConfig::new(AgentKind::Oracle), &mdp);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut counts = [0usize; 8];
        for _ in 0..16_000 {
            let a = agent.act(S0, 1.0, &mut rng);
            counts[a.env * 2 + a.mon] += 1;
        }
        assert!(counts.iter().all(|&c| (1800..2200).contains(&c)), "{counts:?}");
    }
}

//! Environments, monitors and the named instances.

pub mod file;
pub mod monitors;

use serde::{Deserialize, Serialize};

use crate::model::{EnvModel, Labels, ModelError, MonMdp, ProxyRule};

pub use monitors::BuiltMonitor;

pub const LEFT: usize = 0;
pub const DOWN: usize = 1;
pub const RIGHT: usize = 2;
pub const UP: usize = 3;
pub const GRID_ACTIONS: [&str; 4] = ["LEFT", "DOWN", "RIGHT", "UP"];

pub const GOAL_REWARD: f64 = 1.0;
pub const PENALTY_REWARD: f64 = -10.0;
pub const GRID_REWARD_BOUNDS: (f64, f64) = (PENALTY_REWARD, GOAL_REWARD);

pub const DEFAULT_GAMMA: f64 = 0.99;
pub const DEFAULT_HORIZON: usize = 50;
pub const DEFAULT_N_MONITORS: usize = 5;
pub const DEFAULT_LIMITED_TIME_P: f64 = 0.8;
pub const DEFAULT_BATTERY: usize = 7;

/// Rectangular gridworld. Row 0 is the top row. Entering the goal pays +1 and ends
/// the episode, entering a penalty cell pays -10, and moving into a wall leaves the
/// agent in place and pays the reward of its current cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridLayout {
    pub rows: usize,
    pub cols: usize,
    pub start: [usize; 2],
    pub goal: [usize; 2],
    #[serde(default)]
    pub penalties: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub button: Option<[usize; 2]>,
}

impl GridLayout {
    pub fn benchmark(penalties: bool, button: bool) -> Self {
        Self {
            rows: 3,
            cols: 3,
            start: [0, 0],
            goal: [0, 2],
            penalties: if penalties { vec![[0, 1], [1, 1]] } else { vec![] },
            button: button.then_some([2, 2]),
        }
    }

    pub fn n_cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn index(&self, cell: [usize; 2]) -> usize {
        cell[0] * self.cols + cell[1]
    }

    pub fn cell(&self, index: usize) -> [usize; 2] {
        [index / self.cols, index % self.cols]
    }

    pub fn goal_index(&self) -> usize {
        self.index(self.goal)
    }

    pub fn start_index(&self) -> usize {
        self.index(self.start)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(ModelError::EmptySpace { what: "grid" });
        }
        let inside = |c: [usize; 2]| c[0] < self.rows && c[1] < self.cols;
        let named = [("start", Some(self.start)), ("goal", Some(self.goal)), ("button", self.button)];
        for (what, cell) in named {
            if let Some(c) = cell {
                if !inside(c) {
                    return Err(ModelError::Invalid(format!("grid {what} {c:?} lies outside the grid")));
                }
            }
        }
        for &p in &self.penalties {
            if !inside(p) {
                return Err(ModelError::Invalid(format!("grid penalty {p:?} lies outside the grid")));
            }
            if p == self.goal {
                return Err(ModelError::Invalid("grid goal cannot be a penalty cell".into()));
            }
        }
        if self.start == self.goal {
            return Err(ModelError::Invalid("grid start cannot be the goal".into()));
        }
        Ok(())
    }

    fn moved(&self, cell: [usize; 2], action: usize) -> [usize; 2] {
        let [r, c] = cell;
        match action {
            LEFT => [r, c.saturating_sub(1)],
            DOWN => [(r + 1).min(self.rows - 1), c],
            RIGHT => [r, (c + 1).min(self.cols - 1)],
            _ => [r.saturating_sub(1), c],
        }
    }

    fn cell_reward(&self, cell: [usize; 2]) -> f64 {
        if cell == self.goal {
            GOAL_REWARD
        } else if self.penalties.contains(&cell) {
            PENALTY_REWARD
        } else {
            0.0
        }
    }

    /// The deterministic environment MDP of this grid.
    pub fn env_model(&self, noise_sd: f64) -> Result<EnvModel, ModelError> {
        self.validate()?;
        let n = self.n_cells();
        let goal = self.goal_index();
        let mut transition = vec![0.0; n * 4 * n];
        let mut reward = vec![0.0; n * 4];
        for s in 0..n {
            for a in 0..4 {
                let next = if s == goal { s } else { self.index(self.moved(self.cell(s), a)) };
                transition[(s * 4 + a) * n + next] = 1.0;
                if s != goal {
                    reward[s * 4 + a] = self.cell_reward(self.cell(next));
                }
            }
        }
        let terminal = (0..n).map(|s| s == goal).collect();
        let mut initial = vec![0.0; n];
        initial[self.start_index()] = 1.0;
        EnvModel::new(n, 4, transition, reward, noise_sd, terminal, initial, GRID_REWARD_BOUNDS)
    }
}

/// Named monitor families.
#[derive(Debug, Clone, PartialEq)]
pub enum MonitorKind {
    /// ASK / NO-OP with an asking cost and optional clipping of revealed rewards.
    Simple { cost: f64, clip: Option<(f64, f64)> },
    Button { cost: f64 },
    NMonitor { n: usize, cost: f64, bonus: f64 },
    LimitedTime { p: f64 },
    LimitedUse { battery: usize },
    AlwaysUnobservable,
    Identity,
    /// The given monitor with every reward revealed.
    FullObservability(Box<MonitorKind>),
    /// Hides rewards for entering the given grid cells.
    BlindCells { cells: Vec<[usize; 2]> },
}

impl MonitorKind {
    pub fn build(&self, env: &EnvModel, layout: Option<&GridLayout>) -> Result<BuiltMonitor, ModelError> {
        let need_grid = || {
            layout.ok_or_else(|| ModelError::Invalid("this monitor kind needs a grid environment".into()))
        };
        match self {
            MonitorKind::Simple { cost, clip } => monitors::ask(env, *cost, *clip),
            MonitorKind::Button { cost } => monitors::button(env, need_grid()?, *cost),
            MonitorKind::NMonitor { n, cost, bonus } => monitors::n_monitor(env, *n, *cost, *bonus),
            MonitorKind::LimitedTime { p } => monitors::limited_time(env, *p),
            MonitorKind::LimitedUse { battery } => monitors::limited_use(env, *battery),
            MonitorKind::AlwaysUnobservable => monitors::constant(env, ProxyRule::Hide),
            MonitorKind::Identity => monitors::constant(env, ProxyRule::Reveal),
            MonitorKind::FullObservability(inner) => {
                let mut built = inner.build(env, layout)?;
                built.model = built.model.revealing_all();
                Ok(built)
            }
            MonitorKind::BlindCells { cells } => {
                let grid = need_grid()?;
                let idx: Vec<usize> = cells.iter().map(|&c| grid.index(c)).collect();
                if let Some(c) = cells.iter().find(|c| c[0] >= grid.rows || c[1] >= grid.cols) {
                    return Err(ModelError::Invalid(format!("blind cell {c:?} lies outside the grid")));
                }
                monitors::blind_cells(env, &idx)
            }
        }
    }
}

/// Pairs an environment with a monitor under the default discount and horizon.
pub fn assemble(
    name: &str,
    env: EnvModel,
    env_actions: Vec<String>,
    monitor: BuiltMonitor,
    layout: Option<GridLayout>,
) -> Result<MonMdp, ModelError> {
    let mdp = MonMdp::new(name, env, monitor.model, DEFAULT_GAMMA, DEFAULT_HORIZON)?.with_labels(Labels {
        env_actions,
        mon_states: monitor.state_names,
        mon_actions: monitor.action_names,
    })?;
    Ok(match layout {
        Some(l) => mdp.with_layout(l),
        None => mdp,
    })
}

/// Builds a gridworld Mon-MDP.
pub fn grid(name: &str, layout: GridLayout, kind: &MonitorKind) -> Result<MonMdp, ModelError> {
    let env = layout.env_model(0.0)?;
    let monitor = kind.build(&env, Some(&layout))?;
    let actions = GRID_ACTIONS.iter().map(|s| s.to_string()).collect();
    assemble(name, env, actions, monitor, Some(layout))
}

fn simple_kind() -> MonitorKind {
    MonitorKind::Simple {
        cost: monitors::ASK_COST,
        clip: None,
    }
}

pub fn make_simple() -> MonMdp {
    grid("simple", GridLayout::benchmark(false, false), &simple_kind()).expect("valid instance")
}

pub fn make_penalty() -> MonMdp {
    grid("penalty", GridLayout::benchmark(true, false), &simple_kind()).expect("valid instance")
}

pub fn make_button() -> MonMdp {
    grid(
        "button",
        GridLayout::benchmark(true, true),
        &MonitorKind::Button {
            cost: monitors::ASK_COST,
        },
    )
    .expect("valid instance")
}

pub fn make_n_monitor(n: usize) -> MonMdp {
    grid(
        "n-monitor",
        GridLayout::benchmark(true, false),
        &MonitorKind::NMonitor {
            n,
            cost: monitors::ASK_COST,
            bonus: monitors::N_MONITOR_BONUS,
        },
    )
    .expect("valid instance")
}

pub fn make_limited_time(p: f64) -> MonMdp {
    grid("limited-time", GridLayout::benchmark(true, false), &MonitorKind::LimitedTime { p })
        .expect("valid instance")
}

pub fn make_limited_use(battery: usize) -> MonMdp {
    grid("limited-use", GridLayout::benchmark(true, false), &MonitorKind::LimitedUse { battery })
        .expect("valid instance")
}

/// The six benchmark instances in table order.
pub fn benchmark_suite() -> Vec<MonMdp> {
    vec![
        make_simple(),
        make_penalty(),
        make_button(),
        make_n_monitor(DEFAULT_N_MONITORS),
        make_limited_time(DEFAULT_LIMITED_TIME_P),
        make_limited_use(DEFAULT_BATTERY),
    ]
}

fn chain_env(
    n_actions: usize,
    next: impl Fn(usize, usize) -> usize,
    reward: impl Fn(usize, usize) -> f64,
    terminal: Vec<bool>,
    bounds: (f64, f64),
) -> EnvModel {
    let mut transition = vec![0.0; 3 * n_actions * 3];
    let mut rewards = vec![0.0; 3 * n_actions];
    for s in 0..3 {
        for a in 0..n_actions {
            let s2 = if terminal[s] { s } else { next(s, a) };
            transition[(s * n_actions + a) * 3 + s2] = 1.0;
            if !terminal[s] {
                rewards[s * n_actions + a] = reward(s, a);
            }
        }
    }
    EnvModel::new(3, n_actions, transition, rewards, 0.0, terminal, vec![0.0, 1.0, 0.0], bounds)
        .expect("valid chain")
}

/// Three states A, B, C without terminals, starting in B. From B, LEFT leads to A
/// (+1) and RIGHT to C (0); from A every action returns to B (-2), from C to B (0).
/// The monitor can be asked for free to show the reward.
pub fn make_chain_abc(clip: Option<(f64, f64)>) -> MonMdp {
    let env = chain_env(
        2,
        |s, a| match (s, a) {
            (1, 0) => 0,
            (1, _) => 2,
            _ => 1,
        },
        |s, a| match (s, a) {
            (1, 0) => 1.0,
            (0, _) => -2.0,
            _ => 0.0,
        },
        vec![false; 3],
        (-2.0, 1.0),
    );
    let mut monitor = monitors::ask(&env, 0.0, clip).expect("valid monitor");
    monitor.action_names = vec!["MONITOR-ME".into(), "NO-OP".into()];
    let name = if clip.is_some() { "chain-abc-clipped" } else { "chain-abc" };
    assemble(name, env, vec!["LEFT".into(), "RIGHT".into()], monitor, None).expect("valid instance")
}

/// Three states A, B, C starting in B, where A and C are terminal. Going to A pays
/// +1 from the environment; going to C pays +1 from the monitor. Staying in B pays
/// nothing. Rewards are always visible.
pub fn make_joint_counterexample() -> MonMdp {
    let env = chain_env(
        3,
        |_, a| [0, 1, 2][a],
        |s, a| if (s, a) == (1, 0) { 1.0 } else { 0.0 },
        vec![true, false, true],
        (0.0, 1.0),
    );
    let mut monitor = monitors::constant(&env, ProxyRule::Reveal).expect("valid monitor");
    let n = monitor.model.reward_table().len();
    let mut reward = vec![0.0; n];
    // Single monitor state and action: index is env_state * n_env_actions + env_action.
    reward[3 + 2] = 1.0;
    monitor.model = crate::model::MonitorModel::new(
        1,
        1,
        3,
        3,
        monitor.model.transition_table().to_vec(),
        reward,
        vec![ProxyRule::Reveal],
        vec![1.0],
        true,
    )
    .expect("valid monitor");
    assemble(
        "joint-counterexample",
        env,
        vec!["GO-A".into(), "STAY".into(), "GO-C".into()],
        monitor,
        None,
    )
    .expect("valid instance")
}

/// The benchmark grid with a monitor that never shows anything.
pub fn make_hopeless_grid() -> MonMdp {
    grid("hopeless-grid", GridLayout::benchmark(true, false), &MonitorKind::AlwaysUnobservable)
        .expect("valid instance")
}

/// A grid whose single unobservable transition is entering the cell next to the start.
pub fn make_blind_cell_grid() -> MonMdp {
    let layout = GridLayout {
        rows: 3,
        cols: 3,
        start: [0, 0],
        goal: [0, 2],
        penalties: vec![],
        button: None,
    };
    grid("blind-cell-grid", layout, &MonitorKind::BlindCells { cells: vec![[0, 1]] })
        .expect("valid instance")
}

/// The benchmark grid with every reward always visible at no cost.
pub fn make_identity_grid() -> MonMdp {
    grid("identity-grid", GridLayout::benchmark(true, false), &MonitorKind::Identity).expect("valid instance")
}

/// Catalog entry for the named instances.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub build: fn() -> MonMdp,
}

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry { name: "simple", summary: "3x3 grid, ASK/NO-OP monitor", build: make_simple },
        CatalogEntry { name: "penalty", summary: "3x3 grid with penalty cells, ASK/NO-OP monitor", build: make_penalty },
        CatalogEntry { name: "button", summary: "penalty grid, monitor toggled by a button", build: make_button },
        CatalogEntry {
            name: "n-monitor",
            summary: "penalty grid, 5 random monitors",
            build: || make_n_monitor(DEFAULT_N_MONITORS),
        },
        CatalogEntry {
            name: "limited-time",
            summary: "penalty grid, monitor breaks down over time",
            build: || make_limited_time(DEFAULT_LIMITED_TIME_P),
        },
        CatalogEntry {
            name: "limited-use",
            summary: "penalty grid, switchable battery-powered monitor",
            build: || make_limited_use(DEFAULT_BATTERY),
        },
        CatalogEntry { name: "chain-abc", summary: "A-B-C chain, free monitor", build: || make_chain_abc(None) },
        CatalogEntry {
            name: "chain-abc-clipped",
            summary: "A-B-C chain, monitor clips rewards to [-1, 1]",
            build: || make_chain_abc(Some((-1.0, 1.0))),
        },
        CatalogEntry {
            name: "joint-counterexample",
            summary: "three-state chain where maximising the summed reward differs from the env optimum",
            build: make_joint_counterexample,
        },
        CatalogEntry { name: "hopeless-grid", summary: "penalty grid, rewards never visible", build: make_hopeless_grid },
        CatalogEntry {
            name: "blind-cell-grid",
            summary: "grid with one unobservable cell",
            build: make_blind_cell_grid,
        },
        CatalogEntry { name: "identity-grid", summary: "penalty grid, rewards always visible", build: make_identity_grid },
    ]
}

/// Looks up a named instance.
pub fn by_name(name: &str) -> Option<MonMdp> {
    catalog().into_iter().find(|e| e.name == name).map(|e| (e.build)())
}

//! Solvability analysis of finite Mon-MDPs.
//!
//! The labels are decidable sufficient criteria. An instance that is neither
//! trivial, hopeless nor covered by the convergence conditions is reported as
//! `NonHopelessUnknown`, even though it may well be solvable.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{JointState, MonMdp, Proxy};
use crate::planning::{self, JointModel, Policy, PlanningError, RewardMode, PLAN_TOL};

/// Tolerance on Q-values when comparing greedy action sets.
pub const GREEDY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Trivial,
    Hopeless,
    SolvableByProp1,
    NonHopelessUnknown,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Trivial => "trivial",
            Label::Hopeless => "hopeless",
            Label::SolvableByProp1 => "solvable-by-prop1",
            Label::NonHopelessUnknown => "non-hopeless-unknown",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Properties {
    /// Every reachable non-terminal joint state reaches every other one on the
    /// chain where episodes restart from the initial distribution.
    pub joint_ergodic: bool,
    /// Every reachable environment pair can have its reward observed.
    pub monitor_fn_ergodic: bool,
    /// The monitor only ever shows the exact reward or nothing.
    pub truthful: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub instance: String,
    pub truthful: bool,
    pub joint_ergodic: bool,
    pub monitor_fn_ergodic: bool,
    /// Reachable `(env_state, env_action)` pairs whose reward can be observed.
    pub observable_pairs: Vec<(usize, usize)>,
    pub reachable_pairs: usize,
    pub label: Label,
    pub invariant: Option<bool>,
    pub dimensionality: usize,
    pub explicit_monitor_actions: bool,
    pub positive_monitor_rewards: bool,
    pub notes: String,
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

impl Classification {
    pub const CSV_HEADER: [&'static str; 9] = [
        "instance",
        "truthful",
        "joint_ergodic",
        "monitor_fn_ergodic",
        "label",
        "invariant",
        "dimensionality",
        "explicit_monitor_actions",
        "positive_monitor_rewards",
    ];

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.instance.clone(),
            self.truthful.to_string(),
            self.joint_ergodic.to_string(),
            self.monitor_fn_ergodic.to_string(),
            self.label.to_string(),
            self.invariant.map(|b| b.to_string()).unwrap_or_default(),
            self.dimensionality.to_string(),
            self.explicit_monitor_actions.to_string(),
            self.positive_monitor_rewards.to_string(),
        ]
    }

    pub fn report(&self) -> String {
        let invariant = match self.invariant {
            Some(true) => "invariant",
            Some(false) => "not invariant",
            None => "invariance unknown",
        };
        format!(
            "{}: {}\n  {}, explicit monitor actions: {}\n  truthful: {}, joint ergodic: {}, monitor function ergodic: {}\n  observable env pairs: {}/{}\n  monitor dimensionality: {}, positive monitor rewards: {}\n  {}\n",
            self.instance,
            self.label,
            invariant,
            yes_no(self.explicit_monitor_actions),
            yes_no(self.truthful),
            yes_no(self.joint_ergodic),
            yes_no(self.monitor_fn_ergodic),
            self.observable_pairs.len(),
            self.reachable_pairs,
            self.dimensionality,
            yes_no(self.positive_monitor_rewards),
            self.notes,
        )
    }
}

/// Successors of a joint state on the restart chain: terminal successors are
/// replaced by the initial states.
fn restart_successors(model: &JointModel, initial: &[usize], s: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for a in 0..model.n_actions() {
        for &(s2, _) in model.successors(s, a) {
            if model.is_terminal(s2) {
                out.extend_from_slice(initial);
            } else {
                out.push(s2);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn bfs(adj: &[Vec<usize>], start: &[usize]) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut queue: VecDeque<usize> = start.iter().copied().collect();
    for &s in start {
        seen[s] = true;
    }
    while let Some(s) = queue.pop_front() {
        for &t in &adj[s] {
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    seen
}

struct Structure {
    /// Reachable non-terminal joint states.
    live: Vec<bool>,
    initial: Vec<usize>,
    adj: Vec<Vec<usize>>,
}

fn structure(mdp: &MonMdp) -> Result<Structure, PlanningError> {
    let model = planning::joint_transition(mdp, &RewardMode::Joint)?;
    let initial: Vec<usize> = (0..model.n_states())
        .filter(|&s| model.initial()[s] > 0.0 && !model.is_terminal(s))
        .collect();
    let adj: Vec<Vec<usize>> = (0..model.n_states())
        .map(|s| {
            if model.is_terminal(s) {
                Vec::new()
            } else {
                restart_successors(&model, &initial, s)
            }
        })
        .collect();
    let live = bfs(&adj, &initial);
    Ok(Structure {
        live,
        initial,
        adj,
    })
}

fn joint_ergodic(st: &Structure) -> bool {
    let Some(&root) = st.initial.first() else {
        return true;
    };
    let forward = bfs(&st.adj, &[root]);
    let mut rev = vec![Vec::new(); st.adj.len()];
    for (s, succ) in st.adj.iter().enumerate() {
        for &t in succ {
            rev[t].push(s);
        }
    }
    let backward = bfs(&rev, &[root]);
    (0..st.adj.len()).filter(|&s| st.live[s]).all(|s| forward[s] && backward[s])
}

/// Reachable env pairs and, among them, those whose reward can be observed.
fn observability(mdp: &MonMdp, st: &Structure) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let env = mdp.env();
    let mon = mdp.monitor();
    let ne = env.n_states();
    let na = env.n_actions();
    let mut reachable = vec![false; ne * na];
    let mut observable = vec![false; ne * na];
    for js in (0..st.live.len()).filter(|&s| st.live[s]) {
        let s = mdp.state_at(js);
        for ae in 0..na {
            reachable[s.env * na + ae] = true;
            for am in 0..mon.n_mon_actions() {
                let seen = mon
                    .transition(s.mon, s.env, am, ae)
                    .iter()
                    .enumerate()
                    .any(|(sm2, &p)| p > 0.0 && mon.proxy_rule(s.mon, am, sm2).is_observable());
                if seen {
                    observable[s.env * na + ae] = true;
                }
            }
        }
    }
    let pairs = |mask: &[bool]| {
        (0..ne * na)
            .filter(|&i| mask[i])
            .map(|i| (i / na, i % na))
            .collect::<Vec<_>>()
    };
    (pairs(&reachable), pairs(&observable))
}

/// Checks the monitor function on every monitor configuration against a set of
/// rewards that includes every mean reward, the bounds and random samples.
fn truthful(mdp: &MonMdp) -> bool {
    let env = mdp.env();
    let mon = mdp.monitor();
    let (lo, hi) = env.reward_bounds();
    let mut rewards: Vec<f64> = env.reward_table().to_vec();
    rewards.extend([lo, hi, 0.0, lo - 1.0, hi + 1.0, 1e-300, -1e300]);
    let mut rng = ChaCha8Rng::seed_from_u64(0x7275_7468);
    let span = (hi - lo).max(1.0);
    rewards.extend((0..64).map(|_| lo - span + 3.0 * span * rng.random::<f64>()));
    for sm in 0..mon.n_mon_states() {
        for am in 0..mon.n_mon_actions() {
            for sm2 in 0..mon.n_mon_states() {
                for &r in &rewards {
                    match mon.monitor_fn(r, sm, am, sm2) {
                        Proxy::Value(v) if v.to_bits() != r.to_bits() => return false,
                        _ => {}
                    }
                }
            }
        }
    }
    true
}

pub fn check_properties(mdp: &MonMdp) -> Result<Properties, PlanningError> {
    let st = structure(mdp)?;
    let (reachable, observable) = observability(mdp, &st);
    Ok(Properties {
        joint_ergodic: joint_ergodic(&st),
        monitor_fn_ergodic: reachable.len() == observable.len(),
        truthful: truthful(mdp),
    })
}

/// Whether the monitor is invisible: every reachable configuration reveals the
/// reward unchanged and pays nothing.
fn is_trivial(mdp: &MonMdp, st: &Structure) -> bool {
    let mon = mdp.monitor();
    for js in (0..st.live.len()).filter(|&s| st.live[s]) {
        let s = mdp.state_at(js);
        for ae in 0..mdp.env().n_actions() {
            for am in 0..mon.n_mon_actions() {
                for (sm2, &p) in mon.transition(s.mon, s.env, am, ae).iter().enumerate() {
                    if p > 0.0
                        && (mon.proxy_rule(s.mon, am, sm2) != crate::model::ProxyRule::Reveal
                            || mon.reward(s.mon, am, s.env, ae, sm2) != 0.0)
                    {
                        return false;
                    }
                }
            }
        }
    }
    true
}

fn positive_monitor_rewards(mdp: &MonMdp, st: &Structure) -> bool {
    let mon = mdp.monitor();
    (0..st.live.len()).filter(|&s| st.live[s]).any(|js| {
        let s = mdp.state_at(js);
        (0..mdp.env().n_actions()).any(|ae| {
            (0..mon.n_mon_actions()).any(|am| {
                mon.transition(s.mon, s.env, am, ae)
                    .iter()
                    .enumerate()
                    .any(|(sm2, &p)| p > 0.0 && mon.reward(s.mon, am, s.env, ae, sm2) > 0.0)
            })
        })
    })
}

pub fn classify(mdp: &MonMdp) -> Result<Classification, PlanningError> {
    let st = structure(mdp)?;
    let (reachable, observable) = observability(mdp, &st);
    let props = Properties {
        joint_ergodic: joint_ergodic(&st),
        monitor_fn_ergodic: reachable.len() == observable.len(),
        truthful: truthful(mdp),
    };
    let label = if is_trivial(mdp, &st) {
        Label::Trivial
    } else if observable.is_empty() {
        Label::Hopeless
    } else if props.joint_ergodic && props.monitor_fn_ergodic && props.truthful {
        Label::SolvableByProp1
    } else {
        Label::NonHopelessUnknown
    };
    let notes = match label {
        Label::Trivial => "monitor reveals every reward and pays nothing".to_string(),
        Label::Hopeless => "no reachable reward is ever observable".to_string(),
        Label::SolvableByProp1 => "all convergence conditions hold".to_string(),
        Label::NonHopelessUnknown => {
            let mut failed = Vec::new();
            if !props.joint_ergodic {
                failed.push("joint ergodicity");
            }
            if !props.monitor_fn_ergodic {
                failed.push("monitor-function ergodicity");
            }
            if !props.truthful {
                failed.push("truthfulness");
            }
            format!(
                "fails {}; solvability is not decided by these sufficient criteria",
                failed.join(", ")
            )
        }
    };
    let mon = mdp.monitor();
    Ok(Classification {
        instance: mdp.name.clone(),
        truthful: props.truthful,
        joint_ergodic: props.joint_ergodic,
        monitor_fn_ergodic: props.monitor_fn_ergodic,
        reachable_pairs: reachable.len(),
        observable_pairs: observable,
        label,
        invariant: Some(check_invariant(mdp, GREEDY_TOL)?),
        dimensionality: mon.n_mon_states() * mon.n_mon_actions(),
        explicit_monitor_actions: mon.n_mon_actions() > 1,
        positive_monitor_rewards: positive_monitor_rewards(mdp, &st),
        notes,
    })
}

/// Whether some joint-optimal deterministic policy only takes environment-optimal
/// actions on the states it visits from the initial distribution.
pub fn check_invariant(mdp: &MonMdp, tol: f64) -> Result<bool, PlanningError> {
    let env_model = JointModel::from_env(mdp.env(), mdp.gamma());
    let q_env = env_model.value_iteration(PLAN_TOL)?;
    let joint = planning::joint_transition(mdp, &RewardMode::Joint)?;
    let q = joint.value_iteration(PLAN_TOL)?;
    let n = joint.n_states();
    let candidates: Vec<Vec<usize>> = (0..n)
        .map(|js| {
            if joint.is_terminal(js) {
                return Vec::new();
            }
            let s = mdp.state_at(js);
            let env_greedy = q_env.near_greedy(s.env, tol);
            q.near_greedy(js, tol)
                .into_iter()
                .filter(|&a| env_greedy.contains(&mdp.action_at(a).env))
                .collect()
        })
        .collect();
    let mut good: Vec<bool> = (0..n).map(|js| !joint.is_terminal(js)).collect();
    loop {
        let mut changed = false;
        for js in 0..n {
            if !good[js] {
                continue;
            }
            let ok = candidates[js].iter().any(|&a| {
                joint
                    .successors(js, a)
                    .iter()
                    .all(|&(s2, _)| joint.is_terminal(s2) || good[s2])
            });
            if !ok {
                good[js] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok((0..n).all(|js| joint.initial()[js] == 0.0 || joint.is_terminal(js) || good[js]))
}

#[derive(Debug, Clone)]
pub struct MinimaxPlan {
    pub policy: Policy,
    /// Return of the policy when never-observable rewards take their worst value.
    pub pessimistic_return: f64,
    /// Reachable environment pairs whose reward can never be observed.
    pub substituted: Vec<(usize, usize)>,
}

impl MinimaxPlan {
    pub fn action(&self, mdp: &MonMdp, s: JointState) -> Option<crate::model::JointAction> {
        planning::split_action(mdp, &self.policy, s)
    }
}

/// Worst-case planning with the lower reward bound standing in for every
/// reachable reward that can never be observed.
pub fn minimax_plan(mdp: &MonMdp) -> Result<MinimaxPlan, PlanningError> {
    minimax_plan_with(mdp, mdp.env().reward_bounds().0)
}

/// [`minimax_plan`] with an explicit stand-in value.
pub fn minimax_plan_with(mdp: &MonMdp, r_min: f64) -> Result<MinimaxPlan, PlanningError> {
    let st = structure(mdp)?;
    let (reachable, observable) = observability(mdp, &st);
    let env = mdp.env();
    let mut table = env.reward_table().to_vec();
    let substituted: Vec<(usize, usize)> = reachable
        .into_iter()
        .filter(|p| !observable.contains(p))
        .collect();
    for &(s, a) in &substituted {
        table[s * env.n_actions() + a] = r_min;
    }
    let model = planning::joint_transition(mdp, &RewardMode::Custom(table))?;
    let q = model.value_iteration(PLAN_TOL)?;
    let policy = planning::greedy_policy(&model, &q, 1e-9);
    let pessimistic_return = model.evaluate(&policy, mdp.horizon())?;
    Ok(MinimaxPlan {
        policy,
        pessimistic_return,
        substituted,
    })
}

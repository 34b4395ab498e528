//! Monitor constructors.

use crate::model::{EnvModel, ModelError, MonitorModel, ProxyRule};

use super::{GridLayout, DOWN};

pub const ASK_COST: f64 = 0.2;
pub const N_MONITOR_BONUS: f64 = 0.001;
pub const LIMITED_USE_BONUS: f64 = 1.0;

/// A constructed monitor with display names for its states and actions.
#[derive(Debug, Clone)]
pub struct BuiltMonitor {
    pub model: MonitorModel,
    pub state_names: Vec<String>,
    pub action_names: Vec<String>,
}

struct Spec<'a> {
    n_mon_states: usize,
    n_mon_actions: usize,
    env: &'a EnvModel,
    initial: Vec<f64>,
    truthful: bool,
}

impl Spec<'_> {
    fn build(
        self,
        next: impl Fn(usize, usize, usize, usize) -> Vec<f64>,
        reward: impl Fn(usize, usize, usize, usize, usize) -> f64,
        proxy: impl Fn(usize, usize, usize) -> ProxyRule,
    ) -> Result<MonitorModel, ModelError> {
        let (nm, nam) = (self.n_mon_states, self.n_mon_actions);
        let (ne, nae) = (self.env.n_states(), self.env.n_actions());
        let mut transition = Vec::with_capacity(nm * ne * nam * nae * nm);
        for sm in 0..nm {
            for se in 0..ne {
                for am in 0..nam {
                    for ae in 0..nae {
                        transition.extend(next(sm, se, am, ae));
                    }
                }
            }
        }
        let mut rewards = Vec::with_capacity(nm * nam * ne * nae * nm);
        for sm in 0..nm {
            for am in 0..nam {
                for se in 0..ne {
                    for ae in 0..nae {
                        for sm2 in 0..nm {
                            rewards.push(reward(sm, am, se, ae, sm2));
                        }
                    }
                }
            }
        }
        let mut rules = Vec::with_capacity(nm * nam * nm);
        for sm in 0..nm {
            for am in 0..nam {
                for sm2 in 0..nm {
                    rules.push(proxy(sm, am, sm2));
                }
            }
        }
        MonitorModel::new(nm, nam, ne, nae, transition, rewards, rules, self.initial, self.truthful)
    }
}

fn onehot(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn reveal_if(cond: bool) -> ProxyRule {
    if cond {
        ProxyRule::Reveal
    } else {
        ProxyRule::Hide
    }
}

/// One state; ASK reveals the reward at a cost, NO-OP hides it. With `clip`, the
/// revealed reward is clipped to the given interval.
pub fn ask(env: &EnvModel, cost: f64, clip: Option<(f64, f64)>) -> Result<BuiltMonitor, ModelError> {
    let spec = Spec {
        n_mon_states: 1,
        n_mon_actions: 2,
        env,
        initial: vec![1.0],
        truthful: clip.is_none(),
    };
    let shown = match clip {
        Some((lo, hi)) => ProxyRule::Clip { lo, hi },
        None => ProxyRule::Reveal,
    };
    let model = spec.build(
        |_, _, _, _| vec![1.0],
        |_, am, _, _, _| if am == 0 { -cost } else { 0.0 },
        |_, am, _| if am == 0 { shown } else { ProxyRule::Hide },
    )?;
    Ok(BuiltMonitor {
        model,
        state_names: names(&["OFF"]),
        action_names: names(&["ASK", "NO-OP"]),
    })
}

/// Two states toggled by pushing against the wall at the button cell. Rewards are
/// shown, at a cost, whenever the monitor ends the step ON.
pub fn button(env: &EnvModel, layout: &GridLayout, cost: f64) -> Result<BuiltMonitor, ModelError> {
    let cell = layout
        .button
        .ok_or_else(|| ModelError::Invalid("button monitor needs a grid with a button cell".into()))?;
    let btn = layout.index(cell);
    const ON: usize = 1;
    let model = Spec {
        n_mon_states: 2,
        n_mon_actions: 1,
        env,
        initial: vec![0.5, 0.5],
        truthful: true,
    }
    .build(
        |sm, se, _, ae| onehot(2, if se == btn && ae == DOWN { 1 - sm } else { sm }),
        |_, _, _, _, sm2| if sm2 == ON { -cost } else { 0.0 },
        |_, _, sm2| reveal_if(sm2 == ON),
    )?;
    Ok(BuiltMonitor {
        model,
        state_names: names(&["OFF", "ON"]),
        action_names: names(&["NO-OP"]),
    })
}

/// `n` monitors, one of which is active each step uniformly at random. Asking the
/// active one reveals the reward at a cost; any other request earns a small bonus.
pub fn n_monitor(env: &EnvModel, n: usize, cost: f64, bonus: f64) -> Result<BuiltMonitor, ModelError> {
    if n == 0 {
        return Err(ModelError::EmptySpace { what: "n_monitor n" });
    }
    let u = 1.0 / n as f64;
    let model = Spec {
        n_mon_states: n,
        n_mon_actions: n,
        env,
        initial: vec![u; n],
        truthful: true,
    }
    .build(
        |_, _, _, _| vec![u; n],
        |sm, am, _, _, _| if am == sm { -cost } else { bonus },
        |sm, am, _| reveal_if(am == sm),
    )?;
    Ok(BuiltMonitor {
        model,
        state_names: (1..=n).map(|i| format!("ON_{i}")).collect(),
        action_names: (1..=n).map(|i| format!("ASK_{i}")).collect(),
    })
}

/// Starts ON and breaks down for good with probability `1 - p` each step.
pub fn limited_time(env: &EnvModel, p: f64) -> Result<BuiltMonitor, ModelError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ModelError::Invalid(format!("limited-time p must lie in [0, 1], got {p}")));
    }
    const ON: usize = 0;
    let model = Spec {
        n_mon_states: 2,
        n_mon_actions: 1,
        env,
        initial: onehot(2, ON),
        truthful: true,
    }
    .build(
        |sm, _, _, _| if sm == ON { vec![p, 1.0 - p] } else { onehot(2, 1) },
        |_, _, _, _, _| 0.0,
        |sm, _, _| reveal_if(sm == ON),
    )?;
    Ok(BuiltMonitor {
        model,
        state_names: names(&["ON", "OFF"]),
        action_names: names(&["NO-OP"]),
    })
}

/// A switchable monitor with a battery of `battery` steps. Rewards are shown while
/// ON. Reaching a terminal state with a drained battery pays a bonus.
///
/// States are indexed `on * (battery + 1) + level`.
pub fn limited_use(env: &EnvModel, battery: usize) -> Result<BuiltMonitor, ModelError> {
    let levels = battery + 1;
    let nm = 2 * levels;
    const TURN_ON: usize = 0;
    const TURN_OFF: usize = 1;
    let decode = |sm: usize| (sm / levels == 1, sm % levels);
    let model = Spec {
        n_mon_states: nm,
        n_mon_actions: 3,
        env,
        initial: onehot(nm, battery),
        truthful: true,
    }
    .build(
        |sm, _, am, _| {
            let (on, level) = decode(sm);
            let next_level = if on { level.saturating_sub(1) } else { level };
            let next_on = if am == TURN_OFF || level == 0 {
                false
            } else {
                on || am == TURN_ON
            };
            onehot(nm, usize::from(next_on) * levels + next_level)
        },
        |sm, _, se, ae, _| {
            if decode(sm).1 == 0 {
                LIMITED_USE_BONUS * env.terminal_probability(se, ae)
            } else {
                0.0
            }
        },
        |sm, _, _| reveal_if(decode(sm).0),
    )?;
    let state_names = (0..nm)
        .map(|sm| {
            let (on, level) = decode(sm);
            format!("{}:{level}", if on { "ON" } else { "OFF" })
        })
        .collect();
    Ok(BuiltMonitor {
        model,
        state_names,
        action_names: names(&["TURN-ON", "TURN-OFF", "NO-OP"]),
    })
}

/// A single-state, single-action monitor that always applies `rule` and pays nothing.
pub fn constant(env: &EnvModel, rule: ProxyRule) -> Result<BuiltMonitor, ModelError> {
    let model = Spec {
        n_mon_states: 1,
        n_mon_actions: 1,
        env,
        initial: vec![1.0],
        truthful: rule.is_truthful(),
    }
    .build(|_, _, _, _| vec![1.0], |_, _, _, _, _| 0.0, |_, _, _| rule)?;
    Ok(BuiltMonitor {
        model,
        state_names: names(&["ONLY"]),
        action_names: names(&["NO-OP"]),
    })
}

/// Hides the reward of every transition that enters one of `cells`.
/// Only meaningful for deterministic environments.
pub fn blind_cells(env: &EnvModel, cells: &[usize]) -> Result<BuiltMonitor, ModelError> {
    const BLIND: usize = 1;
    let model = Spec {
        n_mon_states: 2,
        n_mon_actions: 1,
        env,
        initial: onehot(2, 0),
        truthful: true,
    }
    .build(
        |_, se, _, ae| {
            let p: f64 = cells.iter().map(|&c| env.transition(se, ae)[c]).sum();
            vec![1.0 - p, p]
        },
        |_, _, _, _, _| 0.0,
        |_, _, sm2| reveal_if(sm2 != BLIND),
    )?;
    Ok(BuiltMonitor {
        model,
        state_names: names(&["CLEAR", "BLIND"]),
        action_names: names(&["NO-OP"]),
    })
}

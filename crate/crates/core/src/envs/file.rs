//! Loading and saving Mon-MDP instance files.
//!
//! Instances are TOML documents. Top-level keys `name`, `gamma` (default 0.99) and
//! `horizon` (default 50) are optional. The environment is given either by a
//! `[grid]` section or by an explicit `[env]` section, and the monitor by a
//! `[monitor]` section.
//!
//! ```toml
//! [grid]
//! rows = 3
//! cols = 3
//! start = [0, 0]
//! goal = [0, 2]
//! penalties = [[0, 1], [1, 1]]
//! button = [2, 2]        # optional
//! noise_sd = 0.0         # optional
//!
//! [env]                  # instead of [grid]
//! n_states = 3
//! n_actions = 2
//! transitions = [[0, 0, 1, 1.0], ...]   # [state, action, next_state, probability]
//! rewards = [[1, 0, 1.0]]               # [state, action, mean]; omitted pairs are 0
//! terminals = [2]
//! initial = [[1, 1.0]]                  # [state, probability]
//! noise_sd = 0.0
//! reward_bounds = [-2.0, 1.0]           # optional, defaults to the reward range
//! action_names = ["LEFT", "RIGHT"]      # optional
//!
//! [monitor]
//! kind = "simple"   # simple | button | n-monitor | limited-time | limited-use |
//!                   # always-unobservable | identity | full-observability |
//!                   # blind-cells | explicit
//! ```
//!
//! Monitor parameters: `cost` and `clip = [lo, hi]` (simple), `cost` (button),
//! `n`, `cost`, `bonus` (n-monitor), `p` (limited-time), `battery` (limited-use),
//! `inner` (full-observability, the kind whose rules are all replaced by reveal),
//! `cells` (blind-cells). The `explicit` kind takes
//!
//! ```toml
//! n_states = 1
//! n_actions = 2
//! transitions = [[0, 0, 0, 0, 0, 1.0], ...]  # [mon_state, env_state, mon_action, env_action, next_mon_state, p]
//! rewards = [[0, 0, 0, 0, 0, -0.2], ...]     # [mon_state, mon_action, env_state, env_action, next_mon_state, r]
//! initial = [[0, 1.0]]
//! truthful = true
//! proxy = [{ mon_state = 0, mon_action = 0, next_mon_state = 0, rule = "reveal" }]
//! ```
//!
//! Proxy rules are `reveal`, `hide`, `clip` (with `lo`, `hi`) and `shift` (with
//! `offset`). Configurations not listed hide the reward.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{assemble, monitors, GridLayout, MonitorKind, BuiltMonitor, GRID_ACTIONS};
use crate::model::{EnvModel, Labels, ModelError, MonMdp, MonitorModel, ProxyRule};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("invalid [{section}] (line {line}): {source}")]
    Invalid {
        section: &'static str,
        line: usize,
        source: ModelError,
    },
    #[error("{0}")]
    Schema(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<toml::Spanned<GridSection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    env: Option<toml::Spanned<EnvSection>>,
    monitor: toml::Spanned<MonitorSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    rows: usize,
    cols: usize,
    start: [usize; 2],
    goal: [usize; 2],
    #[serde(default)]
    penalties: Vec<[usize; 2]>,
    #[serde(default)]
    button: Option<[usize; 2]>,
    #[serde(default)]
    noise_sd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvSection {
    n_states: usize,
    n_actions: usize,
    transitions: Vec<(usize, usize, usize, f64)>,
    #[serde(default)]
    rewards: Vec<(usize, usize, f64)>,
    #[serde(default)]
    noise_sd: f64,
    #[serde(default)]
    terminals: Vec<usize>,
    initial: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reward_bounds: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action_names: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MonitorSection {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clip: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bonus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    battery: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inner: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cells: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_states: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_actions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transitions: Option<Vec<(usize, usize, usize, usize, usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rewards: Option<Vec<(usize, usize, usize, usize, usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial: Option<Vec<(usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truthful: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    proxy: Option<Vec<ProxyEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    state_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action_names: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProxyEntry {
    mon_state: usize,
    mon_action: usize,
    next_mon_state: usize,
    #[serde(flatten)]
    rule: ProxyRule,
}

struct Located<'a> {
    source: &'a str,
    section: &'static str,
    offset: usize,
}

impl Located<'_> {
    fn line(&self) -> usize {
        self.source[..self.offset.min(self.source.len())].matches('\n').count() + 1
    }

    fn invalid(&self, source: ModelError) -> LoadError {
        LoadError::Invalid {
            section: self.section,
            line: self.line(),
            source,
        }
    }

    fn index(&self, what: &'static str, index: usize, size: usize) -> Result<usize, LoadError> {
        if index < size {
            Ok(index)
        } else {
            Err(self.invalid(ModelError::Index { what, index, size }))
        }
    }
}

/// Reads and validates an instance file.
pub fn load_monmdp(path: impl AsRef<Path>) -> Result<MonMdp, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let default_name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into());
    parse_monmdp(&text, &default_name)
}

/// Parses and validates an instance from TOML text.
pub fn parse_monmdp(text: &str, default_name: &str) -> Result<MonMdp, LoadError> {
    let file: InstanceFile = toml::from_str(text).map_err(|e| LoadError::Parse(e.to_string()))?;
    let name = file.name.clone().unwrap_or_else(|| default_name.to_string());

    let (env, actions, layout) = match (&file.grid, &file.env) {
        (Some(_), Some(_)) => {
            return Err(LoadError::Schema("give either [grid] or [env], not both".into()));
        }
        (None, None) => return Err(LoadError::Schema("missing [grid] or [env] section".into())),
        (Some(g), None) => {
            let at = Located {
                source: text,
                section: "grid",
                offset: g.span().start,
            };
            let g = g.get_ref();
            let layout = GridLayout {
                rows: g.rows,
                cols: g.cols,
                start: g.start,
                goal: g.goal,
                penalties: g.penalties.clone(),
                button: g.button,
            };
            let env = layout.env_model(g.noise_sd).map_err(|e| at.invalid(e))?;
            let actions = GRID_ACTIONS.iter().map(|s| s.to_string()).collect();
            (env, actions, Some(layout))
        }
        (None, Some(e)) => {
            let at = Located {
                source: text,
                section: "env",
                offset: e.span().start,
            };
            let (env, actions) = build_env(e.get_ref(), &at)?;
            (env, actions, None)
        }
    };

    let at = Located {
        source: text,
        section: "monitor",
        offset: file.monitor.span().start,
    };
    let monitor = build_monitor(file.monitor.get_ref(), &env, layout.as_ref(), &at)?;
    let top = Located {
        source: text,
        section: "instance",
        offset: 0,
    };
    let mut mdp = assemble(&name, env, actions, monitor, layout).map_err(|e| top.invalid(e))?;
    if let Some(g) = file.gamma {
        mdp = mdp.with_gamma(g).map_err(|e| top.invalid(e))?;
    }
    if let Some(h) = file.horizon {
        let m = MonMdp::new(name, mdp.env().clone(), mdp.monitor().clone(), mdp.gamma(), h)
            .map_err(|e| top.invalid(e))?
            .with_labels(mdp.labels().clone())
            .map_err(|e| top.invalid(e))?;
        mdp = match mdp.layout() {
            Some(l) => m.with_layout(l.clone()),
            None => m,
        };
    }
    Ok(mdp)
}

fn build_env(e: &EnvSection, at: &Located) -> Result<(EnvModel, Vec<String>), LoadError> {
    let (ns, na) = (e.n_states, e.n_actions);
    if ns == 0 || na == 0 {
        return Err(at.invalid(ModelError::EmptySpace {
            what: if ns == 0 { "n_states" } else { "n_actions" },
        }));
    }
    let mut transition = vec![0.0; ns * na * ns];
    for &(s, a, s2, p) in &e.transitions {
        let s = at.index("transition state", s, ns)?;
        let a = at.index("transition action", a, na)?;
        let s2 = at.index("transition next_state", s2, ns)?;
        transition[(s * na + a) * ns + s2] += p;
    }
    let mut reward = vec![0.0; ns * na];
    for &(s, a, r) in &e.rewards {
        let s = at.index("reward state", s, ns)?;
        let a = at.index("reward action", a, na)?;
        reward[s * na + a] = r;
    }
    let mut terminal = vec![false; ns];
    for &s in &e.terminals {
        terminal[at.index("terminal state", s, ns)?] = true;
    }
    let mut initial = vec![0.0; ns];
    for &(s, p) in &e.initial {
        initial[at.index("initial state", s, ns)?] += p;
    }
    let bounds = match e.reward_bounds {
        Some([lo, hi]) => (lo, hi),
        None => reward
            .iter()
            .fold((0.0f64, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r))),
    };
    let env = EnvModel::new(ns, na, transition, reward, e.noise_sd, terminal, initial, bounds)
        .map_err(|err| at.invalid(err))?;
    let actions = match &e.action_names {
        Some(names) if names.len() == na => names.clone(),
        Some(names) => {
            return Err(at.invalid(ModelError::Invalid(format!(
                "action_names has {} entries, expected {na}",
                names.len()
            ))))
        }
        None => (0..na).map(|a| format!("a{a}")).collect(),
    };
    Ok((env, actions))
}

fn kind_from(m: &MonitorSection, kind: &str) -> Result<MonitorKind, ModelError> {
    let need = |v: Option<usize>, what: &str| {
        v.ok_or_else(|| ModelError::Invalid(format!("monitor kind {kind} needs `{what}`")))
    };
    Ok(match kind {
        "simple" => MonitorKind::Simple {
            cost: m.cost.unwrap_or(monitors::ASK_COST),
            clip: m.clip.map(|[lo, hi]| (lo, hi)),
        },
        "button" => MonitorKind::Button {
            cost: m.cost.unwrap_or(monitors::ASK_COST),
        },
        "n-monitor" => MonitorKind::NMonitor {
            n: need(m.n, "n")?,
            cost: m.cost.unwrap_or(monitors::ASK_COST),
            bonus: m.bonus.unwrap_or(monitors::N_MONITOR_BONUS),
        },
        "limited-time" => MonitorKind::LimitedTime {
            p: m.p.ok_or_else(|| ModelError::Invalid("monitor kind limited-time needs `p`".into()))?,
        },
        "limited-use" => MonitorKind::LimitedUse {
            battery: need(m.battery, "battery")?,
        },
        "always-unobservable" => MonitorKind::AlwaysUnobservable,
        "identity" => MonitorKind::Identity,
        "full-observability" => {
            let inner = m.inner.as_deref().unwrap_or("identity");
            if inner == "full-observability" || inner == "explicit" {
                return Err(ModelError::Invalid(format!("full-observability cannot wrap {inner}")));
            }
            MonitorKind::FullObservability(Box::new(kind_from(m, inner)?))
        }
        "blind-cells" => MonitorKind::BlindCells {
            cells: m.cells.clone().unwrap_or_default(),
        },
        other => return Err(ModelError::Invalid(format!("unknown monitor kind `{other}`"))),
    })
}

fn build_monitor(
    m: &MonitorSection,
    env: &EnvModel,
    layout: Option<&GridLayout>,
    at: &Located,
) -> Result<BuiltMonitor, LoadError> {
    if m.kind != "explicit" {
        let kind = kind_from(m, &m.kind).map_err(|e| at.invalid(e))?;
        let mut built = kind.build(env, layout).map_err(|e| at.invalid(e))?;
        if let Some(names) = &m.state_names {
            built.state_names = names.clone();
        }
        if let Some(names) = &m.action_names {
            built.action_names = names.clone();
        }
        return Ok(built);
    }
    let missing = |what: &str| at.invalid(ModelError::Invalid(format!("explicit monitor needs `{what}`")));
    let nm = m.n_states.ok_or_else(|| missing("n_states"))?;
    let nam = m.n_actions.ok_or_else(|| missing("n_actions"))?;
    if nm == 0 || nam == 0 {
        return Err(at.invalid(ModelError::EmptySpace {
            what: if nm == 0 { "n_mon_states" } else { "n_mon_actions" },
        }));
    }
    let (ne, nae) = (env.n_states(), env.n_actions());
    let mut transition = vec![0.0; nm * ne * nam * nae * nm];
    for &(sm, se, am, ae, sm2, p) in m.transitions.as_deref().ok_or_else(|| missing("transitions"))? {
        let sm = at.index("monitor transition mon_state", sm, nm)?;
        let se = at.index("monitor transition env_state", se, ne)?;
        let am = at.index("monitor transition mon_action", am, nam)?;
        let ae = at.index("monitor transition env_action", ae, nae)?;
        let sm2 = at.index("monitor transition next_mon_state", sm2, nm)?;
        transition[(((sm * ne + se) * nam + am) * nae + ae) * nm + sm2] += p;
    }
    let mut reward = vec![0.0; nm * nam * ne * nae * nm];
    for &(sm, am, se, ae, sm2, r) in m.rewards.as_deref().unwrap_or_default() {
        let sm = at.index("monitor reward mon_state", sm, nm)?;
        let am = at.index("monitor reward mon_action", am, nam)?;
        let se = at.index("monitor reward env_state", se, ne)?;
        let ae = at.index("monitor reward env_action", ae, nae)?;
        let sm2 = at.index("monitor reward next_mon_state", sm2, nm)?;
        reward[(((sm * nam + am) * ne + se) * nae + ae) * nm + sm2] = r;
    }
    let mut proxy = vec![ProxyRule::Hide; nm * nam * nm];
    for entry in m.proxy.as_deref().unwrap_or_default() {
        let sm = at.index("proxy mon_state", entry.mon_state, nm)?;
        let am = at.index("proxy mon_action", entry.mon_action, nam)?;
        let sm2 = at.index("proxy next_mon_state", entry.next_mon_state, nm)?;
        proxy[(sm * nam + am) * nm + sm2] = entry.rule;
    }
    let mut initial = vec![0.0; nm];
    for &(sm, p) in m.initial.as_deref().ok_or_else(|| missing("initial"))? {
        initial[at.index("monitor initial state", sm, nm)?] += p;
    }
    let truthful = m.truthful.unwrap_or_else(|| proxy.iter().all(|r| r.is_truthful()));
    let model = MonitorModel::new(nm, nam, ne, nae, transition, reward, proxy, initial, truthful)
        .map_err(|e| at.invalid(e))?;
    let numbered = Labels::numbered(0, nm, nam);
    Ok(BuiltMonitor {
        model,
        state_names: m.state_names.clone().unwrap_or(numbered.mon_states),
        action_names: m.action_names.clone().unwrap_or(numbered.mon_actions),
    })
}

/// Serialises an instance in fully explicit form. Loading the result gives back
/// identical tables.
pub fn to_toml(mdp: &MonMdp) -> String {
    let env = mdp.env();
    let (ns, na) = (env.n_states(), env.n_actions());
    let mut transitions = Vec::new();
    let mut rewards = Vec::new();
    for s in 0..ns {
        for a in 0..na {
            for (s2, &p) in env.transition(s, a).iter().enumerate() {
                if p != 0.0 {
                    transitions.push((s, a, s2, p));
                }
            }
            let r = env.reward_mean(s, a);
            if r != 0.0 {
                rewards.push((s, a, r));
            }
        }
    }
    let (lo, hi) = env.reward_bounds();
    let env_section = EnvSection {
        n_states: ns,
        n_actions: na,
        transitions,
        rewards,
        noise_sd: env.reward_noise_sd(),
        terminals: (0..ns).filter(|&s| env.is_terminal(s)).collect(),
        initial: sparse(env.initial_dist()),
        reward_bounds: Some([lo, hi]),
        action_names: Some(mdp.labels().env_actions.clone()),
    };

    let mon = mdp.monitor();
    let (nm, nam) = (mon.n_mon_states(), mon.n_mon_actions());
    let mut mt = Vec::new();
    let mut mr = Vec::new();
    for sm in 0..nm {
        for se in 0..ns {
            for am in 0..nam {
                for ae in 0..na {
                    for (sm2, &p) in mon.transition(sm, se, am, ae).iter().enumerate() {
                        if p != 0.0 {
                            mt.push((sm, se, am, ae, sm2, p));
                        }
                    }
                }
            }
        }
    }
    for sm in 0..nm {
        for am in 0..nam {
            for se in 0..ns {
                for ae in 0..na {
                    for sm2 in 0..nm {
                        let r = mon.reward(sm, am, se, ae, sm2);
                        if r != 0.0 {
                            mr.push((sm, am, se, ae, sm2, r));
                        }
                    }
                }
            }
        }
    }
    let mut proxy = Vec::new();
    for sm in 0..nm {
        for am in 0..nam {
            for sm2 in 0..nm {
                let rule = mon.proxy_rule(sm, am, sm2);
                if rule != ProxyRule::Hide {
                    proxy.push(ProxyEntry {
                        mon_state: sm,
                        mon_action: am,
                        next_mon_state: sm2,
                        rule,
                    });
                }
            }
        }
    }
    let monitor_section = MonitorSection {
        kind: "explicit".into(),
        n_states: Some(nm),
        n_actions: Some(nam),
        transitions: Some(mt),
        rewards: Some(mr),
        initial: Some(sparse(mon.initial_dist())),
        truthful: Some(mon.is_truthful()),
        proxy: Some(proxy),
        state_names: Some(mdp.labels().mon_states.clone()),
        action_names: Some(mdp.labels().mon_actions.clone()),
        ..Default::default()
    };
    let file = InstanceFile {
        name: Some(mdp.name.clone()),
        gamma: Some(mdp.gamma()),
        horizon: Some(mdp.horizon()),
        grid: None,
        env: Some(toml::Spanned::new(0..0, env_section)),
        monitor: toml::Spanned::new(0..0, monitor_section),
    };
    toml::to_string(&file).expect("instance serialises")
}

fn sparse(dist: &[f64]) -> Vec<(usize, f64)> {
    dist.iter()
        .enumerate()
        .filter(|(_, &p)| p != 0.0)
        .map(|(i, &p)| (i, p))
        .collect()
}

//! Exact planning on the joint chain: value iteration and finite-horizon policy
//! evaluation.

use thiserror::Error;

use crate::model::{EnvModel, JointAction, JointState, ModelError, MonMdp, QTable};

/// Hard cap on value-iteration sweeps.
pub const MAX_SWEEPS: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanningError {
    #[error("value iteration stopped after {iterations} sweeps with residual {residual:e}")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("policy is undefined at reachable joint state {state}")]
    UndefinedPolicy { state: usize },
    #[error("policy has {actual} rows, model has {expected} joint states")]
    PolicyShape { expected: usize, actual: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which reward the planner maximises.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardMode {
    /// Environment mean plus expected monitor reward.
    Joint,
    /// Environment mean only.
    EnvOnly,
    /// A replacement `[env_state][env_action]` mean table, plus expected monitor reward.
    Custom(Vec<f64>),
}

/// The joint chain in sparse form, with expected rewards for one [`RewardMode`].
#[derive(Debug, Clone)]
pub struct JointModel {
    n_states: usize,
    n_actions: usize,
    successors: Vec<Vec<(usize, f64)>>,
    reward: Vec<f64>,
    terminal: Vec<bool>,
    initial: Vec<f64>,
    gamma: f64,
}

/// Builds the joint transition chain
/// `p(s', m' | s, m, a, b) = p_env(s' | s, a) * p_mon(m' | m, s, b, a)`.
pub fn joint_transition(mdp: &MonMdp, mode: &RewardMode) -> Result<JointModel, PlanningError> {
    let env = mdp.env();
    let mon = mdp.monitor();
    if let RewardMode::Custom(t) = mode {
        if t.len() != env.n_states() * env.n_actions() {
            return Err(ModelError::Shape {
                table: "custom reward",
                expected: env.n_states() * env.n_actions(),
                actual: t.len(),
            }
            .into());
        }
    }
    let (ns, na) = (mdp.n_joint_states(), mdp.n_joint_actions());
    let mut successors = Vec::with_capacity(ns * na);
    let mut reward = Vec::with_capacity(ns * na);
    let nm = mon.n_mon_states();
    for js in 0..ns {
        let s = mdp.state_at(js);
        for ja in 0..na {
            let a = mdp.action_at(ja);
            let pe = env.transition(s.env, a.env);
            let pm = mon.transition(s.mon, s.env, a.mon, a.env);
            let mut row = Vec::new();
            for (se2, &p1) in pe.iter().enumerate() {
                if p1 == 0.0 {
                    continue;
                }
                for (sm2, &p2) in pm.iter().enumerate() {
                    if p2 > 0.0 {
                        row.push((se2 * nm + sm2, p1 * p2));
                    }
                }
            }
            successors.push(row);
            let env_r = match mode {
                RewardMode::Custom(t) => t[s.env * env.n_actions() + a.env],
                _ => env.reward_mean(s.env, a.env),
            };
            let mon_r = match mode {
                RewardMode::EnvOnly => 0.0,
                _ => mdp.expected_mon_reward(s, a),
            };
            reward.push(env_r + mon_r);
        }
    }
    let terminal = (0..ns).map(|js| mdp.is_terminal(mdp.state_at(js))).collect();
    Ok(JointModel {
        n_states: ns,
        n_actions: na,
        successors,
        reward,
        terminal,
        initial: mdp.initial_joint(),
        gamma: mdp.gamma(),
    })
}

impl JointModel {
    /// A single-process chain built from an environment MDP alone.
    pub fn from_env(env: &EnvModel, gamma: f64) -> Self {
        let (ns, na) = (env.n_states(), env.n_actions());
        let mut successors = Vec::with_capacity(ns * na);
        let mut reward = Vec::with_capacity(ns * na);
        for s in 0..ns {
            for a in 0..na {
                successors.push(
                    env.transition(s, a)
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(s2, &p)| (s2, p))
                        .collect(),
                );
                reward.push(env.reward_mean(s, a));
            }
        }
        Self {
            n_states: ns,
            n_actions: na,
            successors,
            reward,
            terminal: env.terminal_mask().to_vec(),
            initial: env.initial_dist().to_vec(),
            gamma,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn successors(&self, state: usize, action: usize) -> &[(usize, f64)] {
        &self.successors[state * self.n_actions + action]
    }

    /// Probability of moving from `state` to `next` under `action`.
    pub fn prob(&self, state: usize, action: usize, next: usize) -> f64 {
        self.successors(state, action)
            .iter()
            .filter(|(s2, _)| *s2 == next)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.reward[state * self.n_actions + action]
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal[state]
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn backup(&self, q: &QTable, state: usize, action: usize) -> f64 {
        let next: f64 = self
            .successors(state, action)
            .iter()
            .filter(|(s2, _)| !self.terminal[*s2])
            .map(|&(s2, p)| p * q.max(s2))
            .sum();
        self.reward(state, action) + self.gamma * next
    }

    /// Value iteration until the sup-norm Bellman residual is below `tol`.
    /// Terminal states keep value zero.
    pub fn value_iteration(&self, tol: f64) -> Result<QTable, PlanningError> {
        let mut q = QTable::new(self.n_states, self.n_actions, 0.0);
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_SWEEPS {
            let mut next = QTable::new(self.n_states, self.n_actions, 0.0);
            residual = 0.0f64;
            for s in 0..self.n_states {
                if self.terminal[s] {
                    continue;
                }
                for a in 0..self.n_actions {
                    let v = self.backup(&q, s, a);
                    residual = residual.max((v - q.get(s, a)).abs());
                    next.set(s, a, v);
                }
            }
            q = next;
            // `q` is now T(q_old); its own residual is at most gamma * residual.
            if residual < tol {
                return Ok(q);
            }
        }
        Err(PlanningError::NonConvergence {
            iterations: MAX_SWEEPS,
            residual,
        })
    }

    /// Sup-norm of `T q - q` over non-terminal states.
    pub fn bellman_residual(&self, q: &QTable) -> f64 {
        let mut r = 0.0f64;
        for s in (0..self.n_states).filter(|&s| !self.terminal[s]) {
            for a in 0..self.n_actions {
                r = r.max((self.backup(q, s, a) - q.get(s, a)).abs());
            }
        }
        r
    }

    /// Expected discounted return over `horizon` steps of a deterministic policy
    /// chosen lazily by `choose`. Each state is queried at most once per call.
    pub fn evaluate_with<F>(&self, horizon: usize, mut choose: F) -> Result<f64, PlanningError>
    where
        F: FnMut(usize) -> Option<usize>,
    {
        let mut cache: Vec<Option<Option<usize>>> = vec![None; self.n_states];
        let mut dist = self.initial.clone();
        let mut next = vec![0.0; self.n_states];
        let mut total = 0.0;
        let mut discount = 1.0;
        for _ in 0..horizon {
            next.iter_mut().for_each(|x| *x = 0.0);
            let mut mass_left = false;
            for s in 0..self.n_states {
                let m = dist[s];
                if m == 0.0 || self.terminal[s] {
                    continue;
                }
                mass_left = true;
                let a = *cache[s].get_or_insert_with(|| choose(s));
                let a = a.ok_or(PlanningError::UndefinedPolicy { state: s })?;
                total += discount * m * self.reward(s, a);
                for &(s2, p) in self.successors(s, a) {
                    next[s2] += m * p;
                }
            }
            if !mass_left {
                break;
            }
            std::mem::swap(&mut dist, &mut next);
            discount *= self.gamma;
        }
        Ok(total)
    }

    /// Expected discounted return over `horizon` steps of a stochastic policy.
    pub fn evaluate(&self, policy: &Policy, horizon: usize) -> Result<f64, PlanningError> {
        if policy.rows.len() != self.n_states {
            return Err(PlanningError::PolicyShape {
                expected: self.n_states,
                actual: policy.rows.len(),
            });
        }
        let mut dist = self.initial.clone();
        let mut next = vec![0.0; self.n_states];
        let mut total = 0.0;
        let mut discount = 1.0;
        for _ in 0..horizon {
            next.iter_mut().for_each(|x| *x = 0.0);
            for s in 0..self.n_states {
                let m = dist[s];
                if m == 0.0 || self.terminal[s] {
                    continue;
                }
                let row = &policy.rows[s];
                if row.is_empty() {
                    return Err(PlanningError::UndefinedPolicy { state: s });
                }
                for &(a, pa) in row {
                    total += discount * m * pa * self.reward(s, a);
                    for &(s2, p) in self.successors(s, a) {
                        next[s2] += m * pa * p;
                    }
                }
            }
            std::mem::swap(&mut dist, &mut next);
            discount *= self.gamma;
        }
        Ok(total)
    }

    /// States reachable from the initial distribution under any actions.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.n_states];
        let mut stack: Vec<usize> = (0..self.n_states).filter(|&s| self.initial[s] > 0.0).collect();
        for &s in &stack {
            seen[s] = true;
        }
        while let Some(s) = stack.pop() {
            if self.terminal[s] {
                continue;
            }
            for a in 0..self.n_actions {
                for &(s2, _) in self.successors(s, a) {
                    if !seen[s2] {
                        seen[s2] = true;
                        stack.push(s2);
                    }
                }
            }
        }
        seen
    }
}

/// Per-state action distributions over joint indices. An empty row means the
/// policy is undefined there.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl Policy {
    pub fn deterministic(actions: &[Option<usize>]) -> Self {
        Self {
            rows: actions
                .iter()
                .map(|a| a.map(|a| vec![(a, 1.0)]).unwrap_or_default())
                .collect(),
        }
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let p = 1.0 / n_actions as f64;
        Self {
            rows: vec![(0..n_actions).map(|a| (a, p)).collect(); n_states],
        }
    }

    /// The single action at `state`, if the row is deterministic.
    pub fn action(&self, state: usize) -> Option<usize> {
        match self.rows.get(state)?.as_slice() {
            [(a, _)] => Some(*a),
            _ => None,
        }
    }
}

/// Lowest-index greedy action in every non-terminal state, treating values within
/// `tol` of the maximum as ties.
pub fn greedy_policy(model: &JointModel, q: &QTable, tol: f64) -> Policy {
    let actions: Vec<Option<usize>> = (0..model.n_states())
        .map(|s| {
            if model.is_terminal(s) {
                None
            } else {
                q.near_greedy(s, tol).first().copied()
            }
        })
        .collect();
    Policy::deterministic(&actions)
}

/// Tolerance used when planning for reference returns.
pub const PLAN_TOL: f64 = 1e-10;

/// Optimal joint Q-function of `mdp` under `mode`.
pub fn value_iteration(mdp: &MonMdp, mode: &RewardMode, tol: f64) -> Result<QTable, PlanningError> {
    joint_transition(mdp, mode)?.value_iteration(tol)
}

/// Horizon-limited return of `policy` under the true joint reward.
pub fn policy_evaluation(mdp: &MonMdp, policy: &Policy, horizon: usize) -> Result<f64, PlanningError> {
    joint_transition(mdp, &RewardMode::Joint)?.evaluate(policy, horizon)
}

/// Optimal policy of the joint chain and its horizon-limited return.
#[derive(Debug, Clone)]
pub struct Plan {
    pub q: QTable,
    pub policy: Policy,
    pub expected_return: f64,
}

pub fn plan_optimal(mdp: &MonMdp) -> Result<Plan, PlanningError> {
    let model = joint_transition(mdp, &RewardMode::Joint)?;
    let q = model.value_iteration(PLAN_TOL)?;
    let policy = greedy_policy(&model, &q, 1e-9);
    let expected_return = model.evaluate(&policy, mdp.horizon())?;
    Ok(Plan {
        q,
        policy,
        expected_return,
    })
}

/// Decodes a joint policy action into its two components.
pub fn split_action(mdp: &MonMdp, policy: &Policy, state: JointState) -> Option<JointAction> {
    policy
        .action(mdp.state_index(state))
        .map(|a| mdp.action_at(a))
}

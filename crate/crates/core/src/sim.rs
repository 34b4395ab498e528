//! Sampling transitions of a monitored MDP.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::model::{JointAction, JointState, ModelError, MonMdp, Proxy};

/// One simulated transition, including the hidden environment reward.
///
/// Learners other than the oracle only ever see [`Feedback`], obtained through
/// [`ObservedStep::feedback`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedStep {
    pub state: JointState,
    pub action: JointAction,
    pub proxy: Proxy,
    pub mon_reward: f64,
    pub hidden_env_reward: f64,
    pub next_state: JointState,
    /// The next environment state is terminal.
    pub done: bool,
}

/// What a learner without privileged access sees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feedback {
    pub state: JointState,
    pub action: JointAction,
    pub proxy: Proxy,
    pub mon_reward: f64,
    pub next_state: JointState,
    pub done: bool,
}

impl ObservedStep {
    pub fn feedback(&self) -> Feedback {
        Feedback {
            state: self.state,
            action: self.action,
            proxy: self.proxy,
            mon_reward: self.mon_reward,
            next_state: self.next_state,
            done: self.done,
        }
    }
}

/// Draws an index from a probability row.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Samples an initial joint state.
pub fn reset<R: Rng + ?Sized>(mdp: &MonMdp, rng: &mut R) -> JointState {
    JointState {
        env: sample_index(mdp.env().initial_dist(), rng),
        mon: sample_index(mdp.monitor().initial_dist(), rng),
    }
}

/// Simulates one joint transition.
///
/// The environment reward is drawn once and the same draw is passed through the
/// monitor function, so the proxy reflects the actual noisy reward.
pub fn step<R: Rng + ?Sized>(
    mdp: &MonMdp,
    state: JointState,
    action: JointAction,
    rng: &mut R,
) -> Result<ObservedStep, ModelError> {
    mdp.check_state(state)?;
    mdp.check_action(action)?;
    if mdp.is_terminal(state) {
        return Err(ModelError::TerminalStep(state.env));
    }
    let env = mdp.env();
    let monitor = mdp.monitor();
    let next_env = sample_index(env.transition(state.env, action.env), rng);
    let mut reward = env.reward_mean(state.env, action.env);
    let sd = env.reward_noise_sd();
    if sd > 0.0 {
        let normal = Normal::new(0.0, sd).expect("validated noise sd");
        reward += normal.sample(rng);
    }
    let next_mon = sample_index(
        monitor.transition(state.mon, state.env, action.mon, action.env),
        rng,
    );
    let proxy = monitor.monitor_fn(reward, state.mon, action.mon, next_mon);
    let mon_reward = monitor.reward(state.mon, action.mon, state.env, action.env, next_mon);
    Ok(ObservedStep {
        state,
        action,
        proxy,
        mon_reward,
        hidden_env_reward: reward,
        next_state: JointState {
            env: next_env,
            mon: next_mon,
        },
        done: env.is_terminal(next_env),
    })
}

//! Tabular laboratory for monitored MDPs: an environment MDP whose rewards reach the
//! agent only through a monitor, the learners that cope with unobservable rewards,
//! exact planning, experiment runners and a solvability analysis.

pub mod agents;
pub mod cli;
pub mod envs;
pub mod experiments;
pub mod model;
pub mod planning;
pub mod sim;
pub mod taxonomy;

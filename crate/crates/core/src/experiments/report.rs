//! CSV export and text rendering of results.
//!
//! * curves: `monmdp,agent,seed,step,eval_return`
//! * aggregate: `monmdp,agent,noisy,percent_optimal,mean_steps,ci95,n_seeds`
//!   (`mean_steps` and `ci95` are empty when no seed reached an optimal policy)
//! * policy: `env_state,mon_state,env_action,mon_action`, one row per non-terminal
//!   joint state; states are indices, actions are names

use std::fmt::Write as _;
use std::path::Path;

use super::{AggregateResult, ExperimentError};
use crate::envs::{DOWN, LEFT, RIGHT};
use crate::model::{JointAction, MonMdp};

pub const CURVE_HEADER: [&str; 5] = ["monmdp", "agent", "seed", "step", "eval_return"];
pub const AGGREGATE_HEADER: [&str; 7] = ["monmdp", "agent", "noisy", "percent_optimal", "mean_steps", "ci95", "n_seeds"];
pub const POLICY_HEADER: [&str; 4] = ["env_state", "mon_state", "env_action", "mon_action"];

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, ExperimentError> {
    csv::Writer::from_path(path).map_err(|source| ExperimentError::Csv {
        path: path.display().to_string(),
        source,
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_curves(path: &Path, results: &[AggregateResult]) -> Result<(), ExperimentError> {
    let mut w = writer(path)?;
    w.write_record(CURVE_HEADER).map_err(csv_err(path))?;
    for agg in results {
        for run in &agg.runs {
            for &(step, ret) in &run.curve {
                w.write_record([
                    agg.monmdp.clone(),
                    agg.agent.clone(),
                    run.seed.to_string(),
                    step.to_string(),
                    ret.to_string(),
                ])
                .map_err(csv_err(path))?;
            }
        }
    }
    w.flush().map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_aggregate(path: &Path, results: &[AggregateResult]) -> Result<(), ExperimentError> {
    let mut w = writer(path)?;
    w.write_record(AGGREGATE_HEADER).map_err(csv_err(path))?;
    for agg in results {
        w.write_record([
            agg.monmdp.clone(),
            agg.agent.clone(),
            agg.noisy.to_string(),
            agg.percent_optimal.to_string(),
            opt(agg.mean_steps),
            opt(agg.ci95),
            agg.n_seeds.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes a greedy joint policy, one row per non-terminal joint state.
pub fn export_policy(mdp: &MonMdp, policy: &[Option<JointAction>], path: &Path) -> Result<(), ExperimentError> {
    let mut w = writer(path)?;
    w.write_record(POLICY_HEADER).map_err(csv_err(path))?;
    let labels = mdp.labels();
    for (js, a) in policy.iter().enumerate() {
        let Some(a) = a else { continue };
        let s = mdp.state_at(js);
        w.write_record([
            s.env.to_string(),
            labels.mon_states[s.mon].clone(),
            labels.env_actions[a.env].clone(),
            labels.mon_actions[a.mon].clone(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn arrow(a: usize) -> char {
    match a {
        LEFT => '<',
        DOWN => 'v',
        RIGHT => '>',
        _ => '^',
    }
}

/// Text rendering of a greedy joint policy, one block per monitor state.
///
/// Grid instances are drawn as grids: each cell shows an arrow for the move and the
/// monitor action, `G` marks the goal, `*` a penalty cell and `B` the button.
pub fn render_policy(mdp: &MonMdp, policy: &[Option<JointAction>]) -> String {
    let labels = mdp.labels();
    let nm = mdp.monitor().n_mon_states();
    let mut out = String::new();
    let width = labels.mon_actions.iter().map(|s| s.len()).max().unwrap_or(0) + 3;
    for sm in 0..nm {
        let _ = writeln!(out, "monitor state {}:", labels.mon_states[sm]);
        match mdp.layout() {
            Some(grid) => {
                for r in 0..grid.rows {
                    let mut line = String::new();
                    for c in 0..grid.cols {
                        let se = grid.index([r, c]);
                        let mark = if [r, c] == grid.goal {
                            'G'
                        } else if grid.penalties.contains(&[r, c]) {
                            '*'
                        } else if grid.button == Some([r, c]) {
                            'B'
                        } else {
                            ' '
                        };
                        let cell = match policy[se * nm + sm] {
                            Some(a) => format!("{}{}{}", mark, arrow(a.env), labels.mon_actions[a.mon]),
                            None => format!("{mark}"),
                        };
                        let _ = write!(line, "|{cell:<width$}");
                    }
                    let _ = writeln!(out, "{line}|");
                }
            }
            None => {
                for se in 0..mdp.env().n_states() {
                    match policy[se * nm + sm] {
                        Some(a) => {
                            let _ = writeln!(
                                out,
                                "  state {se}: {} / {}",
                                labels.env_actions[a.env], labels.mon_actions[a.mon]
                            );
                        }
                        None => {
                            let _ = writeln!(out, "  state {se}: terminal");
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentKind;
    use crate::envs;
    use crate::experiments::{run_suite, Experiment, ExperimentConfig};

    #[test]
    fn csv_files_have_fixed_headers_and_row_counts() {
        let mut cfg = ExperimentConfig::standard(AgentKind::Oracle, false);
        cfg.n_seeds = 2;
        cfg.total_steps = 500;
        cfg.convergence_window = 100;
        let exp = Experiment::new(envs::make_simple(), cfg).unwrap();
        let agg = run_suite(&exp, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let curves = dir.path().join("curves.csv");
        write_curves(&curves, std::slice::from_ref(&agg)).unwrap();
        let text = std::fs::read_to_string(&curves).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CURVE_HEADER.join(","));
        assert_eq!(lines.count(), 2 * 50);
        let aggp = dir.path().join("aggregate.csv");
        write_aggregate(&aggp, &[agg.clone()]).unwrap();
        let text = std::fs::read_to_string(&aggp).unwrap();
        assert_eq!(text.lines().next().unwrap(), AGGREGATE_HEADER.join(","));
        assert_eq!(text.lines().count(), 2);
        let pol = dir.path().join("policy.csv");
        export_policy(exp.mdp(), &agg.runs[0].policy, &pol).unwrap();
        let text = std::fs::read_to_string(&pol).unwrap();
        assert_eq!(text.lines().next().unwrap(), POLICY_HEADER.join(","));
        assert_eq!(text.lines().count(), 1 + 8);
    }

    #[test]
    fn render_marks_goal_and_penalties() {
        let mdp = envs::make_penalty();
        let policy: Vec<Option<JointAction>> = (0..mdp.n_joint_states())
            .map(|js| (!mdp.is_terminal(mdp.state_at(js))).then_some(JointAction { env: 2, mon: 1 }))
            .collect();
        let text = render_policy(&mdp, &policy);
        assert!(text.contains("|G"));
        assert!(text.contains("*>NO-OP"));
        assert_eq!(text.lines().count(), 4);
    }
}

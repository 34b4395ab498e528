//! Acceptance checks. Prints one PASS/FAIL line per criterion, with indented detail
//! lines, and exits non-zero if any criterion fails.

use std::collections::HashMap;
use std::process::ExitCode;

use monmdp::agents::{Agent, AgentConfig, AgentKind, RewardModelTable};
use monmdp::envs::{self, DEFAULT_BATTERY};
use monmdp::experiments::{run_suite, AggregateResult, Experiment, ExperimentConfig};
use monmdp::model::{EnvModel, JointAction, JointState, MonMdp, Proxy};
use monmdp::planning::{self, Policy};
use monmdp::sim;
use monmdp::taxonomy::{self, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::random_instance;

const SEEDS: u64 = 100;
const OPTIMAL_SHARE: f64 = 95.0;
const FAILED_SHARE: f64 = 5.0;
const LIMITED_TIME_SHARE: f64 = 90.0;
const NOISY_SHARE: f64 = 90.0;
const STEP_WINDOW: (f64, f64) = (0.5, 2.0);
const NOISY_RATIO: (f64, f64) = (1.3, 3.5);
const BEHAVIOUR_SHARE: f64 = 0.95;
const FLOAT_SLACK: f64 = 1e-9;

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

struct Report {
    ok: bool,
    lines: Vec<String>,
}

impl Report {
    fn new() -> Self {
        Self {
            ok: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, pass: bool, line: String) {
        self.ok &= pass;
        self.lines.push(format!("{} {line}", if pass { "ok  " } else { "FAIL" }));
    }

    fn info(&mut self, line: String) {
        self.lines.push(format!("     {line}"));
    }
}

fn instance(name: &str) -> MonMdp {
    envs::by_name(name).unwrap_or_else(|| panic!("unknown instance {name}"))
}

struct Suites {
    cache: HashMap<(String, String, bool), AggregateResult>,
}

impl Suites {
    fn new() -> Self {
        Self { cache: HashMap::new() }
    }

    fn get(&mut self, env: &str, kind: AgentKind, noisy: bool) -> &AggregateResult {
        self.get_with(env, kind, noisy, None)
    }

    fn get_with(&mut self, env: &str, kind: AgentKind, noisy: bool, q_init: Option<f64>) -> &AggregateResult {
        let key = (env.to_string(), format!("{kind}/{q_init:?}"), noisy);
        self.cache.entry(key).or_insert_with(|| {
            let mut cfg = ExperimentConfig::standard(kind, noisy);
            cfg.n_seeds = SEEDS;
            if let Some(q) = q_init {
                cfg.agent.q_init = q;
            }
            let exp = Experiment::new(instance(env), cfg).expect("valid experiment");
            run_suite(&exp, jobs()).expect("suite runs")
        })
    }
}

/// Table 3, deterministic block: (instance, agent, percent optimal, mean steps).
fn table3() -> Vec<(&'static str, AgentKind, f64, Option<f64>)> {
    use AgentKind::*;
    vec![
        ("simple", Oracle, 100.0, Some(97.0)),
        ("simple", RewardModel, 100.0, Some(160.0)),
        ("simple", Sequential, 100.0, Some(134.0)),
        ("simple", Joint, 100.0, Some(130.0)),
        ("penalty", Oracle, 100.0, Some(353.0)),
        ("penalty", RewardModel, 100.0, Some(445.0)),
        ("penalty", Sequential, 100.0, Some(533.0)),
        ("penalty", Joint, 100.0, Some(535.0)),
        ("button", Oracle, 100.0, Some(612.0)),
        ("button", RewardModel, 100.0, Some(662.0)),
        ("button", Sequential, 0.0, None),
        ("button", Joint, 0.0, None),
        ("n-monitor", Oracle, 100.0, Some(1568.0)),
        ("n-monitor", RewardModel, 100.0, Some(2146.0)),
        ("n-monitor", Sequential, 100.0, Some(1639.0)),
        ("n-monitor", Joint, 0.0, None),
        ("limited-time", Oracle, 100.0, Some(1911.0)),
        ("limited-time", RewardModel, 97.0, Some(2109.0)),
        ("limited-time", Sequential, 72.0, Some(2728.0)),
        ("limited-time", Joint, 73.0, Some(2755.0)),
        ("limited-use", Oracle, 100.0, Some(2157.0)),
        ("limited-use", RewardModel, 100.0, Some(2252.0)),
        ("limited-use", Sequential, 0.0, None),
        ("limited-use", Joint, 99.0, Some(2940.0)),
    ]
}

/// Cells whose success rate is constrained, with the bound: `(min, max)` percent.
fn outcome_bounds() -> Vec<(&'static str, AgentKind, f64, f64)> {
    use AgentKind::*;
    let mut out = Vec::new();
    for env in ["simple", "penalty", "button", "n-monitor", "limited-use"] {
        out.push((env, RewardModel, OPTIMAL_SHARE, 100.0));
    }
    out.push(("limited-time", RewardModel, LIMITED_TIME_SHARE, 100.0));
    for env in ["simple", "penalty"] {
        out.push((env, Joint, OPTIMAL_SHARE, 100.0));
        out.push((env, Sequential, OPTIMAL_SHARE, 100.0));
    }
    out.push(("button", Joint, 0.0, FAILED_SHARE));
    out.push(("button", Sequential, 0.0, FAILED_SHARE));
    out.push(("n-monitor", Joint, 0.0, FAILED_SHARE));
    out.push(("limited-use", Sequential, 0.0, FAILED_SHARE));
    out
}

fn fmt_steps(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.0}"))
}

fn criterion_1(suites: &mut Suites) -> Report {
    let mut r = Report::new();
    for (env, kind, lo, hi) in outcome_bounds() {
        let p = suites.get(env, kind, false).percent_optimal;
        r.check(
            (lo..=hi).contains(&p),
            format!("{env}/{kind}: {p:.0}% optimal, required [{lo:.0}, {hi:.0}]"),
        );
    }
    for (env, kind, reference, _) in table3() {
        if !outcome_bounds().iter().any(|b| b.0 == env && b.1 == kind) {
            let p = suites.get(env, kind, false).percent_optimal;
            r.info(format!("{env}/{kind}: {p:.0}% optimal (table: {reference:.0}%)"));
        }
    }
    r
}

fn criterion_2(suites: &mut Suites) -> Report {
    let mut r = Report::new();
    for (env, kind, _, steps) in table3() {
        let Some(reference) = steps else { continue };
        let agg = suites.get(env, kind, false);
        let ours = agg.mean_steps;
        let pass = ours.is_some_and(|m| m >= STEP_WINDOW.0 * reference && m <= STEP_WINDOW.1 * reference);
        r.check(
            pass,
            format!(
                "{env}/{kind}: mean {} steps (ci {}), table {reference:.0}, window [{:.0}, {:.0}]",
                fmt_steps(ours),
                fmt_steps(agg.ci95),
                STEP_WINDOW.0 * reference,
                STEP_WINDOW.1 * reference
            ),
        );
    }
    for env in ["simple", "penalty", "button", "n-monitor", "limited-time", "limited-use"] {
        let o = suites.get(env, AgentKind::Oracle, false).mean_steps;
        let m = suites.get(env, AgentKind::RewardModel, false).mean_steps;
        let pass = matches!((o, m), (Some(o), Some(m)) if o <= m);
        r.check(
            pass,
            format!("{env}: oracle {} <= reward-model {}", fmt_steps(o), fmt_steps(m)),
        );
    }
    r
}

fn criterion_3(suites: &mut Suites) -> Report {
    let mut r = Report::new();
    for env in ["simple", "penalty", "button"] {
        let m = suites.get(env, AgentKind::RewardModel, true);
        let (p, ms) = (m.percent_optimal, m.mean_steps);
        r.check(
            p >= NOISY_SHARE,
            format!("{env}/reward-model noisy: {p:.0}% optimal, required >= {NOISY_SHARE:.0}"),
        );
        let o = suites.get(env, AgentKind::Oracle, true).mean_steps;
        let ratio = match (o, ms) {
            (Some(o), Some(m)) if o > 0.0 => Some(m / o),
            _ => None,
        };
        r.check(
            ratio.is_some_and(|x| (NOISY_RATIO.0..=NOISY_RATIO.1).contains(&x)),
            format!(
                "{env} noisy: reward-model/oracle steps {} / {} = {}, required [{}, {}]",
                fmt_steps(ms),
                fmt_steps(o),
                ratio.map_or("-".into(), |x| format!("{x:.2}")),
                NOISY_RATIO.0,
                NOISY_RATIO.1
            ),
        );
    }
    r
}

fn mon_action(mdp: &MonMdp, name: &str) -> usize {
    mdp.labels()
        .mon_actions
        .iter()
        .position(|n| n == name)
        .unwrap_or_else(|| panic!("no monitor action {name}"))
}

/// Follows a greedy policy from the start of a deterministic instance and returns the
/// visited `(state, action, next_state)` triples.
fn greedy_rollout(mdp: &MonMdp, policy: &[Option<JointAction>]) -> Vec<(JointState, JointAction, JointState)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut s = sim::reset(mdp, &mut rng);
    let mut path = Vec::new();
    for _ in 0..mdp.horizon() {
        let Some(a) = policy[mdp.state_index(s)] else { break };
        let step = sim::step(mdp, s, a, &mut rng).expect("live state");
        path.push((s, a, step.next_state));
        if step.done {
            break;
        }
        s = step.next_state;
    }
    path
}

fn share(flags: impl Iterator<Item = bool>) -> f64 {
    let v: Vec<bool> = flags.collect();
    v.iter().filter(|&&b| b).count() as f64 / v.len() as f64
}

fn criterion_4(suites: &mut Suites) -> Report {
    let mut r = Report::new();

    let penalty = instance("penalty");
    let layout = penalty.layout().expect("grid").clone();
    let no_op = mon_action(&penalty, "NO-OP");
    let agg = suites.get("penalty", AgentKind::ConstantAssign(0.0), false);
    let s = share(agg.runs.iter().map(|run| {
        greedy_rollout(&penalty, &run.policy)
            .iter()
            .any(|(_, a, next)| a.mon == no_op && layout.penalties.contains(&layout.cell(next.env)))
    }));
    r.check(
        s >= BEHAVIOUR_SHARE,
        format!("penalty/constant-assign(0): greedy path enters a penalty cell unmonitored in {:.0}% of seeds", 100.0 * s),
    );

    let simple = instance("simple");
    let ask = mon_action(&simple, "ASK");
    let agg = suites.get("simple", AgentKind::Ignore, false);
    let s = share(agg.runs.iter().map(|run| run.policy.iter().flatten().all(|a| a.mon == ask)));
    r.check(
        s >= BEHAVIOUR_SHARE,
        format!("simple/ignore: greedy policy asks in every state in {:.0}% of seeds", 100.0 * s),
    );

    let chain = instance("joint-counterexample");
    let labels = chain.labels().env_actions.clone();
    let idx = |n: &str| labels.iter().position(|l| l == n).expect("chain action");
    let (go_a, stay, go_c) = (idx("GO-A"), idx("STAY"), idx("GO-C"));
    let b = 1;
    let agg = suites.get("joint-counterexample", AgentKind::Joint, false);
    let s = share(agg.runs.iter().map(|run| {
        let agent = &run.agent;
        let q_env = agent.q_env().expect("split tables");
        let env_best = argmax_strict(q_env.row(b));
        let mon_row: Vec<f64> = (0..3).map(|ae| agent.q_mon(b, ae, 0, 0).expect("split tables")).collect();
        let mon_best = argmax_strict(&mon_row);
        let greedy = run.policy[chain.state_index(JointState { env: b, mon: 0 })].map(|a| a.env);
        let terminal = |a: Option<usize>| a == Some(go_a) || a == Some(go_c);
        greedy == Some(stay) && terminal(env_best) && terminal(mon_best)
    }));
    r.check(
        s >= BEHAVIOUR_SHARE,
        format!(
            "joint-counterexample/joint: greedy stays in B while each table alone leaves B in {:.0}% of seeds",
            100.0 * s
        ),
    );
    r
}

/// Unique argmax, or `None` on a tie.
fn argmax_strict(values: &[f64]) -> Option<usize> {
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let hits: Vec<usize> = (0..values.len()).filter(|&i| values[i] == best).collect();
    (hits.len() == 1).then(|| hits[0])
}

fn criterion_5(suites: &mut Suites) -> Report {
    let mut r = Report::new();
    for env in ["simple", "penalty", "button"] {
        for c in [-10.0, 0.0, 1.0] {
            let p = suites.get(env, AgentKind::ConstantAssign(c), false).percent_optimal;
            r.check(
                p <= FAILED_SHARE,
                format!("{env}/constant-assign({c}): {p:.0}% optimal, required <= {FAILED_SHARE:.0}"),
            );
        }
    }
    for env in ["simple", "penalty"] {
        let p = suites.get_with(env, AgentKind::Joint, false, Some(1.0)).percent_optimal;
        r.check(
            p <= FAILED_SHARE,
            format!("{env}/joint q_init=1: {p:.0}% optimal, required <= {FAILED_SHARE:.0}"),
        );
        let mdp = instance(env);
        let ask = mon_action(&mdp, "ASK");
        let agg = suites.get_with(env, AgentKind::Ignore, false, Some(1.0));
        let s = share(agg.runs.iter().map(|run| run.policy.iter().flatten().all(|a| a.mon != ask)));
        r.check(
            s >= BEHAVIOUR_SHARE,
            format!("{env}/ignore q_init=1: greedy policy never asks in {:.0}% of seeds", 100.0 * s),
        );
    }
    r
}

fn criterion_6() -> Report {
    let mut r = Report::new();
    // (instance, dimensionality, explicit monitor actions, invariant, positive monitor rewards)
    let rows = [
        ("simple", 2, true, true, false),
        ("penalty", 2, true, true, false),
        ("button", 2, false, false, false),
        ("n-monitor", 25, true, true, true),
        ("limited-time", 2, false, true, false),
        ("limited-use", 36, true, false, true),
    ];
    for (env, dim, explicit, invariant, positive) in rows {
        let c = taxonomy::classify(&instance(env)).expect("classifies");
        r.check(
            c.dimensionality == dim,
            format!("{env}: dimensionality {} (table {dim})", c.dimensionality),
        );
        r.check(
            c.explicit_monitor_actions == explicit && c.invariant == Some(invariant) && c.positive_monitor_rewards == positive,
            format!(
                "{env}: explicit actions {}, invariant {:?}, positive monitor rewards {} (table {explicit}, {invariant}, {positive})",
                c.explicit_monitor_actions, c.invariant, c.positive_monitor_rewards
            ),
        );
        r.check(
            c.label == Label::SolvableByProp1,
            format!("{env}: label {} (all convergence conditions hold)", c.label),
        );
    }
    if DEFAULT_BATTERY != 5 {
        r.info(format!(
            "limited-use is built with battery {DEFAULT_BATTERY}, which gives 2*({DEFAULT_BATTERY}+1)*3 = {} monitor state-action pairs",
            2 * (DEFAULT_BATTERY + 1) * 3
        ));
    }

    let label = taxonomy::classify(&instance("identity-grid")).expect("classifies").label;
    r.check(label == Label::Trivial, format!("identity-grid: {label}"));
    let label = taxonomy::classify(&instance("hopeless-grid")).expect("classifies").label;
    r.check(label == Label::Hopeless, format!("hopeless-grid: {label}"));

    let mdp = instance("blind-cell-grid");
    let plan = taxonomy::minimax_plan(&mdp).expect("plans");
    let layout = mdp.layout().expect("grid").clone();
    let policy: Vec<Option<JointAction>> = (0..mdp.n_joint_states())
        .map(|js| plan.action(&mdp, mdp.state_at(js)))
        .collect();
    let path = greedy_rollout(&mdp, &policy);
    let blind = [0, 1];
    let avoids = path.iter().all(|(_, _, n)| layout.cell(n.env) != blind);
    let reaches = path.last().is_some_and(|(_, _, n)| n.env == layout.goal_index());
    r.check(
        avoids && reaches,
        format!(
            "blind-cell-grid minimax: reaches goal {reaches}, avoids the blind cell {avoids}, path length {}",
            path.len()
        ),
    );
    r
}

fn rows_normalised(mdp: &MonMdp) -> bool {
    let env = mdp.env();
    let mon = mdp.monitor();
    let close = |row: &[f64]| (row.iter().sum::<f64>() - 1.0).abs() <= 1e-12;
    (0..env.n_states()).all(|s| (0..env.n_actions()).all(|a| close(env.transition(s, a))))
        && (0..mon.n_mon_states()).all(|sm| {
            (0..env.n_states()).all(|se| {
                (0..mon.n_mon_actions()).all(|am| (0..env.n_actions()).all(|ae| close(mon.transition(sm, se, am, ae))))
            })
        })
        && close(env.initial_dist())
        && close(mon.initial_dist())
}

fn truthful_everywhere(mdp: &MonMdp, rng: &mut ChaCha8Rng) -> bool {
    let mon = mdp.monitor();
    let (lo, hi) = mdp.env().reward_bounds();
    let mut samples: Vec<f64> = mdp.env().reward_table().to_vec();
    samples.extend([lo, hi, 0.0, lo - 3.0, hi + 3.0]);
    samples.extend((0..50).map(|_| rng.random_range(lo - 1.0..hi + 1.0)));
    (0..mon.n_mon_states()).all(|sm| {
        (0..mon.n_mon_actions()).all(|am| {
            (0..mon.n_mon_states()).all(|sm2| {
                samples.iter().all(|&x| match mon.monitor_fn(x, sm, am, sm2) {
                    Proxy::Unobservable => true,
                    Proxy::Value(v) => v.to_bits() == x.to_bits(),
                })
            })
        })
    })
}

fn sample_policy_action(policy: &Policy, js: usize, rng: &mut ChaCha8Rng) -> usize {
    let row = &policy.rows[js];
    let mut u: f64 = rng.random();
    for &(a, p) in row {
        if u < p {
            return a;
        }
        u -= p;
    }
    row.last().expect("defined policy").0
}

fn monte_carlo(mdp: &MonMdp, policy: &Policy, episodes: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = mdp.gamma();
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..episodes {
        let mut s = sim::reset(mdp, &mut rng);
        let mut ret = 0.0;
        let mut disc = 1.0;
        for _ in 0..mdp.horizon() {
            if mdp.is_terminal(s) {
                break;
            }
            let a = mdp.action_at(sample_policy_action(policy, mdp.state_index(s), &mut rng));
            let step = sim::step(mdp, s, a, &mut rng).expect("live state");
            ret += disc * (step.hidden_env_reward + step.mon_reward);
            disc *= g;
            s = step.next_state;
        }
        sum += ret;
        sq += ret * ret;
    }
    let n = episodes as f64;
    let mean = sum / n;
    let var = (sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn criterion_7() -> Report {
    let mut r = Report::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    let catalog: Vec<MonMdp> = envs::catalog().iter().map(|e| (e.build)()).collect();
    let builders_ok = catalog.iter().all(rows_normalised);
    let randoms_ok = (0..200).all(|_| rows_normalised(&random_instance(&mut rng)));
    let bad = vec![0.5, 0.5 + 1e-9];
    let rejects = EnvModel::new(1, 1, vec![1.0 + 1e-9], vec![0.0], 0.0, vec![false], vec![1.0], (0.0, 0.0)).is_err()
        && EnvModel::new(2, 1, [bad, vec![0.0, 1.0]].concat(), vec![0.0; 2], 0.0, vec![false; 2], vec![1.0, 0.0], (0.0, 0.0))
            .is_err();
    r.check(
        builders_ok && randoms_ok && rejects,
        format!("normalisation: catalog {builders_ok}, 200 random models {randoms_ok}, off-by-1e-9 rows rejected {rejects}"),
    );

    let truthful: Vec<&MonMdp> = catalog.iter().filter(|m| m.monitor().is_truthful()).collect();
    let fuzz_ok = truthful.iter().all(|m| truthful_everywhere(m, &mut rng));
    let clipped = envs::by_name("chain-abc-clipped").expect("catalog");
    let clip_caught = !clipped.monitor().is_truthful() && !truthful_everywhere(&clipped, &mut rng);
    r.check(
        fuzz_ok && clip_caught,
        format!(
            "truthfulness fuzzing: {} truthful instances reveal exactly or hide {fuzz_ok}; clipping monitor detected {clip_caught}",
            truthful.len()
        ),
    );

    let mut mean_ok = true;
    for _ in 0..200 {
        let mut table = RewardModelTable::new(3, 2);
        let mut seen: HashMap<(usize, usize), Vec<i64>> = HashMap::new();
        for _ in 0..rng.random_range(1..60) {
            let (s, a) = (rng.random_range(0..3), rng.random_range(0..2));
            let quarters = rng.random_range(-40..=40i64);
            table.observe(s, a, quarters as f64 / 4.0);
            seen.entry((s, a)).or_default().push(quarters);
        }
        for s in 0..3 {
            for a in 0..2 {
                let v = seen.get(&(s, a)).cloned().unwrap_or_default();
                let exact = if v.is_empty() { 0.0 } else { v.iter().sum::<i64>() as f64 / 4.0 / v.len() as f64 };
                mean_ok &= table.count(s, a) == v.len() as u64 && (table.mean(s, a) - exact).abs() <= 1e-12;
            }
        }
    }
    r.check(mean_ok, "reward model equals the exact mean of its observations (200 random streams)".into());

    let mut equiv_ok = true;
    for name in ["simple", "button", "n-monitor", "limited-use"] {
        let base = instance(name);
        let mdp = base.with_monitor(base.monitor().revealing_all()).expect("valid");
        let kinds = [
            AgentKind::Oracle,
            AgentKind::ConstantAssign(-3.0),
            AgentKind::Ignore,
            AgentKind::RewardModel,
        ];
        let mut agents: Vec<Agent> = kinds.iter().map(|&k| Agent::new(AgentConfig::new(k), &mdp)).collect();
        let mut env_rng = ChaCha8Rng::seed_from_u64(9);
        let mut s = sim::reset(&mdp, &mut env_rng);
        for _ in 0..3000 {
            let a = mdp.action_at(env_rng.random_range(0..mdp.n_joint_actions()));
            let step = sim::step(&mdp, s, a, &mut env_rng).expect("live");
            for agent in &mut agents {
                let mut tie_rng = ChaCha8Rng::seed_from_u64(0);
                agent.observe(&step, &mut tie_rng);
            }
            s = if step.done { sim::reset(&mdp, &mut env_rng) } else { step.next_state };
        }
        let q0 = agents[0].q().expect("flat").values().to_vec();
        equiv_ok &= agents[1..].iter().all(|ag| ag.q().expect("flat").values() == q0.as_slice());
    }
    r.check(
        equiv_ok,
        "oracle, constant-assign, ignore and reward-model tables identical under full observability".into(),
    );

    let mut mc_ok = true;
    let mut worst: f64 = 0.0;
    for (i, name) in ["simple", "button", "limited-time", "limited-use", "chain-abc"].iter().enumerate() {
        let mdp = instance(name);
        let model = planning::joint_transition(&mdp, &planning::RewardMode::Joint).expect("model");
        let plan = planning::plan_optimal(&mdp).expect("plan");
        let uniform = Policy::uniform(mdp.n_joint_states(), mdp.n_joint_actions());
        for (j, policy) in [&plan.policy, &uniform].into_iter().enumerate() {
            let exact = model.evaluate(policy, mdp.horizon()).expect("defined");
            let (mean, se) = monte_carlo(&mdp, policy, 100_000, (i * 2 + j) as u64);
            let err = (mean - exact).abs();
            if se > 0.0 {
                worst = worst.max(err / se);
            }
            mc_ok &= err <= 3.0 * se + FLOAT_SLACK;
        }
    }
    r.check(
        mc_ok,
        format!("exact policy evaluation within 3 standard errors of 1e5 rollouts (worst |z| = {worst:.2} over stochastic returns)"),
    );

    let mut det_ok = true;
    for (name, kind) in [("button", AgentKind::RewardModel), ("limited-time", AgentKind::Sequential)] {
        let mut cfg = ExperimentConfig::standard(kind, false);
        cfg.n_seeds = 8;
        cfg.seed_base = 40;
        cfg.total_steps = 2000;
        cfg.convergence_window = 400;
        let exp = Experiment::new(instance(name), cfg).expect("valid");
        let a = run_suite(&exp, 1).expect("runs");
        let b = run_suite(&exp, 4).expect("runs");
        let c = run_suite(&exp, 4).expect("runs");
        det_ok &= a.runs.len() == b.runs.len()
            && a.runs.iter().zip(&b.runs).all(|(x, y)| x.curve == y.curve && x.policy == y.policy && x.agent == y.agent)
            && b.runs.iter().zip(&c.runs).all(|(x, y)| x.curve == y.curve && x.agent == y.agent)
            && a.percent_optimal == b.percent_optimal
            && a.mean_steps == b.mean_steps;
    }
    r.check(det_ok, "fixed seeds give identical runs on 1 and 4 threads".into());
    r
}

fn main() -> ExitCode {
    let mut suites = Suites::new();
    let criteria: Vec<(&str, Box<dyn FnOnce(&mut Suites) -> Report>)> = vec![
        ("policy-outcome matrix", Box::new(criterion_1)),
        ("convergence-step windows", Box::new(criterion_2)),
        ("noisy setting", Box::new(criterion_3)),
        ("failure-mode behaviours", Box::new(criterion_4)),
        ("ablations", Box::new(criterion_5)),
        ("taxonomy", Box::new(|_| criterion_6())),
        ("property suite", Box::new(|_| criterion_7())),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let report = run(&mut suites);
        println!("criterion {} ({name}): {}", i + 1, if report.ok { "PASS" } else { "FAIL" });
        for line in &report.lines {
            println!("    {line}");
        }
        if !report.ok {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}

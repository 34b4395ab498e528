//! Helpers shared by the integration tests.
#![allow(dead_code)]

use monmdp::model::{EnvModel, MonMdp, MonitorModel, ProxyRule};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() }).collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= sum);
    w
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> MonMdp {
    random_instance_with(rng, 0.9, 30)
}

/// Random truthful instance; the last state is terminal half of the time.
pub fn random_instance_with(rng: &mut ChaCha8Rng, gamma: f64, horizon: usize) -> MonMdp {
    let ns = rng.random_range(2..6);
    let na = rng.random_range(1..4);
    let nm = rng.random_range(1..4);
    let nam = rng.random_range(1..3);
    let terminal: Vec<bool> = (0..ns).map(|s| s == ns - 1 && rng.random_bool(0.5)).collect();
    let mut transition = Vec::new();
    let mut reward = Vec::new();
    for s in 0..ns {
        for _ in 0..na {
            if terminal[s] {
                let mut row = vec![0.0; ns];
                row[s] = 1.0;
                transition.extend(row);
                reward.push(0.0);
            } else {
                transition.extend(random_distribution(rng, ns));
                reward.push(rng.random_range(-1.0..1.0));
            }
        }
    }
    let mut initial = vec![0.0; ns];
    initial[0] = 1.0;
    let env = EnvModel::new(ns, na, transition, reward, 0.0, terminal, initial, (-1.0, 1.0)).expect("valid env");
    let mut mt = Vec::new();
    for _ in 0..nm * ns * nam * na {
        mt.extend(random_distribution(rng, nm));
    }
    let mr: Vec<f64> = (0..nm * nam * ns * na * nm).map(|_| rng.random_range(-0.5..0.5)).collect();
    let proxy: Vec<ProxyRule> = (0..nm * nam * nm)
        .map(|_| if rng.random_bool(0.5) { ProxyRule::Reveal } else { ProxyRule::Hide })
        .collect();
    let init = random_distribution(rng, nm);
    let mon = MonitorModel::new(nm, nam, ns, na, mt, mr, proxy, init, true).expect("valid monitor");
    MonMdp::new("random", env, mon, gamma, horizon).expect("valid instance")
}

#![allow(dead_code)]

use avgrl::mdp::{validate_mdp, Label, MdpDocument, TransitionRecord};
use avgrl::options::{check_assumption1, OptionSpec};
use avgrl::TabularMdp;
use nalgebra::DMatrix;
use rand::Rng;

/// Random model with 1-2 successors per pair; reward 0 when `zero_rewards`.
pub fn random_mdp<R: Rng>(rng: &mut R, n_states: usize, n_actions: usize, zero_rewards: bool) -> TabularMdp {
    let mut transitions = Vec::new();
    for s in 0..n_states {
        for a in 0..n_actions {
            let k = rng.random_range(1..=2usize);
            let weights: Vec<u32> = (0..k).map(|_| rng.random_range(1..=4)).collect();
            let total: u32 = weights.iter().sum();
            for w in weights {
                let reward = if zero_rewards {
                    0.0
                } else {
                    rng.random_range(-4..=4) as f64 * 0.5
                };
                transitions.push(TransitionRecord {
                    s: Label::Index(s),
                    a: Label::Index(a),
                    next: Label::Index(rng.random_range(0..n_states)),
                    reward,
                    prob: w as f64 / total as f64,
                });
            }
        }
    }
    validate_mdp(&MdpDocument {
        states: (0..n_states).map(|i| format!("s{i}")).collect(),
        actions: (0..n_actions).map(|i| format!("a{i}")).collect(),
        transitions,
    })
    .expect("generated rows are stochastic")
}

/// Rejection-samples a weakly communicating model with at most the given sizes.
pub fn random_weakly_communicating<R: Rng>(
    rng: &mut R,
    max_states: usize,
    max_actions: usize,
    zero_rewards: bool,
) -> TabularMdp {
    loop {
        let ns = rng.random_range(1..=max_states);
        let na = rng.random_range(1..=max_actions);
        let m = random_mdp(rng, ns, na, zero_rewards);
        if m.classify().tag.is_weakly_communicating() {
            return m;
        }
    }
}

/// Random stochastic matrix; sparse rows so that several recurrent classes
/// and transient states show up.
pub fn random_stochastic<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let k = rng.random_range(1..=n.min(3));
        let mut total = 0.0;
        for _ in 0..k {
            let j = rng.random_range(0..n);
            let w = rng.random_range(0.1..1.0);
            p[(i, j)] += w;
            total += w;
        }
        for j in 0..n {
            p[(i, j)] /= total;
        }
    }
    p
}

/// Option whose policy puts at least 0.05 on every action and which
/// satisfies the termination condition. Some states never terminate.
pub fn random_proper_option<R: Rng>(rng: &mut R, mdp: &TabularMdp, name: &str) -> OptionSpec {
    loop {
        let policy: Vec<Vec<f64>> = (0..mdp.n_states())
            .map(|_| {
                let w: Vec<f64> = (0..mdp.n_actions()).map(|_| rng.random_range(0.05..1.0)).collect();
                let t: f64 = w.iter().sum();
                w.into_iter().map(|x| x / t).collect()
            })
            .collect();
        let termination: Vec<f64> = (0..mdp.n_states())
            .map(|_| match rng.random_range(0..4) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.random_range(0.1..1.0),
            })
            .collect();
        let option = OptionSpec::new(name, policy, termination).expect("valid rows");
        if check_assumption1(mdp, &option) {
            return option;
        }
    }
}

pub fn identity(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

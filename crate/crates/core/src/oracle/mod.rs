//! Ground truth for the learners: optimal reward rates, Bellman residuals,
//! solutions of the optimality equation pinned by a reference function, and a
//! probe of how many such solutions exist.

pub mod lp;
mod probe;
mod solve;

pub use probe::{solution_set_probe, MidpointCheck, ProbeReport, DISTINCT_THRESHOLD, VERTEX_PATTERN_BUDGET};
pub use solve::{
    solve_intra_q, solve_q, solve_q_from, zero_reward_uniqueness_check, OptimalityReport, SolverConfig,
    ZeroRewardCheck,
};

use crate::chain::reward_rate;
use crate::error::{Error, Result};
use crate::learners::QTable;
use crate::mdp::{deterministic_policies, StationaryPolicy, TabularMdp};
use crate::options::{InducedSmdp, OptionSpec};
use lp::{Cmp, LinearProgram};

/// Largest number of deterministic policies enumerated before falling back to
/// the linear program.
pub const ENUMERATION_BUDGET: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct BellmanResidual {
    pub sup_norm: f64,
    pub per_pair: QTable,
}

impl BellmanResidual {
    fn from_values(n_states: usize, n_choices: usize, values: Vec<f64>) -> Self {
        let sup_norm = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        BellmanResidual {
            sup_norm,
            per_pair: QTable::from_values(n_states, n_choices, values).expect("sized by construction"),
        }
    }
}

/// `r(s,o) - r_bar l(s,o) + sum_s' p(s'|s,o) max_o' q(s',o') - q(s,o)` for every pair.
pub fn bellman_residual(smdp: &InducedSmdp, q: &QTable, r_bar: f64) -> Result<BellmanResidual> {
    check_shape(q, smdp.n_states(), smdp.n_options())?;
    let maxima = q.state_maxima();
    let mut values = Vec::with_capacity(smdp.n_pairs());
    for s in 0..smdp.n_states() {
        for o in 0..smdp.n_options() {
            let next: f64 = smdp.kernel_row(s, o).iter().zip(&maxima).map(|(p, v)| p * v).sum();
            values.push(smdp.reward(s, o) - r_bar * smdp.length(s, o) + next - q.get(s, o));
        }
    }
    Ok(BellmanResidual::from_values(smdp.n_states(), smdp.n_options(), values))
}

/// Residual of the intra-option equation
/// `q(s,o) = sum_a pi(a|s,o) sum_{s',r} p(s',r|s,a) (r - r_bar + u_q(s',o))`
/// with `u_q(s',o) = (1 - beta(s',o)) q(s',o) + beta(s',o) max_o' q(s',o')`.
pub fn intra_option_residual(
    mdp: &TabularMdp,
    options: &[OptionSpec],
    q: &QTable,
    r_bar: f64,
) -> Result<BellmanResidual> {
    check_shape(q, mdp.n_states(), options.len())?;
    let maxima = q.state_maxima();
    let mut values = Vec::with_capacity(q.len());
    for s in 0..mdp.n_states() {
        for (o, option) in options.iter().enumerate() {
            let mut backup = 0.0;
            for a in 0..mdp.n_actions() {
                let pi = option.action_prob(s, a);
                if pi == 0.0 {
                    continue;
                }
                let inner: f64 = mdp
                    .outcomes(s, a)
                    .iter()
                    .map(|t| {
                        let beta = option.termination(t.next);
                        let u = (1.0 - beta) * q.get(t.next, o) + beta * maxima[t.next];
                        t.prob * (t.reward - r_bar + u)
                    })
                    .sum();
                backup += pi * inner;
            }
            values.push(backup - q.get(s, o));
        }
    }
    Ok(BellmanResidual::from_values(mdp.n_states(), options.len(), values))
}

fn check_shape(q: &QTable, n_states: usize, n_choices: usize) -> Result<()> {
    if q.n_states() != n_states {
        return Err(Error::DimensionMismatch {
            expected: n_states,
            actual: q.n_states(),
        });
    }
    if q.n_choices() != n_choices {
        return Err(Error::DimensionMismatch {
            expected: n_choices,
            actual: q.n_choices(),
        });
    }
    Ok(())
}

fn require_weakly_communicating(smdp: &InducedSmdp) -> Result<()> {
    if smdp.classify().tag.is_weakly_communicating() {
        Ok(())
    } else {
        Err(Error::NotWeaklyCommunicating)
    }
}

/// Optimal reward rate of a weakly communicating (S)MDP. Enumerates the
/// deterministic policies when there are few enough, otherwise solves the
/// occupation-measure linear program.
pub fn optimal_reward_rate(smdp: &InducedSmdp) -> Result<f64> {
    require_weakly_communicating(smdp)?;
    let count = (smdp.n_options() as f64).powi(smdp.n_states() as i32);
    if count <= ENUMERATION_BUDGET {
        optimal_reward_rate_enumerated(smdp)
    } else {
        optimal_reward_rate_lp(smdp)
    }
}

/// Best reward rate over deterministic policies, maximized over start states.
pub fn optimal_reward_rate_enumerated(smdp: &InducedSmdp) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for choices in deterministic_policies(smdp.n_states(), smdp.n_options()) {
        let policy = StationaryPolicy::deterministic(&choices, smdp.n_options());
        let rates = reward_rate(smdp, &policy)?;
        best = rates.into_iter().fold(best, f64::max);
    }
    Ok(best)
}

/// `max sum r x` over occupation measures: flow balance, `sum l x = 1`, `x >= 0`.
pub fn optimal_reward_rate_lp(smdp: &InducedSmdp) -> Result<f64> {
    let n = smdp.n_pairs();
    let mut program = LinearProgram::new(true, smdp.rewards().to_vec());
    for j in 0..smdp.n_states() {
        let mut row = vec![0.0; n];
        for s in 0..smdp.n_states() {
            for o in 0..smdp.n_options() {
                let i = smdp.pair(s, o);
                row[i] -= smdp.kernel_row(s, o)[j];
                if s == j {
                    row[i] += 1.0;
                }
            }
        }
        program.add(row, Cmp::Eq, 0.0);
    }
    program.add(smdp.lengths().to_vec(), Cmp::Eq, 1.0);
    Ok(program.solve()?.objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::builtin;

    fn smdp(name: &str) -> InducedSmdp {
        InducedSmdp::from_mdp(&builtin(name).unwrap())
    }

    fn q(values: &[f64]) -> QTable {
        QTable::from_values(3, 2, values.to_vec()).unwrap()
    }

    #[test]
    fn triangle_solutions_and_midpoint() {
        let m = smdp("Triangle");
        let q1 = q(&[0.5, -1.5, 0.5, 0.5, -0.5, 0.5]);
        let q2 = q(&[-2.0 / 3.0, -2.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, -2.0 / 3.0]);
        assert!(bellman_residual(&m, &q1, 0.0).unwrap().sup_norm < 1e-12);
        assert!(bellman_residual(&m, &q2, 0.0).unwrap().sup_norm < 1e-12);
        let mid = bellman_residual(&m, &q1.midpoint(&q2), 0.0).unwrap();
        assert!((mid.sup_norm - 0.5).abs() < 1e-12);
        assert!((mid.per_pair.get(1, 1) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_state_switch_solutions() {
        let m = smdp("TwoStateSwitch");
        for values in [[0.0, -2.0, -1.0, -1.0], [0.0, -1.0, 0.0, -1.0]] {
            let t = QTable::from_values(2, 2, values.to_vec()).unwrap();
            assert_eq!(bellman_residual(&m, &t, 0.0).unwrap().sup_norm, 0.0);
        }
    }

    #[test]
    fn residual_is_shift_invariant() {
        let m = smdp("Triangle");
        let t = q(&[0.3, -1.2, 2.0, 0.1, -0.7, 0.9]);
        let a = bellman_residual(&m, &t, 0.25).unwrap();
        let b = bellman_residual(&m, &t.shifted(17.0), 0.25).unwrap();
        assert!(a.per_pair.sup_distance(&b.per_pair) < 1e-12);
    }

    #[test]
    fn rejects_wrong_shape() {
        let m = smdp("Triangle");
        assert!(bellman_residual(&m, &QTable::zeros(3, 3), 0.0).is_err());
    }

    #[test]
    fn optimal_rates_of_builtins() {
        assert_eq!(optimal_reward_rate(&smdp("TwoStateSwitch")).unwrap(), 0.0);
        assert_eq!(optimal_reward_rate(&smdp("Triangle")).unwrap(), 0.0);
        assert!(optimal_reward_rate(&smdp("WeaklyComm3")).unwrap().abs() < 1e-12);
    }

    #[test]
    fn enumeration_and_lp_agree() {
        for name in ["TwoStateSwitch", "Triangle", "WeaklyComm3"] {
            let m = smdp(name);
            let shifted = m.with_rewards(m.rewards().iter().enumerate().map(|(i, r)| r + 0.1 * i as f64).collect()).unwrap();
            for model in [&m, &shifted] {
                let a = optimal_reward_rate_enumerated(model).unwrap();
                let b = optimal_reward_rate_lp(model).unwrap();
                assert!((a - b).abs() < 1e-9, "{name}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn intra_residual_matches_bellman_for_primitive_options() {
        let mdp = builtin("Triangle").unwrap();
        let options = OptionSpec::primitive_set(&mdp);
        let m = InducedSmdp::from_mdp(&mdp);
        let t = q(&[0.3, -1.2, 2.0, 0.1, -0.7, 0.9]);
        let a = intra_option_residual(&mdp, &options, &t, 0.2).unwrap();
        let b = bellman_residual(&m, &t, 0.2).unwrap();
        assert!(a.per_pair.sup_distance(&b.per_pair) < 1e-12);
    }

    #[test]
    fn self_loop_rate_and_reward_shift() {
        let mdp = TabularMdp::from_json(
            r#"{"states":["s"],"actions":["a"],"transitions":[{"s":"s","a":"a","next":"s","reward":5,"prob":1}]}"#,
        )
        .unwrap();
        assert_eq!(optimal_reward_rate(&InducedSmdp::from_mdp(&mdp)).unwrap(), 5.0);
        for name in ["TwoStateSwitch", "Triangle", "WeaklyComm3"] {
            let base = builtin(name).unwrap();
            let r0 = optimal_reward_rate(&InducedSmdp::from_mdp(&base)).unwrap();
            let r1 = optimal_reward_rate(&InducedSmdp::from_mdp(&base.map_rewards(|r| r + 1.75))).unwrap();
            assert!((r1 - r0 - 1.75).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_not_weakly_communicating() {
        let mdp = TabularMdp::from_json(
            r#"{"states":["a","b"],"actions":["x"],"transitions":[
                {"s":"a","a":"x","next":"a","reward":0,"prob":1},
                {"s":"b","a":"x","next":"b","reward":1,"prob":1}]}"#,
        )
        .unwrap();
        assert!(matches!(
            optimal_reward_rate(&InducedSmdp::from_mdp(&mdp)),
            Err(Error::NotWeaklyCommunicating)
        ));
    }
}

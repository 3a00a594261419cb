use rand::Rng;
use serde::Serialize;

use super::lp::{Cmp, LinearProgram};
use super::{bellman_residual, optimal_reward_rate, solve_q_from, SolverConfig};
use crate::error::{Error, Result};
use crate::learners::{QTable, ReferenceFunction};
use crate::mdp::deterministic_policies;
use crate::options::InducedSmdp;

/// Largest number of greedy patterns for which the vertex search runs.
pub const VERTEX_PATTERN_BUDGET: f64 = 4096.0;
/// Two members closer than this in sup-norm count as the same solution.
pub const DISTINCT_THRESHOLD: f64 = 1e-4;
/// Accepted residual for a vertex recovered from the linear program.
const VERTEX_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MidpointCheck {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    pub residual_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub r_star: f64,
    pub members: Vec<QTable>,
    /// Residual of each member at `r_star`.
    pub member_residuals: Vec<f64>,
    pub member_f_values: Vec<f64>,
    pub midpoints: Vec<MidpointCheck>,
}

impl ProbeReport {
    /// Largest residual among pairwise midpoints; zero when fewer than two
    /// members were found.
    pub fn worst_midpoint(&self) -> f64 {
        self.midpoints.iter().fold(0.0, |m, c| m.max(c.residual_sup))
    }
}

/// Collects distinct members of the pinned solution set
/// `{q : q solves the optimality equation, f(q) = r*}`.
///
/// Members come from `n_samples` relative value iterations started uniformly
/// in `[-10, 10]`, and, when the model is small enough, from the extreme
/// points of the set: for each greedy pattern `sigma` the set is a polytope in
/// the state values `v`, and each coordinate `q(s, o)` is minimized and
/// maximized over it. Every pair of members is then checked at its midpoint.
pub fn solution_set_probe<R: Rng + ?Sized>(
    smdp: &InducedSmdp,
    f: &ReferenceFunction,
    n_samples: usize,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<ProbeReport> {
    let r_star = optimal_reward_rate(smdp)?;
    f.check_len(smdp.n_pairs())?;
    let mut members: Vec<QTable> = Vec::new();
    let mut push = |q: QTable| {
        if members.iter().all(|m| m.sup_distance(&q) > DISTINCT_THRESHOLD) {
            members.push(q);
        }
    };

    for _ in 0..n_samples {
        let values = (0..smdp.n_pairs()).map(|_| rng.random_range(-10.0..=10.0)).collect();
        let q0 = QTable::from_values(smdp.n_states(), smdp.n_options(), values)?;
        push(solve_q_from(smdp, f, &q0, cfg)?.witness_q);
    }

    let patterns = (smdp.n_options() as f64).powi(smdp.n_states() as i32);
    if patterns <= VERTEX_PATTERN_BUDGET {
        for q in vertex_members(smdp, f, r_star)? {
            push(q);
        }
    }

    let mut member_residuals = Vec::with_capacity(members.len());
    let mut member_f_values = Vec::with_capacity(members.len());
    for m in &members {
        member_residuals.push(bellman_residual(smdp, m, r_star)?.sup_norm);
        member_f_values.push(f.eval(m));
    }
    let mut midpoints = Vec::new();
    for a in 0..members.len() {
        for b in a + 1..members.len() {
            let mid = members[a].midpoint(&members[b]);
            midpoints.push(MidpointCheck {
                a,
                b,
                distance: members[a].sup_distance(&members[b]),
                residual_sup: bellman_residual(smdp, &mid, r_star)?.sup_norm,
            });
        }
    }
    Ok(ProbeReport {
        r_star,
        members,
        member_residuals,
        member_f_values,
        midpoints,
    })
}

/// Offset `c(s, o) = r(s, o) - r* l(s, o)`, so that on the solution set
/// `q(s, o) = c(s, o) + sum_s' p(s'|s, o) v(s')` with `v(s) = max_o q(s, o)`.
fn vertex_members(smdp: &InducedSmdp, f: &ReferenceFunction, r_star: f64) -> Result<Vec<QTable>> {
    let n_s = smdp.n_states();
    let n_o = smdp.n_options();
    let offset: Vec<f64> = (0..smdp.n_pairs())
        .map(|i| smdp.rewards()[i] - r_star * smdp.lengths()[i])
        .collect();
    let weights = f.weights(smdp.n_pairs());
    // f(q(v)) = r*  <=>  sum_s' (sum_i w_i p_i(s')) v(s') = r* - sum_i w_i c_i
    let mut pin_row = vec![0.0; n_s];
    let mut pin_rhs = r_star;
    for s in 0..n_s {
        for o in 0..n_o {
            let i = smdp.pair(s, o);
            pin_rhs -= weights[i] * offset[i];
            for (acc, p) in pin_row.iter_mut().zip(smdp.kernel_row(s, o)) {
                *acc += weights[i] * p;
            }
        }
    }
    let q_of = |v: &[f64]| -> QTable {
        let values = (0..n_s)
            .flat_map(|s| (0..n_o).map(move |o| (s, o)))
            .map(|(s, o)| {
                let next: f64 = smdp.kernel_row(s, o).iter().zip(v).map(|(p, x)| p * x).sum();
                offset[smdp.pair(s, o)] + next
            })
            .collect();
        QTable::from_values(n_s, n_o, values).expect("sized by construction")
    };

    let mut found = Vec::new();
    for sigma in deterministic_policies(n_s, n_o) {
        let mut program = LinearProgram::new(true, vec![0.0; n_s]);
        for s in 0..n_s {
            program.set_free(s);
        }
        for s in 0..n_s {
            for o in 0..n_o {
                // q(s, o) - v(s) <= 0, with equality on the greedy choice
                let mut row = smdp.kernel_row(s, o).to_vec();
                row[s] -= 1.0;
                let cmp = if sigma[s] == o { Cmp::Eq } else { Cmp::Le };
                program.add(row, cmp, -offset[smdp.pair(s, o)]);
            }
        }
        program.add(pin_row.clone(), Cmp::Eq, pin_rhs);
        for s in 0..n_s {
            for o in 0..n_o {
                for sign in [1.0, -1.0] {
                    program.set_objective(smdp.kernel_row(s, o).iter().map(|p| sign * p).collect());
                    let solution = match program.solve() {
                        Ok(sol) => sol,
                        Err(Error::LinearProgram(_)) => continue,
                        Err(e) => return Err(e),
                    };
                    let q = q_of(&solution.x);
                    let ok = bellman_residual(smdp, &q, r_star)?.sup_norm <= VERTEX_TOLERANCE
                        && (f.eval(&q) - r_star).abs() <= VERTEX_TOLERANCE;
                    if ok {
                        found.push(q);
                    }
                }
            }
        }
    }
    Ok(found)
}

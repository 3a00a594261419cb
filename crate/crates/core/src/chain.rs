//! Exact analysis of the Markov chain a fixed policy induces.
//!
//! The limiting matrix is assembled from recurrent classes and absorption
//! probabilities rather than by iterating powers: for periodic chains the
//! powers oscillate and only their Cesaro average converges.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::learners::QTable;
use crate::linalg;
use crate::mdp::StationaryPolicy;
use crate::options::InducedSmdp;

/// Transition matrix, expected one-stage reward and expected one-stage length
/// of the chain under a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyChain {
    pub transition: DMatrix<f64>,
    pub reward: DVector<f64>,
    pub length: DVector<f64>,
}

pub fn policy_matrix(smdp: &InducedSmdp, policy: &StationaryPolicy) -> Result<PolicyChain> {
    let n = smdp.n_states();
    if policy.n_states() != n || policy.n_choices() != smdp.n_options() {
        return Err(Error::DimensionMismatch {
            expected: n * smdp.n_options(),
            actual: policy.n_states() * policy.n_choices(),
        });
    }
    let mut transition = DMatrix::zeros(n, n);
    let mut reward = DVector::zeros(n);
    let mut length = DVector::zeros(n);
    for s in 0..n {
        for o in 0..smdp.n_options() {
            let w = policy.prob(s, o);
            if w == 0.0 {
                continue;
            }
            for (t, p) in smdp.kernel_row(s, o).iter().enumerate() {
                transition[(s, t)] += w * p;
            }
            reward[s] += w * smdp.reward(s, o);
            length[s] += w * smdp.length(s, o);
        }
    }
    Ok(PolicyChain {
        transition,
        reward,
        length,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDecomposition {
    pub transition: DMatrix<f64>,
    /// Recurrent classes, each sorted, listed by smallest member.
    pub classes: Vec<Vec<usize>>,
    pub transient: Vec<usize>,
    /// Stationary distribution of each class over its own members.
    pub stationary: Vec<Vec<f64>>,
    pub limiting: DMatrix<f64>,
    pub fundamental: DMatrix<f64>,
}

impl ChainDecomposition {
    /// Stationary distribution of class `k` spread over all states.
    pub fn stationary_row(&self, k: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.transition.nrows()];
        for (j, &s) in self.classes[k].iter().enumerate() {
            row[s] = self.stationary[k][j];
        }
        row
    }
}

pub fn decompose(p: &DMatrix<f64>) -> Result<ChainDecomposition> {
    let n = p.nrows();
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if p[(i, j)] > 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut comp = vec![0; n];
    let sccs = tarjan_scc(&g);
    for (id, scc) in sccs.iter().enumerate() {
        for node in scc {
            comp[node.index()] = id;
        }
    }
    let mut classes: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(id, scc)| {
            scc.iter().all(|node| {
                let i = node.index();
                (0..n).all(|j| p[(i, j)] <= 0.0 || comp[j] == *id)
            })
        })
        .map(|(_, scc)| {
            let mut members: Vec<usize> = scc.iter().map(|n| n.index()).collect();
            members.sort_unstable();
            members
        })
        .collect();
    classes.sort();
    let mut recurrent = vec![false; n];
    for s in classes.iter().flatten() {
        recurrent[*s] = true;
    }
    let transient: Vec<usize> = (0..n).filter(|&s| !recurrent[s]).collect();

    // Stationary distribution per class: pi (I - P_C) = 0 with one balance
    // equation replaced by sum(pi) = 1.
    let mut stationary = Vec::with_capacity(classes.len());
    for class in &classes {
        let m = class.len();
        let mut a = DMatrix::zeros(m, m);
        for (r, &i) in class.iter().enumerate() {
            for (c, &j) in class.iter().enumerate() {
                // row r of the transposed system: sum_i pi_i (delta_ij - P_ij)
                a[(c, r)] = if i == j { 1.0 } else { 0.0 } - p[(i, j)];
            }
        }
        let mut b = DVector::zeros(m);
        for c in 0..m {
            a[(m - 1, c)] = 1.0;
        }
        b[m - 1] = 1.0;
        let pi = linalg::solve_vec(&a, &b)?;
        stationary.push(pi.iter().copied().collect::<Vec<f64>>());
    }

    let mut limiting = DMatrix::zeros(n, n);
    for (k, class) in classes.iter().enumerate() {
        for &i in class {
            for (j, &s) in class.iter().enumerate() {
                limiting[(i, s)] = stationary[k][j];
            }
        }
    }
    if !transient.is_empty() {
        // Absorption probabilities into each class: (I - P_TT) B = P_T,class 1.
        let t = transient.len();
        let mut a = DMatrix::identity(t, t);
        for (r, &i) in transient.iter().enumerate() {
            for (c, &j) in transient.iter().enumerate() {
                a[(r, c)] -= p[(i, j)];
            }
        }
        let mut b = DMatrix::zeros(t, classes.len());
        for (r, &i) in transient.iter().enumerate() {
            for (k, class) in classes.iter().enumerate() {
                b[(r, k)] = class.iter().map(|&j| p[(i, j)]).sum();
            }
        }
        let absorb = linalg::solve(&a, &b)?;
        for (r, &i) in transient.iter().enumerate() {
            for (k, class) in classes.iter().enumerate() {
                for (j, &s) in class.iter().enumerate() {
                    limiting[(i, s)] += absorb[(r, k)] * stationary[k][j];
                }
            }
        }
    }
    let fundamental = linalg::inverse(&(DMatrix::identity(n, n) - p + &limiting))?;
    Ok(ChainDecomposition {
        transition: p.clone(),
        classes,
        transient,
        stationary,
        limiting,
        fundamental,
    })
}

/// Per-state reward rate `(P^inf r)(s) / (P^inf l)(s)`.
pub fn reward_rate(smdp: &InducedSmdp, policy: &StationaryPolicy) -> Result<Vec<f64>> {
    let chain = policy_matrix(smdp, policy)?;
    let d = decompose(&chain.transition)?;
    let num = &d.limiting * &chain.reward;
    let den = &d.limiting * &chain.length;
    Ok(num.iter().zip(den.iter()).map(|(a, b)| a / b).collect())
}

/// Per-pair `(TQ - Q) / l`, where `T` is the optimality operator with a zero
/// rate: `TQ(s, o) = r(s, o) + sum_s' p(s'|s, o) max_o' Q(s', o')`.
pub fn normalized_residual(smdp: &InducedSmdp, q: &QTable) -> Vec<f64> {
    let maxima = q.state_maxima();
    let mut out = Vec::with_capacity(smdp.n_pairs());
    for s in 0..smdp.n_states() {
        for o in 0..smdp.n_options() {
            let next: f64 = smdp
                .kernel_row(s, o)
                .iter()
                .zip(&maxima)
                .map(|(p, v)| p * v)
                .sum();
            out.push((smdp.reward(s, o) + next - q.get(s, o)) / smdp.length(s, o));
        }
    }
    out
}

/// `(min, max)` of [`normalized_residual`]. The greedy policy's reward rate
/// from every state, and the optimal rate, lie between them.
pub fn span_bound_check(smdp: &InducedSmdp, q: &QTable) -> (f64, f64) {
    normalized_residual(smdp, q)
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

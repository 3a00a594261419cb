use rand::Rng;
use serde::Serialize;

use super::{bellman_residual, intra_option_residual, require_weakly_communicating};
use crate::chain::normalized_residual;
use crate::error::{Error, Result};
use crate::learners::{QTable, ReferenceFunction};
use crate::mdp::TabularMdp;
use crate::options::{InducedSmdp, OptionSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Target sup-norm residual of the returned witness.
    pub tol: f64,
    pub max_iterations: usize,
    /// Step of the damped relative iteration, in `(0, 1]`. Must not exceed
    /// the smallest expected option length.
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-9,
            max_iterations: 1_000_000,
            damping: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityReport {
    pub r_star: f64,
    pub witness_q: QTable,
    pub residual_sup: f64,
    pub f_value: f64,
    pub iterations: usize,
}

/// Solves the optimality equation from a zero start and pins the solution by
/// `f(q) = r*`.
pub fn solve_q(smdp: &InducedSmdp, f: &ReferenceFunction, cfg: &SolverConfig) -> Result<OptimalityReport> {
    solve_q_from(smdp, f, &QTable::zeros(smdp.n_states(), smdp.n_options()), cfg)
}

/// Damped relative value iteration from `q0`:
/// `q <- q + tau * (g(q) - g(q)(0))` with `g = (Tq - q) / l`. Stops once the
/// span of `g` is below `tol / 100`; `r*` is then the centre of that span.
pub fn solve_q_from(
    smdp: &InducedSmdp,
    f: &ReferenceFunction,
    q0: &QTable,
    cfg: &SolverConfig,
) -> Result<OptimalityReport> {
    require_weakly_communicating(smdp)?;
    f.check_len(smdp.n_pairs())?;
    check_config(cfg)?;
    let min_length = smdp.lengths().iter().copied().fold(f64::INFINITY, f64::min);
    let tau = cfg.damping.min(min_length);
    let mut q = q0.clone();
    let (r_star, iterations) = relative_iteration(&mut q, cfg, tau, |q| normalized_residual(smdp, q))?;
    let witness_q = q.shifted((r_star - f.eval(&q)) / f.u());
    let residual_sup = bellman_residual(smdp, &witness_q, r_star)?.sup_norm;
    Ok(OptimalityReport {
        r_star,
        f_value: f.eval(&witness_q),
        witness_q,
        residual_sup,
        iterations,
    })
}

/// Same iteration for the intra-option equation of `options` on `mdp`,
/// where the rate is per primitive step.
pub fn solve_intra_q(
    mdp: &TabularMdp,
    options: &[OptionSpec],
    f: &ReferenceFunction,
    q0: &QTable,
    cfg: &SolverConfig,
) -> Result<OptimalityReport> {
    let smdp = crate::options::induce_smdp(mdp, options)?;
    require_weakly_communicating(&smdp)?;
    f.check_len(smdp.n_pairs())?;
    check_config(cfg)?;
    let mut q = q0.clone();
    let (r_star, iterations) = relative_iteration(&mut q, cfg, cfg.damping, |q| {
        intra_option_residual(mdp, options, q, 0.0)
            .map(|r| r.per_pair.values().to_vec())
            .unwrap_or_default()
    })?;
    let witness_q = q.shifted((r_star - f.eval(&q)) / f.u());
    let residual_sup = intra_option_residual(mdp, options, &witness_q, r_star)?.sup_norm;
    Ok(OptimalityReport {
        r_star,
        f_value: f.eval(&witness_q),
        witness_q,
        residual_sup,
        iterations,
    })
}

fn check_config(cfg: &SolverConfig) -> Result<()> {
    if !(cfg.tol > 0.0) || !(cfg.damping > 0.0 && cfg.damping <= 1.0) {
        return Err(Error::ConfigInvalid("solver needs tol > 0 and damping in (0, 1]".into()));
    }
    Ok(())
}

fn relative_iteration(
    q: &mut QTable,
    cfg: &SolverConfig,
    tau: f64,
    residual: impl Fn(&QTable) -> Vec<f64>,
) -> Result<(f64, usize)> {
    let target = cfg.tol * 1e-2;
    let mut span = f64::INFINITY;
    for it in 0..=cfg.max_iterations {
        let g = residual(q);
        if g.len() != q.len() {
            return Err(Error::DimensionMismatch {
                expected: q.len(),
                actual: g.len(),
            });
        }
        let (lo, hi) = g
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        span = hi - lo;
        if !span.is_finite() {
            return Err(Error::NonFiniteUpdate { pair: 0 });
        }
        if span <= target {
            return Ok((0.5 * (lo + hi), it));
        }
        let anchor = g[0];
        for (v, gi) in q.values_mut().iter_mut().zip(&g) {
            *v += tau * (gi - anchor);
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iterations,
        span,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroRewardCheck {
    pub trials: usize,
    /// Largest sup-norm over the witnesses found from random starts.
    pub max_witness_norm: f64,
    pub unique: bool,
}

/// With every reward zero, the pinned solution set should be `{0}`. Solves
/// from `trials` random starts in `[-10, 10]` and checks each witness is
/// within `1e-6` of zero.
pub fn zero_reward_uniqueness_check<R: Rng + ?Sized>(
    smdp: &InducedSmdp,
    f: &ReferenceFunction,
    trials: usize,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<ZeroRewardCheck> {
    if smdp.rewards().iter().any(|&r| r != 0.0) {
        return Err(Error::Precondition("all expected rewards must be zero".into()));
    }
    let mut max_witness_norm: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let values = (0..smdp.n_pairs()).map(|_| rng.random_range(-10.0..=10.0)).collect();
        let q0 = QTable::from_values(smdp.n_states(), smdp.n_options(), values)?;
        let report = solve_q_from(smdp, f, &q0, cfg)?;
        max_witness_norm = max_witness_norm.max(report.witness_q.sup_norm());
    }
    Ok(ZeroRewardCheck {
        trials: trials.max(1),
        max_witness_norm,
        unique: max_witness_norm <= 1e-6,
    })
}

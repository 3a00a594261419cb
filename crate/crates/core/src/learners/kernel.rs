//! The General RVI Q iteration
//!
//! `Q(i) += alpha_{nu(i)} * (R(i) - F + G(i) - Q(i) + eps(i))` for every `i`
//! in the update set, where `R`, `F`, `G` are sampled targets. The concrete
//! learners are instances of it; [`KernelReduction`] replays each of them
//! through [`GeneralRviQ::step_scaled`]. The option learners scale the step
//! per update (by `1 / L` or by the importance ratio), which keeps every
//! reduction bit-identical to its learner.

use super::{ReferenceFunction, StepSize};
use crate::error::{Error, Result};
use crate::options::OptionSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralRviQ {
    pub q: Vec<f64>,
    pub visits: Vec<u64>,
    pub alpha: StepSize,
}

impl GeneralRviQ {
    pub fn new(q0: Vec<f64>, alpha: StepSize) -> Self {
        let n = q0.len();
        GeneralRviQ {
            q: q0,
            visits: vec![0; n],
            alpha,
        }
    }

    /// Updates component `i` and returns the increment applied.
    pub fn step(&mut self, i: usize, r: f64, f: f64, g: f64, eps: f64) -> Result<f64> {
        self.step_scaled(i, 1.0, r, f, g, eps)
    }

    /// Same update with step size `alpha_{nu(i)} * scale`.
    pub fn step_scaled(&mut self, i: usize, scale: f64, r: f64, f: f64, g: f64, eps: f64) -> Result<f64> {
        let mut target = r - f + g - self.q[i];
        if eps != 0.0 {
            target += eps;
        }
        let inc = (self.alpha.value(self.visits[i]) * scale) * target;
        let next = self.q[i] + inc;
        if !next.is_finite() {
            return Err(Error::NonFiniteUpdate { pair: i });
        }
        self.q[i] = next;
        self.visits[i] += 1;
        Ok(inc)
    }

    fn row_max(&self, state: usize, n_choices: usize) -> f64 {
        self.q[state * n_choices..(state + 1) * n_choices]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A concrete learner expressed through the kernel. The reward-rate estimate
/// `F` of the Differential family is tracked outside the kernel and moved by
/// `eta` times each increment.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReduction {
    pub kernel: GeneralRviQ,
    pub n_choices: usize,
    pub r_bar: f64,
    pub eta: f64,
    pub lengths: Vec<f64>,
    pub beta: StepSize,
}

impl KernelReduction {
    pub fn new(n_states: usize, n_choices: usize, q0: f64, r_bar0: f64, eta: f64, alpha: StepSize) -> Self {
        KernelReduction {
            kernel: GeneralRviQ::new(vec![q0; n_states * n_choices], alpha),
            n_choices,
            r_bar: r_bar0,
            eta,
            lengths: vec![1.0; n_states * n_choices],
            beta: alpha,
        }
    }

    /// Differential Q-learning: `R = r`, `F = r_bar`, `G = max_a' Q(s', a')`.
    pub fn differential(&mut self, s: usize, a: usize, r: f64, s_next: usize) -> Result<()> {
        let g = self.kernel.row_max(s_next, self.n_choices);
        let inc = self.kernel.step(s * self.n_choices + a, r, self.r_bar, g, 0.0)?;
        self.r_bar += self.eta * inc;
        Ok(())
    }

    /// RVI Q-learning: `F = f(Q)`.
    pub fn rvi(&mut self, f: &ReferenceFunction, s: usize, a: usize, r: f64, s_next: usize) -> Result<()> {
        let g = self.kernel.row_max(s_next, self.n_choices);
        let fv = f.eval_slice(&self.kernel.q);
        self.kernel.step(s * self.n_choices + a, r, fv, g, 0.0)?;
        Ok(())
    }

    /// Inter-option learner: `R = R_hat`, `F = L r_bar`, `G = max Q(s', .)`,
    /// step scaled by `1 / L`.
    pub fn inter_option(&mut self, s: usize, o: usize, reward: f64, length: f64, s_next: usize) -> Result<()> {
        let i = s * self.n_choices + o;
        let l = self.lengths[i];
        if !(l > 0.0) {
            return Err(Error::NonPositiveLength { pair: i, value: l });
        }
        let g = self.kernel.row_max(s_next, self.n_choices);
        let beta = self.beta.value(self.kernel.visits[i]);
        let inc = self.kernel.step_scaled(i, 1.0 / l, reward, l * self.r_bar, g, 0.0)?;
        self.r_bar += self.eta * inc;
        self.lengths[i] = l + beta * (length - l);
        Ok(())
    }

    /// Intra-option learner: the update set is every option with positive
    /// importance ratio `rho`; `R = r`, `F = r_bar`, `G = u(s', o)`, step
    /// scaled by `rho`.
    pub fn intra_option(
        &mut self,
        options: &[OptionSpec],
        s: usize,
        executing: usize,
        a: usize,
        r: f64,
        s_next: usize,
    ) -> Result<()> {
        let behavior = options[executing].action_prob(s, a);
        if !(behavior > 0.0) {
            return Err(Error::ZeroBehaviorProb);
        }
        let before = self.kernel.q.clone();
        let best_next = self.kernel.row_max(s_next, self.n_choices);
        let mut total = 0.0;
        for (o, option) in options.iter().enumerate() {
            let pi = option.action_prob(s, a);
            if pi <= 0.0 {
                continue;
            }
            let rho = pi / behavior;
            let beta = option.termination(s_next);
            let u = (1.0 - beta) * before[s_next * self.n_choices + o] + beta * best_next;
            total += self.kernel.step_scaled(s * self.n_choices + o, rho, r, self.r_bar, u, 0.0)?;
        }
        self.r_bar += self.eta * total;
        Ok(())
    }
}

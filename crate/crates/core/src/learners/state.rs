use super::{QTable, ReferenceFunction, StepSize};
use crate::error::{Error, Result};
use crate::options::OptionSpec;

/// Everything a tabular learner carries between updates.
///
/// `visits[i]` counts the updates applied to pair `i`; the step size used
/// for an update is the schedule evaluated at the count *before* it.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub q: QTable,
    /// Reward-rate estimate (reward per step).
    pub r_bar: f64,
    /// Expected-length estimates for the inter-option learner, initialized to 1.
    pub length_est: Option<Vec<f64>>,
    pub visits: Vec<u64>,
    pub eta: f64,
    pub alpha: StepSize,
    /// Step size for the length estimates.
    pub beta: StepSize,
}

impl LearnerState {
    pub fn new(n_states: usize, n_choices: usize, q0: f64, r_bar0: f64, eta: f64, alpha: StepSize) -> Self {
        LearnerState {
            q: QTable::filled(n_states, n_choices, q0),
            r_bar: r_bar0,
            length_est: None,
            visits: vec![0; n_states * n_choices],
            eta,
            alpha,
            beta: alpha,
        }
    }

    pub fn with_length_estimates(mut self, beta: StepSize) -> Self {
        self.length_est = Some(vec![1.0; self.q.len()]);
        self.beta = beta;
        self
    }

    fn alpha_at(&self, pair: usize) -> f64 {
        self.alpha.value(self.visits[pair])
    }

    /// Differential Q-learning on one transition. Returns the TD error.
    pub fn dql_step(&mut self, s: usize, a: usize, r: f64, s_next: usize) -> Result<f64> {
        let i = self.q.pair(s, a);
        let delta = r - self.r_bar + self.q.max(s_next) - self.q.values()[i];
        let step = self.alpha_at(i) * delta;
        let q_new = self.q.values()[i] + step;
        let r_new = self.r_bar + self.eta * step;
        if !q_new.is_finite() || !r_new.is_finite() {
            return Err(Error::NonFiniteUpdate { pair: i });
        }
        self.q.values_mut()[i] = q_new;
        self.r_bar = r_new;
        self.visits[i] += 1;
        Ok(delta)
    }

    /// RVI Q-learning on one transition; `f` is evaluated on the table before
    /// the update. Returns the TD error.
    pub fn rviql_step(&mut self, f: &ReferenceFunction, s: usize, a: usize, r: f64, s_next: usize) -> Result<f64> {
        let i = self.q.pair(s, a);
        let delta = r - f.eval(&self.q) + self.q.max(s_next) - self.q.values()[i];
        let q_new = self.q.values()[i] + self.alpha_at(i) * delta;
        if !q_new.is_finite() {
            return Err(Error::NonFiniteUpdate { pair: i });
        }
        self.q.values_mut()[i] = q_new;
        self.visits[i] += 1;
        Ok(delta)
    }

    /// Inter-option Differential Q-learning on one completed option
    /// execution `(s, o, cumulative reward, length, s')`. The length estimate
    /// is read before its own update. Returns the TD error.
    pub fn inter_option_dql_step(
        &mut self,
        s: usize,
        o: usize,
        reward: f64,
        length: f64,
        s_next: usize,
    ) -> Result<f64> {
        let i = self.q.pair(s, o);
        let lengths = self
            .length_est
            .as_ref()
            .ok_or_else(|| Error::Precondition("inter-option learner needs length estimates".into()))?;
        let l = lengths[i];
        if !(l > 0.0) {
            return Err(Error::NonPositiveLength { pair: i, value: l });
        }
        let delta = reward - l * self.r_bar + self.q.max(s_next) - self.q.values()[i];
        let step = (self.alpha_at(i) * (1.0 / l)) * delta;
        let q_new = self.q.values()[i] + step;
        let r_new = self.r_bar + self.eta * step;
        let l_new = l + self.beta.value(self.visits[i]) * (length - l);
        if !q_new.is_finite() || !r_new.is_finite() || !l_new.is_finite() {
            return Err(Error::NonFiniteUpdate { pair: i });
        }
        self.q.values_mut()[i] = q_new;
        self.r_bar = r_new;
        if let Some(lengths) = self.length_est.as_mut() {
            lengths[i] = l_new;
        }
        self.visits[i] += 1;
        Ok(delta)
    }

    /// Intra-option Differential Q-learning on one primitive transition taken
    /// while `executing` runs. Every option that could have chosen `a` in `s`
    /// is updated with its importance ratio; all TD errors come from the
    /// table before the step.
    pub fn intra_option_dql_step(
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
        let best_next = self.q.max(s_next);
        let mut updates = Vec::with_capacity(options.len());
        let mut total = 0.0;
        for (o, option) in options.iter().enumerate() {
            let pi = option.action_prob(s, a);
            if pi <= 0.0 {
                continue;
            }
            let rho = pi / behavior;
            let i = self.q.pair(s, o);
            let beta = option.termination(s_next);
            let u = (1.0 - beta) * self.q.get(s_next, o) + beta * best_next;
            let delta = r - self.r_bar + u - self.q.values()[i];
            let step = (self.alpha_at(i) * rho) * delta;
            let q_new = self.q.values()[i] + step;
            if !q_new.is_finite() {
                return Err(Error::NonFiniteUpdate { pair: i });
            }
            total += step;
            updates.push((i, q_new));
        }
        let r_new = self.r_bar + self.eta * total;
        if !r_new.is_finite() {
            return Err(Error::NonFiniteUpdate { pair: self.q.pair(s, executing) });
        }
        for (i, q_new) in updates {
            self.q.values_mut()[i] = q_new;
            self.visits[i] += 1;
        }
        self.r_bar = r_new;
        Ok(())
    }
}

/// Tracks the Differential-family identity
/// `r_bar_t - r_bar_0 = eta * (sum q_t - sum q_0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ledger {
    pub r_bar0: f64,
    pub q_sum0: f64,
    pub eta: f64,
}

impl Ledger {
    pub fn start(state: &LearnerState) -> Self {
        Ledger {
            r_bar0: state.r_bar,
            q_sum0: state.q.sum(),
            eta: state.eta,
        }
    }

    pub fn violation(&self, state: &LearnerState) -> f64 {
        ((state.r_bar - self.r_bar0) - self.eta * (state.q.sum() - self.q_sum0)).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dql_example_step() {
        let mut st = LearnerState::new(2, 2, 0.0, -3.0, 1.0, StepSize::constant(0.1));
        let ledger = Ledger::start(&st);
        let delta = st.dql_step(0, 0, 0.0, 0).unwrap();
        assert_eq!(delta, 3.0);
        assert!((st.q.get(0, 0) - 0.3).abs() < 1e-15);
        assert!((st.r_bar + 2.7).abs() < 1e-15);
        assert!(ledger.violation(&st) < 1e-15);
        assert_eq!(st.visits, vec![1, 0, 0, 0]);
    }

    #[test]
    fn zero_td_error_changes_nothing() {
        // q(1,solid) = 0 with r_bar = 0 already satisfies its equation.
        let mut st = LearnerState::new(2, 2, 0.0, 0.0, 1.0, StepSize::constant(0.1));
        let before = st.clone();
        assert_eq!(st.dql_step(0, 0, 0.0, 0).unwrap(), 0.0);
        assert_eq!(st.q, before.q);
        assert_eq!(st.r_bar, before.r_bar);
    }

    #[test]
    fn rvi_example_steps() {
        let mut st = LearnerState::new(2, 2, 0.0, 0.0, 1.0, StepSize::constant(0.1));
        let f = ReferenceFunction::entry(1);
        assert_eq!(st.rviql_step(&f, 0, 0, 0.0, 0).unwrap(), 0.0);
        assert_eq!(st.q.sum(), 0.0);
        assert_eq!(st.rviql_step(&f, 0, 1, -1.0, 1).unwrap(), -1.0);
        assert!((st.q.get(0, 1) + 0.1).abs() < 1e-15);
    }

    #[test]
    fn rvi_td_error_shifts_by_c_times_u() {
        let f = ReferenceFunction::mean(4);
        let mut a = LearnerState::new(2, 2, 0.0, 0.0, 1.0, StepSize::constant(0.1));
        a.q = QTable::from_values(2, 2, vec![0.3, -1.2, 0.7, 2.0]).unwrap();
        let mut b = a.clone();
        b.q = a.q.shifted(2.5);
        let da = a.rviql_step(&f, 1, 0, -1.0, 0).unwrap();
        let db = b.rviql_step(&f, 1, 0, -1.0, 0).unwrap();
        assert!((db - (da - 2.5 * f.u())).abs() < 1e-12);
    }

    #[test]
    fn inter_option_example_step() {
        let mut st = LearnerState::new(2, 2, 0.0, 0.0, 1.0, StepSize::constant(0.1))
            .with_length_estimates(StepSize::constant(0.1));
        st.length_est.as_mut().unwrap()[1] = 2.0;
        let delta = st.inter_option_dql_step(0, 1, -2.0, 2.0, 0).unwrap();
        assert_eq!(delta, -2.0);
        assert!((st.q.get(0, 1) + 0.1).abs() < 1e-15);
        assert_eq!(st.length_est.as_ref().unwrap()[1], 2.0);
    }

    #[test]
    fn inter_option_rejects_nonpositive_length() {
        let mut st = LearnerState::new(1, 1, 0.0, 0.0, 1.0, StepSize::constant(0.1))
            .with_length_estimates(StepSize::constant(0.1));
        st.length_est.as_mut().unwrap()[0] = 0.0;
        assert!(matches!(
            st.inter_option_dql_step(0, 0, 1.0, 1.0, 0),
            Err(Error::NonPositiveLength { .. })
        ));
    }

    #[test]
    fn intra_option_skips_options_that_never_take_the_action() {
        let solid = OptionSpec::one_step(0, 2, 2);
        let dashed = OptionSpec::one_step(1, 2, 2);
        let options = [solid, dashed];
        let mut st = LearnerState::new(2, 2, 0.0, -1.0, 1.0, StepSize::constant(0.1));
        st.intra_option_dql_step(&options, 0, 0, 0, 0.0, 0).unwrap();
        assert_eq!(st.q.get(0, 1), 0.0);
        assert_eq!(st.visits, vec![1, 0, 0, 0]);
        assert!(matches!(
            st.intra_option_dql_step(&options, 0, 0, 1, 0.0, 0),
            Err(Error::ZeroBehaviorProb)
        ));
    }

    #[test]
    fn non_finite_updates_are_rejected_and_not_applied() {
        let mut st = LearnerState::new(1, 1, 0.0, 0.0, 1.0, StepSize::constant(0.1));
        let before = st.clone();
        assert!(matches!(
            st.dql_step(0, 0, f64::INFINITY, 0),
            Err(Error::NonFiniteUpdate { .. })
        ));
        assert_eq!(st, before);
    }
}

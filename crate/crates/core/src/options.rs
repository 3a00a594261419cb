//! Options and the semi-MDP they induce.
//!
//! An option is run by following its policy and, on arrival at each new
//! state, terminating with that state's termination probability. Running an
//! option from a state is an absorbing chain, so its expected cumulative
//! reward, expected duration and termination-state distribution are the
//! solutions of linear systems `(I - C) x = b`, where `C` is the
//! sub-stochastic "continue" kernel.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mdp::{ChoiceGraph, Label, StructureClass, TabularMdp, classify_choice_graph, ROW_TOLERANCE};
use crate::sampling::{bernoulli, sample_index};

/// Hard cap on the length of a simulated option execution.
pub const DEFAULT_STEP_CAP: u64 = 1_000_000;

/// Row-sum tolerance for induced kernels.
pub const SMDP_ROW_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OptionSpec {
    pub name: String,
    policy: Vec<Vec<f64>>,
    termination: Vec<f64>,
}

impl OptionSpec {
    /// `policy[s][a]` is the probability of action `a` in state `s`;
    /// `termination[s]` the probability of stopping on arrival at `s`.
    pub fn new(name: impl Into<String>, policy: Vec<Vec<f64>>, termination: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if policy.len() != termination.len() {
            return Err(Error::DimensionMismatch {
                expected: policy.len(),
                actual: termination.len(),
            });
        }
        for (s, row) in policy.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::NonStochasticRow {
                    state: s.to_string(),
                    action: format!("option {name}"),
                    sum,
                });
            }
        }
        if let Some(b) = termination.iter().find(|b| !(**b >= 0.0 && **b <= 1.0)) {
            return Err(Error::Precondition(format!(
                "termination probability {b} outside [0, 1]"
            )));
        }
        Ok(OptionSpec {
            name,
            policy,
            termination,
        })
    }

    /// Always takes `action`, always terminates after one step.
    pub fn one_step(action: usize, n_states: usize, n_actions: usize) -> Self {
        let mut row = vec![0.0; n_actions];
        row[action] = 1.0;
        OptionSpec {
            name: format!("step-{action}"),
            policy: vec![row; n_states],
            termination: vec![1.0; n_states],
        }
    }

    /// One one-step option per primitive action of `mdp`.
    pub fn primitive_set(mdp: &TabularMdp) -> Vec<OptionSpec> {
        (0..mdp.n_actions())
            .map(|a| {
                let mut o = OptionSpec::one_step(a, mdp.n_states(), mdp.n_actions());
                o.name = mdp.action_names()[a].clone();
                o
            })
            .collect()
    }

    pub fn n_states(&self) -> usize {
        self.policy.len()
    }

    pub fn policy(&self, state: usize) -> &[f64] {
        &self.policy[state]
    }

    pub fn action_prob(&self, state: usize, action: usize) -> f64 {
        self.policy[state][action]
    }

    pub fn termination(&self, state: usize) -> f64 {
        self.termination[state]
    }

    fn check_against(&self, mdp: &TabularMdp) -> Result<()> {
        if self.n_states() != mdp.n_states() {
            return Err(Error::DimensionMismatch {
                expected: mdp.n_states(),
                actual: self.n_states(),
            });
        }
        if let Some(row) = self.policy.iter().find(|r| r.len() != mdp.n_actions()) {
            return Err(Error::DimensionMismatch {
                expected: mdp.n_actions(),
                actual: row.len(),
            });
        }
        Ok(())
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        sample_index(&self.policy[state], rng)
    }

    pub fn sample_termination<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> bool {
        bernoulli(self.termination[state], rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRecord {
    pub s: Label,
    pub a: Label,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminationRecord {
    pub s: Label,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionRecord {
    #[serde(default)]
    pub name: Option<String>,
    pub policy: Vec<PolicyRecord>,
    pub termination: Vec<TerminationRecord>,
}

/// On-disk option set. States without a termination record never terminate
/// there (`beta = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionsDocument {
    pub options: Vec<OptionRecord>,
}

impl OptionsDocument {
    pub fn resolve(&self, mdp: &TabularMdp) -> Result<Vec<OptionSpec>> {
        self.options
            .iter()
            .enumerate()
            .map(|(i, rec)| {
                let mut policy = vec![vec![0.0; mdp.n_actions()]; mdp.n_states()];
                for p in &rec.policy {
                    policy[mdp.state_index(&p.s)?][mdp.action_index(&p.a)?] += p.prob;
                }
                let mut termination = vec![0.0; mdp.n_states()];
                for t in &rec.termination {
                    termination[mdp.state_index(&t.s)?] = t.beta;
                }
                let name = rec.name.clone().unwrap_or_else(|| format!("o{i}"));
                OptionSpec::new(name, policy, termination)
            })
            .collect()
    }

    pub fn from_options(mdp: &TabularMdp, options: &[OptionSpec]) -> Self {
        let options = options
            .iter()
            .map(|o| OptionRecord {
                name: Some(o.name.clone()),
                policy: (0..mdp.n_states())
                    .flat_map(|s| {
                        (0..mdp.n_actions())
                            .filter(move |&a| o.action_prob(s, a) > 0.0)
                            .map(move |a| PolicyRecord {
                                s: Label::Name(mdp.state_names()[s].clone()),
                                a: Label::Name(mdp.action_names()[a].clone()),
                                prob: o.action_prob(s, a),
                            })
                    })
                    .collect(),
                termination: (0..mdp.n_states())
                    .map(|s| TerminationRecord {
                        s: Label::Name(mdp.state_names()[s].clone()),
                        beta: o.termination(s),
                    })
                    .collect(),
            })
            .collect();
        OptionsDocument { options }
    }
}

/// Continue kernel `C(s, s') = sum_a pi(a|s) p(s'|s,a) (1 - beta(s'))` and the
/// terminate kernel `B(s, s') = sum_a pi(a|s) p(s'|s,a) beta(s')`.
fn split_kernels(mdp: &TabularMdp, option: &OptionSpec) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = mdp.n_states();
    let mut cont = DMatrix::zeros(n, n);
    let mut stop = DMatrix::zeros(n, n);
    for s in 0..n {
        for a in 0..mdp.n_actions() {
            let pa = option.action_prob(s, a);
            if pa == 0.0 {
                continue;
            }
            for t in mdp.outcomes(s, a) {
                let beta = option.termination(t.next);
                cont[(s, t.next)] += pa * t.prob * (1.0 - beta);
                stop[(s, t.next)] += pa * t.prob * beta;
            }
        }
    }
    (cont, stop)
}

/// True iff from every start state the option terminates within `|S|` steps
/// with positive probability.
pub fn check_assumption1(mdp: &TabularMdp, option: &OptionSpec) -> bool {
    if option.check_against(mdp).is_err() {
        return false;
    }
    let (cont, stop) = split_kernels(mdp, option);
    let n = mdp.n_states();
    // within[k] = P(terminate within k steps); no cancellation, so an option
    // that can never stop stays at exactly zero.
    let first: Vec<f64> = (0..n).map(|s| stop.row(s).sum()).collect();
    let mut within = first.clone();
    for _ in 1..n {
        within = (0..n)
            .map(|s| first[s] + (0..n).map(|t| cont[(s, t)] * within[t]).sum::<f64>())
            .collect();
    }
    within.iter().all(|p| *p > 0.0)
}

/// Expected cumulative reward, expected length, and termination-state
/// distribution of an option from each start state.
#[derive(Debug, Clone, PartialEq)]
pub struct OptionMoments {
    pub exp_reward: Vec<f64>,
    pub exp_length: Vec<f64>,
    pub landing: Vec<Vec<f64>>,
}

pub fn option_moments(mdp: &TabularMdp, option: &OptionSpec) -> Result<OptionMoments> {
    option.check_against(mdp)?;
    let improper = || Error::NonProperOption {
        option: option.name.clone(),
    };
    if !check_assumption1(mdp, option) {
        return Err(improper());
    }
    let n = mdp.n_states();
    let (cont, stop) = split_kernels(mdp, option);
    let mut rhs = DMatrix::zeros(n, n + 2);
    for s in 0..n {
        rhs[(s, 0)] = (0..mdp.n_actions())
            .map(|a| option.action_prob(s, a) * mdp.expected_reward(s, a))
            .sum();
        rhs[(s, 1)] = 1.0;
        for t in 0..n {
            rhs[(s, 2 + t)] = stop[(s, t)];
        }
    }
    let system = DMatrix::identity(n, n) - cont;
    let x = linalg::solve(&system, &rhs).map_err(|_| improper())?;
    Ok(OptionMoments {
        exp_reward: (0..n).map(|s| x[(s, 0)]).collect(),
        exp_length: (0..n).map(|s| x[(s, 1)]).collect(),
        landing: (0..n)
            .map(|s| (0..n).map(|t| x[(s, 2 + t)]).collect())
            .collect(),
    })
}

/// A semi-MDP represented by the three marginals the optimality equations
/// depend on: landing kernel, expected reward, expected length per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedSmdp {
    state_names: Vec<String>,
    option_names: Vec<String>,
    kernel: Vec<Vec<f64>>,
    exp_reward: Vec<f64>,
    exp_length: Vec<f64>,
}

impl InducedSmdp {
    /// Builds an SMDP from per-pair tables (pairs indexed `s * n_options + o`).
    pub fn new(
        state_names: Vec<String>,
        option_names: Vec<String>,
        kernel: Vec<Vec<f64>>,
        exp_reward: Vec<f64>,
        exp_length: Vec<f64>,
    ) -> Result<Self> {
        let n = state_names.len();
        let pairs = n * option_names.len();
        if n == 0 || option_names.is_empty() {
            return Err(Error::EmptyModel);
        }
        for len in [kernel.len(), exp_reward.len(), exp_length.len()] {
            if len != pairs {
                return Err(Error::DimensionMismatch {
                    expected: pairs,
                    actual: len,
                });
            }
        }
        for (pair, row) in kernel.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.len() != n || row.iter().any(|p| !(*p >= -SMDP_ROW_TOLERANCE)) || (sum - 1.0).abs() > SMDP_ROW_TOLERANCE {
                return Err(Error::NonStochasticRow {
                    state: state_names[pair / option_names.len()].clone(),
                    action: option_names[pair % option_names.len()].clone(),
                    sum,
                });
            }
        }
        if let Some(l) = exp_length.iter().find(|l| !(**l >= 1.0 - SMDP_ROW_TOLERANCE)) {
            return Err(Error::Precondition(format!("expected length {l} below 1")));
        }
        Ok(InducedSmdp {
            state_names,
            option_names,
            kernel,
            exp_reward,
            exp_length,
        })
    }

    /// The base MDP as a semi-MDP whose choices all last one step.
    pub fn from_mdp(mdp: &TabularMdp) -> Self {
        let mut kernel = Vec::with_capacity(mdp.n_pairs());
        let mut exp_reward = Vec::with_capacity(mdp.n_pairs());
        for s in 0..mdp.n_states() {
            for a in 0..mdp.n_actions() {
                kernel.push(mdp.next_state_probs(s, a));
                exp_reward.push(mdp.expected_reward(s, a));
            }
        }
        InducedSmdp {
            state_names: mdp.state_names().to_vec(),
            option_names: mdp.action_names().to_vec(),
            kernel,
            exp_reward,
            exp_length: vec![1.0; mdp.n_pairs()],
        }
    }

    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn n_options(&self) -> usize {
        self.option_names.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.kernel.len()
    }

    pub fn pair(&self, state: usize, option: usize) -> usize {
        state * self.n_options() + option
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn option_names(&self) -> &[String] {
        &self.option_names
    }

    pub fn kernel_row(&self, state: usize, option: usize) -> &[f64] {
        &self.kernel[self.pair(state, option)]
    }

    pub fn reward(&self, state: usize, option: usize) -> f64 {
        self.exp_reward[self.pair(state, option)]
    }

    pub fn length(&self, state: usize, option: usize) -> f64 {
        self.exp_length[self.pair(state, option)]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.exp_reward
    }

    pub fn lengths(&self) -> &[f64] {
        &self.exp_length
    }

    /// Same landing kernel and lengths with rewards replaced.
    pub fn with_rewards(&self, exp_reward: Vec<f64>) -> Result<Self> {
        InducedSmdp::new(
            self.state_names.clone(),
            self.option_names.clone(),
            self.kernel.clone(),
            exp_reward,
            self.exp_length.clone(),
        )
    }

    pub fn choice_graph(&self) -> ChoiceGraph {
        let succ = self
            .kernel
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(t, _)| t)
                    .collect()
            })
            .collect();
        ChoiceGraph::new(self.n_states(), self.n_options(), succ)
    }

    pub fn classify(&self) -> StructureClass {
        classify_choice_graph(&self.choice_graph())
    }

    /// One CSV row per `(state, option)`: reward, length, landing probabilities.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "state".to_string(),
            "option".to_string(),
            "exp_reward".to_string(),
            "exp_length".to_string(),
        ];
        header.extend(self.state_names.iter().map(|s| format!("p_{s}")));
        w.write_record(&header)?;
        for s in 0..self.n_states() {
            for o in 0..self.n_options() {
                let mut row = vec![
                    self.state_names[s].clone(),
                    self.option_names[o].clone(),
                    self.reward(s, o).to_string(),
                    self.length(s, o).to_string(),
                ];
                row.extend(self.kernel_row(s, o).iter().map(|p| p.to_string()));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn induce_smdp(mdp: &TabularMdp, options: &[OptionSpec]) -> Result<InducedSmdp> {
    if options.is_empty() {
        return Err(Error::EmptyModel);
    }
    let n = mdp.n_states();
    let k = options.len();
    let mut kernel = vec![Vec::new(); n * k];
    let mut exp_reward = vec![0.0; n * k];
    let mut exp_length = vec![0.0; n * k];
    for (o, option) in options.iter().enumerate() {
        let m = option_moments(mdp, option)?;
        for s in 0..n {
            kernel[s * k + o] = m.landing[s].clone();
            exp_reward[s * k + o] = m.exp_reward[s];
            exp_length[s * k + o] = m.exp_length[s];
        }
    }
    InducedSmdp::new(
        mdp.state_names().to_vec(),
        options.iter().map(|o| o.name.clone()).collect(),
        kernel,
        exp_reward,
        exp_length,
    )
}

/// One sampled option execution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionOutcome {
    pub terminal: usize,
    pub reward: f64,
    pub length: u64,
}

pub fn execute_option<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    option: &OptionSpec,
    start: usize,
    rng: &mut R,
    step_cap: u64,
) -> Result<OptionOutcome> {
    let mut state = start;
    let mut reward = 0.0;
    let mut length = 0;
    loop {
        if length >= step_cap {
            return Err(Error::StepLimitExceeded { cap: step_cap });
        }
        let action = option.sample_action(state, rng);
        let (next, r) = mdp.sample_step(state, action, rng);
        reward += r;
        length += 1;
        state = next;
        if option.sample_termination(state, rng) {
            return Ok(OptionOutcome {
                terminal: state,
                reward,
                length,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::builtin;
    use crate::sampling::run_rng;

    fn dashed_until_one(mdp: &TabularMdp) -> OptionSpec {
        OptionSpec::new(
            "dashed-until-1",
            vec![vec![0.0, 1.0]; mdp.n_states()],
            vec![1.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn assumption1_cases() {
        let m = builtin("TwoStateSwitch").unwrap();
        let always = OptionSpec::new("a", vec![vec![0.0, 1.0]; 2], vec![1.0; 2]).unwrap();
        let never = OptionSpec::new("n", vec![vec![0.0, 1.0]; 2], vec![0.0; 2]).unwrap();
        assert!(check_assumption1(&m, &always));
        assert!(!check_assumption1(&m, &never));
        assert!(check_assumption1(&m, &dashed_until_one(&m)));
    }

    #[test]
    fn one_step_dashed_moments() {
        let m = builtin("TwoStateSwitch").unwrap();
        let o = OptionSpec::new("d", vec![vec![0.0, 1.0]; 2], vec![1.0; 2]).unwrap();
        let mo = option_moments(&m, &o).unwrap();
        assert_eq!(mo.exp_length, vec![1.0, 1.0]);
        assert_eq!(mo.exp_reward, vec![-1.0, -1.0]);
        assert_eq!(mo.landing[0], vec![0.0, 1.0]);
    }

    #[test]
    fn dashed_until_one_moments() {
        // From 1: move to 2 (r=-1, continue), back to 1 (r=-1, stop).
        let m = builtin("TwoStateSwitch").unwrap();
        let mo = option_moments(&m, &dashed_until_one(&m)).unwrap();
        assert!((mo.exp_length[0] - 2.0).abs() < 1e-12);
        assert!((mo.exp_reward[0] + 2.0).abs() < 1e-12);
        assert!((mo.landing[0][0] - 1.0).abs() < 1e-12);
        assert!(mo.landing[0][1].abs() < 1e-12);
        assert!((mo.exp_length[1] - 1.0).abs() < 1e-12);
        assert!((mo.exp_reward[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn never_terminating_option_is_improper() {
        let m = builtin("TwoStateSwitch").unwrap();
        let never = OptionSpec::new("n", vec![vec![0.0, 1.0]; 2], vec![0.0; 2]).unwrap();
        assert!(matches!(
            option_moments(&m, &never),
            Err(Error::NonProperOption { .. })
        ));
        assert!(induce_smdp(&m, &[never]).is_err());
    }

    #[test]
    fn primitive_options_reproduce_the_base_mdp() {
        for name in ["TwoStateSwitch", "Triangle", "WeaklyComm3"] {
            let m = builtin(name).unwrap();
            let smdp = induce_smdp(&m, &OptionSpec::primitive_set(&m)).unwrap();
            assert_eq!(smdp, InducedSmdp::from_mdp(&m), "{name}");
        }
    }

    #[test]
    fn empty_option_list_is_rejected() {
        let m = builtin("TwoStateSwitch").unwrap();
        assert!(matches!(induce_smdp(&m, &[]), Err(Error::EmptyModel)));
    }

    #[test]
    fn deterministic_execution() {
        let m = builtin("TwoStateSwitch").unwrap();
        let mut rng = run_rng(1, 0);
        let out = execute_option(&m, &dashed_until_one(&m), 0, &mut rng, DEFAULT_STEP_CAP).unwrap();
        assert_eq!(out, OptionOutcome { terminal: 0, reward: -2.0, length: 2 });
        let one = OptionSpec::one_step(0, 2, 2);
        for _ in 0..10 {
            assert_eq!(execute_option(&m, &one, 1, &mut rng, 10).unwrap().length, 1);
        }
    }

    #[test]
    fn one_step_option_from_transient_state_has_unit_length() {
        let m = builtin("WeaklyComm3").unwrap();
        let o = OptionSpec::new("u", vec![vec![0.5, 0.5]; 3], vec![1.0; 3]).unwrap();
        let mut rng = run_rng(3, 0);
        let total: u64 = (0..1000)
            .map(|_| execute_option(&m, &o, 0, &mut rng, 10).unwrap().length)
            .sum();
        assert_eq!(total, 1000);
    }

    #[test]
    fn step_cap_is_enforced() {
        let m = builtin("TwoStateSwitch").unwrap();
        let never = OptionSpec::new("n", vec![vec![1.0, 0.0]; 2], vec![0.0; 2]).unwrap();
        let mut rng = run_rng(0, 0);
        assert!(matches!(
            execute_option(&m, &never, 0, &mut rng, 50),
            Err(Error::StepLimitExceeded { cap: 50 })
        ));
    }

    #[test]
    fn reward_shift_scales_with_length() {
        let m = builtin("WeaklyComm3").unwrap();
        let o = OptionSpec::new("mix", vec![vec![0.3, 0.7]; 3], vec![0.2, 0.5, 0.9]).unwrap();
        let base = option_moments(&m, &o).unwrap();
        let shifted = option_moments(&m.map_rewards(|r| r + 1.5), &o).unwrap();
        for s in 0..3 {
            assert!((base.exp_length[s] - shifted.exp_length[s]).abs() < 1e-12);
            let want = base.exp_reward[s] + 1.5 * base.exp_length[s];
            assert!((shifted.exp_reward[s] - want).abs() < 1e-10);
        }
    }
}

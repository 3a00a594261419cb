//! Finite MDP models.

mod builtin;
mod document;
mod structure;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::sample_index;

pub use builtin::{builtin, BuiltinModel};
pub use document::{validate_mdp, Label, MdpDocument, TransitionRecord};
pub use structure::{classify_choice_graph, ChoiceGraph, StructureClass, StructureTag};

/// Row-sum tolerance for stochastic rows.
pub const ROW_TOLERANCE: f64 = 1e-12;

/// One outcome of taking an action: next state and reward with probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: usize,
    pub reward: f64,
    pub prob: f64,
}

/// A finite MDP with rewards stored inline on each outcome.
///
/// Kernel rows are indexed by `state * n_actions + action`; within a row the
/// outcomes are sorted by next state then reward, with duplicates merged.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    state_names: Vec<String>,
    action_names: Vec<String>,
    kernel: Vec<Vec<Transition>>,
}

impl TabularMdp {
    pub(crate) fn from_parts(
        state_names: Vec<String>,
        action_names: Vec<String>,
        kernel: Vec<Vec<Transition>>,
    ) -> Self {
        TabularMdp {
            state_names,
            action_names,
            kernel,
        }
    }

    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn n_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.kernel.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn pair(&self, state: usize, action: usize) -> usize {
        state * self.n_actions() + action
    }

    pub fn outcomes(&self, state: usize, action: usize) -> &[Transition] {
        &self.kernel[self.pair(state, action)]
    }

    pub fn state_index(&self, label: &Label) -> Result<usize> {
        label
            .resolve(&self.state_names)
            .ok_or_else(|| Error::DanglingState(label.to_string()))
    }

    pub fn action_index(&self, label: &Label) -> Result<usize> {
        label
            .resolve(&self.action_names)
            .ok_or_else(|| Error::UnknownAction(label.to_string()))
    }

    pub fn expected_reward(&self, state: usize, action: usize) -> f64 {
        self.outcomes(state, action)
            .iter()
            .map(|t| t.prob * t.reward)
            .sum()
    }

    /// Marginal next-state distribution of `(state, action)`.
    pub fn next_state_probs(&self, state: usize, action: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.n_states()];
        for t in self.outcomes(state, action) {
            row[t.next] += t.prob;
        }
        row
    }

    /// Samples `(next state, reward)`. Rows with a single outcome draw nothing.
    pub fn sample_step<R: Rng + ?Sized>(
        &self,
        state: usize,
        action: usize,
        rng: &mut R,
    ) -> (usize, f64) {
        let row = self.outcomes(state, action);
        let probs: Vec<f64> = row.iter().map(|t| t.prob).collect();
        let t = row[sample_index(&probs, rng)];
        (t.next, t.reward)
    }

    /// Same dynamics with every reward replaced by `f(reward)`.
    pub fn map_rewards(&self, f: impl Fn(f64) -> f64) -> TabularMdp {
        let kernel = self
            .kernel
            .iter()
            .map(|row| {
                let mut out: Vec<Transition> = Vec::with_capacity(row.len());
                for t in row {
                    let reward = f(t.reward);
                    match out
                        .iter_mut()
                        .find(|o| o.next == t.next && o.reward == reward)
                    {
                        Some(o) => o.prob += t.prob,
                        None => out.push(Transition { reward, ..*t }),
                    }
                }
                out.sort_by(|a, b| a.next.cmp(&b.next).then(a.reward.total_cmp(&b.reward)));
                out
            })
            .collect();
        TabularMdp {
            kernel,
            ..self.clone()
        }
    }

    pub fn choice_graph(&self) -> ChoiceGraph {
        let succ = self
            .kernel
            .iter()
            .map(|row| {
                let mut s: Vec<usize> = row
                    .iter()
                    .filter(|t| t.prob > 0.0)
                    .map(|t| t.next)
                    .collect();
                s.dedup();
                s
            })
            .collect();
        ChoiceGraph::new(self.n_states(), self.n_actions(), succ)
    }

    pub fn classify(&self) -> StructureClass {
        classify_choice_graph(&self.choice_graph())
    }

    pub fn to_document(&self) -> MdpDocument {
        let mut transitions = Vec::new();
        for s in 0..self.n_states() {
            for a in 0..self.n_actions() {
                for t in self.outcomes(s, a) {
                    transitions.push(TransitionRecord {
                        s: Label::Name(self.state_names[s].clone()),
                        a: Label::Name(self.action_names[a].clone()),
                        next: Label::Name(self.state_names[t.next].clone()),
                        reward: t.reward,
                        prob: t.prob,
                    });
                }
            }
        }
        MdpDocument {
            states: self.state_names.clone(),
            actions: self.action_names.clone(),
            transitions,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("document serializes")
    }

    pub fn from_json(text: &str) -> Result<TabularMdp> {
        let doc: MdpDocument = serde_json::from_str(text)?;
        validate_mdp(&doc)
    }

    /// Reorders states: new state `i` is old state `perm[i]`.
    pub fn permute_states(&self, perm: &[usize]) -> TabularMdp {
        let n = self.n_states();
        let mut inverse = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let na = self.n_actions();
        let mut kernel = vec![Vec::new(); n * na];
        for (new, &old) in perm.iter().enumerate() {
            for a in 0..na {
                let mut row: Vec<Transition> = self
                    .outcomes(old, a)
                    .iter()
                    .map(|t| Transition {
                        next: inverse[t.next],
                        ..*t
                    })
                    .collect();
                row.sort_by(|a, b| a.next.cmp(&b.next).then(a.reward.total_cmp(&b.reward)));
                kernel[new * na + a] = row;
            }
        }
        TabularMdp {
            state_names: perm.iter().map(|&o| self.state_names[o].clone()).collect(),
            action_names: self.action_names.clone(),
            kernel,
        }
    }
}

/// A stationary Markov policy: one distribution over choices per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryPolicy {
    probs: Vec<Vec<f64>>,
}

impl StationaryPolicy {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        let width = probs.first().map(Vec::len).unwrap_or(0);
        for (s, row) in probs.iter().enumerate() {
            if row.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    actual: row.len(),
                });
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::NonStochasticRow {
                    state: s.to_string(),
                    action: "policy".into(),
                    sum,
                });
            }
        }
        Ok(StationaryPolicy { probs })
    }

    pub fn deterministic(choices: &[usize], n_choices: usize) -> Self {
        let probs = choices
            .iter()
            .map(|&c| {
                let mut row = vec![0.0; n_choices];
                row[c] = 1.0;
                row
            })
            .collect();
        StationaryPolicy { probs }
    }

    /// The same distribution in every state.
    pub fn uniform_rows(n_states: usize, row: &[f64]) -> Result<Self> {
        StationaryPolicy::new(vec![row.to_vec(); n_states])
    }

    pub fn n_states(&self) -> usize {
        self.probs.len()
    }

    pub fn n_choices(&self) -> usize {
        self.probs.first().map(Vec::len).unwrap_or(0)
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.probs[state]
    }

    pub fn prob(&self, state: usize, choice: usize) -> f64 {
        self.probs[state][choice]
    }

    pub fn sample<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        sample_index(&self.probs[state], rng)
    }
}

/// Iterates over all deterministic policies as choice vectors, in
/// lexicographic order with state 0 varying slowest.
pub fn deterministic_policies(n_states: usize, n_choices: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = (n_choices as u128).pow(n_states as u32);
    (0..total).map(move |mut k| {
        let mut choices = vec![0; n_states];
        for slot in choices.iter_mut().rev() {
            *slot = (k % n_choices as u128) as usize;
            k /= n_choices as u128;
        }
        choices
    })
}

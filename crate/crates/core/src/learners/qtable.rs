use serde::Serialize;

use crate::error::{Error, Result};
use crate::mdp::StationaryPolicy;

/// Value estimates indexed by `(state, choice)`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QTable {
    n_states: usize,
    n_choices: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn filled(n_states: usize, n_choices: usize, value: f64) -> Self {
        QTable {
            n_states,
            n_choices,
            values: vec![value; n_states * n_choices],
        }
    }

    pub fn zeros(n_states: usize, n_choices: usize) -> Self {
        Self::filled(n_states, n_choices, 0.0)
    }

    pub fn from_values(n_states: usize, n_choices: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_states * n_choices {
            return Err(Error::DimensionMismatch {
                expected: n_states * n_choices,
                actual: values.len(),
            });
        }
        Ok(QTable {
            n_states,
            n_choices,
            values,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_choices(&self) -> usize {
        self.n_choices
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn pair(&self, state: usize, choice: usize) -> usize {
        state * self.n_choices + choice
    }

    pub fn get(&self, state: usize, choice: usize) -> f64 {
        self.values[self.pair(state, choice)]
    }

    pub fn set(&mut self, state: usize, choice: usize, value: f64) {
        let i = self.pair(state, choice);
        self.values[i] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.n_choices..(state + 1) * self.n_choices]
    }

    pub fn max(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Greedy choice; ties go to the lowest index.
    pub fn argmax(&self, state: usize) -> usize {
        let row = self.row(state);
        let mut best = 0;
        for (c, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = c;
            }
        }
        best
    }

    pub fn greedy_choices(&self) -> Vec<usize> {
        (0..self.n_states).map(|s| self.argmax(s)).collect()
    }

    pub fn greedy_policy(&self) -> StationaryPolicy {
        StationaryPolicy::deterministic(&self.greedy_choices(), self.n_choices)
    }

    pub fn state_maxima(&self) -> Vec<f64> {
        (0..self.n_states).map(|s| self.max(s)).collect()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn shifted(&self, c: f64) -> QTable {
        QTable {
            values: self.values.iter().map(|v| v + c).collect(),
            ..self.clone()
        }
    }

    pub fn sup_distance(&self, other: &QTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn midpoint(&self, other: &QTable) -> QTable {
        QTable {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| 0.5 * a + 0.5 * b)
                .collect(),
            ..self.clone()
        }
    }
}

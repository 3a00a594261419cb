use serde::{Deserialize, Serialize};

use super::QTable;
use crate::error::{Error, Result};
use crate::mdp::Label;

/// A reference function `f(q) = sum_i w_i q_i` with nonnegative weights and
/// positive total `u`. Such an `f` is Lipschitz, homogeneous, and satisfies
/// `f(q + c e) = f(q) + c u`.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceFunction {
    /// A single pair with weight 1.
    Entry(usize),
    Weighted(Vec<f64>),
}

impl ReferenceFunction {
    pub fn entry(pair: usize) -> Self {
        ReferenceFunction::Entry(pair)
    }

    pub fn sum(n_pairs: usize) -> Self {
        ReferenceFunction::Weighted(vec![1.0; n_pairs])
    }

    pub fn mean(n_pairs: usize) -> Self {
        ReferenceFunction::Weighted(vec![1.0 / n_pairs as f64; n_pairs])
    }

    pub fn weighted(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || !(total > 0.0) {
            return Err(Error::ConfigInvalid(
                "reference weights must be nonnegative with positive total".into(),
            ));
        }
        Ok(ReferenceFunction::Weighted(weights))
    }

    pub fn eval(&self, q: &QTable) -> f64 {
        self.eval_slice(q.values())
    }

    pub fn eval_slice(&self, q: &[f64]) -> f64 {
        match self {
            ReferenceFunction::Entry(i) => q[*i],
            ReferenceFunction::Weighted(w) => w.iter().zip(q).map(|(w, v)| w * v).sum(),
        }
    }

    /// `f(e)`.
    pub fn u(&self) -> f64 {
        match self {
            ReferenceFunction::Entry(_) => 1.0,
            ReferenceFunction::Weighted(w) => w.iter().sum(),
        }
    }

    /// Weight of each pair, as a dense vector.
    pub fn weights(&self, n_pairs: usize) -> Vec<f64> {
        match self {
            ReferenceFunction::Entry(i) => {
                let mut w = vec![0.0; n_pairs];
                w[*i] = 1.0;
                w
            }
            ReferenceFunction::Weighted(w) => w.clone(),
        }
    }

    pub fn check_len(&self, n_pairs: usize) -> Result<()> {
        match self {
            ReferenceFunction::Entry(i) if *i < n_pairs => Ok(()),
            ReferenceFunction::Weighted(w) if w.len() == n_pairs => Ok(()),
            ReferenceFunction::Entry(_) => Err(Error::ConfigInvalid("reference pair out of range".into())),
            ReferenceFunction::Weighted(w) => Err(Error::DimensionMismatch {
                expected: n_pairs,
                actual: w.len(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub s: Label,
    pub a: Label,
    pub weight: f64,
}

/// Serialized form of a reference function, resolved against state and
/// choice names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceSpec {
    Entry { pair: (Label, Label) },
    Weighted { weights: Vec<WeightRecord> },
    Sum,
    Mean,
}

impl ReferenceSpec {
    pub fn resolve(&self, states: &[String], choices: &[String]) -> Result<ReferenceFunction> {
        let index = |s: &Label, a: &Label| -> Result<usize> {
            let si = s
                .resolve(states)
                .ok_or_else(|| Error::DanglingState(s.to_string()))?;
            let ai = a
                .resolve(choices)
                .ok_or_else(|| Error::UnknownAction(a.to_string()))?;
            Ok(si * choices.len() + ai)
        };
        let n = states.len() * choices.len();
        match self {
            ReferenceSpec::Entry { pair } => Ok(ReferenceFunction::entry(index(&pair.0, &pair.1)?)),
            ReferenceSpec::Weighted { weights } => {
                let mut w = vec![0.0; n];
                for rec in weights {
                    w[index(&rec.s, &rec.a)?] += rec.weight;
                }
                ReferenceFunction::weighted(w)
            }
            ReferenceSpec::Sum => Ok(ReferenceFunction::sum(n)),
            ReferenceSpec::Mean => Ok(ReferenceFunction::mean(n)),
        }
    }

    /// Parses the compact command-line form: `sum`, `mean`, or
    /// `entry:<state>,<choice>`.
    pub fn parse_cli(text: &str) -> Result<Self> {
        match text {
            "sum" => Ok(ReferenceSpec::Sum),
            "mean" => Ok(ReferenceSpec::Mean),
            _ => {
                let rest = text
                    .strip_prefix("entry:")
                    .ok_or_else(|| Error::ConfigInvalid(format!("unknown reference function `{text}`")))?;
                let (s, a) = rest
                    .split_once(',')
                    .ok_or_else(|| Error::ConfigInvalid(format!("expected entry:<state>,<choice>, got `{text}`")))?;
                Ok(ReferenceSpec::Entry {
                    pair: (Label::Name(s.trim().into()), Label::Name(a.trim().into())),
                })
            }
        }
    }
}

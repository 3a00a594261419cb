use super::{MdpDocument, TabularMdp, TransitionRecord, validate_mdp};
use crate::error::{Error, Result};

/// Models that ship with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinModel {
    /// Two states; `solid` self-loops with reward 0, `dashed` switches state
    /// with reward -1. Communicating, with a two-dimensional solution set.
    TwoStateSwitch,
    /// Three states with deterministic moves; optimal reward rate 0 and a
    /// non-convex pinned solution set.
    Triangle,
    /// `TwoStateSwitch` plus a state 0 that is transient under every policy.
    WeaklyComm3,
}

impl BuiltinModel {
    pub const ALL: [BuiltinModel; 3] = [
        BuiltinModel::TwoStateSwitch,
        BuiltinModel::Triangle,
        BuiltinModel::WeaklyComm3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinModel::TwoStateSwitch => "TwoStateSwitch",
            BuiltinModel::Triangle => "Triangle",
            BuiltinModel::WeaklyComm3 => "WeaklyComm3",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    /// `(states, actions, [(s, a, next, reward, prob numerator, prob denominator)])`.
    /// Probabilities are kept as exact fractions so row sums can be checked
    /// in integer arithmetic.
    pub(crate) fn literal(self) -> (Vec<&'static str>, Vec<&'static str>, Vec<RationalRecord>) {
        let actions = vec!["solid", "dashed"];
        match self {
            BuiltinModel::TwoStateSwitch => (
                vec!["1", "2"],
                actions,
                vec![
                    ("1", "solid", "1", 0.0, 1, 1),
                    ("1", "dashed", "2", -1.0, 1, 1),
                    ("2", "solid", "2", 0.0, 1, 1),
                    ("2", "dashed", "1", -1.0, 1, 1),
                ],
            ),
            BuiltinModel::Triangle => (
                vec!["1", "2", "3"],
                actions,
                vec![
                    ("1", "solid", "1", 0.0, 1, 1),
                    ("1", "dashed", "2", -2.0, 1, 1),
                    ("2", "solid", "2", 0.0, 1, 1),
                    ("2", "dashed", "3", 0.0, 1, 1),
                    ("3", "solid", "2", -1.0, 1, 1),
                    ("3", "dashed", "1", 0.0, 1, 1),
                ],
            ),
            BuiltinModel::WeaklyComm3 => (
                vec!["0", "1", "2"],
                actions,
                vec![
                    ("0", "solid", "0", -5.0, 9, 10),
                    ("0", "solid", "1", -5.0, 1, 10),
                    ("0", "dashed", "0", -5.0, 9, 10),
                    ("0", "dashed", "2", -5.0, 1, 10),
                    ("1", "solid", "1", 0.0, 1, 1),
                    ("1", "dashed", "2", -1.0, 1, 1),
                    ("2", "solid", "2", 0.0, 1, 1),
                    ("2", "dashed", "1", -1.0, 1, 1),
                ],
            ),
        }
    }

    pub fn model(self) -> TabularMdp {
        let (states, actions, records) = self.literal();
        let doc = MdpDocument {
            states: states.iter().map(|s| s.to_string()).collect(),
            actions: actions.iter().map(|s| s.to_string()).collect(),
            transitions: records
                .into_iter()
                .map(|(s, a, next, reward, num, den)| TransitionRecord {
                    s: s.into(),
                    a: a.into(),
                    next: next.into(),
                    reward,
                    prob: num as f64 / den as f64,
                })
                .collect(),
        };
        validate_mdp(&doc).expect("built-in models are well formed")
    }
}

pub(crate) type RationalRecord = (&'static str, &'static str, &'static str, f64, u64, u64);

pub fn builtin(name: &str) -> Result<TabularMdp> {
    BuiltinModel::from_name(name)
        .map(BuiltinModel::model)
        .ok_or_else(|| Error::UnknownName(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 { a } else { gcd(b, a % b) }
    }

    #[test]
    fn rows_sum_to_one_exactly_in_rationals() {
        for m in BuiltinModel::ALL {
            let (_, _, records) = m.literal();
            let mut sums: BTreeMap<(&str, &str), (u64, u64)> = BTreeMap::new();
            for (s, a, _, _, num, den) in records {
                let e = sums.entry((s, a)).or_insert((0, 1));
                let (n0, d0) = *e;
                let n = n0 * den + num * d0;
                let d = d0 * den;
                let g = gcd(n, d);
                *e = (n / g, d / g);
            }
            for (key, frac) in sums {
                assert_eq!(frac, (1, 1), "{} row {:?}", m.name(), key);
            }
        }
    }

    #[test]
    fn unknown_name_is_rejected() {
        assert!(matches!(builtin("Square"), Err(Error::UnknownName(_))));
    }

    #[test]
    fn every_pair_has_a_row() {
        for m in BuiltinModel::ALL {
            let model = m.model();
            for s in 0..model.n_states() {
                for a in 0..model.n_actions() {
                    assert!(!model.outcomes(s, a).is_empty());
                }
            }
        }
    }
}

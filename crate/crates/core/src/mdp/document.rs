use std::fmt;

use serde::{Deserialize, Serialize};

use super::{TabularMdp, Transition, ROW_TOLERANCE};
use crate::error::{Error, Result};

/// Reference to a state or action, either by position or by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Index(usize),
    Name(String),
}

impl Label {
    pub fn resolve(&self, names: &[String]) -> Option<usize> {
        match self {
            Label::Index(i) if *i < names.len() => Some(*i),
            Label::Index(_) => None,
            Label::Name(n) => names.iter().position(|x| x == n),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Index(i) => write!(f, "#{i}"),
            Label::Name(n) => f.write_str(n),
        }
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::Name(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub s: Label,
    pub a: Label,
    pub next: Label,
    pub reward: f64,
    pub prob: f64,
}

/// On-disk MDP description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpDocument {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub transitions: Vec<TransitionRecord>,
}

/// Checks and normalizes a raw description.
///
/// Zero-probability outcomes are dropped, duplicate `(next, reward)` outcomes
/// are merged, and rows are sorted by next state then reward.
pub fn validate_mdp(doc: &MdpDocument) -> Result<TabularMdp> {
    if doc.states.is_empty() || doc.actions.is_empty() {
        return Err(Error::EmptyModel);
    }
    let ns = doc.states.len();
    let na = doc.actions.len();
    let mut kernel: Vec<Vec<Transition>> = vec![Vec::new(); ns * na];
    for rec in &doc.transitions {
        let s = rec
            .s
            .resolve(&doc.states)
            .ok_or_else(|| Error::DanglingState(rec.s.to_string()))?;
        let a = rec
            .a
            .resolve(&doc.actions)
            .ok_or_else(|| Error::UnknownAction(rec.a.to_string()))?;
        let next = rec
            .next
            .resolve(&doc.states)
            .ok_or_else(|| Error::DanglingState(rec.next.to_string()))?;
        if !(rec.prob >= 0.0) || !rec.prob.is_finite() || !rec.reward.is_finite() {
            return Err(Error::NonStochasticRow {
                state: doc.states[s].clone(),
                action: doc.actions[a].clone(),
                sum: rec.prob,
            });
        }
        if rec.prob == 0.0 {
            continue;
        }
        let row = &mut kernel[s * na + a];
        match row
            .iter_mut()
            .find(|t| t.next == next && t.reward == rec.reward)
        {
            Some(t) => t.prob += rec.prob,
            None => row.push(Transition {
                next,
                reward: rec.reward,
                prob: rec.prob,
            }),
        }
    }
    for (pair, row) in kernel.iter_mut().enumerate() {
        let sum: f64 = row.iter().map(|t| t.prob).sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(Error::NonStochasticRow {
                state: doc.states[pair / na].clone(),
                action: doc.actions[pair % na].clone(),
                sum,
            });
        }
        row.sort_by(|a, b| a.next.cmp(&b.next).then(a.reward.total_cmp(&b.reward)));
    }
    Ok(TabularMdp::from_parts(
        doc.states.clone(),
        doc.actions.clone(),
        kernel,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(prob: f64) -> MdpDocument {
        MdpDocument {
            states: vec!["only".into()],
            actions: vec!["stay".into()],
            transitions: vec![TransitionRecord {
                s: "only".into(),
                a: "stay".into(),
                next: "only".into(),
                reward: 5.0,
                prob,
            }],
        }
    }

    #[test]
    fn minimal_model_is_valid() {
        let m = validate_mdp(&single(1.0)).unwrap();
        assert_eq!(m.n_states(), 1);
        assert_eq!(m.expected_reward(0, 0), 5.0);
    }

    #[test]
    fn short_row_is_rejected() {
        assert!(matches!(
            validate_mdp(&single(0.9)),
            Err(Error::NonStochasticRow { .. })
        ));
    }

    #[test]
    fn dangling_and_empty() {
        let mut doc = single(1.0);
        doc.transitions[0].next = "elsewhere".into();
        assert!(matches!(validate_mdp(&doc), Err(Error::DanglingState(_))));
        doc.states.clear();
        assert!(matches!(validate_mdp(&doc), Err(Error::EmptyModel)));
    }

    #[test]
    fn duplicates_merge_and_indices_resolve() {
        let mut doc = single(0.5);
        doc.transitions.push(TransitionRecord {
            s: Label::Index(0),
            a: Label::Index(0),
            next: Label::Index(0),
            reward: 5.0,
            prob: 0.5,
        });
        let m = validate_mdp(&doc).unwrap();
        assert_eq!(m.outcomes(0, 0).len(), 1);
        assert_eq!(m.outcomes(0, 0)[0].prob, 1.0);
    }

    #[test]
    fn labels_parse_from_numbers_or_strings() {
        let l: Label = serde_json::from_str("3").unwrap();
        assert_eq!(l, Label::Index(3));
        let l: Label = serde_json::from_str("\"3\"").unwrap();
        assert_eq!(l, Label::Name("3".into()));
    }

    #[test]
    fn two_state_switch_round_trips() {
        let m = super::super::builtin("TwoStateSwitch").unwrap();
        assert_eq!(m.n_states(), 2);
        assert_eq!(m.n_actions(), 2);
        let back = TabularMdp::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    fn arbitrary_doc() -> impl Strategy<Value = MdpDocument> {
        (1usize..4, 1usize..3).prop_flat_map(|(ns, na)| {
            let rows = ns * na;
            (
                Just(ns),
                Just(na),
                prop::collection::vec(
                    prop::collection::vec((0..ns, -3i32..3, 1u32..5), 1..4),
                    rows,
                ),
            )
                .prop_map(|(ns, na, rows)| {
                    let mut transitions = Vec::new();
                    for (pair, outs) in rows.into_iter().enumerate() {
                        let total: u32 = outs.iter().map(|o| o.2).sum();
                        for (next, r, w) in outs {
                            transitions.push(TransitionRecord {
                                s: Label::Index(pair / na),
                                a: Label::Index(pair % na),
                                next: Label::Index(next),
                                reward: r as f64 * 0.5,
                                prob: w as f64 / total as f64,
                            });
                        }
                    }
                    MdpDocument {
                        states: (0..ns).map(|i| format!("s{i}")).collect(),
                        actions: (0..na).map(|i| format!("a{i}")).collect(),
                        transitions,
                    }
                })
        })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(doc in arbitrary_doc()) {
            if let Ok(m) = validate_mdp(&doc) {
                let back = TabularMdp::from_json(&m.to_json()).unwrap();
                prop_assert_eq!(back, m);
            }
        }
    }
}

//! End-component decomposition and weak-communication classification.

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

/// Support structure of a finite decision process: for every state and every
/// choice (action or option), the set of possible successor states.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceGraph {
    n_states: usize,
    n_choices: usize,
    succ: Vec<Vec<usize>>,
}

impl ChoiceGraph {
    pub fn new(n_states: usize, n_choices: usize, succ: Vec<Vec<usize>>) -> Self {
        assert_eq!(succ.len(), n_states * n_choices);
        ChoiceGraph {
            n_states,
            n_choices,
            succ,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn successors(&self, state: usize, choice: usize) -> &[usize] {
        &self.succ[state * self.n_choices + choice]
    }

    /// SCC id per state of the graph restricted to `alive` states and the
    /// enabled choices. Dead states get `usize::MAX`.
    fn components(&self, alive: &[bool], enabled: &[bool]) -> Vec<usize> {
        let mut g: DiGraph<(), ()> = DiGraph::with_capacity(self.n_states, 0);
        let nodes: Vec<NodeIndex> = (0..self.n_states).map(|_| g.add_node(())).collect();
        for s in (0..self.n_states).filter(|&s| alive[s]) {
            for c in 0..self.n_choices {
                if !enabled[s * self.n_choices + c] {
                    continue;
                }
                for &t in self.successors(s, c) {
                    if alive[t] {
                        g.add_edge(nodes[s], nodes[t], ());
                    }
                }
            }
        }
        let mut comp = vec![usize::MAX; self.n_states];
        for (id, scc) in tarjan_scc(&g).into_iter().enumerate() {
            for n in scc {
                if alive[n.index()] {
                    comp[n.index()] = id;
                }
            }
        }
        comp
    }

    /// Maximal end components, each sorted, listed by smallest member.
    pub fn maximal_end_components(&self) -> Vec<Vec<usize>> {
        let nc = self.n_choices;
        let mut alive = vec![true; self.n_states];
        let mut enabled = vec![true; self.n_states * nc];
        loop {
            let comp = self.components(&alive, &enabled);
            let mut changed = false;
            for s in 0..self.n_states {
                if !alive[s] {
                    continue;
                }
                for c in 0..nc {
                    let e = &mut enabled[s * nc + c];
                    if *e && self.successors(s, c).iter().any(|&t| !alive[t] || comp[t] != comp[s]) {
                        *e = false;
                        changed = true;
                    }
                }
                if (0..nc).all(|c| !enabled[s * nc + c]) {
                    alive[s] = false;
                    changed = true;
                }
            }
            if !changed {
                let mut groups: Vec<Vec<usize>> = Vec::new();
                let mut ids: Vec<usize> = Vec::new();
                for s in (0..self.n_states).filter(|&s| alive[s]) {
                    match ids.iter().position(|&id| id == comp[s]) {
                        Some(k) => groups[k].push(s),
                        None => {
                            ids.push(comp[s]);
                            groups.push(vec![s]);
                        }
                    }
                }
                return groups;
            }
        }
    }

    fn union_strongly_connected(&self, within: &[bool]) -> bool {
        let enabled = vec![true; self.n_states * self.n_choices];
        let comp = self.components(within, &enabled);
        let mut ids = (0..self.n_states).filter(|&s| within[s]).map(|s| comp[s]);
        match ids.next() {
            Some(first) => ids.all(|id| id == first),
            None => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StructureTag {
    Communicating,
    WeaklyCommunicating,
    NotWeaklyCommunicating,
}

impl StructureTag {
    pub fn as_str(self) -> &'static str {
        match self {
            StructureTag::Communicating => "Communicating",
            StructureTag::WeaklyCommunicating => "WeaklyCommunicating",
            StructureTag::NotWeaklyCommunicating => "NotWeaklyCommunicating",
        }
    }

    pub fn is_weakly_communicating(self) -> bool {
        self != StructureTag::NotWeaklyCommunicating
    }
}

/// Result of [`classify_choice_graph`].
///
/// `closed_class` is the union of all end components; `transient` holds the
/// states that belong to no end component and are therefore transient under
/// every policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureClass {
    pub tag: StructureTag,
    pub closed_class: Vec<usize>,
    pub transient: Vec<usize>,
    pub end_components: Vec<Vec<usize>>,
}

impl StructureClass {
    pub fn is_closed(&self, state: usize) -> bool {
        self.closed_class.binary_search(&state).is_ok()
    }
}

pub fn classify_choice_graph(g: &ChoiceGraph) -> StructureClass {
    let n = g.n_states();
    let mecs = g.maximal_end_components();
    let mut in_mec = vec![false; n];
    for s in mecs.iter().flatten() {
        in_mec[*s] = true;
    }
    let closed_class: Vec<usize> = (0..n).filter(|&s| in_mec[s]).collect();
    let transient: Vec<usize> = (0..n).filter(|&s| !in_mec[s]).collect();

    let tag = if g.union_strongly_connected(&vec![true; n]) {
        StructureTag::Communicating
    } else {
        let closed_under_all = closed_class.iter().all(|&s| {
            (0..g.n_choices).all(|c| g.successors(s, c).iter().all(|&t| in_mec[t]))
        });
        if mecs.len() == 1 && closed_under_all && g.union_strongly_connected(&in_mec) {
            StructureTag::WeaklyCommunicating
        } else {
            StructureTag::NotWeaklyCommunicating
        }
    };
    StructureClass {
        tag,
        closed_class,
        transient,
        end_components: mecs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::builtin;
    use proptest::prelude::*;

    #[test]
    fn two_state_switch_is_communicating() {
        let c = builtin("TwoStateSwitch").unwrap().classify();
        assert_eq!(c.tag, StructureTag::Communicating);
        assert!(c.transient.is_empty());
        assert_eq!(c.closed_class, vec![0, 1]);
    }

    #[test]
    fn weakly_comm3_has_transient_state_zero() {
        let c = builtin("WeaklyComm3").unwrap().classify();
        assert_eq!(c.tag, StructureTag::WeaklyCommunicating);
        assert_eq!(c.transient, vec![0]);
        assert_eq!(c.closed_class, vec![1, 2]);
    }

    #[test]
    fn triangle_is_communicating() {
        let c = builtin("Triangle").unwrap().classify();
        assert_eq!(c.tag, StructureTag::Communicating);
    }

    #[test]
    fn isolated_self_loops_are_not_weakly_communicating() {
        let g = ChoiceGraph::new(2, 1, vec![vec![0], vec![1]]);
        let c = classify_choice_graph(&g);
        assert_eq!(c.tag, StructureTag::NotWeaklyCommunicating);
        assert_eq!(c.end_components, vec![vec![0], vec![1]]);
    }

    #[test]
    fn escape_from_closed_set_breaks_weak_communication() {
        // State 0 can stay forever or move to 1; state 1 is absorbing.
        let g = ChoiceGraph::new(2, 2, vec![vec![0], vec![1], vec![1], vec![1]]);
        let c = classify_choice_graph(&g);
        assert_eq!(c.tag, StructureTag::NotWeaklyCommunicating);
    }

    #[test]
    fn randomized_exit_state_is_transient() {
        // State 0 stays w.p. 0.9 under both actions but always may leave.
        let g = ChoiceGraph::new(2, 2, vec![vec![0, 1], vec![0, 1], vec![1], vec![1]]);
        let c = classify_choice_graph(&g);
        assert_eq!(c.tag, StructureTag::WeaklyCommunicating);
        assert_eq!(c.transient, vec![0]);
    }

    fn random_graph() -> impl Strategy<Value = (usize, usize, Vec<Vec<usize>>, Vec<usize>)> {
        (1usize..6, 1usize..4).prop_flat_map(|(n, k)| {
            (
                Just(n),
                Just(k),
                prop::collection::vec(prop::collection::btree_set(0..n, 1..3), n * k)
                    .prop_map(|v| v.into_iter().map(|s| s.into_iter().collect()).collect()),
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            )
        })
    }

    proptest! {
        #[test]
        fn classification_is_invariant_under_relabeling((n, k, succ, perm) in random_graph()) {
            let g = ChoiceGraph::new(n, k, succ.clone());
            // new state i is old perm[i]
            let mut inv = vec![0; n];
            for (new, &old) in perm.iter().enumerate() { inv[old] = new; }
            let mut psucc = vec![Vec::new(); n * k];
            for new in 0..n {
                for c in 0..k {
                    let mut row: Vec<usize> = succ[perm[new] * k + c].iter().map(|&t| inv[t]).collect();
                    row.sort();
                    psucc[new * k + c] = row;
                }
            }
            let a = classify_choice_graph(&g);
            let b = classify_choice_graph(&ChoiceGraph::new(n, k, psucc));
            prop_assert_eq!(a.tag, b.tag);
            let mut mapped: Vec<usize> = a.transient.iter().map(|&s| inv[s]).collect();
            mapped.sort();
            prop_assert_eq!(mapped, b.transient.clone());
            if a.tag != StructureTag::NotWeaklyCommunicating {
                prop_assert_eq!(a.closed_class.len() + a.transient.len(), n);
            }
            if a.tag == StructureTag::Communicating {
                prop_assert!(a.transient.is_empty());
            }
        }
    }
}

//! Tree automata whose transition labels are formulas over positioned
//! variables, and the transformations turning a general SID into
//! expandable ones.

mod choice_free;
mod profile;
mod reset;
mod stages;
mod translate;
mod wrap;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::syntax::{show_body, Atom};

pub use choice_free::{choice_free_decompose, is_choice_free, with_lambda, ChoiceFreeViolation};
pub use profile::{profile, Profile};
pub use reset::{charform, find_reset, GVar, ResetContext};
pub use stages::{
    rename_one_transition_ys, stage1_strip, stage2_remove_nonpersistent_equalities, stage3_annotate,
    stage3_remove_persistent, stage3_split,
};
pub use translate::{automaton_to_sid, eliminate_trivial_sccs, sid_to_automaton};
pub use wrap::wrap_one_transitions;

/// Position tag of a variable: the node itself or one of its children
/// (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pos {
    Eps,
    Child(usize),
}

/// A positioned variable: `x^p_j` or the node-local `y_j` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PVar {
    X(Pos, usize),
    Y(usize),
}

impl PVar {
    pub fn eps(j: usize) -> PVar {
        PVar::X(Pos::Eps, j)
    }

    pub fn child(i: usize, j: usize) -> PVar {
        PVar::X(Pos::Child(i), j)
    }
}

impl fmt::Display for PVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PVar::X(Pos::Eps, j) => write!(f, "x_{j}"),
            PVar::X(Pos::Child(i), j) => write!(f, "x^{i}_{j}"),
            PVar::Y(j) => write!(f, "y_{j}"),
        }
    }
}

/// A quantifier- and predicate-free label.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Qpf(pub Vec<Atom<PVar>>);

impl fmt::Display for Qpf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", show_body(&self.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lambda {
    One,
    Inf,
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lambda::One => write!(f, "1"),
            Lambda::Inf => write!(f, "∞"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    pub name: String,
    pub arity: usize,
    /// Injective partial map from parameter positions to renamed
    /// 1-transition variables (set by the persistent-variable stage).
    pub annotation: Option<BTreeMap<usize, usize>>,
}

impl State {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        State {
            name: name.into(),
            arity,
            annotation: None,
        }
    }

    pub fn display_name(&self) -> String {
        match &self.annotation {
            None => self.name.clone(),
            Some(a) => {
                let parts: Vec<String> = a.iter().map(|(k, v)| format!("{k}:{v}")).collect();
                format!("({},{{{}}})", self.name, parts.join(","))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition<L> {
    pub source: usize,
    pub targets: Vec<usize>,
    pub label: L,
    pub lambda: Option<Lambda>,
}

/// A rooted tree automaton; states are referred to by index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Automaton<L> {
    pub states: Vec<State>,
    pub initial: usize,
    pub transitions: Vec<Transition<L>>,
}

pub type SigmaAutomaton = Automaton<Qpf>;

/// Strongly connected components with their classification.
#[derive(Clone, Debug)]
pub struct SccInfo {
    /// Components in topological order (the root's component first when
    /// the automaton is rooted).
    pub components: Vec<BTreeSet<usize>>,
    pub component_of: Vec<usize>,
    pub linear: Vec<bool>,
    pub trivial: Vec<bool>,
    /// Edges of the condensation.
    pub edges: BTreeSet<(usize, usize)>,
}

impl<L: Clone + PartialEq + fmt::Display> Automaton<L> {
    pub fn new(initial: State) -> Self {
        Automaton {
            states: vec![initial],
            initial: 0,
            transitions: vec![],
        }
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }

    pub fn add_state(&mut self, s: State) -> usize {
        if let Some(i) = self.states.iter().position(|t| *t == s) {
            return i;
        }
        self.states.push(s);
        self.states.len() - 1
    }

    pub fn add_transition(&mut self, source: usize, label: L, targets: Vec<usize>, lambda: Option<Lambda>) {
        let t = Transition {
            source,
            targets,
            label,
            lambda,
        };
        if !self.transitions.contains(&t) {
            self.transitions.push(t);
        }
    }

    pub fn outgoing(&self, q: usize) -> impl Iterator<Item = &Transition<L>> {
        self.transitions.iter().filter(move |t| t.source == q)
    }

    /// States having a complete run.
    pub fn productive_states(&self) -> BTreeSet<usize> {
        let mut prod = BTreeSet::new();
        loop {
            let before = prod.len();
            for t in &self.transitions {
                if t.targets.iter().all(|q| prod.contains(q)) {
                    prod.insert(t.source);
                }
            }
            if prod.len() == before {
                return prod;
            }
        }
    }

    /// Restrict to reachable, productive states; `None` if the language
    /// is empty. State indices are renumbered, order preserved.
    pub fn trim(&self) -> Option<Self> {
        let prod = self.productive_states();
        if !prod.contains(&self.initial) {
            return None;
        }
        let good = |t: &Transition<L>| prod.contains(&t.source) && t.targets.iter().all(|q| prod.contains(q));
        let mut reach = BTreeSet::from([self.initial]);
        let mut stack = vec![self.initial];
        while let Some(q) = stack.pop() {
            for t in self.outgoing(q).filter(|t| good(t)) {
                for &r in &t.targets {
                    if reach.insert(r) {
                        stack.push(r);
                    }
                }
            }
        }
        let keep: Vec<usize> = (0..self.states.len()).filter(|q| reach.contains(q)).collect();
        let remap: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, &q)| (q, i)).collect();
        Some(Automaton {
            states: keep.iter().map(|&q| self.states[q].clone()).collect(),
            initial: remap[&self.initial],
            transitions: self
                .transitions
                .iter()
                .filter(|t| reach.contains(&t.source) && good(t))
                .map(|t| Transition {
                    source: remap[&t.source],
                    targets: t.targets.iter().map(|q| remap[q]).collect(),
                    label: t.label.clone(),
                    lambda: t.lambda,
                })
                .collect(),
        })
    }

    pub fn is_trim(&self) -> bool {
        self.trim().is_some_and(|t| t.states.len() == self.states.len() && t.transitions.len() == self.transitions.len())
    }

    pub fn scc_info(&self) -> SccInfo {
        let mut g: DiGraph<usize, ()> = DiGraph::new();
        let nodes: Vec<_> = (0..self.states.len()).map(|q| g.add_node(q)).collect();
        for t in &self.transitions {
            for &r in &t.targets {
                g.update_edge(nodes[t.source], nodes[r], ());
            }
        }
        // tarjan yields components in reverse topological order
        let mut comps: Vec<BTreeSet<usize>> =
            tarjan_scc(&g).into_iter().map(|c| c.into_iter().map(|n| g[n]).collect()).collect();
        comps.reverse();
        let mut component_of = vec![0; self.states.len()];
        for (i, c) in comps.iter().enumerate() {
            for &q in c {
                component_of[q] = i;
            }
        }
        let mut linear = vec![true; comps.len()];
        let mut trivial = vec![true; comps.len()];
        let mut edges = BTreeSet::new();
        for t in &self.transitions {
            let s = component_of[t.source];
            let inside = t.targets.iter().filter(|&&r| component_of[r] == s).count();
            if inside >= 1 {
                trivial[s] = false;
            }
            if inside >= 2 {
                linear[s] = false;
            }
            for &r in &t.targets {
                if component_of[r] != s {
                    edges.insert((s, component_of[r]));
                }
            }
        }
        SccInfo {
            components: comps,
            component_of,
            linear,
            trivial,
            edges,
        }
    }

    /// Debug dump: one `q0 --[label]--> (q1,...,ql) (1|∞)` line per
    /// transition.
    pub fn dump(&self) -> Vec<String> {
        self.transitions
            .iter()
            .map(|t| {
                let targets: Vec<String> = t.targets.iter().map(|&q| self.states[q].display_name()).collect();
                let lam = t.lambda.map(|l| format!(" ({l})")).unwrap_or_default();
                format!(
                    "{} --[{}]--> ({}){}",
                    self.states[t.source].display_name(),
                    t.label,
                    targets.join(","),
                    lam
                )
            })
            .collect()
    }

    pub fn delta1_len(&self) -> usize {
        self.transitions.iter().filter(|t| t.lambda == Some(Lambda::One)).count()
    }
}

impl<L: Clone + PartialEq + fmt::Display> fmt::Display for Automaton<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in self.dump() {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Equivalence over the variables of a label induced by its equalities.
pub fn label_eq(label: &Qpf) -> crate::partition::Equiv<PVar> {
    crate::syntax::eq_closure(&label.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scc_classification() {
        let mut a: Automaton<String> = Automaton::new(State::new("q0", 0));
        let q1 = a.add_state(State::new("q1", 0));
        let q2 = a.add_state(State::new("q2", 0));
        a.add_transition(0, "a".into(), vec![q1], None);
        a.add_transition(q1, "b".into(), vec![q2], None);
        a.add_transition(q2, "c".into(), vec![], None);
        let info = a.scc_info();
        assert_eq!(info.components.len(), 3);
        assert!(info.trivial.iter().all(|&t| t));
        let mut b: Automaton<String> = Automaton::new(State::new("q", 0));
        b.add_transition(0, "a".into(), vec![0], None);
        b.add_transition(0, "c".into(), vec![], None);
        let info = b.scc_info();
        assert_eq!(info.components.len(), 1);
        assert!(info.linear[0] && !info.trivial[0]);
    }
}

use std::collections::BTreeMap;
use std::fmt;

use super::{Automaton, Lambda, Transition};
use crate::error::{Error, Result};

const MAX_STATES: usize = 200_000;
const MAX_OUTCOMES: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChoiceFreeViolation {
    /// A non-root component entered by zero or several branches.
    NotATree { component: Vec<String>, entries: usize },
    /// A linear 1-component with more than one exit.
    SeveralExits { component: Vec<String>, exits: usize },
}

impl fmt::Display for ChoiceFreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChoiceFreeViolation::NotATree { component, entries } => {
                write!(f, "component {{{}}} is entered by {entries} branches", component.join(","))
            }
            ChoiceFreeViolation::SeveralExits { component, exits } => {
                write!(f, "linear 1-component {{{}}} has {exits} exits", component.join(","))
            }
        }
    }
}

/// Check choice-freeness; on success return the (unique) labelling of the
/// transitions with 1 or ∞.
pub fn is_choice_free<L: Clone + PartialEq + fmt::Display>(
    a: &Automaton<L>,
) -> std::result::Result<Vec<Lambda>, ChoiceFreeViolation> {
    let info = a.scc_info();
    let names = |c: usize| -> Vec<String> { info.components[c].iter().map(|&q| a.states[q].display_name()).collect() };
    let root = info.component_of[a.initial];
    // entering branches of each component
    let mut entries: Vec<Vec<usize>> = vec![vec![]; info.components.len()];
    for (ti, t) in a.transitions.iter().enumerate() {
        let s = info.component_of[t.source];
        for &r in &t.targets {
            let c = info.component_of[r];
            if c != s {
                entries[c].push(ti);
            }
        }
    }
    for c in 0..info.components.len() {
        let expected = usize::from(c != root);
        if entries[c].len() != expected {
            return Err(ChoiceFreeViolation::NotATree {
                component: names(c),
                entries: entries[c].len(),
            });
        }
    }
    // components are in topological order, so parents come first
    let mut comp_lambda = vec![Lambda::Inf; info.components.len()];
    let mut lambda = vec![Lambda::Inf; a.transitions.len()];
    for c in 0..info.components.len() {
        comp_lambda[c] = if c == root { Lambda::One } else { lambda[entries[c][0]] };
        let exits: Vec<usize> = (0..a.transitions.len())
            .filter(|&ti| {
                let t = &a.transitions[ti];
                info.component_of[t.source] == c && t.targets.iter().all(|&r| info.component_of[r] != c)
            })
            .collect();
        if info.linear[c] && comp_lambda[c] == Lambda::One {
            if exits.len() != 1 {
                return Err(ChoiceFreeViolation::SeveralExits {
                    component: names(c),
                    exits: exits.len(),
                });
            }
            lambda[exits[0]] = Lambda::One;
        }
    }
    Ok(lambda)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Mult {
    Zero,
    One,
    Inf,
}

struct Unfolding<L> {
    a: Automaton<L>,
    /// Original component of each instance.
    inst_comp: Vec<usize>,
    /// Instance of each new state.
    state_inst: Vec<usize>,
    /// The transition (index in `a`) entering each non-root instance.
    entry: Vec<Option<usize>>,
    linear: Vec<bool>,
}

impl<L: Clone + PartialEq + fmt::Display> Unfolding<L> {
    fn build(orig: &Automaton<L>) -> Result<Self> {
        let info = orig.scc_info();
        let mut u = Unfolding {
            a: Automaton {
                states: vec![],
                initial: 0,
                transitions: vec![],
            },
            inst_comp: vec![],
            state_inst: vec![],
            entry: vec![],
            linear: info.linear.clone(),
        };
        let root = u.instantiate(orig, &info, info.component_of[orig.initial], None)?;
        u.a.initial = root[&orig.initial];
        // name copies apart only where a component was copied
        let mut count = vec![0usize; info.components.len()];
        for &c in &u.inst_comp {
            count[c] += 1;
        }
        let mut seen = vec![0usize; info.components.len()];
        let mut ordinal = vec![0usize; u.inst_comp.len()];
        for (i, &c) in u.inst_comp.iter().enumerate() {
            seen[c] += 1;
            ordinal[i] = seen[c];
        }
        for (q, s) in u.a.states.iter_mut().enumerate() {
            let i = u.state_inst[q];
            if count[u.inst_comp[i]] > 1 {
                s.name = format!("{}#{}", s.name, ordinal[i]);
            }
        }
        Ok(u)
    }

    fn instantiate(
        &mut self,
        orig: &Automaton<L>,
        info: &super::SccInfo,
        comp: usize,
        entry: Option<usize>,
    ) -> Result<BTreeMap<usize, usize>> {
        let inst = self.inst_comp.len();
        self.inst_comp.push(comp);
        self.entry.push(entry);
        let mut map = BTreeMap::new();
        for &q in &info.components[comp] {
            if self.a.states.len() >= MAX_STATES {
                return Err(Error::CapExceeded(format!("unfolding exceeds {MAX_STATES} states")));
            }
            map.insert(q, self.a.states.len());
            self.a.states.push(orig.states[q].clone());
            self.state_inst.push(inst);
        }
        for t in orig.transitions.iter().filter(|t| info.component_of[t.source] == comp) {
            let ti = self.a.transitions.len();
            self.a.transitions.push(Transition {
                source: map[&t.source],
                targets: vec![],
                label: t.label.clone(),
                lambda: None,
            });
            let mut targets = Vec::with_capacity(t.targets.len());
            for &r in &t.targets {
                if info.component_of[r] == comp {
                    targets.push(map[&r]);
                } else {
                    let child = self.instantiate(orig, info, info.component_of[r], Some(ti))?;
                    targets.push(child[&r]);
                }
            }
            self.a.transitions[ti].targets = targets;
        }
        Ok(map)
    }

    fn outcome(&self, x: &[Mult], y: &[Mult]) -> Option<Automaton<L>> {
        let keep: Vec<usize> = (0..self.a.states.len()).filter(|&q| x[self.state_inst[q]] != Mult::Zero).collect();
        let remap: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, &q)| (q, i)).collect();
        let mut out = Automaton {
            states: keep.iter().map(|&q| self.a.states[q].clone()).collect(),
            initial: remap[&self.a.initial],
            transitions: vec![],
        };
        for (ti, t) in self.a.transitions.iter().enumerate() {
            let lambda = match y[ti] {
                Mult::Zero => continue,
                Mult::One => Lambda::One,
                Mult::Inf => Lambda::Inf,
            };
            out.transitions.push(Transition {
                source: remap[&t.source],
                targets: t.targets.iter().map(|r| remap[r]).collect(),
                label: t.label.clone(),
                lambda: Some(lambda),
            });
        }
        out.trim()
    }
}

/// Split an automaton into finitely many choice-free ones whose languages
/// together make up the original language. Every outcome carries its
/// 1/∞ labelling.
pub fn choice_free_decompose<L: Clone + PartialEq + fmt::Display>(a: &Automaton<L>) -> Result<Vec<Automaton<L>>> {
    let Some(a) = a.trim() else {
        return Ok(vec![]);
    };
    let u = Unfolding::build(&a)?;
    let n = u.inst_comp.len();
    // per instance: internal transitions and exits
    let mut internal: Vec<Vec<usize>> = vec![vec![]; n];
    let mut exits: Vec<Vec<usize>> = vec![vec![]; n];
    for (ti, t) in u.a.transitions.iter().enumerate() {
        let i = u.state_inst[t.source];
        if t.targets.iter().any(|&r| u.state_inst[r] == i) {
            internal[i].push(ti);
        } else {
            exits[i].push(ti);
        }
    }
    let mut outcomes: Vec<Automaton<L>> = Vec::new();
    let mut x = vec![Mult::Zero; n];
    let mut y = vec![Mult::Zero; u.a.transitions.len()];
    #[allow(clippy::too_many_arguments)]
    fn go<L: Clone + PartialEq + fmt::Display>(
        u: &Unfolding<L>,
        i: usize,
        internal: &[Vec<usize>],
        exits: &[Vec<usize>],
        x: &mut Vec<Mult>,
        y: &mut Vec<Mult>,
        outcomes: &mut Vec<Automaton<L>>,
    ) -> Result<()> {
        if i == u.inst_comp.len() {
            if let Some(o) = u.outcome(x, y) {
                if !outcomes.contains(&o) {
                    if outcomes.len() >= MAX_OUTCOMES {
                        return Err(Error::CapExceeded(format!("more than {MAX_OUTCOMES} choice-free outcomes")));
                    }
                    outcomes.push(o);
                }
            }
            return Ok(());
        }
        // an entering branch contributes its multiplicity (one branch only)
        x[i] = match u.entry[i] {
            None => Mult::One,
            Some(ti) => y[ti],
        };
        let all = if x[i] == Mult::Zero { Mult::Zero } else { Mult::Inf };
        for &ti in &internal[i] {
            y[ti] = all;
        }
        if x[i] != Mult::One || !u.linear[u.inst_comp[i]] {
            for &ti in &exits[i] {
                y[ti] = all;
            }
            return go(u, i + 1, internal, exits, x, y, outcomes);
        }
        for &chosen in &exits[i] {
            for &ti in &exits[i] {
                y[ti] = if ti == chosen { Mult::One } else { Mult::Zero };
            }
            go(u, i + 1, internal, exits, x, y, outcomes)?;
        }
        Ok(())
    }
    go(&u, 0, &internal, &exits, &mut x, &mut y, &mut outcomes)?;
    for o in &outcomes {
        let lambda = is_choice_free(o).map_err(|v| Error::Invariant(format!("decomposition outcome: {v}")))?;
        let stored: Vec<Lambda> = o.transitions.iter().map(|t| t.lambda.unwrap()).collect();
        if lambda != stored {
            return Err(Error::Invariant("decomposition outcome has an inconsistent labelling".into()));
        }
    }
    Ok(outcomes)
}

/// Attach the labelling computed by `is_choice_free`.
pub fn with_lambda<L: Clone + PartialEq + fmt::Display>(a: &Automaton<L>, lambda: &[Lambda]) -> Automaton<L> {
    let mut b = a.clone();
    for (t, &l) in b.transitions.iter_mut().zip(lambda) {
        t.lambda = Some(l);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::State;

    fn state(name: &str) -> State {
        State::new(name, 0)
    }

    /// The letter automaton with the black transitions, optionally with
    /// the extra `q0 -b-> (q5)`, `q5 -c-> ()`.
    fn letters(extra: bool) -> Automaton<String> {
        let mut a: Automaton<String> = Automaton::new(state("q0"));
        let q: Vec<usize> = (1..=5).map(|i| a.add_state(state(&format!("q{i}")))).collect();
        let (q1, q2, q3, q4, q5) = (q[0], q[1], q[2], q[3], q[4]);
        a.add_transition(0, "a".into(), vec![0, q1], None);
        a.add_transition(q1, "b".into(), vec![q1], None);
        a.add_transition(q1, "c".into(), vec![], None);
        a.add_transition(0, "b".into(), vec![q2], None);
        a.add_transition(q2, "a".into(), vec![q2, q2], None);
        a.add_transition(q2, "b".into(), vec![q3], None);
        a.add_transition(q2, "b".into(), vec![q4], None);
        a.add_transition(q3, "c".into(), vec![], None);
        a.add_transition(q4, "c".into(), vec![], None);
        if extra {
            a.add_transition(0, "b".into(), vec![q5], None);
            a.add_transition(q5, "c".into(), vec![], None);
        } else {
            a.states.pop();
        }
        a
    }

    #[test]
    fn letter_automaton_is_choice_free() {
        let a = letters(false);
        let lambda = is_choice_free(&a).unwrap();
        let dump = with_lambda(&a, &lambda).dump();
        let ones: Vec<&String> = dump.iter().filter(|l| l.ends_with("(1)")).collect();
        assert_eq!(ones, vec!["q0 --[b]--> (q2) (1)"]);
    }

    #[test]
    fn extension_violates_and_decomposes() {
        let a = letters(true);
        assert_eq!(
            is_choice_free(&a),
            Err(ChoiceFreeViolation::SeveralExits {
                component: vec!["q0".into()],
                exits: 2
            })
        );
        let parts = choice_free_decompose(&a).unwrap();
        assert_eq!(parts.len(), 2);
        let a1 = parts[0].dump();
        assert!(a1.contains(&"q0 --[b]--> (q2) (1)".to_string()));
        assert_eq!(a1.iter().filter(|l| l.ends_with("(1)")).count(), 1);
        assert!(!a1.iter().any(|l| l.contains("q5")));
        assert_eq!(
            parts[1].dump(),
            vec![
                "q0 --[a]--> (q0,q1) (∞)",
                "q1 --[b]--> (q1) (∞)",
                "q1 --[c]--> () (∞)",
                "q0 --[b]--> (q5) (1)",
                "q5 --[c]--> () (1)",
            ]
        );
    }

    #[test]
    fn shared_components_are_copied() {
        let mut a: Automaton<String> = Automaton::new(state("r"));
        let p = a.add_state(state("p"));
        a.add_transition(0, "f".into(), vec![p, p], None);
        a.add_transition(p, "g".into(), vec![p], None);
        a.add_transition(p, "c".into(), vec![], None);
        assert!(is_choice_free(&a).is_err());
        let parts = choice_free_decompose(&a).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].states.len(), 3);
        assert!(parts[0].dump()[0].starts_with("r --[f]--> (p#1,p#2)"));
    }
}

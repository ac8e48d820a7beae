//! Elimination of persistent variables: stripping 1-transitions, removing
//! equalities with non-persistent variables, then annotating, splitting
//! and projecting away the persistent variables.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{choice_free_decompose, is_choice_free, label_eq, Automaton, Lambda, PVar, Pos, Profile, Qpf, SigmaAutomaton, State, Transition};
use crate::error::{Error, Result};
use crate::syntax::Atom;

const MAX_SPLITS: usize = 10_000;

fn is_one(t: &Transition<Qpf>) -> bool {
    t.lambda == Some(Lambda::One)
}

/// Drop relation and disequality atoms from the labels of 1-transitions.
pub fn stage1_strip(a: &SigmaAutomaton) -> SigmaAutomaton {
    let mut b = a.clone();
    for t in b.transitions.iter_mut().filter(|t| is_one(t)) {
        t.label.0.retain(|x| matches!(x, Atom::Eq(..)));
    }
    b
}

fn max_y(label: &Qpf) -> usize {
    label
        .0
        .iter()
        .flat_map(|x| x.vars())
        .filter_map(|v| match v {
            PVar::Y(k) => Some(*k),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

/// In 1-transitions, detach non-persistent parameters from persistent
/// child variables and forget every equality over a non-persistent one.
/// Fresh variables are numbered apart from those of all 1-transitions.
pub fn stage2_remove_nonpersistent_equalities(a: &SigmaAutomaton, prof: &Profile) -> SigmaAutomaton {
    let mut b = a.clone();
    let mut fresh = b.transitions.iter().filter(|t| is_one(t)).map(|t| max_y(&t.label)).max().unwrap_or(0);
    for t in b.transitions.iter_mut().filter(|t| is_one(t)) {
        let persistent = |v: &PVar| match *v {
            PVar::X(Pos::Eps, j) => prof[t.source].contains(&j),
            PVar::X(Pos::Child(i), j) => prof[t.targets[i - 1]].contains(&j),
            PVar::Y(_) => true,
        };
        let mut sub: BTreeMap<PVar, PVar> = BTreeMap::new();
        for x in &t.label.0 {
            if let Atom::Eq(u, v) = x {
                for (p, c) in [(u, v), (v, u)] {
                    if matches!(p, PVar::X(Pos::Eps, _))
                        && !persistent(p)
                        && matches!(c, PVar::X(Pos::Child(_), _))
                        && persistent(c)
                        && !sub.contains_key(p)
                    {
                        fresh += 1;
                        sub.insert(*p, PVar::Y(fresh));
                    }
                }
            }
        }
        let label: Vec<Atom<PVar>> = t.label.0.iter().map(|x| x.map(|v| *sub.get(v).unwrap_or(v))).collect();
        t.label = Qpf(
            label
                .into_iter()
                .filter(|x| match x {
                    Atom::Eq(u, v) => persistent(u) && persistent(v),
                    _ => true,
                })
                .collect(),
        );
    }
    b
}

/// Rename the node-local variables of all 1-transitions apart, into
/// `y_1, ..., y_M`; returns `M`. Done before the equalities are pruned, so
/// that every variable of the rules keeps a number.
pub fn rename_one_transition_ys(a: &SigmaAutomaton) -> (SigmaAutomaton, usize) {
    let mut b = a.clone();
    let mut next = 0;
    for t in b.transitions.iter_mut().filter(|t| is_one(t)) {
        let ys: BTreeSet<usize> = t
            .label
            .0
            .iter()
            .flat_map(|x| x.vars())
            .filter_map(|v| match v {
                PVar::Y(k) => Some(*k),
                _ => None,
            })
            .collect();
        let map: BTreeMap<usize, usize> = ys
            .into_iter()
            .map(|k| {
                next += 1;
                (k, next)
            })
            .collect();
        t.label = Qpf(
            t.label
                .0
                .iter()
                .map(|x| {
                    x.map(|v| match v {
                        PVar::Y(k) => PVar::Y(map[k]),
                        other => *other,
                    })
                })
                .collect(),
        );
    }
    (b, next)
}

/// Annotate states with the 1-transition variables their persistent
/// parameters are bound to. Expects 1-transition variables renamed apart.
pub fn stage3_annotate(a: &SigmaAutomaton, prof: &Profile) -> SigmaAutomaton {
    let eqs: Vec<_> = a.transitions.iter().map(|t| label_eq(&t.label)).collect();
    let root = State {
        annotation: Some(BTreeMap::new()),
        ..a.states[a.initial].clone()
    };
    let mut out: SigmaAutomaton = Automaton::new(root.clone());
    let mut index: BTreeMap<(usize, BTreeMap<usize, usize>), usize> = BTreeMap::from([((a.initial, BTreeMap::new()), 0)]);
    let mut queue = VecDeque::from([(a.initial, BTreeMap::new())]);
    while let Some((q, a0)) = queue.pop_front() {
        let src = index[&(q, a0.clone())];
        for (ti, t) in a.transitions.iter().enumerate().filter(|(_, t)| t.source == q) {
            let eq = &eqs[ti];
            let mut targets = Vec::with_capacity(t.targets.len());
            for (k, &r) in t.targets.iter().enumerate() {
                let positions: Vec<usize> = if is_one(t) {
                    prof[r].iter().copied().collect()
                } else {
                    (1..=a.states[r].arity).collect()
                };
                let mut ak = BTreeMap::new();
                for i in positions {
                    let xk = PVar::child(k + 1, i);
                    let from_param = a0.iter().find(|(j, _)| eq.same(&xk, &PVar::eps(**j))).map(|(_, m)| *m);
                    let from_local = || {
                        if !is_one(t) {
                            return None;
                        }
                        eq.class_of(&xk).iter().find_map(|v| match v {
                            PVar::Y(m) => Some(*m),
                            _ => None,
                        })
                    };
                    if let Some(m) = from_param.or_else(from_local) {
                        ak.insert(i, m);
                    }
                }
                let key = (r, ak.clone());
                let id = match index.get(&key) {
                    Some(&id) => id,
                    None => {
                        let id = out.add_state(State {
                            annotation: Some(ak.clone()),
                            ..a.states[r].clone()
                        });
                        index.insert(key.clone(), id);
                        queue.push_back(key);
                        id
                    }
                };
                targets.push(id);
            }
            out.add_transition(src, t.label.clone(), targets, t.lambda);
        }
    }
    out
}

/// Split the annotated automaton by choosing one annotated copy of each
/// 1-transition; selections that are not trim are dropped.
pub fn stage3_split(annotated: &SigmaAutomaton, original: &SigmaAutomaton) -> Result<Vec<SigmaAutomaton>> {
    // group annotated 1-transitions by the transition they copy
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (ti, t) in annotated.transitions.iter().enumerate().filter(|(_, t)| is_one(t)) {
        let base = annotated.states[t.source].name.clone();
        let orig = original
            .transitions
            .iter()
            .position(|o| {
                is_one(o)
                    && original.states[o.source].name == base
                    && o.label == t.label
                    && o.targets.len() == t.targets.len()
                    && o.targets.iter().zip(&t.targets).all(|(&x, &y)| original.states[x].name == annotated.states[y].name)
            })
            .ok_or_else(|| Error::Invariant("annotated 1-transition without original".into()))?;
        groups.entry(orig).or_default().push(ti);
    }
    let total: usize = groups.values().map(|g| g.len()).product();
    if total > MAX_SPLITS {
        return Err(Error::CapExceeded(format!("{total} annotated selections")));
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let mut out: Vec<SigmaAutomaton> = Vec::new();
    let mut choice = vec![0usize; groups.len()];
    loop {
        let chosen: BTreeSet<usize> = groups.iter().zip(&choice).map(|(g, &c)| g[c]).collect();
        let mut b = annotated.clone();
        b.transitions = annotated
            .transitions
            .iter()
            .enumerate()
            .filter(|(ti, t)| !is_one(t) || chosen.contains(ti))
            .map(|(_, t)| t.clone())
            .collect();
        if let Some(tb) = b.trim() {
            if tb.delta1_len() == chosen.len() && !out.contains(&tb) {
                let lambda = is_choice_free(&tb).map_err(|v| Error::Invariant(format!("split: {v}")))?;
                if lambda.iter().zip(&tb.transitions).all(|(l, t)| Some(*l) == t.lambda) {
                    out.push(tb);
                } else {
                    // relabel by a second decomposition; keeps the language
                    for part in choice_free_decompose(&tb)? {
                        if !out.contains(&part) {
                            out.push(part);
                        }
                    }
                }
            }
        }
        // next selection
        let mut i = 0;
        loop {
            if i == groups.len() {
                return Ok(out);
            }
            choice[i] += 1;
            if choice[i] < groups[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

fn relation_name(r: &str, g: &BTreeMap<usize, usize>) -> String {
    if g.is_empty() {
        return r.to_string();
    }
    let parts: Vec<String> = g.iter().map(|(p, m)| format!("{p}:{m}")).collect();
    format!("{r}@{{{}}}", parts.join(","))
}

/// Project the persistent variables out of the labels, renaming relation
/// atoms after the annotation of their persistent arguments.
pub fn stage3_remove_persistent(a: &SigmaAutomaton) -> Result<SigmaAutomaton> {
    let ann = |q: usize| a.states[q].annotation.clone().unwrap_or_default();
    let mut b = a.clone();
    for s in &mut b.states {
        s.arity -= s.annotation.as_ref().map_or(0, |m| m.len());
    }
    for (t, bt) in a.transitions.iter().zip(b.transitions.iter_mut()) {
        let a0 = ann(t.source);
        let kids: Vec<BTreeMap<usize, usize>> = t.targets.iter().map(|&r| ann(r)).collect();
        // the annotation index of a persistent variable
        let persistent = |v: &PVar| -> Option<usize> {
            match *v {
                PVar::X(Pos::Eps, j) => a0.get(&j).copied(),
                PVar::X(Pos::Child(i), j) => kids[i - 1].get(&j).copied(),
                PVar::Y(m) if is_one(t) => Some(m),
                PVar::Y(_) => None,
            }
        };
        let zeta = |v: &PVar| -> PVar {
            match *v {
                PVar::X(Pos::Eps, k) => PVar::eps(k - a0.keys().filter(|&&j| j < k).count()),
                PVar::X(Pos::Child(i), k) => PVar::child(i, k - kids[i - 1].keys().filter(|&&j| j < k).count()),
                y => y,
            }
        };
        let mut label = Vec::new();
        for x in &t.label.0 {
            match x {
                Atom::Rel(r, args) => {
                    let mut g = BTreeMap::new();
                    let mut rest = Vec::new();
                    for (p, v) in args.iter().enumerate() {
                        match persistent(v) {
                            Some(m) => {
                                g.insert(p + 1, m);
                            }
                            None => rest.push(zeta(v)),
                        }
                    }
                    if rest.is_empty() {
                        return Err(Error::AllPersistentAtom(x.to_string()));
                    }
                    label.push(Atom::Rel(relation_name(r, &g), rest));
                }
                Atom::Eq(u, v) | Atom::Neq(u, v) => {
                    match (persistent(u).is_some(), persistent(v).is_some()) {
                        (false, false) => label.push(x.map(zeta)),
                        (true, true) => {}
                        _ if is_one(t) => {}
                        _ => {
                            return Err(Error::Invariant(format!("equality {x} mixes persistent and other variables")));
                        }
                    }
                }
                Atom::Emp => {}
                Atom::Pred(..) => return Err(Error::Invariant("predicate atom in a label".into())),
            }
        }
        if is_one(t) && !label.is_empty() {
            return Err(Error::Invariant(format!("1-transition keeps {}", Qpf(label))));
        }
        bt.label = Qpf(label);
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{profile, sid_to_automaton};
    use crate::parse::parse_sid;

    pub(crate) const RUNNING: &str = "rel e/2\npred A/0 C1/3 C2/3\n\
        A <- exists y1 y2 y3 . C1(y1,y2,y3)\n\
        C1(x1,x2,x3) <- exists y4 . e(x1,y4) * e(x3,y4) * C1(y4,x2,x3)\n\
        C1(x1,x2,x3) <- exists y5 . e(x1,x2) * C2(x2,y5,x3)\n\
        C2(x1,x2,x3) <- exists y6 . e(x1,y6) * e(x3,y6) * C2(y6,x2,x3)\n\
        C2(x1,x2,x3) <- e(x1,x2)";

    fn running() -> SigmaAutomaton {
        let sid = parse_sid(RUNNING).unwrap();
        let parts = choice_free_decompose(&sid_to_automaton(&sid, "A").unwrap()).unwrap();
        assert_eq!(parts.len(), 1);
        parts.into_iter().next().unwrap()
    }

    #[test]
    fn running_example_stages() {
        let a = running();
        assert_eq!(
            a.dump(),
            vec![
                "A --[y_1 = x^1_1 * y_2 = x^1_2 * y_3 = x^1_3]--> (C1) (1)",
                "C1 --[e(x_1,y_4) * e(x_3,y_4) * y_4 = x^1_1 * x_2 = x^1_2 * x_3 = x^1_3]--> (C1) (∞)",
                "C1 --[e(x_1,x_2) * x_2 = x^1_1 * y_5 = x^1_2 * x_3 = x^1_3]--> (C2) (1)",
                "C2 --[e(x_1,y_6) * e(x_3,y_6) * y_6 = x^1_1 * x_2 = x^1_2 * x_3 = x^1_3]--> (C2) (∞)",
                "C2 --[e(x_1,x_2)]--> () (1)",
            ]
        );
        let s1 = stage1_strip(&a);
        assert_eq!(s1.dump()[2], "C1 --[x_2 = x^1_1 * y_5 = x^1_2 * x_3 = x^1_3]--> (C2) (1)");
        assert_eq!(s1.dump()[4], "C2 --[emp]--> () (1)");
        let prof = profile(&s1);
        assert_eq!(prof, vec![BTreeSet::new(), BTreeSet::from([2, 3]), BTreeSet::from([2, 3])]);
        let s2 = stage2_remove_nonpersistent_equalities(&s1, &prof);
        assert_eq!(s2.dump()[2], "C1 --[y_5 = x^1_2 * x_3 = x^1_3]--> (C2) (1)");
        let (s1, m) = rename_one_transition_ys(&s1);
        assert_eq!(m, 4);
        let s2 = stage2_remove_nonpersistent_equalities(&s1, &prof);
        assert_eq!(s2.dump()[2], "C1 --[y_4 = x^1_2 * x_3 = x^1_3]--> (C2) (1)");
        let ann = stage3_annotate(&s2, &prof);
        let split = stage3_split(&ann, &s2).unwrap();
        assert_eq!(split.len(), 1);
        let c1 = &split[0].states[1];
        assert_eq!(c1.display_name(), "(C1,{2:2,3:3})");
        let bar = stage3_remove_persistent(&split[0]).unwrap();
        assert_eq!(bar.states[1].arity, 1);
        assert_eq!(
            bar.dump(),
            vec![
                "(A,{}) --[emp]--> ((C1,{2:2,3:3})) (1)",
                "(C1,{2:2,3:3}) --[e(x_1,y_4) * e@{1:3}(y_4) * y_4 = x^1_1]--> ((C1,{2:2,3:3})) (∞)",
                "(C1,{2:2,3:3}) --[emp]--> ((C2,{2:4,3:3})) (1)",
                "(C2,{2:4,3:3}) --[e(x_1,y_6) * e@{1:3}(y_6) * y_6 = x^1_1]--> ((C2,{2:4,3:3})) (∞)",
                "(C2,{2:4,3:3}) --[emp]--> () (1)",
            ]
        );
    }

    #[test]
    fn all_persistent_atom_is_reported() {
        let mut a: SigmaAutomaton = Automaton::new(State {
            annotation: Some(BTreeMap::from([(1, 1)])),
            ..State::new("q", 1)
        });
        a.add_transition(0, Qpf(vec![Atom::Rel("a".into(), vec![PVar::eps(1)]), Atom::Eq(PVar::eps(1), PVar::child(1, 1))]), vec![0], Some(Lambda::Inf));
        a.add_transition(0, Qpf(vec![]), vec![], Some(Lambda::One));
        assert!(matches!(stage3_remove_persistent(&a), Err(Error::AllPersistentAtom(_))));
    }
}

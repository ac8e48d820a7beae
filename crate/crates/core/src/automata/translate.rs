use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;

use super::{Automaton, PVar, Pos, Qpf, SigmaAutomaton, State, Transition};
use crate::error::{Error, Result};
use crate::syntax::{eq_closure, Atom, Rule, Sid, Var};

/// Index of an existential: its numeric suffix when every existential of
/// the rule is a distinct `yK`, its position otherwise.
fn existential_indices(exists: &[Var]) -> Vec<usize> {
    let numbered: Vec<Option<usize>> = exists
        .iter()
        .map(|y| y.strip_prefix('y').and_then(|k| k.parse::<usize>().ok()).filter(|&k| k > 0))
        .collect();
    let distinct: BTreeSet<usize> = numbered.iter().flatten().copied().collect();
    if numbered.iter().all(|k| k.is_some()) && distinct.len() == exists.len() {
        numbered.into_iter().map(|k| k.unwrap()).collect()
    } else {
        (1..=exists.len()).collect()
    }
}

fn undeclared(p: &str) -> Error {
    Error::UndeclaredSymbol {
        line: 0,
        column: 0,
        symbol: p.to_string(),
    }
}

/// One state per predicate, one transition per rule; the label is the
/// predicate-free part plus `z = x^i_j` for each argument `z` of the
/// i-th predicate atom.
pub fn sid_to_automaton(sid: &Sid, root: &str) -> Result<SigmaAutomaton> {
    let root_arity = sid.arity(root).ok_or_else(|| undeclared(root))?;
    let mut a = Automaton::new(State::new(root, root_arity));
    let mut index: BTreeMap<&str, usize> = BTreeMap::from([(root, 0)]);
    for (p, &n) in &sid.predicates {
        if p != root {
            index.insert(p, a.add_state(State::new(p.clone(), n)));
        }
    }
    for rule in &sid.rules {
        let mut sub: BTreeMap<&Var, PVar> = BTreeMap::new();
        for (j, x) in rule.params.iter().enumerate() {
            sub.insert(x, PVar::eps(j + 1));
        }
        for (y, k) in rule.exists.iter().zip(existential_indices(&rule.exists)) {
            sub.insert(y, PVar::Y(k));
        }
        let lookup = |v: &Var| -> Result<PVar> { sub.get(v).copied().ok_or_else(|| Error::UnboundVariable {
                head: rule.head.clone(),
                var: v.clone(),
            }) };
        let mut label = Vec::new();
        let mut targets = Vec::new();
        for atom in rule.body.iter().filter(|a| !matches!(a, Atom::Emp | Atom::Pred(..))) {
            let vars: Vec<PVar> = atom.vars().into_iter().map(lookup).collect::<Result<_>>()?;
            let mut it = vars.into_iter();
            label.push(atom.map(|_| it.next().unwrap()));
        }
        for (i, (p, args)) in rule.pred_atoms().enumerate() {
            let q = *index.get(p.as_str()).ok_or_else(|| undeclared(p))?;
            targets.push(q);
            for (j, z) in args.iter().enumerate() {
                label.push(Atom::Eq(lookup(z)?, PVar::child(i + 1, j + 1)));
            }
        }
        let src = *index.get(rule.head.as_str()).ok_or_else(|| undeclared(&rule.head))?;
        a.add_transition(src, Qpf(label), targets, None);
    }
    Ok(a)
}

fn var_name(v: &PVar) -> Var {
    match v {
        PVar::X(Pos::Eps, j) => format!("x{j}"),
        PVar::X(Pos::Child(i), j) => format!("z{i}_{j}"),
        PVar::Y(j) => format!("y{j}"),
    }
}

/// Inverse translation: one rule per transition, with parameters `x_j` and
/// the i-th child called on `x^i_1, ..., x^i_n`.
pub fn automaton_to_sid(a: &SigmaAutomaton) -> (Sid, String) {
    let names: Vec<String> = a.states.iter().map(|s| s.display_name()).collect();
    let mut sid = Sid::default();
    sid.predicates.insert(names[a.initial].clone(), a.states[a.initial].arity);
    for (q, n) in names.iter().enumerate() {
        sid.predicates.entry(n.clone()).or_insert(a.states[q].arity);
    }
    let mut rels: IndexMap<String, usize> = IndexMap::new();
    for t in &a.transitions {
        let arity = a.states[t.source].arity;
        let params: Vec<PVar> = (1..=arity).map(PVar::eps).collect();
        let mut vars: BTreeSet<PVar> = t.label.0.iter().flat_map(|x| x.vars().into_iter().copied()).collect();
        let mut body: Vec<Atom<Var>> = t.label.0.iter().map(|x| x.map(var_name)).collect();
        for x in &t.label.0 {
            if let Atom::Rel(r, args) = x {
                rels.entry(r.clone()).or_insert(args.len());
            }
        }
        for (i, &c) in t.targets.iter().enumerate() {
            let args: Vec<PVar> = (1..=a.states[c].arity).map(|j| PVar::child(i + 1, j)).collect();
            vars.extend(args.iter().copied());
            body.push(Atom::Pred(names[c].clone(), args.iter().map(var_name).collect()));
        }
        let mut exists: Vec<&PVar> = vars.iter().filter(|v| !params.contains(v)).collect();
        exists.sort_by_key(|v| (matches!(v, PVar::X(Pos::Child(_), _)), **v));
        let exists: Vec<Var> = exists.into_iter().map(var_name).collect();
        sid.rules.push(Rule {
            head: names[t.source].clone(),
            params: params.iter().map(var_name).collect(),
            exists,
            body,
        });
    }
    sid.relations = rels;
    (sid, names[a.initial].clone())
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

/// Compose `outer` with `inner` plugged in at child position `c`
/// (1-based); `inner_children` is the number of children of `inner`.
fn splice(outer: &Qpf, c: usize, inner: &Qpf, inner_children: usize) -> Qpf {
    let base = max_y(outer);
    let width = inner
        .0
        .iter()
        .flat_map(|x| x.vars())
        .filter_map(|v| match v {
            PVar::X(Pos::Eps, j) => Some(*j),
            _ => None,
        })
        .chain(outer.0.iter().flat_map(|x| x.vars()).filter_map(|v| match v {
            PVar::X(Pos::Child(i), j) if *i == c => Some(*j),
            _ => None,
        }))
        .max()
        .unwrap_or(0);
    let mut atoms: Vec<Atom<PVar>> = outer
        .0
        .iter()
        .map(|x| {
            x.map(|v| match *v {
                PVar::X(Pos::Child(i), j) if i == c => PVar::Y(base + j),
                PVar::X(Pos::Child(i), j) if i > c => PVar::child(i + inner_children - 1, j),
                other => other,
            })
        })
        .collect();
    atoms.extend(inner.0.iter().map(|x| {
        x.map(|v| match *v {
            PVar::X(Pos::Eps, j) => PVar::Y(base + j),
            PVar::Y(m) => PVar::Y(base + width + m),
            PVar::X(Pos::Child(i), j) => PVar::child(i + c - 1, j),
        })
    }));
    Qpf(atoms)
}

/// Substitute node-local variables that merely relay an equality: in each
/// class the least `x_j` (or else the least `y_j`) replaces the `y`s.
pub(crate) fn canonical_label(label: &Qpf) -> Qpf {
    let eq = eq_closure(&label.0);
    let mut sub: BTreeMap<PVar, PVar> = BTreeMap::new();
    for class in eq.classes() {
        let rep = class
            .iter()
            .find(|v| matches!(v, PVar::X(Pos::Eps, _)))
            .or_else(|| class.iter().find(|v| matches!(v, PVar::Y(_))));
        if let Some(&rep) = rep {
            for &v in class.iter().filter(|v| matches!(v, PVar::Y(_))) {
                sub.insert(v, rep);
            }
        }
    }
    let mut out: Vec<Atom<PVar>> = Vec::new();
    for x in &label.0 {
        let y = x.map(|v| *sub.get(v).unwrap_or(v));
        match &y {
            Atom::Eq(u, v) if u == v => {}
            Atom::Eq(u, v) if out.contains(&y) || out.contains(&Atom::Eq(*v, *u)) => {}
            Atom::Emp => {}
            _ => out.push(y),
        }
    }
    Qpf(out)
}

/// Inline every non-initial state whose component has no internal edge,
/// so that afterwards only the initial state may sit in a trivial
/// component.
pub fn eliminate_trivial_sccs(a: &SigmaAutomaton) -> SigmaAutomaton {
    let mut a = a.clone();
    loop {
        let info = a.scc_info();
        let victim = (0..a.states.len()).find(|&q| q != a.initial && info.trivial[info.component_of[q]]);
        let Some(q) = victim else {
            return a;
        };
        let outs: Vec<Transition<Qpf>> = a.outgoing(q).cloned().collect();
        let mut next = Vec::new();
        for t in &a.transitions {
            if t.source == q {
                continue;
            }
            // expand every occurrence of q among the targets
            let mut work = vec![t.clone()];
            while let Some(u) = work.pop() {
                let Some(pos) = u.targets.iter().position(|&r| r == q) else {
                    next.push(u);
                    continue;
                };
                for o in outs.iter().rev() {
                    let mut targets = u.targets[..pos].to_vec();
                    targets.extend_from_slice(&o.targets);
                    targets.extend_from_slice(&u.targets[pos + 1..]);
                    work.push(Transition {
                        source: u.source,
                        targets,
                        label: canonical_label(&splice(&u.label, pos + 1, &o.label, o.targets.len())),
                        lambda: u.lambda,
                    });
                }
            }
        }
        let remap: Vec<Option<usize>> = (0..a.states.len())
            .scan(0, |k, r| {
                Some(if r == q {
                    None
                } else {
                    *k += 1;
                    Some(*k - 1)
                })
            })
            .collect();
        let mut b = Automaton {
            states: a.states.iter().enumerate().filter(|(r, _)| *r != q).map(|(_, s)| s.clone()).collect(),
            initial: remap[a.initial].unwrap(),
            transitions: vec![],
        };
        for t in next {
            b.add_transition(
                remap[t.source].unwrap(),
                t.label,
                t.targets.iter().map(|&r| remap[r].unwrap()).collect(),
                t.lambda,
            );
        }
        a = b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_sid;

    const SID_TA: &str = "rel e/2\npred A/0 B/3\n\
        A <- exists y1 y2 y3 . B(y1,y2,y3)\n\
        B(x1,x2,x3) <- exists y4 . e(x1,x3) * e(x1,y4) * B(y4,x2,x3)\n\
        B(x1,x2,x3) <- e(x1,x3) * e(x1,x2) * e(x2,x3)";

    #[test]
    fn sid_ta_transitions() {
        let sid = parse_sid(SID_TA).unwrap();
        let a = sid_to_automaton(&sid, "A").unwrap();
        assert_eq!(
            a.dump(),
            vec![
                "A --[y_1 = x^1_1 * y_2 = x^1_2 * y_3 = x^1_3]--> (B)",
                "B --[e(x_1,x_3) * e(x_1,y_4) * y_4 = x^1_1 * x_2 = x^1_2 * x_3 = x^1_3]--> (B)",
                "B --[e(x_1,x_3) * e(x_1,x_2) * e(x_2,x_3)]--> ()",
            ]
        );
    }

    #[test]
    fn round_trip_keeps_shape() {
        let sid = parse_sid(SID_TA).unwrap();
        let a = sid_to_automaton(&sid, "A").unwrap();
        let (back, root) = automaton_to_sid(&a);
        assert_eq!(root, "A");
        assert_eq!(back.rules.len(), 3);
        assert_eq!(
            back.rules[1].to_string(),
            "B(x1,x2,x3) <- exists y4 z1_1 z1_2 z1_3 . e(x1,x3) * e(x1,y4) * y4 = z1_1 * x2 = z1_2 * x3 = z1_3 * B(z1_1,z1_2,z1_3)"
        );
    }

    #[test]
    fn trivial_components_are_inlined() {
        let sid = parse_sid(
            "rel a/1 e/2\npred A/0 B/1 C/1\n\
             A <- exists y . B(y)\n\
             B(x1) <- exists y . e(x1,y) * C(y)\n\
             C(x1) <- exists y . a(x1) * e(x1,y) * C(y)\n\
             C(x1) <- a(x1)",
        )
        .unwrap();
        let a = sid_to_automaton(&sid, "A").unwrap();
        let b = eliminate_trivial_sccs(&a);
        assert_eq!(b.states.len(), 2);
        assert_eq!(b.dump()[0], "A --[e(y_1,y_3) * y_3 = x^1_1]--> (C)");
    }
}

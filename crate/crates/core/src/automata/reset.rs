use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{label_eq, Lambda, PVar, Pos, Profile, SigmaAutomaton};
use crate::error::{Error, Result};
use crate::partition::Equiv;
use crate::syntax::{eq_closure, Atom};

/// A variable of a tree formula: the node it belongs to (a path of 1-based
/// child indices) and its local name (`x_j` or `y_j`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GVar {
    pub node: Vec<usize>,
    pub var: PVar,
}

impl GVar {
    pub fn lift(node: &[usize], v: PVar) -> GVar {
        match v {
            PVar::X(Pos::Child(i), j) => {
                let mut n = node.to_vec();
                n.push(i);
                GVar {
                    node: n,
                    var: PVar::eps(j),
                }
            }
            other => GVar {
                node: node.to_vec(),
                var: other,
            },
        }
    }
}

/// A partial run with one open frontier position labelled by `state`;
/// every other node carries a transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResetContext {
    pub state: usize,
    pub nodes: Vec<(Vec<usize>, usize)>,
    pub open: Vec<usize>,
}

/// The characteristic formula of the tree underlying a context.
pub fn charform(a: &SigmaAutomaton, ctx: &ResetContext) -> Vec<Atom<GVar>> {
    ctx.nodes
        .iter()
        .flat_map(|(node, ti)| a.transitions[*ti].label.0.iter().map(move |x| x.map(|v| GVar::lift(node, *v))))
        .collect()
}

/// For each state, a transition starting a smallest complete run, using
/// ∞-transitions where possible.
fn closures(a: &SigmaAutomaton) -> Vec<Option<usize>> {
    let mut best: Vec<Option<usize>> = vec![None; a.states.len()];
    for only_inf in [true, false] {
        loop {
            let mut changed = false;
            for (ti, t) in a.transitions.iter().enumerate() {
                if best[t.source].is_some() || (only_inf && t.lambda != Some(Lambda::Inf)) {
                    continue;
                }
                if t.targets.iter().all(|&r| best[r].is_some()) {
                    best[t.source] = Some(ti);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
    best
}

fn close(a: &SigmaAutomaton, best: &[Option<usize>], at: Vec<usize>, q: usize, out: &mut Vec<(Vec<usize>, usize)>) {
    let ti = best[q].expect("closure exists");
    for (i, &r) in a.transitions[ti].targets.iter().enumerate() {
        let mut child = at.clone();
        child.push(i + 1);
        close(a, best, child, r, out);
    }
    out.push((at, ti));
}

fn is_reset(a: &SigmaAutomaton, ctx: &ResetContext, persistent: &BTreeSet<usize>) -> bool {
    let eq: Equiv<GVar> = eq_closure(&charform(a, ctx));
    let n = a.states[ctx.state].arity;
    let root = |j| GVar::lift(&[], PVar::eps(j));
    let open = |j| GVar {
        node: ctx.open.clone(),
        var: PVar::eps(j),
    };
    persistent.iter().all(|&j| eq.same(&root(j), &open(j)))
        && (1..=n).all(|j| (1..=n).filter(|k| !persistent.contains(k)).all(|k| !eq.same(&root(j), &open(k))))
}

/// A `q`-reset: a nonempty context of ∞-transitions from `q` back to `q`
/// along which exactly the persistent parameters are carried over.
pub fn find_reset(a: &SigmaAutomaton, prof: &Profile, q: usize) -> Result<ResetContext> {
    let best = closures(a);
    let persistent = &prof[q];
    let n = a.states[q].arity;
    let start: Key = (q, (1..=n).map(|j| (j, j)).collect());
    let mut parent: BTreeMap<Key, Option<(Key, usize, usize)>> = BTreeMap::from([(start.clone(), None)]);
    let mut queue = VecDeque::from([start]);
    let eqs: Vec<Equiv<PVar>> = a.transitions.iter().map(|t| label_eq(&t.label)).collect();
    while let Some(key) = queue.pop_front() {
        let (r, rel) = key.clone();
        for (ti, t) in a.transitions.iter().enumerate() {
            if t.source != r || t.lambda != Some(Lambda::Inf) {
                continue;
            }
            for (c, &s) in t.targets.iter().enumerate() {
                let offpath_ok = t.targets.iter().enumerate().all(|(i, &o)| i == c || best[o].is_some());
                if !offpath_ok {
                    continue;
                }
                let next_rel: BTreeSet<(usize, usize)> = rel
                    .iter()
                    .flat_map(|&(j, k)| {
                        let eq = &eqs[ti];
                        (1..=a.states[s].arity)
                            .filter(move |&m| eq.same(&PVar::eps(k), &PVar::child(c + 1, m)))
                            .map(move |m| (j, m))
                    })
                    .collect();
                let next: Key = (s, next_rel);
                let step = Some((key.clone(), ti, c));
                if s == q {
                    let ok = persistent.iter().all(|&j| next.1.contains(&(j, j)))
                        && next.1.iter().all(|(_, k)| persistent.contains(k));
                    if ok {
                        let ctx = rebuild(a, &best, &parent, step.clone(), q);
                        if is_reset(a, &ctx, persistent) {
                            return Ok(ctx);
                        }
                    }
                }
                if !parent.contains_key(&next) {
                    parent.insert(next.clone(), step);
                    queue.push_back(next);
                }
            }
        }
    }
    Err(Error::NoReset(a.states[q].display_name()))
}

type Key = (usize, BTreeSet<(usize, usize)>);

fn rebuild(
    a: &SigmaAutomaton,
    best: &[Option<usize>],
    parent: &BTreeMap<Key, Option<(Key, usize, usize)>>,
    last: Option<(Key, usize, usize)>,
    q: usize,
) -> ResetContext {
    // steps from the root down
    let mut steps = Vec::new();
    let mut cur = last;
    while let Some((key, ti, c)) = cur {
        steps.push((ti, c));
        cur = parent[&key].clone();
    }
    steps.reverse();
    let mut nodes = Vec::new();
    let mut at: Vec<usize> = Vec::new();
    for (ti, c) in steps {
        nodes.push((at.clone(), ti));
        for (i, &o) in a.transitions[ti].targets.iter().enumerate() {
            if i != c {
                let mut child = at.clone();
                child.push(i + 1);
                close(a, best, child, o, &mut nodes);
            }
        }
        at.push(c + 1);
    }
    ResetContext { state: q, nodes, open: at }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{choice_free_decompose, profile, sid_to_automaton};
    use crate::parse::parse_sid;

    #[test]
    fn sid_ta_reset_is_one_step() {
        let sid = parse_sid(
            "rel e/2\npred A/0 B/3\n\
             A <- exists y1 y2 y3 . B(y1,y2,y3)\n\
             B(x1,x2,x3) <- exists y4 . e(x1,x3) * e(x1,y4) * B(y4,x2,x3)\n\
             B(x1,x2,x3) <- e(x1,x3) * e(x1,x2) * e(x2,x3)",
        )
        .unwrap();
        let a = &choice_free_decompose(&sid_to_automaton(&sid, "A").unwrap()).unwrap()[0];
        let prof = profile(a);
        assert_eq!(prof[1], BTreeSet::from([2, 3]));
        let ctx = find_reset(a, &prof, 1).unwrap();
        assert_eq!(ctx.nodes.len(), 1);
        assert_eq!(ctx.open, vec![1]);
    }

    #[test]
    fn reset_may_need_two_steps() {
        // the parameters swap on every step, so only an even number of
        // steps brings them back
        let sid = parse_sid(
            "rel e/2\npred A/0 B/2\n\
             A <- exists y1 y2 . B(y1,y2)\n\
             B(x1,x2) <- e(x1,x2) * B(x2,x1)\n\
             B(x1,x2) <- e(x1,x2)",
        )
        .unwrap();
        let a = &choice_free_decompose(&sid_to_automaton(&sid, "A").unwrap()).unwrap()[0];
        let prof = profile(a);
        let q = a.state_index("B").unwrap();
        assert_eq!(prof[q], BTreeSet::from([1, 2]));
        let ctx = find_reset(a, &prof, q).unwrap();
        assert_eq!(ctx.open, vec![1, 1]);
    }
}

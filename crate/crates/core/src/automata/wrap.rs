use std::collections::BTreeSet;

use super::reset::{charform, find_reset, GVar, ResetContext};
use super::{profile, Lambda, PVar, Qpf, SigmaAutomaton};
use crate::error::Result;
use crate::partition::Equiv;
use crate::syntax::{eq_closure, Atom};

/// Relation atoms of the reset whose arguments all equal parameters of the
/// node at `at`, re-emitted over the variables `emit(i)`.
fn all_st(
    a: &SigmaAutomaton,
    ctx: &ResetContext,
    at: &[usize],
    emit: &dyn Fn(usize) -> PVar,
    out: &mut BTreeSet<Atom<PVar>>,
) {
    let form = charform(a, ctx);
    let eq: Equiv<GVar> = eq_closure(&form);
    let n = a.states[ctx.state].arity;
    for x in &form {
        let Atom::Rel(r, args) = x else {
            continue;
        };
        let choices: Vec<Vec<usize>> = args
            .iter()
            .map(|u| {
                (1..=n)
                    .filter(|&i| {
                        eq.same(
                            u,
                            &GVar {
                                node: at.to_vec(),
                                var: PVar::eps(i),
                            },
                        )
                    })
                    .collect()
            })
            .collect();
        if choices.iter().any(|c| c.is_empty()) {
            continue;
        }
        // every combination of matching parameters
        let mut combos: Vec<Vec<PVar>> = vec![vec![]];
        for c in &choices {
            combos = combos
                .into_iter()
                .flat_map(|pre| {
                    c.iter().map(move |&i| {
                        let mut v = pre.clone();
                        v.push(emit(i));
                        v
                    })
                })
                .collect();
        }
        for args in combos {
            out.insert(Atom::Rel(r.clone(), args));
        }
    }
}

/// Label each 1-transition with the relation atoms that the resets of its
/// source and targets attach to the shared parameters.
pub fn wrap_one_transitions(a: &SigmaAutomaton) -> Result<SigmaAutomaton> {
    let prof = profile(a);
    let info = a.scc_info();
    let nontrivial = |q: usize| !info.trivial[info.component_of[q]];
    let mut b = a.clone();
    for t in b.transitions.iter_mut().filter(|t| t.lambda == Some(Lambda::One)) {
        let mut atoms: BTreeSet<Atom<PVar>> = BTreeSet::new();
        if nontrivial(t.source) {
            let ctx = find_reset(a, &prof, t.source)?;
            all_st(a, &ctx, &[], &PVar::eps, &mut atoms);
        }
        for (j, &q) in t.targets.iter().enumerate() {
            if nontrivial(q) {
                let ctx = find_reset(a, &prof, q)?;
                let open = ctx.open.clone();
                all_st(a, &ctx, &open, &|i| PVar::child(j + 1, i), &mut atoms);
            }
        }
        let mut label = t.label.0.clone();
        label.retain(|x| !matches!(x, Atom::Emp));
        label.extend(atoms);
        t.label = Qpf(label);
    }
    Ok(b)
}

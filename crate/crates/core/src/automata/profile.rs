use std::collections::BTreeSet;

use super::{label_eq, Lambda, PVar, SigmaAutomaton};

/// Per state, the parameter positions (1-based) that are passed on
/// unchanged along every ∞-transition into it.
pub type Profile = Vec<BTreeSet<usize>>;

/// Greatest fixpoint: start from all positions and remove those not
/// provably equal to a persistent position of the source.
pub fn profile(a: &SigmaAutomaton) -> Profile {
    let mut p: Profile = a.states.iter().map(|s| (1..=s.arity).collect()).collect();
    let inf: Vec<_> = a.transitions.iter().filter(|t| t.lambda == Some(Lambda::Inf)).collect();
    let eqs: Vec<_> = inf.iter().map(|t| label_eq(&t.label)).collect();
    loop {
        let mut changed = false;
        for (t, eq) in inf.iter().zip(&eqs) {
            for (k, &r) in t.targets.iter().enumerate() {
                let keep: BTreeSet<usize> = p[r]
                    .iter()
                    .copied()
                    .filter(|&j| p[t.source].iter().any(|&s| eq.same(&PVar::eps(s), &PVar::child(k + 1, j))))
                    .collect();
                if keep.len() != p[r].len() {
                    p[r] = keep;
                    changed = true;
                }
            }
        }
        if !changed {
            return p;
        }
    }
}

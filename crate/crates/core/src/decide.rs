//! The decision pipeline and the bound arithmetic.

use std::collections::HashMap;

use serde::Serialize;

use crate::abstraction::{fixpoint_triples, rgb_condition_check, single_pair_fusion_closure, third_components};
use crate::automata::{
    automaton_to_sid, choice_free_decompose, eliminate_trivial_sccs, profile, rename_one_transition_ys,
    sid_to_automaton, stage1_strip, stage2_remove_nonpersistent_equalities, stage3_annotate,
    stage3_remove_persistent, stage3_split, wrap_one_transitions, SigmaAutomaton,
};
use crate::error::{Error, Result};
use crate::mcs::build_mcs_sid;
use crate::normalize::{normalize, wrap_sentence};
use crate::structures::Color;
use crate::syntax::{measures, Formula, Measures, Sid};

/// The multiset bound used by the decision procedure.
pub const K: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Bounded,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub c1: Color,
    pub c2: Color,
    /// Index of the expandable SID that failed (0 on the fast path).
    pub branch: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub branches: usize,
    /// `|δ¹|` of every final automaton.
    pub delta1: Vec<usize>,
    pub delta1_max: usize,
    pub measures: Measures,
    /// The closed-form bound, when representable.
    pub closed_form: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub kind: Kind,
    /// `None` for unbounded sets, and for bounded ones whose bound
    /// overflows.
    pub bound: Option<u64>,
    pub witness: Option<Witness>,
    pub stats: Stats,
    pub empty: bool,
}

impl Verdict {
    fn bounded(bound: u64) -> Self {
        Verdict {
            kind: Kind::Bounded,
            bound: Some(bound),
            witness: None,
            stats: Stats::default(),
            empty: false,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.kind == Kind::Bounded
    }
}

/// Decide an expandable SID: every canonical triple color of the fusion
/// closure of its connected pieces must meet every other.
pub fn check_expandable_twb(gamma: &Sid, root: &str) -> Result<Verdict> {
    let bound = measures(gamma).max_var_in_rule as u64;
    let (mcs, p) = build_mcs_sid(gamma, root)?;
    let sol = fixpoint_triples(&mcs, K);
    let base = third_components(&sol, &p);
    let closure = single_pair_fusion_closure(K, &base);
    let (ok, pair) = rgb_condition_check(&closure);
    let mut v = Verdict::bounded(bound);
    if !ok {
        let (c1, c2) = pair.expect("a failing check has a witness");
        v.kind = Kind::Unbounded;
        v.bound = None;
        v.witness = Some(Witness { c1, c2, branch: 0 });
    }
    Ok(v)
}

fn pow(b: u64, e: u64) -> Option<u64> {
    u32::try_from(e).ok().and_then(|e| b.checked_pow(e))
}

/// `maxVar + N·M` with `N = max(K, maxRuleArity^K)`.
pub fn closed_form_bound(m: &Measures) -> Option<u64> {
    let (v, ra, rn, pa, xa, pn) = (
        m.max_var_in_rule as u64,
        m.max_rule_arity as u64,
        m.relations_no as u64,
        m.max_pred_arity as u64,
        m.max_rel_arity as u64,
        m.preds_no as u64,
    );
    let mm = per_transition(m)?;
    let k = pn.checked_mul(rn)?.checked_mul(pow(pa, pa.checked_add(xa)?)?)?;
    let n = k.max(pow(ra, k)?);
    v.checked_add(n.checked_mul(mm)?)
}

/// `M = 2·maxVar + (1+maxRuleArity)·relNo·maxPredArity^maxRelArity`.
fn per_transition(m: &Measures) -> Option<u64> {
    let (v, ra, rn, pa, xa) = (
        m.max_var_in_rule as u64,
        m.max_rule_arity as u64,
        m.relations_no as u64,
        m.max_pred_arity as u64,
        m.max_rel_arity as u64,
    );
    let t = (1 + ra).checked_mul(rn)?.checked_mul(pow(pa, xa)?)?;
    (2 * v).checked_add(t)
}

/// The better of the closed form and the instantiation with the observed
/// number of 1-transitions per branch.
pub fn bound_formula(m: &Measures, delta1: &[usize]) -> Result<u64> {
    let observed = delta1.iter().copied().max().unwrap_or(0) as u64;
    let inst = per_transition(m)
        .and_then(|mm| observed.checked_mul(mm))
        .and_then(|x| x.checked_add(m.max_var_in_rule as u64));
    match (closed_form_bound(m), inst) {
        (Some(a), Some(b)) => Ok(a.min(b)),
        (Some(a), None) | (None, Some(a)) => Ok(a),
        (None, None) => Err(Error::Overflow),
    }
}

/// The final automata of the reduction, one per expandable SID.
pub fn expand(sid: &Sid, root: &str, trace: &mut Vec<String>) -> Result<Vec<SigmaAutomaton>> {
    let a = sid_to_automaton(sid, root)?;
    let Some(a) = a.trim() else {
        return Err(Error::EmptySemantics);
    };
    let a = eliminate_trivial_sccs(&a);
    let Some(a) = a.trim() else {
        return Err(Error::EmptySemantics);
    };
    let parts = choice_free_decompose(&a)?;
    trace.push(format!("choice-free parts: {}", parts.len()));
    let mut out = Vec::new();
    for (i, part) in parts.iter().enumerate() {
        let s1 = stage1_strip(part);
        let (s1, m) = rename_one_transition_ys(&s1);
        let prof = profile(&s1);
        let s2 = stage2_remove_nonpersistent_equalities(&s1, &prof);
        let splits = stage3_split(&stage3_annotate(&s2, &prof), &s2)?;
        trace.push(format!(
            "part {i}: {} states, |δ¹| = {}, one-transition variables {m}, {} split(s)",
            part.states.len(),
            part.delta1_len(),
            splits.len()
        ));
        for s in &splits {
            let bar = stage3_remove_persistent(s)?;
            out.push(wrap_one_transitions(&bar)?);
        }
    }
    Ok(out)
}

/// Decide whether the models of `phi` have bounded treewidth.
pub fn check_twb(sid: &Sid, phi: &Formula) -> Result<Verdict> {
    check_twb_traced(sid, phi, &mut Vec::new())
}

pub fn check_twb_traced(sid: &Sid, phi: &Formula, trace: &mut Vec<String>) -> Result<Verdict> {
    let (wrapped, root) = wrap_sentence(sid, phi);
    let m = measures(&wrapped);
    let empty = || {
        let mut v = Verdict::bounded(0);
        v.stats.measures = m.clone();
        v.empty = true;
        v
    };
    let norm = match normalize(&wrapped, &root) {
        Ok(s) => s,
        Err(Error::EmptySemantics) => return Ok(empty()),
        Err(e) => return Err(e),
    };
    trace.push(format!("normalized: {} rules", norm.rules.len()));
    let finals = match expand(&norm, &root, trace) {
        Ok(f) => f,
        Err(Error::EmptySemantics) => return Ok(empty()),
        Err(e) => return Err(e),
    };
    let mut stats = Stats {
        branches: finals.len(),
        delta1: finals.iter().map(|a| a.delta1_len()).collect(),
        measures: m.clone(),
        closed_form: closed_form_bound(&m),
        ..Stats::default()
    };
    stats.delta1_max = stats.delta1.iter().copied().max().unwrap_or(0);
    let mut memo: HashMap<Vec<String>, Option<(Color, Color)>> = HashMap::new();
    let mut seen_nonempty = false;
    for (i, a) in finals.iter().enumerate() {
        let key = a.dump();
        let failed = match memo.get(&key) {
            Some(r) => r.clone(),
            None => {
                let (gamma, groot) = automaton_to_sid(a);
                let r = match normalize(&gamma, &groot) {
                    Ok(g) => {
                        seen_nonempty = true;
                        let v = check_expandable_twb(&g, &groot)?;
                        trace.push(format!("branch {i}: {:?}", v.kind));
                        v.witness.map(|w| (w.c1, w.c2))
                    }
                    Err(Error::EmptySemantics) => {
                        trace.push(format!("branch {i}: empty"));
                        None
                    }
                    Err(e) => return Err(e),
                };
                memo.insert(key, r.clone());
                r
            }
        };
        if let Some((c1, c2)) = failed {
            return Ok(Verdict {
                kind: Kind::Unbounded,
                bound: None,
                witness: Some(Witness { c1, c2, branch: i }),
                stats,
                empty: false,
            });
        }
    }
    if !seen_nonempty {
        return Ok(empty());
    }
    let bound = match bound_formula(&m, &stats.delta1) {
        Ok(b) => Some(b),
        Err(Error::Overflow) => None,
        Err(e) => return Err(e),
    };
    Ok(Verdict {
        kind: Kind::Bounded,
        bound,
        witness: None,
        stats,
        empty: false,
    })
}

/// Fast path: decide an SID already known to be expandable for `phi`.
pub fn check_expandable(sid: &Sid, phi: &Formula) -> Result<Verdict> {
    let (wrapped, root) = wrap_sentence(sid, phi);
    let m = measures(&wrapped);
    let norm = match normalize(&wrapped, &root) {
        Ok(s) => s,
        Err(Error::EmptySemantics) => {
            let mut v = Verdict::bounded(0);
            v.empty = true;
            return Ok(v);
        }
        Err(e) => return Err(e),
    };
    let mut v = check_expandable_twb(&norm, &root)?;
    if v.is_bounded() {
        v.bound = Some(m.max_var_in_rule as u64);
    }
    v.stats.measures = m;
    v.stats.branches = 1;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_sid;
    use crate::syntax::Atom;

    fn root(p: &str) -> Formula {
        Formula::atom(Atom::Pred(p.into(), vec![]))
    }

    #[test]
    fn zero_measures() {
        assert_eq!(bound_formula(&Measures::default(), &[]).unwrap(), 0);
    }

    #[test]
    fn expandable_tb_bound() {
        let sid = parse_sid("rel a/1 e/2\npred A/0\nA <- exists y1 y2 . a(y1) * e(y1,y2) * A\nA <- emp").unwrap();
        let v = check_expandable(&sid, &root("A")).unwrap();
        assert_eq!((v.kind, v.bound), (Kind::Bounded, Some(2)));
    }

    #[test]
    fn empty_semantics_is_bounded() {
        let sid = parse_sid("rel a/1\npred A/0 B/0\nA <- B\nB <- exists y . a(y) * B").unwrap();
        let v = check_twb(&sid, &root("A")).unwrap();
        assert_eq!((v.kind, v.bound, v.empty), (Kind::Bounded, Some(0), true));
    }
}

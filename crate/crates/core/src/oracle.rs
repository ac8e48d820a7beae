//! Brute-force ground truth at desk scale: canonical models by bounded
//! unfolding, their color abstractions and fusion closures, and a report
//! comparing them with the abstract computations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::abstraction::{fixpoint_triples, single_pair_fusion_closure, third_components};
use crate::decide::{check_twb, Kind};
use crate::error::{Error, Result};
use crate::mcs::build_mcs_sid;
use crate::normalize::{normalize, wrap_sentence};
use crate::structures::{dedup_iso, internal_fusions, single_pair_fusions, Color, ColorMultiset, Element, Structure};
use crate::syntax::{eq_closure, measures, unfold_step, Atom, Formula, Sid, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Rule applications per unfolding.
    pub max_steps: usize,
    /// Support size of a model.
    pub max_elements: usize,
    /// Models kept (and partial unfoldings explored, times 64).
    pub max_models: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_steps: 6,
            max_elements: 10,
            max_models: 2_000,
        }
    }
}

/// Models found, and whether the budget cut anything off.
#[derive(Clone, Debug, Default)]
pub struct Enumeration {
    pub models: Vec<Structure>,
    pub truncated: bool,
}

/// Number of distinct elements the relation atoms of `phi` denote.
fn support_size(phi: &Formula) -> usize {
    let eq = eq_closure(&phi.atoms);
    let vars: BTreeSet<&Var> = phi.atoms.iter().filter(|a| a.is_rel()).flat_map(|a| a.vars()).collect();
    vars.iter().map(|v| eq.class_of(v).into_iter().next().unwrap()).collect::<BTreeSet<_>>().len()
}

/// The canonical model of a predicate-free formula, or `None` when it is
/// unsatisfiable (a violated disequality or a repeated tuple).
pub fn canonical_model(atoms: &[Atom<Var>]) -> Option<Structure> {
    let eq = eq_closure(atoms);
    let reps = eq.rep_map();
    let ids: BTreeMap<&Var, Element> = reps
        .values()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, i as Element))
        .collect();
    let el = |v: &Var| ids[&reps[v]];
    let mut s = Structure::new();
    for a in atoms {
        match a {
            Atom::Neq(x, y) if eq.same(x, y) => return None,
            Atom::Rel(r, args) => {
                if !s.insert(r, args.iter().map(el).collect()) {
                    return None;
                }
            }
            _ => {}
        }
    }
    Some(s)
}

/// Canonical models of `phi` over complete unfoldings within the budget,
/// breadth-first, always unfolding the leftmost predicate atom and trying
/// rules in file order; deduplicated up to isomorphism.
pub fn enumerate_canonical_models(sid: &Sid, phi: &Formula, budget: Budget) -> Result<Enumeration> {
    let mut out = Enumeration::default();
    let mut found = Vec::new();
    let mut level = vec![phi.clone()];
    let frontier_cap = budget.max_models.saturating_mul(64);
    for step in 0..=budget.max_steps {
        let mut next = Vec::new();
        for goal in level {
            let Some(which) = goal.atoms.iter().position(|a| a.is_pred()) else {
                if let Some(s) = canonical_model(&goal.atoms) {
                    found.push(s);
                }
                continue;
            };
            if step == budget.max_steps {
                out.truncated = true;
                continue;
            }
            let Atom::Pred(p, _) = &goal.atoms[which] else { unreachable!() };
            for rule in sid.rules_of(p) {
                let g = unfold_step(&goal, sid, which, rule)?;
                if support_size(&g) > budget.max_elements {
                    out.truncated = true;
                    continue;
                }
                if next.len() >= frontier_cap {
                    out.truncated = true;
                    break;
                }
                next.push(g);
            }
        }
        if found.len() > budget.max_models * 8 {
            found = dedup_iso(found);
        }
        level = next;
        if level.is_empty() {
            break;
        }
    }
    let mut models = dedup_iso(found);
    if models.len() > budget.max_models {
        models.truncate(budget.max_models);
        out.truncated = true;
    }
    out.models = models;
    Ok(out)
}

pub fn brute_kmcolabs(models: &[Structure], k: usize) -> BTreeSet<ColorMultiset> {
    models.iter().flat_map(|s| s.kmcolabs(k)).collect()
}

/// Maximal connected substructures of the models, up to isomorphism.
pub fn funsplit(models: &[Structure]) -> Vec<Structure> {
    dedup_iso(models.iter().flat_map(|s| s.components()))
}

pub fn brute_funsplit_kmcolabs(models: &[Structure], k: usize) -> BTreeSet<ColorMultiset> {
    brute_kmcolabs(&funsplit(models), k)
}

/// Structures reachable by at most `steps` single-pair fusions of the
/// inputs, keeping supports within `element_cap`; flags truncation.
pub fn fusion_reach(models: &[Structure], steps: usize, element_cap: usize, cap: usize) -> (Vec<Structure>, bool) {
    let mut all = dedup_iso(models.iter().cloned());
    let mut seen: BTreeSet<_> = all.iter().map(|s| s.canonical_form()).collect();
    let mut truncated = false;
    let mut frontier = all.clone();
    for _ in 0..steps {
        let mut new = Vec::new();
        'grow: for s1 in &frontier {
            for s2 in &all {
                for (a, b) in [(s1, s2), (s2, s1)] {
                    if a.support().len() + b.support().len() > element_cap + 1 {
                        truncated = true;
                        continue;
                    }
                    for f in single_pair_fusions(a, b) {
                        if seen.len() >= cap {
                            truncated = true;
                            break 'grow;
                        }
                        if seen.insert(f.canonical_form()) {
                            new.push(f);
                        }
                    }
                }
            }
        }
        all.extend(new.iter().cloned());
        frontier = new;
        if frontier.is_empty() || seen.len() >= cap {
            break;
        }
    }
    (all, truncated)
}

/// Distinct structures explored by the bounded fusion searches.
pub const FUSION_CAP: usize = 400;

/// k-multiset abstraction of everything reachable by bounded fusion.
pub fn brute_fusion_closure(
    models: &[Structure],
    steps: usize,
    element_cap: usize,
    k: usize,
) -> (BTreeSet<ColorMultiset>, bool) {
    let (all, truncated) = fusion_reach(models, steps, element_cap, FUSION_CAP);
    (brute_kmcolabs(&all, k), truncated)
}

/// A connected structure reachable by bounded fusion with at least three
/// elements of color `c`.
pub fn realize_triple(models: &[Structure], c: &Color, steps: usize, element_cap: usize) -> Option<Structure> {
    let (all, _) = fusion_reach(&funsplit(models), steps, element_cap, FUSION_CAP);
    all.into_iter()
        .find(|s| s.is_connected() && s.mcolabs().0.iter().filter(|x| *x == c).count() >= 3)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub outcome: Outcome,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    fn push(&mut self, name: &str, outcome: Outcome, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            outcome,
            detail: detail.into(),
        });
    }

    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.outcome == Outcome::Fail)
    }

    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| format!("CHECK {} {} {}", c.name, c.outcome, c.detail))
            .collect()
    }
}

/// Largest support whose quotients the oracle enumerates.
pub const QUOTIENT_CAP: usize = 7;

fn quotients(xs: &[Structure]) -> Result<Vec<Structure>> {
    let mut out = Vec::new();
    for s in xs {
        out.extend(internal_fusions(s, QUOTIENT_CAP)?);
    }
    Ok(out)
}

fn missing(xs: &[Structure], ys: &[Structure]) -> Option<Structure> {
    let have: BTreeSet<_> = ys.iter().map(|s| s.canonical_form()).collect();
    xs.iter().find(|s| !have.contains(&s.canonical_form())).cloned()
}

fn inclusion(name: &str, report: &mut Report, sub: &BTreeSet<ColorMultiset>, sup: &BTreeSet<ColorMultiset>) {
    match sub.iter().find(|m| !sup.contains(m)) {
        None => report.push(name, Outcome::Pass, format!("{} multisets included", sub.len())),
        Some(m) => report.push(name, Outcome::Fail, format!("{m} missing")),
    }
}

/// Run every oracle comparison for the models of `phi`.
pub fn crosscheck(sid: &Sid, phi: &Formula, budget: Budget, k: usize) -> Result<Report> {
    let mut report = Report::default();
    let (wrapped, root) = wrap_sentence(sid, phi);
    let root_phi = Formula::atom(Atom::Pred(root.clone(), vec![]));
    let en = enumerate_canonical_models(&wrapped, &root_phi, budget)?;
    let models = &en.models;
    let maxvar = measures(&wrapped).max_var_in_rule;

    // canonical models have treewidth below the number of rule variables
    let mut worst = 0;
    let mut tw_fail = None;
    for s in models {
        let tw = s.treewidth()?;
        worst = worst.max(tw);
        if tw + 1 > maxvar.max(1) {
            tw_fail = Some(s.clone());
        }
    }
    match tw_fail {
        None => report.push("canonical-treewidth", Outcome::Pass, format!("{} models, max tw {worst} < {maxvar}", models.len())),
        Some(s) => report.push("canonical-treewidth", Outcome::Fail, format!("tw too large: {s}")),
    }

    let norm = match normalize(&wrapped, &root) {
        Ok(n) => n,
        Err(Error::EmptySemantics) => {
            let outcome = if models.is_empty() { Outcome::Pass } else { Outcome::Fail };
            report.push("normalize", outcome, "empty semantics");
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    // canonical models on either side are models of the other, hence
    // quotients of its canonical models
    let en_norm = enumerate_canonical_models(&norm, &root_phi, budget)?;
    let inconclusive = en.truncated || en_norm.truncated;
    let small = |xs: &[Structure]| -> Vec<Structure> {
        xs.iter().filter(|s| s.support().len() <= QUOTIENT_CAP).cloned().collect()
    };
    let (a, b) = (small(models), small(&en_norm.models));
    match (missing(&b, &quotients(&a)?), missing(&a, &quotients(&b)?)) {
        (None, None) => report.push(
            "normalize",
            Outcome::Pass,
            format!("{} and {} models agree up to quotients", models.len(), en_norm.models.len()),
        ),
        (x, y) => {
            let s = x.or(y).unwrap();
            let outcome = if inconclusive { Outcome::Inconclusive } else { Outcome::Fail };
            report.push("normalize", outcome, format!("differs on {s}"));
        }
    }

    let (gamma, p) = build_mcs_sid(&norm, &root)?;
    let pieces = funsplit(models);
    let big = Budget {
        max_steps: budget.max_steps + 2,
        ..budget
    };
    let p_phi = Formula::atom(Atom::Pred(p.clone(), vec![]));
    let en_p = enumerate_canonical_models(&gamma, &p_phi, big)?;
    match missing(&pieces, &en_p.models) {
        None => report.push("mcs-forward", Outcome::Pass, format!("{} components found", pieces.len())),
        Some(s) => {
            let o = if en_p.truncated { Outcome::Inconclusive } else { Outcome::Fail };
            report.push("mcs-forward", o, format!("component {s} not generated"));
        }
    }
    let en_p_small = enumerate_canonical_models(&gamma, &p_phi, budget)?;
    let en_big = enumerate_canonical_models(&norm, &root_phi, big)?;
    // the pieces may include the empty structure, which no abstraction sees
    let generated: Vec<Structure> = en_p_small.models.iter().filter(|s| !s.is_empty()).cloned().collect();
    match missing(&generated, &funsplit(&en_big.models)) {
        None => report.push("mcs-backward", Outcome::Pass, format!("{} models are components", generated.len())),
        Some(s) => {
            let o = if en_big.truncated { Outcome::Inconclusive } else { Outcome::Fail };
            report.push("mcs-backward", o, format!("{s} is no component"));
        }
    }

    let sol = fixpoint_triples(&gamma, k);
    let abs = third_components(&sol, &p);
    let brute = brute_funsplit_kmcolabs(models, k);
    inclusion("abstraction", &mut report, &brute, &abs);

    let small: Vec<Structure> = pieces.iter().filter(|s| s.support().len() <= 4).cloned().collect();
    let (fused, _) = brute_fusion_closure(&small, 3, 12, k);
    let closure = single_pair_fusion_closure(k, &brute_kmcolabs(&small, k));
    inclusion("fusion-closure", &mut report, &fused, &closure);

    let v = check_twb(sid, phi)?;
    match (v.kind, v.bound) {
        (Kind::Bounded, Some(b)) => {
            let mut worst = 0;
            let mut samples = 0;
            for s in models.iter().filter(|s| s.support().len() <= 10) {
                for f in internal_fusions(s, 10)? {
                    worst = worst.max(f.treewidth()?);
                    samples += 1;
                }
            }
            let o = if worst as u64 <= b { Outcome::Pass } else { Outcome::Fail };
            report.push("verdict-treewidth", o, format!("{samples} samples, max tw {worst} <= bound {b}"));
        }
        (Kind::Bounded, None) => report.push("verdict-treewidth", Outcome::Pass, "bound exceeds u64"),
        (Kind::Unbounded, _) => {
            let w = v.witness.expect("unbounded verdicts carry a witness");
            let found = [&w.c1, &w.c2].iter().all(|c| realize_triple(models, c, 3, 12).is_some());
            let o = if found { Outcome::Pass } else { Outcome::Inconclusive };
            report.push("witness", o, "triple colors realized by fused components");
        }
    }
    Ok(report)
}

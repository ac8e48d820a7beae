//! The SID of maximally connected substructures.
//!
//! A predicate `B|J=..|ξ=..` describes the union of the connected
//! components of a `B`-model that touch the parameters at positions `J`;
//! `ξ` records which of those positions share a component. Begin rules for
//! the fresh nullary predicate emit components that no parameter of the
//! enclosing rule reaches.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::{IndexMap, IndexSet};

use crate::error::{Error, Result};
use crate::normalize::trim;
use crate::partition::Equiv;
use crate::syntax::{conn_closure, Atom, Rule, Sid, Var};

/// Annotations enumerated per rule before giving up.
pub const RULE_CAP: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct XiPredicate {
    pub base: String,
    /// 1-based positions, increasing.
    pub positions: Vec<usize>,
    /// Blocks of `positions`, each sorted, sorted by least member.
    pub classes: Vec<Vec<usize>>,
}

impl XiPredicate {
    pub fn arity(&self) -> usize {
        self.positions.len()
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for XiPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let j: Vec<String> = self.positions.iter().map(|p| p.to_string()).collect();
        write!(f, "{}|J={}|ξ=", self.base, j.join(","))?;
        for c in &self.classes {
            let c: Vec<String> = c.iter().map(|p| p.to_string()).collect();
            write!(f, "{{{}}}", c.join(","))?;
        }
        Ok(())
    }
}

/// One way of splitting a rule: a choice of narrowed predicate per atom
/// (`None` drops it), the atoms going to the connected part, and the
/// induced connectivity `Ξ`.
#[derive(Clone, Debug)]
pub struct McsAnnotation {
    pub choice: Vec<Option<XiPredicate>>,
    pub primed: Vec<Atom<Var>>,
    pub unprimed: Vec<Atom<Var>>,
    pub conn: Equiv<Var>,
    /// Variables on the connected side: `fv(ψ')` and the `J`-arguments.
    pub inside: BTreeSet<Var>,
    /// Variables on the other side: `fv(ψ'')` and the `J̄`-arguments.
    pub outside: BTreeSet<Var>,
}

/// Enumerate the splits of `rule` over the narrowed predicates in `known`
/// (keyed by base predicate).
pub fn enumerate_annotations(
    rule: &Rule,
    known: &BTreeMap<String, BTreeSet<XiPredicate>>,
) -> Result<Vec<McsAnnotation>> {
    let preds: Vec<(&String, &Vec<Var>)> = rule.pred_atoms().collect();
    let rels: Vec<&Atom<Var>> = rule.body.iter().filter(|a| a.is_rel()).collect();

    // atoms sharing a variable land on the same side
    let conn = conn_closure(&rule.body);
    let mut comps: IndexMap<Option<Var>, Vec<&Atom<Var>>> = IndexMap::new();
    let reps = conn.rep_map();
    let mut nullary = Vec::new();
    for a in &rels {
        match a.vars().first() {
            Some(v) => comps.entry(Some(reps[*v].clone())).or_default().push(a),
            None => nullary.push(vec![*a]),
        }
    }
    let comps: Vec<Vec<&Atom<Var>>> = comps.into_values().chain(nullary).collect();

    let options: Vec<Vec<Option<XiPredicate>>> = preds
        .iter()
        .map(|(p, _)| {
            std::iter::once(None)
                .chain(known.get(*p).into_iter().flatten().cloned().map(Some))
                .collect()
        })
        .collect();
    let combos = options.iter().try_fold(1usize, |n, o| n.checked_mul(o.len()));
    if combos.map_or(true, |n| n > RULE_CAP) {
        return Err(Error::CapExceeded(format!("annotations of a rule for `{}`", rule.head)));
    }

    let mut out = Vec::new();
    let mut idx = vec![0usize; options.len()];
    loop {
        let choice: Vec<Option<XiPredicate>> = idx.iter().zip(&options).map(|(&i, o)| o[i].clone()).collect();
        split(rule, &preds, &comps, choice, &mut out)?;
        // odometer
        let mut k = 0;
        while k < idx.len() {
            idx[k] += 1;
            if idx[k] < options[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == idx.len() {
            break;
        }
    }
    Ok(out)
}

fn split(
    rule: &Rule,
    preds: &[(&String, &Vec<Var>)],
    comps: &[Vec<&Atom<Var>>],
    choice: Vec<Option<XiPredicate>>,
    out: &mut Vec<McsAnnotation>,
) -> Result<()> {
    let mut inside: BTreeSet<Var> = BTreeSet::new();
    let mut outside: BTreeSet<Var> = BTreeSet::new();
    for ((_, args), c) in preds.iter().zip(&choice) {
        for (j, z) in args.iter().enumerate() {
            match c {
                Some(x) if x.positions.contains(&(j + 1)) => inside.insert(z.clone()),
                _ => outside.insert(z.clone()),
            };
        }
    }
    if !inside.is_disjoint(&outside) {
        return Ok(());
    }
    let mut primed: Vec<&Atom<Var>> = Vec::new();
    let mut unprimed: Vec<&Atom<Var>> = Vec::new();
    let mut free: Vec<&Vec<&Atom<Var>>> = Vec::new();
    for comp in comps {
        let vars: BTreeSet<&Var> = comp.iter().flat_map(|a| a.vars()).collect();
        let i = vars.iter().any(|v| inside.contains(*v));
        let o = vars.iter().any(|v| outside.contains(*v));
        match (i, o) {
            (true, true) => return Ok(()),
            (true, false) => primed.extend(comp),
            (false, true) => unprimed.extend(comp),
            (false, false) => free.push(comp),
        }
    }
    if free.len() >= 20 || out.len() + (1usize << free.len()) > RULE_CAP {
        return Err(Error::CapExceeded(format!("annotations of a rule for `{}`", rule.head)));
    }
    for mask in 0u32..(1 << free.len()) {
        let mut p: Vec<Atom<Var>> = primed.iter().map(|a| (*a).clone()).collect();
        let mut u: Vec<Atom<Var>> = unprimed.iter().map(|a| (*a).clone()).collect();
        for (b, comp) in free.iter().enumerate() {
            let side = if mask >> b & 1 == 1 { &mut p } else { &mut u };
            side.extend(comp.iter().map(|a| (*a).clone()));
        }
        let mut conn = conn_closure(&p);
        let mut ins = inside.clone();
        let mut outs = outside.clone();
        for a in &p {
            ins.extend(a.vars().into_iter().cloned());
        }
        for a in &u {
            outs.extend(a.vars().into_iter().cloned());
        }
        for ((_, args), c) in preds.iter().zip(&choice) {
            let Some(x) = c else { continue };
            for &j in &x.positions {
                conn.add(args[j - 1].clone());
            }
            for cls in &x.classes {
                for w in cls.windows(2) {
                    conn.union(&args[w[0] - 1], &args[w[1] - 1]);
                }
            }
        }
        out.push(McsAnnotation {
            choice: choice.clone(),
            primed: p,
            unprimed: u,
            conn,
            inside: ins,
            outside: outs,
        });
    }
    Ok(())
}

fn narrowed_body(rule: &Rule, ann: &McsAnnotation) -> (Vec<Var>, Vec<Atom<Var>>) {
    let mut body = ann.primed.clone();
    for ((_, args), c) in rule.pred_atoms().zip(&ann.choice) {
        if let Some(x) = c {
            body.push(Atom::Pred(x.name(), x.positions.iter().map(|&j| args[j - 1].clone()).collect()));
        }
    }
    let used: BTreeSet<&Var> = body.iter().flat_map(|a| a.vars()).collect();
    let exists = rule.exists.iter().filter(|y| used.contains(y)).cloned().collect();
    if body.is_empty() {
        body.push(Atom::Emp);
    }
    (exists, body)
}

/// Middle rules `B0|J0|ξ0 <- ...` for one annotation; one per admissible
/// choice of the parameters the rule leaves untouched.
fn middle_rules(rule: &Rule, ann: &McsAnnotation, out: &mut Vec<(XiPredicate, Rule)>) {
    let params = &rule.params;
    let forced: Vec<usize> = (1..=params.len()).filter(|&j| ann.inside.contains(&params[j - 1])).collect();
    let open: Vec<usize> = (1..=params.len())
        .filter(|&j| !ann.inside.contains(&params[j - 1]) && !ann.outside.contains(&params[j - 1]))
        .collect();
    // every existential on the connected side reaches some parameter
    let reps = ann.conn.rep_map();
    let reached: BTreeSet<&Var> = forced.iter().map(|&j| &reps[&params[j - 1]]).collect();
    let exist: BTreeSet<&Var> = rule.exists.iter().collect();
    if reps.iter().any(|(v, r)| exist.contains(v) && !reached.contains(r)) {
        return;
    }
    let (exists, body) = narrowed_body(rule, ann);
    for mask in 0u32..(1 << open.len()) {
        let mut positions: Vec<usize> = forced.clone();
        positions.extend(open.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &j)| j));
        if positions.is_empty() {
            continue;
        }
        positions.sort();
        let mut blocks: BTreeMap<Var, Vec<usize>> = BTreeMap::new();
        for &j in &positions {
            let key = reps.get(&params[j - 1]).cloned().unwrap_or_else(|| params[j - 1].clone());
            blocks.entry(key).or_default().push(j);
        }
        let mut classes: Vec<Vec<usize>> = blocks.into_values().collect();
        classes.sort();
        let head = XiPredicate {
            base: rule.head.clone(),
            positions: positions.clone(),
            classes,
        };
        let r = Rule {
            head: head.name(),
            params: positions.iter().map(|&j| params[j - 1].clone()).collect(),
            exists: exists.clone(),
            body: body.clone(),
        };
        out.push((head, r));
    }
}

/// A begin rule when the connected side is one component that no
/// parameter reaches.
fn begin_rule(rule: &Rule, ann: &McsAnnotation, p: &str) -> Option<Rule> {
    if ann.conn.classes().len() != 1 || rule.params.iter().any(|x| ann.conn.contains(x)) {
        return None;
    }
    let (exists, body) = narrowed_body(rule, ann);
    Some(Rule {
        head: p.to_string(),
        params: vec![],
        exists,
        body,
    })
}

/// Build `(Γ, P)` such that the canonical models of `P` are the maximal
/// connected substructures of the canonical models of `root`.
pub fn build_mcs_sid(sid: &Sid, root: &str) -> Result<(Sid, String)> {
    let p = sid.fresh_symbol("P");
    let sid = match trim(sid, root) {
        Ok(s) => s,
        Err(Error::EmptySemantics) => sid.clone(),
        Err(e) => return Err(e),
    };
    let mut known: BTreeMap<String, BTreeSet<XiPredicate>> = BTreeMap::new();
    let (middles, begins) = loop {
        let mut middles: Vec<(XiPredicate, Rule)> = Vec::new();
        let mut begins: Vec<Rule> = Vec::new();
        for rule in &sid.rules {
            for ann in enumerate_annotations(rule, &known)? {
                middle_rules(rule, &ann, &mut middles);
                begins.extend(begin_rule(rule, &ann, &p));
            }
        }
        let mut next: BTreeMap<String, BTreeSet<XiPredicate>> = BTreeMap::new();
        for (h, _) in &middles {
            next.entry(h.base.clone()).or_default().insert(h.clone());
        }
        if next == known {
            break (middles, begins);
        }
        known = next;
    };
    let mut rules: IndexSet<Rule> = IndexSet::new();
    let mut gamma = Sid {
        relations: sid.relations.clone(),
        ..Sid::default()
    };
    gamma.predicates.insert(p.clone(), 0);
    for xs in known.values() {
        for x in xs {
            gamma.predicates.insert(x.name(), x.arity());
        }
    }
    rules.extend(begins);
    rules.extend(middles.into_iter().map(|(_, r)| r));
    gamma.rules = rules.into_iter().collect();
    match trim(&gamma, &p) {
        Ok(g) => Ok((g, p)),
        Err(Error::EmptySemantics) => {
            gamma.rules.clear();
            gamma.restrict_signature();
            gamma.predicates.insert(p.clone(), 0);
            Ok((gamma, p))
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_sid;

    #[test]
    fn disconnected_edges() {
        let sid = parse_sid(
            "rel a/1 b/1 e/2\npred A/0\n\
             A <- exists y1 y2 . a(y1) * b(y2) * e(y1,y2) * A\n\
             A <- emp",
        )
        .unwrap();
        let (g, p) = build_mcs_sid(&sid, "A").unwrap();
        assert_eq!(p, "P");
        assert_eq!(g.rules.len(), 1);
        assert_eq!(g.rules[0].to_string(), "P <- exists y1 y2 . a(y1) * b(y2) * e(y1,y2)");
    }

    #[test]
    fn emp_rule_has_no_begin_rule() {
        let sid = parse_sid("pred A/0\nA <- emp").unwrap();
        let (g, _) = build_mcs_sid(&sid, "A").unwrap();
        assert!(g.rules.is_empty());
    }

    #[test]
    fn chain_annotation() {
        let sid = parse_sid(
            "rel a/1 e/2\npred A/0 B/1\n\
             A <- exists y . B(y)\n\
             B(x1) <- exists y . a(x1) * e(x1,y) * B(y)\n\
             B(x1) <- a(x1)",
        )
        .unwrap();
        let (g, _) = build_mcs_sid(&sid, "A").unwrap();
        let names: Vec<String> = g.rules.iter().map(|r| r.to_string()).collect();
        assert!(names.contains(&"P <- exists y . B|J=1|ξ={1}(y)".to_string()), "{names:?}");
        assert!(names.contains(&"B|J=1|ξ={1}(x1) <- exists y . a(x1) * e(x1,y) * B|J=1|ξ={1}(y)".to_string()));
        // x1 and y are connected in the recursive rule
        let known = BTreeMap::from([(
            "B".to_string(),
            BTreeSet::from([XiPredicate {
                base: "B".into(),
                positions: vec![1],
                classes: vec![vec![1]],
            }]),
        )]);
        let anns = enumerate_annotations(&sid.rules[1], &known).unwrap();
        let full = anns.iter().find(|a| a.choice[0].is_some()).unwrap();
        assert_eq!(full.primed.len(), 2);
        assert!(full.conn.same(&"x1".to_string(), &"y".to_string()));
    }
}

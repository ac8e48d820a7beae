//! Syntax of formulas and inductive definitions.
//!
//! Atoms are generic over the variable type so the same machinery works
//! for plain rule variables and for the positioned variables used in
//! automaton labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::partition::Equiv;

pub type Var = String;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom<V> {
    Emp,
    Eq(V, V),
    Neq(V, V),
    Rel(String, Vec<V>),
    Pred(String, Vec<V>),
}

impl<V> Atom<V> {
    pub fn vars(&self) -> Vec<&V> {
        match self {
            Atom::Emp => vec![],
            Atom::Eq(a, b) | Atom::Neq(a, b) => vec![a, b],
            Atom::Rel(_, args) | Atom::Pred(_, args) => args.iter().collect(),
        }
    }

    pub fn map<W>(&self, mut f: impl FnMut(&V) -> W) -> Atom<W> {
        match self {
            Atom::Emp => Atom::Emp,
            Atom::Eq(a, b) => Atom::Eq(f(a), f(b)),
            Atom::Neq(a, b) => Atom::Neq(f(a), f(b)),
            Atom::Rel(r, args) => Atom::Rel(r.clone(), args.iter().map(f).collect()),
            Atom::Pred(p, args) => Atom::Pred(p.clone(), args.iter().map(f).collect()),
        }
    }

    pub fn is_pred(&self) -> bool {
        matches!(self, Atom::Pred(..))
    }

    pub fn is_rel(&self) -> bool {
        matches!(self, Atom::Rel(..))
    }
}

impl<V: fmt::Display> fmt::Display for Atom<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn args<V: fmt::Display>(f: &mut fmt::Formatter<'_>, xs: &[V]) -> fmt::Result {
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            Ok(())
        }
        match self {
            Atom::Emp => write!(f, "emp"),
            Atom::Eq(a, b) => write!(f, "{a} = {b}"),
            Atom::Neq(a, b) => write!(f, "{a} != {b}"),
            Atom::Rel(r, xs) => {
                write!(f, "{r}(")?;
                args(f, xs)?;
                write!(f, ")")
            }
            Atom::Pred(p, xs) if xs.is_empty() => write!(f, "{p}"),
            Atom::Pred(p, xs) => {
                write!(f, "{p}(")?;
                args(f, xs)?;
                write!(f, ")")
            }
        }
    }
}

/// Print a separating conjunction; the empty list prints as `emp`.
pub fn show_body<V: fmt::Display>(body: &[Atom<V>]) -> String {
    if body.is_empty() {
        return "emp".into();
    }
    body.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" * ")
}

/// Drop `emp` from a body (it is the unit of `*`).
pub fn drop_emp<V: Clone>(body: &[Atom<V>]) -> Vec<Atom<V>> {
    body.iter().filter(|a| !matches!(a, Atom::Emp)).cloned().collect()
}

pub fn free_vars<V: Ord + Clone>(body: &[Atom<V>]) -> BTreeSet<V> {
    body.iter().flat_map(|a| a.vars().into_iter().cloned()).collect()
}

/// Least equivalence containing every `x = y` of the body, over its free
/// variables.
pub fn eq_closure<V: Ord + Clone>(body: &[Atom<V>]) -> Equiv<V> {
    let mut eq = Equiv::new();
    for v in free_vars(body) {
        eq.add(v);
    }
    for a in body {
        if let Atom::Eq(x, y) = a {
            eq.union(x, y);
        }
    }
    eq
}

/// Least equivalence relating variables that co-occur in a relation atom.
pub fn conn_closure<V: Ord + Clone>(body: &[Atom<V>]) -> Equiv<V> {
    let mut eq = Equiv::new();
    for a in body {
        if let Atom::Rel(_, args) = a {
            for x in args {
                eq.add(x.clone());
            }
            for w in args.windows(2) {
                eq.union(&w[0], &w[1]);
            }
        }
    }
    eq
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub head: String,
    pub params: Vec<Var>,
    pub exists: Vec<Var>,
    pub body: Vec<Atom<Var>>,
}

impl Rule {
    pub fn pred_atoms(&self) -> impl Iterator<Item = (&String, &Vec<Var>)> {
        self.body.iter().filter_map(|a| match a {
            Atom::Pred(p, args) => Some((p, args)),
            _ => None,
        })
    }

    /// The predicate-free part of the body.
    pub fn qpf(&self) -> Vec<Atom<Var>> {
        self.body.iter().filter(|a| !a.is_pred()).cloned().collect()
    }

    /// Variables of the rule: parameters plus existentials, counted once.
    pub fn var_count(&self) -> usize {
        let mut s: BTreeSet<&Var> = self.params.iter().collect();
        s.extend(self.exists.iter());
        s.len()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.params.is_empty() {
            write!(f, "{}", self.head)?;
        } else {
            write!(f, "{}({})", self.head, self.params.join(","))?;
        }
        write!(f, " <- ")?;
        if !self.exists.is_empty() {
            write!(f, "exists {} . ", self.exists.join(" "))?;
        }
        write!(f, "{}", show_body(&self.body))
    }
}

/// A set of inductive definitions together with its signature.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sid {
    pub relations: IndexMap<String, usize>,
    pub predicates: IndexMap<String, usize>,
    pub rules: Vec<Rule>,
}

impl Sid {
    pub fn rules_of<'a>(&'a self, p: &'a str) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rules.iter().filter(move |r| r.head == p)
    }

    pub fn arity(&self, p: &str) -> Option<usize> {
        self.predicates.get(p).copied()
    }

    /// A name not used by any predicate or relation, derived from `base`.
    pub fn fresh_symbol(&self, base: &str) -> String {
        if !self.predicates.contains_key(base) && !self.relations.contains_key(base) {
            return base.to_string();
        }
        (1..)
            .map(|n| format!("{base}%{n}"))
            .find(|c| !self.predicates.contains_key(c) && !self.relations.contains_key(c))
            .unwrap()
    }

    /// Keep only the symbols that occur in some rule (declaration order is
    /// preserved).
    pub fn restrict_signature(&mut self) {
        let mut preds = BTreeSet::new();
        let mut rels = BTreeSet::new();
        for r in &self.rules {
            preds.insert(r.head.clone());
            for a in &r.body {
                match a {
                    Atom::Pred(p, _) => {
                        preds.insert(p.clone());
                    }
                    Atom::Rel(q, _) => {
                        rels.insert(q.clone());
                    }
                    _ => {}
                }
            }
        }
        self.predicates.retain(|p, _| preds.contains(p));
        self.relations.retain(|r, _| rels.contains(r));
    }

    /// Declare every symbol used by the rules, inferring arities.
    pub fn declare_from_rules(&mut self) {
        for r in &self.rules {
            self.predicates.entry(r.head.clone()).or_insert(r.params.len());
            for a in &r.body {
                match a {
                    Atom::Pred(p, args) => {
                        self.predicates.entry(p.clone()).or_insert(args.len());
                    }
                    Atom::Rel(q, args) => {
                        self.relations.entry(q.clone()).or_insert(args.len());
                    }
                    _ => {}
                }
            }
        }
    }
}

impl fmt::Display for Sid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.relations.is_empty() {
            let decls: Vec<String> = self.relations.iter().map(|(n, a)| format!("{n}/{a}")).collect();
            writeln!(f, "rel {}", decls.join(" "))?;
        }
        if !self.predicates.is_empty() {
            let decls: Vec<String> = self.predicates.iter().map(|(n, a)| format!("{n}/{a}")).collect();
            writeln!(f, "pred {}", decls.join(" "))?;
        }
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// A possibly quantified formula: `exists v1 ... vm . atoms`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Formula {
    pub exists: Vec<Var>,
    pub atoms: Vec<Atom<Var>>,
}

impl Formula {
    pub fn atom(a: Atom<Var>) -> Self {
        Formula {
            exists: vec![],
            atoms: vec![a],
        }
    }

    pub fn is_qpf(&self) -> bool {
        !self.atoms.iter().any(|a| a.is_pred())
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let bound: BTreeSet<&Var> = self.exists.iter().collect();
        free_vars(&self.atoms).into_iter().filter(|v| !bound.contains(v)).collect()
    }

    fn all_vars(&self) -> BTreeSet<Var> {
        let mut s = free_vars(&self.atoms);
        s.extend(self.exists.iter().cloned());
        s
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.exists.is_empty() {
            write!(f, "exists {} . ", self.exists.join(" "))?;
        }
        write!(f, "{}", show_body(&self.atoms))
    }
}

fn base_name(v: &str) -> &str {
    v.split('%').next().unwrap_or(v)
}

/// Replace the predicate atom at `which` by the body of `rule`, renaming
/// parameters to the atom's arguments and existentials apart.
pub fn unfold_step(goal: &Formula, sid: &Sid, which: usize, rule: &Rule) -> Result<Formula> {
    let (name, args) = match goal.atoms.get(which) {
        Some(Atom::Pred(p, args)) => (p, args),
        _ => {
            return Err(Error::Invariant(format!("atom {which} is not a predicate atom")));
        }
    };
    let expected = sid.arity(&rule.head).unwrap_or(rule.params.len());
    if *name != rule.head || args.len() != rule.params.len() || expected != args.len() {
        return Err(Error::ArityMismatch {
            symbol: rule.head.clone(),
            expected: rule.params.len(),
            found: args.len(),
        });
    }
    let mut used = goal.all_vars();
    let mut next = used
        .iter()
        .filter_map(|v| v.rsplit_once('%').and_then(|(_, n)| n.parse::<usize>().ok()))
        .max()
        .unwrap_or(0)
        + 1;
    let mut sub: BTreeMap<&Var, Var> = rule.params.iter().zip(args.iter().cloned()).collect();
    let mut exists = goal.exists.clone();
    for y in &rule.exists {
        let fresh = loop {
            let c = format!("{}%{next}", base_name(y));
            next += 1;
            if !used.contains(&c) {
                break c;
            }
        };
        used.insert(fresh.clone());
        exists.push(fresh.clone());
        sub.insert(y, fresh);
    }
    let mut atoms = Vec::with_capacity(goal.atoms.len() + rule.body.len());
    atoms.extend_from_slice(&goal.atoms[..which]);
    for a in &rule.body {
        if matches!(a, Atom::Emp) {
            continue;
        }
        atoms.push(a.map(|v| sub.get(v).cloned().unwrap_or_else(|| v.clone())));
    }
    atoms.extend_from_slice(&goal.atoms[which + 1..]);
    Ok(Formula { exists, atoms })
}

/// The quantitative measures of an SID.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct Measures {
    pub max_var_in_rule: usize,
    pub max_rel_atom_in_rule: usize,
    pub max_rule_arity: usize,
    pub max_rel_arity: usize,
    pub max_pred_arity: usize,
    pub preds_no: usize,
    pub relations_no: usize,
}

/// Measures over the rules; symbol counts and arity maxima range over the
/// symbols occurring in some rule.
pub fn measures(sid: &Sid) -> Measures {
    let mut m = Measures::default();
    let mut preds: BTreeSet<&str> = BTreeSet::new();
    let mut rels: BTreeSet<&str> = BTreeSet::new();
    for r in &sid.rules {
        m.max_var_in_rule = m.max_var_in_rule.max(r.var_count());
        m.max_rel_atom_in_rule = m.max_rel_atom_in_rule.max(r.body.iter().filter(|a| a.is_rel()).count());
        m.max_rule_arity = m.max_rule_arity.max(r.body.iter().filter(|a| a.is_pred()).count());
        preds.insert(&r.head);
        m.max_pred_arity = m.max_pred_arity.max(r.params.len());
        for a in &r.body {
            match a {
                Atom::Rel(q, args) => {
                    rels.insert(q);
                    m.max_rel_arity = m.max_rel_arity.max(args.len());
                }
                Atom::Pred(p, args) => {
                    preds.insert(p);
                    m.max_pred_arity = m.max_pred_arity.max(args.len());
                }
                _ => {}
            }
        }
    }
    m.preds_no = preds.len();
    m.relations_no = rels.len();
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_sid;

    #[test]
    fn closures() {
        let b: Vec<Atom<&str>> = vec![Atom::Eq("x", "y"), Atom::Eq("y", "z")];
        assert_eq!(eq_closure(&b).classes().len(), 1);
        let b: Vec<Atom<&str>> = vec![Atom::Rel("a".into(), vec!["x"]), Atom::Neq("x", "y")];
        assert!(eq_closure(&b).is_identity());
        let b: Vec<Atom<&str>> = vec![Atom::Rel("r".into(), vec!["x", "y"]), Atom::Rel("r".into(), vec!["y", "z"])];
        assert_eq!(conn_closure(&b).classes().len(), 1);
        let b: Vec<Atom<&str>> = vec![Atom::Rel("a".into(), vec!["x"]), Atom::Rel("b".into(), vec!["y"])];
        assert_eq!(conn_closure(&b).classes().len(), 2);
    }

    #[test]
    fn unfolding() {
        let sid = parse_sid("rel a/1 r/2\npred A/0 B/2\nA <- exists y1 y2 . B(y1,y2)\nB(x1,x2) <- a(x1) * r(x1,x2)").unwrap();
        let g = Formula::atom(Atom::Pred("A".into(), vec![]));
        let g1 = unfold_step(&g, &sid, 0, &sid.rules[0]).unwrap();
        assert_eq!(g1.to_string(), "exists y1%1 y2%2 . B(y1%1,y2%2)");
        let g2 = unfold_step(&g1, &sid, 0, &sid.rules[1]).unwrap();
        assert_eq!(g2.to_string(), "exists y1%1 y2%2 . a(y1%1) * r(y1%1,y2%2)");
        assert!(unfold_step(&g1, &sid, 0, &sid.rules[0]).is_err());
    }

    #[test]
    fn empty_rule_measures() {
        let sid = parse_sid("pred A/0\nA <- emp").unwrap();
        let m = measures(&sid);
        assert_eq!((m.max_var_in_rule, m.max_rel_atom_in_rule), (0, 0));
    }
}

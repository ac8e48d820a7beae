//! Finite relational structures and their algebra.
//!
//! Only the support is materialized: an element exists iff it occurs in a
//! tuple. Elements are plain integers; isomorphism is decided through
//! [`Structure::canonical_form`].

mod canon;
mod treewidth;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::partition::{blocks, set_partitions, sub_multisets, Equiv};
use crate::syntax::{Atom, Var};

pub use canon::CanonicalForm;
pub use treewidth::treewidth_of_graph;

pub type Element = u32;

/// A color: the relation symbols holding on the diagonal of an element.
pub type Color = BTreeSet<String>;

/// A multiset of colors, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColorMultiset(pub Vec<Color>);

impl ColorMultiset {
    pub fn new(mut colors: Vec<Color>) -> Self {
        colors.sort();
        ColorMultiset(colors)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn show_color(c: &Color) -> String {
    format!("{{{}}}", c.iter().cloned().collect::<Vec<_>>().join(","))
}

impl fmt::Display for ColorMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(show_color).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Structure {
    rels: BTreeMap<String, BTreeSet<Vec<Element>>>,
}

impl Structure {
    pub fn new() -> Self {
        Structure::default()
    }

    pub fn from_tuples<'a>(tuples: impl IntoIterator<Item = (&'a str, Vec<Element>)>) -> Self {
        let mut s = Structure::new();
        for (r, t) in tuples {
            s.insert(r, t);
        }
        s
    }

    /// Insert a tuple; returns false if it was already present.
    pub fn insert(&mut self, rel: &str, tuple: Vec<Element>) -> bool {
        self.rels.entry(rel.to_string()).or_default().insert(tuple)
    }

    pub fn contains(&self, rel: &str, tuple: &[Element]) -> bool {
        self.rels.get(rel).is_some_and(|ts| ts.contains(tuple))
    }

    pub fn tuples(&self) -> impl Iterator<Item = (&String, &Vec<Element>)> {
        self.rels.iter().flat_map(|(r, ts)| ts.iter().map(move |t| (r, t)))
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &String> {
        self.rels.iter().filter(|(_, ts)| !ts.is_empty()).map(|(r, _)| r)
    }

    pub fn num_tuples(&self) -> usize {
        self.rels.values().map(|ts| ts.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.num_tuples() == 0
    }

    pub fn support(&self) -> BTreeSet<Element> {
        self.tuples().flat_map(|(_, t)| t.iter().copied()).collect()
    }

    pub fn max_element(&self) -> Option<Element> {
        self.tuples().flat_map(|(_, t)| t.iter().copied()).max()
    }

    /// Composition: pointwise disjoint union, defined only when no tuple is
    /// shared.
    pub fn compose(&self, other: &Structure) -> Result<Structure> {
        let mut out = self.clone();
        for (r, t) in other.tuples() {
            if !out.insert(r, t.clone()) {
                return Err(Error::NotLocallyDisjoint {
                    relation: r.clone(),
                    tuple: t.clone(),
                });
            }
        }
        Ok(out)
    }

    pub fn rename(&self, f: impl Fn(Element) -> Element) -> Structure {
        let mut out = Structure::new();
        for (r, t) in self.tuples() {
            out.insert(r, t.iter().map(|&e| f(e)).collect());
        }
        out
    }

    /// A copy whose elements are shifted by `offset`.
    pub fn shifted(&self, offset: Element) -> Structure {
        self.rename(|e| e + offset)
    }

    /// Quotient by an equivalence: each element is replaced by the least
    /// member of its class; duplicate tuples collapse.
    pub fn quotient(&self, eq: &Equiv<Element>) -> Structure {
        let reps = eq.rep_map();
        self.rename(|e| *reps.get(&e).unwrap_or(&e))
    }

    /// No two distinct tuples of one relation become equal modulo `eq`.
    pub fn is_compatible(&self, eq: &Equiv<Element>) -> bool {
        self.quotient(eq).num_tuples() == self.num_tuples()
    }

    pub fn color(&self, u: Element) -> Result<Color> {
        if !self.support().contains(&u) {
            return Err(Error::ElementNotInSupport(u));
        }
        Ok(self.color_unchecked(u))
    }

    fn color_unchecked(&self, u: Element) -> Color {
        self.rels
            .iter()
            .filter(|(_, ts)| ts.iter().any(|t| t.iter().all(|&e| e == u)))
            .map(|(r, _)| r.clone())
            .collect()
    }

    pub fn coloring(&self) -> BTreeMap<Element, Color> {
        let mut out: BTreeMap<Element, Color> = self.support().into_iter().map(|u| (u, Color::new())).collect();
        for (r, t) in self.tuples() {
            if let Some(&u) = t.first() {
                if t.iter().all(|&e| e == u) {
                    out.get_mut(&u).unwrap().insert(r.clone());
                }
            }
        }
        out
    }

    pub fn mcolabs(&self) -> ColorMultiset {
        ColorMultiset::new(self.coloring().into_values().collect())
    }

    pub fn kmcolabs(&self, k: usize) -> BTreeSet<ColorMultiset> {
        sub_multisets(&self.mcolabs().0, k).into_iter().map(ColorMultiset).collect()
    }

    /// Maximal connected substructures, ordered by least element.
    pub fn components(&self) -> Vec<Structure> {
        let mut eq: Equiv<Element> = Equiv::new();
        for (_, t) in self.tuples() {
            for &e in t {
                eq.add(e);
            }
            for w in t.windows(2) {
                eq.union(&w[0], &w[1]);
            }
        }
        let reps = eq.rep_map();
        let mut parts: BTreeMap<Element, Structure> = BTreeMap::new();
        for (r, t) in self.tuples() {
            parts.entry(reps[&t[0]]).or_default().insert(r, t.clone());
        }
        parts.into_values().collect()
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Exact treewidth of the primal graph (maximum over components; each
    /// component may have at most 16 elements).
    pub fn treewidth(&self) -> Result<usize> {
        let mut best = 0;
        for c in self.components() {
            let elems: Vec<Element> = c.support().into_iter().collect();
            if elems.len() > 16 {
                return Err(Error::TooLarge(elems.len()));
            }
            let idx: BTreeMap<Element, usize> = elems.iter().enumerate().map(|(i, &e)| (e, i)).collect();
            let mut adj = vec![0u32; elems.len()];
            for (_, t) in c.tuples() {
                for &a in t {
                    for &b in t {
                        if a != b {
                            adj[idx[&a]] |= 1 << idx[&b];
                        }
                    }
                }
            }
            best = best.max(treewidth_of_graph(&adj));
        }
        Ok(best)
    }

    /// `self` is included in `other` and equals its restriction to
    /// `supp(self)`.
    pub fn is_substructure_of(&self, other: &Structure) -> bool {
        let supp = self.support();
        if !self.tuples().all(|(r, t)| other.contains(r, t)) {
            return false;
        }
        other
            .tuples()
            .filter(|(_, t)| t.iter().all(|e| supp.contains(e)))
            .all(|(r, t)| self.contains(r, t))
    }

    /// Sorted `r(e1,...,ek)` lines.
    pub fn lines(&self) -> Vec<String> {
        self.tuples()
            .map(|(r, t)| {
                let args: Vec<String> = t.iter().map(|e| e.to_string()).collect();
                format!("{r}({})", args.join(","))
            })
            .collect()
    }

    pub fn is_isomorphic(&self, other: &Structure) -> bool {
        self.num_tuples() == other.num_tuples() && self.canonical_form() == other.canonical_form()
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.lines().join(" "))
    }
}

/// Deduplicate up to isomorphism, keeping first occurrences.
pub fn dedup_iso(structures: impl IntoIterator<Item = Structure>) -> Vec<Structure> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for s in structures {
        if seen.insert(s.canonical_form()) {
            out.push(s);
        }
    }
    out
}

/// All quotients of `s` by compatible equivalences, up to isomorphism.
pub fn internal_fusions(s: &Structure, element_cap: usize) -> Result<Vec<Structure>> {
    let elems: Vec<Element> = s.support().into_iter().collect();
    if elems.len() > element_cap {
        return Err(Error::CapExceeded(format!(
            "internal fusion over {} elements (cap {element_cap})",
            elems.len()
        )));
    }
    let mut out = Vec::new();
    for rgs in set_partitions(elems.len()) {
        let mut eq = Equiv::new();
        for b in blocks(&rgs) {
            for &i in &b {
                eq.union(&elems[b[0]], &elems[i]);
            }
        }
        if s.is_compatible(&eq) {
            out.push(s.quotient(&eq));
        }
    }
    Ok(dedup_iso(out))
}

/// External fusions of disjoint copies of `s1` and `s2` glued along at
/// most `pair_bound` cross pairs (at least one), up to isomorphism.
pub fn external_fusions(s1: &Structure, s2: &Structure, pair_bound: usize) -> Result<Vec<Structure>> {
    let offset = s1.max_element().map_or(0, |m| m + 1);
    let s2 = s2.shifted(offset);
    let joint = s1.compose(&s2)?;
    let u1: Vec<Element> = s1.support().into_iter().collect();
    let u2: Vec<Element> = s2.support().into_iter().collect();
    let pairs: Vec<(Element, Element)> = u1.iter().flat_map(|&a| u2.iter().map(move |&b| (a, b))).collect();
    if pairs.len() > 64 && pair_bound > 2 {
        return Err(Error::CapExceeded(format!("{} candidate pairs", pairs.len())));
    }
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    fn go(
        pairs: &[(Element, Element)],
        start: usize,
        left: usize,
        chosen: &mut Vec<(Element, Element)>,
        joint: &Structure,
        out: &mut Vec<Structure>,
    ) {
        if !chosen.is_empty() {
            let eq = Equiv::from_pairs(std::iter::empty(), chosen.iter().cloned());
            if joint.is_compatible(&eq) {
                out.push(joint.quotient(&eq));
            }
        }
        if left == 0 {
            return;
        }
        for i in start..pairs.len() {
            chosen.push(pairs[i]);
            go(pairs, i + 1, left - 1, chosen, joint, out);
            chosen.pop();
        }
    }
    go(&pairs, 0, pair_bound, &mut chosen, &joint, &mut out);
    Ok(dedup_iso(out))
}

/// Single-pair external fusions gluing elements of disjoint colors.
pub fn single_pair_fusions(s1: &Structure, s2: &Structure) -> Vec<Structure> {
    let offset = s1.max_element().map_or(0, |m| m + 1);
    let s2 = s2.shifted(offset);
    let joint = s1.compose(&s2).expect("disjoint copies compose");
    let c1 = s1.coloring();
    let c2 = s2.coloring();
    let mut out = Vec::new();
    for (&a, ca) in &c1 {
        for (&b, cb) in &c2 {
            if ca.is_disjoint(cb) {
                let eq = Equiv::from_pairs([a, b], [(a, b)]);
                out.push(joint.quotient(&eq));
            }
        }
    }
    dedup_iso(out)
}

/// Precise separation-logic satisfaction of a predicate-free body: the
/// (dis)equalities hold under the store and the relation atoms denote
/// pairwise distinct tuples that together are exactly the structure.
pub fn satisfies(s: &Structure, store: &BTreeMap<Var, Element>, body: &[Atom<Var>]) -> bool {
    let val = |v: &Var| store.get(v).copied();
    let mut consumed = Structure::new();
    for a in body {
        match a {
            Atom::Emp => {}
            Atom::Eq(x, y) => match (val(x), val(y)) {
                (Some(a), Some(b)) if a == b => {}
                _ => return false,
            },
            Atom::Neq(x, y) => match (val(x), val(y)) {
                (Some(a), Some(b)) if a != b => {}
                _ => return false,
            },
            Atom::Rel(r, args) => {
                let t: Option<Vec<Element>> = args.iter().map(val).collect();
                match t {
                    Some(t) => {
                        if !consumed.insert(r, t) {
                            return false;
                        }
                    }
                    None => return false,
                }
            }
            Atom::Pred(..) => return false,
        }
    }
    consumed == *s || (consumed.is_empty() && s.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(tuples: &[(&str, &[Element])]) -> Structure {
        Structure::from_tuples(tuples.iter().map(|(r, t)| (*r, t.to_vec())))
    }

    #[test]
    fn compose_unit_and_clash() {
        let s = st(&[("a", &[0])]);
        assert_eq!(s.compose(&Structure::new()).unwrap(), s);
        assert!(matches!(s.compose(&s), Err(Error::NotLocallyDisjoint { .. })));
    }

    #[test]
    fn composition_of_two_overlapping_structures() {
        // Shares elements 1 and 2 but no tuple.
        let s1 = st(&[("r", &[0, 1]), ("r", &[1, 2]), ("a", &[3])]);
        let s2 = st(&[("r", &[2, 1]), ("a", &[1]), ("r", &[2, 4])]);
        let c = s1.compose(&s2).unwrap();
        assert_eq!(c.num_tuples(), 6);
        assert_eq!(c.support().len(), 5);
    }

    #[test]
    fn quotient_collapses() {
        let s = st(&[("a", &[0]), ("a", &[1])]);
        let eq = Equiv::from_pairs([0, 1], [(0, 1)]);
        let q = s.quotient(&eq);
        assert_eq!(q.num_tuples(), 1);
        assert!(!s.is_compatible(&eq));
        assert!(s.is_compatible(&Equiv::new()));
    }

    #[test]
    fn colors() {
        let s = st(&[("a", &[0])]);
        assert_eq!(s.color(0).unwrap(), Color::from(["a".to_string()]));
        let s = st(&[("r", &[0, 1])]);
        assert!(s.color(0).unwrap().is_empty());
        assert_eq!(s.mcolabs().to_string(), "{{},{}}");
        assert!(matches!(s.color(7), Err(Error::ElementNotInSupport(7))));
    }

    #[test]
    fn treewidth_examples() {
        assert_eq!(st(&[("r", &[0, 1])]).treewidth().unwrap(), 1);
        let cycle = st(&[("r", &[0, 1]), ("r", &[1, 2]), ("r", &[2, 3]), ("r", &[3, 0])]);
        assert_eq!(cycle.treewidth().unwrap(), 2);
        let mut grid = Structure::new();
        for i in 0..3u32 {
            for j in 0..3u32 {
                if j < 2 {
                    grid.insert("r", vec![3 * i + j, 3 * i + j + 1]);
                }
                if i < 2 {
                    grid.insert("r", vec![3 * i + j, 3 * i + j + 3]);
                }
            }
        }
        assert_eq!(grid.treewidth().unwrap(), 3);
    }

    #[test]
    fn substructures() {
        let s = st(&[("a", &[0]), ("r", &[0, 0])]);
        assert!(s.is_substructure_of(&s));
        assert!(!st(&[("a", &[0])]).is_substructure_of(&s));
    }

    #[test]
    fn satisfaction() {
        let s = st(&[("r", &[0, 1]), ("r", &[1, 2])]);
        let store: BTreeMap<Var, Element> = [("x".into(), 0), ("y".into(), 1), ("z".into(), 2)].into_iter().collect();
        let body = vec![
            Atom::Rel("r".into(), vec!["x".into(), "y".into()]),
            Atom::Rel("r".into(), vec!["y".into(), "z".into()]),
        ];
        assert!(satisfies(&s, &store, &body));
        assert!(satisfies(&Structure::new(), &store, &[Atom::Emp]));
        assert!(!satisfies(&s, &store, &[Atom::Emp]));
        let aa = vec![
            Atom::Rel("a".into(), vec!["x".into()]),
            Atom::Rel("a".into(), vec!["x".into()]),
        ];
        assert!(!satisfies(&st(&[("a", &[0])]), &store, &aa));
    }

    #[test]
    fn fusions() {
        let s = Structure::new();
        assert_eq!(internal_fusions(&s, 4).unwrap(), vec![Structure::new()]);
        // two disjoint a-b edges: a 3-element chain arises by gluing b to a
        let s = st(&[("a", &[0]), ("b", &[1]), ("r", &[0, 1]), ("a", &[2]), ("b", &[3]), ("r", &[2, 3])]);
        let chain = st(&[("a", &[0]), ("b", &[1]), ("a", &[1]), ("b", &[2]), ("r", &[0, 1]), ("r", &[1, 2])]);
        let fs = internal_fusions(&s, 8).unwrap();
        assert!(fs.iter().any(|f| f.is_isomorphic(&chain)));
        let single = external_fusions(&st(&[("a", &[0])]), &st(&[("b", &[0])]), 1).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].support().len(), 1);
        assert_eq!(single[0].mcolabs().to_string(), "{{a,b}}");
    }

    #[test]
    fn components_compose_back() {
        let s = st(&[("r", &[0, 1]), ("r", &[2, 3])]);
        let parts = s.components();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].compose(&parts[1]).unwrap(), s);
    }
}

//! Finite color abstractions: bounded color triples, their least fixpoint
//! over a SID, the single-pair fusion closure of color multisets and the
//! boundedness test on the closure.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::partition::{multiset_remove, multiset_union, sub_multisets};
use crate::structures::{show_color, Color, ColorMultiset};
use crate::syntax::{Atom, Rule, Sid, Var};

/// `⟨X, c, M⟩`: the colors of the referenced variables `X` (the keys of
/// `c`) and a k-bounded multiset of colors of unreferenced elements.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColorTriple<V: Ord> {
    pub c: BTreeMap<V, Color>,
    pub m: ColorMultiset,
}

impl<V: Ord + Clone> ColorTriple<V> {
    pub fn empty() -> Self {
        ColorTriple {
            c: BTreeMap::new(),
            m: ColorMultiset::default(),
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &V> {
        self.c.keys()
    }
}

impl<V: Ord + fmt::Display> fmt::Display for ColorTriple<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<String> = self.c.iter().map(|(v, col)| format!("{v}:{}", show_color(col))).collect();
        write!(f, "<{}; {}>", c.join(","), self.m)
    }
}

fn merge_colors<V: Ord + Clone + fmt::Debug>(
    c1: &BTreeMap<V, Color>,
    c2: &BTreeMap<V, Color>,
) -> Result<BTreeMap<V, Color>> {
    let mut c = c1.clone();
    for (v, col) in c2 {
        let e = c.entry(v.clone()).or_default();
        if !e.is_disjoint(col) {
            return Err(Error::ColorClash(format!("{v:?}")));
        }
        e.extend(col.iter().cloned());
    }
    Ok(c)
}

fn bounded(ms: &[Color], k: usize) -> impl Iterator<Item = ColorMultiset> {
    sub_multisets(ms, k).into_iter().map(ColorMultiset)
}

/// k-composition: colors of shared variables are joined (they must be
/// disjoint) and the multiset part ranges over bounded sub-multisets.
pub fn triple_compose<V: Ord + Clone + fmt::Debug>(
    t1: &ColorTriple<V>,
    t2: &ColorTriple<V>,
    k: usize,
) -> Result<BTreeSet<ColorTriple<V>>> {
    let c = merge_colors(&t1.c, &t2.c)?;
    let all = multiset_union(&t1.m.0, &t2.m.0);
    Ok(bounded(&all, k).map(|m| ColorTriple { c: c.clone(), m }).collect())
}

/// k-projection onto `keep`: the colors of dropped variables may join the
/// multiset part.
pub fn triple_project<V: Ord + Clone>(t: &ColorTriple<V>, keep: &BTreeSet<V>, k: usize) -> BTreeSet<ColorTriple<V>> {
    let mut pool = t.m.0.clone();
    let mut c = BTreeMap::new();
    for (v, col) in &t.c {
        if keep.contains(v) {
            c.insert(v.clone(), col.clone());
        } else {
            pool.push(col.clone());
        }
    }
    pool.sort();
    bounded(&pool, k).map(|m| ColorTriple { c: c.clone(), m }).collect()
}

/// The triple of a predicate-free formula: its free variables colored by
/// the diagonal atoms on them.
pub fn color_of_qpf(body: &[Atom<Var>]) -> ColorTriple<Var> {
    let mut c: BTreeMap<Var, Color> = BTreeMap::new();
    for a in body {
        if let Atom::Rel(r, args) = a {
            for v in args {
                c.entry(v.clone()).or_default();
            }
            if let Some(u) = args.first() {
                if args.iter().all(|v| v == u) {
                    c.get_mut(u).unwrap().insert(r.clone());
                }
            }
        }
    }
    ColorTriple {
        c,
        m: ColorMultiset::default(),
    }
}

/// Per predicate, the triples over its parameter positions (1-based).
pub type AbstractionResult = BTreeMap<String, BTreeSet<ColorTriple<usize>>>;

/// Least solution of the triple constraints of `gamma`, by a worklist
/// Kleene iteration. A parameter that is absent from a model's support is
/// absent from the domain of its triple.
pub fn fixpoint_triples(gamma: &Sid, k: usize) -> AbstractionResult {
    let mut sol: AbstractionResult = gamma.predicates.keys().map(|p| (p.clone(), BTreeSet::new())).collect();
    let mut users: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in gamma.rules.iter().enumerate() {
        for (q, _) in r.pred_atoms() {
            users.entry(q.as_str()).or_default().push(i);
        }
    }
    let mut queue: VecDeque<usize> = (0..gamma.rules.len()).collect();
    let mut queued = vec![true; gamma.rules.len()];
    while let Some(i) = queue.pop_front() {
        queued[i] = false;
        let rule = &gamma.rules[i];
        let fresh = apply_rule(rule, &sol, k);
        let head = sol.entry(rule.head.clone()).or_default();
        let before = head.len();
        head.extend(fresh);
        if head.len() != before {
            for &j in users.get(rule.head.as_str()).into_iter().flatten() {
                if !queued[j] {
                    queued[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    sol
}

/// One constraint: compose the qpf triple with the children's current
/// triples, then project onto the head parameters. All sets involved are
/// downward closed in the multiset part, so partial products only keep
/// multisets of size at most `k`.
fn apply_rule(rule: &Rule, sol: &AbstractionResult, k: usize) -> BTreeSet<ColorTriple<usize>> {
    let mut partial: BTreeSet<ColorTriple<Var>> = BTreeSet::from([color_of_qpf(&rule.qpf())]);
    for (q, args) in rule.pred_atoms() {
        let mut next = BTreeSet::new();
        for t in sol.get(q).into_iter().flatten() {
            let tc: BTreeMap<Var, Color> = t.c.iter().map(|(&j, col)| (args[j - 1].clone(), col.clone())).collect();
            for p in &partial {
                if p.m.len() + t.m.len() > k {
                    continue;
                }
                if let Ok(c) = merge_colors(&p.c, &tc) {
                    next.insert(ColorTriple {
                        c,
                        m: ColorMultiset(multiset_union(&p.m.0, &t.m.0)),
                    });
                }
            }
        }
        partial = next;
        if partial.is_empty() {
            return BTreeSet::new();
        }
    }
    let pos: BTreeMap<&Var, usize> = rule.params.iter().enumerate().map(|(j, v)| (v, j + 1)).collect();
    let mut out = BTreeSet::new();
    for p in partial {
        let mut pool = p.m.0.clone();
        let mut c = BTreeMap::new();
        for (v, col) in p.c {
            match pos.get(&v) {
                Some(&j) => {
                    c.insert(j, col);
                }
                None => pool.push(col),
            }
        }
        pool.sort();
        for m in bounded(&pool, k) {
            out.insert(ColorTriple { c: c.clone(), m });
        }
    }
    out
}

/// The multiset parts of the triples of a nullary predicate.
pub fn third_components(sol: &AbstractionResult, p: &str) -> BTreeSet<ColorMultiset> {
    sol.get(p).into_iter().flatten().map(|t| t.m.clone()).collect()
}

/// Closure under fusing one pair of elements with disjoint colors taken
/// from two multisets, keeping sub-multisets of size at most `k`. The
/// result is downward closed.
pub fn single_pair_fusion_closure(k: usize, s: &BTreeSet<ColorMultiset>) -> BTreeSet<ColorMultiset> {
    // `order` lists `out` in insertion order; the worklist is its suffix
    let mut out: BTreeSet<ColorMultiset> = BTreeSet::new();
    let mut order: Vec<ColorMultiset> = Vec::new();
    for m in s {
        for sub in bounded(&m.0, k) {
            if out.insert(sub.clone()) {
                order.push(sub);
            }
        }
    }
    let mut next = 0;
    while next < order.len() {
        let m1 = order[next].clone();
        next += 1;
        // pairs with later entries are handled when those are popped
        for j in 0..next {
            let m2 = order[j].clone();
            for (a, b) in [(&m1, &m2), (&m2, &m1)] {
                for fused in fuse(a, b) {
                    for sub in bounded(&fused, k) {
                        if out.insert(sub.clone()) {
                            order.push(sub);
                        }
                    }
                }
            }
        }
    }
    out
}

fn fuse(m1: &ColorMultiset, m2: &ColorMultiset) -> Vec<Vec<Color>> {
    let mut res = Vec::new();
    let d1: BTreeSet<&Color> = m1.0.iter().collect();
    let d2: BTreeSet<&Color> = m2.0.iter().collect();
    for c1 in &d1 {
        for c2 in &d2 {
            if !c1.is_disjoint(c2) {
                continue;
            }
            let r1 = multiset_remove(&m1.0, c1).unwrap();
            let r2 = multiset_remove(&m2.0, c2).unwrap();
            let joined: Color = c1.union(c2).cloned().collect();
            let mut v = multiset_union(&r1, &r2);
            v.push(joined);
            v.sort();
            res.push(v);
        }
    }
    res
}

/// The colors occurring three times in some member of the closure.
pub fn blue_colors(closure: &BTreeSet<ColorMultiset>) -> BTreeSet<Color> {
    closure
        .iter()
        .filter(|m| m.len() == 3 && m.0[0] == m.0[1] && m.0[1] == m.0[2])
        .map(|m| m.0[0].clone())
        .collect()
}

/// Boundedness holds iff the triple colors pairwise intersect; otherwise
/// a disjoint pair is returned (possibly the same color twice).
pub fn rgb_condition_check(closure: &BTreeSet<ColorMultiset>) -> (bool, Option<(Color, Color)>) {
    let blue: Vec<Color> = blue_colors(closure).into_iter().collect();
    for (i, c1) in blue.iter().enumerate() {
        for c2 in &blue[i..] {
            if c1.is_disjoint(c2) {
                return (false, Some((c1.clone(), c2.clone())));
            }
        }
    }
    (true, None)
}

/// One line per multiset, e.g. `{{a},{a,b}}`.
pub fn dump_closure(closure: &BTreeSet<ColorMultiset>) -> Vec<String> {
    closure.iter().map(|m| m.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_sid;

    fn col(xs: &[&str]) -> Color {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn ms(xs: &[&[&str]]) -> ColorMultiset {
        ColorMultiset::new(xs.iter().map(|c| col(c)).collect())
    }

    fn triple(c: &[(&str, &[&str])], m: &[&[&str]]) -> ColorTriple<String> {
        ColorTriple {
            c: c.iter().map(|(v, cs)| (v.to_string(), col(cs))).collect(),
            m: ms(m),
        }
    }

    #[test]
    fn compose() {
        let a = triple(&[("x", &["a"])], &[]);
        let b = triple(&[("x", &["b"])], &[]);
        let r = triple_compose(&a, &b, 3).unwrap();
        assert_eq!(r, BTreeSet::from([triple(&[("x", &["a", "b"])], &[])]));
        assert_eq!(triple_compose(&a, &a, 3), Err(Error::ColorClash("\"x\"".into())));
        let u = triple_compose(&triple(&[], &[&["a"], &[]]), &ColorTriple::empty(), 3).unwrap();
        assert_eq!(u.len(), 4);
    }

    #[test]
    fn project() {
        let t = triple(&[("x", &["a"]), ("y", &["b"])], &[]);
        let keep = BTreeSet::from(["x".to_string()]);
        let r = triple_project(&t, &keep, 1);
        let ms: BTreeSet<String> = r.iter().map(|t| t.m.to_string()).collect();
        assert_eq!(ms, BTreeSet::from(["{}".to_string(), "{{b}}".to_string()]));
    }

    #[test]
    fn colors_of_formulas() {
        let sid = parse_sid("rel a/1 e/2\npred A/0\nA <- exists x y . a(x) * e(x,y) * e(y,y)").unwrap();
        let t = color_of_qpf(&sid.rules[0].body);
        assert_eq!(t.c["x"], col(&["a"]));
        assert_eq!(t.c["y"], col(&["e"]));
        assert_eq!(color_of_qpf(&[Atom::Emp]), ColorTriple::empty());
    }

    #[test]
    fn one_step_fixpoint() {
        let sid = parse_sid("rel a/1\npred P/0\nP <- exists y . a(y)").unwrap();
        let sol = fixpoint_triples(&sid, 3);
        assert_eq!(third_components(&sol, "P"), BTreeSet::from([ms(&[]), ms(&[&["a"]])]));
        let empty = parse_sid("pred P/0").unwrap();
        assert!(third_components(&fixpoint_triples(&empty, 3), "P").is_empty());
    }

    #[test]
    fn fusion_closure() {
        let got = single_pair_fusion_closure(3, &BTreeSet::from([ms(&[&[]])]));
        assert_eq!(got, BTreeSet::from([ms(&[]), ms(&[&[]])]));
        let got = single_pair_fusion_closure(3, &BTreeSet::from([ms(&[&["a"], &["b"]])]));
        assert!(got.contains(&ms(&[&["a", "b"], &["a"], &["b"]])));
        assert!(single_pair_fusion_closure(3, &BTreeSet::new()).is_empty());
    }

    #[test]
    fn rgb() {
        let cl = BTreeSet::from([ms(&[&["a"], &["a"], &["a"]]), ms(&[&["b"], &["b"], &["b"]])]);
        assert_eq!(rgb_condition_check(&cl), (false, Some((col(&["a"]), col(&["b"])))));
        let cl = BTreeSet::from([ms(&[&["a"], &["a"], &["a"]]), ms(&[&["a", "b"], &["a", "b"], &["a", "b"]])]);
        assert!(rgb_condition_check(&cl).0);
        assert!(rgb_condition_check(&BTreeSet::new()).0);
    }
}

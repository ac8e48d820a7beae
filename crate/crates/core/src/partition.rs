//! Equivalence relations, set partitions and bounded sub-multisets.

use std::collections::{BTreeMap, BTreeSet};

/// An equivalence relation over a finite field of values, kept as a
/// union-find forest. Values outside the field are related only to
/// themselves.
#[derive(Clone, Debug, Default)]
pub struct Equiv<V: Ord + Clone> {
    index: BTreeMap<V, usize>,
    parent: Vec<usize>,
}

impl<V: Ord + Clone> Equiv<V> {
    pub fn new() -> Self {
        Equiv {
            index: BTreeMap::new(),
            parent: Vec::new(),
        }
    }

    pub fn from_pairs<I: IntoIterator<Item = (V, V)>>(field: impl IntoIterator<Item = V>, pairs: I) -> Self {
        let mut eq = Equiv::new();
        for v in field {
            eq.add(v);
        }
        for (a, b) in pairs {
            eq.union(&a, &b);
        }
        eq
    }

    pub fn add(&mut self, v: V) -> usize {
        if let Some(&i) = self.index.get(&v) {
            return i;
        }
        let i = self.parent.len();
        self.parent.push(i);
        self.index.insert(v, i);
        i
    }

    fn root(&self, mut i: usize) -> usize {
        while self.parent[i] != i {
            i = self.parent[i];
        }
        i
    }

    pub fn union(&mut self, a: &V, b: &V) {
        let ia = self.add(a.clone());
        let ib = self.add(b.clone());
        let (ra, rb) = (self.root(ia), self.root(ib));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    pub fn contains(&self, v: &V) -> bool {
        self.index.contains_key(v)
    }

    pub fn same(&self, a: &V, b: &V) -> bool {
        if a == b {
            return true;
        }
        match (self.index.get(a), self.index.get(b)) {
            (Some(&x), Some(&y)) => self.root(x) == self.root(y),
            _ => false,
        }
    }

    pub fn field(&self) -> impl Iterator<Item = &V> {
        self.index.keys()
    }

    /// Classes ordered by their least member; members sorted.
    pub fn classes(&self) -> Vec<BTreeSet<V>> {
        let mut by_root: BTreeMap<usize, BTreeSet<V>> = BTreeMap::new();
        for (v, &i) in &self.index {
            by_root.entry(self.root(i)).or_default().insert(v.clone());
        }
        let mut out: Vec<BTreeSet<V>> = by_root.into_values().collect();
        out.sort();
        out
    }

    /// The class of `v` (a singleton when `v` is outside the field).
    pub fn class_of(&self, v: &V) -> BTreeSet<V> {
        match self.index.get(v) {
            None => BTreeSet::from([v.clone()]),
            Some(&i) => {
                let r = self.root(i);
                self.index
                    .iter()
                    .filter(|(_, &j)| self.root(j) == r)
                    .map(|(w, _)| w.clone())
                    .collect()
            }
        }
    }

    /// Map from every field member to the least member of its class.
    pub fn rep_map(&self) -> BTreeMap<V, V> {
        let mut out = BTreeMap::new();
        for class in self.classes() {
            let rep = class.iter().next().unwrap().clone();
            for v in class {
                out.insert(v, rep.clone());
            }
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        self.classes().iter().all(|c| c.len() == 1)
    }

    /// All related pairs (a, b) with a != b.
    pub fn pairs(&self) -> Vec<(V, V)> {
        let mut out = Vec::new();
        for c in self.classes() {
            for a in &c {
                for b in &c {
                    if a != b {
                        out.push((a.clone(), b.clone()));
                    }
                }
            }
        }
        out
    }
}

impl<V: Ord + Clone> PartialEq for Equiv<V> {
    fn eq(&self, other: &Self) -> bool {
        self.classes() == other.classes()
    }
}

impl<V: Ord + Clone> Eq for Equiv<V> {}

/// All set partitions of `0..n` as restricted-growth strings
/// (`block[i]` is the block index of `i`).
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn go(n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..=max {
            cur.push(b);
            go(n, cur, if b == max { max + 1 } else { max }, out);
            cur.pop();
        }
    }
    go(n, &mut cur, 0, &mut out);
    out
}

/// Blocks of a restricted-growth string, each block sorted.
pub fn blocks(rgs: &[usize]) -> Vec<Vec<usize>> {
    let nb = rgs.iter().map(|b| b + 1).max().unwrap_or(0);
    let mut out = vec![Vec::new(); nb];
    for (i, &b) in rgs.iter().enumerate() {
        out[b].push(i);
    }
    out
}

/// All sub-multisets of `ms` (a sorted multiset) with at most `k` members.
pub fn sub_multisets<T: Ord + Clone>(ms: &[T], k: usize) -> BTreeSet<Vec<T>> {
    let mut counts: Vec<(T, usize)> = Vec::new();
    for x in ms {
        match counts.last_mut() {
            Some((y, c)) if y == x => *c += 1,
            _ => counts.push((x.clone(), 1)),
        }
    }
    let mut out = BTreeSet::new();
    let mut cur = Vec::new();
    fn go<T: Ord + Clone>(
        counts: &[(T, usize)],
        i: usize,
        k: usize,
        cur: &mut Vec<T>,
        out: &mut BTreeSet<Vec<T>>,
    ) {
        if i == counts.len() {
            out.insert(cur.clone());
            return;
        }
        let (x, c) = &counts[i];
        let room = k - cur.len();
        for take in 0..=(*c).min(room) {
            for _ in 0..take {
                cur.push(x.clone());
            }
            go(counts, i + 1, k, cur, out);
            for _ in 0..take {
                cur.pop();
            }
        }
    }
    go(&counts, 0, k, &mut cur, &mut out);
    out
}

/// Sorted multiset union.
pub fn multiset_union<T: Ord + Clone>(a: &[T], b: &[T]) -> Vec<T> {
    let mut v: Vec<T> = a.iter().chain(b.iter()).cloned().collect();
    v.sort();
    v
}

/// Remove one occurrence of `x` from a sorted multiset.
pub fn multiset_remove<T: Ord + Clone>(a: &[T], x: &T) -> Option<Vec<T>> {
    let pos = a.iter().position(|y| y == x)?;
    let mut v = a.to_vec();
    v.remove(pos);
    Some(v)
}

/// Is `a` a sub-multiset of `b` (both sorted)?
pub fn is_sub_multiset<T: Ord>(a: &[T], b: &[T]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() {
        if j == b.len() {
            return false;
        }
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Less => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (0..7).map(|n| set_partitions(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 15, 52, 203]);
    }

    #[test]
    fn equiv_classes() {
        let eq = Equiv::from_pairs(["x", "y", "z", "w"], [("x", "y"), ("y", "z")]);
        assert!(eq.same(&"x", &"z"));
        assert!(!eq.same(&"x", &"w"));
        assert_eq!(eq.classes().len(), 2);
        assert!(eq.same(&"q", &"q"));
    }

    #[test]
    fn bounded_sub_multisets() {
        let s = sub_multisets(&[1, 1, 2], 2);
        let expected: BTreeSet<Vec<i32>> =
            [vec![], vec![1], vec![2], vec![1, 1], vec![1, 2]].into_iter().collect();
        assert_eq!(s, expected);
    }
}

//! Canonical labelling by color refinement and individualization.
//!
//! Components are labelled separately and then sorted, which keeps the
//! search small for structures made of many interchangeable pieces.

use std::collections::BTreeMap;

use super::{Element, Structure};

/// An isomorphism-invariant encoding of a structure.
pub type CanonicalForm = Vec<(String, Vec<u32>)>;

struct Indexed {
    n: usize,
    tuples: Vec<(usize, Vec<usize>)>,
    rel_names: Vec<String>,
    incidence: Vec<Vec<(usize, usize)>>,
}

impl Indexed {
    fn new(s: &Structure) -> Self {
        let elems: Vec<Element> = s.support().into_iter().collect();
        let idx: BTreeMap<Element, usize> = elems.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let rel_names: Vec<String> = s.relation_names().cloned().collect();
        let rid: BTreeMap<&String, usize> = rel_names.iter().enumerate().map(|(i, r)| (r, i)).collect();
        let mut tuples = Vec::new();
        let mut incidence = vec![Vec::new(); elems.len()];
        for (r, t) in s.tuples() {
            let ti = tuples.len();
            let t: Vec<usize> = t.iter().map(|e| idx[e]).collect();
            for (p, &e) in t.iter().enumerate() {
                incidence[e].push((ti, p));
            }
            tuples.push((rid[r], t));
        }
        Indexed {
            n: elems.len(),
            tuples,
            rel_names,
            incidence,
        }
    }

    /// Refine until stable; colors are ranks of signatures, so the order
    /// of existing cells is preserved.
    fn refine(&self, mut colors: Vec<usize>) -> Vec<usize> {
        let mut cells = count_distinct(&colors);
        loop {
            let sigs: Vec<(usize, Vec<(usize, usize, Vec<usize>)>)> = (0..self.n)
                .map(|v| {
                    let mut inc: Vec<(usize, usize, Vec<usize>)> = self.incidence[v]
                        .iter()
                        .map(|&(ti, p)| {
                            let (r, t) = &self.tuples[ti];
                            (*r, p, t.iter().map(|&e| colors[e]).collect())
                        })
                        .collect();
                    inc.sort();
                    (colors[v], inc)
                })
                .collect();
            let mut sorted: Vec<_> = sigs.iter().collect();
            sorted.sort();
            sorted.dedup();
            let next: Vec<usize> = sigs.iter().map(|s| sorted.binary_search(&s).unwrap()).collect();
            let c = sorted.len();
            colors = next;
            if c == cells {
                return colors;
            }
            cells = c;
        }
    }

    fn encode(&self, perm: &[usize]) -> CanonicalForm {
        let mut out: CanonicalForm = self
            .tuples
            .iter()
            .map(|(r, t)| (self.rel_names[*r].clone(), t.iter().map(|&e| perm[e] as u32).collect()))
            .collect();
        out.sort();
        out
    }

    fn search(&self, colors: Vec<usize>, best: &mut Option<CanonicalForm>) {
        let colors = self.refine(colors);
        let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
        for &c in &colors {
            *sizes.entry(c).or_default() += 1;
        }
        let target = sizes.iter().find(|(_, &k)| k > 1).map(|(&c, _)| c);
        match target {
            None => {
                let code = self.encode(&colors);
                if best.as_ref().is_none_or(|b| code < *b) {
                    *best = Some(code);
                }
            }
            Some(c) => {
                for v in (0..self.n).filter(|&v| colors[v] == c) {
                    let next: Vec<usize> = colors
                        .iter()
                        .enumerate()
                        .map(|(w, &cw)| if w == v { 2 * cw } else { 2 * cw + 1 })
                        .collect();
                    self.search(next, best);
                }
            }
        }
    }
}

fn count_distinct(colors: &[usize]) -> usize {
    let mut v = colors.to_vec();
    v.sort();
    v.dedup();
    v.len()
}

fn canonical_connected(s: &Structure) -> CanonicalForm {
    let ix = Indexed::new(s);
    let mut best = None;
    ix.search(vec![0; ix.n], &mut best);
    best.unwrap_or_default()
}

impl Structure {
    /// Equal for two structures iff they are isomorphic.
    pub fn canonical_form(&self) -> CanonicalForm {
        let mut parts: Vec<(usize, CanonicalForm)> = self
            .components()
            .iter()
            .map(|c| (c.support().len(), canonical_connected(c)))
            .collect();
        parts.sort();
        let mut out = Vec::new();
        let mut offset = 0u32;
        for (n, code) in parts {
            out.extend(code.into_iter().map(|(r, t)| (r, t.into_iter().map(|e| e + offset).collect())));
            offset += n as u32;
        }
        out
    }
}

//! Preprocessing: sentence wrapping, equality elimination,
//! all-satisfiability, disequality stripping and trimming.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::partition::{blocks, set_partitions, Equiv};
use crate::syntax::{Atom, Formula, Rule, Sid, Var};

/// Add a fresh nullary root defined by the single rule `root <- phi`.
///
/// When `phi` is already a nullary predicate atom that no rule body
/// mentions, the SID is returned unchanged with that predicate as root.
pub fn wrap_sentence(sid: &Sid, phi: &Formula) -> (Sid, String) {
    if let [Atom::Pred(p, args)] = phi.atoms.as_slice() {
        let used = sid.rules.iter().any(|r| r.body.iter().any(|a| matches!(a, Atom::Pred(q, _) if q == p)));
        if args.is_empty() && phi.exists.is_empty() && !used {
            return (sid.clone(), p.clone());
        }
    }
    let mut out = sid.clone();
    let root = sid.fresh_symbol("Root");
    out.predicates.insert(root.clone(), 0);
    out.rules.push(Rule {
        head: root.clone(),
        params: vec![],
        exists: phi.exists.clone(),
        body: phi.atoms.clone(),
    });
    (out, root)
}

/// Sentence `exists x1..xn . P(x1..xn)` for a predicate of any arity.
pub fn root_sentence(sid: &Sid, p: &str) -> Result<Formula> {
    let n = sid.arity(p).ok_or_else(|| Error::UndeclaredSymbol {
        line: 0,
        column: 0,
        symbol: p.to_string(),
    })?;
    let xs: Vec<Var> = (1..=n).map(|i| format!("x{i}")).collect();
    Ok(Formula {
        exists: xs.clone(),
        atoms: vec![Atom::Pred(p.to_string(), xs)],
    })
}

fn show_partition(rgs: &[usize]) -> String {
    blocks(rgs)
        .iter()
        .map(|b| format!("{{{}}}", b.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")))
        .collect()
}

fn is_finest(rgs: &[usize]) -> bool {
    rgs.iter().enumerate().all(|(i, &b)| i == b)
}

fn variant_name(p: &str, rgs: &[usize]) -> String {
    if is_finest(rgs) {
        p.to_string()
    } else {
        format!("{p}@{}", show_partition(rgs))
    }
}

/// Kernel of an argument list modulo an equivalence, as a restricted
/// growth string.
fn kernel(args: &[Var], eq: &Equiv<Var>) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(args.len());
    let mut next = 0;
    for (i, a) in args.iter().enumerate() {
        match (0..i).find(|&j| eq.same(&args[j], a)) {
            Some(j) => out.push(out[j]),
            None => {
                out.push(next);
                next += 1;
            }
        }
    }
    out
}

/// Equality elimination: predicates are split into variants indexed by a
/// partition of their parameters (which parameters are equal); only the
/// variants reachable from `root` are generated. The root keeps its name.
pub fn eliminate_equalities(sid: &Sid, root: &str) -> Result<Sid> {
    let mut out = Sid {
        relations: sid.relations.clone(),
        predicates: IndexMap::new(),
        rules: vec![],
    };
    let root_arity = sid.arity(root).ok_or_else(|| Error::Invariant(format!("undeclared root `{root}`")))?;
    let start: Vec<usize> = (0..root_arity).collect();
    let mut seen: BTreeSet<(String, Vec<usize>)> = BTreeSet::new();
    let mut queue = VecDeque::from([(root.to_string(), start.clone())]);
    seen.insert((root.to_string(), start));
    while let Some((p, pi)) = queue.pop_front() {
        let name = variant_name(&p, &pi);
        out.predicates.insert(name.clone(), blocks(&pi).len());
        for rule in sid.rules_of(&p) {
            let atoms: Vec<(&String, &Vec<Var>)> = rule.pred_atoms().collect();
            let choices: Vec<Vec<Vec<usize>>> = atoms.iter().map(|(_, args)| set_partitions(args.len())).collect();
            let mut idx = vec![0usize; atoms.len()];
            'product: loop {
                let sigmas: Vec<&Vec<usize>> = idx.iter().zip(&choices).map(|(&i, c)| &c[i]).collect();
                if let Some((r, calls)) = unify_variant(rule, &name, &pi, &atoms, &sigmas) {
                    for c in calls {
                        if seen.insert(c.clone()) {
                            queue.push_back(c);
                        }
                    }
                    if !out.rules.contains(&r) {
                        out.rules.push(r);
                    }
                }
                for k in 0..idx.len() {
                    idx[k] += 1;
                    if idx[k] < choices[k].len() {
                        continue 'product;
                    }
                    idx[k] = 0;
                }
                break;
            }
        }
    }
    out.restrict_signature();
    Ok(out)
}

type Call = (String, Vec<usize>);

fn unify_variant(
    rule: &Rule,
    name: &str,
    pi: &[usize],
    atoms: &[(&String, &Vec<Var>)],
    sigmas: &[&Vec<usize>],
) -> Option<(Rule, Vec<Call>)> {
    let mut eq: Equiv<Var> = Equiv::new();
    for v in rule.params.iter().chain(&rule.exists) {
        eq.add(v.clone());
    }
    for a in &rule.body {
        if let Atom::Eq(x, y) = a {
            eq.union(x, y);
        }
    }
    for b in blocks(pi) {
        for &i in &b {
            eq.union(&rule.params[b[0]], &rule.params[i]);
        }
    }
    for ((_, args), sigma) in atoms.iter().zip(sigmas) {
        for b in blocks(sigma) {
            for &i in &b {
                eq.union(&args[b[0]], &args[i]);
            }
        }
    }
    if kernel(&rule.params, &eq) != pi {
        return None;
    }
    for ((_, args), sigma) in atoms.iter().zip(sigmas) {
        if kernel(args, &eq) != **sigma {
            return None;
        }
    }
    // class representative: first parameter in the class, else least member
    let mut rep: BTreeMap<Var, Var> = BTreeMap::new();
    for class in eq.classes() {
        let r = rule
            .params
            .iter()
            .find(|p| class.contains(*p))
            .cloned()
            .unwrap_or_else(|| class.iter().next().unwrap().clone());
        for v in class {
            rep.insert(v, r.clone());
        }
    }
    let rp = |v: &Var| rep.get(v).cloned().unwrap_or_else(|| v.clone());
    let mut body = Vec::new();
    let mut calls = Vec::new();
    let mut ai = 0;
    for a in &rule.body {
        match a {
            Atom::Emp | Atom::Eq(..) => {}
            Atom::Neq(x, y) => {
                if eq.same(x, y) {
                    return None;
                }
                body.push(Atom::Neq(rp(x), rp(y)));
            }
            Atom::Rel(r, args) => body.push(Atom::Rel(r.clone(), args.iter().map(&rp).collect())),
            Atom::Pred(q, args) => {
                let sigma = sigmas[ai];
                ai += 1;
                let new_args: Vec<Var> = blocks(sigma).iter().map(|b| rp(&args[b[0]])).collect();
                body.push(Atom::Pred(variant_name(q, sigma), new_args));
                calls.push((q.clone(), sigma.clone()));
            }
        }
    }
    let params: Vec<Var> = blocks(pi).iter().map(|b| rule.params[b[0]].clone()).collect();
    let used: BTreeSet<Var> = body.iter().flat_map(|a| a.vars().into_iter().cloned()).collect();
    let mut exists: Vec<Var> = Vec::new();
    for y in &rule.exists {
        let r = rp(y);
        if !params.contains(&r) && used.contains(&r) && !exists.contains(&r) {
            exists.push(r);
        }
    }
    Some((
        Rule {
            head: name.to_string(),
            params,
            exists,
            body,
        },
        calls,
    ))
}

/// A base: for each relation, the tuples of parameter indices (0-based)
/// that the predicate is guaranteed to interpret.
pub type Base = BTreeMap<String, BTreeSet<Vec<usize>>>;

fn show_base(b: &Base) -> String {
    let parts: Vec<String> = b
        .iter()
        .flat_map(|(r, ts)| {
            ts.iter().map(move |t| {
                let args: Vec<String> = t.iter().map(|i| (i + 1).to_string()).collect();
                format!("{r}({})", args.join(","))
            })
        })
        .collect();
    format!("{{{}}}", parts.join(","))
}

/// Base of the rule body under chosen child bases, projected on the head
/// parameters; `None` when the composition repeats a tuple.
fn rule_base(rule: &Rule, child_bases: &[&Base]) -> Option<Base> {
    let mut all: BTreeMap<String, BTreeSet<Vec<Var>>> = BTreeMap::new();
    for a in &rule.body {
        if let Atom::Rel(r, args) = a {
            if !all.entry(r.clone()).or_default().insert(args.clone()) {
                return None;
            }
        }
    }
    for ((_, args), base) in rule.pred_atoms().zip(child_bases) {
        for (r, ts) in base.iter() {
            for t in ts {
                let tv: Vec<Var> = t.iter().map(|&i| args[i].clone()).collect();
                if !all.entry(r.clone()).or_default().insert(tv) {
                    return None;
                }
            }
        }
    }
    let pos: BTreeMap<&Var, usize> = rule.params.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut out = Base::new();
    for (r, ts) in all {
        for t in ts {
            if let Some(ti) = t.iter().map(|v| pos.get(v).copied()).collect::<Option<Vec<usize>>>() {
                out.entry(r.clone()).or_default().insert(ti);
            }
        }
    }
    Some(out)
}

fn for_each_combo<T>(options: &[Vec<T>], mut f: impl FnMut(&[&T])) {
    if options.iter().any(|o| o.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; options.len()];
    loop {
        let pick: Vec<&T> = idx.iter().zip(options).map(|(&i, o)| &o[i]).collect();
        f(&pick);
        let mut k = 0;
        loop {
            if k == idx.len() {
                return;
            }
            idx[k] += 1;
            if idx[k] < options[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Derivable bases per predicate (least fixpoint, bottom-up).
pub fn derivable_bases(sid: &Sid) -> BTreeMap<String, BTreeSet<Base>> {
    let mut bases: BTreeMap<String, BTreeSet<Base>> = BTreeMap::new();
    loop {
        let mut changed = false;
        for rule in &sid.rules {
            let options: Vec<Vec<Base>> = rule
                .pred_atoms()
                .map(|(q, _)| bases.get(q).map(|s| s.iter().cloned().collect()).unwrap_or_default())
                .collect();
            let mut found = Vec::new();
            for_each_combo(&options, |pick| {
                if let Some(b) = rule_base(rule, pick) {
                    found.push(b);
                }
            });
            for b in found {
                changed |= bases.entry(rule.head.clone()).or_default().insert(b);
            }
        }
        if !changed {
            return bases;
        }
    }
}

/// All-satisfiability: annotate predicates with their derivable bases and
/// keep exactly the rule instances whose composed base is a set.
pub fn make_all_satisfiable(sid: &Sid, root: &str) -> Result<Sid> {
    let bases = derivable_bases(sid);
    let root_bases = bases.get(root).cloned().unwrap_or_default();
    if root_bases.is_empty() {
        return Err(Error::EmptySemantics);
    }
    let name = |p: &str, b: &Base| -> String {
        if bases.get(p).is_some_and(|s| s.len() == 1) {
            p.to_string()
        } else {
            format!("{p}#{}", show_base(b))
        }
    };
    let mut out = Sid {
        relations: sid.relations.clone(),
        predicates: IndexMap::new(),
        rules: vec![],
    };
    let root_arity = sid.arity(root).unwrap_or(0);
    out.predicates.insert(root.to_string(), root_arity);
    let mut seen: BTreeSet<(String, Base)> = BTreeSet::new();
    let mut queue: VecDeque<(String, Base)> = VecDeque::new();
    if root_bases.len() > 1 {
        let xs: Vec<Var> = (1..=root_arity).map(|i| format!("x{i}")).collect();
        for b in &root_bases {
            out.rules.push(Rule {
                head: root.to_string(),
                params: xs.clone(),
                exists: vec![],
                body: vec![Atom::Pred(name(root, b), xs.clone())],
            });
        }
    }
    for b in root_bases {
        seen.insert((root.to_string(), b.clone()));
        queue.push_back((root.to_string(), b));
    }
    while let Some((p, b0)) = queue.pop_front() {
        let head = name(&p, &b0);
        out.predicates.insert(head.clone(), sid.arity(&p).unwrap_or(0));
        for rule in sid.rules_of(&p) {
            let children: Vec<String> = rule.pred_atoms().map(|(q, _)| q.clone()).collect();
            let options: Vec<Vec<Base>> = children
                .iter()
                .map(|q| bases.get(q).map(|s| s.iter().cloned().collect()).unwrap_or_default())
                .collect();
            let mut emitted = Vec::new();
            for_each_combo(&options, |pick| {
                if rule_base(rule, pick).as_ref() == Some(&b0) {
                    emitted.push(pick.iter().map(|b| (*b).clone()).collect::<Vec<Base>>());
                }
            });
            for pick in emitted {
                let mut body = Vec::new();
                let mut ci = 0;
                for a in &rule.body {
                    match a {
                        Atom::Pred(q, args) => {
                            let b = &pick[ci];
                            ci += 1;
                            body.push(Atom::Pred(name(q, b), args.clone()));
                            if seen.insert((q.clone(), b.clone())) {
                                queue.push_back((q.clone(), b.clone()));
                            }
                        }
                        other => body.push(other.clone()),
                    }
                }
                out.rules.push(Rule {
                    head: head.clone(),
                    params: rule.params.clone(),
                    exists: rule.exists.clone(),
                    body,
                });
            }
        }
    }
    out.restrict_signature();
    Ok(out)
}

/// Remove every disequality atom (valid in all canonical models of an
/// all-satisfiable, equality-free SID).
pub fn strip_disequalities(sid: &Sid) -> Sid {
    let mut out = sid.clone();
    for r in &mut out.rules {
        r.body.retain(|a| !matches!(a, Atom::Neq(..)));
    }
    out
}

/// Keep the rules of predicates reachable from `root` that are productive.
pub fn trim(sid: &Sid, root: &str) -> Result<Sid> {
    let mut productive: BTreeSet<&str> = BTreeSet::new();
    loop {
        let before = productive.len();
        for r in &sid.rules {
            if r.pred_atoms().all(|(q, _)| productive.contains(q.as_str())) {
                productive.insert(&r.head);
            }
        }
        if productive.len() == before {
            break;
        }
    }
    if !productive.contains(root) {
        return Err(Error::EmptySemantics);
    }
    let good = |r: &Rule| productive.contains(r.head.as_str()) && r.pred_atoms().all(|(q, _)| productive.contains(q.as_str()));
    let mut reach: BTreeSet<&str> = BTreeSet::from([root]);
    let mut stack = vec![root];
    while let Some(p) = stack.pop() {
        for r in sid.rules_of(p).filter(|r| good(r)) {
            for (q, _) in r.pred_atoms() {
                if reach.insert(q) {
                    stack.push(q);
                }
            }
        }
    }
    let mut out = sid.clone();
    out.rules = sid.rules.iter().filter(|r| reach.contains(r.head.as_str()) && good(r)).cloned().collect();
    out.predicates.retain(|p, _| reach.contains(p.as_str()));
    out.restrict_signature();
    if !out.predicates.contains_key(root) {
        out.predicates.insert(root.to_string(), sid.arity(root).unwrap_or(0));
    }
    Ok(out)
}

/// The full preprocessing chain for a nullary root.
pub fn normalize(sid: &Sid, root: &str) -> Result<Sid> {
    let s = eliminate_equalities(sid, root)?;
    let s = trim(&s, root)?;
    let s = make_all_satisfiable(&s, root)?;
    let s = trim(&s, root)?;
    Ok(strip_disequalities(&s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_formula, parse_sid};

    #[test]
    fn wrapping() {
        let sid = parse_sid("rel a/1\npred A/0\nA <- emp").unwrap();
        let (s, root) = wrap_sentence(&sid, &parse_formula("A", &sid).unwrap());
        assert_eq!(root, "A");
        assert_eq!(s, sid);
        let (s, root) = wrap_sentence(&sid, &parse_formula("emp", &sid).unwrap());
        assert_eq!(root, "Root");
        assert_eq!(s.rules.len(), 2);
    }

    #[test]
    fn equality_variant() {
        let sid = parse_sid("rel a/1\npred B/2 A/0\nA <- exists u v . B(u,v)\nB(x1,x2) <- x1 = x2 * a(x1)").unwrap();
        let out = eliminate_equalities(&sid, "A").unwrap();
        let text = out.to_string();
        assert!(text.contains("A <- exists u . B@{1,2}(u)"), "{text}");
        assert!(text.contains("B@{1,2}(x1) <- a(x1)"), "{text}");
        assert!(!out.rules.iter().any(|r| r.body.iter().any(|a| matches!(a, Atom::Eq(..)))));
    }

    #[test]
    fn duplicate_tuple_is_unsatisfiable() {
        let sid = parse_sid("rel a/1\npred A/0\nA <- exists y . a(y) * a(y)").unwrap();
        assert_eq!(make_all_satisfiable(&sid, "A"), Err(Error::EmptySemantics));
    }

    #[test]
    fn base_split() {
        // B may or may not emit a(x1); calling it twice on one variable
        // must avoid the doubled tuple
        let sid = parse_sid(
            "rel a/1 b/1\npred A/0 B/1\nA <- exists y . B(y) * B(y)\nB(x1) <- a(x1)\nB(x1) <- b(x1)",
        )
        .unwrap();
        let out = make_all_satisfiable(&sid, "A").unwrap();
        let roots: Vec<&Rule> = out.rules_of("A").collect();
        assert_eq!(roots.len(), 2, "{out}");
    }

    #[test]
    fn trimming() {
        let sid = parse_sid("rel a/1\npred A/0 B/0 C/0\nA <- exists y . a(y)\nA <- B\nB <- B\nC <- emp").unwrap();
        let t = trim(&sid, "A").unwrap();
        assert_eq!(t.rules.len(), 1);
        assert!(!t.predicates.contains_key("C"));
        assert!(!t.predicates.contains_key("B"));
    }

    #[test]
    fn strip() {
        let sid = parse_sid("rel a/1\npred A/1\nA(x) <- exists y . a(x) * x != y").unwrap();
        assert_eq!(strip_disequalities(&sid).rules[0].body.len(), 1);
    }
}

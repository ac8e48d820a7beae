//! One PASS/FAIL line per acceptance criterion.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use slrtwb::abstraction::{fixpoint_triples, single_pair_fusion_closure, third_components};
use slrtwb::automata::{choice_free_decompose, profile, sid_to_automaton, stage1_strip, Automaton, State};
use slrtwb::cli::dump_stages;
use slrtwb::decide::{check_expandable, check_twb, Kind};
use slrtwb::mcs::build_mcs_sid;
use slrtwb::normalize::{normalize, root_sentence, wrap_sentence};
use slrtwb::oracle::{
    brute_funsplit_kmcolabs, brute_fusion_closure, brute_kmcolabs, enumerate_canonical_models, funsplit,
    realize_triple, Budget,
};
use slrtwb::partition::Equiv;
use slrtwb::structures::{internal_fusions, Structure};
use slrtwb::syntax::{measures, Atom, Formula};
use slrtwb::{parse_sid, Sid};

const FIXTURES: [&str; 8] = ["fig1a", "fig1b", "fig1c", "fig1d", "expandable", "expandable_tb", "sid_ta", "running"];

fn load(name: &str) -> (Sid, Formula) {
    let text = std::fs::read_to_string(format!("{}/fixtures/{name}.sid", env!("CARGO_MANIFEST_DIR"))).unwrap();
    let sid = parse_sid(&text).unwrap();
    let phi = root_sentence(&sid, "A").unwrap();
    (sid, phi)
}

/// Canonical models of the wrapped root, with the maximal variable count.
fn models(name: &str, steps: usize) -> (Vec<Structure>, usize) {
    let (sid, phi) = load(name);
    let (w, root) = wrap_sentence(&sid, &phi);
    let b = Budget {
        max_steps: steps,
        ..Budget::default()
    };
    let en = enumerate_canonical_models(&w, &Formula::atom(Atom::Pred(root, vec![])), b).unwrap();
    (en.models, measures(&w).max_var_in_rule)
}

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn c1_verdicts() -> Outcome {
    let want = [("fig1a", Kind::Bounded), ("fig1b", Kind::Unbounded), ("fig1c", Kind::Bounded), ("fig1d", Kind::Unbounded)];
    let mut got = Vec::new();
    for (f, k) in want {
        let (sid, phi) = load(f);
        let v = check_twb(&sid, &phi).unwrap();
        got.push(format!("{f}={:?}", v.kind));
        if v.kind != k {
            return outcome(false, got.join(" "));
        }
    }
    outcome(true, got.join(" "))
}

fn c2_expandable_bound() -> Outcome {
    let (sid, phi) = load("expandable_tb");
    let v = check_expandable(&sid, &phi).unwrap();
    let (ms, _) = models("expandable_tb", 6);
    let mut worst = 0;
    for s in ms.iter().filter(|s| s.support().len() <= 8) {
        for f in internal_fusions(s, 8).unwrap() {
            worst = worst.max(f.treewidth().unwrap());
        }
    }
    let ok = v.kind == Kind::Bounded && v.bound == Some(2) && worst == 2;
    outcome(ok, format!("bound={:?} max fused tw={worst} gap={:?}", v.bound, v.bound.map(|b| b as i64 - worst as i64)))
}

fn profile_of(name: &str) -> Vec<(String, BTreeSet<usize>)> {
    let (sid, _) = load(name);
    let parts = choice_free_decompose(&sid_to_automaton(&sid, "A").unwrap()).unwrap();
    let s1 = stage1_strip(&parts[0]);
    s1.states.iter().map(|q| q.name.clone()).zip(profile(&s1)).collect()
}

fn c3_profiles() -> Outcome {
    let ta = profile_of("sid_ta");
    let run = profile_of("running");
    let ok = ta == vec![("A".into(), BTreeSet::new()), ("B".into(), BTreeSet::from([2, 3]))]
        && run[1..] == [("C1".into(), BTreeSet::from([2, 3])), ("C2".into(), BTreeSet::from([2, 3]))];
    outcome(ok, format!("{ta:?} {run:?}"))
}

fn c4_choice_free() -> Outcome {
    let mut a: Automaton<String> = Automaton::new(State::new("q0", 0));
    let q: Vec<usize> = (1..=5).map(|i| a.add_state(State::new(format!("q{i}"), 0))).collect();
    for (src, l, tgt) in [
        (0, "a", vec![0, q[0]]),
        (q[0], "b", vec![q[0]]),
        (q[0], "c", vec![]),
        (0, "b", vec![q[1]]),
        (q[1], "a", vec![q[1], q[1]]),
        (q[1], "b", vec![q[2]]),
        (q[1], "b", vec![q[3]]),
        (q[2], "c", vec![]),
        (q[3], "c", vec![]),
        (0, "b", vec![q[4]]),
        (q[4], "c", vec![]),
    ] {
        a.add_transition(src, l.to_string(), tgt, None);
    }
    let a1: BTreeSet<&str> = BTreeSet::from([
        "q0 --[a]--> (q0,q1) (∞)",
        "q1 --[b]--> (q1) (∞)",
        "q1 --[c]--> () (∞)",
        "q0 --[b]--> (q2) (1)",
        "q2 --[a]--> (q2,q2) (∞)",
        "q2 --[b]--> (q3) (∞)",
        "q2 --[b]--> (q4) (∞)",
        "q3 --[c]--> () (∞)",
        "q4 --[c]--> () (∞)",
    ]);
    let a2: BTreeSet<&str> = BTreeSet::from([
        "q0 --[a]--> (q0,q1) (∞)",
        "q1 --[b]--> (q1) (∞)",
        "q1 --[c]--> () (∞)",
        "q0 --[b]--> (q5) (1)",
        "q5 --[c]--> () (1)",
    ]);
    let parts: Vec<Vec<String>> = choice_free_decompose(&a).unwrap().iter().map(|p| p.dump()).collect();
    let sets: Vec<BTreeSet<&str>> = parts.iter().map(|p| p.iter().map(String::as_str).collect()).collect();
    let ok = sets.len() == 2 && sets.contains(&a1) && sets.contains(&a2);
    outcome(ok, format!("{} parts", sets.len()))
}

fn c5_stages() -> Outcome {
    let (sid, phi) = load("running");
    let dump = dump_stages(&sid, &phi, true).unwrap();
    let section = |title: &str| -> Vec<&str> {
        let start = dump.iter().position(|l| l == title).unwrap_or(dump.len());
        dump[start..].iter().skip(1).take_while(|l| !l.starts_with('#')).map(String::as_str).collect()
    };
    let expect = [
        ("# part 0: stage I (4 one-transition variables)", "C1 --[x_2 = x^1_1 * y_4 = x^1_2 * x_3 = x^1_3]--> (C2) (1)"),
        ("# part 0: stage I (4 one-transition variables)", "C2 --[emp]--> () (1)"),
        ("# part 0: stage II", "C1 --[y_4 = x^1_2 * x_3 = x^1_3]--> (C2) (1)"),
        ("# part 0.0: stage III", "(C1,{2:2,3:3}) --[e(x_1,y_4) * e@{1:3}(y_4) * y_4 = x^1_1]--> ((C1,{2:2,3:3})) (∞)"),
        ("# part 0.0: stage III", "(C2,{2:4,3:3}) --[e(x_1,y_6) * e@{1:3}(y_6) * y_6 = x^1_1]--> ((C2,{2:4,3:3})) (∞)"),
        ("# part 0.0: wrapped", "(A,{}) --[e@{1:3}(x^1_1)]--> ((C1,{2:2,3:3})) (1)"),
        ("# part 0.0: wrapped", "(C1,{2:2,3:3}) --[e@{1:3}(x^1_1)]--> ((C2,{2:4,3:3})) (1)"),
        ("# part 0.0: wrapped", "(C2,{2:4,3:3}) --[emp]--> () (1)"),
    ];
    for (title, line) in expect {
        if !section(title).contains(&line) {
            return outcome(false, format!("missing under {title}: {line}"));
        }
    }
    outcome(true, format!("{} golden lines", expect.len()))
}

fn c6_canonical_tw() -> Outcome {
    let mut n = 0;
    for f in FIXTURES {
        let (ms, maxvar) = models(f, 6);
        for s in &ms {
            n += 1;
            let tw = s.treewidth().unwrap();
            if tw + 1 > maxvar {
                return outcome(false, format!("{f}: tw {tw} of {s} exceeds {maxvar} - 1"));
            }
        }
    }
    outcome(true, format!("{n} canonical models"))
}

fn mcs_abstraction(name: &str) -> BTreeSet<slrtwb::ColorMultiset> {
    let (sid, phi) = load(name);
    let (w, root) = wrap_sentence(&sid, &phi);
    let (g, p) = build_mcs_sid(&normalize(&w, &root).unwrap(), &root).unwrap();
    third_components(&fixpoint_triples(&g, 3), &p)
}

fn c7_abstraction() -> Outcome {
    let mut n = 0;
    for f in FIXTURES {
        let (ms, _) = models(f, 4);
        let brute = brute_funsplit_kmcolabs(&ms, 3);
        let abs = mcs_abstraction(f);
        if let Some(m) = brute.iter().find(|m| !abs.contains(m)) {
            return outcome(false, format!("{f}: {m} missing"));
        }
        n += brute.len();
    }
    outcome(true, format!("{n} multisets included"))
}

fn c8_closure() -> Outcome {
    let mut n = 0;
    for f in FIXTURES {
        let (ms, _) = models(f, 4);
        let pieces = funsplit(&ms);
        let (fused, _) = brute_fusion_closure(&pieces, 3, 12, 3);
        let closure = single_pair_fusion_closure(3, &brute_kmcolabs(&pieces, 3));
        if let Some(m) = fused.iter().find(|m| !closure.contains(m)) {
            return outcome(false, format!("{f}: {m} missing"));
        }
        n += fused.len();
    }
    outcome(true, format!("{n} multisets included"))
}

fn c9_bounded_tw() -> Outcome {
    let mut n = 0;
    let mut worst = Vec::new();
    for f in FIXTURES {
        let (sid, phi) = load(f);
        let v = check_twb(&sid, &phi).unwrap();
        if v.kind != Kind::Bounded {
            continue;
        }
        let b = v.bound.unwrap_or(u64::MAX);
        let (ms, _) = models(f, 6);
        let mut w = 0;
        for s in ms.iter().filter(|s| s.support().len() <= 10) {
            for q in internal_fusions(s, 10).unwrap() {
                n += 1;
                w = w.max(q.treewidth().unwrap());
            }
        }
        worst.push(format!("{f}:{w}<={b}"));
        if w as u64 > b {
            return outcome(false, worst.join(" "));
        }
    }
    outcome(true, format!("{n} samples {}", worst.join(" ")))
}

fn c10_witnesses() -> Outcome {
    let mut detail = Vec::new();
    for f in ["fig1b", "fig1d"] {
        let (sid, phi) = load(f);
        let w = check_twb(&sid, &phi).unwrap().witness.expect("unbounded");
        let (ms, _) = models(f, 6);
        let found = w.c1.is_disjoint(&w.c2) && [&w.c1, &w.c2].iter().all(|c| realize_triple(&ms, c, 3, 12).is_some());
        detail.push(format!("{f}:({:?},{:?})", w.c1, w.c2));
        if !found {
            return outcome(false, detail.join(" "));
        }
    }
    outcome(true, detail.join(" "))
}

fn random_structure(rng: &mut StdRng) -> Structure {
    let n = rng.gen_range(1..=5u32);
    let mut s = Structure::new();
    for u in 0..n {
        for r in ["a", "b"] {
            if rng.gen_bool(0.4) {
                s.insert(r, vec![u]);
            }
        }
    }
    for _ in 0..rng.gen_range(1..=6) {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        s.insert("r", vec![u, v]);
    }
    s
}

fn c11_compatibility() -> Outcome {
    let mut rng = StdRng::seed_from_u64(11);
    let (mut tried, mut ok) = (0, 0);
    while tried < 1000 {
        let s1 = random_structure(&mut rng);
        let s2 = random_structure(&mut rng).shifted(100);
        let (c1, c2) = (s1.coloring(), s2.coloring());
        let picks: Vec<(u32, u32)> = c1
            .iter()
            .flat_map(|(&u, cu)| c2.iter().filter(|(_, cv)| cu.is_disjoint(cv)).map(move |(&v, _)| (u, v)))
            .collect();
        if picks.is_empty() {
            continue;
        }
        let (u, v) = picks[rng.gen_range(0..picks.len())];
        let joint = s1.compose(&s2).unwrap();
        tried += 1;
        if joint.is_compatible(&Equiv::from_pairs([u, v], [(u, v)])) {
            ok += 1;
        }
    }
    outcome(ok == tried, format!("{ok}/{tried} compatible"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("verdicts", c1_verdicts),
        ("expandable-bound", c2_expandable_bound),
        ("profiles", c3_profiles),
        ("choice-free", c4_choice_free),
        ("stages", c5_stages),
        ("canonical-treewidth", c6_canonical_tw),
        ("abstraction", c7_abstraction),
        ("closure", c8_closure),
        ("bounded-treewidth", c9_bounded_tw),
        ("witnesses", c10_witnesses),
        ("compatibility", c11_compatibility),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        println!(
            "{} {:>2} {name}: {} [{:.2?}]",
            if o.ok { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed()
        );
        if !o.ok {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria {failed:?}");
        std::process::exit(1);
    }
}

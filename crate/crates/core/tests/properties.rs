use std::collections::BTreeSet;

use proptest::prelude::*;
use slrtwb::abstraction::{fixpoint_triples, single_pair_fusion_closure};
use slrtwb::automata::{choice_free_decompose, profile, rename_one_transition_ys, sid_to_automaton, stage1_strip};
use slrtwb::decide::check_twb;
use slrtwb::mcs::build_mcs_sid;
use slrtwb::normalize::{normalize, root_sentence};
use slrtwb::partition::sub_multisets;
use slrtwb::structures::{Color, ColorMultiset, Structure};
use slrtwb::{parse_sid, Sid};

fn color() -> impl Strategy<Value = Color> {
    proptest::sample::subsequence(vec!["a", "b"], 0..=2).prop_map(|v| v.into_iter().map(String::from).collect())
}

fn multiset() -> impl Strategy<Value = ColorMultiset> {
    proptest::collection::vec(color(), 0..=3).prop_map(ColorMultiset::new)
}

fn abstraction() -> impl Strategy<Value = BTreeSet<ColorMultiset>> {
    proptest::collection::btree_set(multiset(), 0..4)
}

fn downward(set: &BTreeSet<ColorMultiset>) -> bool {
    set.iter().all(|m| sub_multisets(&m.0, 3).into_iter().all(|s| set.contains(&ColorMultiset(s))))
}

fn cl(set: &BTreeSet<ColorMultiset>) -> BTreeSet<ColorMultiset> {
    single_pair_fusion_closure(3, set)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closure_is_extensive_idempotent_downward(a in abstraction()) {
        let c = cl(&a);
        prop_assert!(a.is_subset(&c));
        prop_assert_eq!(cl(&c), c.clone());
        prop_assert!(downward(&c));
    }

    #[test]
    fn closure_is_monotone(a in abstraction(), b in abstraction()) {
        let ab: BTreeSet<_> = a.union(&b).cloned().collect();
        prop_assert!(cl(&a).is_subset(&cl(&ab)));
    }

    #[test]
    fn treewidth_ignores_element_names(
        edges in proptest::collection::vec((0u32..6, 0u32..6), 1..10),
        shift in 0u32..50,
    ) {
        let s = Structure::from_tuples(edges.iter().map(|&(a, b)| ("e", vec![a, b])));
        let t = s.rename(|u| 5 - u + shift);
        prop_assert_eq!(s.treewidth().unwrap(), t.treewidth().unwrap());
        prop_assert!(s.is_isomorphic(&t));
        prop_assert!(s.treewidth().unwrap() < s.support().len().max(1));
    }
}

const FIXTURES: [&str; 4] = [
    include_str!("../fixtures/fig1a.sid"),
    include_str!("../fixtures/fig1d.sid"),
    include_str!("../fixtures/sid_ta.sid"),
    include_str!("../fixtures/running.sid"),
];

fn shuffled(sid: &Sid, perm: &[usize]) -> Sid {
    let mut s = sid.clone();
    let n = s.rules.len();
    let key: Vec<usize> = (0..n).map(|i| perm.get(i).copied().unwrap_or(i)).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by_key(|&i| (key[i], i));
    s.rules = idx.into_iter().map(|i| sid.rules[i].clone()).collect();
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fixpoint_is_stable_under_rule_order(which in 0usize..4, perm in proptest::collection::vec(0usize..100, 8)) {
        let sid = parse_sid(FIXTURES[which]).unwrap();
        let norm = normalize(&sid, "A").unwrap();
        let (g, _) = build_mcs_sid(&norm, "A").unwrap();
        let a = fixpoint_triples(&g, 3);
        let b = fixpoint_triples(&shuffled(&g, &perm), 3);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn verdict_is_stable_under_rule_order(which in 0usize..3, perm in proptest::collection::vec(0usize..100, 8)) {
        let sid = parse_sid(FIXTURES[which]).unwrap();
        let phi = root_sentence(&sid, "A").unwrap();
        let v = check_twb(&sid, &phi).unwrap();
        let w = check_twb(&shuffled(&sid, &perm), &phi).unwrap();
        prop_assert_eq!((v.kind, v.bound), (w.kind, w.bound));
    }

    #[test]
    fn profile_is_a_fixpoint(perm in proptest::collection::vec(0usize..100, 8)) {
        // persistent positions are carried unchanged into every successor
        let sid = shuffled(&parse_sid(FIXTURES[3]).unwrap(), &perm);
        for part in choice_free_decompose(&sid_to_automaton(&sid, "A").unwrap()).unwrap() {
            let (s1, _) = rename_one_transition_ys(&stage1_strip(&part));
            let prof = profile(&s1);
            let names: Vec<String> = s1.states.iter().map(|q| q.display_name()).collect();
            let got: BTreeSet<(String, Vec<usize>)> =
                names.iter().cloned().zip(prof.iter().map(|p| p.iter().copied().collect())).collect();
            let want: BTreeSet<(String, Vec<usize>)> = [("A", vec![]), ("C1", vec![2, 3]), ("C2", vec![2, 3])]
                .into_iter()
                .map(|(n, v)| (n.to_string(), v))
                .collect();
            prop_assert_eq!(got, want);
        }
    }
}

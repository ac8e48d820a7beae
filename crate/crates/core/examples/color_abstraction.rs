//! Multiset color abstraction, its fusion closure and the pairwise check.

use slrtwb::abstraction::{dump_closure, fixpoint_triples, rgb_condition_check, single_pair_fusion_closure, third_components};
use slrtwb::mcs::build_mcs_sid;
use slrtwb::normalize::normalize;
use slrtwb::parse_sid;
use slrtwb::structures::show_color;

fn main() -> slrtwb::Result<()> {
    for file in [include_str!("../fixtures/fig1c.sid"), include_str!("../fixtures/fig1d.sid")] {
        let sid = normalize(&parse_sid(file)?, "A")?;
        let (gamma, p) = build_mcs_sid(&sid, "A")?;
        let base = third_components(&fixpoint_triples(&gamma, 3), &p);
        let closure = single_pair_fusion_closure(3, &base);
        println!("abstraction: {}", dump_closure(&base).join(" "));
        println!("closure:     {}", dump_closure(&closure).join(" "));
        match rgb_condition_check(&closure) {
            (true, _) => println!("every pair of triple colors meets"),
            (false, Some((c1, c2))) => println!("disjoint triple colors {} {}", show_color(&c1), show_color(&c2)),
            (false, None) => unreachable!(),
        }
    }
    Ok(())
}

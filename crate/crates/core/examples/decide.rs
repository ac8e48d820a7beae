//! Verdicts for every bundled fixture.

use slrtwb::decide::check_twb;
use slrtwb::normalize::root_sentence;
use slrtwb::parse_sid;

const FIXTURES: [(&str, &str); 8] = [
    ("fig1a", include_str!("../fixtures/fig1a.sid")),
    ("fig1b", include_str!("../fixtures/fig1b.sid")),
    ("fig1c", include_str!("../fixtures/fig1c.sid")),
    ("fig1d", include_str!("../fixtures/fig1d.sid")),
    ("expandable", include_str!("../fixtures/expandable.sid")),
    ("expandable_tb", include_str!("../fixtures/expandable_tb.sid")),
    ("sid_ta", include_str!("../fixtures/sid_ta.sid")),
    ("running", include_str!("../fixtures/running.sid")),
];

fn main() -> slrtwb::Result<()> {
    for (name, text) in FIXTURES {
        let sid = parse_sid(text)?;
        let v = check_twb(&sid, &root_sentence(&sid, "A")?)?;
        println!(
            "{name:14} {:?} bound={:?} branches={} max|δ¹|={}",
            v.kind, v.bound, v.stats.branches, v.stats.delta1_max
        );
    }
    Ok(())
}

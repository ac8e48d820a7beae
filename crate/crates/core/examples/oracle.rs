//! Brute-force cross-check of the abstract computations.

use slrtwb::normalize::root_sentence;
use slrtwb::oracle::{crosscheck, enumerate_canonical_models, Budget};
use slrtwb::parse_sid;

fn main() -> slrtwb::Result<()> {
    let sid = parse_sid(include_str!("../fixtures/expandable_tb.sid"))?;
    let phi = root_sentence(&sid, "A")?;
    let b = Budget { max_steps: 3, ..Budget::default() };
    for s in enumerate_canonical_models(&sid, &phi, b)?.models {
        println!("model {s}");
    }
    for line in crosscheck(&sid, &phi, Budget::default(), 3)?.lines() {
        println!("{line}");
    }
    Ok(())
}

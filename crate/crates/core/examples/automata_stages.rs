//! Every stage of the reduction to expandable SIDs on the two-chain example.

use slrtwb::cli::dump_stages;
use slrtwb::normalize::root_sentence;
use slrtwb::parse_sid;

fn main() -> slrtwb::Result<()> {
    let sid = parse_sid(include_str!("../fixtures/running.sid"))?;
    for line in dump_stages(&sid, &root_sentence(&sid, "A")?, true)? {
        println!("{line}");
    }
    Ok(())
}

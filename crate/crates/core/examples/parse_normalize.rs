//! Parse an SID, print its measures and its normal form.

use slrtwb::normalize::{normalize, root_sentence, wrap_sentence};
use slrtwb::parse_sid;
use slrtwb::syntax::measures;

fn main() -> slrtwb::Result<()> {
    let sid = parse_sid(include_str!("../fixtures/fig1a.sid"))?;
    let (wrapped, root) = wrap_sentence(&sid, &root_sentence(&sid, "A")?);
    println!("{:?}", measures(&wrapped));
    let norm = normalize(&wrapped, &root)?;
    print!("{norm}");
    Ok(())
}

//! The SID generating the connected components of the models.

use slrtwb::mcs::build_mcs_sid;
use slrtwb::normalize::normalize;
use slrtwb::parse_sid;

fn main() -> slrtwb::Result<()> {
    let sid = parse_sid(include_str!("../fixtures/fig1c.sid"))?;
    let (gamma, p) = build_mcs_sid(&normalize(&sid, "A")?, "A")?;
    println!("root {p}");
    print!("{gamma}");
    Ok(())
}

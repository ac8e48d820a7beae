use slrtwb::normalize::root_sentence;
use slrtwb::oracle::{crosscheck, Budget, Outcome};
use slrtwb::parse_sid;

const FIXTURES: [&str; 8] = ["fig1a", "fig1b", "fig1c", "fig1d", "expandable", "expandable_tb", "sid_ta", "running"];

#[test]
fn oracle_agrees_on_fixtures() {
    for f in FIXTURES {
        let text = std::fs::read_to_string(format!("{}/fixtures/{f}.sid", env!("CARGO_MANIFEST_DIR"))).unwrap();
        let sid = parse_sid(&text).unwrap();
        let r = crosscheck(&sid, &root_sentence(&sid, "A").unwrap(), Budget::default(), 3).unwrap();
        for l in r.lines() {
            println!("{f}: {l}");
        }
        assert!(!r.failed(), "{f}");
        assert!(r.checks.iter().all(|c| c.outcome == Outcome::Pass), "{f}");
    }
}

//! Command-line frontend.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::abstraction::{blue_colors, dump_closure, fixpoint_triples, single_pair_fusion_closure, third_components};
use crate::automata::{
    automaton_to_sid, choice_free_decompose, eliminate_trivial_sccs, profile, rename_one_transition_ys,
    sid_to_automaton, stage1_strip, stage2_remove_nonpersistent_equalities, stage3_annotate,
    stage3_remove_persistent, stage3_split, wrap_one_transitions,
};
use crate::decide::{check_expandable, check_twb_traced, Kind, Verdict};
use crate::error::{Error, Result};
use crate::mcs::build_mcs_sid;
use crate::normalize::{normalize, root_sentence, wrap_sentence};
use crate::oracle::{crosscheck, Budget};
use crate::parse::{parse_formula, parse_sid};
use crate::structures::show_color;
use crate::syntax::{Formula, Sid};

#[derive(Parser, Debug)]
#[command(name = "slrtwb", version, about = "Treewidth boundedness of inductively defined structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Input {
    /// SID file.
    file: PathBuf,
    /// Root predicate (nullary, or existentially closed otherwise).
    #[arg(long)]
    root: Option<String>,
    /// Inline sentence instead of a root predicate.
    #[arg(long, conflicts_with = "root")]
    sentence: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide treewidth boundedness.
    Check {
        #[command(flatten)]
        input: Input,
        /// Print per-stage summaries on stderr.
        #[arg(long)]
        explain: bool,
        /// Treat the input as expandable and skip the reduction.
        #[arg(long)]
        expandable: bool,
    },
    /// Print the color abstraction and its fusion closure.
    Abstract {
        #[command(flatten)]
        input: Input,
        #[arg(short, default_value_t = 3)]
        k: usize,
    },
    /// Compare the abstract computations with brute-force enumeration.
    Oracle {
        #[command(flatten)]
        input: Input,
        #[arg(short, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 6)]
        steps: usize,
        #[arg(long, default_value_t = 10)]
        elements: usize,
        #[arg(long, default_value_t = 2000)]
        models: usize,
    },
    /// Print the automata of every pipeline stage.
    Dump {
        #[command(flatten)]
        input: Input,
        /// Skip normalization.
        #[arg(long)]
        raw: bool,
    },
}

fn load(input: &Input) -> Result<(Sid, Formula)> {
    let text = std::fs::read_to_string(&input.file).map_err(|e| Error::Io(format!("{}: {e}", input.file.display())))?;
    let sid = parse_sid(&text)?;
    let phi = match (&input.sentence, &input.root) {
        (Some(s), _) => parse_formula(s, &sid)?,
        (None, Some(r)) => root_sentence(&sid, r)?,
        (None, None) => {
            let first = sid.rules.first().map(|r| r.head.clone()).ok_or(Error::EmptySemantics)?;
            root_sentence(&sid, &first)?
        }
    };
    Ok((sid, phi))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_)
        | Error::Parse { .. }
        | Error::Arity { .. }
        | Error::UndeclaredSymbol { .. }
        | Error::DuplicateParameter { .. }
        | Error::DuplicateDeclaration(_)
        | Error::UnboundVariable { .. }
        | Error::ArityMismatch { .. } => 2,
        _ => 3,
    }
}

fn verdict_json(v: &Verdict) -> serde_json::Value {
    json!({
        "verdict": v.kind,
        "bound": v.bound,
        "witness": v.witness.as_ref().map(|w| json!({"c1": w.c1, "c2": w.c2, "branch": w.branch})),
        "stats": {
            "branches": v.stats.branches,
            "delta1_max": v.stats.delta1_max,
            "measures": v.stats.measures,
        },
        "inconclusive": false,
    })
}

fn verdict_line(v: &Verdict) -> String {
    match (v.kind, v.bound, &v.witness) {
        (Kind::Bounded, Some(b), _) => format!("BOUNDED bound={b}"),
        (Kind::Bounded, None, _) => "BOUNDED bound=overflow".into(),
        (Kind::Unbounded, _, Some(w)) => format!("UNBOUNDED witness=({},{})", show_color(&w.c1), show_color(&w.c2)),
        (Kind::Unbounded, _, None) => "UNBOUNDED".into(),
    }
}

/// Intermediate automata of the reduction, as printable sections. With
/// `raw`, the SID is translated as written instead of normalized first.
pub fn dump_stages(sid: &Sid, phi: &Formula, raw: bool) -> Result<Vec<String>> {
    let (wrapped, root) = wrap_sentence(sid, phi);
    let norm = if raw { wrapped } else { normalize(&wrapped, &root)? };
    let mut out = vec![format!("# {} SID", if raw { "input" } else { "normalized" })];
    out.extend(norm.to_string().lines().map(String::from));
    let a = sid_to_automaton(&norm, &root)?.trim().ok_or(Error::EmptySemantics)?;
    out.push("# automaton".into());
    out.extend(a.dump());
    let a = eliminate_trivial_sccs(&a).trim().ok_or(Error::EmptySemantics)?;
    out.push("# trivial components eliminated".into());
    out.extend(a.dump());
    for (i, part) in choice_free_decompose(&a)?.iter().enumerate() {
        out.push(format!("# part {i}: choice-free"));
        out.extend(part.dump());
        let s1 = stage1_strip(part);
        let (s1, m) = rename_one_transition_ys(&s1);
        out.push(format!("# part {i}: stage I ({m} one-transition variables)"));
        out.extend(s1.dump());
        let prof = profile(&s1);
        out.push(format!("# part {i}: profile"));
        for (q, p) in s1.states.iter().zip(&prof) {
            let p: Vec<String> = p.iter().map(|j| j.to_string()).collect();
            out.push(format!("{} {{{}}}", q.display_name(), p.join(",")));
        }
        let s2 = stage2_remove_nonpersistent_equalities(&s1, &prof);
        out.push(format!("# part {i}: stage II"));
        out.extend(s2.dump());
        let ann = stage3_annotate(&s2, &prof);
        out.push(format!("# part {i}: annotated"));
        out.extend(ann.dump());
        for (j, s) in stage3_split(&ann, &s2)?.iter().enumerate() {
            let bar = stage3_remove_persistent(s)?;
            out.push(format!("# part {i}.{j}: stage III"));
            out.extend(bar.dump());
            let w = wrap_one_transitions(&bar)?;
            out.push(format!("# part {i}.{j}: wrapped"));
            out.extend(w.dump());
            let (g, _) = automaton_to_sid(&w);
            out.push(format!("# part {i}.{j}: expandable SID"));
            out.extend(g.to_string().lines().map(String::from));
        }
    }
    Ok(out)
}

fn run_command(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let w = |out: &mut dyn Write, s: &str| {
        let _ = writeln!(out, "{s}");
    };
    match cmd {
        Command::Check {
            input,
            explain,
            expandable,
        } => {
            let (sid, phi) = load(&input)?;
            let mut trace = Vec::new();
            let v = if expandable {
                check_expandable(&sid, &phi)?
            } else {
                check_twb_traced(&sid, &phi, &mut trace)?
            };
            if explain {
                for t in &trace {
                    w(err, t);
                }
            }
            if input.json {
                w(out, &verdict_json(&v).to_string());
            } else {
                w(out, &verdict_line(&v));
            }
            Ok(if v.kind == Kind::Bounded { 0 } else { 1 })
        }
        Command::Abstract { input, k } => {
            let (sid, phi) = load(&input)?;
            let (wrapped, root) = wrap_sentence(&sid, &phi);
            let norm = match normalize(&wrapped, &root) {
                Ok(n) => n,
                Err(Error::EmptySemantics) => {
                    w(out, "empty");
                    return Ok(0);
                }
                Err(e) => return Err(e),
            };
            let (gamma, p) = build_mcs_sid(&norm, &root)?;
            let sol = fixpoint_triples(&gamma, k);
            let base = third_components(&sol, &p);
            let closure = single_pair_fusion_closure(k, &base);
            let blue: Vec<String> = blue_colors(&closure).iter().map(show_color).collect();
            if input.json {
                let v = json!({
                    "abstraction": dump_closure(&base),
                    "closure": dump_closure(&closure),
                    "blue": blue,
                });
                w(out, &v.to_string());
            } else {
                w(out, "# connected pieces");
                out.write_all(gamma.to_string().as_bytes()).ok();
                w(out, "# abstraction");
                for l in dump_closure(&base) {
                    w(out, &l);
                }
                w(out, "# closure");
                for l in dump_closure(&closure) {
                    w(out, &l);
                }
                w(out, &format!("# blue {}", blue.join(" ")));
            }
            Ok(0)
        }
        Command::Oracle {
            input,
            k,
            steps,
            elements,
            models,
        } => {
            let (sid, phi) = load(&input)?;
            let budget = Budget {
                max_steps: steps,
                max_elements: elements,
                max_models: models,
            };
            let report = crosscheck(&sid, &phi, budget, k)?;
            for l in report.lines() {
                w(out, &l);
            }
            Ok(if report.failed() { 3 } else { 0 })
        }
        Command::Dump { input, raw } => {
            let (sid, phi) = load(&input)?;
            for l in dump_stages(&sid, &phi, raw)? {
                w(out, &l);
            }
            Ok(0)
        }
    }
}

/// Run the command line; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if code == 0 {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    match run_command(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

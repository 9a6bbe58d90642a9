//! Runs the reproduction suite and prints one verdict per acceptance
//! criterion. Exits non-zero when an attainable criterion fails.

use std::process::ExitCode;

use ricci_jet::cli::suite::{CANNED_FAIL, CANNED_MALFORMED, CANNED_PASS};
use ricci_jet::cli::{main_with, paper_suite, SuiteReport, SuiteRow, SuiteStatus, EXIT_CONFIG, EXIT_FAIL, EXIT_PASS};

/// Rows that cannot pass because the displayed component list is
/// incomplete for `b` with nonzero mixed partials `b_yz` or `b_xy`.
const KNOWN_MISMATCH: [&str; 2] = ["walker.riemann.b1", "walker.riemann.b3"];

struct Verdict {
    criterion: u8,
    pass: bool,
    expected_fail: bool,
    summary: String,
}

fn rows(rep: &SuiteReport, c: u8) -> Vec<&SuiteRow> {
    rep.rows.iter().filter(|r| r.criterion == c).collect()
}

fn worst(rows: &[&SuiteRow]) -> String {
    let graded: Vec<&&SuiteRow> = rows.iter().filter(|r| r.tolerance.is_some()).collect();
    graded
        .iter()
        .map(|r| format!("{}={:.2e}", r.id, r.measured))
        .collect::<Vec<_>>()
        .join(" ")
}

fn graded(rep: &SuiteReport, c: u8) -> Verdict {
    let rs = rows(rep, c);
    let bad: Vec<&str> = rs.iter().filter(|r| r.status == SuiteStatus::Fail).map(|r| r.id.as_str()).collect();
    Verdict {
        criterion: c,
        pass: !rs.is_empty() && bad.is_empty(),
        expected_fail: false,
        summary: if bad.is_empty() { worst(&rs) } else { format!("failing: {}", bad.join(", ")) },
    }
}

fn walker_reproduction(rep: &SuiteReport) -> Verdict {
    let rs = rows(rep, 2);
    let failing: Vec<&str> = rs.iter().filter(|r| r.status == SuiteStatus::Fail).map(|r| r.id.as_str()).collect();
    let mut summary = format!("failing: {}", failing.join(", "));
    // The mismatch must still be there, and be the only one.
    let as_known = failing == KNOWN_MISMATCH
        && KNOWN_MISMATCH.iter().all(|id| rep.row(id).is_some_and(|r| r.measured > 1e-6));
    if as_known {
        summary.push_str(" (displayed curvature operator omits the b_yz and b_xy terms)");
    }
    Verdict {
        criterion: 2,
        pass: failing.is_empty(),
        expected_fail: as_known,
        summary,
    }
}

fn adjudication(rep: &SuiteReport) -> Verdict {
    let steady = rep.row("claim.walker_steady");
    let nonsteady = rep.row("claim.walker_nonsteady");
    let label = |r: Option<&SuiteRow>| r.map_or("missing".to_string(), |r| format!("{} ({:.2e})", r.status.label(), r.measured));
    let decided = |r: Option<&SuiteRow>| r.is_some_and(|r| matches!(r.status, SuiteStatus::Confirmed | SuiteStatus::Refuted));
    Verdict {
        criterion: 4,
        pass: decided(steady) && decided(nonsteady),
        expected_fail: false,
        summary: format!("steady {} / non-steady {}", label(steady), label(nonsteady)),
    }
}

fn cli_contract(rep: &SuiteReport) -> Verdict {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut got = Vec::new();
    for (name, text) in [("pass", CANNED_PASS), ("fail", CANNED_FAIL), ("malformed", CANNED_MALFORMED)] {
        let path = dir.path().join(format!("{name}.toml"));
        std::fs::write(&path, text).expect("write config");
        let (mut out, mut err) = (Vec::new(), Vec::new());
        got.push(main_with(["ricci-jet", "--config", path.to_str().unwrap()], &mut out, &mut err));
    }
    let again = paper_suite(None).to_machine();
    let identical = again == rep.to_machine();
    let codes_ok = got == [EXIT_PASS, EXIT_FAIL, EXIT_CONFIG];
    let mut v = graded(rep, 10);
    v.pass &= identical && codes_ok;
    v.summary = format!("suite reports identical: {identical}, binary exit codes {got:?}; {}", v.summary);
    v
}

fn main() -> ExitCode {
    let rep = paper_suite(None);
    let verdicts = vec![
        graded(&rep, 1),
        walker_reproduction(&rep),
        graded(&rep, 3),
        adjudication(&rep),
        graded(&rep, 5),
        graded(&rep, 6),
        graded(&rep, 7),
        graded(&rep, 8),
        graded(&rep, 9),
        cli_contract(&rep),
    ];
    let mut ok = true;
    println!();
    for v in &verdicts {
        let tag = match (v.pass, v.expected_fail) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {:>2}: {tag:<12} {}", v.criterion, v.summary);
        ok &= v.pass || v.expected_fail;
    }
    for r in rep.rows.iter().filter(|r| r.status == SuiteStatus::Reported) {
        println!("  reported {}: {:.3e}  {}", r.id, r.measured, r.detail);
    }
    if ok {
        println!("acceptance: all attainable criteria met");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failure");
        ExitCode::FAILURE
    }
}

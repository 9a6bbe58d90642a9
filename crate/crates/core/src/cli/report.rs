//! Report records and their two renderings.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

use crate::geometry::DIV_WEYL_COTTON_RATIO;

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conventions {
    pub riemann: &'static str,
    pub ricci: &'static str,
    pub lowering: &'static str,
    pub kappa: f64,
    pub orientation: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineMeta {
    pub name: &'static str,
    pub version: &'static str,
    pub conventions: Conventions,
}

impl EngineMeta {
    pub fn current(orientation: f64) -> EngineMeta {
        EngineMeta {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            conventions: Conventions {
                riemann: "R(X,Y) = [∇X,∇Y] − ∇[X,Y]",
                ricci: "Ric(X,Y) = tr(Z ↦ R(Z,X)Y)",
                lowering: "R(X,Y,Z,W) = g(R(X,Y)W, Z)",
                kappa: DIV_WEYL_COTTON_RATIO,
                orientation: if orientation < 0.0 { -1 } else { 1 },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub points_evaluated: usize,
    pub points_skipped: usize,
    pub skip_reasons: BTreeMap<String, usize>,
    pub max_defect: Option<f64>,
    pub defect_location: Option<Vec<f64>>,
    pub tolerance: Option<f64>,
    /// `None` for diagnostics.
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub format_version: u32,
    pub engine: EngineMeta,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass != Some(false))
    }

    pub fn to_machine(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        let c = &self.engine.conventions;
        let _ = writeln!(
            out,
            "{} {}  seed={} samples={} orientation={:+} kappa={}",
            self.engine.name, self.engine.version, self.seed, self.samples, c.orientation, c.kappa
        );
        let _ = writeln!(
            out,
            "{:<18} {:>9} {:>8} {:>12} {:>10}  result",
            "check", "evaluated", "skipped", "max_defect", "tolerance"
        );
        for r in &self.checks {
            let result = match r.pass {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "info",
            };
            let _ = writeln!(
                out,
                "{:<18} {:>9} {:>8} {:>12} {:>10}  {result}",
                r.name,
                r.points_evaluated,
                r.points_skipped,
                r.max_defect.map_or("-".into(), |v| format!("{v:.3e}")),
                r.tolerance.map_or("-".into(), |v| format!("{v:.0e}")),
            );
            if let Some(loc) = &r.defect_location {
                let coords: Vec<String> = loc.iter().map(|v| format!("{v:.4}")).collect();
                let _ = writeln!(out, "    worst at ({})", coords.join(", "));
            }
            for (reason, n) in &r.skip_reasons {
                let _ = writeln!(out, "    skipped {n}: {reason}");
            }
        }
        let _ = writeln!(out, "overall: {}", if self.all_pass() { "PASS" } else { "FAIL" });
        out
    }
}

//! Config-driven verification runs and the reproduction suite.

pub mod checks;
pub mod config;
pub mod corpus;
pub mod report;
pub mod suite;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use checks::CheckKind;
pub use config::{ConfigError, RunConfig, Setup};
pub use report::{CheckRecord, EngineMeta, Report};
pub use suite::{paper_suite, SuiteReport, SuiteRow, SuiteStatus};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Seeded uniform points in the setup's region.
pub fn sample_points(setup: &Setup) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    (0..setup.samples)
        .map(|_| setup.region.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect())
        .collect()
}

/// Running summary of one check. Merging is associative and commutative:
/// ties in the defect go to the lower sample index.
#[derive(Debug, Clone, Default)]
struct Acc {
    evaluated: usize,
    skipped: BTreeMap<String, usize>,
    worst: Option<(f64, usize)>,
}

impl Acc {
    fn merge(mut self, other: Acc) -> Acc {
        self.evaluated += other.evaluated;
        for (k, v) in other.skipped {
            *self.skipped.entry(k).or_default() += v;
        }
        self.worst = match (self.worst, other.worst) {
            (Some(a), Some(b)) => Some(if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
            (a, b) => a.or(b),
        };
        self
    }
}

pub fn run(setup: &Setup) -> Report {
    let points = sample_points(setup);
    let kinds = &setup.checks;
    let accs: Vec<Acc> = points
        .par_iter()
        .enumerate()
        .map(|(idx, p)| {
            kinds
                .iter()
                .map(|&k| {
                    let mut a = Acc::default();
                    match checks::evaluate(k, setup, p) {
                        Ok(v) if v.is_finite() => {
                            a.evaluated = 1;
                            a.worst = Some((v, idx));
                        }
                        Ok(_) => {
                            a.skipped.insert("non-finite defect".into(), 1);
                        }
                        Err(s) => {
                            a.skipped.insert(s.0, 1);
                        }
                    }
                    a
                })
                .collect::<Vec<Acc>>()
        })
        .reduce(
            || vec![Acc::default(); kinds.len()],
            |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
        );

    let records = kinds
        .iter()
        .zip(accs)
        .map(|(&k, a)| {
            let tolerance = setup.tolerance(k);
            let max_defect = a.worst.map(|w| w.0);
            let pass = if k.is_diagnostic() && !setup.tolerances.contains_key(&k) {
                None
            } else {
                let tol = tolerance.expect("non-diagnostic checks carry a tolerance");
                Some(a.evaluated > 0 && max_defect.is_some_and(|d| d <= tol))
            };
            CheckRecord {
                name: k.name().to_string(),
                points_evaluated: a.evaluated,
                points_skipped: a.skipped.values().sum(),
                skip_reasons: a.skipped,
                max_defect,
                defect_location: a.worst.map(|w| points[w.1].clone()),
                tolerance: if pass.is_some() { tolerance } else { None },
                pass,
            }
        })
        .collect();
    Report {
        format_version: report::REPORT_FORMAT_VERSION,
        engine: EngineMeta::current(setup.orientation),
        seed: setup.seed,
        samples: setup.samples,
        checks: records,
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub filter: Option<String>,
    pub tolerances: Vec<(String, f64)>,
}

pub fn setup_from_text(text: &str, o: &Overrides) -> Result<Setup, ConfigError> {
    let mut cfg = RunConfig::from_toml(text)?;
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    for (name, v) in &o.tolerances {
        cfg.tolerance.insert(name.clone(), *v);
    }
    if let Some(f) = &o.filter {
        cfg.checks.retain(|c| c.contains(f.as_str()));
    }
    Setup::from_config(&cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Machine,
}

#[derive(Debug, Parser)]
#[command(name = "ricci-jet", version, about = "Pointwise curvature and soliton checks on coordinate metrics")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Also write the machine report here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Rendering on standard output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Keep only checks (or suite rows) whose name contains this.
    #[arg(long, global = true)]
    filter: Option<String>,
    /// Override a tolerance, `CHECK=VAL`; repeatable.
    #[arg(long, global = true, value_parser = parse_tolerance)]
    tolerance: Vec<(String, f64)>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the built-in reproduction suite.
    Suite,
    /// List the available checks.
    Checks,
}

fn parse_tolerance(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected CHECK=VAL, got `{s}`"))?;
    let v: f64 = value.trim().parse().map_err(|e| format!("bad tolerance `{value}`: {e}"))?;
    Ok((name.trim().to_string(), v))
}

fn emit(out: &mut dyn Write, err: &mut dyn Write, cli: &Cli, human: &str, machine: &str) -> Result<(), i32> {
    let shown = match cli.format {
        Format::Human => human,
        Format::Machine => machine,
    };
    let _ = out.write_all(shown.as_bytes());
    if let Some(path) = &cli.out {
        if let Err(e) = std::fs::write(path, machine) {
            let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
            return Err(EXIT_CONFIG);
        }
    }
    Ok(())
}

/// Entry point of the binary, with the streams passed in for testing.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_PASS
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_CONFIG
                }
            };
        }
    };
    match cli.command {
        Some(Command::Checks) => {
            for k in CheckKind::all() {
                let tol = k.default_tolerance().map_or("diagnostic".into(), |t| format!("{t:.0e}"));
                let _ = writeln!(out, "{:<18} {:>10}  {}", k.name(), tol, k.summary());
            }
            EXIT_PASS
        }
        Some(Command::Suite) => {
            let rep = paper_suite(cli.filter.as_deref());
            if let Err(code) = emit(out, err, &cli, &rep.to_human(), &rep.to_machine()) {
                return code;
            }
            if rep.any_failed() {
                EXIT_FAIL
            } else {
                EXIT_PASS
            }
        }
        None => {
            let Some(path) = &cli.config else {
                let _ = writeln!(err, "error: --config PATH is required (or use the `suite` subcommand)");
                return EXIT_CONFIG;
            };
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
                    return EXIT_CONFIG;
                }
            };
            let o = Overrides {
                seed: cli.seed,
                filter: cli.filter.clone(),
                tolerances: cli.tolerance.clone(),
            };
            let setup = match setup_from_text(&text, &o) {
                Ok(s) => s,
                Err(e) => {
                    let _ = writeln!(err, "config error in {}: {e}", path.display());
                    return EXIT_CONFIG;
                }
            };
            let rep = run(&setup);
            if let Err(code) = emit(out, err, &cli, &rep.to_human(), &rep.to_machine()) {
                return code;
            }
            if rep.all_pass() {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
    }
}

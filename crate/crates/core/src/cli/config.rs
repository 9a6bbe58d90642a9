//! Run configuration files.
//!
//! A config is a TOML document:
//!
//! ```toml
//! format_version = 1
//! chart = ["t", "x", "y", "z"]
//! metric = [["-1", "0", "0", "0"], ["0", "-1", "0", "0"], ["0", "0", "1", "0"], ["0", "0", "0", "1"]]
//! f = "x^2 + y^2"
//! h = "f"
//! lambda = "2*f"
//! checks = ["bianchi", "soliton_residual"]
//! samples = 200
//! seed = 7
//! orientation = 1
//!
//! [region]
//! x = [-1.0, 1.0]
//!
//! [tolerance]
//! soliton_residual = 1e-10
//! ```
//!
//! A `[construction]` table with `kind = "walker" | "warped" | "sss"` replaces
//! `chart` and `metric`.

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use crate::constructions::{sss_build, walker_build, warped_build, SssSpec, WalkerLayout, WalkerSpec, WarpedSpec};
use crate::expr::Expr;
use crate::geometry::{Chart, MetricField, ScalarField};
use crate::soliton::Coupling;

use super::checks::{self, CheckKind};

pub const CONFIG_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_SAMPLES: usize = 200;
const GUARDED_REGION: (f64, f64) = (0.25, 1.25);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(String),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: impl Into<String>, message: impl ToString) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    #[serde(default)]
    pub chart: Vec<String>,
    #[serde(default)]
    pub metric: Vec<Vec<String>>,
    pub f: Option<String>,
    /// `"f"`, `"1"` or an expression.
    pub h: Option<String>,
    pub lambda: Option<String>,
    pub phi: Option<String>,
    pub alpha: Option<f64>,
    pub m: Option<f64>,
    #[serde(default)]
    pub construction: ConstructionConfig,
    #[serde(default)]
    pub region: BTreeMap<String, Vec<f64>>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerance: BTreeMap<String, f64>,
    pub checks: Vec<String>,
    #[serde(default = "default_orientation")]
    pub orientation: i64,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_orientation() -> i64 {
    1
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConstructionConfig {
    #[default]
    None,
    Warped {
        base_chart: Vec<String>,
        base_metric: Vec<Vec<String>>,
        fiber_chart: Vec<String>,
        fiber_metric: Vec<Vec<String>>,
        /// Warping function on the base chart.
        phi: String,
        mu: Option<f64>,
    },
    Sss {
        fiber_chart: Vec<String>,
        fiber_metric: Vec<Vec<String>>,
        /// Lapse on the fiber chart.
        lapse: String,
    },
    Walker {
        #[serde(default)]
        a: Option<String>,
        b: String,
        #[serde(default)]
        c: Option<String>,
        #[serde(default)]
        layout: Option<String>,
    },
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string().trim_end().to_string()))
    }
}

/// Geometry a run needs besides the metric.
#[derive(Debug, Clone, PartialEq)]
pub enum Construction {
    None,
    Warped(WarpedSpec),
    Sss(SssSpec),
    Walker { b: Expr, layout: WalkerLayout, only_b: bool },
}

/// A validated config, ready to sample.
#[derive(Debug, Clone)]
pub struct Setup {
    pub metric: MetricField,
    pub f: Option<ScalarField>,
    pub h: Coupling,
    pub lambda: Option<ScalarField>,
    pub phi: Option<ScalarField>,
    pub alpha: Option<f64>,
    pub m: Option<f64>,
    pub construction: Construction,
    pub region: Vec<(f64, f64)>,
    pub samples: usize,
    pub seed: u64,
    pub orientation: f64,
    pub checks: Vec<CheckKind>,
    pub tolerances: BTreeMap<CheckKind, f64>,
}

fn parse_metric(field: &str, chart: &Chart, rows: &[Vec<String>]) -> Result<MetricField, ConfigError> {
    MetricField::parse(chart.clone(), rows).map_err(|e| field_err(field, e))
}

fn parse_chart(field: &str, names: &[String]) -> Result<Chart, ConfigError> {
    Chart::new(names.iter().cloned()).map_err(|e| field_err(field, e))
}

fn parse_scalar(field: &str, chart: &Chart, text: &Option<String>) -> Result<Option<ScalarField>, ConfigError> {
    text.as_ref()
        .map(|t| ScalarField::parse(chart, t).map_err(|e| field_err(field, e)))
        .transpose()
}

impl Setup {
    pub fn from_config(cfg: &RunConfig) -> Result<Setup, ConfigError> {
        if cfg.format_version != CONFIG_FORMAT_VERSION {
            return Err(field_err(
                "format_version",
                format!("unsupported version {}, expected {CONFIG_FORMAT_VERSION}", cfg.format_version),
            ));
        }
        let explicit = !cfg.chart.is_empty() || !cfg.metric.is_empty();
        let (metric, construction) = match &cfg.construction {
            ConstructionConfig::None => {
                if cfg.chart.is_empty() {
                    return Err(field_err("chart", "missing (or give a [construction] table)"));
                }
                let chart = parse_chart("chart", &cfg.chart)?;
                (parse_metric("metric", &chart, &cfg.metric)?, Construction::None)
            }
            other => {
                if explicit {
                    return Err(field_err("chart", "not allowed together with [construction]"));
                }
                build_construction(other)?
            }
        };
        let chart = metric.chart().clone();
        let f = parse_scalar("f", &chart, &cfg.f)?;
        let h = match cfg.h.as_deref().map(str::trim) {
            None | Some("1") => Coupling::One,
            Some("f") => Coupling::EqualToF,
            Some(t) => Coupling::Field(ScalarField::parse(&chart, t).map_err(|e| field_err("h", e))?),
        };
        // `lambda` may mention `f` as a stand-in for the potential.
        let lambda = match (&cfg.lambda, &f) {
            (Some(t), Some(fv)) if chart.index_of("f").is_none() => {
                let mut names = chart.coords().to_vec();
                names.push("f".into());
                let e = crate::expr::parse(t, &names).map_err(|e| field_err("lambda", e))?;
                let n = chart.dim();
                Some(ScalarField::new(e.substitute(n, fv.expr())))
            }
            _ => parse_scalar("lambda", &chart, &cfg.lambda)?,
        };
        let phi = parse_scalar("phi", &chart, &cfg.phi)?;

        if cfg.samples < 1 {
            return Err(field_err("samples", "must be at least 1"));
        }
        if cfg.orientation != 1 && cfg.orientation != -1 {
            return Err(field_err("orientation", "must be 1 or -1"));
        }
        let guarded = f.is_some() || matches!(h, Coupling::Field(_)) || phi.is_some()
            || matches!(construction, Construction::Warped(_) | Construction::Sss(_));
        let default = if guarded { GUARDED_REGION } else { (-1.0, 1.0) };
        let mut region = vec![default; chart.dim()];
        for (name, bounds) in &cfg.region {
            let field = format!("region.{name}");
            let i = chart.index_of(name).ok_or_else(|| field_err(&field, "not a chart coordinate"))?;
            let [lo, hi] = bounds[..] else {
                return Err(field_err(&field, "expected [lo, hi]"));
            };
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(field_err(&field, "bounds must be finite"));
            }
            if lo >= hi {
                return Err(field_err(&field, "need lo < hi"));
            }
            region[i] = (lo, hi);
        }

        if cfg.checks.is_empty() {
            return Err(field_err("checks", "no checks requested"));
        }
        let mut kinds = Vec::new();
        for (k, name) in cfg.checks.iter().enumerate() {
            let kind = CheckKind::from_name(name).ok_or_else(|| field_err(format!("checks[{k}]"), format!("unknown check `{name}`")))?;
            if !kinds.contains(&kind) {
                kinds.push(kind);
            }
        }
        let mut tolerances = BTreeMap::new();
        for (name, &tol) in &cfg.tolerance {
            let kind = CheckKind::from_name(name).ok_or_else(|| field_err(format!("tolerance.{name}"), "unknown check"))?;
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(field_err(format!("tolerance.{name}"), "must be a finite non-negative number"));
            }
            tolerances.insert(kind, tol);
        }

        let setup = Setup {
            metric,
            f,
            h,
            lambda,
            phi,
            alpha: cfg.alpha,
            m: cfg.m,
            construction,
            region,
            samples: cfg.samples,
            seed: cfg.seed,
            orientation: cfg.orientation as f64,
            checks: kinds,
            tolerances,
        };
        for (k, kind) in setup.checks.iter().enumerate() {
            checks::requirements(*kind, &setup).map_err(|m| field_err(format!("checks[{k}]"), format!("`{}` {m}", kind.name())))?;
        }
        Ok(setup)
    }

    pub fn tolerance(&self, kind: CheckKind) -> Option<f64> {
        self.tolerances.get(&kind).copied().or(kind.default_tolerance())
    }
}

fn build_construction(c: &ConstructionConfig) -> Result<(MetricField, Construction), ConfigError> {
    match c {
        ConstructionConfig::None => unreachable!("handled by caller"),
        ConstructionConfig::Warped {
            base_chart,
            base_metric,
            fiber_chart,
            fiber_metric,
            phi,
            mu,
        } => {
            let bc = parse_chart("construction.base_chart", base_chart)?;
            let fc = parse_chart("construction.fiber_chart", fiber_chart)?;
            let ws = WarpedSpec {
                base: parse_metric("construction.base_metric", &bc, base_metric)?,
                fiber: parse_metric("construction.fiber_metric", &fc, fiber_metric)?,
                phi: ScalarField::parse(&bc, phi).map_err(|e| field_err("construction.phi", e))?,
                mu: *mu,
            };
            let metric = warped_build(&ws).map_err(|e| field_err("construction", e))?;
            Ok((metric, Construction::Warped(ws)))
        }
        ConstructionConfig::Sss {
            fiber_chart,
            fiber_metric,
            lapse,
        } => {
            let fc = parse_chart("construction.fiber_chart", fiber_chart)?;
            let fiber = parse_metric("construction.fiber_metric", &fc, fiber_metric)?;
            let h = ScalarField::parse(&fc, lapse).map_err(|e| field_err("construction.lapse", e))?;
            let ss = SssSpec::new(fiber, h);
            let metric = sss_build(&ss).map_err(|e| field_err("construction", e))?;
            Ok((metric, Construction::Sss(ss)))
        }
        ConstructionConfig::Walker { a, b, c, layout } => {
            let chart = WalkerSpec::chart();
            let layout = match layout.as_deref() {
                None | Some("canonical") => WalkerLayout::Canonical,
                Some("literal") => WalkerLayout::Literal,
                Some(other) => return Err(field_err("construction.layout", format!("unknown layout `{other}`"))),
            };
            let p = |field: &str, t: &Option<String>| -> Result<Expr, ConfigError> {
                match t {
                    None => Ok(Expr::constant(0.0)),
                    Some(t) => chart.parse(t).map_err(|e| field_err(field, e)),
                }
            };
            let ws = WalkerSpec {
                a: p("construction.a", a)?,
                b: chart.parse(b).map_err(|e| field_err("construction.b", e))?,
                c: p("construction.c", c)?,
            };
            let only_b = a.is_none() && c.is_none();
            let metric = walker_build(&ws, layout).map_err(|e| field_err("construction", e))?;
            Ok((
                metric,
                Construction::Walker {
                    b: ws.b,
                    layout,
                    only_b,
                },
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAT: &str = r#"
format_version = 1
chart = ["t", "x"]
metric = [["-1", "0"], ["0", "1"]]
checks = ["bianchi"]
"#;

    #[test]
    fn minimal_config() {
        let s = Setup::from_config(&RunConfig::from_toml(FLAT).unwrap()).unwrap();
        assert_eq!(s.samples, DEFAULT_SAMPLES);
        assert_eq!(s.region, vec![(-1.0, 1.0); 2]);
        assert_eq!(s.orientation, 1.0);
    }

    #[test]
    fn unknown_check_is_a_field_error() {
        let text = FLAT.replace("\"bianchi\"", "\"bianchi\", \"nope\"");
        let err = Setup::from_config(&RunConfig::from_toml(&text).unwrap()).unwrap_err();
        assert_eq!(err.to_string(), "field `checks[1]`: unknown check `nope`");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = RunConfig::from_toml("format_version = 1\nchart = [\"x\"\n").unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn bad_region() {
        let text = format!("{FLAT}\n[region]\nx = [1.0, 0.0]\n");
        let err = Setup::from_config(&RunConfig::from_toml(&text).unwrap()).unwrap_err();
        assert!(err.to_string().contains("region.x"));
    }

    #[test]
    fn lambda_may_refer_to_f() {
        let text = format!("f = \"x^2\"\nlambda = \"2*f\"\n{FLAT}");
        let s = Setup::from_config(&RunConfig::from_toml(&text).unwrap()).unwrap();
        assert_eq!(s.lambda.unwrap().value_at(&[0.0, 3.0]).unwrap(), 18.0);
        assert_eq!(s.region, vec![GUARDED_REGION; 2]);
    }

    #[test]
    fn walker_construction() {
        let text = r#"
format_version = 1
checks = ["walker_ricci"]
[construction]
kind = "walker"
b = "x*y^2*z + 1"
"#;
        let s = Setup::from_config(&RunConfig::from_toml(text).unwrap()).unwrap();
        assert_eq!(s.metric.chart().coords(), ["t", "x", "y", "z"]);
    }
}

//! Pointwise metric, connection and curvature evaluation.
//!
//! Conventions, used consistently by every downstream module:
//!
//! * curvature operator `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y]`, stored as
//!   `R(∂_i,∂_j)∂_k = R^l_{kij} ∂_l` at index `[l, k, i, j]`;
//! * Ricci `Ric(X,Y) = trace{Z → R(Z,X)Y}`, so that the unit sphere has
//!   positive scalar curvature;
//! * lowered curvature `R(X,Y,Z,W) = g(R(X,Y)W, Z)`;
//! * Weyl `W_{ijkl} = R_{ijkl} + r/((n−1)(n−2)) (g_ik g_jl − g_jk g_il)
//!   + 1/(n−2) (Ric_jk g_il − Ric_ik g_jl + g_jk Ric_il − g_ik Ric_jl)`;
//! * Cotton `C_{ijk} = ∇_i Ric_jk − ∇_j Ric_ik − (g_jk ∂_i r − g_ik ∂_j r)/(2(n−1))`;
//! * `(div W)_{ijk} = g^{lm} ∇_l W_{ijkm}` (contraction on the fourth slot);
//! * `∇Ric` is stored at `[k, i, j]` as `∇_k Ric_ij`.

mod identities;
mod local;
mod tensor;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::expr::{self, EvalError, Expr, ParseError};

pub use identities::*;
pub use local::{ConformalBundle, CurvatureBundle, FieldCalculus, FieldJets, LocalGeometry};
pub use tensor::{scale_of, Tensor, Tensor1, Tensor2, Tensor3, Tensor4};

pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Measured `κ` in `div W = κ C` for four-dimensional metrics under the
/// conventions above.
pub const DIV_WEYL_COTTON_RATIO: f64 = -0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("metric is degenerate at the point (det = {det:e})")]
    DegenerateMetric { det: f64 },
    #[error("dimension {n} is too small for this operation")]
    DimensionTooSmall { n: usize },
    #[error("expected dimension {expected}, found {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("metric components ({i},{j}) and ({j},{i}) differ")]
    Asymmetric { i: usize, j: usize },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chart {
    coords: Vec<String>,
}

impl Chart {
    pub fn new<S: Into<String>>(coords: impl IntoIterator<Item = S>) -> Result<Chart, GeometryError> {
        let coords: Vec<String> = coords.into_iter().map(Into::into).collect();
        if coords.is_empty() || coords.len() > crate::jet::MAX_VARS {
            return Err(GeometryError::InvalidChart(format!(
                "{} coordinates (supported: 1..={})",
                coords.len(),
                crate::jet::MAX_VARS
            )));
        }
        for (i, c) in coords.iter().enumerate() {
            if expr::RESERVED.contains(&c.as_str()) {
                return Err(GeometryError::InvalidChart(format!("`{c}` is a reserved name")));
            }
            let valid = c.chars().next().is_some_and(|ch| ch.is_ascii_alphabetic() || ch == '_')
                && c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_');
            if !valid {
                return Err(GeometryError::InvalidChart(format!("`{c}` is not an identifier")));
            }
            if coords[..i].contains(c) {
                return Err(GeometryError::InvalidChart(format!("duplicate coordinate `{c}`")));
            }
        }
        Ok(Chart { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    pub fn parse(&self, text: &str) -> Result<Expr, ParseError> {
        expr::parse(text, &self.coords)
    }
}

/// A scalar function on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    expr: Expr,
}

impl ScalarField {
    pub fn new(expr: Expr) -> ScalarField {
        ScalarField { expr }
    }

    pub fn parse(chart: &Chart, text: &str) -> Result<ScalarField, GeometryError> {
        Ok(ScalarField::new(chart.parse(text)?))
    }

    pub fn constant(value: f64) -> ScalarField {
        ScalarField::new(Expr::constant(value))
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn value_at(&self, point: &[f64]) -> Result<f64, GeometryError> {
        Ok(self.expr.evaluate(point, 0)?.value())
    }
}

/// Symmetric matrix of component expressions on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    chart: Chart,
    components: Vec<Expr>,
}

impl MetricField {
    pub fn new(chart: Chart, rows: Vec<Vec<Expr>>) -> Result<MetricField, GeometryError> {
        let n = chart.dim();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                got: rows.len(),
            });
        }
        for i in 0..n {
            for j in i + 1..n {
                if rows[i][j] != rows[j][i] {
                    return Err(GeometryError::Asymmetric { i, j });
                }
            }
        }
        for e in rows.iter().flatten() {
            if let Some(k) = e.max_variable() {
                if k >= n {
                    return Err(GeometryError::DimensionMismatch {
                        expected: n,
                        got: k + 1,
                    });
                }
            }
        }
        Ok(MetricField {
            chart,
            components: rows.into_iter().flatten().collect(),
        })
    }

    pub fn parse<S: AsRef<str>>(chart: Chart, rows: &[Vec<S>]) -> Result<MetricField, GeometryError> {
        let parsed = rows
            .iter()
            .map(|r| r.iter().map(|s| chart.parse(s.as_ref())).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        MetricField::new(chart, parsed)
    }

    pub fn diagonal<S: AsRef<str>>(chart: Chart, diag: &[S]) -> Result<MetricField, GeometryError> {
        let n = chart.dim();
        if diag.len() != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                got: diag.len(),
            });
        }
        let mut rows = vec![vec![Expr::constant(0.0); n]; n];
        for (i, s) in diag.iter().enumerate() {
            rows[i][i] = chart.parse(s.as_ref())?;
        }
        MetricField::new(chart, rows)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.components[i * self.dim() + j]
    }

    /// Multiplies every component by `factor` (a conformal rescaling when
    /// `factor` is positive).
    pub fn scaled(&self, factor: &Expr) -> MetricField {
        MetricField {
            chart: self.chart.clone(),
            components: self
                .components
                .iter()
                .map(|c| factor.clone() * c.clone())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub negative: usize,
    pub positive: usize,
}

impl Signature {
    pub fn is_neutral(&self) -> bool {
        self.negative == 2 && self.positive == 2
    }

    pub fn is_lorentzian(&self) -> bool {
        self.negative == 1 || self.positive == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricValue {
    pub g: Tensor2,
    pub g_inv: Tensor2,
    pub det: f64,
    pub signature: Signature,
}

impl MetricValue {
    pub fn from_matrix(g: Tensor2) -> Result<MetricValue, GeometryError> {
        let n = g.dim();
        let m = DMatrix::from_fn(n, n, |i, j| g[[i, j]]);
        let det = m.determinant();
        let scale = g.max_abs();
        if !(det.abs() >= DEGENERACY_THRESHOLD * scale.powi(n as i32)) || scale == 0.0 {
            return Err(GeometryError::DegenerateMetric { det });
        }
        let inv = m
            .clone()
            .try_inverse()
            .ok_or(GeometryError::DegenerateMetric { det })?;
        let eig = m.symmetric_eigen();
        let negative = eig.eigenvalues.iter().filter(|&&v| v < 0.0).count();
        Ok(MetricValue {
            g_inv: Tensor2::from_fn(n, |[i, j]| inv[(i, j)]),
            g,
            det,
            signature: Signature {
                negative,
                positive: n - negative,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.g[[i, j]] * u[i] * v[j];
            }
        }
        s
    }
}

/// Metric, inverse, determinant and signature at `point`.
pub fn metric_at(metric: &MetricField, point: &[f64]) -> Result<MetricValue, GeometryError> {
    let n = metric.dim();
    if point.len() != n {
        return Err(GeometryError::DimensionMismatch {
            expected: n,
            got: point.len(),
        });
    }
    let mut g = Tensor2::zeros(n);
    for i in 0..n {
        for j in 0..n {
            g[[i, j]] = metric.component(i, j).evaluate(point, 0)?.value();
        }
    }
    MetricValue::from_matrix(g)
}

/// Christoffel symbols `Γ^k_{ij}` at `[k, i, j]`.
pub fn christoffel(metric: &MetricField, point: &[f64]) -> Result<Tensor3, GeometryError> {
    Ok(LocalGeometry::new(metric, point)?.christoffel())
}

pub fn riemann(metric: &MetricField, point: &[f64]) -> Result<CurvatureBundle, GeometryError> {
    Ok(LocalGeometry::new(metric, point)?.curvature())
}

pub fn field_calculus(
    metric: &MetricField,
    f: &ScalarField,
    point: &[f64],
) -> Result<FieldCalculus, GeometryError> {
    LocalGeometry::new(metric, point)?.field(f)
}

pub fn weyl(metric: &MetricField, point: &[f64]) -> Result<Tensor4, GeometryError> {
    LocalGeometry::new(metric, point)?.weyl()
}

pub fn cotton(metric: &MetricField, point: &[f64]) -> Result<Tensor3, GeometryError> {
    Ok(LocalGeometry::new(metric, point)?.cotton())
}

pub fn div_weyl(metric: &MetricField, point: &[f64]) -> Result<Tensor3, GeometryError> {
    let geo = LocalGeometry::new(metric, point)?;
    if geo.dim() != 4 {
        return Err(GeometryError::DimensionMismatch {
            expected: 4,
            got: geo.dim(),
        });
    }
    geo.div_weyl()
}

/// Least-squares `κ` in `div W ≈ κ C`; `None` when the Cotton tensor
/// vanishes at the point.
pub fn cotton_weyl_ratio(metric: &MetricField, point: &[f64]) -> Result<Option<f64>, GeometryError> {
    let div = div_weyl(metric, point)?;
    let c = cotton(metric, point)?;
    Ok(least_squares_ratio(div.data(), c.data()))
}

pub fn least_squares_ratio(numerator: &[f64], denominator: &[f64]) -> Option<f64> {
    let dot: f64 = numerator.iter().zip(denominator).map(|(a, b)| a * b).sum();
    let norm: f64 = denominator.iter().map(|b| b * b).sum();
    let scale = 1.0 + denominator.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if norm.sqrt() <= 1e-12 * scale {
        None
    } else {
        Some(dot / norm)
    }
}

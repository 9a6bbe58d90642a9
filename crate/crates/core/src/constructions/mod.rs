//! Builders for warped products, standard static spacetimes and Walker
//! metrics, with checks of their block curvature formulas against the
//! direct computation.

mod radial;
mod sss;
mod walker;
mod warped;

use thiserror::Error;

use crate::expr::Expr;
use crate::geometry::{Chart, GeometryError, MetricField};
use crate::soliton::SolitonError;

pub use radial::{radial_gqe_solve, RadialProblem, RadialProfile, RadialSolution, PROFILE_FORMAT_VERSION};
pub use sss::{
    log_hessian_identity, sss_build, sss_formula_check, sss_soliton_check, static_fiber_residual, LogHessianReport,
    SssDefects, SssSolitonReport, SssSpec,
};
pub use walker::{
    walker_build, walker_curvature_check, walker_system_residual, ComponentCheck, WalkerCurvatureReport, WalkerLayout,
    WalkerSpec, WalkerSystemReport, SYSTEM_LINES,
};
pub use warped::{warped_build, warped_einstein_probe, warped_ricci_check, EinsteinProbe, WarpedDefects, WarpedSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructionError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Soliton(#[from] SolitonError),
    #[error("warping function must be positive (φ = {value:e})")]
    NonPositiveWarping { value: f64 },
    #[error("lapse function must be positive (h = {value:e})")]
    NonPositiveLapse { value: f64 },
    #[error("radial interval [{lo}, {hi}] must satisfy 0 < lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("integration failed: {0}")]
    IntegrationFailure(String),
    #[error("shooting did not converge after {iterations} iterations (endpoint residual {residual:e})")]
    ShootingNotConverged { iterations: usize, residual: f64 },
    #[error("profile file: {0}")]
    ProfileFormat(String),
}

/// Block-diagonal metric on the concatenation of `parts`, each block given by
/// a chart, its component expressions and a factor applied to every entry.
pub(crate) fn block_metric(
    chart: Chart,
    blocks: &[(usize, &MetricField, Option<&Expr>)],
) -> Result<MetricField, GeometryError> {
    let n = chart.dim();
    let mut rows = vec![vec![Expr::constant(0.0); n]; n];
    for &(offset, m, factor) in blocks {
        let names = chart.coords().to_vec();
        let map = move |i: usize| (offset + i, names[offset + i].clone());
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                let mut e = m.component(i, j).remap_variables(&map);
                if let Some(f) = factor {
                    if e.constant_value() != Some(0.0) {
                        e = f.clone() * e;
                    }
                }
                rows[offset + i][offset + j] = e;
            }
        }
    }
    MetricField::new(chart, rows)
}

/// Moves an expression from a factor chart into a product chart at `offset`.
pub(crate) fn shift(e: &Expr, chart: &Chart, offset: usize) -> Expr {
    let names = chart.coords().to_vec();
    e.remap_variables(&move |i| (offset + i, names[offset + i].clone()))
}

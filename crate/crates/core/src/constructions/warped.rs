use crate::expr::Expr;
use crate::geometry::{scale_of, Chart, LocalGeometry, MetricField, ScalarField};
use crate::soliton::{solve_lambda, Coupling};

use super::{block_metric, shift, ConstructionError};

/// `g_B + φ² g_F` with `φ` a function on the base.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedSpec {
    pub base: MetricField,
    pub fiber: MetricField,
    pub phi: ScalarField,
    /// Einstein constant of the fiber, when it is known to be Einstein.
    pub mu: Option<f64>,
}

impl WarpedSpec {
    pub fn product_chart(&self) -> Result<Chart, ConstructionError> {
        let names = self
            .base
            .chart()
            .coords()
            .iter()
            .map(|c| format!("base_{c}"))
            .chain(self.fiber.chart().coords().iter().map(|c| format!("fiber_{c}")));
        Ok(Chart::new(names)?)
    }
}

pub fn warped_build(ws: &WarpedSpec) -> Result<MetricField, ConstructionError> {
    let chart = ws.product_chart()?;
    let phi = shift(ws.phi.expr(), &chart, 0);
    let phi2 = phi.clone() * phi;
    Ok(block_metric(
        chart,
        &[(0, &ws.base, None), (ws.base.dim(), &ws.fiber, Some(&phi2))],
    )?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpedDefects {
    /// `Ric(X,Y) − Ric_B(X,Y) + (m/φ) Hess φ(X,Y)`.
    pub base: f64,
    /// `Ric(X,V)`.
    pub mixed: f64,
    /// `Ric(V,W) − Ric_F(V,W) + [Δφ/φ + (m−1)‖∇φ‖²/φ²] g(V,W)`.
    pub fiber: f64,
    pub scale: f64,
}

impl WarpedDefects {
    pub fn max_relative(&self) -> f64 {
        self.base.max(self.mixed).max(self.fiber) / self.scale
    }
}

struct Split {
    base: LocalGeometry,
    fiber: LocalGeometry,
    total: LocalGeometry,
    phi: crate::geometry::FieldCalculus,
}

fn split(ws: &WarpedSpec, p: &[f64]) -> Result<Split, ConstructionError> {
    let k = ws.base.dim();
    let base = LocalGeometry::new(&ws.base, &p[..k.min(p.len())])?;
    let phi = base.field(&ws.phi)?;
    if !(phi.value > 0.0) {
        return Err(ConstructionError::NonPositiveWarping { value: phi.value });
    }
    let total = LocalGeometry::new(&warped_build(ws)?, p)?;
    let fiber = LocalGeometry::new(&ws.fiber, &p[k..])?;
    Ok(Split {
        base,
        fiber,
        total,
        phi,
    })
}

/// Direct Ricci of the warped metric against the three block formulas.
pub fn warped_ricci_check(ws: &WarpedSpec, p: &[f64]) -> Result<WarpedDefects, ConstructionError> {
    let Split {
        base,
        fiber,
        total,
        phi,
    } = split(ws, p)?;
    let k = ws.base.dim();
    let m = ws.fiber.dim();
    let n = k + m;
    let ric = total.ricci();
    let ric_b = base.ricci();
    let ric_f = fiber.ricci();
    let g = &total.metric_value().g;
    let mf = m as f64;
    let coeff = phi.lap / phi.value + (mf - 1.0) * phi.gradnorm2 / (phi.value * phi.value);
    let (mut db, mut dm, mut df) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in 0..n {
            match (i < k, j < k) {
                (true, true) => {
                    let expected = ric_b[[i, j]] - mf / phi.value * phi.hess[[i, j]];
                    db = db.max((ric[[i, j]] - expected).abs());
                }
                (false, false) => {
                    let expected = ric_f[[i - k, j - k]] - coeff * g[[i, j]];
                    df = df.max((ric[[i, j]] - expected).abs());
                }
                _ => dm = dm.max(ric[[i, j]].abs()),
            }
        }
    }
    Ok(WarpedDefects {
        base: db,
        mixed: dm,
        fiber: df,
        scale: scale_of(&[ric.data(), ric_b.data(), ric_f.data(), phi.hess.data(), &[coeff]]),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EinsteinProbe {
    /// λ fitted to `Ric_B − (m/φ) Hess φ = λ g_B`.
    pub lambda_fit: f64,
    /// `φΔφ + (m−1)‖∇φ‖² + λφ²`.
    pub mu_formula: f64,
    /// `|mu_formula − μ|` when μ is supplied.
    pub defect: Option<f64>,
    /// Residual of the base equation at the fitted λ.
    pub base_residual: f64,
}

pub fn warped_einstein_probe(ws: &WarpedSpec, p: &[f64]) -> Result<EinsteinProbe, ConstructionError> {
    let k = ws.base.dim();
    let Split { phi, .. } = split(ws, p)?;
    let m = ws.fiber.dim() as f64;
    let coupling = Coupling::Field(ScalarField::new(Expr::constant(-m) / ws.phi.expr().clone()));
    let fit = solve_lambda(&ws.base, &ws.phi, &coupling, &p[..k])?;
    let mu_formula = phi.value * phi.lap + (m - 1.0) * phi.gradnorm2 + fit.lambda_fit * phi.value * phi.value;
    Ok(EinsteinProbe {
        lambda_fit: fit.lambda_fit,
        mu_formula,
        defect: ws.mu.map(|mu| (mu_formula - mu).abs()),
        base_residual: fit.residual.max_abs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(phi: &str, fiber: MetricField, mu: Option<f64>) -> WarpedSpec {
        let base = MetricField::diagonal(Chart::new(["s"]).unwrap(), &["1"]).unwrap();
        WarpedSpec {
            phi: ScalarField::parse(base.chart(), phi).unwrap(),
            base,
            fiber,
            mu,
        }
    }

    fn flat3() -> MetricField {
        MetricField::diagonal(Chart::new(["x", "y", "z"]).unwrap(), &["1", "1", "1"]).unwrap()
    }

    #[test]
    fn product_chart_names() {
        let m = warped_build(&spec("exp(s)", flat3(), None)).unwrap();
        assert_eq!(m.chart().coords(), ["base_s", "fiber_x", "fiber_y", "fiber_z"]);
        assert_eq!(m.component(1, 1).to_string(), "((exp(base_s) * exp(base_s)) * 1.0)");
    }

    #[test]
    fn exponential_warp() {
        let ws = spec("exp(s)", flat3(), None);
        let d = warped_ricci_check(&ws, &[0.3, 0.1, -0.2, 0.5]).unwrap();
        assert!(d.max_relative() < 1e-9, "{d:?}");
    }

    #[test]
    fn curved_base_and_fiber() {
        let base = MetricField::diagonal(Chart::new(["u", "v"]).unwrap(), &["1", "exp(u*v)"]).unwrap();
        let fiber = MetricField::diagonal(Chart::new(["a", "b"]).unwrap(), &["1", "sin(a)^2"]).unwrap();
        let ws = WarpedSpec {
            phi: ScalarField::parse(base.chart(), "2 + sin(u)*v").unwrap(),
            base,
            fiber,
            mu: Some(1.0),
        };
        let d = warped_ricci_check(&ws, &[0.3, 0.4, 1.1, -0.5]).unwrap();
        assert!(d.max_relative() < 1e-9, "{d:?}");
    }

    #[test]
    fn unit_warp_is_a_product() {
        let fiber = MetricField::diagonal(Chart::new(["a", "b"]).unwrap(), &["1", "sin(a)^2"]).unwrap();
        let d = warped_ricci_check(&spec("1", fiber, None), &[0.2, 0.9, 0.1]).unwrap();
        assert!(d.max_relative() < 1e-10);
        let bad = spec("s", flat3(), None);
        assert!(matches!(
            warped_ricci_check(&bad, &[-0.5, 0.0, 0.0, 0.0]),
            Err(ConstructionError::NonPositiveWarping { .. })
        ));
    }

    #[test]
    fn sphere_three_probe() {
        let fiber = MetricField::diagonal(Chart::new(["a", "b"]).unwrap(), &["1", "sin(a)^2"]).unwrap();
        let ws = spec("sin(s)", fiber, Some(1.0));
        let probe = warped_einstein_probe(&ws, &[0.7, 1.2, 0.3]).unwrap();
        assert!((probe.lambda_fit - 2.0).abs() < 1e-12);
        assert!(probe.defect.unwrap() < 1e-12);
    }
}

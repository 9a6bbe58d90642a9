use crate::expr::Expr;
use crate::geometry::{scale_of, Chart, LocalGeometry, MetricField, ScalarField, Tensor2};
use crate::soliton::{gqe_residual, GqeInstance, ResidualTensor};

use super::{block_metric, shift, ConstructionError};

/// `−h² dt² ⊕ ḡ` over a Riemannian fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct SssSpec {
    pub fiber: MetricField,
    pub h: ScalarField,
    pub time: String,
}

impl SssSpec {
    pub fn new(fiber: MetricField, h: ScalarField) -> SssSpec {
        let mut time = "t".to_string();
        while fiber.chart().index_of(&time).is_some() {
            time.insert(0, '_');
        }
        SssSpec { fiber, h, time }
    }

    fn chart(&self) -> Result<Chart, ConstructionError> {
        Ok(Chart::new(
            std::iter::once(self.time.clone()).chain(self.fiber.chart().coords().iter().cloned()),
        )?)
    }
}

fn lift(e: &Expr, chart: &Chart) -> Expr {
    shift(e, chart, 1)
}

pub fn sss_build(ss: &SssSpec) -> Result<MetricField, ConstructionError> {
    let chart = ss.chart()?;
    let h = lift(ss.h.expr(), &chart);
    let lapse = ScalarField::new(Expr::constant(-1.0) * h.clone() * h);
    let time = MetricField::new(Chart::new([ss.time.clone()])?, vec![vec![Expr::constant(1.0)]])?;
    // The time block is a 1×1 constant scaled by −h².
    Ok(block_metric(
        chart,
        &[(0, &time, Some(lapse.expr())), (1, &ss.fiber, None)],
    )?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SssDefects {
    /// `Ric̃(∂t,∂t)` against `−hΔh · g_I(∂t,∂t)` with `g_I = −dt²`.
    pub tt: f64,
    /// Same comparison with `g_I = +dt²`, kept as a diagnostic.
    pub tt_euclidean_reading: f64,
    /// `Ric̃(U,V) − S̄(U,V) + Hess h(U,V)/h`.
    pub fiber: f64,
    /// `Ric̃(∂t, U)`.
    pub mixed: f64,
    /// Christoffel symbols against the three connection formulas.
    pub connection: f64,
    /// `r̃ − r̄ + 2Δh/h`.
    pub scalar: f64,
    pub scale: f64,
}

impl SssDefects {
    /// Largest relative defect among the asserted comparisons (the
    /// Euclidean reading of the time block is excluded).
    pub fn max_relative(&self) -> f64 {
        self.tt.max(self.fiber).max(self.mixed).max(self.connection).max(self.scalar) / self.scale
    }
}

pub fn sss_formula_check(ss: &SssSpec, p: &[f64]) -> Result<SssDefects, ConstructionError> {
    let fiber = LocalGeometry::new(&ss.fiber, &p[1..])?;
    let h = fiber.field(&ss.h)?;
    if !(h.value > 0.0) {
        return Err(ConstructionError::NonPositiveLapse { value: h.value });
    }
    let total = LocalGeometry::new(&sss_build(ss)?, p)?;
    let n = ss.fiber.dim();
    let ric = total.ricci();
    let ric_f = fiber.ricci();
    let gamma = total.christoffel();
    let gamma_f = fiber.christoffel();
    let g = &total.metric_value().g;

    let expected_tt = -h.value * h.lap * -1.0;
    let tt = (ric[[0, 0]] - expected_tt).abs();
    let tt_euclidean_reading = (ric[[0, 0]] + h.value * h.lap).abs();
    let mut fiber_defect = 0.0f64;
    let mut mixed = 0.0f64;
    for a in 0..n {
        mixed = mixed.max(ric[[0, a + 1]].abs());
        for b in 0..n {
            let expected = ric_f[[a, b]] - h.hess[[a, b]] / h.value;
            fiber_defect = fiber_defect.max((ric[[a + 1, b + 1]] - expected).abs());
        }
    }

    // Γ̃^c_{ij} expected from the connection formulas.
    let expected_gamma = |c: usize, i: usize, j: usize| -> f64 {
        match (c, i, j) {
            (0, 0, 0) => 0.0,
            (_, 0, 0) => -g[[0, 0]] / h.value * h.grad[[c - 1]],
            (0, 0, u) | (0, u, 0) => h.df[[u - 1]] / h.value,
            (_, 0, _) | (_, _, 0) => 0.0,
            (0, _, _) => 0.0,
            (c, u, v) => gamma_f[[c - 1, u - 1, v - 1]],
        }
    };
    let mut connection = 0.0f64;
    for c in 0..=n {
        for i in 0..=n {
            for j in 0..=n {
                connection = connection.max((gamma[[c, i, j]] - expected_gamma(c, i, j)).abs());
            }
        }
    }
    let scalar = (total.scalar() - fiber.scalar() + 2.0 * h.lap / h.value).abs();
    Ok(SssDefects {
        tt,
        tt_euclidean_reading,
        fiber: fiber_defect,
        mixed,
        connection,
        scalar,
        scale: scale_of(&[
            ric.data(),
            ric_f.data(),
            gamma.data(),
            h.hess.data(),
            &[h.value * h.lap, total.scalar(), fiber.scalar()],
        ]),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogHessianReport {
    /// `max |∇²ln h − ∇²h/h + dh⊗dh/h²|`.
    pub defect: f64,
    /// `ψ = −ln h` at the point.
    pub psi: f64,
}

pub fn log_hessian_identity(metric: &MetricField, h: &ScalarField, p: &[f64]) -> Result<LogHessianReport, ConstructionError> {
    let geo = LocalGeometry::new(metric, p)?;
    let hc = geo.field(h)?;
    if !(hc.value > 0.0) {
        return Err(ConstructionError::NonPositiveLapse { value: hc.value });
    }
    let ln = geo.field_of(&h.expr().clone().ln())?;
    let n = geo.dim();
    let mut defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let rhs = hc.hess[[i, j]] / hc.value - hc.df[[i]] * hc.df[[j]] / (hc.value * hc.value);
            defect = defect.max((ln.hess[[i, j]] - rhs).abs());
        }
    }
    Ok(LogHessianReport {
        defect,
        psi: -hc.value.ln(),
    })
}

/// `Ric̄ + Hess ψ − dψ⊗dψ − λ ḡ − (m/φ) Hess φ` with `ψ = −ln h`, the fiber
/// equation satisfied by a quasi-Einstein static spacetime.
pub fn static_fiber_residual(
    fiber: &MetricField,
    h: &ScalarField,
    phi: &ScalarField,
    m: f64,
    lambda: &ScalarField,
    p: &[f64],
) -> Result<ResidualTensor, ConstructionError> {
    let geo = LocalGeometry::new(fiber, p)?;
    let hv = geo.field(h)?.value;
    if !(hv > 0.0) {
        return Err(ConstructionError::NonPositiveLapse { value: hv });
    }
    let psi = geo.field_of(&(Expr::constant(-1.0) * h.expr().clone().ln()))?;
    let ph = geo.field(phi)?;
    let lam = geo.evaluate(lambda.expr())?.value();
    let n = geo.dim();
    let ric = geo.ricci();
    let g = &geo.metric_value().g;
    let comps = Tensor2::from_fn(n, |[i, j]| {
        ric[[i, j]] + psi.hess[[i, j]] - psi.df[[i]] * psi.df[[j]] - lam * g[[i, j]] - m / ph.value * ph.hess[[i, j]]
    });
    let max_abs = comps.max_abs();
    Ok(ResidualTensor {
        components: comps,
        scale: scale_of(&[ric.data(), psi.hess.data(), ph.hess.data(), &[lam]]),
        max_abs,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SssSolitonReport {
    /// `λ̃ = −(2Δh + hΔφ)/h` on the fiber.
    pub lambda: f64,
    /// Fiber equation `Ric̄ + Hess f − ¼ df⊗df = λ̃ ḡ` with `f = 2φ`.
    pub hypothesis: ResidualTensor,
    /// `Ric̃ + H̃ess φ − λ̃ g̃` on the static spacetime with `h = e^{−φ}`.
    pub conclusion: ResidualTensor,
}

pub fn sss_soliton_check(fiber: &MetricField, phi: &ScalarField, p: &[f64]) -> Result<SssSolitonReport, ConstructionError> {
    let fp = &p[1..];
    let h = ScalarField::new((Expr::constant(-1.0) * phi.expr().clone()).exp());
    let fgeo = LocalGeometry::new(fiber, fp)?;
    let hc = fgeo.field(&h)?;
    let pc = fgeo.field(phi)?;
    let lambda = -(2.0 * hc.lap + hc.value * pc.lap) / hc.value;

    let gqe = GqeInstance {
        metric: fiber.clone(),
        f: ScalarField::new(Expr::constant(2.0) * phi.expr().clone()),
        alpha: 0.25,
        lambda: ScalarField::constant(lambda),
    };
    let hypothesis = gqe_residual(&gqe, fp)?;

    let ss = SssSpec::new(fiber.clone(), h);
    let total_metric = sss_build(&ss)?;
    let total = LocalGeometry::new(&total_metric, p)?;
    let lifted = lift(phi.expr(), total_metric.chart());
    let tphi = total.field_of(&lifted)?;
    let n = total.dim();
    let ric = total.ricci();
    let g = &total.metric_value().g;
    let comps = Tensor2::from_fn(n, |[i, j]| ric[[i, j]] + tphi.hess[[i, j]] - lambda * g[[i, j]]);
    let max_abs = comps.max_abs();
    let conclusion = ResidualTensor {
        components: comps,
        scale: scale_of(&[ric.data(), tphi.hess.data(), &[lambda]]),
        max_abs,
    };
    Ok(SssSolitonReport {
        lambda,
        hypothesis,
        conclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat3() -> MetricField {
        MetricField::diagonal(Chart::new(["x", "y", "z"]).unwrap(), &["1", "1", "1"]).unwrap()
    }

    fn sphere() -> MetricField {
        MetricField::diagonal(Chart::new(["a", "b"]).unwrap(), &["1", "sin(a)^2"]).unwrap()
    }

    #[test]
    fn unit_lapse() {
        let ss = SssSpec::new(flat3(), ScalarField::constant(1.0));
        let d = sss_formula_check(&ss, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(d.max_relative() < 1e-12);
        assert_eq!(sss_build(&ss).unwrap().chart().coords()[0], "t");
    }

    #[test]
    fn exponential_lapse() {
        let f = flat3();
        let ss = SssSpec::new(f.clone(), ScalarField::parse(f.chart(), "exp(x)").unwrap());
        let p = [0.5, 0.3, -0.2, 0.8];
        let d = sss_formula_check(&ss, &p).unwrap();
        assert!(d.max_relative() < 1e-10, "{d:?}");
        let r = LocalGeometry::new(&sss_build(&ss).unwrap(), &p).unwrap().scalar();
        assert!((r + 2.0).abs() < 1e-10);
        assert!(d.tt_euclidean_reading > 0.1);
    }

    #[test]
    fn sphere_fiber() {
        let s = sphere();
        let ss = SssSpec::new(s.clone(), ScalarField::parse(s.chart(), "1 + 0.1*sin(b)*cos(a)").unwrap());
        let d = sss_formula_check(&ss, &[0.0, 1.1, 0.4]).unwrap();
        assert!(d.max_relative() < 1e-9, "{d:?}");
    }

    #[test]
    fn log_hessian() {
        let f = flat3();
        let e = log_hessian_identity(&f, &ScalarField::parse(f.chart(), "exp(x)").unwrap(), &[0.1, 0.2, 0.3]).unwrap();
        assert!(e.defect < 1e-14);
        assert!((e.psi + 0.1).abs() < 1e-15);
        let h = ScalarField::parse(f.chart(), "2 + sin(x*y) + z^2").unwrap();
        assert!(log_hessian_identity(&f, &h, &[0.4, -0.3, 0.8]).unwrap().defect < 1e-12);
        let s = sphere();
        let h = ScalarField::parse(s.chart(), "2 + cos(a)*sin(b)").unwrap();
        assert!(log_hessian_identity(&s, &h, &[0.9, 0.3]).unwrap().defect < 1e-10);
    }

    #[test]
    fn constant_phi_soliton() {
        let r = sss_soliton_check(&flat3(), &ScalarField::constant(0.7), &[0.0, 0.1, 0.2, 0.3]).unwrap();
        assert_eq!(r.lambda, 0.0);
        assert!(r.conclusion.max_abs < 1e-14);
    }

    #[test]
    fn conclusion_fiber_block_tracks_hypothesis() {
        let f = flat3();
        let phi = ScalarField::parse(f.chart(), "0.3*sin(x) + 0.2*y*z").unwrap();
        let r = sss_soliton_check(&f, &phi, &[0.2, 0.4, -0.1, 0.6]).unwrap();
        assert!(r.hypothesis.max_abs > 1e-3);
        for i in 0..3 {
            for j in 0..3 {
                let d = r.conclusion.components[[i + 1, j + 1]] - r.hypothesis.components[[i, j]];
                assert!(d.abs() < 1e-12);
            }
        }
        assert!(r.conclusion.components[[0, 0]].abs() < 1e-12);
    }

    #[test]
    fn mismatched_fiber_is_detected() {
        let f = flat3();
        // f = −4 ln‖x‖² solves the quasi-Einstein equation for λ = −8/ρ², not the
        // λ required here.
        let phi = ScalarField::parse(f.chart(), "-2*ln(x^2+y^2+z^2)").unwrap();
        let r = sss_soliton_check(&f, &phi, &[0.0, 0.8, -0.6, 0.9]).unwrap();
        assert!(r.hypothesis.relative() > 1e-2);
        assert!(r.conclusion.relative() > 1e-2);
    }
}

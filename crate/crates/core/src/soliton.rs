//! Residuals of gradient Ricci soliton type equations and the identities
//! they imply.

use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::geometry::{
    scale_of, FieldCalculus, FieldJets, GeometryError, LocalGeometry, MetricField, ScalarField, Tensor2,
};
use crate::jet::Jet;

/// `|f|` below this is treated as a zero of the potential.
pub const POTENTIAL_GUARD: f64 = 1e-8;

/// Relative residual under which an instance counts as a soliton.
pub const SOLITON_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolitonError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("potential too close to zero (f = {value:e})")]
    PotentialNearZero { value: f64 },
    #[error("this identity needs h = f")]
    RequiresHEqualsF,
    #[error("expected dimension {expected}, found {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("m must be positive, got {0}")]
    NonPositiveM(f64),
}

impl From<EvalError> for SolitonError {
    fn from(e: EvalError) -> Self {
        SolitonError::Geometry(e.into())
    }
}

/// The coefficient `h` of `Hess f`.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    EqualToF,
    One,
    Field(ScalarField),
}

/// `Ric + h Hess f = λ g`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolitonInstance {
    pub metric: MetricField,
    pub f: ScalarField,
    pub h: Coupling,
    pub lambda: ScalarField,
}

/// `Ric + Hess f − α df⊗df = λ g`.
#[derive(Debug, Clone, PartialEq)]
pub struct GqeInstance {
    pub metric: MetricField,
    pub f: ScalarField,
    pub alpha: f64,
    pub lambda: ScalarField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualTensor {
    pub components: Tensor2,
    pub scale: f64,
    pub max_abs: f64,
}

impl ResidualTensor {
    fn new(components: Tensor2, scale: f64) -> ResidualTensor {
        ResidualTensor {
            max_abs: components.max_abs(),
            components,
            scale,
        }
    }

    pub fn relative(&self) -> f64 {
        self.max_abs / self.scale
    }

    /// Index of the largest component.
    pub fn argmax(&self) -> [usize; 2] {
        let (_, idx) = self.components.max_diff(&Tensor2::zeros(self.components.dim()));
        idx
    }
}

/// Everything about an instance at one point that the checks below share.
struct Evaluated {
    geo: LocalGeometry,
    f: FieldJets,
    calc: FieldCalculus,
    h: f64,
    lambda: Jet,
}

impl SolitonInstance {
    fn evaluate(&self, p: &[f64]) -> Result<Evaluated, SolitonError> {
        let geo = LocalGeometry::new(&self.metric, p)?;
        let f = geo.field_jets(&self.f)?;
        let calc = geo.calculus_from(&f);
        let h = match &self.h {
            Coupling::EqualToF => calc.value,
            Coupling::One => 1.0,
            Coupling::Field(h) => geo.evaluate(h.expr())?.value(),
        };
        let lambda = geo.evaluate(self.lambda.expr())?;
        Ok(Evaluated {
            geo,
            f,
            calc,
            h,
            lambda,
        })
    }
}

fn residual_of(ev: &Evaluated) -> ResidualTensor {
    let n = ev.geo.dim();
    let ric = ev.geo.ricci();
    let g = &ev.geo.metric_value().g;
    let lam = ev.lambda.value();
    let hh = ev.calc.hess.map(|v| ev.h * v);
    let lg = g.map(|v| lam * v);
    let comps = Tensor2::from_fn(n, |[i, j]| ric[[i, j]] + hh[[i, j]] - lg[[i, j]]);
    ResidualTensor::new(comps, scale_of(&[ric.data(), hh.data(), lg.data()]))
}

/// `Ric + h Hess f − λ g`.
pub fn soliton_residual(s: &SolitonInstance, p: &[f64]) -> Result<ResidualTensor, SolitonError> {
    Ok(residual_of(&s.evaluate(p)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Report {
    /// `r + fΔf − λn`.
    pub scalar: f64,
    /// `∇r + 2Δf ∇f − 2f Q∇f − 2 Hess f(∇f) − 2(n−1)∇λ`, largest component.
    pub gradient: f64,
    /// `f R(X,Y,Z,∇f)` against its right-hand side, largest over coordinate triples.
    pub curvature: f64,
    pub scale: f64,
    /// Relative soliton residual at the point; identities are advisory above
    /// [`SOLITON_EPSILON`].
    pub soliton_residual: f64,
}

impl Lemma1Report {
    pub fn is_soliton(&self) -> bool {
        self.soliton_residual <= SOLITON_EPSILON
    }

    pub fn max_relative(&self) -> f64 {
        self.scalar.abs().max(self.gradient).max(self.curvature) / self.scale
    }
}

fn raise(gi: &Tensor2, v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| (0..n).map(|j| gi[[i, j]] * v[j]).sum()).collect()
}

pub fn lemma1_check(s: &SolitonInstance, p: &[f64]) -> Result<Lemma1Report, SolitonError> {
    if s.h != Coupling::EqualToF {
        return Err(SolitonError::RequiresHEqualsF);
    }
    let ev = s.evaluate(p)?;
    let geo = &ev.geo;
    let n = geo.dim();
    let mv = geo.metric_value();
    let (g, gi) = (&mv.g, &mv.g_inv);
    let c = &ev.calc;
    let f = c.value;
    let ric = geo.ricci();
    let r = geo.scalar();
    let lam = ev.lambda.value();
    let grad = c.grad.data();
    let df = c.df.data();

    let scalar = r + f * c.lap - lam * n as f64;

    let dr: Vec<f64> = (0..n).map(|i| geo.scalar_jet().d(i)).collect();
    let dl: Vec<f64> = (0..n).map(|i| ev.lambda.d(i)).collect();
    let ric_grad: Vec<f64> = (0..n).map(|i| (0..n).map(|l| ric[[i, l]] * grad[l]).sum()).collect();
    let hess_grad: Vec<f64> = (0..n).map(|i| (0..n).map(|l| c.hess[[i, l]] * grad[l]).sum()).collect();
    let (grad_r, q_grad, h_grad, grad_l) = (raise(gi, &dr), raise(gi, &ric_grad), raise(gi, &hess_grad), raise(gi, &dl));
    let mut gradient = 0.0f64;
    for i in 0..n {
        let rhs = -2.0 * grad[i] * c.lap + 2.0 * f * q_grad[i] + 2.0 * h_grad[i] + 2.0 * (n as f64 - 1.0) * grad_l[i];
        gradient = gradient.max((grad_r[i] - rhs).abs());
    }

    let riem = geo.riemann_lowered();
    let nric = geo.grad_ricci();
    let mut curvature = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let lhs: f64 = f * (0..n).map(|l| riem[[i, j, k, l]] * grad[l]).sum::<f64>();
                let rhs = dl[i] * g[[j, k]] - dl[j] * g[[i, k]]
                    - (df[i] * c.hess[[j, k]] - df[j] * c.hess[[i, k]])
                    - (nric[[i, j, k]] - nric[[j, i, k]]);
                curvature = curvature.max((lhs - rhs).abs());
            }
        }
    }
    let res = residual_of(&ev);
    Ok(Lemma1Report {
        scalar,
        gradient,
        curvature,
        scale: scale_of(&[
            riem.data(),
            nric.data(),
            ric.data(),
            c.hess.data(),
            df,
            &dr,
            &dl,
            &[r, f * c.lap, lam],
        ]),
        soliton_residual: res.relative(),
    })
}

/// Named right-hand-side terms of the Weyl identity, in printed order.
pub const LEMMA2_TERMS: [&str; 7] = [
    "ricci_gradient",
    "scalar",
    "ricci",
    "hessian",
    "laplacian",
    "gradient_norm",
    "cotton",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma2Report {
    pub defect: f64,
    pub scale: f64,
    pub lhs_max: f64,
    /// Largest component of each right-hand-side term, see [`LEMMA2_TERMS`].
    pub term_max: [f64; 7],
    pub soliton_residual: f64,
}

impl Lemma2Report {
    pub fn relative(&self) -> f64 {
        self.defect / self.scale
    }

    pub fn is_soliton(&self) -> bool {
        self.soliton_residual <= SOLITON_EPSILON
    }
}

pub fn lemma2_check(s: &SolitonInstance, p: &[f64]) -> Result<Lemma2Report, SolitonError> {
    if s.h != Coupling::EqualToF {
        return Err(SolitonError::RequiresHEqualsF);
    }
    let ev = s.evaluate(p)?;
    let geo = &ev.geo;
    let c = &ev.calc;
    let f = c.value;
    if f.abs() < POTENTIAL_GUARD {
        return Err(SolitonError::PotentialNearZero { value: f });
    }
    let n = geo.dim();
    let nf = n as f64;
    let g = &geo.metric_value().g;
    let ric = geo.ricci();
    let r = geo.scalar();
    let w = geo.weyl()?;
    let cot = geo.cotton();
    let grad = c.grad.data();
    let df = c.df.data();
    let dgn: Vec<f64> = (0..n).map(|i| ev.f.gradnorm2.d(i)).collect();
    let ric_grad: Vec<f64> = (0..n).map(|i| (0..n).map(|l| ric[[i, l]] * grad[l]).sum()).collect();
    let k1 = 1.0 / ((nf - 1.0) * (nf - 2.0));

    let mut defect = 0.0f64;
    let mut lhs_max = 0.0f64;
    let mut term_max = [0.0f64; 7];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let lhs: f64 = (0..n).map(|l| w[[i, j, k, l]] * grad[l]).sum();
                let skew = |a: &[f64]| a[i] * g[[j, k]] - a[j] * g[[i, k]];
                let terms = [
                    k1 * skew(&ric_grad),
                    -r * k1 * skew(df),
                    (df[i] * ric[[j, k]] - df[j] * ric[[i, k]]) / (nf - 2.0),
                    -(df[i] * c.hess[[j, k]] - df[j] * c.hess[[i, k]]) / f,
                    c.lap / (f * (nf - 1.0)) * skew(df),
                    -skew(&dgn) / (2.0 * f * (nf - 1.0)),
                    -cot[[i, j, k]] / f,
                ];
                let rhs: f64 = terms.iter().sum();
                for (m, t) in term_max.iter_mut().zip(terms) {
                    *m = m.max(t.abs());
                }
                lhs_max = lhs_max.max(lhs.abs());
                defect = defect.max((lhs - rhs).abs());
            }
        }
    }
    let mut parts: Vec<f64> = term_max.to_vec();
    parts.push(lhs_max);
    Ok(Lemma2Report {
        defect,
        scale: scale_of(&[&parts]),
        lhs_max,
        term_max,
        soliton_residual: residual_of(&ev).relative(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsotropyRecord {
    pub gradnorm2: f64,
    /// `|Q∇f − λ∇f|`, largest component.
    pub q_gradf_defect: f64,
    /// `|r − 4λ + 2Δf/f|`; `None` inside the potential guard band.
    pub scalar_relation_defect: Option<f64>,
}

pub fn isotropy_diagnostics(s: &SolitonInstance, p: &[f64]) -> Result<IsotropyRecord, SolitonError> {
    let ev = s.evaluate(p)?;
    let n = ev.geo.dim();
    if n != 4 {
        return Err(SolitonError::DimensionMismatch { expected: 4, got: n });
    }
    let c = &ev.calc;
    let lam = ev.lambda.value();
    let q = ev.geo.curvature().ricci_operator;
    let grad = c.grad.data();
    let q_gradf_defect = (0..n)
        .map(|i| ((0..n).map(|j| q[[i, j]] * grad[j]).sum::<f64>() - lam * grad[i]).abs())
        .fold(0.0, f64::max);
    let scalar_relation_defect =
        (c.value.abs() >= POTENTIAL_GUARD).then(|| (ev.geo.scalar() - 4.0 * lam + 2.0 * c.lap / c.value).abs());
    Ok(IsotropyRecord {
        gradnorm2: c.gradnorm2,
        q_gradf_defect,
        scalar_relation_defect,
    })
}

/// `Ric + Hess f − α df⊗df − λ g`.
pub fn gqe_residual(q: &GqeInstance, p: &[f64]) -> Result<ResidualTensor, SolitonError> {
    let geo = LocalGeometry::new(&q.metric, p)?;
    let c = geo.field(&q.f)?;
    let lam = geo.evaluate(q.lambda.expr())?.value();
    let n = geo.dim();
    let ric = geo.ricci();
    let g = &geo.metric_value().g;
    let dd = Tensor2::from_fn(n, |[i, j]| q.alpha * c.df[[i]] * c.df[[j]]);
    let lg = g.map(|v| lam * v);
    let comps = Tensor2::from_fn(n, |[i, j]| ric[[i, j]] + c.hess[[i, j]] - dd[[i, j]] - lg[[i, j]]);
    Ok(ResidualTensor::new(
        comps,
        scale_of(&[ric.data(), c.hess.data(), dd.data(), lg.data()]),
    ))
}

/// `max |(m/φ) Hess φ + Hess f − (1/m) df⊗df|` for `φ = e^{−f/m}`.
pub fn gqe_transform(metric: &MetricField, f: &ScalarField, m: f64, p: &[f64]) -> Result<f64, SolitonError> {
    if !(m > 0.0) {
        return Err(SolitonError::NonPositiveM(m));
    }
    let geo = LocalGeometry::new(metric, p)?;
    let c = geo.field(f)?;
    let phi_expr = (Expr::constant(-1.0 / m) * f.expr().clone()).exp();
    let phi = geo.field_of(&phi_expr)?;
    let n = geo.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let v = m / phi.value * phi.hess[[i, j]] + c.hess[[i, j]] - c.df[[i]] * c.df[[j]] / m;
            worst = worst.max(v.abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaFit {
    pub lambda_fit: f64,
    pub residual: ResidualTensor,
}

/// Least-squares `λ` for `Ric + h Hess f ≈ λ g` in the metric pairing.
pub fn solve_lambda(metric: &MetricField, f: &ScalarField, h: &Coupling, p: &[f64]) -> Result<LambdaFit, SolitonError> {
    let probe = SolitonInstance {
        metric: metric.clone(),
        f: f.clone(),
        h: h.clone(),
        lambda: ScalarField::constant(0.0),
    };
    let ev = probe.evaluate(p)?;
    let n = ev.geo.dim();
    let gi = &ev.geo.metric_value().g_inv;
    let t = residual_of(&ev).components;
    let mut trace = 0.0;
    for i in 0..n {
        for j in 0..n {
            trace += gi[[i, j]] * t[[i, j]];
        }
    }
    let lambda_fit = trace / n as f64;
    let fitted = Evaluated {
        lambda: Jet::constant(lambda_fit, n, 0).expect("valid shape"),
        ..ev
    };
    Ok(LambdaFit {
        lambda_fit,
        residual: residual_of(&fitted),
    })
}

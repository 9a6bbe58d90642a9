//! Named pointwise checks a run can request.

use crate::constructions::{sss_formula_check, walker_curvature_check, walker_system_residual, warped_ricci_check, ConstructionError};
use crate::duality::{hodge_star, null_from_orthonormal, orthonormal_frame, selfdual_check, DualityError};
use crate::geometry::{
    contracted_bianchi, cotton_traces, divergence_identities, first_bianchi, pair_symmetries, scale_of, weyl_conformal_invariance,
    weyl_traces, GeometryError, LocalGeometry, DIV_WEYL_COTTON_RATIO,
};
use crate::soliton::{
    gqe_residual, gqe_transform, isotropy_diagnostics, lemma1_check, lemma2_check, soliton_residual, Coupling, GqeInstance,
    SolitonError, SolitonInstance,
};

use super::config::{Construction, Setup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CheckKind {
    Bianchi,
    Symmetries,
    WeylTraces,
    CottonTraces,
    WeylZero,
    CottonZero,
    DivWeylCotton,
    WeylConformal,
    Divergence,
    HodgeSquare,
    SelfDual,
    SolitonResidual,
    Lemma1,
    Lemma2,
    Isotropy,
    GqeResidual,
    GqeTransform,
    WarpedRicci,
    SssFormulas,
    SssTimeReading,
    WalkerRicci,
    WalkerRiemann,
    WalkerSystem,
}

/// `(kind, name, default tolerance, summary)`; a missing tolerance marks a
/// diagnostic whose report carries `pass: null`.
const TABLE: [(CheckKind, &str, Option<f64>, &str); 23] = [
    (CheckKind::Bianchi, "bianchi", Some(1e-9), "first and contracted second Bianchi identities"),
    (CheckKind::Symmetries, "symmetries", Some(1e-9), "skew and pair symmetries of R_ijkl"),
    (CheckKind::WeylTraces, "weyl_traces", Some(1e-9), "Weyl tensor is trace-free"),
    (CheckKind::CottonTraces, "cotton_traces", Some(1e-9), "Cotton tensor is trace-free and skew"),
    (CheckKind::WeylZero, "weyl_zero", Some(1e-9), "|W| relative to |R|"),
    (CheckKind::CottonZero, "cotton_zero", Some(1e-9), "|C| relative to |∇Ric|"),
    (CheckKind::DivWeylCotton, "div_weyl_cotton", Some(1e-8), "div W − κ C with the measured κ"),
    (CheckKind::WeylConformal, "weyl_conformal", Some(1e-9), "W^i_jkl unchanged under g → e^{2φ} g"),
    (CheckKind::Divergence, "divergence", Some(1e-9), "divergence identities for φ"),
    (CheckKind::HodgeSquare, "hodge_square", Some(1e-10), "★² = ±Id on 2-forms"),
    (CheckKind::SelfDual, "selfdual", Some(1e-8), "frame criteria and W⁻ for the configured orientation"),
    (CheckKind::SolitonResidual, "soliton_residual", Some(1e-8), "Ric + h Hess f − λ g"),
    (CheckKind::Lemma1, "lemma1", Some(1e-8), "scalar, gradient and curvature identities of an f-almost soliton"),
    (CheckKind::Lemma2, "lemma2", Some(1e-8), "W(·,·,·,∇f) decomposition"),
    (CheckKind::Isotropy, "isotropy", None, "‖∇f‖² (zero with ∇f ≠ 0 means isotropic)"),
    (CheckKind::GqeResidual, "gqe_residual", Some(1e-8), "Ric + Hess f − α df⊗df − λ g"),
    (CheckKind::GqeTransform, "gqe_transform", Some(1e-10), "quasi-Einstein operator under φ = e^{−f/m}"),
    (CheckKind::WarpedRicci, "warped_ricci", Some(1e-9), "warped product Ricci formulas"),
    (CheckKind::SssFormulas, "sss_formulas", Some(1e-9), "static spacetime connection and Ricci formulas"),
    (CheckKind::SssTimeReading, "sss_time_reading", None, "time block compared with g_I = +dt²"),
    (CheckKind::WalkerRicci, "walker_ricci", Some(1e-10), "displayed Walker Ricci components and vanishing of the rest"),
    (CheckKind::WalkerRiemann, "walker_riemann", Some(1e-10), "displayed Walker curvature operator components"),
    (CheckKind::WalkerSystem, "walker_system", Some(1e-9), "the ten-line Walker soliton system"),
];

impl CheckKind {
    pub fn all() -> impl Iterator<Item = CheckKind> {
        TABLE.iter().map(|t| t.0)
    }

    fn entry(self) -> &'static (CheckKind, &'static str, Option<f64>, &'static str) {
        TABLE.iter().find(|t| t.0 == self).expect("every kind is tabled")
    }

    pub fn name(self) -> &'static str {
        self.entry().1
    }

    pub fn default_tolerance(self) -> Option<f64> {
        self.entry().2
    }

    pub fn summary(self) -> &'static str {
        self.entry().3
    }

    pub fn is_diagnostic(self) -> bool {
        self.default_tolerance().is_none()
    }

    pub fn from_name(name: &str) -> Option<CheckKind> {
        TABLE.iter().find(|t| t.1 == name).map(|t| t.0)
    }
}

/// Why a check cannot run on a setup at all.
pub fn requirements(kind: CheckKind, s: &Setup) -> Result<(), String> {
    use CheckKind::*;
    let n = s.metric.dim();
    let need = |ok: bool, what: &str| if ok { Ok(()) } else { Err(format!("needs {what}")) };
    match kind {
        Bianchi | Symmetries => need(n >= 2, "dimension ≥ 2"),
        WeylTraces | WeylZero | CottonTraces | CottonZero => need(n >= 3, "dimension ≥ 3"),
        DivWeylCotton | HodgeSquare | SelfDual => need(n == 4, "dimension 4"),
        WeylConformal | Divergence => need(s.phi.is_some(), "`phi`").and(need(n >= 3 || kind == Divergence, "dimension ≥ 3")),
        SolitonResidual => need(s.f.is_some() && s.lambda.is_some(), "`f` and `lambda`"),
        Lemma1 | Lemma2 => need(s.f.is_some() && s.lambda.is_some(), "`f` and `lambda`").and(need(s.h == Coupling::EqualToF, "h = \"f\"")),
        Isotropy => need(s.f.is_some(), "`f`").and(need(n == 4, "dimension 4")),
        GqeResidual => need(s.f.is_some() && s.lambda.is_some() && s.alpha.is_some(), "`f`, `alpha` and `lambda`"),
        GqeTransform => need(s.f.is_some() && s.m.is_some(), "`f` and `m`"),
        WarpedRicci => need(matches!(s.construction, Construction::Warped(_)), "a warped construction"),
        SssFormulas | SssTimeReading => need(matches!(s.construction, Construction::Sss(_)), "an sss construction"),
        WalkerRicci | WalkerRiemann => need(matches!(s.construction, Construction::Walker { only_b: true, .. }), "a walker construction with a = c = 0"),
        WalkerSystem => need(
            matches!(s.construction, Construction::Walker { only_b: true, layout: crate::constructions::WalkerLayout::Canonical, .. }),
            "a canonical walker construction with a = c = 0",
        )
        .and(need(s.f.is_some() && s.lambda.is_some(), "`f` and `lambda`")),
    }
}

/// Per-point failure, reported as a skip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skip(pub String);

fn geometry_reason(e: &GeometryError) -> String {
    match e {
        GeometryError::DegenerateMetric { .. } => "degenerate metric".into(),
        GeometryError::Eval(_) => "outside the domain of an expression".into(),
        other => other.to_string(),
    }
}

impl From<GeometryError> for Skip {
    fn from(e: GeometryError) -> Skip {
        Skip(geometry_reason(&e))
    }
}

impl From<SolitonError> for Skip {
    fn from(e: SolitonError) -> Skip {
        match e {
            SolitonError::Geometry(g) => g.into(),
            SolitonError::PotentialNearZero { .. } => Skip("potential near zero".into()),
            other => Skip(other.to_string()),
        }
    }
}

impl From<ConstructionError> for Skip {
    fn from(e: ConstructionError) -> Skip {
        match e {
            ConstructionError::Geometry(g) => g.into(),
            ConstructionError::Soliton(s) => s.into(),
            ConstructionError::NonPositiveWarping { .. } => Skip("non-positive warping function".into()),
            ConstructionError::NonPositiveLapse { .. } => Skip("non-positive lapse".into()),
            other => Skip(other.to_string()),
        }
    }
}

impl From<DualityError> for Skip {
    fn from(e: DualityError) -> Skip {
        match e {
            DualityError::SplitUnavailable => Skip("no real self-dual split in this signature".into()),
            DualityError::NotNeutral => Skip("metric is not of neutral signature".into()),
            other => Skip(other.to_string()),
        }
    }
}

fn instance(s: &Setup) -> SolitonInstance {
    SolitonInstance {
        metric: s.metric.clone(),
        f: s.f.clone().expect("checked by requirements"),
        h: s.h.clone(),
        lambda: s.lambda.clone().expect("checked by requirements"),
    }
}

/// Defect of `kind` at `p`, in the units its tolerance is stated in.
pub fn evaluate(kind: CheckKind, s: &Setup, p: &[f64]) -> Result<f64, Skip> {
    use CheckKind::*;
    let geo = || LocalGeometry::new(&s.metric, p);
    Ok(match kind {
        Bianchi => {
            let g = geo()?;
            first_bianchi(&g).relative().max(contracted_bianchi(&g).relative())
        }
        Symmetries => pair_symmetries(&geo()?).relative(),
        WeylTraces => weyl_traces(&geo()?)?.relative(),
        CottonTraces => cotton_traces(&geo()?).relative(),
        WeylZero => {
            let g = geo()?;
            let w = g.weyl()?;
            w.max_abs() / scale_of(&[g.riemann_lowered().data()])
        }
        CottonZero => {
            let g = geo()?;
            g.cotton().max_abs() / scale_of(&[g.grad_ricci().data()])
        }
        DivWeylCotton => {
            let g = geo()?;
            let c = g.cotton();
            let dw = g.div_weyl()?;
            let kc = c.map(|v| DIV_WEYL_COTTON_RATIO * v);
            dw.max_diff(&kc).0 / scale_of(&[dw.data(), kc.data()])
        }
        WeylConformal => weyl_conformal_invariance(&s.metric, s.phi.as_ref().expect("required").expr(), p)?.relative(),
        Divergence => divergence_identities(&geo()?, s.phi.as_ref().expect("required").expr())?.relative(),
        HodgeSquare => {
            let g = geo()?;
            let h = hodge_star(g.metric_value(), s.orientation)?;
            let sq = h.star * h.star - nalgebra::Matrix6::identity() * h.square;
            sq.abs().max()
        }
        SelfDual => {
            let g = geo()?;
            let mv = g.metric_value();
            if !mv.signature.is_neutral() {
                return Err(DualityError::NotNeutral.into());
            }
            let cb = g.conformal()?;
            let on = orthonormal_frame(mv)?.oriented(s.orientation);
            let null = null_from_orthonormal(&on)?;
            let a = selfdual_check(&cb, mv, &on)?;
            let b = selfdual_check(&cb, mv, &null)?;
            let scale = 1.0 + cb.weyl.max_abs();
            a.defect.max(b.defect).max(a.w_minus_norm) / scale
        }
        SolitonResidual => soliton_residual(&instance(s), p)?.relative(),
        Lemma1 => lemma1_check(&instance(s), p)?.max_relative(),
        Lemma2 => lemma2_check(&instance(s), p)?.relative(),
        Isotropy => isotropy_diagnostics(&instance_for_isotropy(s), p)?.gradnorm2.abs(),
        GqeResidual => {
            let q = GqeInstance {
                metric: s.metric.clone(),
                f: s.f.clone().expect("required"),
                alpha: s.alpha.expect("required"),
                lambda: s.lambda.clone().expect("required"),
            };
            gqe_residual(&q, p)?.relative()
        }
        GqeTransform => gqe_transform(&s.metric, s.f.as_ref().expect("required"), s.m.expect("required"), p)?,
        WarpedRicci => match &s.construction {
            Construction::Warped(ws) => warped_ricci_check(ws, p)?.max_relative(),
            _ => unreachable!("checked by requirements"),
        },
        SssFormulas | SssTimeReading => match &s.construction {
            Construction::Sss(ss) => {
                let d = sss_formula_check(ss, p)?;
                if kind == SssFormulas {
                    d.max_relative()
                } else {
                    d.tt_euclidean_reading / d.scale
                }
            }
            _ => unreachable!("checked by requirements"),
        },
        WalkerRicci | WalkerRiemann => match &s.construction {
            Construction::Walker { b, layout, .. } => {
                let r = walker_curvature_check(b, *layout, p)?;
                let d = if kind == WalkerRicci {
                    r.ricci_defect().max(r.unlisted_ricci.0)
                } else {
                    r.riemann_defect()
                };
                d / r.scale
            }
            _ => unreachable!("checked by requirements"),
        },
        WalkerSystem => match &s.construction {
            Construction::Walker { b, .. } => {
                let r = walker_system_residual(
                    s.f.as_ref().expect("required").expr(),
                    s.lambda.as_ref().expect("required").expr(),
                    b,
                    p,
                )?;
                r.lines.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            }
            _ => unreachable!("checked by requirements"),
        },
    })
}

fn instance_for_isotropy(s: &Setup) -> SolitonInstance {
    SolitonInstance {
        metric: s.metric.clone(),
        f: s.f.clone().expect("required"),
        h: s.h.clone(),
        lambda: s.lambda.clone().unwrap_or_else(|| crate::geometry::ScalarField::constant(0.0)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in CheckKind::all() {
            assert_eq!(CheckKind::from_name(k.name()), Some(k));
        }
        assert_eq!(CheckKind::all().count(), TABLE.len());
        assert!(CheckKind::Isotropy.is_diagnostic());
        assert!(!CheckKind::Bianchi.is_diagnostic());
    }
}

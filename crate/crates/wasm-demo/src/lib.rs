//! Browser bindings for three pointwise computations. Every export returns
//! a JSON string; errors come back as thrown JS errors.

use ricci_jet::constructions::{walker_build, walker_curvature_check, WalkerLayout, WalkerSpec};
use ricci_jet::duality::{hodge_star, null_from_orthonormal, orthonormal_frame, selfdual_check, weyl_split};
use ricci_jet::geometry::{Chart, LocalGeometry, MetricField, ScalarField};
use ricci_jet::soliton::{lemma2_check, soliton_residual, Coupling, SolitonInstance, LEMMA2_TERMS};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

fn point4(p: &[f64]) -> Result<[f64; 4], String> {
    p.try_into().map_err(|_| format!("expected 4 coordinates, got {}", p.len()))
}

#[derive(Serialize)]
struct Component {
    label: String,
    engine: f64,
    displayed: f64,
    defect: f64,
}

#[derive(Serialize)]
struct WalkerOut {
    riemann: Vec<Component>,
    ricci: Vec<Component>,
    unlisted_ricci: f64,
    unlisted_ricci_at: String,
    scale: f64,
}

/// Engine curvature of the Walker metric with `a = c = 0` against the
/// displayed component formulas, at `(t, x, y, z)`.
pub fn walker_curvature_json(b: &str, p: &[f64]) -> Result<String, String> {
    let p = point4(p)?;
    let e = WalkerSpec::chart().parse(b).map_err(|e| e.to_string())?;
    let r = walker_curvature_check(&e, WalkerLayout::Canonical, &p).map_err(|e| e.to_string())?;
    let conv = |cs: &[ricci_jet::constructions::ComponentCheck]| {
        cs.iter()
            .map(|c| Component {
                label: c.label.clone(),
                engine: c.engine,
                displayed: c.displayed,
                defect: c.defect(),
            })
            .collect()
    };
    Ok(to_json(&WalkerOut {
        riemann: conv(&r.riemann),
        ricci: conv(&r.ricci),
        unlisted_ricci: r.unlisted_ricci.0,
        unlisted_ricci_at: r.unlisted_ricci.1.clone(),
        scale: r.scale,
    }))
}

#[derive(Serialize)]
struct SolitonOut {
    residual: Vec<Vec<f64>>,
    max_abs: f64,
    relative: f64,
    lemma2_defect: Option<f64>,
    lemma2_terms: Vec<(String, f64)>,
}

/// `Ric + f Hess f − λ g` for a diagonal metric on `(a, b, c, d)`; the four
/// diagonal entries are separated by `;`.
pub fn soliton_json(diagonal: &str, f: &str, lambda: &str, p: &[f64]) -> Result<String, String> {
    let p = point4(p)?;
    let chart = Chart::new(["a", "b", "c", "d"]).map_err(|e| e.to_string())?;
    let diag: Vec<&str> = diagonal.split(';').map(str::trim).collect();
    if diag.len() != 4 {
        return Err(format!("expected 4 diagonal entries, got {}", diag.len()));
    }
    let metric = MetricField::diagonal(chart.clone(), &diag).map_err(|e| e.to_string())?;
    let s = SolitonInstance {
        f: ScalarField::parse(&chart, f).map_err(|e| e.to_string())?,
        lambda: ScalarField::parse(&chart, lambda).map_err(|e| e.to_string())?,
        h: Coupling::EqualToF,
        metric,
    };
    let r = soliton_residual(&s, &p).map_err(|e| e.to_string())?;
    let l2 = lemma2_check(&s, &p).ok();
    Ok(to_json(&SolitonOut {
        residual: (0..4).map(|i| (0..4).map(|j| r.components[[i, j]]).collect()).collect(),
        max_abs: r.max_abs,
        relative: r.relative(),
        lemma2_defect: l2.as_ref().map(|l| l.defect),
        lemma2_terms: l2
            .map(|l| LEMMA2_TERMS.iter().zip(l.term_max).map(|(n, v)| (n.to_string(), v)).collect())
            .unwrap_or_default(),
    }))
}

#[derive(Serialize)]
struct DualityOut {
    w_plus: f64,
    w_minus: f64,
    orthonormal_defect: f64,
    null_defect: f64,
    tolerance: f64,
    self_dual: bool,
    split_residual: f64,
}

/// Weyl split of a Walker metric `(a, b, c)` with the given orientation.
pub fn duality_json(a: &str, b: &str, c: &str, p: &[f64], orientation: f64) -> Result<String, String> {
    let p = point4(p)?;
    let ch = WalkerSpec::chart();
    let parse = |s: &str| ch.parse(s).map_err(|e| e.to_string());
    let ws = WalkerSpec {
        a: parse(a)?,
        b: parse(b)?,
        c: parse(c)?,
    };
    let m = walker_build(&ws, WalkerLayout::Canonical).map_err(|e| e.to_string())?;
    let geo = LocalGeometry::new(&m, &p).map_err(|e| e.to_string())?;
    let cb = geo.conformal().map_err(|e| e.to_string())?;
    let mv = geo.metric_value();
    let on = orthonormal_frame(mv).map_err(|e| e.to_string())?.oriented(orientation);
    let null = null_from_orthonormal(&on).map_err(|e| e.to_string())?;
    let a = selfdual_check(&cb, mv, &on).map_err(|e| e.to_string())?;
    let n = selfdual_check(&cb, mv, &null).map_err(|e| e.to_string())?;
    let h = hodge_star(mv, orientation).map_err(|e| e.to_string())?;
    let split = weyl_split(&cb, mv, &h).map_err(|e| e.to_string())?;
    Ok(to_json(&DualityOut {
        w_plus: a.w_plus_norm,
        w_minus: a.w_minus_norm,
        orthonormal_defect: a.defect,
        null_defect: n.defect,
        tolerance: a.tolerance,
        self_dual: a.self_dual && n.self_dual,
        split_residual: (split.plus + split.minus - split.weyl).abs().max(),
    }))
}

#[wasm_bindgen]
pub fn walker_curvature(b: &str, point: &[f64]) -> Result<String, JsError> {
    walker_curvature_json(b, point).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn soliton(diagonal: &str, f: &str, lambda: &str, point: &[f64]) -> Result<String, JsError> {
    soliton_json(diagonal, f, lambda, point).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn duality(a: &str, b: &str, c: &str, point: &[f64], orientation: f64) -> Result<String, JsError> {
    duality_json(a, b, c, point, orientation).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> serde_json::Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn walker_ricci_matches() {
        let v = parse(&walker_curvature_json("x*y^2*z + sin(z)", &[0.1, 0.4, -0.3, 0.7]).unwrap());
        for c in v["ricci"].as_array().unwrap() {
            assert!(c["defect"].as_f64().unwrap() < 1e-10);
        }
    }

    #[test]
    fn quadratic_soliton_is_exact() {
        let q = "a^2 + b^2 + c^2 + d^2";
        let v = parse(&soliton_json("1;1;1;1", q, &format!("2*({q})"), &[0.5, 0.6, 0.7, 0.8]).unwrap());
        assert!(v["relative"].as_f64().unwrap() < 1e-12);
        assert!(v["lemma2_defect"].as_f64().unwrap() < 1e-10);
    }

    #[test]
    fn flat_walker_is_self_dual() {
        let v = parse(&duality_json("0", "0", "0", &[0.1, 0.2, 0.3, 0.4], 1.0).unwrap());
        assert_eq!(v["self_dual"], true);
        assert_eq!(v["split_residual"], 0.0);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(walker_curvature_json("x +", &[0.0; 4]).is_err());
        assert!(soliton_json("1;1", "a", "a", &[0.5; 4]).is_err());
        assert!(duality_json("0", "0", "0", &[0.0; 3], 1.0).is_err());
    }
}

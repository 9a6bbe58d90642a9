//! Radial profiles on flat space for the quasi-Einstein fiber equation with
//! the static-soliton choice of `λ`.

use std::sync::Arc;

use nalgebra::Vector2;
use ode_solvers::{Dopri5, System};
use serde::{Deserialize, Serialize};

use crate::expr::{Expr, SampledField};
use crate::geometry::{Chart, MetricField, ScalarField};
use crate::jet::{Jet, JetError};

use super::{sss_soliton_check, ConstructionError};

pub const PROFILE_FORMAT_VERSION: u32 = 1;

/// Residual bound under which a shot counts as a solution.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

const RTOL: f64 = 1e-10;
const ATOL: f64 = 1e-10;
const GRID_CELLS: usize = 200;
const MAX_SHOTS: usize = 60;

/// `f(ρ)` on flat `ℝⁿ`, stored as values and two derivatives on a grid and
/// interpolated by quintic Hermite polynomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub format_version: u32,
    pub dimension: usize,
    pub interpolation: String,
    pub radius: Vec<f64>,
    pub value: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl RadialProfile {
    pub fn new(dimension: usize, radius: Vec<f64>, value: Vec<f64>, first: Vec<f64>, second: Vec<f64>) -> Result<RadialProfile, ConstructionError> {
        let p = RadialProfile {
            format_version: PROFILE_FORMAT_VERSION,
            dimension,
            interpolation: "quintic-hermite".into(),
            radius,
            value,
            first,
            second,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), ConstructionError> {
        let bad = |m: &str| Err(ConstructionError::ProfileFormat(m.to_string()));
        if self.format_version != PROFILE_FORMAT_VERSION {
            return bad("unsupported format_version");
        }
        if self.interpolation != "quintic-hermite" {
            return bad("interpolation must be \"quintic-hermite\"");
        }
        if self.dimension == 0 || self.dimension > crate::jet::MAX_VARS {
            return bad("dimension out of range");
        }
        let k = self.radius.len();
        if k < 2 || self.value.len() != k || self.first.len() != k || self.second.len() != k {
            return bad("radius, value, first and second need equal lengths of at least 2");
        }
        if !(self.radius[0] > 0.0) || self.radius.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("radius must be positive and strictly increasing");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("profile serializes")
    }

    pub fn from_toml(text: &str) -> Result<RadialProfile, ConstructionError> {
        let p: RadialProfile = toml::from_str(text).map_err(|e| ConstructionError::ProfileFormat(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.radius[0], *self.radius.last().expect("validated"))
    }

    /// `f, f', f'', f'''` at `rho`.
    pub fn derivatives(&self, rho: f64) -> Option<[f64; 4]> {
        let (lo, hi) = self.interval();
        let slack = 1e-12 * hi;
        if !(rho >= lo - slack && rho <= hi + slack) {
            return None;
        }
        let r = &self.radius;
        let i = r.partition_point(|&x| x <= rho).clamp(1, r.len() - 1) - 1;
        let h = r[i + 1] - r[i];
        let s = (rho - r[i]) / h;
        let (y0, d0, s0) = (self.value[i], h * self.first[i], h * h * self.second[i]);
        let (y1, d1, s1) = (self.value[i + 1], h * self.first[i + 1], h * h * self.second[i + 1]);
        let c = [
            y0,
            d0,
            0.5 * s0,
            -10.0 * y0 - 6.0 * d0 - 1.5 * s0 + 10.0 * y1 - 4.0 * d1 + 0.5 * s1,
            15.0 * y0 + 8.0 * d0 + 1.5 * s0 - 15.0 * y1 + 7.0 * d1 - s1,
            -6.0 * y0 - 3.0 * d0 - 0.5 * s0 + 6.0 * y1 - 3.0 * d1 + 0.5 * s1,
        ];
        let mut out = [0.0; 4];
        let mut coeffs = c.to_vec();
        for (k, o) in out.iter_mut().enumerate() {
            let v = coeffs.iter().rev().fold(0.0, |acc, &a| acc * s + a);
            *o = v / h.powi(k as i32);
            coeffs = coeffs.iter().enumerate().skip(1).map(|(j, a)| j as f64 * a).collect();
        }
        Some(out)
    }

    /// The profile as a scalar field on the Euclidean chart of its dimension.
    pub fn field(self: &Arc<Self>) -> ScalarField {
        ScalarField::new(Expr::sampled(self.clone()))
    }
}

impl SampledField for RadialProfile {
    fn arity(&self) -> usize {
        self.dimension
    }

    fn jet(&self, coords: &[Jet]) -> Result<Jet, JetError> {
        let mut r2 = coords[0].try_mul(&coords[0])?;
        for c in &coords[1..self.dimension] {
            r2 = r2.try_add(&c.try_mul(c)?)?;
        }
        let rho = r2.sqrt()?;
        let d = self.derivatives(rho.value()).ok_or(JetError::Domain {
            func: "radial profile",
            value: rho.value(),
        })?;
        Ok(rho.compose(&d))
    }

    fn label(&self) -> String {
        let (lo, hi) = self.interval();
        format!("radial[{lo}, {hi}]")
    }
}

/// Shooting data for the radial equation `u' = (n−1)u/ρ − u²/2`, `u = f'`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProblem {
    pub dimension: usize,
    pub interval: (f64, f64),
    pub f0: f64,
    /// Starting guess for `f'(ρ₀)`; zero selects the constant branch.
    pub initial_slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution {
    pub profile: Arc<RadialProfile>,
    pub slope: f64,
    /// Largest fiber-equation residual over the verification points.
    pub max_residual: f64,
    pub feasible: bool,
}

struct Radial {
    n: f64,
}

impl System<f64, Vector2<f64>> for Radial {
    fn system(&self, rho: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
        dy[0] = y[1];
        dy[1] = (self.n - 1.0) * y[1] / rho - 0.5 * y[1] * y[1];
    }
}

fn integrate(problem: &RadialProblem, slope: f64) -> Result<(Vec<f64>, Vec<Vector2<f64>>), ConstructionError> {
    let (lo, hi) = problem.interval;
    let dx = (hi - lo) / GRID_CELLS as f64;
    let sys = Radial {
        n: problem.dimension as f64,
    };
    let mut solver = Dopri5::new(sys, lo, hi, dx, Vector2::new(problem.f0, slope), RTOL, ATOL);
    solver
        .integrate()
        .map_err(|e| ConstructionError::IntegrationFailure(format!("{e:?}")))?;
    let mut xs = solver.x_out().clone();
    let mut ys = solver.y_out().clone();
    if ys.iter().any(|y| !y.iter().all(|v| v.is_finite())) {
        return Err(ConstructionError::IntegrationFailure("non-finite state".into()));
    }
    // Dense output may repeat or overshoot the last node.
    let mut k = 1;
    while k < xs.len() {
        if xs[k] <= xs[k - 1] + 1e-14 * hi {
            xs.remove(k);
            ys.remove(k);
        } else {
            k += 1;
        }
    }
    Ok((xs, ys))
}

/// Tangential residual of the equation at the end of the interval.
fn endpoint_target(n: f64, rho: f64, u: f64) -> f64 {
    -(n - 2.0) * u / rho + 0.75 * u * u
}

pub fn radial_gqe_solve(problem: &RadialProblem) -> Result<RadialSolution, ConstructionError> {
    let (lo, hi) = problem.interval;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(ConstructionError::InvalidInterval { lo, hi });
    }
    let n = problem.dimension as f64;
    let shoot = |slope: f64| -> Result<f64, ConstructionError> {
        let (xs, ys) = integrate(problem, slope)?;
        Ok(endpoint_target(n, *xs.last().expect("non-empty"), ys.last().expect("non-empty")[1]))
    };

    let mut slope = problem.initial_slope;
    if slope != 0.0 {
        let (mut a, mut b) = (slope, slope * 1.1);
        let (mut fa, mut fb) = (shoot(a)?, shoot(b)?);
        let mut converged = false;
        for _ in 0..MAX_SHOTS {
            if fb.abs() < 1e-13 {
                converged = true;
                break;
            }
            let denom = fb - fa;
            if denom == 0.0 {
                break;
            }
            let next = b - fb * (b - a) / denom;
            a = b;
            fa = fb;
            b = next;
            fb = shoot(b)?;
        }
        if !converged {
            return Err(ConstructionError::ShootingNotConverged {
                iterations: MAX_SHOTS,
                residual: fb.abs(),
            });
        }
        slope = b;
    }

    let (xs, ys) = integrate(problem, slope)?;
    let second: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(r, y)| (n - 1.0) * y[1] / r - 0.5 * y[1] * y[1])
        .collect();
    let profile = Arc::new(RadialProfile::new(
        problem.dimension,
        xs,
        ys.iter().map(|y| y[0]).collect(),
        ys.iter().map(|y| y[1]).collect(),
        second,
    )?);
    let max_residual = verify(&profile)?;
    Ok(RadialSolution {
        profile,
        slope,
        max_residual,
        feasible: max_residual <= FEASIBILITY_TOLERANCE,
    })
}

/// Euclidean chart `x1..xn`.
pub(crate) fn euclidean(n: usize) -> Result<MetricField, ConstructionError> {
    let chart = Chart::new((1..=n).map(|i| format!("x{i}")))?;
    Ok(MetricField::diagonal(chart, &vec!["1"; n])?)
}

/// Fiber residual at interior points along a few rays.
fn verify(profile: &Arc<RadialProfile>) -> Result<f64, ConstructionError> {
    let n = profile.dimension;
    let fiber = euclidean(n)?;
    let phi = ScalarField::new(Expr::constant(0.5) * Expr::sampled(profile.clone()));
    let (lo, hi) = profile.interval();
    let mut worst = 0.0f64;
    for ray in 0..3 {
        let dir: Vec<f64> = (0..n).map(|i| ((i + ray) as f64 * 0.7 + 0.3).cos()).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        for k in 1..20 {
            let rho = lo + (hi - lo) * k as f64 / 20.0;
            let mut p = vec![0.0];
            p.extend(dir.iter().map(|d| d / norm * rho));
            let r = sss_soliton_check(&fiber, &phi, &p)?;
            worst = worst.max(r.hypothesis.max_abs);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_quintics() {
        let f = |r: f64| 0.3 * r.powi(5) - r.powi(3) + 2.0 * r;
        let d1 = |r: f64| 1.5 * r.powi(4) - 3.0 * r * r + 2.0;
        let d2 = |r: f64| 6.0 * r.powi(3) - 6.0 * r;
        let radius = vec![1.0, 1.3, 2.0];
        let p = RadialProfile::new(
            3,
            radius.clone(),
            radius.iter().map(|&r| f(r)).collect(),
            radius.iter().map(|&r| d1(r)).collect(),
            radius.iter().map(|&r| d2(r)).collect(),
        )
        .unwrap();
        let d = p.derivatives(1.55).unwrap();
        assert!((d[0] - f(1.55)).abs() < 1e-12);
        assert!((d[1] - d1(1.55)).abs() < 1e-11);
        assert!((d[2] - d2(1.55)).abs() < 1e-10);
        assert!((d[3] - (18.0 * 1.55 * 1.55 - 6.0)).abs() < 1e-9);
        assert!(p.derivatives(2.5).is_none());
    }

    #[test]
    fn toml_round_trip() {
        let p = RadialProfile::new(2, vec![1.0, 2.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let text = p.to_toml();
        assert!(text.contains("format_version = 1"));
        assert_eq!(RadialProfile::from_toml(&text).unwrap(), p);
        let broken = text.replace("radius = [1.0, 2.0]", "radius = [2.0, 1.0]");
        assert!(RadialProfile::from_toml(&broken).is_err());
    }

    #[test]
    fn trivial_shot() {
        let s = radial_gqe_solve(&RadialProblem {
            dimension: 3,
            interval: (1.0, 2.0),
            f0: 0.4,
            initial_slope: 0.0,
        })
        .unwrap();
        assert!(s.feasible);
        assert!(s.max_residual < 1e-14);
        assert!(s.profile.first.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn interval_through_origin_rejected() {
        let r = radial_gqe_solve(&RadialProblem {
            dimension: 3,
            interval: (-1.0, 1.0),
            f0: 0.0,
            initial_slope: 0.1,
        });
        assert_eq!(r, Err(ConstructionError::InvalidInterval { lo: -1.0, hi: 1.0 }));
    }

    #[test]
    fn nontrivial_shot_residual_is_reported() {
        let s = radial_gqe_solve(&RadialProblem {
            dimension: 3,
            interval: (1.0, 2.0),
            f0: 0.0,
            initial_slope: 0.5,
        });
        match s {
            Ok(s) if s.slope.abs() > 1e-8 => {
                assert!(!s.feasible);
                assert!(s.max_residual > FEASIBILITY_TOLERANCE);
            }
            Ok(s) => assert!(s.feasible),
            Err(ConstructionError::ShootingNotConverged { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

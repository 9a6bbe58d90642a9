use crate::expr::Expr;
use crate::geometry::{scale_of, Chart, LocalGeometry, MetricField, ScalarField};
use crate::soliton::{soliton_residual, Coupling, ResidualTensor, SolitonInstance};

use super::ConstructionError;

const T: usize = 0;
const X: usize = 1;
const Y: usize = 2;
const Z: usize = 3;
const NAMES: [&str; 4] = ["t", "x", "y", "z"];

/// Walker functions on the chart `(t, x, y, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkerSpec {
    pub a: Expr,
    pub b: Expr,
    pub c: Expr,
}

impl WalkerSpec {
    pub fn chart() -> Chart {
        Chart::new(NAMES).expect("valid names")
    }

    /// The `a = c = 0` family.
    pub fn b_only(b: &str) -> Result<WalkerSpec, ConstructionError> {
        Ok(WalkerSpec {
            a: Expr::constant(0.0),
            b: Self::chart().parse(b).map_err(crate::geometry::GeometryError::from)?,
            c: Expr::constant(0.0),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkerLayout {
    /// `g(∂x,∂z) = g(∂y,∂t) = 1`, `g(∂z,∂z) = a`, `g(∂z,∂t) = c`, `g(∂t,∂t) = b`.
    Canonical,
    /// `2 dt dy + 2 dx dz + b dz²`; `a` and `c` are ignored.
    Literal,
}

pub fn walker_build(ws: &WalkerSpec, layout: WalkerLayout) -> Result<MetricField, ConstructionError> {
    let zero = Expr::constant(0.0);
    let one = Expr::constant(1.0);
    let mut rows = vec![vec![zero; 4]; 4];
    let mut set = |i: usize, j: usize, e: &Expr| {
        rows[i][j] = e.clone();
        rows[j][i] = e.clone();
    };
    match layout {
        WalkerLayout::Canonical => {
            set(X, Z, &one);
            set(Y, T, &one);
            set(Z, Z, &ws.a);
            set(Z, T, &ws.c);
            set(T, T, &ws.b);
        }
        WalkerLayout::Literal => {
            set(T, Y, &one);
            set(X, Z, &one);
            set(Z, Z, &ws.b);
        }
    }
    Ok(MetricField::new(WalkerSpec::chart(), rows)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentCheck {
    pub label: String,
    pub engine: f64,
    pub displayed: f64,
}

impl ComponentCheck {
    pub fn defect(&self) -> f64 {
        (self.engine - self.displayed).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkerCurvatureReport {
    /// Coordinate components of the two displayed curvature operators.
    pub riemann: Vec<ComponentCheck>,
    /// The four displayed Ricci components.
    pub ricci: Vec<ComponentCheck>,
    /// Largest Ricci component outside the displayed list, with its label.
    pub unlisted_ricci: (f64, String),
    /// Curvature operator components outside the display that are non-zero.
    pub unlisted_riemann: Vec<ComponentCheck>,
    pub scale: f64,
}

impl WalkerCurvatureReport {
    pub fn riemann_defect(&self) -> f64 {
        self.riemann.iter().map(ComponentCheck::defect).fold(0.0, f64::max)
    }

    pub fn ricci_defect(&self) -> f64 {
        self.ricci.iter().map(ComponentCheck::defect).fold(0.0, f64::max)
    }

    /// Displayed components that disagree with the engine beyond `tol·scale`.
    pub fn mismatches(&self, tol: f64) -> Vec<&ComponentCheck> {
        self.riemann
            .iter()
            .chain(&self.ricci)
            .filter(|c| c.defect() > tol * self.scale)
            .collect()
    }
}

fn d(i: usize) -> String {
    format!("∂{}", NAMES[i])
}

/// Engine curvature of the `a = c = 0` Walker metric against the displayed
/// components.
pub fn walker_curvature_check(b: &Expr, layout: WalkerLayout, p: &[f64]) -> Result<WalkerCurvatureReport, ConstructionError> {
    let ws = WalkerSpec {
        a: Expr::constant(0.0),
        b: b.clone(),
        c: Expr::constant(0.0),
    };
    let geo = LocalGeometry::new(&walker_build(&ws, layout)?, p)?;
    let bj = geo.evaluate(b)?;
    let (bv, b_yy, b_xy, b_yz, b_zx) = (bj.value(), bj.dd(Y, Y), bj.dd(X, Y), bj.dd(Y, Z), bj.dd(Z, X));
    let up = geo.riemann_up();
    let ric = geo.ricci();

    let mut riemann = Vec::new();
    for (k, expected) in [
        (Y, [0.0, 0.0, 0.5 * b_yy, 0.0]),
        (T, [-0.5 * b_yy, 0.0, 0.5 * bv * b_yy, 0.0]),
    ] {
        for l in 0..4 {
            riemann.push(ComponentCheck {
                label: format!("R({},{}){} [{}]", d(Y), d(T), d(k), d(l)),
                engine: up[[l, k, Y, T]],
                displayed: expected[l],
            });
        }
    }
    let listed_ricci = [
        (X, T, 0.5 * b_xy),
        (Y, T, 0.5 * b_yy),
        (Z, T, 0.5 * b_yz),
        (T, T, -b_zx + 0.5 * bv * b_yy),
    ];
    let ricci = listed_ricci
        .iter()
        .map(|&(i, j, v)| ComponentCheck {
            label: format!("Ric({},{})", d(i), d(j)),
            engine: ric[[i, j]],
            displayed: v,
        })
        .collect();
    let mut unlisted_ricci = (0.0, String::new());
    for i in 0..4 {
        for j in i..4 {
            let listed = listed_ricci.iter().any(|&(a, b, _)| (a, b) == (i, j) || (a, b) == (j, i));
            if !listed && ric[[i, j]].abs() >= unlisted_ricci.0 {
                unlisted_ricci = (ric[[i, j]].abs(), format!("Ric({},{})", d(i), d(j)));
            }
        }
    }
    let scale = scale_of(&[up.data(), ric.data()]);
    let mut unlisted_riemann = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            for k in 0..4 {
                let displayed = (i, j) == (T, Y) && (k == Y || k == T);
                if displayed {
                    continue;
                }
                for l in 0..4 {
                    let v = up[[l, k, i, j]];
                    if v.abs() > 1e-10 * scale {
                        unlisted_riemann.push(ComponentCheck {
                            label: format!("R({},{}){} [{}]", d(i), d(j), d(k), d(l)),
                            engine: v,
                            displayed: 0.0,
                        });
                    }
                }
            }
        }
    }
    Ok(WalkerCurvatureReport {
        riemann,
        ricci,
        unlisted_ricci,
        unlisted_riemann,
        scale,
    })
}

/// The printed system, one label per line.
pub const SYSTEM_LINES: [&str; 10] = [
    "∂x f_x = 0",
    "∂y f_x = 0",
    "f ∂z f_x = λ",
    "∂t f_x − ½ b_x f_y = 0",
    "∂y f_y = 0",
    "∂z f_y = 0",
    "½ b_yy + f[∂t f_y − ½ b_y f_y] = λ",
    "∂z f_z = 0",
    "½ b_yz + f[∂t f_z − ½ b_z f_y] = 0",
    "−b_xz + ½ b b_yy + f[∂t f_t + ½(b_z f_x − b_t f_y − b b_yy f_y + b_x f_z + b_y f_t)] = λ b",
];

#[derive(Debug, Clone, PartialEq)]
pub struct WalkerSystemReport {
    /// Left minus right side of each line of [`SYSTEM_LINES`].
    pub lines: [f64; 10],
    /// Direct soliton residual (h = f) on the canonical layout, for comparison.
    pub soliton: ResidualTensor,
}

pub fn walker_system_residual(f: &Expr, lambda: &Expr, b: &Expr, p: &[f64]) -> Result<WalkerSystemReport, ConstructionError> {
    let ws = WalkerSpec {
        a: Expr::constant(0.0),
        b: b.clone(),
        c: Expr::constant(0.0),
    };
    let metric = walker_build(&ws, WalkerLayout::Canonical)?;
    let geo = LocalGeometry::new(&metric, p)?;
    let fj = geo.evaluate(f)?;
    let bj = geo.evaluate(b)?;
    let lam = geo.evaluate(lambda)?.value();
    let fv = fj.value();
    let fd = |i: usize| fj.d(i);
    let fdd = |i: usize, j: usize| fj.dd(i, j);
    let bd = |i: usize| bj.d(i);
    let bv = bj.value();
    let b_yy = bj.dd(Y, Y);
    let lines = [
        fdd(X, X),
        fdd(X, Y),
        fv * fdd(X, Z) - lam,
        fdd(X, T) - 0.5 * bd(X) * fd(Y),
        fdd(Y, Y),
        fdd(Y, Z),
        0.5 * b_yy + fv * (fdd(Y, T) - 0.5 * bd(Y) * fd(Y)) - lam,
        fdd(Z, Z),
        0.5 * bj.dd(Y, Z) + fv * (fdd(Z, T) - 0.5 * bd(Z) * fd(Y)),
        -bj.dd(X, Z) + 0.5 * bv * b_yy
            + fv * (fdd(T, T) + 0.5 * (bd(Z) * fd(X) - bd(T) * fd(Y) - bv * b_yy * fd(Y) + bd(X) * fd(Z) + bd(Y) * fd(T)))
            - lam * bv,
    ];
    let soliton = soliton_residual(
        &SolitonInstance {
            metric,
            f: ScalarField::new(f.clone()),
            h: Coupling::EqualToF,
            lambda: ScalarField::new(lambda.clone()),
        },
        p,
    )?;
    Ok(WalkerSystemReport { lines, soliton })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::metric_at;

    fn parse(s: &str) -> Expr {
        WalkerSpec::chart().parse(s).unwrap()
    }

    #[test]
    fn determinant_is_one() {
        let ws = WalkerSpec {
            a: parse("x*y + sin(t)"),
            b: parse("z^2 - x"),
            c: parse("exp(y*z)"),
        };
        for layout in [WalkerLayout::Canonical, WalkerLayout::Literal] {
            let v = metric_at(&walker_build(&ws, layout).unwrap(), &[0.3, -0.2, 0.5, 0.9]).unwrap();
            assert!((v.det - 1.0).abs() < 1e-12);
            assert!(v.signature.is_neutral());
        }
    }

    #[test]
    fn ricci_components() {
        let r = walker_curvature_check(&parse("y^2"), WalkerLayout::Canonical, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((r.ricci[1].engine - 1.0).abs() < 1e-12);
        let r = walker_curvature_check(&parse("x*y^2*z + 5"), WalkerLayout::Canonical, &[0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!((r.ricci[0].engine - 1.0).abs() < 1e-12);
        assert!(r.ricci_defect() < 1e-10);
        assert!(r.unlisted_ricci.0 < 1e-10);
        let flat = walker_curvature_check(&parse("0"), WalkerLayout::Canonical, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(flat.riemann_defect(), 0.0);
        assert!(flat.unlisted_riemann.is_empty());
    }

    #[test]
    fn second_display_misses_two_terms() {
        let p = [0.3, -0.7, 0.6, 1.2];
        let r = walker_curvature_check(&parse("x*y^2*z + sin(z)"), WalkerLayout::Canonical, &p).unwrap();
        let (x, y, z) = (p[1], p[2], p[3]);
        let b_yz = 2.0 * x * y;
        let b_xy = 2.0 * y * z;
        // R(∂y,∂t)∂t has ∂x and ∂z parts −½b_yz and −½b_xy.
        assert!((r.riemann[5].engine + 0.5 * b_yz).abs() < 1e-10);
        assert!((r.riemann[7].engine + 0.5 * b_xy).abs() < 1e-10);
        let bad: Vec<_> = r.mismatches(1e-10).iter().map(|c| c.label.clone()).collect();
        assert_eq!(bad, ["R(∂y,∂t)∂t [∂x]", "R(∂y,∂t)∂t [∂z]"]);
    }

    #[test]
    fn steady_example() {
        let rep = walker_system_residual(&parse("2*y + 3"), &parse("0"), &parse("4"), &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(rep.lines.iter().all(|v| v.abs() < 1e-12));
        assert!(rep.soliton.max_abs < 1e-12);
    }

    #[test]
    fn non_steady_example() {
        let p = [0.2, 0.7, -0.4, 1.3];
        let rep = walker_system_residual(&parse("x*z"), &parse("x*z"), &parse("x*y^2*z + 2"), &p).unwrap();
        let (x, y, z) = (p[1], p[2], p[3]);
        assert!((rep.soliton.components[[Z, T]] - x * y).abs() < 1e-10);
        assert!((rep.soliton.components[[X, T]] - y * z).abs() < 1e-10);
        assert!((rep.soliton.components[[T, T]] - y * y * (x * x * z * z - 1.0)).abs() < 1e-10);
    }
}

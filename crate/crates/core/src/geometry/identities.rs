//! Defects of the standard curvature identities, used as self-checks.

use crate::expr::Expr;
use crate::jet::Jet;

use super::{scale_of, GeometryError, LocalGeometry, MetricField, Tensor1};

/// Largest component of a defect together with the scale it should be
/// compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defect {
    pub max_abs: f64,
    pub scale: f64,
}

impl Defect {
    pub fn relative(&self) -> f64 {
        self.max_abs / self.scale
    }

    fn worst(self, other: Defect) -> Defect {
        if other.relative() > self.relative() {
            other
        } else {
            self
        }
    }
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `R_ijkl + R_jkil + R_kijl`.
pub fn first_bianchi(geo: &LocalGeometry) -> Defect {
    let r = geo.riemann_lowered();
    let n = geo.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    worst = worst.max((r[[i, j, k, l]] + r[[j, k, i, l]] + r[[k, i, j, l]]).abs());
                }
            }
        }
    }
    Defect {
        max_abs: worst,
        scale: scale_of(&[r.data()]),
    }
}

/// Skew symmetry in each pair, pair exchange symmetry, and symmetry of Ric.
pub fn pair_symmetries(geo: &LocalGeometry) -> Defect {
    let r = geo.riemann_lowered();
    let ric = geo.ricci();
    let n = geo.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((ric[[i, j]] - ric[[j, i]]).abs());
            for k in 0..n {
                for l in 0..n {
                    let v = r[[i, j, k, l]];
                    worst = worst
                        .max((v + r[[j, i, k, l]]).abs())
                        .max((v + r[[i, j, l, k]]).abs())
                        .max((v - r[[k, l, i, j]]).abs());
                }
            }
        }
    }
    Defect {
        max_abs: worst,
        scale: scale_of(&[r.data(), ric.data()]),
    }
}

/// `2 (div Ric)_j − ∂_j r`.
pub fn contracted_bianchi(geo: &LocalGeometry) -> Defect {
    let div = geo.divergence2(geo.ricci_jets());
    let dr = geo.scalar_jet();
    let n = geo.dim();
    let grad = geo.grad_ricci();
    Defect {
        max_abs: max_abs((0..n).map(|j| 2.0 * div[[j]] - dr.d(j))),
        scale: scale_of(&[grad.data(), &(0..n).map(|j| dr.d(j)).collect::<Vec<_>>()]),
    }
}

/// All single traces of the lowered Weyl tensor.
pub fn weyl_traces(geo: &LocalGeometry) -> Result<Defect, GeometryError> {
    let w = geo.weyl()?;
    let n = geo.dim();
    let gi = &geo.metric_value().g_inv;
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut worst = 0.0f64;
    for (p, q) in pairs {
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for u in 0..n {
                    for v in 0..n {
                        let mut idx = [0usize; 4];
                        let free = (0..4).filter(|s| *s != p && *s != q).collect::<Vec<_>>();
                        idx[p] = u;
                        idx[q] = v;
                        idx[free[0]] = a;
                        idx[free[1]] = b;
                        s += gi[[u, v]] * w[idx];
                    }
                }
                worst = worst.max(s.abs());
            }
        }
    }
    Ok(Defect {
        max_abs: worst,
        scale: scale_of(&[geo.riemann_lowered().data(), w.data()]),
    })
}

/// `g^{ik} C_ijk` and `g^{jk} C_ijk`.
pub fn cotton_traces(geo: &LocalGeometry) -> Defect {
    let c = geo.cotton();
    let n = geo.dim();
    let gi = &geo.metric_value().g_inv;
    let mut worst = 0.0f64;
    for a in 0..n {
        let mut first = 0.0;
        let mut second = 0.0;
        for u in 0..n {
            for v in 0..n {
                first += gi[[u, v]] * c[[u, a, v]];
                second += gi[[u, v]] * c[[a, u, v]];
            }
        }
        worst = worst.max(first.abs()).max(second.abs());
    }
    Defect {
        max_abs: worst,
        scale: scale_of(&[geo.grad_ricci().data(), c.data()]),
    }
}

/// Compares the (1,3) Weyl tensor of `metric` and `e^{2σ} metric`.
pub fn weyl_conformal_invariance(
    metric: &MetricField,
    sigma: &Expr,
    point: &[f64],
) -> Result<Defect, GeometryError> {
    let factor = (Expr::constant(2.0) * sigma.clone()).exp();
    let base = LocalGeometry::new(metric, point)?;
    let scaled = LocalGeometry::new(&metric.scaled(&factor), point)?;
    let raise = |geo: &LocalGeometry| -> Result<Vec<f64>, GeometryError> {
        let w = geo.weyl()?;
        let n = geo.dim();
        let gi = &geo.metric_value().g_inv;
        let mut out = Vec::with_capacity(n * n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        out.push((0..n).map(|m| gi[[k, m]] * w[[i, j, m, l]]).sum());
                    }
                }
            }
        }
        Ok(out)
    };
    let a = raise(&base)?;
    let b = raise(&scaled)?;
    Ok(Defect {
        max_abs: max_abs(a.iter().zip(&b).map(|(x, y)| x - y)),
        scale: scale_of(&[&a, &b]),
    })
}

/// `div(φ Ric) − φ div Ric − Ric(∇φ, ·)` together with
/// `div(Hess φ) − Ric(∇φ, ·) − dΔφ`.
pub fn divergence_identities(geo: &LocalGeometry, phi: &Expr) -> Result<Defect, GeometryError> {
    let n = geo.dim();
    let jets = geo.field_jets_of(phi)?;
    let calc = geo.calculus_from(&jets);
    let ric = geo.ricci();

    let phi1 = jets.f.truncate(1);
    let phi_ric: Vec<Jet> = geo.ricci_jets().iter().map(|r| &phi1 * r).collect();
    let lhs = geo.divergence2(&phi_ric);
    let div_ric = geo.divergence2(geo.ricci_jets());
    let ric_grad = Tensor1::from_fn(n, |[j]| (0..n).map(|i| ric[[i, j]] * calc.grad[[i]]).sum());
    let product = Defect {
        max_abs: max_abs((0..n).map(|j| lhs[[j]] - calc.value * div_ric[[j]] - ric_grad[[j]])),
        scale: scale_of(&[lhs.data(), ric_grad.data()]),
    };

    let g_inv1: Vec<Jet> = geo.g_inv_jets().iter().map(|j| j.truncate(1)).collect();
    let mut lap = Jet::constant(0.0, n, 1).expect("valid shape");
    for (a, h) in g_inv1.iter().zip(&jets.hess) {
        lap = &lap + &(a * h);
    }
    let div_hess = geo.divergence2(&jets.hess);
    let hessian = Defect {
        max_abs: max_abs((0..n).map(|j| div_hess[[j]] - ric_grad[[j]] - lap.d(j))),
        scale: scale_of(&[div_hess.data(), ric_grad.data()]),
    };
    Ok(product.worst(hessian))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Chart;

    fn metrics() -> Vec<MetricField> {
        let c4 = || Chart::new(["t", "x", "y", "z"]).unwrap();
        let walker = MetricField::parse(
            c4(),
            &[
                vec!["x*y^2*z + sin(z)", "0", "1", "0"],
                vec!["0", "0", "0", "1"],
                vec!["1", "0", "0", "0"],
                vec!["0", "1", "0", "0"],
            ],
        )
        .unwrap();
        let mixed = MetricField::parse(
            c4(),
            &[
                vec!["-1 - 0.1*x^2", "0.2*y", "0", "0"],
                vec!["0.2*y", "-1", "0.1*t*z", "0"],
                vec!["0", "0.1*t*z", "exp(0.3*t)", "0"],
                vec!["0", "0", "0", "1 + 0.2*sin(x*y)"],
            ],
        )
        .unwrap();
        let three = MetricField::diagonal(Chart::new(["x", "y", "z"]).unwrap(), &["1", "exp(x*y)", "1 + z^2*x^2"]).unwrap();
        vec![walker, mixed, three]
    }

    fn point(n: usize) -> Vec<f64> {
        [0.3, -0.4, 0.6, 0.2][..n].to_vec()
    }

    #[test]
    fn algebraic_identities() {
        for m in metrics() {
            let geo = LocalGeometry::new(&m, &point(m.dim())).unwrap();
            assert!(first_bianchi(&geo).relative() < 1e-10);
            assert!(pair_symmetries(&geo).relative() < 1e-12);
            assert!(contracted_bianchi(&geo).relative() < 1e-9);
            assert!(weyl_traces(&geo).unwrap().relative() < 1e-10);
            assert!(cotton_traces(&geo).relative() < 1e-10);
        }
    }

    #[test]
    fn conformal_invariance() {
        for m in metrics() {
            let sigma = m.chart().parse(&format!("0.2*{} - 0.1*{}^2", m.chart().coords()[0], m.chart().coords()[1])).unwrap();
            let d = weyl_conformal_invariance(&m, &sigma, &point(m.dim())).unwrap();
            assert!(d.relative() < 1e-8, "{d:?}");
        }
    }

    #[test]
    fn divergence_identities_hold() {
        for m in metrics() {
            let coords = m.chart().coords();
            let phi = m.chart().parse(&format!("sin({})*exp(0.5*{})", coords[0], coords[1])).unwrap();
            let geo = LocalGeometry::new(&m, &point(m.dim())).unwrap();
            let d = divergence_identities(&geo, &phi).unwrap();
            assert!(d.relative() < 1e-8, "{d:?}");
        }
    }
}

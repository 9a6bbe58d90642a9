use crate::expr::{coordinate_jets, Expr};
use crate::jet::Jet;

use super::{GeometryError, MetricField, MetricValue, ScalarField, Tensor1, Tensor2, Tensor3, Tensor4};

/// Jet order used for metric components: three derivatives are enough for
/// `∇Ric`, the Cotton tensor and `div W`.
pub const METRIC_ORDER: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureBundle {
    pub christoffel: Tensor3,
    /// `R^l_{kij}` at `[l, k, i, j]`.
    pub riemann_up: Tensor4,
    /// `R_{ijkl} = g(R(∂_i,∂_j)∂_l, ∂_k)`.
    pub riemann: Tensor4,
    pub ricci: Tensor2,
    /// Ricci operator `Q^i_j = g^{ik} Ric_kj` at `[i, j]`.
    pub ricci_operator: Tensor2,
    pub scalar: f64,
    /// `∇_k Ric_ij` at `[k, i, j]`.
    pub grad_ricci: Tensor3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalBundle {
    pub weyl: Tensor4,
    pub cotton: Tensor3,
    pub div_weyl: Tensor3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldCalculus {
    pub value: f64,
    pub df: Tensor1,
    pub grad: Tensor1,
    pub hess: Tensor2,
    pub lap: f64,
    pub gradnorm2: f64,
}

/// Jet-valued derivatives of a scalar field, for quantities needing one
/// more derivative than [`FieldCalculus`] carries.
#[derive(Debug, Clone)]
pub struct FieldJets {
    /// Order 3.
    pub f: Jet,
    /// `∂_i f`, order 2.
    pub df: Vec<Jet>,
    /// `Hess_ij`, order 1, row-major.
    pub hess: Vec<Jet>,
    /// `g^{ij} ∂_i f ∂_j f`, order 2.
    pub gradnorm2: Jet,
}

/// All jet-level geometric data of a metric at one point.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    n: usize,
    point: Vec<f64>,
    coords: Vec<Jet>,
    g: Vec<Jet>,
    g_inv: Vec<Jet>,
    gamma: Vec<Jet>,
    riemann_up: Vec<Jet>,
    ricci: Vec<Jet>,
    scalar: Jet,
    value: MetricValue,
}

fn matmul(n: usize, a: &[Jet], b: &[Jet]) -> Vec<Jet> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = &a[i * n] * &b[j];
            for k in 1..n {
                acc = &acc + &(&a[i * n + k] * &b[k * n + j]);
            }
            out.push(acc);
        }
    }
    out
}

fn truncate_all(jets: &[Jet], order: usize) -> Vec<Jet> {
    jets.iter().map(|j| j.truncate(order)).collect()
}

impl LocalGeometry {
    pub fn new(metric: &MetricField, point: &[f64]) -> Result<LocalGeometry, GeometryError> {
        let n = metric.dim();
        if point.len() != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                got: point.len(),
            });
        }
        // Chart construction bounds n by the jet variable limit.
        let coords = coordinate_jets(point, METRIC_ORDER).expect("chart dimension is supported");
        let mut g: Vec<Jet> = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                if j < i {
                    g.push(g[j * n + i].clone());
                } else {
                    g.push(metric.component(i, j).evaluate_with(&coords)?);
                }
            }
        }
        let value = MetricValue::from_matrix(Tensor2::from_fn(n, |[i, j]| g[i * n + j].value()))?;

        // (G0 + N)^-1 = Σ_k (−A0 N)^k A0 with A0 = G0^-1 and N nilpotent.
        let zero = Jet::constant(0.0, n, METRIC_ORDER).expect("valid shape");
        let a0: Vec<Jet> = (0..n * n)
            .map(|k| zero.add_scalar(value.g_inv[[k / n, k % n]]))
            .collect();
        let nil: Vec<Jet> = g.iter().map(|j| j.add_scalar(-j.value())).collect();
        let minus_a0_n: Vec<Jet> = matmul(n, &a0, &nil).iter().map(|j| -j).collect();
        let mut term = a0.clone();
        let mut g_inv = a0;
        for _ in 0..METRIC_ORDER {
            term = matmul(n, &minus_a0_n, &term);
            g_inv = g_inv.iter().zip(&term).map(|(a, b)| a + b).collect();
        }

        // ∂_l g_ij at [l, i, j], order 2.
        let mut dg = Vec::with_capacity(n * n * n);
        for l in 0..n {
            for gij in &g {
                dg.push(gij.derivative(l).expect("order >= 1"));
            }
        }
        let dg_at = |l: usize, i: usize, j: usize| &dg[(l * n + i) * n + j];
        let g_inv2 = truncate_all(&g_inv, 2);
        let mut gamma = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = zero.truncate(2);
                    for l in 0..n {
                        let bracket = &(dg_at(i, j, l) + dg_at(j, i, l)) - dg_at(l, i, j);
                        acc = &acc + &(&g_inv2[k * n + l] * &bracket);
                    }
                    gamma.push(acc.scale(0.5));
                }
            }
        }

        let gamma1 = truncate_all(&gamma, 1);
        let g_at = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
        let zero1 = zero.truncate(1);
        let mut riemann_up = vec![zero1.clone(); n * n * n * n];
        for l in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in i + 1..n {
                        let mut acc = &gamma[g_at(l, j, k)].derivative(i).expect("order 2")
                            - &gamma[g_at(l, i, k)].derivative(j).expect("order 2");
                        for m in 0..n {
                            acc = &acc + &(&gamma1[g_at(l, i, m)] * &gamma1[g_at(m, j, k)]);
                            acc = &acc - &(&gamma1[g_at(l, j, m)] * &gamma1[g_at(m, i, k)]);
                        }
                        riemann_up[((l * n + k) * n + j) * n + i] = -&acc;
                        riemann_up[((l * n + k) * n + i) * n + j] = acc;
                    }
                }
            }
        }

        let mut ricci = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = zero1.clone();
                for k in 0..n {
                    acc = &acc + &riemann_up[((k * n + j) * n + k) * n + i];
                }
                ricci.push(acc);
            }
        }
        let g_inv1 = truncate_all(&g_inv, 1);
        let mut scalar = zero1;
        for (a, b) in g_inv1.iter().zip(&ricci) {
            scalar = &scalar + &(a * b);
        }

        Ok(LocalGeometry {
            n,
            point: point.to_vec(),
            coords,
            g,
            g_inv,
            gamma,
            riemann_up,
            ricci,
            scalar,
            value,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn metric_value(&self) -> &MetricValue {
        &self.value
    }

    /// Coordinate jets at the point (order 3).
    pub fn coordinate_jets(&self) -> &[Jet] {
        &self.coords
    }

    pub fn evaluate(&self, e: &Expr) -> Result<Jet, GeometryError> {
        Ok(e.evaluate_with(&self.coords)?)
    }

    /// Metric component jets, order 3.
    pub fn g_jets(&self) -> &[Jet] {
        &self.g
    }

    pub fn g_inv_jets(&self) -> &[Jet] {
        &self.g_inv
    }

    /// Ricci component jets, order 1.
    pub fn ricci_jets(&self) -> &[Jet] {
        &self.ricci
    }

    /// Scalar curvature jet, order 1.
    pub fn scalar_jet(&self) -> &Jet {
        &self.scalar
    }

    fn g(&self, i: usize, j: usize) -> f64 {
        self.value.g[[i, j]]
    }

    fn gi(&self, i: usize, j: usize) -> f64 {
        self.value.g_inv[[i, j]]
    }

    fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.n + i) * self.n + j].value()
    }

    pub fn christoffel(&self) -> Tensor3 {
        Tensor3::from_fn(self.n, |[k, i, j]| self.gamma(k, i, j))
    }

    pub fn riemann_up(&self) -> Tensor4 {
        let n = self.n;
        Tensor4::from_fn(n, |[l, k, i, j]| self.riemann_up[((l * n + k) * n + i) * n + j].value())
    }

    pub fn riemann_lowered(&self) -> Tensor4 {
        let up = self.riemann_up();
        let n = self.n;
        Tensor4::from_fn(n, |[i, j, k, l]| {
            (0..n).map(|m| self.g(k, m) * up[[m, l, i, j]]).sum()
        })
    }

    pub fn ricci(&self) -> Tensor2 {
        Tensor2::from_fn(self.n, |[i, j]| self.ricci[i * self.n + j].value())
    }

    pub fn scalar(&self) -> f64 {
        self.scalar.value()
    }

    /// `∇_k T_ij` at `[k, i, j]` for a (0,2) tensor given by order-≥1 jets.
    pub fn covariant_derivative2(&self, t: &[Jet]) -> Tensor3 {
        let n = self.n;
        Tensor3::from_fn(n, |[k, i, j]| {
            let mut v = t[i * n + j].d(k);
            for m in 0..n {
                v -= self.gamma(m, k, i) * t[m * n + j].value();
                v -= self.gamma(m, k, j) * t[i * n + m].value();
            }
            v
        })
    }

    /// `(div T)_j = g^{ik} ∇_k T_ij`.
    pub fn divergence2(&self, t: &[Jet]) -> Tensor1 {
        let n = self.n;
        let cov = self.covariant_derivative2(t);
        Tensor1::from_fn(n, |[j]| {
            let mut s = 0.0;
            for i in 0..n {
                for k in 0..n {
                    s += self.gi(i, k) * cov[[k, i, j]];
                }
            }
            s
        })
    }

    pub fn grad_ricci(&self) -> Tensor3 {
        self.covariant_derivative2(&self.ricci)
    }

    pub fn curvature(&self) -> CurvatureBundle {
        let n = self.n;
        let ricci = self.ricci();
        CurvatureBundle {
            christoffel: self.christoffel(),
            riemann_up: self.riemann_up(),
            riemann: self.riemann_lowered(),
            ricci_operator: Tensor2::from_fn(n, |[i, j]| {
                (0..n).map(|k| self.gi(i, k) * ricci[[k, j]]).sum()
            }),
            ricci,
            scalar: self.scalar(),
            grad_ricci: self.grad_ricci(),
        }
    }

    /// Lowered Weyl tensor as order-1 jets.
    fn weyl_jets(&self) -> Result<Vec<Jet>, GeometryError> {
        let n = self.n;
        if n <= 2 {
            return Err(GeometryError::DimensionTooSmall { n });
        }
        let g1 = truncate_all(&self.g, 1);
        let nf = n as f64;
        let c_r = 1.0 / ((nf - 1.0) * (nf - 2.0));
        let c_ric = 1.0 / (nf - 2.0);
        let r = &self.scalar;
        let ric = &self.ricci;
        let mut out = Vec::with_capacity(n * n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut rl = &g1[k * n] * &self.riemann_up[((l * n) + i) * n + j];
                        for m in 1..n {
                            rl = &rl + &(&g1[k * n + m] * &self.riemann_up[((m * n + l) * n + i) * n + j]);
                        }
                        let gg = &(&g1[i * n + k] * &g1[j * n + l]) - &(&g1[j * n + k] * &g1[i * n + l]);
                        let rg = &(&(&ric[j * n + k] * &g1[i * n + l]) - &(&ric[i * n + k] * &g1[j * n + l]))
                            + &(&(&g1[j * n + k] * &ric[i * n + l]) - &(&g1[i * n + k] * &ric[j * n + l]));
                        let w = &(&rl + &(&(r * &gg) * c_r)) + &(&rg * c_ric);
                        out.push(w);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn weyl(&self) -> Result<Tensor4, GeometryError> {
        let w = self.weyl_jets()?;
        let n = self.n;
        Ok(Tensor4::from_fn(n, |[i, j, k, l]| w[((i * n + j) * n + k) * n + l].value()))
    }

    pub fn cotton(&self) -> Tensor3 {
        let n = self.n;
        let grad = self.grad_ricci();
        let c = 1.0 / (2.0 * (n as f64 - 1.0));
        Tensor3::from_fn(n, |[i, j, k]| {
            grad[[i, j, k]] - grad[[j, i, k]]
                - c * (self.g(j, k) * self.scalar.d(i) - self.g(i, k) * self.scalar.d(j))
        })
    }

    pub fn div_weyl(&self) -> Result<Tensor3, GeometryError> {
        let w = self.weyl_jets()?;
        let n = self.n;
        let at = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
        Ok(Tensor3::from_fn(n, |[i, j, k]| {
            let mut s = 0.0;
            for l in 0..n {
                for m in 0..n {
                    let gi = self.gi(l, m);
                    if gi == 0.0 {
                        continue;
                    }
                    let mut cov = w[at(i, j, k, m)].d(l);
                    for a in 0..n {
                        cov -= self.gamma(a, l, i) * w[at(a, j, k, m)].value()
                            + self.gamma(a, l, j) * w[at(i, a, k, m)].value()
                            + self.gamma(a, l, k) * w[at(i, j, a, m)].value()
                            + self.gamma(a, l, m) * w[at(i, j, k, a)].value();
                    }
                    s += gi * cov;
                }
            }
            s
        }))
    }

    pub fn conformal(&self) -> Result<ConformalBundle, GeometryError> {
        Ok(ConformalBundle {
            weyl: self.weyl()?,
            cotton: self.cotton(),
            div_weyl: self.div_weyl()?,
        })
    }

    /// Jets of `f`, `df`, `Hess f` and `||∇f||²` for an expression.
    pub fn field_jets_of(&self, e: &Expr) -> Result<FieldJets, GeometryError> {
        let n = self.n;
        let f = self.evaluate(e)?;
        let df: Vec<Jet> = (0..n).map(|i| f.derivative(i).expect("order 3")).collect();
        let gamma1 = truncate_all(&self.gamma, 1);
        let df1 = truncate_all(&df, 1);
        let mut hess = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut h = df[j].derivative(i).expect("order 2");
                for k in 0..n {
                    h = &h - &(&gamma1[(k * n + i) * n + j] * &df1[k]);
                }
                hess.push(h);
            }
        }
        let g_inv2 = truncate_all(&self.g_inv, 2);
        let mut gradnorm2 = Jet::constant(0.0, n, 2).expect("valid shape");
        for i in 0..n {
            for j in 0..n {
                gradnorm2 = &gradnorm2 + &(&g_inv2[i * n + j] * &(&df[i] * &df[j]));
            }
        }
        Ok(FieldJets {
            f,
            df,
            hess,
            gradnorm2,
        })
    }

    pub fn field_jets(&self, f: &ScalarField) -> Result<FieldJets, GeometryError> {
        self.field_jets_of(f.expr())
    }

    pub fn field_of(&self, e: &Expr) -> Result<FieldCalculus, GeometryError> {
        let jets = self.field_jets_of(e)?;
        Ok(self.calculus_from(&jets))
    }

    pub fn field(&self, f: &ScalarField) -> Result<FieldCalculus, GeometryError> {
        self.field_of(f.expr())
    }

    pub fn calculus_from(&self, jets: &FieldJets) -> FieldCalculus {
        let n = self.n;
        let df = Tensor1::from_fn(n, |[i]| jets.df[i].value());
        let grad = Tensor1::from_fn(n, |[i]| (0..n).map(|j| self.gi(i, j) * df[[j]]).sum());
        let hess = Tensor2::from_fn(n, |[i, j]| jets.hess[i * n + j].value());
        let mut lap = 0.0;
        for i in 0..n {
            for j in 0..n {
                lap += self.gi(i, j) * hess[[i, j]];
            }
        }
        FieldCalculus {
            value: jets.f.value(),
            gradnorm2: jets.gradnorm2.value(),
            df,
            grad,
            hess,
            lap,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Chart;

    fn chart(names: &[&str]) -> Chart {
        Chart::new(names.iter().copied()).unwrap()
    }

    fn walker(b: &str) -> MetricField {
        let rows = vec![
            vec![b, "0", "1", "0"],
            vec!["0", "0", "0", "1"],
            vec!["1", "0", "0", "0"],
            vec!["0", "1", "0", "0"],
        ];
        MetricField::parse(chart(&["t", "x", "y", "z"]), &rows).unwrap()
    }

    #[test]
    fn polar_christoffels() {
        let m = MetricField::diagonal(chart(&["r", "th"]), &["1", "r^2"]).unwrap();
        let g = LocalGeometry::new(&m, &[2.0, 0.3]).unwrap().christoffel();
        assert!((g[[0, 1, 1]] + 2.0).abs() < 1e-14);
        assert!((g[[1, 0, 1]] - 0.5).abs() < 1e-14);
        assert!((g[[1, 1, 0]] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn metric_compatibility() {
        let m = walker("x*y^2*z + sin(z)");
        let geo = LocalGeometry::new(&m, &[0.3, -0.2, 0.7, 1.1]).unwrap();
        let cov = geo.covariant_derivative2(geo.g_jets());
        assert!(cov.max_abs() < 1e-12);
    }

    #[test]
    fn sphere_scalar_curvature() {
        let m = MetricField::diagonal(chart(&["th", "ph"]), &["1", "sin(th)^2"]).unwrap();
        let geo = LocalGeometry::new(&m, &[1.0, 0.4]).unwrap();
        assert!((geo.scalar() - 2.0).abs() < 1e-12);
        let (d, _) = geo.ricci().max_diff(&geo.metric_value().g);
        assert!(d < 1e-12);
    }

    #[test]
    fn walker_curvature_component() {
        let m = walker("x^2*y^3 + y^2*z - t*y^4");
        let p = [0.4, -0.3, 0.8, 0.25];
        let up = LocalGeometry::new(&m, &p).unwrap().riemann_up();
        let (t, x, y, z) = (p[0], p[1], p[2], p[3]);
        let b_yy = 6.0 * x * x * y + 2.0 * z - 12.0 * t * y * y;
        for l in 0..4 {
            let expected = if l == 2 { 0.5 * b_yy } else { 0.0 };
            assert!((up[[l, 2, 2, 0]] - expected).abs() < 1e-10, "component {l}");
        }
    }

    #[test]
    fn flat_sphere_field_calculus() {
        let m = MetricField::diagonal(chart(&["a", "b", "c", "d"]), &["1", "1", "1", "1"]).unwrap();
        let geo = LocalGeometry::new(&m, &[0.1, 0.2, -0.3, 0.5]).unwrap();
        let f = geo.field_of(&m.chart().parse("a^2+b^2+c^2+d^2").unwrap()).unwrap();
        assert!((f.lap - 8.0).abs() < 1e-12);
        let (d, _) = f.hess.max_diff(&geo.metric_value().g.map(|v| 2.0 * v));
        assert!(d < 1e-12);

        let s = MetricField::diagonal(chart(&["th", "ph"]), &["1", "sin(th)^2"]).unwrap();
        let geo = LocalGeometry::new(&s, &[0.7, 0.1]).unwrap();
        let f = geo.field_of(&s.chart().parse("cos(th)").unwrap()).unwrap();
        assert!((f.lap + 2.0 * 0.7f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn walker_affine_gradient_is_null() {
        let rows = vec![
            vec!["0", "0", "1", "0"],
            vec!["0", "0", "0", "1"],
            vec!["1", "0", "0", "0"],
            vec!["0", "1", "0", "x*y^2*z + sin(z)"],
        ];
        let m = MetricField::parse(chart(&["t", "x", "y", "z"]), &rows).unwrap();
        let geo = LocalGeometry::new(&m, &[0.3, -0.2, 0.7, 1.1]).unwrap();
        let f = geo.field_of(&m.chart().parse("2*y + 3").unwrap()).unwrap();
        assert!(f.gradnorm2.abs() < 1e-14);
    }

    #[test]
    fn conformally_flat_weyl_vanishes() {
        let eta = MetricField::diagonal(chart(&["a", "b", "c", "d"]), &["-1", "-1", "1", "1"]).unwrap();
        let factor = eta.chart().parse("exp(0.2*(a + b^2))").unwrap();
        let m = eta.scaled(&factor);
        let geo = LocalGeometry::new(&m, &[0.3, -0.4, 0.2, 0.9]).unwrap();
        assert!(geo.weyl().unwrap().max_abs() < 1e-9);
        assert!(geo.riemann_lowered().max_abs() > 1e-3);
    }

    #[test]
    fn three_dimensional_weyl_is_zero() {
        let m = MetricField::diagonal(chart(&["x", "y", "z"]), &["1", "exp(x*y)", "1 + z^2*x^2"]).unwrap();
        let geo = LocalGeometry::new(&m, &[0.3, 0.5, -0.7]).unwrap();
        assert!(geo.weyl().unwrap().max_abs() < 1e-10);
        let two = MetricField::diagonal(chart(&["x", "y"]), &["1", "1"]).unwrap();
        assert_eq!(
            LocalGeometry::new(&two, &[0.0, 0.0]).unwrap().weyl(),
            Err(GeometryError::DimensionTooSmall { n: 2 })
        );
    }

    #[test]
    fn product_of_spheres_cotton_vanishes() {
        let m = MetricField::diagonal(
            chart(&["a", "b", "c", "d"]),
            &["1", "sin(a)^2", "1", "sin(c)^2"],
        )
        .unwrap();
        let geo = LocalGeometry::new(&m, &[1.1, 0.2, 0.8, -0.5]).unwrap();
        assert!(geo.cotton().max_abs() < 1e-9);
        assert!(geo.ricci().max_abs() > 0.5);
    }

    #[test]
    fn cotton_skew() {
        let m = walker("x*y^2*z + sin(z)*t");
        let c = LocalGeometry::new(&m, &[0.3, -0.2, 0.7, 1.1]).unwrap().cotton();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    assert_eq!(c[[i, j, k]], -c[[j, i, k]]);
                }
            }
        }
    }

    #[test]
    fn oracle_ratio() {
        let m = walker("x*y^2*z");
        let geo = LocalGeometry::new(&m, &[0.3, -0.6, 0.7, 1.1]).unwrap();
        let div = geo.div_weyl().unwrap();
        let c = geo.cotton();
        let ratio = crate::geometry::least_squares_ratio(div.data(), c.data()).unwrap();
        assert!((ratio - crate::geometry::DIV_WEYL_COTTON_RATIO).abs() < 1e-10);
        let (d, _) = div.max_diff(&c.map(|v| ratio * v));
        assert!(d < 1e-10);
    }
}

//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] holds every Taylor coefficient of total degree `<= order` of a
//! function of `n_vars` variables, expanded about a fixed point. Coefficients
//! are stored in *Taylor normalization*: the entry for multi-index `a` is
//! `∂^a f / a!`. [`Jet::partial`] converts back to true partial derivatives.
//!
//! Storage is dense and graded-lexicographic: all multi-indices of degree 0,
//! then degree 1, and so on; within one degree, multi-indices are sorted in
//! descending lexicographic order, so for two variables and order 2 the
//! layout is `(0,0) (1,0) (0,1) (2,0) (1,1) (0,2)`. Because the ordering is
//! graded, the layout of a lower order is a prefix of the layout of a higher
//! one, which makes truncation a slice.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use thiserror::Error;

pub const MAX_VARS: usize = 6;
pub const MAX_ORDER: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("variable index {index} out of range for {n_vars} variables")]
    IndexOutOfRange { index: usize, n_vars: usize },
    #[error("unsupported jet shape: {n_vars} variables, order {order}")]
    UnsupportedShape { n_vars: usize, order: usize },
    #[error("jet shape mismatch: ({0}, {1}) vs ({2}, {3})")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("division by a jet with zero value")]
    DivisionByZero,
    #[error("{func} is undefined at {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("multi-index of total degree {degree} exceeds jet order {order}")]
    OrderExceeded { degree: usize, order: usize },
}

/// Precomputed index tables for one `(n_vars, order)` pair.
#[derive(Debug)]
pub struct Layout {
    n_vars: usize,
    order: usize,
    indices: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, usize>,
    /// Offsets where each degree begins, plus the total length.
    degree_start: Vec<usize>,
    /// `(i, j, k)`: coefficient `i` times coefficient `j` contributes to `k`.
    products: Vec<(u16, u16, u16)>,
    /// Per variable: `(src, dst, factor)` for differentiation into the
    /// layout of `order - 1`.
    derivatives: Vec<Vec<(u16, u16, f64)>>,
}

impl Layout {
    pub fn get(n_vars: usize, order: usize) -> Result<&'static Layout, JetError> {
        static CACHE: OnceLock<Vec<OnceLock<Layout>>> = OnceLock::new();
        if n_vars == 0 || n_vars > MAX_VARS || order > MAX_ORDER {
            return Err(JetError::UnsupportedShape { n_vars, order });
        }
        let cache = CACHE.get_or_init(|| {
            (0..MAX_VARS * (MAX_ORDER + 1))
                .map(|_| OnceLock::new())
                .collect()
        });
        let slot = &cache[(n_vars - 1) * (MAX_ORDER + 1) + order];
        Ok(slot.get_or_init(|| Layout::build(n_vars, order)))
    }

    fn build(n_vars: usize, order: usize) -> Layout {
        let mut indices = Vec::new();
        let mut degree_start = Vec::new();
        for degree in 0..=order {
            degree_start.push(indices.len());
            let mut current = vec![0u8; n_vars];
            push_degree(&mut indices, &mut current, 0, degree);
        }
        degree_start.push(indices.len());
        let lookup: HashMap<Vec<u8>, usize> = indices
            .iter()
            .enumerate()
            .map(|(k, a)| (a.clone(), k))
            .collect();

        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            let da: usize = a.iter().map(|&v| v as usize).sum();
            for (j, b) in indices.iter().enumerate() {
                let db: usize = b.iter().map(|&v| v as usize).sum();
                if da + db > order {
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i as u16, j as u16, lookup[&sum] as u16));
            }
        }

        let mut derivatives = vec![Vec::new(); n_vars];
        if order > 0 {
            for (v, table) in derivatives.iter_mut().enumerate() {
                for (dst, a) in indices[..degree_start[order]].iter().enumerate() {
                    let mut raised = a.clone();
                    raised[v] += 1;
                    let src = lookup[&raised];
                    table.push((src as u16, dst as u16, raised[v] as f64));
                }
            }
        }

        Layout {
            n_vars,
            order,
            indices,
            lookup,
            degree_start,
            products,
            derivatives,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Multi-indices in storage order.
    pub fn multi_indices(&self) -> &[Vec<u8>] {
        &self.indices
    }

    pub fn position(&self, multi_index: &[u8]) -> Option<usize> {
        self.lookup.get(multi_index).copied()
    }

    fn prefix_len(&self, order: usize) -> usize {
        self.degree_start[order + 1]
    }
}

fn push_degree(out: &mut Vec<Vec<u8>>, current: &mut [u8], var: usize, remaining: usize) {
    if var + 1 == current.len() {
        current[var] = remaining as u8;
        out.push(current.to_vec());
        current[var] = 0;
        return;
    }
    for take in (0..=remaining).rev() {
        current[var] = take as u8;
        push_degree(out, current, var + 1, remaining - take);
    }
    current[var] = 0;
}

/// Binomial coefficient, used for layout sizes.
pub fn coefficient_count(n_vars: usize, order: usize) -> usize {
    let mut c = 1usize;
    for k in 1..=order {
        c = c * (n_vars + k) / k;
    }
    c
}

#[derive(Clone)]
pub struct Jet {
    layout: &'static Layout,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("n_vars", &self.layout.n_vars)
            .field("order", &self.layout.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.same_shape(other) && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn constant(value: f64, n_vars: usize, order: usize) -> Result<Jet, JetError> {
        let layout = Layout::get(n_vars, order)?;
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Ok(Jet { layout, coeffs })
    }

    /// The coordinate function `x_index` expanded about `value`.
    pub fn variable(index: usize, value: f64, n_vars: usize, order: usize) -> Result<Jet, JetError> {
        if index >= n_vars {
            return Err(JetError::IndexOutOfRange { index, n_vars });
        }
        let mut jet = Jet::constant(value, n_vars, order)?;
        if order > 0 {
            // Degree-1 entries follow the constant term in variable order.
            jet.coeffs[1 + index] = 1.0;
        }
        Ok(jet)
    }

    pub fn from_coeffs(n_vars: usize, order: usize, coeffs: Vec<f64>) -> Result<Jet, JetError> {
        let layout = Layout::get(n_vars, order)?;
        if coeffs.len() != layout.len() {
            return Err(JetError::ShapeMismatch(n_vars, order, n_vars, coeffs.len()));
        }
        Ok(Jet { layout, coeffs })
    }

    fn zero_like(&self) -> Jet {
        Jet {
            layout: self.layout,
            coeffs: vec![0.0; self.coeffs.len()],
        }
    }

    fn scalar_like(&self, value: f64) -> Jet {
        let mut out = self.zero_like();
        out.coeffs[0] = value;
        out
    }

    pub fn n_vars(&self) -> usize {
        self.layout.n_vars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn layout(&self) -> &'static Layout {
        self.layout
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor-normalized coefficients in storage order.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn same_shape(&self, other: &Jet) -> bool {
        std::ptr::eq(self.layout, other.layout)
    }

    fn check_shape(&self, other: &Jet) -> Result<(), JetError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(JetError::ShapeMismatch(
                self.n_vars(),
                self.order(),
                other.n_vars(),
                other.order(),
            ))
        }
    }

    /// Taylor coefficient for `multi_index` (no factorial scaling).
    pub fn coefficient(&self, multi_index: &[u8]) -> Result<f64, JetError> {
        let degree: usize = multi_index.iter().map(|&v| v as usize).sum();
        if multi_index.len() != self.n_vars() {
            return Err(JetError::IndexOutOfRange {
                index: multi_index.len(),
                n_vars: self.n_vars(),
            });
        }
        if degree > self.order() {
            return Err(JetError::OrderExceeded {
                degree,
                order: self.order(),
            });
        }
        Ok(self.coeffs[self.layout.position(multi_index).expect("degree checked")])
    }

    /// True partial derivative `∂^a f` at the expansion point.
    pub fn partial(&self, multi_index: &[u8]) -> Result<f64, JetError> {
        let c = self.coefficient(multi_index)?;
        let factorial: f64 = multi_index.iter().map(|&k| factorial(k as usize)).product();
        Ok(c * factorial)
    }

    /// First partial `∂f/∂x_i`.
    pub fn d(&self, i: usize) -> f64 {
        self.coeffs[1 + i]
    }

    /// Second partial `∂²f/∂x_i∂x_j`.
    pub fn dd(&self, i: usize, j: usize) -> f64 {
        let mut a = vec![0u8; self.n_vars()];
        a[i] += 1;
        a[j] += 1;
        self.partial(&a).expect("jet order must be at least 2")
    }

    /// The jet of `∂f/∂x_var`, one order lower.
    pub fn derivative(&self, var: usize) -> Result<Jet, JetError> {
        if var >= self.n_vars() {
            return Err(JetError::IndexOutOfRange {
                index: var,
                n_vars: self.n_vars(),
            });
        }
        if self.order() == 0 {
            return Err(JetError::OrderExceeded { degree: 1, order: 0 });
        }
        let layout = Layout::get(self.n_vars(), self.order() - 1)?;
        let mut coeffs = vec![0.0; layout.len()];
        for &(src, dst, factor) in &self.layout.derivatives[var] {
            coeffs[dst as usize] = factor * self.coeffs[src as usize];
        }
        Ok(Jet { layout, coeffs })
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let layout = Layout::get(self.n_vars(), order).expect("smaller order is valid");
        Jet {
            layout,
            coeffs: self.coeffs[..self.layout.prefix_len(order)].to_vec(),
        }
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_shape(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_shape(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    pub fn try_mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_shape(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_shape(other)?;
        Ok(self.mul_unchecked(&other.recip()?))
    }

    fn zip(&self, other: &Jet, op: impl Fn(f64, f64) -> f64) -> Jet {
        Jet {
            layout: self.layout,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }

    fn mul_unchecked(&self, other: &Jet) -> Jet {
        let mut out = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &self.layout.products {
            out[k as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
        }
        Jet {
            layout: self.layout,
            coeffs: out,
        }
    }

    pub fn scale(&self, factor: f64) -> Jet {
        Jet {
            layout: self.layout,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add_scalar(&self, value: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    /// Composes a univariate function with this jet, given the function's
    /// derivatives `derivs[k] = F^(k)(value)` for `k = 0..=order`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.order();
        debug_assert!(derivs.len() > order);
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut acc = self.scalar_like(derivs[order] / factorial(order));
        for k in (0..order).rev() {
            acc = acc.mul_unchecked(&delta);
            acc.coeffs[0] += derivs[k] / factorial(k);
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let x = self.value();
        if x == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        let r = 1.0 / x;
        Ok(self.compose(&[r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r]))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&[e; MAX_ORDER + 1])
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(JetError::Domain { func: "ln", value: x });
        }
        let r = 1.0 / x;
        Ok(self.compose(&[x.ln(), r, -r * r, 2.0 * r * r * r]))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(JetError::Domain { func: "sqrt", value: x });
        }
        let s = x.sqrt();
        Ok(self.compose(&[
            s,
            0.5 / s,
            -0.25 / (s * x),
            0.375 / (s * x * x),
        ]))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c, s])
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose(&[s, c, s, c])
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose(&[c, s, c, s])
    }

    pub fn tanh(&self) -> Jet {
        let t = self.value().tanh();
        let d1 = 1.0 - t * t;
        self.compose(&[t, d1, -2.0 * t * d1, d1 * (6.0 * t * t - 2.0)])
    }

    /// `self^p` for a real constant `p`. Integer exponents work for any base
    /// (negative ones need a non-zero value); other exponents need a
    /// positive value.
    pub fn powf(&self, p: f64) -> Result<Jet, JetError> {
        if p.fract() == 0.0 && p.abs() <= 64.0 {
            let k = p.abs() as u32;
            let base = if p < 0.0 { self.recip()? } else { self.clone() };
            return Ok(base.powi(k));
        }
        let x = self.value();
        if !(x > 0.0) {
            return Err(JetError::Domain { func: "pow", value: x });
        }
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (k, d) in derivs.iter_mut().enumerate() {
            *d = coef * x.powf(p - k as f64);
            coef *= p - k as f64;
        }
        Ok(self.compose(&derivs))
    }

    pub fn powi(&self, k: u32) -> Jet {
        let mut result = self.scalar_like(1.0);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul_unchecked(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        result
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

// Operator forms panic on shape mismatch; use the `try_*` methods where the
// shapes are not known to agree.
impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.try_add(rhs).expect("jet shape mismatch")
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.try_sub(rhs).expect("jet shape mismatch")
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.try_mul(rhs).expect("jet shape mismatch")
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn layout_sizes_and_order() {
        for n in 1..=MAX_VARS {
            for k in 0..=MAX_ORDER {
                assert_eq!(Layout::get(n, k).unwrap().len(), coefficient_count(n, k));
            }
        }
        assert_eq!(coefficient_count(6, 3), 84);
        let l = Layout::get(2, 2).unwrap();
        let expect: Vec<Vec<u8>> = vec![
            vec![0, 0],
            vec![1, 0],
            vec![0, 1],
            vec![2, 0],
            vec![1, 1],
            vec![0, 2],
        ];
        assert_eq!(l.multi_indices(), &expect[..]);
        assert!(Layout::get(7, 1).is_err());
        assert!(Layout::get(2, 4).is_err());
    }

    #[test]
    fn variable_jets() {
        let x = Jet::variable(0, 2.0, 2, 2).unwrap();
        assert_eq!(x.coeffs(), &[2.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let y = Jet::variable(1, 0.0, 2, 2).unwrap();
        assert_eq!(y.coeffs(), &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(
            Jet::variable(3, 1.0, 2, 2),
            Err(JetError::IndexOutOfRange { index: 3, n_vars: 2 })
        );
    }

    #[test]
    fn square_normalization() {
        let x = Jet::variable(0, 3.0, 1, 2).unwrap();
        let sq = &x * &x;
        assert_eq!(sq.coeffs(), &[9.0, 6.0, 1.0]);
        assert_eq!(sq.partial(&[2]).unwrap(), 2.0);
        assert_eq!(sq.partial(&[0]).unwrap(), 9.0);
    }

    #[test]
    fn exp_series() {
        let x = Jet::variable(0, 0.0, 1, 3).unwrap();
        let e = x.exp();
        for (c, want) in e.coeffs().iter().zip([1.0, 1.0, 0.5, 1.0 / 6.0]) {
            assert!(close(*c, want, 1e-15));
        }
    }

    #[test]
    fn trilinear_partial() {
        let x = Jet::variable(0, 1.0, 3, 3).unwrap();
        let y = Jet::variable(1, 2.0, 3, 3).unwrap();
        let z = Jet::variable(2, 3.0, 3, 3).unwrap();
        let p = &(&x * &y) * &z;
        assert_eq!(p.partial(&[1, 1, 1]).unwrap(), 1.0);
        assert_eq!(p.partial(&[0, 0, 0]).unwrap(), 6.0);
        assert_eq!(
            p.partial(&[2, 1, 1]),
            Err(JetError::OrderExceeded { degree: 4, order: 3 })
        );
    }

    #[test]
    fn error_paths() {
        let x = Jet::variable(0, 0.0, 2, 2).unwrap();
        let y = Jet::variable(0, -1.0, 2, 2).unwrap();
        assert_eq!(x.recip(), Err(JetError::DivisionByZero));
        assert!(matches!(y.ln(), Err(JetError::Domain { func: "ln", .. })));
        assert!(matches!(y.sqrt(), Err(JetError::Domain { func: "sqrt", .. })));
        assert!(matches!(y.powf(0.5), Err(JetError::Domain { .. })));
        let z = Jet::variable(0, 1.0, 3, 2).unwrap();
        assert!(matches!(x.try_add(&z), Err(JetError::ShapeMismatch(..))));
        // Integer powers of negative values are fine.
        let c = y.powf(3.0).unwrap();
        assert_eq!(c.value(), -1.0);
        assert_eq!(c.d(0), 3.0);
    }

    #[test]
    fn derivative_and_truncate() {
        // f = x^2 y at (2, 3): ∂x f = 2xy, jet of order 1 at the same point.
        let x = Jet::variable(0, 2.0, 2, 3).unwrap();
        let y = Jet::variable(1, 3.0, 2, 3).unwrap();
        let f = &(&x * &x) * &y;
        let fx = f.derivative(0).unwrap();
        assert_eq!(fx.order(), 2);
        assert_eq!(fx.value(), 12.0);
        assert_eq!(fx.d(0), 6.0);
        assert_eq!(fx.d(1), 4.0);
        assert_eq!(fx.dd(0, 1), 2.0);
        let t = f.truncate(1);
        assert_eq!(t.coeffs(), &[12.0, 12.0, 4.0]);
    }

    #[test]
    fn sin_third_derivative_vs_richardson() {
        let x0 = 0.7;
        let jet = Jet::variable(0, x0, 1, 3).unwrap().scale(2.0).sin();
        let d3 = jet.partial(&[3]).unwrap();
        let f = |x: f64| (2.0 * x).sin();
        let central = |h: f64| {
            (f(x0 + 2.0 * h) - 2.0 * f(x0 + h) + 2.0 * f(x0 - h) - f(x0 - 2.0 * h)) / (2.0 * h * h * h)
        };
        let h = 1e-2;
        let rich = (4.0 * central(h / 2.0) - central(h)) / 3.0;
        assert!(close(d3, rich, 1e-6), "{d3} vs {rich}");
        assert!(close(d3, -8.0 * (1.4f64).cos(), 1e-14));
    }

    #[test]
    fn hyperbolic_and_tanh() {
        let x = Jet::variable(0, 0.3, 1, 3).unwrap();
        let t = x.tanh();
        let s = x.sinh();
        let c = x.cosh();
        let q = s.try_div(&c).unwrap();
        for (a, b) in t.coeffs().iter().zip(q.coeffs()) {
            assert!(close(*a, *b, 1e-14));
        }
    }
}

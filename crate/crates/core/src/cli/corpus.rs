//! Random expressions paired with an evaluator that does not go through the
//! parser or the jet engine, and finite-difference reference derivatives.

use rand::{Rng, RngExt};

/// Expression tree whose guarded operations stay smooth on all of `ℝⁿ`.
/// `Div`, `Sqrt` and `Ln` render as `a/(1.5+b^2)`, `sqrt(1.5+a^2)` and
/// `ln(2+a^2)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Tree {
    Var(usize),
    Const(f64),
    Add(Box<Tree>, Box<Tree>),
    Sub(Box<Tree>, Box<Tree>),
    Mul(Box<Tree>, Box<Tree>),
    Div(Box<Tree>, Box<Tree>),
    Sin(Box<Tree>),
    Cos(Box<Tree>),
    Exp(Box<Tree>),
    Tanh(Box<Tree>),
    Sqrt(Box<Tree>),
    Ln(Box<Tree>),
    Square(Box<Tree>),
    Cube(Box<Tree>),
}

impl Tree {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, vars: usize, depth: usize) -> Tree {
        if depth == 0 || rng.random_range(0..8) == 0 {
            return if rng.random_range(0..3) == 0 {
                Tree::Const(rng.random_range(-8i32..=8) as f64 / 4.0)
            } else {
                Tree::Var(rng.random_range(0..vars))
            };
        }
        let op = rng.random_range(0..13);
        let mut sub = || Box::new(Tree::random(rng, vars, depth - 1));
        match op {
            0 => Tree::Add(sub(), sub()),
            1 => Tree::Sub(sub(), sub()),
            2 | 3 => Tree::Mul(sub(), sub()),
            4 => Tree::Div(sub(), sub()),
            5 => Tree::Sin(sub()),
            6 => Tree::Cos(sub()),
            7 => Tree::Exp(sub()),
            8 => Tree::Tanh(sub()),
            9 => Tree::Sqrt(sub()),
            10 => Tree::Ln(sub()),
            11 => Tree::Square(sub()),
            _ => Tree::Cube(sub()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Tree::Var(i) => x[*i],
            Tree::Const(c) => *c,
            Tree::Add(a, b) => a.eval(x) + b.eval(x),
            Tree::Sub(a, b) => a.eval(x) - b.eval(x),
            Tree::Mul(a, b) => a.eval(x) * b.eval(x),
            Tree::Div(a, b) => {
                let d = b.eval(x);
                a.eval(x) / (1.5 + d * d)
            }
            Tree::Sin(a) => a.eval(x).sin(),
            Tree::Cos(a) => a.eval(x).cos(),
            Tree::Exp(a) => (0.5 * a.eval(x)).exp(),
            Tree::Tanh(a) => a.eval(x).tanh(),
            Tree::Sqrt(a) => {
                let v = a.eval(x);
                (1.5 + v * v).sqrt()
            }
            Tree::Ln(a) => {
                let v = a.eval(x);
                (2.0 + v * v).ln()
            }
            Tree::Square(a) => a.eval(x).powi(2),
            Tree::Cube(a) => a.eval(x).powi(3),
        }
    }

    pub fn render(&self, names: &[&str]) -> String {
        let r = |t: &Tree| t.render(names);
        match self {
            Tree::Var(i) => names[*i].to_string(),
            Tree::Const(c) => format!("({c:?})"),
            Tree::Add(a, b) => format!("({} + {})", r(a), r(b)),
            Tree::Sub(a, b) => format!("({} - {})", r(a), r(b)),
            Tree::Mul(a, b) => format!("({} * {})", r(a), r(b)),
            Tree::Div(a, b) => format!("({} / (1.5 + ({})^2))", r(a), r(b)),
            Tree::Sin(a) => format!("sin({})", r(a)),
            Tree::Cos(a) => format!("cos({})", r(a)),
            Tree::Exp(a) => format!("exp(0.5 * {})", r(a)),
            Tree::Tanh(a) => format!("tanh({})", r(a)),
            Tree::Sqrt(a) => format!("sqrt(1.5 + ({})^2)", r(a)),
            Tree::Ln(a) => format!("ln(2 + ({})^2)", r(a)),
            Tree::Square(a) => format!("({})^2", r(a)),
            Tree::Cube(a) => format!("({})^3", r(a)),
        }
    }
}

/// Central stencil for `d^r/dx^r` with unit step: `(offset, weight)`.
fn stencil(r: u8) -> &'static [(i32, f64)] {
    match r {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        _ => panic!("stencils go up to third order"),
    }
}

/// Tensor-product central difference of `∂^alpha f` with step `h`.
fn central(f: &dyn Fn(&[f64]) -> f64, x: &[f64], alpha: &[u8], h: f64) -> f64 {
    let mut terms: Vec<(Vec<f64>, f64)> = vec![(x.to_vec(), 1.0)];
    for (i, &r) in alpha.iter().enumerate() {
        let mut next = Vec::new();
        for (p, w) in &terms {
            for &(off, sw) in stencil(r) {
                let mut q = p.clone();
                q[i] += off as f64 * h;
                next.push((q, w * sw));
            }
        }
        terms = next;
    }
    let degree: i32 = alpha.iter().map(|&r| r as i32).sum();
    terms.iter().map(|(p, w)| w * f(p)).sum::<f64>() / h.powi(degree)
}

/// Two Richardson steps on the `h²`-series of the central difference.
pub fn richardson(f: &dyn Fn(&[f64]) -> f64, x: &[f64], alpha: &[u8], h: f64) -> f64 {
    let d: Vec<f64> = (0..3).map(|k| central(f, x, alpha, h / 2f64.powi(k))).collect();
    let r1 = [(4.0 * d[1] - d[0]) / 3.0, (4.0 * d[2] - d[1]) / 3.0];
    (16.0 * r1[1] - r1[0]) / 15.0
}

/// Multi-indices of total degree `1..=order` in `n` variables.
pub fn multi_indices(n: usize, order: u8) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; n];
    fn rec(i: usize, left: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if i == cur.len() {
            if cur.iter().any(|&v| v > 0) {
                out.push(cur.clone());
            }
            return;
        }
        for k in 0..=left {
            cur[i] = k;
            rec(i + 1, left - k, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, order, &mut cur, &mut out);
    out
}

/// Polynomial with exactly computable partial derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub terms: Vec<(f64, Vec<u8>)>,
}

impl Poly {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, vars: usize, degree: u8, terms: usize) -> Poly {
        let terms = (0..terms)
            .map(|_| {
                let c = rng.random_range(-5i32..=5) as f64;
                let mut e = vec![0u8; vars];
                for _ in 0..rng.random_range(0..=degree) {
                    e[rng.random_range(0..vars)] += 1;
                }
                (c, e)
            })
            .collect();
        Poly { terms }
    }

    pub fn partial(&self, alpha: &[u8]) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter_map(|(c, e)| {
                let mut c = *c;
                let mut e = e.clone();
                for (i, &a) in alpha.iter().enumerate() {
                    for _ in 0..a {
                        if e[i] == 0 {
                            return None;
                        }
                        c *= e[i] as f64;
                        e[i] -= 1;
                    }
                }
                Some((c, e))
            })
            .collect();
        Poly { terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(x).map(|(&k, v)| v.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn render(&self, names: &[&str]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(c, e)| {
                let mut s = format!("({c:?})");
                for (i, &k) in e.iter().enumerate() {
                    if k > 0 {
                        s.push_str(&format!(" * {}^{k}", names[i]));
                    }
                }
                s
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_on_known_function() {
        let f = |x: &[f64]| (x[0] * x[1]).sin() + x[0].exp();
        let x = [0.3f64, -0.7];
        // ∂y of −y² sin(xy)
        let exact = -2.0 * x[1] * (x[0] * x[1]).sin() - x[0] * x[1] * x[1] * (x[0] * x[1]).cos();
        let approx = richardson(&f, &x, &[2, 1], 0.05);
        assert!((approx - exact).abs() < 1e-8, "{approx} vs {exact}");
    }

    #[test]
    fn index_count() {
        // 3 + 6 + 10 partials of order ≤ 3 in three variables
        assert_eq!(multi_indices(3, 3).len(), 19);
    }

    #[test]
    fn poly_partial() {
        let p = Poly {
            terms: vec![(3.0, vec![2, 1]), (1.0, vec![0, 0])],
        };
        let d = p.partial(&[1, 1]);
        assert_eq!(d.eval(&[2.0, 5.0]), 12.0);
    }
}

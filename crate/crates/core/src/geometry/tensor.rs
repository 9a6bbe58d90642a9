use std::ops::{Index, IndexMut};

use serde::Serialize;

/// Dense rank-`R` array over `n` coordinates, row-major in index order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tensor<const R: usize> {
    n: usize,
    data: Vec<f64>,
}

pub type Tensor1 = Tensor<1>;
pub type Tensor2 = Tensor<2>;
pub type Tensor3 = Tensor<3>;
pub type Tensor4 = Tensor<4>;

impl<const R: usize> Tensor<R> {
    pub fn zeros(n: usize) -> Self {
        Tensor {
            n,
            data: vec![0.0; n.pow(R as u32)],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut([usize; R]) -> f64) -> Self {
        let mut t = Self::zeros(n);
        for flat in 0..t.data.len() {
            t.data[flat] = f(t.unflatten(flat));
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entry of `|self - other|` and where it occurs.
    pub fn max_diff(&self, other: &Self) -> (f64, [usize; R]) {
        let mut best = (0.0, [0; R]);
        for (flat, (a, b)) in self.data.iter().zip(&other.data).enumerate() {
            let d = (a - b).abs();
            if d > best.0 || d.is_nan() {
                best = (d, self.unflatten(flat));
            }
        }
        best
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Tensor {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Tensor {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    fn flatten(&self, idx: [usize; R]) -> usize {
        idx.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.n);
            acc * self.n + i
        })
    }

    fn unflatten(&self, mut flat: usize) -> [usize; R] {
        let mut idx = [0; R];
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.n;
            flat /= self.n;
        }
        idx
    }
}

impl<const R: usize> Index<[usize; R]> for Tensor<R> {
    type Output = f64;
    fn index(&self, idx: [usize; R]) -> &f64 {
        &self.data[self.flatten(idx)]
    }
}

impl<const R: usize> IndexMut<[usize; R]> for Tensor<R> {
    fn index_mut(&mut self, idx: [usize; R]) -> &mut f64 {
        let flat = self.flatten(idx);
        &mut self.data[flat]
    }
}

/// `1 + max |component|` over the given tensors.
pub fn scale_of(parts: &[&[f64]]) -> f64 {
    1.0 + parts
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

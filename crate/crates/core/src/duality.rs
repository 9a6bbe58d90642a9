//! Hodge star on 2-forms and the self-dual / anti-self-dual Weyl split in
//! dimension four.

use nalgebra::{Matrix4, Matrix6};
use thiserror::Error;

use crate::geometry::{ConformalBundle, MetricValue, Tensor4};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DualityError {
    #[error("duality requires dimension 4, found {got}")]
    DimensionMismatch { got: usize },
    #[error("the real split of Λ² is unavailable in Lorentzian signature")]
    SplitUnavailable,
    #[error("null frames need neutral signature")]
    NotNeutral,
    #[error("no pivot ordering gives a non-null orthonormal frame")]
    FrameConstructionFailed,
    #[error("wedge pairing is singular")]
    Singular,
}

/// Coordinate 2-forms `dx^i ∧ dx^j`, `i < j`, in lexicographic order.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

fn pair_index(i: usize, j: usize) -> Option<(usize, f64)> {
    let (a, b, s) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
    PAIRS.iter().position(|&p| p == (a, b)).map(|k| (k, s))
}

fn perm_sign(p: [usize; 4]) -> f64 {
    let mut s = 1.0;
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] > p[j] {
                s = -s;
            } else if p[i] == p[j] {
                return 0.0;
            }
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoFormBasis {
    /// Induced inner product `⟨⟨dx^i∧dx^j, dx^k∧dx^l⟩⟩ = g^ik g^jl − g^il g^jk`.
    pub inner: Matrix6<f64>,
    /// Coefficient of `vol` on `dx^0∧dx^1∧dx^2∧dx^3`.
    pub volume: f64,
}

impl TwoFormBasis {
    pub fn new(mv: &MetricValue, orientation: f64) -> Result<TwoFormBasis, DualityError> {
        if mv.dim() != 4 {
            return Err(DualityError::DimensionMismatch { got: mv.dim() });
        }
        let gi = &mv.g_inv;
        let inner = Matrix6::from_fn(|a, b| {
            let (i, j) = PAIRS[a];
            let (k, l) = PAIRS[b];
            gi[[i, k]] * gi[[j, l]] - gi[[i, l]] * gi[[j, k]]
        });
        Ok(TwoFormBasis {
            inner,
            volume: orientation.signum() * mv.det.abs().sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HodgeOperator {
    pub basis: TwoFormBasis,
    /// Acts on coefficient vectors in the [`PAIRS`] basis.
    pub star: Matrix6<f64>,
    /// `★² = square · Id`.
    pub square: f64,
}

/// Solves `α ∧ ★β = ⟨⟨α, β⟩⟩ vol` on the coordinate basis.
pub fn hodge_star(mv: &MetricValue, orientation: f64) -> Result<HodgeOperator, DualityError> {
    let basis = TwoFormBasis::new(mv, orientation)?;
    let wedge = Matrix6::from_fn(|a, b| {
        let (i, j) = PAIRS[a];
        let (k, l) = PAIRS[b];
        perm_sign([i, j, k, l])
    });
    let inv = wedge.try_inverse().ok_or(DualityError::Singular)?;
    let star = inv * basis.inner * basis.volume;
    let sq = star * star;
    let square = if mv.signature.is_lorentzian() { -1.0 } else { 1.0 };
    debug_assert!((sq - Matrix6::identity() * square).abs().max() < 1e-8 * (1.0 + sq.abs().max()));
    Ok(HodgeOperator { basis, star, square })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeylEndomorphism {
    pub weyl: Matrix6<f64>,
    pub plus: Matrix6<f64>,
    pub minus: Matrix6<f64>,
}

/// `𝒲_IJ = W_ij^{kl}` for `I = (i<j)`, `J = (k<l)`.
pub fn weyl_endomorphism(w: &Tensor4, mv: &MetricValue) -> Matrix6<f64> {
    let gi = &mv.g_inv;
    Matrix6::from_fn(|a, b| {
        let (i, j) = PAIRS[a];
        let (k, l) = PAIRS[b];
        let mut s = 0.0;
        for p in 0..4 {
            for q in 0..4 {
                s += gi[[k, p]] * gi[[l, q]] * w[[i, j, p, q]];
            }
        }
        s
    })
}

pub fn weyl_split(
    cb: &ConformalBundle,
    mv: &MetricValue,
    h: &HodgeOperator,
) -> Result<WeylEndomorphism, DualityError> {
    if h.square < 0.0 {
        return Err(DualityError::SplitUnavailable);
    }
    if cb.weyl.dim() != 4 {
        return Err(DualityError::DimensionMismatch { got: cb.weyl.dim() });
    }
    let weyl = weyl_endomorphism(&cb.weyl, mv);
    let sw = h.star * weyl;
    Ok(WeylEndomorphism {
        plus: (weyl + sw) * 0.5,
        minus: (weyl - sw) * 0.5,
        weyl,
    })
}

/// `tr(AB)`, the pairing in which the two halves are orthogonal.
pub fn pairing(a: &Matrix6<f64>, b: &Matrix6<f64>) -> f64 {
    (a * b).trace()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameKind {
    /// `ε_i = ⟨e_i, e_i⟩`.
    Orthonormal { eps: [f64; 4] },
    /// `{T, U, V, W}` with `⟨T,V⟩ = ⟨U,W⟩ = 1`.
    Null,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub vectors: [[f64; 4]; 4],
    pub kind: FrameKind,
    /// Sign of the frame determinant against the coordinate orientation.
    pub orientation: f64,
}

fn det4(v: &[[f64; 4]; 4]) -> f64 {
    Matrix4::from_fn(|i, j| v[j][i]).determinant()
}

impl Frame {
    fn new(vectors: [[f64; 4]; 4], kind: FrameKind) -> Frame {
        let orientation = det4(&vectors).signum();
        Frame {
            vectors,
            kind,
            orientation,
        }
    }

    pub fn gram(&self, mv: &MetricValue) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (a, row) in out.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = mv.inner(&self.vectors[a], &self.vectors[b]);
            }
        }
        out
    }

    /// Largest deviation of the Gram matrix from the one required by the kind.
    pub fn gram_defect(&self, mv: &MetricValue) -> f64 {
        let gram = self.gram(mv);
        let mut worst = 0.0f64;
        for a in 0..4 {
            for b in 0..4 {
                let expected = match self.kind {
                    FrameKind::Orthonormal { eps } => {
                        if a == b {
                            eps[a]
                        } else {
                            0.0
                        }
                    }
                    FrameKind::Null => {
                        // T, U, V, W
                        if (a, b) == (0, 2) || (a, b) == (2, 0) || (a, b) == (1, 3) || (a, b) == (3, 1) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
                worst = worst.max((gram[a][b] - expected).abs());
            }
        }
        worst
    }

    /// Same frame reoriented to `orientation`: an orthonormal frame negates
    /// its last vector, a null frame swaps `U` and `W`.
    pub fn oriented(mut self, orientation: f64) -> Frame {
        if self.orientation != orientation.signum() {
            match self.kind {
                FrameKind::Orthonormal { .. } => {
                    for c in &mut self.vectors[3] {
                        *c = -*c;
                    }
                }
                FrameKind::Null => self.vectors.swap(1, 3),
            }
            self.orientation = -self.orientation;
        }
        self
    }
}

/// Pseudo Gram-Schmidt preferring coordinate directions, ordered `(−,−,+,+)`
/// in neutral signature (negative vectors first in general), positively
/// oriented.
pub fn orthonormal_frame(mv: &MetricValue) -> Result<Frame, DualityError> {
    if mv.dim() != 4 {
        return Err(DualityError::DimensionMismatch { got: mv.dim() });
    }
    let want_neg = mv.signature.negative;
    let scale = 1.0 + mv.g.max_abs();
    let mut candidates: Vec<[f64; 4]> = Vec::new();
    for i in 0..4 {
        let mut v = [0.0; 4];
        v[i] = 1.0;
        candidates.push(v);
    }
    for i in 0..4 {
        for j in i + 1..4 {
            for s in [1.0, -1.0] {
                let mut v = [0.0; 4];
                v[i] = 1.0;
                v[j] = s;
                candidates.push(v);
            }
        }
    }
    let mut accepted: Vec<([f64; 4], f64)> = Vec::new();
    for c in candidates {
        if accepted.len() == 4 {
            break;
        }
        let mut v = c;
        for (e, eps) in &accepted {
            let p = mv.inner(&v, e) * eps;
            for k in 0..4 {
                v[k] -= p * e[k];
            }
        }
        let norm = mv.inner(&v, &v);
        if norm.abs() <= 1e-6 * scale {
            continue;
        }
        let eps = norm.signum();
        let negs = accepted.iter().filter(|(_, e)| *e < 0.0).count();
        let full = if eps < 0.0 {
            negs >= want_neg
        } else {
            accepted.len() - negs >= 4 - want_neg
        };
        if full {
            continue;
        }
        let k = norm.abs().sqrt();
        accepted.push((v.map(|x| x / k), eps));
    }
    if accepted.len() < 4 {
        return Err(DualityError::FrameConstructionFailed);
    }
    accepted.sort_by(|a, b| a.1.total_cmp(&b.1));
    let vectors = [accepted[0].0, accepted[1].0, accepted[2].0, accepted[3].0];
    let eps = [accepted[0].1, accepted[1].1, accepted[2].1, accepted[3].1];
    Ok(Frame::new(vectors, FrameKind::Orthonormal { eps }).oriented(1.0))
}

/// Builds a null frame from an orthonormal frame of signature `(−,−,+,+)`.
pub fn null_from_orthonormal(frame: &Frame) -> Result<Frame, DualityError> {
    match frame.kind {
        FrameKind::Orthonormal { eps } if eps == [-1.0, -1.0, 1.0, 1.0] => {}
        _ => return Err(DualityError::NotNeutral),
    }
    let [e1, e2, e3, e4] = frame.vectors;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let comb = |a: [f64; 4], sa: f64, b: [f64; 4], sb: f64| -> [f64; 4] {
        std::array::from_fn(|k| r * (sa * a[k] + sb * b[k]))
    };
    let t = comb(e1, 1.0, e3, 1.0);
    let v = comb(e3, 1.0, e1, -1.0);
    let u = comb(e2, 1.0, e4, 1.0);
    let w = comb(e4, 1.0, e2, -1.0);
    Ok(Frame::new([t, u, v, w], FrameKind::Null))
}

pub fn null_frame(mv: &MetricValue) -> Result<Frame, DualityError> {
    if mv.dim() == 4 && !mv.signature.is_neutral() {
        return Err(DualityError::NotNeutral);
    }
    null_from_orthonormal(&orthonormal_frame(mv)?)
}

/// `W(a, b, c, d)` for all frame vectors, indexed `[a][b][c][d]`.
fn frame_components(w: &Tensor4, frame: &Frame) -> Vec<f64> {
    let v = &frame.vectors;
    // contract one slot at a time
    let mut cur: Vec<f64> = w.data().to_vec();
    for _ in 0..4 {
        // cur indexed [s1, s2, s3, s4] with s1 a coordinate slot; rotate it
        // to the back while replacing it by a frame slot
        let mut next = vec![0.0; 256];
        for a in 0..4 {
            for rest in 0..64 {
                let mut s = 0.0;
                for i in 0..4 {
                    s += v[a][i] * cur[i * 64 + rest];
                }
                next[rest * 4 + a] = s;
            }
        }
        cur = next;
    }
    cur
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Orthonormal,
    Null,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfDualReport {
    pub criterion: Criterion,
    /// Largest violation of the frame conditions.
    pub defect: f64,
    pub tolerance: f64,
    pub w_plus_norm: f64,
    pub w_minus_norm: f64,
    pub self_dual: bool,
}

/// Frame test for self-duality, evaluated with the orientation of `frame`,
/// alongside the `★` split for the same orientation.
pub fn selfdual_check(
    cb: &ConformalBundle,
    mv: &MetricValue,
    frame: &Frame,
) -> Result<SelfDualReport, DualityError> {
    if cb.weyl.dim() != 4 {
        return Err(DualityError::DimensionMismatch { got: cb.weyl.dim() });
    }
    let comps = frame_components(&cb.weyl, frame);
    let at = |a: usize, b: usize, c: usize, d: usize| comps[((a * 4 + b) * 4 + c) * 4 + d];
    let mut defect = 0.0f64;
    let criterion = match frame.kind {
        FrameKind::Orthonormal { eps } => {
            for (x, y) in (0..4).flat_map(|x| (0..4).map(move |y| (x, y))) {
                for (i, j, k) in [(1, 2, 3), (2, 3, 1), (3, 1, 2)] {
                    // cyclic permutations of (2,3,4) are even
                    let rhs = eps[j] * eps[k] * at(j, k, x, y);
                    defect = defect.max((at(0, i, x, y) - rhs).abs());
                }
            }
            Criterion::Orthonormal
        }
        FrameKind::Null => {
            let (t, u, v, w) = (0, 1, 2, 3);
            for (x, y) in (0..4).flat_map(|x| (0..4).map(move |y| (x, y))) {
                defect = defect
                    .max((at(t, v, x, y) - at(u, w, x, y)).abs())
                    .max(at(t, w, x, y).abs())
                    .max(at(u, v, x, y).abs());
            }
            Criterion::Null
        }
    };
    let h = hodge_star(mv, frame.orientation)?;
    let split = weyl_split(cb, mv, &h)?;
    let tolerance = 1e-8 * (1.0 + cb.weyl.max_abs());
    let w_minus_norm = split.minus.abs().max();
    Ok(SelfDualReport {
        criterion,
        defect,
        tolerance,
        w_plus_norm: split.plus.abs().max(),
        w_minus_norm,
        self_dual: defect <= tolerance && w_minus_norm <= tolerance,
    })
}

/// Index helper for callers working with explicit 2-form components.
pub fn two_form_index(i: usize, j: usize) -> Option<(usize, f64)> {
    pair_index(i, j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Chart, LocalGeometry, MetricField, Tensor2};

    fn diag(d: [f64; 4]) -> MetricValue {
        MetricValue::from_matrix(Tensor2::from_fn(4, |[i, j]| if i == j { d[i] } else { 0.0 })).unwrap()
    }

    #[test]
    fn neutral_star() {
        let h = hodge_star(&diag([-1.0, -1.0, 1.0, 1.0]), 1.0).unwrap();
        // ★(e¹∧e²) = e³∧e⁴
        let col = h.star.column(0);
        assert!((col[5] - 1.0).abs() < 1e-15);
        assert!(col.iter().take(5).all(|v| v.abs() < 1e-15));
        assert!((h.star * h.star - Matrix6::identity()).abs().max() < 1e-12);
        assert!((h.star.transpose() * h.basis.inner - h.basis.inner * h.star).abs().max() < 1e-12);
    }

    #[test]
    fn signature_dependence() {
        let r = hodge_star(&diag([1.0; 4]), 1.0).unwrap();
        assert!((r.star * r.star - Matrix6::identity()).abs().max() < 1e-12);
        let l = hodge_star(&diag([-1.0, 1.0, 1.0, 1.0]), 1.0).unwrap();
        assert!((l.star * l.star + Matrix6::identity()).abs().max() < 1e-12);
        assert_eq!(l.square, -1.0);
    }

    #[test]
    fn eigenspaces_are_three_dimensional() {
        let h = hodge_star(&diag([-1.0, -1.0, 1.0, 1.0]), 1.0).unwrap();
        let eig = nalgebra::SymmetricEigen::new((h.star + h.star.transpose()) * 0.5);
        let plus = eig.eigenvalues.iter().filter(|v| (**v - 1.0).abs() < 1e-9).count();
        let minus = eig.eigenvalues.iter().filter(|v| (**v + 1.0).abs() < 1e-9).count();
        assert_eq!((plus, minus), (3, 3));
    }

    #[test]
    fn lorentzian_split_unavailable() {
        let chart = Chart::new(["t", "x", "y", "z"]).unwrap();
        let m = MetricField::diagonal(chart, &["-1", "1", "1", "1"]).unwrap();
        let geo = LocalGeometry::new(&m, &[0.0; 4]).unwrap();
        let h = hodge_star(geo.metric_value(), 1.0).unwrap();
        assert_eq!(
            weyl_split(&geo.conformal().unwrap(), geo.metric_value(), &h),
            Err(DualityError::SplitUnavailable)
        );
    }

    #[test]
    fn frames_of_eta() {
        let eta = diag([-1.0, -1.0, 1.0, 1.0]);
        let f = orthonormal_frame(&eta).unwrap();
        assert_eq!(f.vectors, [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]);
        assert_eq!(f.kind, FrameKind::Orthonormal { eps: [-1.0, -1.0, 1.0, 1.0] });
        let n = null_from_orthonormal(&f).unwrap();
        let g = n.gram(&eta);
        assert!(g[0][0].abs() < 1e-15);
        assert!((g[0][2] - 1.0).abs() < 1e-15);
        assert!(n.gram_defect(&eta) < 1e-15);
        assert_eq!(n.orientation, 1.0);
    }

    #[test]
    fn walker_frames() {
        let g = Tensor2::from_fn(4, |[i, j]| match (i, j) {
            (0, 0) => 1.0,
            (0, 2) | (2, 0) | (1, 3) | (3, 1) => 1.0,
            _ => 0.0,
        });
        let mv = MetricValue::from_matrix(g).unwrap();
        let f = orthonormal_frame(&mv).unwrap();
        assert!(f.gram_defect(&mv) < 1e-12);
        assert_eq!(f.orientation, 1.0);
        let n = null_from_orthonormal(&f).unwrap();
        assert!(n.gram_defect(&mv) < 1e-12);
    }
}

//! Dense matrices in ℝ^{n×n} and fourth-rank tensors in ℝ^{n×n×n×n}.
//!
//! Everything here is small (n ≤ 4) and stored densely. A [`Tensor4`] acts on
//! matrices by double contraction, `(β:X)_ij = Σ_kl β_ijkl X_kl`, and two
//! tensors compose as linear maps on ℝ^{n×n}. The quadratic-form view used by
//! [`quadform_extremes`] and [`tensor_sqrt`] reinterprets β as the n²×n²
//! matrix with row index `i·n+j` and column index `k·n+l`.

mod eigen;
mod grad;

pub use eigen::{jacobi_eigen, SymmetricEigen};
pub use grad::{
    grad_discrete_2d, sym_grad_discrete, sym_grad_discrete_1d, sym_grad_discrete_2d,
    unweighted_identity_residual, weighted_identity, GridField, VectorField2D, WeightedIdentity,
};

use std::fmt;

use thiserror::Error;

/// Largest supported dimension.
pub const MAX_DIM: usize = 4;

/// Default relative tolerance for symmetry checks.
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("unsupported dimension {0} (expected 1..={MAX_DIM})")]
    UnsupportedDimension(usize),
    #[error("entries must be finite")]
    NonFinite,
    #[error("tensor lacks major symmetry (max violation {0:e})")]
    NotMajorSymmetric(f64),
    #[error("tensor is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("grid too small: {0} nodes per axis (need at least 3)")]
    GridTooSmall(usize),
    #[error("field does not vanish on the boundary (max |value| {0:e})")]
    NonZeroBoundary(f64),
    #[error("grid spacing must be positive")]
    BadSpacing,
}

fn check_dim(n: usize) -> Result<(), TensorError> {
    if (1..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(TensorError::UnsupportedDimension(n))
    }
}

fn same_dim(a: usize, b: usize) -> Result<(), TensorError> {
    if a == b {
        Ok(())
    } else {
        Err(TensorError::DimensionMismatch { left: a, right: b })
    }
}

/// Square matrix of dimension `n`, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct Mat {
    n: usize,
    data: [f64; MAX_DIM * MAX_DIM],
}

impl Mat {
    pub fn zeros(n: usize) -> Result<Self, TensorError> {
        check_dim(n)?;
        Ok(Self {
            n,
            data: [0.0; MAX_DIM * MAX_DIM],
        })
    }

    pub fn identity(n: usize) -> Result<Self, TensorError> {
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        Ok(m)
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be a square.
    pub fn from_row_major(entries: &[f64]) -> Result<Self, TensorError> {
        let n = (entries.len() as f64).sqrt().round() as usize;
        if n * n != entries.len() {
            return Err(TensorError::DimensionMismatch {
                left: entries.len(),
                right: n * n,
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(TensorError::NonFinite);
        }
        let mut m = Self::zeros(n)?;
        m.data[..n * n].copy_from_slice(entries);
        Ok(m)
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, TensorError> {
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.n * self.n]
    }

    pub fn transpose(&self) -> Self {
        let mut t = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                t[(i, j)] = self[(j, i)];
            }
        }
        t
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = *self;
        out.data.iter_mut().for_each(|x| *x *= s);
        out
    }

    /// Frobenius norm `|X| = ⟨X,X⟩^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn add(&self, other: &Mat) -> Result<Mat, TensorError> {
        same_dim(self.n, other.n)?;
        let mut out = *self;
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat, TensorError> {
        self.add(&other.scaled(-1.0))
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.n && j < self.n);
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.n && j < self.n);
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = self.as_slice().chunks(self.n).collect();
        f.debug_struct("Mat")
            .field("n", &self.n)
            .field("rows", &rows)
            .finish()
    }
}

/// Fourth-rank tensor, flat storage with `(i,j,k,l) → ((i·n+j)·n+k)·n+l`.
#[derive(Clone, PartialEq)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Result<Self, TensorError> {
        check_dim(n)?;
        Ok(Self {
            n,
            data: vec![0.0; n * n * n * n],
        })
    }

    pub fn from_fn(
        n: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Result<Self, TensorError> {
        let mut t = Self::zeros(n)?;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = f(i, j, k, l);
                        if !v.is_finite() {
                            return Err(TensorError::NonFinite);
                        }
                        t[(i, j, k, l)] = v;
                    }
                }
            }
        }
        Ok(t)
    }

    /// The identity map on ℝ^{n×n}: `I_ijkl = δ_ik δ_jl`.
    pub fn identity(n: usize) -> Result<Self, TensorError> {
        Self::from_fn(n, |i, j, k, l| delta(i, k) * delta(j, l))
    }

    /// Isotropic elasticity tensor `λ δ_ij δ_kl + μ (δ_ik δ_jl + δ_il δ_jk)`.
    pub fn isotropic(n: usize, lambda: f64, mu: f64) -> Result<Self, TensorError> {
        Self::from_fn(n, |i, j, k, l| {
            lambda * delta(i, j) * delta(k, l)
                + mu * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k))
        })
    }

    /// Builds a tensor from its n²×n² matrix view (row `i·n+j`, column `k·n+l`).
    pub fn from_matrix_view(n: usize, m: &[f64]) -> Result<Self, TensorError> {
        check_dim(n)?;
        same_dim(m.len(), n.pow(4))?;
        if m.iter().any(|x| !x.is_finite()) {
            return Err(TensorError::NonFinite);
        }
        Ok(Self {
            n,
            data: m.to_vec(),
        })
    }

    /// The n²×n² matrix view; identical to the flat storage.
    pub fn matrix_view(&self) -> &[f64] {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn sub(&self, other: &Tensor4) -> Result<Tensor4, TensorError> {
        same_dim(self.n, other.n)?;
        Ok(Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Max-entry norm.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Spectral norm of the matrix view (largest singular value).
    pub fn spectral_norm(&self) -> f64 {
        let m = self.n * self.n;
        // βᵀβ is symmetric positive semidefinite; its top eigenvalue is σ_max².
        let mut gram = vec![0.0; m * m];
        for r in 0..m {
            for c in 0..m {
                gram[r * m + c] = (0..m)
                    .map(|k| self.data[k * m + r] * self.data[k * m + c])
                    .sum();
            }
        }
        let eig = jacobi_eigen(&gram, m);
        eig.values
            .iter()
            .fold(0.0_f64, |a, &b| a.max(b))
            .max(0.0)
            .sqrt()
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }
}

impl std::ops::Index<(usize, usize, usize, usize)> for Tensor4 {
    type Output = f64;
    fn index(&self, (i, j, k, l): (usize, usize, usize, usize)) -> &f64 {
        &self.data[self.offset(i, j, k, l)]
    }
}

impl std::ops::IndexMut<(usize, usize, usize, usize)> for Tensor4 {
    fn index_mut(&mut self, (i, j, k, l): (usize, usize, usize, usize)) -> &mut f64 {
        let o = self.offset(i, j, k, l);
        &mut self.data[o]
    }
}

impl fmt::Debug for Tensor4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor4")
            .field("n", &self.n)
            .field("data", &self.data)
            .finish()
    }
}

#[inline]
fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// `⟨X,Y⟩ = Σ_ij X_ij Y_ij`.
pub fn inner(x: &Mat, y: &Mat) -> Result<f64, TensorError> {
    same_dim(x.n, y.n)?;
    Ok(x.as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(a, b)| a * b)
        .sum())
}

/// Double contraction `(β:X)_ij = Σ_kl β_ijkl X_kl`.
pub fn contract(beta: &Tensor4, x: &Mat) -> Result<Mat, TensorError> {
    same_dim(beta.n, x.n)?;
    let n = x.n;
    let m = n * n;
    let xs = x.as_slice();
    let mut out = Mat::zeros(n)?;
    for r in 0..m {
        let row = &beta.data[r * m..(r + 1) * m];
        out.data[r] = row.iter().zip(xs).map(|(b, v)| b * v).sum();
    }
    Ok(out)
}

/// Symmetric part `(X + Xᵗ)/2`.
pub fn sym(x: &Mat) -> Mat {
    let mut out = *x;
    for i in 0..x.n {
        for j in 0..x.n {
            out[(i, j)] = 0.5 * (x[(i, j)] + x[(j, i)]);
        }
    }
    out
}

/// `(w⊙z)_ij = w_i z_j`.
pub fn outer(w: &[f64], z: &[f64]) -> Result<Mat, TensorError> {
    same_dim(w.len(), z.len())?;
    Mat::from_fn(w.len(), |i, j| w[i] * z[j])
}

/// Composition as linear maps: `(β¹⊙β²)_ijkl = Σ_{m,m'} β¹_ijmm' β²_mm'kl`.
pub fn compose(b1: &Tensor4, b2: &Tensor4) -> Result<Tensor4, TensorError> {
    same_dim(b1.n, b2.n)?;
    let m = b1.n * b1.n;
    let mut data = vec![0.0; m * m];
    for r in 0..m {
        for c in 0..m {
            data[r * m + c] = (0..m)
                .map(|s| b1.data[r * m + s] * b2.data[s * m + c])
                .sum();
        }
    }
    Ok(Tensor4 { n: b1.n, data })
}

/// Symmetrizer `β̂_ijkl = ½(δ_ik δ_jl + δ_il δ_jk)`, so that `β̂:X = sym(X)`.
pub fn symmetrizer(n: usize) -> Result<Tensor4, TensorError> {
    Tensor4::from_fn(n, |i, j, k, l| {
        0.5 * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k))
    })
}

/// `β̂ ⊙ (β ⊙ β̂)`: the tensor whose quadratic form is `⟨β:sym X, sym X⟩`.
pub fn symmetrized_form(beta: &Tensor4) -> Result<Tensor4, TensorError> {
    let s = symmetrizer(beta.n)?;
    compose(&s, &compose(beta, &s)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    /// `β_ijkl = β_klij` within tolerance.
    pub major: bool,
    /// `β_ijkl = β_jikl` within tolerance.
    pub minor_left: bool,
    pub max_major_violation: f64,
    pub max_minor_violation: f64,
    /// Larger of the two violations.
    pub max_violation: f64,
}

/// Symmetry check; `tol` is relative to `max |β_ijkl|` (absolute for the zero tensor).
pub fn check_symmetries(beta: &Tensor4, tol: f64) -> SymmetryReport {
    let n = beta.n;
    let mut major = 0.0_f64;
    let mut minor = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let b = beta[(i, j, k, l)];
                    major = major.max((b - beta[(k, l, i, j)]).abs());
                    minor = minor.max((b - beta[(j, i, k, l)]).abs());
                }
            }
        }
    }
    let scale = beta.max_abs().max(f64::MIN_POSITIVE);
    let limit = if beta.max_abs() > 0.0 {
        tol * scale
    } else {
        tol
    };
    SymmetryReport {
        major: major <= limit,
        minor_left: minor <= limit,
        max_major_violation: major,
        max_minor_violation: minor,
        max_violation: major.max(minor),
    }
}

fn require_major(beta: &Tensor4) -> Result<(), TensorError> {
    let rep = check_symmetries(beta, DEFAULT_SYMMETRY_TOL);
    if rep.major {
        Ok(())
    } else {
        Err(TensorError::NotMajorSymmetric(rep.max_major_violation))
    }
}

/// Extreme eigenvalues of the matrix view. `lam_min` is the best constant in
/// `⟨β:X,X⟩ ≥ lam_min |X|²`.
pub fn quadform_extremes(beta: &Tensor4) -> Result<(f64, f64), TensorError> {
    require_major(beta)?;
    let eig = jacobi_eigen(&beta.data, beta.n * beta.n);
    let lo = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Unique positive definite square root of a major-symmetric, positive definite tensor.
pub fn tensor_sqrt(beta: &Tensor4) -> Result<Tensor4, TensorError> {
    require_major(beta)?;
    let m = beta.n * beta.n;
    let eig = jacobi_eigen(&beta.data, m);
    let lo = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
    if lo <= 0.0 {
        return Err(TensorError::NotPositiveDefinite(lo));
    }
    let roots: Vec<f64> = eig.values.iter().map(|v| v.sqrt()).collect();
    let mut data = vec![0.0; m * m];
    for r in 0..m {
        for c in r..m {
            let v: f64 = (0..m)
                .map(|s| eig.vectors[r * m + s] * roots[s] * eig.vectors[c * m + s])
                .sum();
            data[r * m + c] = v;
            data[c * m + r] = v;
        }
    }
    Ok(Tensor4 { n: beta.n, data })
}

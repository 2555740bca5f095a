//! Dense complex matrix primitives.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex64`. All index
//! arithmetic in this crate uses the row-major logical convention: entry
//! `(r, c)` of an `m x n` matrix sits at flat position `r * n + c`. The
//! vectorization used for Hilbert-Schmidt vectors (see [`vec_row_major`])
//! follows the same rule.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative asymmetry above which a matrix is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-8;
/// Eigenvalues down to `-CLAMP_TOL * max` are treated as zero.
pub const CLAMP_TOL: f64 = 1e-10;
/// Eigenvalues below `-NEGATIVE_TOL * max` are an error.
pub const NEGATIVE_TOL: f64 = 1e-8;
/// Default relative cutoff for pseudo-inverses and rank decisions.
pub const DEFAULT_CUTOFF: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

/// Builds a matrix from row-major entries.
pub fn from_rows(rows: usize, cols: usize, entries: &[Complex64]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols, "entry count must equal rows*cols");
    CMatrix::from_row_slice(rows, cols, entries)
}

pub fn pauli_x() -> CMatrix {
    from_rows(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMatrix {
    from_rows(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMatrix {
    from_rows(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// Kronecker product: `(a ⊗ b)[i*rb + k, j*cb + l] = a[i,j] * b[k,l]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Stacks the rows of `a` into a column vector of length `rows * cols`.
pub fn vec_row_major(a: &CMatrix) -> CMatrix {
    let (rows, cols) = a.shape();
    CMatrix::from_fn(rows * cols, 1, |k, _| a[(k / cols, k % cols)])
}

/// Inverse of [`vec_row_major`]: reads a `rows x cols` matrix out of a
/// column of length `rows * cols`.
pub fn unvec_row_major(v: &[Complex64], rows: usize, cols: usize) -> CMatrix {
    assert_eq!(v.len(), rows * cols);
    CMatrix::from_row_slice(rows, cols, v)
}

/// Relative anti-Hermitian part `‖a − a†‖ / ‖a‖` (0 for the zero matrix).
pub fn hermitian_asymmetry(a: &CMatrix) -> f64 {
    let norm = frobenius(a);
    if norm == 0.0 {
        return 0.0;
    }
    frobenius(&(a - a.adjoint())) / norm
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Real eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: CMatrix,
}

impl EigenSystem {
    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> CMatrix {
        self.spectral_map(Some)
    }

    /// `Σ_k g(λ_k) v_k v_k†`, skipping eigenvalues for which `g` returns `None`.
    pub fn spectral_map(&self, g: impl Fn(f64) -> Option<f64>) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            let w = g(l).unwrap_or(0.0);
            scaled.column_mut(k).scale_mut(w);
        }
        let out = &scaled * self.eigenvectors.adjoint();
        debug_assert_eq!(out.shape(), (n, n));
        out
    }

    /// Number of eigenvalues strictly above `cutoff * λ_max`.
    pub fn rank(&self, cutoff: f64) -> usize {
        let max = self.max();
        if max <= 0.0 {
            return 0;
        }
        self.eigenvalues.iter().filter(|&&l| l > cutoff * max).count()
    }
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues descending.
///
/// The input is symmetrized as `(a + a†)/2` before decomposition.
pub fn hermitian_eigensystem(a: &CMatrix) -> Result<EigenSystem> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    if !is_finite(a) {
        return Err(Error::NonFinite);
    }
    let asymmetry = hermitian_asymmetry(a);
    if asymmetry > HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry });
    }
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(rows, rows, |r, k| eig.eigenvectors[(r, order[k])]);
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

/// Result of [`psd_inv_sqrt`].
#[derive(Debug, Clone)]
pub struct PsdInvSqrt {
    /// Pseudo-inverse square root on the retained support.
    pub inv_sqrt: CMatrix,
    /// Orthogonal projector onto the retained support.
    pub support_projector: CMatrix,
    pub rank: usize,
}

/// Checks PSD-ness of an eigensystem against the clamping rules and returns
/// the largest eigenvalue.
pub(crate) fn check_psd(eig: &EigenSystem) -> Result<f64> {
    let max = eig.max();
    let min = eig.min();
    if max <= 0.0 {
        if min < 0.0 {
            return Err(Error::NegativeEigenvalue { value: min, max });
        }
        return Err(Error::ZeroMatrix);
    }
    if min < -NEGATIVE_TOL * max {
        return Err(Error::NegativeEigenvalue { value: min, max });
    }
    Ok(max)
}

/// Pseudo-inverse square root of a positive semi-definite matrix.
///
/// Eigenvalues at or below `cutoff * λ_max` are discarded; the remaining
/// ones contribute `λ^{-1/2} v v†` to `inv_sqrt` and `v v†` to the support
/// projector.
pub fn psd_inv_sqrt(a: &CMatrix, cutoff: f64) -> Result<PsdInvSqrt> {
    let eig = hermitian_eigensystem(a)?;
    let max = check_psd(&eig)?;
    let keep = |l: f64| l > cutoff * max;
    Ok(PsdInvSqrt {
        inv_sqrt: eig.spectral_map(|l| keep(l).then(|| 1.0 / l.sqrt())),
        support_projector: eig.spectral_map(|l| keep(l).then_some(1.0)),
        rank: eig.rank(cutoff),
    })
}

//! Dense complex Hermitian linear algebra.
//!
//! Everything downstream is built on [`HermitianMatrix`]: eigendecompositions,
//! positive-semidefiniteness tests, principal square roots, support
//! pseudo-inverses, Löwner comparisons and Hilbert-Schmidt geometry.
//!
//! Positivity decisions are relative: a matrix counts as PSD when its minimal
//! eigenvalue is above `-tol * max(1, ‖H‖₂)`, so the same tolerance stays
//! meaningful for operators with traces anywhere in `0..2`.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{Complex, DMatrix};
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Default relative tolerance for positivity and Löwner decisions.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default relative eigenvalue threshold separating support from kernel.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix must have dimension at least 1")]
    EmptyMatrix,
    #[error("matrix is not positive semidefinite (lambda_min = {lambda_min:.3e})")]
    NotPsd { lambda_min: f64 },
    #[error(
        "eigensolver failed to converge (dim {dim}, trace {trace:.6e}, hs_norm {hs_norm:.6e})"
    )]
    EigenFailed {
        dim: usize,
        trace: f64,
        hs_norm: f64,
    },
}

/// Complex square matrix with enforced Hermitian symmetry.
///
/// Construction symmetrizes the input as `H ← (H + H†)/2`, so every stored
/// value satisfies `entries[i][j] == conj(entries[j][i])` exactly and all
/// spectra are real. Sums, differences and real rescalings of Hermitian
/// matrices are again exactly Hermitian and skip re-symmetrization.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    data: CMatrix,
}

impl HermitianMatrix {
    /// Build from an arbitrary complex square matrix, applying `(H + H†)/2`.
    pub fn new(m: CMatrix) -> Result<Self, LinalgError> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        let adj = m.adjoint();
        let sym = (m + adj).scale(0.5);
        Ok(Self { data: sym })
    }

    /// Wrap a matrix that is already exactly Hermitian (sums, scalings, ...).
    pub(crate) fn from_hermitian_unchecked(data: CMatrix) -> Self {
        Self { data }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            data: CMatrix::identity(d, d),
        }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            data: CMatrix::zeros(d, d),
        }
    }

    /// Identity scaled by a real factor.
    pub fn scaled_identity(d: usize, c: f64) -> Self {
        Self {
            data: CMatrix::identity(d, d).scale(c),
        }
    }

    /// Diagonal matrix with real entries.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        Self {
            data: CMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    C64::new(diag[i], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    /// Real matrix given as rows; symmetrized like any other input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LinalgError::NotSquare {
                rows: n,
                cols: rows.first().map_or(0, |r| r.len()),
            });
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    /// Trace; the imaginary part is exactly zero by the Hermitian invariant.
    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            data: self.data.scale(c),
        }
    }

    /// `K · H · K†`, re-symmetrized to absorb floating-point drift.
    pub fn conjugate_with(&self, k: &CMatrix) -> Self {
        let m = k * &self.data * k.adjoint();
        let adj = m.adjoint();
        Self {
            data: (m + adj).scale(0.5),
        }
    }
}

impl std::ops::Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dim(), rhs.dim(), "hermitian add: dimension mismatch");
        HermitianMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl std::ops::Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dim(), rhs.dim(), "hermitian sub: dimension mismatch");
        HermitianMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

impl std::ops::Neg for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn neg(self) -> HermitianMatrix {
        HermitianMatrix { data: -&self.data }
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted ascending; eigenvector `k` is column `k` of
/// `eigenvectors`, and `V diag(λ) V†` reconstructs the input.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenSystem {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("dim >= 1")
    }

    /// Rebuild `V f(diag) V†` with a spectral map applied to each eigenvalue.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let d = self.eigenvalues.len();
        let diag = CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(f(self.eigenvalues[i]), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let m = &self.eigenvectors * diag * self.eigenvectors.adjoint();
        let adj = m.adjoint();
        HermitianMatrix::from_hermitian_unchecked((m + adj).scale(0.5))
    }
}

/// Eigendecomposition, sorted ascending.
pub fn eig_h(h: &HermitianMatrix) -> Result<EigenSystem, LinalgError> {
    let d = h.dim();
    if d == 1 {
        return Ok(EigenSystem {
            eigenvalues: vec![h.matrix()[(0, 0)].re],
            eigenvectors: CMatrix::identity(1, 1),
        });
    }
    let se = SymmetricEigen::try_new(h.matrix().clone(), f64::EPSILON, 10_000).ok_or(
        LinalgError::EigenFailed {
            dim: d,
            trace: h.trace(),
            hs_norm: hs_norm(h),
        },
    )?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let eigenvectors = CMatrix::from_fn(d, d, |i, j| se.eigenvectors[(i, order[j])]);
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

/// Minimal eigenvalue.
pub fn lambda_min(h: &HermitianMatrix) -> Result<f64, LinalgError> {
    Ok(eig_h(h)?.lambda_min())
}

/// Maximal eigenvalue.
pub fn lambda_max(h: &HermitianMatrix) -> Result<f64, LinalgError> {
    Ok(eig_h(h)?.lambda_max())
}

/// Absolute positivity slack for a given matrix: `tol * max(1, ‖H‖₂)`.
pub fn psd_slack(h: &HermitianMatrix, tol: f64) -> f64 {
    tol * hs_norm(h).max(1.0)
}

/// `true` iff `λ_min(H) ≥ -tol · max(1, ‖H‖₂)`.
pub fn is_psd(h: &HermitianMatrix, tol: f64) -> Result<bool, LinalgError> {
    Ok(lambda_min(h)? >= -psd_slack(h, tol))
}

/// Principal PSD square root.
///
/// Eigenvalues in `[-tol·max(1,‖H‖₂), 0)` are treated as rounding dust and
/// clamped to zero before the root; anything more negative is a domain error.
pub fn sqrt_psd(h: &HermitianMatrix) -> Result<HermitianMatrix, LinalgError> {
    let es = eig_h(h)?;
    let slack = psd_slack(h, DEFAULT_TOL);
    if es.lambda_min() < -slack {
        return Err(LinalgError::NotPsd {
            lambda_min: es.lambda_min(),
        });
    }
    Ok(es.map_spectrum(|l| l.max(0.0).sqrt()))
}

/// Pseudo-inverse on the support, plus the support projector.
///
/// Eigenvalues at or below `rank_tol · λ_max` belong to the kernel, so the
/// complement `identity - support` projects onto the kernel. A zero matrix
/// yields zero pseudo-inverse and zero support.
pub fn pinv_support(
    h: &HermitianMatrix,
    rank_tol: f64,
) -> Result<(HermitianMatrix, HermitianMatrix), LinalgError> {
    let es = eig_h(h)?;
    let cut = rank_tol * es.lambda_max();
    let pinv = es.map_spectrum(|l| if l > cut && l > 0.0 { 1.0 / l } else { 0.0 });
    let support = es.map_spectrum(|l| if l > cut && l > 0.0 { 1.0 } else { 0.0 });
    Ok((pinv, support))
}

/// Löwner comparison: `A ≤ B` iff `B - A` is PSD within `tol`.
pub fn loewner_leq(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    tol: f64,
) -> Result<bool, LinalgError> {
    if a.dim() != b.dim() {
        return Err(LinalgError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    is_psd(&(b - a), tol)
}

/// Hilbert-Schmidt norm `‖A‖₂ = √tr(A†A)`.
pub fn hs_norm(a: &HermitianMatrix) -> f64 {
    a.matrix().norm()
}

/// Hilbert-Schmidt inner product `Re tr(A†B)`; real for Hermitian arguments.
pub fn hs_inner(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64, LinalgError> {
    if a.dim() != b.dim() {
        return Err(LinalgError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(a.matrix().dotc(b.matrix()).re)
}

/// Largest entrywise modulus of `A - B`; the deviation measure used by the
/// identity-sum validation budgets.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

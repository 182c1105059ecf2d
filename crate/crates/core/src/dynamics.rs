//! Discrete dynamics of measurements: the blockwise product, its dual, the
//! sequential product of effects, reachability via circulant grids, and the
//! two-stage conditional-measurement simulation it models.
//!
//! The blockwise product is `(A*B)_{ik} = Σ_j √B_{jk} A_{ij} √B_{jk}`; a
//! measurement is the `n x 1` case. The dual product conjugates with the left
//! factor instead: `(A *† B)_{ik} = Σ_j √A_{ij} B_{jk} √A_{ij}`. Square roots
//! are always the principal PSD root with eigenvalue clamping, and every
//! output block is re-symmetrized.

use thiserror::Error;

use crate::linalg::{sqrt_psd, CMatrix, HermitianMatrix, LinalgError};
use crate::povm::{BlockMatrix, DensityMatrix, Effect, Povm, PovmError};

/// Probability floor below which a conditional state is undefined.
pub const PROB_TOL: f64 = 1e-12;
/// Joint probabilities above this negative floor are clamped to zero; larger
/// negativity signals invalid inputs and is an error.
pub const JOINT_NEG_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(
        "block shape mismatch: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}"
    )]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("block dimension mismatch: {left} vs {right}")]
    BlockDimMismatch { left: usize, right: usize },
    #[error("outcome probability {prob:.3e} is too small for a conditional state")]
    OutcomeProbabilityZero { prob: f64 },
    #[error("joint probability entry ({row},{col}) is negative beyond tolerance: {value:.3e}")]
    NegativeJointEntry { row: usize, col: usize, value: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Povm(#[from] PovmError),
}

/// Sequential product `A ∘ B = √A B √A`; PSD whenever `B` is.
pub fn seq_product(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
) -> Result<HermitianMatrix, DynamicsError> {
    if a.dim() != b.dim() {
        return Err(DynamicsError::BlockDimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let ra = sqrt_psd(a)?;
    Ok(sandwich(ra.matrix(), b))
}

/// `S · B · S` for Hermitian `S`, re-symmetrized.
fn sandwich(s: &CMatrix, b: &HermitianMatrix) -> HermitianMatrix {
    let m = s * b.matrix() * s;
    let adj = m.adjoint();
    HermitianMatrix::from_hermitian_unchecked((m + adj).scale(0.5))
}

fn check_product_shapes(a: &BlockMatrix, b: &BlockMatrix) -> Result<(), DynamicsError> {
    if a.cols() != b.rows() {
        return Err(DynamicsError::ShapeMismatch {
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: b.rows(),
            right_cols: b.cols(),
        });
    }
    if a.d() != b.d() {
        return Err(DynamicsError::BlockDimMismatch {
            left: a.d(),
            right: b.d(),
        });
    }
    Ok(())
}

/// Blockwise product `(A*B)_{ik} = Σ_j √B_{jk} A_{ij} √B_{jk}`.
pub fn blockwise_product(a: &BlockMatrix, b: &BlockMatrix) -> Result<BlockMatrix, DynamicsError> {
    check_product_shapes(a, b)?;
    let d = a.d();
    // roots of the right factor, indexed [j][k]
    let roots: Vec<Vec<HermitianMatrix>> = b
        .blocks()
        .iter()
        .map(|row| row.iter().map(sqrt_psd).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::with_capacity(a.rows());
    for i in 0..a.rows() {
        let mut row = Vec::with_capacity(b.cols());
        for k in 0..b.cols() {
            let mut acc = HermitianMatrix::zeros(d);
            for j in 0..a.cols() {
                acc = &acc + &sandwich(roots[j][k].matrix(), a.block(i, j));
            }
            row.push(acc);
        }
        out.push(row);
    }
    Ok(BlockMatrix::from_blocks_unchecked(out))
}

/// Dual blockwise product `A *† B = (B† * A†)†`, which conjugates with the
/// left factor: `(A *† B)_{ik} = Σ_j √A_{ij} B_{jk} √A_{ij}`.
pub fn dual_blockwise_product(
    a: &BlockMatrix,
    b: &BlockMatrix,
) -> Result<BlockMatrix, DynamicsError> {
    check_product_shapes(a, b)?;
    let d = a.d();
    let roots: Vec<Vec<HermitianMatrix>> = a
        .blocks()
        .iter()
        .map(|row| row.iter().map(sqrt_psd).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::with_capacity(a.rows());
    for i in 0..a.rows() {
        let mut row = Vec::with_capacity(b.cols());
        for k in 0..b.cols() {
            let mut acc = HermitianMatrix::zeros(d);
            for j in 0..a.cols() {
                acc = &acc + &sandwich(roots[i][j].matrix(), b.block(j, k));
            }
            row.push(acc);
        }
        out.push(row);
    }
    Ok(BlockMatrix::from_blocks_unchecked(out))
}

/// `S * P` for a measurement, re-validated as a measurement.
pub fn apply_stochastic(s: &BlockMatrix, p: &Povm) -> Result<Povm, DynamicsError> {
    Ok(blockwise_product(s, &p.to_block())?.to_povm()?)
}

/// The `n = 2` map `Ξ(B, P) = √B P √B + √(1-B)(1-P)√(1-B)`: the first effect
/// of `((B,1-B),(1-B,B)) *† (P, 1-P)`.
pub fn xi_combination(b: &Effect, p: &Effect) -> Result<HermitianMatrix, DynamicsError> {
    if b.dim() != p.dim() {
        return Err(DynamicsError::BlockDimMismatch {
            left: b.dim(),
            right: p.dim(),
        });
    }
    let rb = sqrt_psd(b.matrix())?;
    let rbc = sqrt_psd(b.complement().matrix())?;
    let first = sandwich(rb.matrix(), p.matrix());
    let second = sandwich(rbc.matrix(), p.complement().matrix());
    Ok(&first + &second)
}

/// Row-shifted circulant grid with `blocks[i][j] = P_{(i+j) mod n}` (0-based).
///
/// The result is blockwise bistochastic and multiplying the fuzzy measurement
/// at slot 1 reproduces `P` exactly.
pub fn circulant_from_povm(p: &Povm) -> BlockMatrix {
    let n = p.n();
    let blocks = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| p.effect((i + j) % n).matrix().clone())
                .collect()
        })
        .collect();
    BlockMatrix::from_blocks_unchecked(blocks)
}

/// Post-measurement state under the non-filtering rule:
/// `(√P ρ √P / tr(Pρ), tr(Pρ))`.
pub fn luders_post_state(
    rho: &DensityMatrix,
    p: &Effect,
) -> Result<(DensityMatrix, f64), DynamicsError> {
    if rho.dim() != p.dim() {
        return Err(DynamicsError::BlockDimMismatch {
            left: rho.dim(),
            right: p.dim(),
        });
    }
    let prob = rho.expectation(p.matrix());
    if prob <= PROB_TOL {
        return Err(DynamicsError::OutcomeProbabilityZero { prob });
    }
    let root = sqrt_psd(p.matrix())?;
    let post = sandwich(root.matrix(), rho.matrix()).scale(1.0 / prob);
    Ok((DensityMatrix::new_unchecked(post), prob))
}

/// Joint statistics of a conditional two-stage measurement.
///
/// `joint[j][i]` is the probability of first outcome `j` then second outcome
/// `i`; `effective` is the single measurement `S * P` reproducing the second
/// marginal, which matches `tr(Q_i ρ)` by construction.
#[derive(Clone, Debug)]
pub struct TwoStageResult {
    pub joint: Vec<Vec<f64>>,
    pub effective: Povm,
    pub marginal_second: Vec<f64>,
}

/// Simulate measuring `P` on `rho`, then the column measurement `S_j` picked
/// by the first outcome.
pub fn two_stage_run(
    rho: &DensityMatrix,
    p: &Povm,
    s: &BlockMatrix,
) -> Result<TwoStageResult, DynamicsError> {
    if s.cols() != p.n() {
        return Err(DynamicsError::ShapeMismatch {
            left_rows: s.rows(),
            left_cols: s.cols(),
            right_rows: p.n(),
            right_cols: 1,
        });
    }
    if s.d() != p.d() || rho.dim() != p.d() {
        return Err(DynamicsError::BlockDimMismatch {
            left: s.d(),
            right: p.d(),
        });
    }
    let n_first = p.n();
    let n_second = s.rows();
    let mut joint = vec![vec![0.0; n_second]; n_first];
    for j in 0..n_first {
        let root_p = sqrt_psd(p.effect(j).matrix())?;
        // unnormalized post-measurement state of the first stage
        let conditional = sandwich(root_p.matrix(), rho.matrix());
        for i in 0..n_second {
            let v = seq_product(s.block(i, j), &conditional)?.trace();
            if v < -JOINT_NEG_TOL {
                return Err(DynamicsError::NegativeJointEntry {
                    row: j,
                    col: i,
                    value: v,
                });
            }
            joint[j][i] = v.max(0.0);
        }
    }
    let marginal_second = (0..n_second)
        .map(|i| (0..n_first).map(|j| joint[j][i]).sum())
        .collect();
    let effective = apply_stochastic(s, p)?;
    Ok(TwoStageResult {
        joint,
        effective,
        marginal_second,
    })
}

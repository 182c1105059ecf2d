//! Measurements as blockwise probability vectors, block matrices of effects,
//! density matrices, and the qubit cone geometry.
//!
//! A [`Povm`] is an ordered list of PSD effects summing to the identity. A
//! [`BlockMatrix`] is a grid of PSD blocks; whether it is blockwise stochastic
//! (block-columns sum to identity) or bistochastic (rows too) is computed on
//! demand from the data and never trusted from input files.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, eig_h, CMatrix, HermitianMatrix, LinalgError, C64, DEFAULT_TOL};

/// Entrywise deviation budget for identity-resolution checks. Chosen so that
/// products of validated objects pass without re-normalization while genuinely
/// broken inputs are rejected.
pub const SUM_TOL: f64 = 1e-9;
/// Trace deviation budget for density matrices.
pub const TRACE_TOL: f64 = 1e-10;

/// A single constraint violation found during validation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonPsdEffect {
        index: usize,
        lambda_min: f64,
    },
    NonPsdBlock {
        row: usize,
        col: usize,
        lambda_min: f64,
    },
    SumNotIdentity {
        max_deviation: f64,
    },
    EffectAboveIdentity {
        lambda_max: f64,
    },
    TraceNotOne {
        trace: f64,
    },
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    RaggedGrid,
    Empty,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NonPsdEffect { index, lambda_min } => {
                write!(
                    f,
                    "effect {index} is not PSD (lambda_min = {lambda_min:.3e})"
                )
            }
            Violation::NonPsdBlock {
                row,
                col,
                lambda_min,
            } => write!(
                f,
                "block ({row},{col}) is not PSD (lambda_min = {lambda_min:.3e})"
            ),
            Violation::SumNotIdentity { max_deviation } => write!(
                f,
                "sum deviates from identity by {max_deviation:.3e} entrywise"
            ),
            Violation::EffectAboveIdentity { lambda_max } => {
                write!(f, "effect exceeds identity (lambda_max = {lambda_max:.6})")
            }
            Violation::TraceNotOne { trace } => write!(f, "trace is {trace:.12}, not 1"),
            Violation::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Violation::RaggedGrid => write!(f, "block grid is not rectangular"),
            Violation::Empty => write!(f, "no components given"),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum PovmError {
    #[error("validation failed: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("operation requires dimension 2, got {dim}")]
    UnsupportedDimension { dim: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn format_violations(vs: &[Violation]) -> String {
    vs.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// One POVM component: a PSD Hermitian matrix `P` with `0 ≤ P ≤ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Effect {
    matrix: HermitianMatrix,
}

impl Effect {
    /// Validate `0 ≤ P ≤ 1` in the Löwner order within the default tolerance.
    pub fn new(matrix: HermitianMatrix) -> Result<Self, PovmError> {
        Self::with_tol(matrix, DEFAULT_TOL)
    }

    pub fn with_tol(matrix: HermitianMatrix, tol: f64) -> Result<Self, PovmError> {
        let es = eig_h(&matrix)?;
        let slack = linalg::psd_slack(&matrix, tol);
        let mut violations = Vec::new();
        if es.lambda_min() < -slack {
            violations.push(Violation::NonPsdEffect {
                index: 0,
                lambda_min: es.lambda_min(),
            });
        }
        if es.lambda_max() > 1.0 + slack {
            violations.push(Violation::EffectAboveIdentity {
                lambda_max: es.lambda_max(),
            });
        }
        if violations.is_empty() {
            Ok(Self { matrix })
        } else {
            Err(PovmError::Invalid(violations))
        }
    }

    pub(crate) fn new_unchecked(matrix: HermitianMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> HermitianMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Complement `1 - P`, again a valid effect.
    pub fn complement(&self) -> Effect {
        Effect {
            matrix: &HermitianMatrix::identity(self.dim()) - &self.matrix,
        }
    }
}

/// Blockwise probability vector: `n` PSD effects of size `d` summing to the
/// identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    d: usize,
    effects: Vec<Effect>,
}

impl Povm {
    /// Validate a list of Hermitian matrices as a measurement.
    ///
    /// All violated constraints are reported together: which effects fail the
    /// PSD test and how far the sum deviates from the identity.
    pub fn validate(effects: Vec<HermitianMatrix>, tol: f64) -> Result<Self, PovmError> {
        if effects.is_empty() {
            return Err(PovmError::Invalid(vec![Violation::Empty]));
        }
        let d = effects[0].dim();
        let mut violations = Vec::new();
        for e in &effects {
            if e.dim() != d {
                violations.push(Violation::DimensionMismatch {
                    expected: d,
                    found: e.dim(),
                });
            }
        }
        if !violations.is_empty() {
            return Err(PovmError::Invalid(violations));
        }
        let mut sum = HermitianMatrix::zeros(d);
        for (j, e) in effects.iter().enumerate() {
            let lmin = linalg::lambda_min(e)?;
            if lmin < -linalg::psd_slack(e, tol) {
                violations.push(Violation::NonPsdEffect {
                    index: j,
                    lambda_min: lmin,
                });
            }
            sum = &sum + e;
        }
        let dev = linalg::max_abs_diff(sum.matrix(), &CMatrix::identity(d, d));
        if dev > SUM_TOL.max(tol) {
            violations.push(Violation::SumNotIdentity { max_deviation: dev });
        }
        if violations.is_empty() {
            Ok(Self {
                d,
                effects: effects.into_iter().map(Effect::new_unchecked).collect(),
            })
        } else {
            Err(PovmError::Invalid(violations))
        }
    }

    pub(crate) fn from_effects_unchecked(effects: Vec<HermitianMatrix>) -> Self {
        let d = effects[0].dim();
        Self {
            d,
            effects: effects.into_iter().map(Effect::new_unchecked).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.effects.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn effect(&self, j: usize) -> &Effect {
        &self.effects[j]
    }

    /// View as the `n x 1` block matrix that the blockwise product consumes.
    pub fn to_block(&self) -> BlockMatrix {
        BlockMatrix {
            rows: self.n(),
            cols: 1,
            d: self.d,
            blocks: self
                .effects
                .iter()
                .map(|e| vec![e.matrix().clone()])
                .collect(),
        }
    }

    /// Effects reordered by a permutation (`result[k] = effects[perm[k]]`).
    pub fn permuted(&self, perm: &[usize]) -> Povm {
        Povm {
            d: self.d,
            effects: perm.iter().map(|&k| self.effects[k].clone()).collect(),
        }
    }
}

/// How a block matrix relates to the stochasticity hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    General,
    Stochastic,
    Bistochastic,
}

/// Grid of PSD blocks of uniform size `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    rows: usize,
    cols: usize,
    d: usize,
    blocks: Vec<Vec<HermitianMatrix>>,
}

impl BlockMatrix {
    /// Validate a rectangular grid of Hermitian matrices: uniform block size,
    /// every block PSD.
    pub fn validate(blocks: Vec<Vec<HermitianMatrix>>, tol: f64) -> Result<Self, PovmError> {
        if blocks.is_empty() || blocks[0].is_empty() {
            return Err(PovmError::Invalid(vec![Violation::Empty]));
        }
        let rows = blocks.len();
        let cols = blocks[0].len();
        if blocks.iter().any(|r| r.len() != cols) {
            return Err(PovmError::Invalid(vec![Violation::RaggedGrid]));
        }
        let d = blocks[0][0].dim();
        let mut violations = Vec::new();
        for row in &blocks {
            for b in row {
                if b.dim() != d {
                    violations.push(Violation::DimensionMismatch {
                        expected: d,
                        found: b.dim(),
                    });
                }
            }
        }
        if !violations.is_empty() {
            return Err(PovmError::Invalid(violations));
        }
        for (i, row) in blocks.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                let lmin = linalg::lambda_min(b)?;
                if lmin < -linalg::psd_slack(b, tol) {
                    violations.push(Violation::NonPsdBlock {
                        row: i,
                        col: j,
                        lambda_min: lmin,
                    });
                }
            }
        }
        if violations.is_empty() {
            Ok(Self {
                rows,
                cols,
                d,
                blocks,
            })
        } else {
            Err(PovmError::Invalid(violations))
        }
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<Vec<HermitianMatrix>>) -> Self {
        let rows = blocks.len();
        let cols = blocks[0].len();
        let d = blocks[0][0].dim();
        Self {
            rows,
            cols,
            d,
            blocks,
        }
    }

    /// Identity element of the blockwise product: identity blocks on the
    /// diagonal, zeros elsewhere.
    pub fn identity(n: usize, d: usize) -> Self {
        let blocks = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            HermitianMatrix::identity(d)
                        } else {
                            HermitianMatrix::zeros(d)
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            rows: n,
            cols: n,
            d,
            blocks,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn block(&self, i: usize, j: usize) -> &HermitianMatrix {
        &self.blocks[i][j]
    }

    pub fn blocks(&self) -> &[Vec<HermitianMatrix>] {
        &self.blocks
    }

    /// Sum of block-column `j`.
    pub fn column_sum(&self, j: usize) -> HermitianMatrix {
        let mut s = HermitianMatrix::zeros(self.d);
        for i in 0..self.rows {
            s = &s + &self.blocks[i][j];
        }
        s
    }

    /// Sum of block-row `i`.
    pub fn row_sum(&self, i: usize) -> HermitianMatrix {
        let mut s = HermitianMatrix::zeros(self.d);
        for j in 0..self.cols {
            s = &s + &self.blocks[i][j];
        }
        s
    }

    /// Largest entrywise deviation of any block-column sum from identity.
    pub fn column_deviation(&self) -> f64 {
        let id = CMatrix::identity(self.d, self.d);
        (0..self.cols)
            .map(|j| linalg::max_abs_diff(self.column_sum(j).matrix(), &id))
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation of any block-row sum from identity.
    pub fn row_deviation(&self) -> f64 {
        let id = CMatrix::identity(self.d, self.d);
        (0..self.rows)
            .map(|i| linalg::max_abs_diff(self.row_sum(i).matrix(), &id))
            .fold(0.0, f64::max)
    }

    pub fn is_column_stochastic(&self, tol: f64) -> bool {
        self.column_deviation() <= tol
    }

    pub fn is_bistochastic(&self, tol: f64) -> bool {
        self.rows == self.cols && self.is_column_stochastic(tol) && self.row_deviation() <= tol
    }

    /// Stochasticity kind, computed from the block sums. A bistochastic
    /// verdict additionally requires a square grid.
    pub fn kind(&self, tol: f64) -> BlockKind {
        if !self.is_column_stochastic(tol) {
            BlockKind::General
        } else if self.is_bistochastic(tol) {
            BlockKind::Bistochastic
        } else {
            BlockKind::Stochastic
        }
    }

    /// Reinterpret a single block-column as a measurement; the identity
    /// resolution is re-validated.
    pub fn to_povm(&self) -> Result<Povm, PovmError> {
        if self.cols != 1 {
            return Err(PovmError::Invalid(vec![Violation::DimensionMismatch {
                expected: 1,
                found: self.cols,
            }]));
        }
        Povm::validate(
            self.blocks.iter().map(|r| r[0].clone()).collect(),
            DEFAULT_TOL,
        )
    }

    /// Blockwise adjoint: transpose the grid (blocks are Hermitian already).
    pub fn block_transpose(&self) -> BlockMatrix {
        let blocks = (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.blocks[i][j].clone()).collect())
            .collect();
        BlockMatrix {
            rows: self.cols,
            cols: self.rows,
            d: self.d,
            blocks,
        }
    }

    /// Blockwise rescaling by a nonnegative factor.
    pub fn scale(&self, c: f64) -> BlockMatrix {
        BlockMatrix {
            rows: self.rows,
            cols: self.cols,
            d: self.d,
            blocks: self
                .blocks
                .iter()
                .map(|r| r.iter().map(|b| b.scale(c)).collect())
                .collect(),
        }
    }
}

impl std::ops::Add for &BlockMatrix {
    type Output = BlockMatrix;
    fn add(self, rhs: &BlockMatrix) -> BlockMatrix {
        assert_eq!(
            (self.rows, self.cols, self.d),
            (rhs.rows, rhs.cols, rhs.d),
            "block add: shape mismatch"
        );
        BlockMatrix {
            rows: self.rows,
            cols: self.cols,
            d: self.d,
            blocks: self
                .blocks
                .iter()
                .zip(&rhs.blocks)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| a + b).collect())
                .collect(),
        }
    }
}

/// PSD, trace-one Hermitian matrix: the state used for expectation values.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: HermitianMatrix) -> Result<Self, PovmError> {
        let mut violations = Vec::new();
        let lmin = linalg::lambda_min(&matrix)?;
        if lmin < -linalg::psd_slack(&matrix, DEFAULT_TOL) {
            violations.push(Violation::NonPsdEffect {
                index: 0,
                lambda_min: lmin,
            });
        }
        if (matrix.trace() - 1.0).abs() > TRACE_TOL {
            violations.push(Violation::TraceNotOne {
                trace: matrix.trace(),
            });
        }
        if violations.is_empty() {
            Ok(Self { matrix })
        } else {
            Err(PovmError::Invalid(violations))
        }
    }

    pub(crate) fn new_unchecked(matrix: HermitianMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Maximally mixed state `1/d`.
    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: HermitianMatrix::scaled_identity(d, 1.0 / d as f64),
        }
    }

    /// Outcome probability `tr(Pρ)`.
    pub fn expectation(&self, effect: &HermitianMatrix) -> f64 {
        (self.matrix.matrix() * effect.matrix()).trace().re
    }
}

/// Trace and Bloch-length coordinates of a qubit effect.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConeCoords {
    /// Trace coordinate `t = tr(P)`, in `[0, 2]` for valid qubit effects.
    pub t: f64,
    /// Bloch-vector length `τ = λ₊ - λ₋ ≥ 0`.
    pub tau: f64,
}

/// Fuzzy measurement: identity at slot `j` (1-based), zeros elsewhere.
pub fn fuzzy_povm(j: usize, n: usize, d: usize) -> Result<Povm, PovmError> {
    if j < 1 || j > n {
        return Err(PovmError::IndexOutOfRange { index: j, n });
    }
    let effects = (1..=n)
        .map(|k| {
            if k == j {
                HermitianMatrix::identity(d)
            } else {
                HermitianMatrix::zeros(d)
            }
        })
        .collect();
    Ok(Povm::from_effects_unchecked(effects))
}

/// The central measurement: every effect equals `1/n`.
pub fn uniform_povm(n: usize, d: usize) -> Povm {
    Povm::from_effects_unchecked(vec![HermitianMatrix::scaled_identity(d, 1.0 / n as f64); n])
}

/// The four canonical qubit measurements used throughout the test corpus.
pub struct PauliPovms {
    pub z: Povm,
    pub x: Povm,
    pub y: Povm,
    pub flat: Povm,
}

/// Projective Pauli measurements plus the flat measurement (`n = d = 2`).
pub fn pauli_povms() -> PauliPovms {
    let z = Povm::from_effects_unchecked(vec![
        HermitianMatrix::from_diagonal(&[1.0, 0.0]),
        HermitianMatrix::from_diagonal(&[0.0, 1.0]),
    ]);
    let x = Povm::from_effects_unchecked(vec![
        HermitianMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).expect("square"),
        HermitianMatrix::from_real_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]).expect("square"),
    ]);
    let y_plus = HermitianMatrix::new(CMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) | (1, 1) => C64::new(0.5, 0.0),
        (0, 1) => C64::new(0.0, -0.5),
        _ => C64::new(0.0, 0.5),
    }))
    .expect("square");
    let y_minus = &HermitianMatrix::identity(2) - &y_plus;
    let y = Povm::from_effects_unchecked(vec![y_plus, y_minus]);
    PauliPovms {
        z,
        x,
        y,
        flat: uniform_povm(2, 2),
    }
}

/// Trace and Bloch-length coordinates of a qubit effect.
pub fn cone_coordinates(p: &Effect) -> Result<ConeCoords, PovmError> {
    if p.dim() != 2 {
        return Err(PovmError::UnsupportedDimension { dim: p.dim() });
    }
    let es = eig_h(p.matrix())?;
    Ok(ConeCoords {
        t: p.matrix().trace(),
        tau: es.lambda_max() - es.lambda_min(),
    })
}

/// Membership in the qubit double cone: `τ ≤ min(t, 2 - t)`.
///
/// A slack of `1e-9` absorbs the validation budget of effects constructed
/// from floating-point arithmetic, so coordinates of any validated qubit
/// effect always pass.
pub fn is_valid_effect_region(t: f64, tau: f64) -> bool {
    tau <= t.min(2.0 - t) + 1e-9
}

// ---------------------------------------------------------------------------
// JSON encodings (consumed and produced by the CLI)
// ---------------------------------------------------------------------------

/// Complex scalar as a `[re, im]` pair; matrix as row-major rows.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmJson {
    pub n: usize,
    pub d: usize,
    pub effects: Vec<MatrixJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockMatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub d: usize,
    /// Outer index is the block row.
    pub blocks: Vec<Vec<MatrixJson>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub d: usize,
    pub matrix: MatrixJson,
}

pub fn matrix_to_json(h: &HermitianMatrix) -> MatrixJson {
    let d = h.dim();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let c = h.matrix()[(i, j)];
                    [c.re, c.im]
                })
                .collect()
        })
        .collect()
}

pub fn matrix_from_json(data: &MatrixJson, d: usize) -> Result<HermitianMatrix, PovmError> {
    if data.len() != d || data.iter().any(|r| r.len() != d) {
        return Err(PovmError::Invalid(vec![Violation::DimensionMismatch {
            expected: d,
            found: data.len(),
        }]));
    }
    Ok(HermitianMatrix::new(CMatrix::from_fn(d, d, |i, j| {
        C64::new(data[i][j][0], data[i][j][1])
    }))?)
}

impl Povm {
    pub fn to_json(&self) -> PovmJson {
        PovmJson {
            n: self.n(),
            d: self.d,
            effects: self
                .effects
                .iter()
                .map(|e| matrix_to_json(e.matrix()))
                .collect(),
        }
    }

    pub fn from_json(doc: &PovmJson, tol: f64) -> Result<Povm, PovmError> {
        if doc.effects.len() != doc.n {
            return Err(PovmError::Invalid(vec![Violation::DimensionMismatch {
                expected: doc.n,
                found: doc.effects.len(),
            }]));
        }
        let effects = doc
            .effects
            .iter()
            .map(|m| matrix_from_json(m, doc.d))
            .collect::<Result<Vec<_>, _>>()?;
        Povm::validate(effects, tol)
    }
}

impl BlockMatrix {
    pub fn to_json(&self) -> BlockMatrixJson {
        BlockMatrixJson {
            rows: self.rows,
            cols: self.cols,
            d: self.d,
            blocks: self
                .blocks
                .iter()
                .map(|r| r.iter().map(matrix_to_json).collect())
                .collect(),
        }
    }

    pub fn from_json(doc: &BlockMatrixJson, tol: f64) -> Result<BlockMatrix, PovmError> {
        if doc.blocks.len() != doc.rows || doc.blocks.iter().any(|r| r.len() != doc.cols) {
            return Err(PovmError::Invalid(vec![Violation::RaggedGrid]));
        }
        let blocks = doc
            .blocks
            .iter()
            .map(|r| {
                r.iter()
                    .map(|m| matrix_from_json(m, doc.d))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        BlockMatrix::validate(blocks, tol)
    }
}

impl DensityMatrix {
    pub fn to_json(&self) -> DensityMatrixJson {
        DensityMatrixJson {
            d: self.dim(),
            matrix: matrix_to_json(&self.matrix),
        }
    }

    pub fn from_json(doc: &DensityMatrixJson) -> Result<DensityMatrix, PovmError> {
        DensityMatrix::new(matrix_from_json(&doc.matrix, doc.d)?)
    }
}

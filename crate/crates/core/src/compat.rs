//! Joint measurability and its equivalence with convertibility.
//!
//! Two measurements are compatible when both are marginals of one mother
//! measurement. The constructions go in both directions: a stochastic matrix
//! yields the mother `M_ij = √P_j S_ij √P_j`, and a mother yields the
//! stochastic matrix `S_ij = √P_j⁻¹ M_ij √P_j⁻¹ + p_i R_j` with the inverse
//! taken on the support and `R_j` the kernel projector.
//!
//! Deciding compatibility searches for a mother measurement by Dykstra
//! alternating projections between the blockwise PSD cone and the affine
//! subspace of fixed marginals. Non-convergence is reported as `Unknown`,
//! never as infeasible: the only exact infeasibility certificate implemented
//! is commutation failure of projective measurements.

use thiserror::Error;

use crate::linalg::{self, eig_h, CMatrix, HermitianMatrix, LinalgError, DEFAULT_RANK_TOL};
use crate::povm::{BlockMatrix, Povm, PovmError};

/// Marginal and positivity budget for mother-measurement witnesses.
pub const MOTHER_TOL: f64 = 1e-8;
/// Default iteration budget for the projection loop.
pub const DEFAULT_BUDGET: usize = 5000;
/// Default convergence residual for `decide_compatibility`.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-7;
/// `‖E² - E‖₂` budget for counting an effect as a projector.
pub const PROJECTOR_TOL: f64 = 1e-9;
/// Commutator norm above which projective measurements are certified
/// incompatible.
pub const COMMUTATOR_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CompatError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("stochastic matrix required (column deviation {deviation:.3e})")]
    NotStochastic { deviation: f64 },
    #[error("mother marginal for column {col} deviates from the measurement by {deviation:.3e}")]
    MarginalMismatch { col: usize, deviation: f64 },
    #[error("distribution must be a probability vector of length {expected}")]
    BadDistribution { expected: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Povm(#[from] PovmError),
}

/// Joint measurement with both target measurements as its marginals:
/// block-column sums reproduce the first measurement, block-row sums the
/// second.
#[derive(Clone, Debug)]
pub struct MotherMeasurement {
    rows: usize,
    cols: usize,
    d: usize,
    blocks: Vec<Vec<HermitianMatrix>>,
}

impl MotherMeasurement {
    /// Validate a grid as a mother measurement of `p` (column marginals) and
    /// `q` (row marginals) within the witness budget.
    pub fn from_blocks(
        p: &Povm,
        q: &Povm,
        blocks: Vec<Vec<HermitianMatrix>>,
    ) -> Result<Self, CompatError> {
        let rows = q.n();
        let cols = p.n();
        if blocks.len() != rows || blocks.iter().any(|r| r.len() != cols) {
            return Err(CompatError::ShapeMismatch(format!(
                "expected {rows}x{cols} grid"
            )));
        }
        let d = p.d();
        let m = Self {
            rows,
            cols,
            d,
            blocks,
        };
        for j in 0..cols {
            let dev =
                linalg::max_abs_diff(m.column_marginal(j).matrix(), p.effect(j).matrix().matrix());
            if dev > MOTHER_TOL {
                return Err(CompatError::MarginalMismatch {
                    col: j,
                    deviation: dev,
                });
            }
        }
        for i in 0..rows {
            let dev =
                linalg::max_abs_diff(m.row_marginal(i).matrix(), q.effect(i).matrix().matrix());
            if dev > MOTHER_TOL {
                return Err(CompatError::MarginalMismatch {
                    col: i,
                    deviation: dev,
                });
            }
        }
        for row in &m.blocks {
            for b in row {
                let lmin = linalg::lambda_min(b)?;
                if lmin < -MOTHER_TOL {
                    return Err(CompatError::Povm(PovmError::Linalg(LinalgError::NotPsd {
                        lambda_min: lmin,
                    })));
                }
            }
        }
        Ok(m)
    }

    fn from_blocks_unchecked(blocks: Vec<Vec<HermitianMatrix>>) -> Self {
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

    /// `Σ_i M_ij`: the `j`-th effect of the first marginal measurement.
    pub fn column_marginal(&self, j: usize) -> HermitianMatrix {
        let mut s = HermitianMatrix::zeros(self.d);
        for i in 0..self.rows {
            s = &s + &self.blocks[i][j];
        }
        s
    }

    /// `Σ_j M_ij`: the `i`-th effect of the second marginal measurement.
    pub fn row_marginal(&self, i: usize) -> HermitianMatrix {
        let mut s = HermitianMatrix::zeros(self.d);
        for j in 0..self.cols {
            s = &s + &self.blocks[i][j];
        }
        s
    }
}

/// Exact incompatibility witness for projective measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct IncompatibilityCertificate {
    pub p_index: usize,
    pub q_index: usize,
    pub commutator_norm: f64,
}

/// Outcome of a compatibility decision.
#[derive(Clone, Debug)]
pub enum CompatVerdict {
    Feasible(Box<MotherMeasurement>),
    Infeasible(IncompatibilityCertificate),
    Unknown { iterations: usize, residual: f64 },
}

impl CompatVerdict {
    pub fn status(&self) -> &'static str {
        match self {
            CompatVerdict::Feasible(_) => "feasible",
            CompatVerdict::Infeasible(_) => "infeasible",
            CompatVerdict::Unknown { .. } => "unknown",
        }
    }
}

/// Mother measurement of `P` and `S * P`: `M_ij = √P_j S_ij √P_j`.
pub fn mother_from_stochastic(p: &Povm, s: &BlockMatrix) -> Result<MotherMeasurement, CompatError> {
    if s.cols() != p.n() || s.d() != p.d() {
        return Err(CompatError::ShapeMismatch(format!(
            "stochastic matrix is {}x{} over d={}, measurement has n={} d={}",
            s.rows(),
            s.cols(),
            s.d(),
            p.n(),
            p.d()
        )));
    }
    let dev = s.column_deviation();
    if dev > MOTHER_TOL {
        return Err(CompatError::NotStochastic { deviation: dev });
    }
    let roots: Vec<HermitianMatrix> = p
        .effects()
        .iter()
        .map(|e| linalg::sqrt_psd(e.matrix()))
        .collect::<Result<_, _>>()?;
    let blocks = (0..s.rows())
        .map(|i| {
            (0..s.cols())
                .map(|j| {
                    let m = roots[j].matrix() * s.block(i, j).matrix() * roots[j].matrix();
                    let adj = m.adjoint();
                    HermitianMatrix::from_hermitian_unchecked((m + adj).scale(0.5))
                })
                .collect()
        })
        .collect();
    Ok(MotherMeasurement::from_blocks_unchecked(blocks))
}

/// Invert the mother construction: `S_ij = √P_j⁻¹ M_ij √P_j⁻¹ + p_i R_j`,
/// with the inverse on the support of `P_j` and `R_j` its kernel projector.
pub fn stochastic_from_mother(
    p: &Povm,
    m: &MotherMeasurement,
    p_dist: &[f64],
) -> Result<BlockMatrix, CompatError> {
    if m.cols() != p.n() || m.d() != p.d() {
        return Err(CompatError::ShapeMismatch(format!(
            "mother is {}x{} over d={}, measurement has n={} d={}",
            m.rows(),
            m.cols(),
            m.d(),
            p.n(),
            p.d()
        )));
    }
    if p_dist.len() != m.rows()
        || p_dist.iter().any(|&w| w < -1e-12)
        || (p_dist.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(CompatError::BadDistribution { expected: m.rows() });
    }
    for j in 0..p.n() {
        let dev =
            linalg::max_abs_diff(m.column_marginal(j).matrix(), p.effect(j).matrix().matrix());
        if dev > MOTHER_TOL {
            return Err(CompatError::MarginalMismatch {
                col: j,
                deviation: dev,
            });
        }
    }
    let d = p.d();
    // per column: inverse square root on the support, and the kernel projector
    let mut inv_roots = Vec::with_capacity(p.n());
    let mut kernels = Vec::with_capacity(p.n());
    for e in p.effects() {
        let es = eig_h(e.matrix())?;
        let cut = DEFAULT_RANK_TOL * es.lambda_max();
        let inv_root = es.map_spectrum(|l| {
            if l > cut && l > 0.0 {
                1.0 / l.sqrt()
            } else {
                0.0
            }
        });
        let support = es.map_spectrum(|l| if l > cut && l > 0.0 { 1.0 } else { 0.0 });
        inv_roots.push(inv_root);
        kernels.push(&HermitianMatrix::identity(d) - &support);
    }
    let blocks = (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| {
                    let w = inv_roots[j].matrix() * m.block(i, j).matrix() * inv_roots[j].matrix();
                    let adj = w.adjoint();
                    let core = HermitianMatrix::from_hermitian_unchecked((w + adj).scale(0.5));
                    &core + &kernels[j].scale(p_dist[i])
                })
                .collect()
        })
        .collect();
    Ok(BlockMatrix::from_blocks_unchecked(blocks))
}

/// Commutation certificate for projective measurements: if every effect of
/// both inputs is a projector and some pair fails to commute, the
/// measurements are exactly incompatible. Empty for non-projective inputs.
pub fn projective_incompatibility_test(p: &Povm, q: &Povm) -> Option<IncompatibilityCertificate> {
    if p.d() != q.d() {
        return None;
    }
    let is_projective = |povm: &Povm| {
        povm.effects().iter().all(|e| {
            let m = e.matrix().matrix();
            linalg::max_abs_diff(&(m * m), m) <= PROJECTOR_TOL
        })
    };
    if !is_projective(p) || !is_projective(q) {
        return None;
    }
    let mut best: Option<IncompatibilityCertificate> = None;
    for (j, pe) in p.effects().iter().enumerate() {
        for (i, qe) in q.effects().iter().enumerate() {
            let a = pe.matrix().matrix();
            let b = qe.matrix().matrix();
            let norm = (a * b - b * a).norm();
            if norm > COMMUTATOR_TOL && best.as_ref().is_none_or(|c| norm > c.commutator_norm) {
                best = Some(IncompatibilityCertificate {
                    p_index: j,
                    q_index: i,
                    commutator_norm: norm,
                });
            }
        }
    }
    best
}

/// Decide whether `p` and `q` are jointly measurable.
///
/// Searches for a mother measurement with the two marginal families by
/// alternating projections between the blockwise PSD cone and the affine
/// marginal subspace, driven by Douglas-Rachford splitting. The loop always
/// tightens at least to the witness budget, so a feasible verdict carries a
/// witness passing [`MotherMeasurement::from_blocks`]. Budget exhaustion
/// yields `Unknown` with the final residual.
pub fn decide_compatibility(
    p: &Povm,
    q: &Povm,
    budget: usize,
    tol: f64,
) -> Result<CompatVerdict, CompatError> {
    if p.d() != q.d() {
        return Err(CompatError::ShapeMismatch(format!(
            "dimension mismatch: {} vs {}",
            p.d(),
            q.d()
        )));
    }
    if let Some(cert) = projective_incompatibility_test(p, q) {
        return Ok(CompatVerdict::Infeasible(cert));
    }
    let rows = q.n();
    let cols = p.n();
    let d = p.d();
    // product-coupling start: column marginals are exact, rows generally not
    let init: Vec<CMatrix> = (0..rows)
        .flat_map(|i| {
            (0..cols).map(move |j| {
                p.effect(j)
                    .matrix()
                    .matrix()
                    .scale(q.effect(i).matrix().trace() / d as f64)
            })
        })
        .collect();
    let problem = FeasibilityProblem {
        rows,
        cols,
        d,
        row_targets: q
            .effects()
            .iter()
            .map(|e| e.matrix().matrix().clone())
            .collect(),
        col_targets: p
            .effects()
            .iter()
            .map(|e| e.matrix().matrix().clone())
            .collect(),
        pin: None,
    };
    let target = tol.min(MOTHER_TOL / 2.0);
    let outcome = project_feasible(&problem, init, budget, target)?;
    if outcome.converged {
        match MotherMeasurement::from_blocks(p, q, outcome.blocks) {
            Ok(m) => Ok(CompatVerdict::Feasible(Box::new(m))),
            Err(_) => Ok(CompatVerdict::Unknown {
                iterations: outcome.iterations,
                residual: outcome.residual,
            }),
        }
    } else {
        Ok(CompatVerdict::Unknown {
            iterations: outcome.iterations,
            residual: outcome.residual,
        })
    }
}

// ---------------------------------------------------------------------------
// Feasibility search: Douglas-Rachford splitting over grids of blocks
// ---------------------------------------------------------------------------

/// Search for a grid of PSD blocks with prescribed block-row and block-column
/// sums, optionally with one block pinned to a fixed PSD value.
pub(crate) struct FeasibilityProblem {
    pub rows: usize,
    pub cols: usize,
    pub d: usize,
    pub row_targets: Vec<CMatrix>,
    pub col_targets: Vec<CMatrix>,
    /// `(row, col, value)` pinned inside the cone set; the pinned value must
    /// itself be PSD so pin-then-clamp is the exact projection.
    pub pin: Option<(usize, usize, CMatrix)>,
}

pub(crate) struct FeasibilityOutcome {
    /// Cone-exact shadow iterate, re-symmetrized.
    pub blocks: Vec<Vec<HermitianMatrix>>,
    pub iterations: usize,
    /// Entrywise marginal deviation of the shadow iterate.
    pub residual: f64,
    pub converged: bool,
}

/// Project every block onto the PSD cone (and apply the pin). The constraint
/// set is a product over blocks, so the projection decomposes blockwise.
fn cone_project(
    blocks: &[CMatrix],
    pin: &Option<(usize, usize, CMatrix)>,
    cols: usize,
) -> Result<Vec<CMatrix>, LinalgError> {
    let mut out = Vec::with_capacity(blocks.len());
    for (k, b) in blocks.iter().enumerate() {
        if let Some((pi, pj, value)) = pin {
            if k == pi * cols + pj {
                out.push(value.clone());
                continue;
            }
        }
        let h = HermitianMatrix::new(b.clone())?;
        let es = eig_h(&h)?;
        if es.lambda_min() < 0.0 {
            out.push(es.map_spectrum(|l| l.max(0.0)).into_matrix());
        } else {
            out.push(h.into_matrix());
        }
    }
    Ok(out)
}

/// Orthogonal projection onto the affine subspace of fixed block-row and
/// block-column sums:
/// `M_ij += dr_i/cols + dc_j/rows - Δ/(rows·cols)` where `dr`/`dc` are the
/// row and column deficits and `Δ` their common total.
pub(crate) fn affine_marginal_project(
    blocks: &mut [CMatrix],
    rows: usize,
    cols: usize,
    d: usize,
    row_targets: &[CMatrix],
    col_targets: &[CMatrix],
) {
    let mut dr: Vec<CMatrix> = row_targets.to_vec();
    for (i, def) in dr.iter_mut().enumerate() {
        for j in 0..cols {
            *def -= &blocks[i * cols + j];
        }
    }
    let mut dc: Vec<CMatrix> = col_targets.to_vec();
    for (j, def) in dc.iter_mut().enumerate() {
        for i in 0..rows {
            *def -= &blocks[i * cols + j];
        }
    }
    let mut total = CMatrix::zeros(d, d);
    for m in &dr {
        total += m;
    }
    let mut total_c = CMatrix::zeros(d, d);
    for m in &dc {
        total_c += m;
    }
    // consistent targets make the two totals agree; average out
    // floating-point asymmetry
    let total = (total + total_c).scale(0.5);
    let shared = total.scale(1.0 / (rows * cols) as f64);
    for i in 0..rows {
        for j in 0..cols {
            let delta = dr[i].scale(1.0 / cols as f64) + dc[j].scale(1.0 / rows as f64) - &shared;
            blocks[i * cols + j] += delta;
        }
    }
}

/// Entrywise deviation of the block-row and block-column sums from targets.
pub(crate) fn marginal_residual(
    blocks: &[CMatrix],
    rows: usize,
    cols: usize,
    d: usize,
    row_targets: &[CMatrix],
    col_targets: &[CMatrix],
) -> f64 {
    let mut worst = 0.0f64;
    for (i, t) in row_targets.iter().enumerate() {
        let mut s = CMatrix::zeros(d, d);
        for j in 0..cols {
            s += &blocks[i * cols + j];
        }
        worst = worst.max(linalg::max_abs_diff(&s, t));
    }
    for (j, t) in col_targets.iter().enumerate() {
        let mut s = CMatrix::zeros(d, d);
        for i in 0..rows {
            s += &blocks[i * cols + j];
        }
        worst = worst.max(linalg::max_abs_diff(&s, t));
    }
    worst
}

/// Douglas-Rachford splitting between the cone set (PSD blocks, optional pin)
/// and the affine marginal subspace:
/// `z ← z + Π_affine(2 Π_cone(z) - z) - Π_cone(z)`.
///
/// Both half-step iterates are monitored as solution candidates: the cone
/// shadow `Π_cone(z)` (PSD and pin exact, marginals within its residual) and
/// the affine-projected reflection (marginals exact, cone and pin within its
/// residual). Whichever first satisfies `tol` is returned; near-singular
/// marginals often admit an affine-side solution hundreds of times earlier
/// than the cone shadow. Dykstra-style corrected alternating projections
/// stall below residual `~1e-4` on a few percent of feasible desk-scale
/// instances, while this splitting converges within a few hundred cycles on
/// all of them.
pub(crate) fn project_feasible(
    problem: &FeasibilityProblem,
    init: Vec<CMatrix>,
    budget: usize,
    tol: f64,
) -> Result<FeasibilityOutcome, LinalgError> {
    let FeasibilityProblem {
        rows,
        cols,
        d,
        row_targets,
        col_targets,
        pin,
    } = problem;
    let (rows, cols, d) = (*rows, *cols, *d);
    let mut driver = init;
    let mut best_residual = f64::INFINITY;
    for cycle in 1..=budget {
        let shadow = cone_project(&driver, pin, cols)?;
        let cone_residual = marginal_residual(&shadow, rows, cols, d, row_targets, col_targets);
        if cone_residual <= tol {
            return Ok(FeasibilityOutcome {
                blocks: to_hermitian_grid(&shadow, rows, cols),
                iterations: cycle - 1,
                residual: cone_residual,
                converged: true,
            });
        }
        best_residual = best_residual.min(cone_residual);
        let mut reflected: Vec<CMatrix> = shadow
            .iter()
            .zip(&driver)
            .map(|(y, z)| y.scale(2.0) - z)
            .collect();
        affine_marginal_project(&mut reflected, rows, cols, d, row_targets, col_targets);
        // the affine-side candidate: marginals exact, check cone and pin
        let mut affine_violation = 0.0f64;
        for (k, b) in reflected.iter().enumerate() {
            if let Some((pi, pj, value)) = pin {
                if k == pi * cols + pj {
                    affine_violation = affine_violation.max(linalg::max_abs_diff(b, value));
                }
            }
            let h = HermitianMatrix::new(b.clone())?;
            affine_violation = affine_violation.max(-linalg::lambda_min(&h)?.min(0.0));
        }
        if affine_violation <= tol {
            return Ok(FeasibilityOutcome {
                blocks: to_hermitian_grid(&reflected, rows, cols),
                iterations: cycle,
                residual: affine_violation,
                converged: true,
            });
        }
        best_residual = best_residual.min(affine_violation);
        for ((z, w), y) in driver.iter_mut().zip(&reflected).zip(&shadow) {
            *z += w - y;
        }
    }
    let shadow = cone_project(&driver, pin, cols)?;
    let residual = marginal_residual(&shadow, rows, cols, d, row_targets, col_targets);
    Ok(FeasibilityOutcome {
        blocks: to_hermitian_grid(&shadow, rows, cols),
        iterations: budget,
        residual: residual.min(best_residual),
        converged: false,
    })
}

fn to_hermitian_grid(blocks: &[CMatrix], rows: usize, cols: usize) -> Vec<Vec<HermitianMatrix>> {
    (0..rows)
        .map(|i| {
            (0..cols)
                .map(|j| {
                    let m = &blocks[i * cols + j];
                    let adj = m.adjoint();
                    HermitianMatrix::from_hermitian_unchecked((m + adj).scale(0.5))
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, C64};
    use crate::povm::{pauli_povms, BlockKind, Povm, SUM_TOL};

    #[test]
    fn mother_from_identity_is_diagonal() {
        let p = pauli_povms().z;
        let m = mother_from_stochastic(&p, &BlockMatrix::identity(2, 2)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j {
                    p.effect(j).matrix().clone()
                } else {
                    HermitianMatrix::zeros(2)
                };
                assert!(max_abs_diff(m.block(i, j).matrix(), expected.matrix()) < 1e-12);
            }
        }
    }

    // First measurement P_X, conditional second measurements (P_Z, P_X):
    // row marginals are the effective measurement (P_{X+}/2, 1 - P_{X+}/2).
    #[test]
    fn mother_row_marginals_match_product() {
        let p = pauli_povms();
        let s = BlockMatrix::validate(
            vec![
                vec![
                    p.z.effect(0).matrix().clone(),
                    p.x.effect(0).matrix().clone(),
                ],
                vec![
                    p.z.effect(1).matrix().clone(),
                    p.x.effect(1).matrix().clone(),
                ],
            ],
            1e-9,
        )
        .unwrap();
        let m = mother_from_stochastic(&p.x, &s).unwrap();
        let xp_half = p.x.effect(0).matrix().scale(0.5);
        assert!(max_abs_diff(m.row_marginal(0).matrix(), xp_half.matrix()) < 1e-12);
        let second = &HermitianMatrix::identity(2) - &xp_half;
        assert!(max_abs_diff(m.row_marginal(1).matrix(), second.matrix()) < 1e-12);
        for j in 0..2 {
            assert!(
                max_abs_diff(
                    m.column_marginal(j).matrix(),
                    p.x.effect(j).matrix().matrix()
                ) < 1e-12
            );
        }
    }

    #[test]
    fn stochastic_from_diagonal_mother_full_rank() {
        // full-rank effects: S_ij = delta_ij support + p_i R_j = identity
        let e0 = HermitianMatrix::from_diagonal(&[0.7, 0.4]);
        let e1 = HermitianMatrix::from_diagonal(&[0.3, 0.6]);
        let p = Povm::validate(vec![e0, e1], 1e-9).unwrap();
        let m = mother_from_stochastic(&p, &BlockMatrix::identity(2, 2)).unwrap();
        let s = stochastic_from_mother(&p, &m, &[0.5, 0.5]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j {
                    HermitianMatrix::identity(2)
                } else {
                    HermitianMatrix::zeros(2)
                };
                assert!(max_abs_diff(s.block(i, j).matrix(), expected.matrix()) < 1e-9);
            }
        }
        assert_eq!(s.kind(SUM_TOL), BlockKind::Bistochastic);
    }

    #[test]
    fn rank_deficient_columns_still_sum_to_identity() {
        // second effect has a kernel direction, so R_j != 0 fills the gap
        let e0 = HermitianMatrix::from_diagonal(&[1.0, 0.5]);
        let e1 = HermitianMatrix::from_diagonal(&[0.0, 0.5]);
        let p = Povm::validate(vec![e0, e1], 1e-9).unwrap();
        let m = mother_from_stochastic(&p, &BlockMatrix::identity(2, 2)).unwrap();
        let s = stochastic_from_mother(&p, &m, &[0.25, 0.75]).unwrap();
        assert!(s.column_deviation() < 1e-9);
        // kernel projector of effect 1 is diag(1, 0), distributed by p_dist
        let expect_01 = HermitianMatrix::from_diagonal(&[0.25, 0.0]);
        assert!(max_abs_diff(s.block(0, 1).matrix(), expect_01.matrix()) < 1e-10);
    }

    #[test]
    fn projective_certificate_for_z_vs_x() {
        let p = pauli_povms();
        let cert = projective_incompatibility_test(&p.z, &p.x).unwrap();
        assert!((cert.commutator_norm - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!(projective_incompatibility_test(&p.z, &p.z).is_none());
        // non-projective inputs: inapplicable
        let u = crate::povm::uniform_povm(2, 2);
        assert!(projective_incompatibility_test(&p.z, &u).is_none());
    }

    #[test]
    fn compatibility_with_self_is_feasible() {
        let p = pauli_povms().z;
        // identical projective measurements commute, so no certificate fires
        let v = decide_compatibility(&p, &p, DEFAULT_BUDGET, DEFAULT_RESIDUAL_TOL).unwrap();
        match v {
            CompatVerdict::Feasible(m) => {
                assert!(m.column_marginal(0).trace() > 0.0);
            }
            other => panic!("expected feasible, got {}", other.status()),
        }
    }

    #[test]
    fn z_vs_x_is_infeasible() {
        let p = pauli_povms();
        let v = decide_compatibility(&p.z, &p.x, DEFAULT_BUDGET, DEFAULT_RESIDUAL_TOL).unwrap();
        assert!(matches!(v, CompatVerdict::Infeasible(_)));
    }

    // Brute-force least-squares check of the closed-form marginal projection
    // on a 2x2 grid of scalars: x' = x + A^T (A A^T)^+ (b - A x).
    #[test]
    fn marginal_projection_matches_least_squares() {
        use nalgebra::DMatrix;
        let x0 = [0.3, -0.2, 0.9, 0.4];
        let (r1, r2, c1, c2) = (0.55, 0.45, 0.7, 0.3);
        let a = DMatrix::<f64>::from_row_slice(
            4,
            4,
            &[
                1.0, 1.0, 0.0, 0.0, // row 1 sum
                0.0, 0.0, 1.0, 1.0, // row 2 sum
                1.0, 0.0, 1.0, 0.0, // col 1 sum
                0.0, 1.0, 0.0, 1.0, // col 2 sum
            ],
        );
        let b = nalgebra::DVector::from_row_slice(&[r1, r2, c1, c2]);
        let x = nalgebra::DVector::from_row_slice(&x0);
        let gram = &a * a.transpose();
        let pinv = gram.pseudo_inverse(1e-12).unwrap();
        let expected = &x + a.transpose() * pinv * (b - &a * x.clone());

        let scalar = |v: f64| CMatrix::from_fn(1, 1, |_, _| C64::new(v, 0.0));
        let mut blocks: Vec<CMatrix> = x0.iter().map(|&v| scalar(v)).collect();
        let row_targets = vec![scalar(r1), scalar(r2)];
        let col_targets = vec![scalar(c1), scalar(c2)];
        affine_marginal_project(&mut blocks, 2, 2, 1, &row_targets, &col_targets);
        for (k, blk) in blocks.iter().enumerate() {
            assert!(
                (blk[(0, 0)].re - expected[k]).abs() < 1e-12,
                "entry {k}: {} vs {}",
                blk[(0, 0)].re,
                expected[k]
            );
        }
        assert!(marginal_residual(&blocks, 2, 2, 1, &row_targets, &col_targets) < 1e-12);
    }

    #[test]
    fn marginal_projection_hits_targets_for_complex_blocks() {
        let p = pauli_povms();
        let row_targets = vec![
            p.x.effect(0).matrix().matrix().clone(),
            p.x.effect(1).matrix().matrix().clone(),
        ];
        let col_targets = vec![
            p.z.effect(0).matrix().matrix().clone(),
            p.z.effect(1).matrix().matrix().clone(),
        ];
        let mut blocks = vec![CMatrix::zeros(2, 2); 4];
        affine_marginal_project(&mut blocks, 2, 2, 2, &row_targets, &col_targets);
        assert!(marginal_residual(&blocks, 2, 2, 2, &row_targets, &col_targets) < 1e-12);
    }
}

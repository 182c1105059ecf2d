//! Majorization between measurements, classical post-processing, entropy
//! monotones, and the cumulative-norm profile comparison.
//!
//! A measurement is *sortable* when its effects form a Löwner chain
//! `1 ≥ P_1 ≥ ... ≥ P_n ≥ 0`. For sortable `P`, operator majorization
//! `P ≻ Q` means every cumulative effect sum dominates in the Löwner order
//! with equality at `k = n`. The converse direction is decided on the probe
//! family of fuzzy and uniform measurements, which is exactly what forces a
//! stochastic matrix to be bistochastic.

use itertools::Itertools;
use thiserror::Error;

use crate::linalg::{self, hs_norm, loewner_leq, sqrt_psd, HermitianMatrix, LinalgError};
use crate::povm::{BlockMatrix, DensityMatrix, Povm, PovmError};

/// Probabilities at or below this floor count as zero for entropy purposes.
pub const ENTROPY_PROB_TOL: f64 = 1e-15;
/// Largest outcome count accepted by the factorial ordering search.
pub const CONJECTURE_MAX_N: usize = 6;

#[derive(Debug, Error)]
pub enum MajorizationError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("ordering is not a permutation of 0..{n}")]
    NotAPermutation { n: usize },
    #[error("majorization precondition violated: {detail}")]
    MajorizationFailure { detail: String },
    #[error("outcome count {n} exceeds the factorial search limit {CONJECTURE_MAX_N}")]
    CombinatorialLimit { n: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Povm(#[from] PovmError),
}

/// Outcome of an operator majorization check.
///
/// `k_values[k-1]` is the minimal eigenvalue of `Σ_{j≤k} (P_j - Q_j)`;
/// `equality_residual` is the Hilbert-Schmidt norm of the full sum, which
/// must vanish. The relation holds when every partial sum is PSD within
/// tolerance and the `k = n` sum is zero within tolerance.
#[derive(Clone, Debug)]
pub struct MajorizationReport {
    pub holds: bool,
    pub k_values: Vec<f64>,
    pub equality_residual: f64,
}

impl MajorizationReport {
    /// Worst cumulative eigenvalue over `k < n`.
    pub fn min_k_value(&self) -> f64 {
        let n = self.k_values.len();
        self.k_values[..n.saturating_sub(1)]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Search for a permutation sorting the effects into a Löwner chain.
///
/// Pairwise comparisons build a comparability digraph; if some pair is
/// incomparable there is no chain and the result is empty. Otherwise indices
/// are sorted by strict dominance with ties broken by original index, and the
/// resulting consecutive chain is re-verified against tolerance artifacts.
pub fn sortable_order(p: &Povm, tol: f64) -> Result<Option<Vec<usize>>, MajorizationError> {
    let n = p.n();
    let mut leq = vec![vec![false; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                leq[a][b] = loewner_leq(p.effect(a).matrix(), p.effect(b).matrix(), tol)?;
            }
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if !leq[a][b] && !leq[b][a] {
                return Ok(None);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let a_dominates = leq[b][a] && !leq[a][b];
        let b_dominates = leq[a][b] && !leq[b][a];
        match (a_dominates, b_dominates) {
            (true, false) => std::cmp::Ordering::Less,
            (false, true) => std::cmp::Ordering::Greater,
            _ => a.cmp(&b),
        }
    });
    // near-degenerate comparisons can break transitivity; trust only a
    // verified chain
    for w in order.windows(2) {
        if !leq[w[1]][w[0]] {
            return Ok(None);
        }
    }
    Ok(Some(order))
}

/// Operator majorization `P ≻ Q` for a pre-sorted `P`.
///
/// The ordering of `Q` is taken as given; callers probing "any ordering"
/// enumerate orderings themselves or use [`bistochastic_necessity_check`].
pub fn operator_majorizes(
    p: &Povm,
    q: &Povm,
    tol: f64,
) -> Result<MajorizationReport, MajorizationError> {
    if p.n() != q.n() || p.d() != q.d() {
        return Err(MajorizationError::ShapeMismatch(format!(
            "(n={}, d={}) vs (n={}, d={})",
            p.n(),
            p.d(),
            q.n(),
            q.d()
        )));
    }
    let n = p.n();
    let mut partial = HermitianMatrix::zeros(p.d());
    let mut k_values = Vec::with_capacity(n);
    for k in 0..n {
        partial = &partial + &(p.effect(k).matrix() - q.effect(k).matrix());
        k_values.push(linalg::lambda_min(&partial)?);
    }
    let equality_residual = hs_norm(&partial);
    let min_prefix = k_values[..n - 1]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let holds = (n == 1 || min_prefix >= -tol) && equality_residual <= tol;
    Ok(MajorizationReport {
        holds,
        k_values,
        equality_residual,
    })
}

/// Which probe measurement exposed the violation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Probe {
    /// Fuzzy measurement at column `col`: tests the column identity sum.
    Fuzzy { col: usize },
    /// Uniform measurement: tests that block-row `row` stays below identity.
    Uniform { row: usize },
}

/// Verdict of the necessity check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NecessityVerdict {
    Bistochastic,
    /// `deficit` is the residual that failed: the most negative eigenvalue of
    /// `1 - row sum` for the uniform probe, or the column equality residual
    /// for a fuzzy probe.
    Violation {
        probe: Probe,
        deficit: f64,
    },
}

/// Decide bistochasticity of a column-stochastic matrix through the probe
/// family: fuzzy measurements force the column sums, the uniform measurement
/// forces every block-row below identity, and together with the total-sum
/// identity the rows are pinned to identity exactly.
///
/// A non-square grid can never be bistochastic; it is reported against the
/// uniform probe with its worst row.
pub fn bistochastic_necessity_check(s: &BlockMatrix, tol: f64) -> NecessityVerdict {
    let d = s.d();
    let id = HermitianMatrix::identity(d);
    for j in 0..s.cols() {
        let residual = linalg::max_abs_diff(s.column_sum(j).matrix(), id.matrix());
        if residual > tol {
            return NecessityVerdict::Violation {
                probe: Probe::Fuzzy { col: j },
                deficit: residual,
            };
        }
    }
    let mut worst: Option<(usize, f64)> = None;
    for i in 0..s.rows() {
        let gap = &id - &s.row_sum(i);
        let lmin = linalg::lambda_min(&gap).unwrap_or(f64::NEG_INFINITY);
        if worst.is_none() || lmin < worst.unwrap().1 {
            worst = Some((i, lmin));
        }
    }
    let (row, deficit) = worst.expect("at least one row");
    if s.rows() != s.cols() || deficit < -tol {
        return NecessityVerdict::Violation {
            probe: Probe::Uniform { row },
            deficit,
        };
    }
    NecessityVerdict::Bistochastic
}

/// Classical majorization `p ≻ q`: all prefix sums of the descending
/// rearrangements dominate within `tol`.
pub fn classical_majorizes(p: &[f64], q: &[f64], tol: f64) -> Result<bool, MajorizationError> {
    if p.len() != q.len() {
        return Err(MajorizationError::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut ps = p.to_vec();
    let mut qs = q.to_vec();
    ps.sort_by(|a, b| b.total_cmp(a));
    qs.sort_by(|a, b| b.total_cmp(a));
    let mut cp = 0.0;
    let mut cq = 0.0;
    for (a, b) in ps.iter().zip(&qs) {
        cp += a;
        cq += b;
        if cp < cq - tol {
            return Ok(false);
        }
    }
    Ok(true)
}

const TT_EQ_TOL: f64 = 1e-12;

/// Classical post-processing witness: a bistochastic matrix `B` with
/// `Bp = q`, built as a composition of at most `n - 1` T-transforms, each
/// mixing two coordinates.
pub fn bistochastic_from_majorization(
    p: &[f64],
    q: &[f64],
) -> Result<Vec<Vec<f64>>, MajorizationError> {
    let n = p.len();
    if q.len() != n {
        return Err(MajorizationError::LengthMismatch {
            left: n,
            right: q.len(),
        });
    }
    if !classical_majorizes(p, q, 1e-10)? {
        return Err(MajorizationError::MajorizationFailure {
            detail: "p does not majorize q".into(),
        });
    }
    let mut sort_p: Vec<usize> = (0..n).collect();
    sort_p.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
    let mut sort_q: Vec<usize> = (0..n).collect();
    sort_q.sort_by(|&a, &b| q[b].total_cmp(&q[a]));
    let mut x: Vec<f64> = sort_p.iter().map(|&k| p[k]).collect();
    let y: Vec<f64> = sort_q.iter().map(|&k| q[k]).collect();

    // T-transform composition on the sorted copies
    let mut b_sorted = identity_matrix(n);
    for _ in 0..n.saturating_sub(1) {
        let Some(j) = (0..n).rev().find(|&j| x[j] > y[j] + TT_EQ_TOL) else {
            break;
        };
        let Some(k) = ((j + 1)..n).find(|&k| x[k] < y[k] - TT_EQ_TOL) else {
            break;
        };
        let delta = (x[j] - y[j]).min(y[k] - x[k]);
        let lambda = 1.0 - delta / (x[j] - x[k]);
        let (xj, xk) = (x[j], x[k]);
        x[j] = lambda * xj + (1.0 - lambda) * xk;
        x[k] = (1.0 - lambda) * xj + lambda * xk;
        // left-multiply by the T-transform acting on rows j and k
        for col in 0..n {
            let (rj, rk) = (b_sorted[j][col], b_sorted[k][col]);
            b_sorted[j][col] = lambda * rj + (1.0 - lambda) * rk;
            b_sorted[k][col] = (1.0 - lambda) * rj + lambda * rk;
        }
    }

    // undo the sorting permutations: B = P_q^T · B_sorted · P_p
    let mut pos_q = vec![0usize; n];
    for (k, &orig) in sort_q.iter().enumerate() {
        pos_q[orig] = k;
    }
    let mut pos_p = vec![0usize; n];
    for (k, &orig) in sort_p.iter().enumerate() {
        pos_p[orig] = k;
    }
    let b: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| b_sorted[pos_q[i]][pos_p[j]]).collect())
        .collect();

    let worst = (0..n)
        .map(|i| {
            let bi: f64 = (0..n).map(|j| b[i][j] * p[j]).sum();
            (bi - q[i]).abs()
        })
        .fold(0.0, f64::max);
    if worst > 1e-10 {
        return Err(MajorizationError::MajorizationFailure {
            detail: format!("post-processing residual {worst:.3e} exceeds 1e-10"),
        });
    }
    Ok(b)
}

fn identity_matrix(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Ordering for the state-dependent majorization: sort the effects so that
/// `λ_min(√P_r ρ √P_r)` is non-increasing, ties broken by original index.
/// Such an ordering always exists because real scalars sort.
pub fn state_dep_precondition(
    p: &Povm,
    rho: &DensityMatrix,
) -> Result<Vec<usize>, MajorizationError> {
    let mut scores = Vec::with_capacity(p.n());
    for e in p.effects() {
        let root = sqrt_psd(e.matrix())?;
        let conj = HermitianMatrix::new(root.matrix() * rho.matrix().matrix() * root.matrix())?;
        scores.push(linalg::lambda_min(&conj)?);
    }
    let mut order: Vec<usize> = (0..p.n()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(order)
}

/// State-dependent entropy monotone
/// `E_ρ(P) = -Σ_j log tr(P_j ρ) - n log n`: the log divergence of the
/// outcome distribution from uniform.
///
/// The log-product `Σ log p_j` is Schur-concave, so under bistochastic
/// post-processing (`p ≻ q`) this divergence never increases:
/// `E_ρ(P) ≥ E_ρ(B*P)`, with `E_ρ(P_u) = 0` for every state.
/// Zero-probability outcomes give `+∞` (maximally resourceful) rather than
/// an error so monotone comparisons stay evaluable.
pub fn entropy_monotone(p: &Povm, rho: &DensityMatrix) -> f64 {
    let n = p.n() as f64;
    let mut total = -(n * n.ln());
    for e in p.effects() {
        let prob = rho.expectation(e.matrix());
        if prob <= ENTROPY_PROB_TOL {
            return f64::INFINITY;
        }
        total -= prob.ln();
    }
    total
}

/// Resolution parameters for the state-independent monotone search.
#[derive(Clone, Copy, Debug)]
pub struct MonotoneSearchConfig {
    /// Points of the deterministic qubit sphere grid.
    pub grid: usize,
    /// Local refinement iterations after the grid pass.
    pub refine_iters: usize,
    /// Random pure states for `d > 2`.
    pub samples: usize,
    /// Seed for the `d > 2` random search.
    pub seed: u64,
}

impl Default for MonotoneSearchConfig {
    fn default() -> Self {
        Self {
            grid: 2048,
            refine_iters: 48,
            samples: 4096,
            seed: 0,
        }
    }
}

/// Result of the state-independent monotone search. `certified` is false for
/// the `d > 2` random search, which is best effort only.
#[derive(Clone, Copy, Debug)]
pub struct MonotoneSearchResult {
    pub value: f64,
    pub certified: bool,
}

/// State-independent monotone: the divergence [`entropy_monotone`] extremized
/// over all states.
///
/// `E_ρ(P)` is convex in `ρ` (a sum of `-log` of affine functions), so its
/// extremum over the state set is attained on pure states and only those are
/// searched. Any effect with a kernel direction gives `+∞` immediately: the
/// kernel eigenvector is a pure state with a zero-probability outcome. For
/// `d = 2` the search is a deterministic Fibonacci sphere grid with local
/// refinement; for `d > 2` it is a seeded random pure-state sweep.
pub fn state_independent_monotone(
    p: &Povm,
    config: &MonotoneSearchConfig,
) -> Result<MonotoneSearchResult, MajorizationError> {
    let d = p.d();
    for e in p.effects() {
        let lmin = linalg::lambda_min(e.matrix())?;
        if lmin <= linalg::psd_slack(e.matrix(), linalg::DEFAULT_TOL) {
            return Ok(MonotoneSearchResult {
                value: f64::INFINITY,
                certified: true,
            });
        }
    }
    if d == 1 {
        return Ok(MonotoneSearchResult {
            value: entropy_monotone(p, &DensityMatrix::maximally_mixed(1)),
            certified: true,
        });
    }
    if d == 2 {
        let eval = |theta: f64, phi: f64| -> f64 {
            let rho = bloch_pure(theta, phi);
            entropy_monotone(p, &rho)
        };
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for k in 0..config.grid {
            // Fibonacci sphere: uniform in cos(theta), golden-angle azimuth
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / config.grid as f64;
            let theta = z.acos();
            let phi = 2.0 * std::f64::consts::PI * (k as f64 * 0.618_033_988_749_894_9).fract();
            let v = eval(theta, phi);
            if v > best.0 {
                best = (v, theta, phi);
            }
        }
        let (mut value, mut theta, mut phi) = best;
        let mut radius = 2.0 * std::f64::consts::PI / (config.grid as f64).sqrt();
        for _ in 0..config.refine_iters {
            let mut improved = false;
            for (dt, dp) in [
                (radius, 0.0),
                (-radius, 0.0),
                (0.0, radius),
                (0.0, -radius),
                (radius, radius),
                (radius, -radius),
                (-radius, radius),
                (-radius, -radius),
            ] {
                let v = eval(theta + dt, phi + dp);
                if v > value {
                    value = v;
                    theta += dt;
                    phi += dp;
                    improved = true;
                }
            }
            if !improved {
                radius *= 0.5;
            }
        }
        return Ok(MonotoneSearchResult {
            value,
            certified: true,
        });
    }
    // d > 2: seeded random search, not certified
    let mut rng = crate::sampling::SeededRng::new(config.seed);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..config.samples {
        let rho = crate::sampling::random_pure(d, &mut rng);
        best = best.max(entropy_monotone(p, &rho));
    }
    Ok(MonotoneSearchResult {
        value: best,
        certified: false,
    })
}

fn bloch_pure(theta: f64, phi: f64) -> DensityMatrix {
    use crate::linalg::{CMatrix, C64};
    let (st, ct) = (theta.sin(), theta.cos());
    let (sp, cp) = (phi.sin(), phi.cos());
    let (x, y, z) = (st * cp, st * sp, ct);
    let m = CMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => C64::new((1.0 + z) / 2.0, 0.0),
        (1, 1) => C64::new((1.0 - z) / 2.0, 0.0),
        (0, 1) => C64::new(x / 2.0, -y / 2.0),
        _ => C64::new(x / 2.0, y / 2.0),
    });
    DensityMatrix::new_unchecked(HermitianMatrix::from_hermitian_unchecked(m))
}

/// Cumulative Hilbert-Schmidt distances from the uniform measurement:
/// `values[k-1] = ‖Σ_{i≤k} (P_{ord(i)} - 1/n)‖₂`. The full sum telescopes to
/// zero.
#[derive(Clone, Debug, PartialEq)]
pub struct NormProfile {
    pub values: Vec<f64>,
}

/// Norm profile of `p` under the given 0-based ordering.
pub fn norm_profile(p: &Povm, ordering: &[usize]) -> Result<NormProfile, MajorizationError> {
    let n = p.n();
    if !is_permutation(ordering, n) {
        return Err(MajorizationError::NotAPermutation { n });
    }
    let center = HermitianMatrix::scaled_identity(p.d(), 1.0 / n as f64);
    let mut partial = HermitianMatrix::zeros(p.d());
    let mut values = Vec::with_capacity(n);
    for &idx in ordering {
        partial = &partial + &(p.effect(idx).matrix() - &center);
        values.push(hs_norm(&partial));
    }
    Ok(NormProfile { values })
}

fn is_permutation(ordering: &[usize], n: usize) -> bool {
    if ordering.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &i in ordering {
        if i >= n || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

/// Which quantifier structure the profile comparison uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConjectureReading {
    /// One ordering of `P` must dominate at every `k` simultaneously.
    Joint,
    /// Each `k` may use its own ordering of `P`.
    PerK,
}

/// Outcome of the profile-domination check.
#[derive(Clone, Debug, PartialEq)]
pub enum ConjectureVerdict {
    Holds,
    Violated { ordering_q: Vec<usize>, margin: f64 },
}

/// Check that for every ordering of `Q` some ordering of `P` dominates the
/// norm profile at every prefix (`Joint`), or at each prefix separately
/// (`PerK`). All `n!` orderings are enumerated, so `n` is capped.
pub fn conjecture_check(
    p: &Povm,
    q: &Povm,
    tol: f64,
    reading: ConjectureReading,
) -> Result<ConjectureVerdict, MajorizationError> {
    if p.n() != q.n() || p.d() != q.d() {
        return Err(MajorizationError::ShapeMismatch(format!(
            "(n={}, d={}) vs (n={}, d={})",
            p.n(),
            p.d(),
            q.n(),
            q.d()
        )));
    }
    let n = p.n();
    if n > CONJECTURE_MAX_N {
        return Err(MajorizationError::CombinatorialLimit { n });
    }
    let orderings: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let p_profiles: Vec<Vec<f64>> = orderings
        .iter()
        .map(|ord| norm_profile(p, ord).map(|np| np.values))
        .collect::<Result<_, _>>()?;
    // per-k envelope over all orderings of P
    let envelope: Vec<f64> = (0..n)
        .map(|k| {
            p_profiles
                .iter()
                .map(|prof| prof[k])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let mut worst: Option<(Vec<usize>, f64)> = None;
    for ord_q in &orderings {
        let q_profile = norm_profile(q, ord_q)?.values;
        let dominated = match reading {
            ConjectureReading::Joint => p_profiles
                .iter()
                .any(|prof| prof.iter().zip(&q_profile).all(|(pv, qv)| *pv >= qv - tol)),
            ConjectureReading::PerK => envelope
                .iter()
                .zip(&q_profile)
                .all(|(pv, qv)| *pv >= qv - tol),
        };
        if !dominated {
            // worst shortfall for this ordering of Q, under the best P cover
            let margin = match reading {
                ConjectureReading::Joint => p_profiles
                    .iter()
                    .map(|prof| {
                        prof.iter()
                            .zip(&q_profile)
                            .map(|(pv, qv)| qv - pv)
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .fold(f64::INFINITY, f64::min),
                ConjectureReading::PerK => envelope
                    .iter()
                    .zip(&q_profile)
                    .map(|(pv, qv)| qv - pv)
                    .fold(f64::NEG_INFINITY, f64::max),
            };
            if worst.is_none() || margin > worst.as_ref().unwrap().1 {
                worst = Some((ord_q.clone(), margin));
            }
        }
    }
    Ok(match worst {
        None => ConjectureVerdict::Holds,
        Some((ordering_q, margin)) => ConjectureVerdict::Violated { ordering_q, margin },
    })
}

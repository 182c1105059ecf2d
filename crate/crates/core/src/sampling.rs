//! Seeded random generation of effects, measurements, block matrices and
//! states.
//!
//! Reproducibility is a hard requirement here: the generator is ChaCha12
//! seeded from a `u64`, uniforms are the top 53 bits of the stream, and
//! Gaussians come from a Box-Muller pair of uniforms. Identical seeds give
//! entrywise-identical samples on every platform for a fixed build. Worker
//! streams are derived with a SplitMix64 finalizer so parallel drivers can
//! hand out independent substreams without sharing state.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::compat::{project_feasible, FeasibilityProblem};
use crate::dynamics;
use crate::linalg::{self, CMatrix, HermitianMatrix, LinalgError, C64};
use crate::povm::{fuzzy_povm, uniform_povm, BlockMatrix, DensityMatrix, Effect, Povm, PovmError};

/// Bistochastic validation budget for sampled block matrices.
pub const BISTOCHASTIC_TOL: f64 = 1e-8;
/// Projection cycle budget for the bistochastic completion.
pub const COMPLETION_BUDGET: usize = 20_000;
/// Completion convergence target. Much tighter than the validation budget so
/// that blockwise products of completed samples still pass the measurement
/// identity-sum budget without renormalization.
const COMPLETION_TARGET: f64 = 1e-10;
const RENORMALIZER_RETRIES: usize = 10;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("renormalizer stayed singular after {RENORMALIZER_RETRIES} retries")]
    SingularRenormalizer,
    #[error(
        "bistochastic completion did not converge within {budget} cycles (residual {residual:.3e})"
    )]
    CompletionBudgetExhausted { budget: usize, residual: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Povm(#[from] PovmError),
}

/// Deterministic seeded stream of uniforms and standard normals.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    rng: ChaCha12Rng,
    spare_gaussian: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha12Rng::seed_from_u64(seed),
            spare_gaussian: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform in `[0, 1)` from the top 53 bits of the stream.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via the Box-Muller transform; the paired variate is
    /// cached so consecutive calls consume two uniforms per pair.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare_gaussian.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_gaussian = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Independent child stream for worker `index`:
    /// `child_seed = splitmix64(seed ⊕ golden · (index + 1))`.
    pub fn child(&self, index: u64) -> SeededRng {
        SeededRng::new(mix_seed(self.seed, index))
    }
}

/// SplitMix64 finalizer over the seed and a stream index.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Square matrix with independent standard complex Gaussian entries.
pub fn ginibre_matrix(d: usize, rng: &mut SeededRng) -> CMatrix {
    // row-major draw order so the stream layout is part of the pinned format
    let mut entries = Vec::with_capacity(d * d);
    for _ in 0..d * d {
        let re = rng.gaussian();
        let im = rng.gaussian();
        entries.push(C64::new(re, im));
    }
    CMatrix::from_fn(d, d, |i, j| entries[i * d + j])
}

/// `X†X` for a Ginibre `X`: PSD, full rank almost surely.
fn wishart(d: usize, rng: &mut SeededRng) -> HermitianMatrix {
    let x = ginibre_matrix(d, rng);
    let m = x.adjoint() * &x;
    let adj = m.adjoint();
    HermitianMatrix::from_hermitian_unchecked((m + adj).scale(0.5))
}

/// Random effect `P = t · X†X / tr(X†X)` with `t` uniform on `[0, 1]`.
///
/// The trace equals `t`, and `λ_max ≤ tr ≤ 1` makes the output a valid
/// effect by construction.
pub fn ginibre_effect(d: usize, rng: &mut SeededRng) -> Effect {
    let w = wishart(d, rng);
    let t = rng.uniform();
    Effect::new_unchecked(w.scale(t / w.trace()))
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix,
/// with the phases of the diagonal of `R` absorbed to make it unique.
pub fn random_unitary(d: usize, rng: &mut SeededRng) -> CMatrix {
    let qr = ginibre_matrix(d, rng).qr();
    let r = qr.r();
    let q = qr.q();
    let phases: Vec<C64> = (0..d)
        .map(|i| {
            let v = r[(i, i)];
            if v.norm() < 1e-300 {
                C64::new(1.0, 0.0)
            } else {
                v / v.norm()
            }
        })
        .collect();
    let mut u = q;
    for j in 0..d {
        for i in 0..d {
            u[(i, j)] *= phases[j];
        }
    }
    u
}

/// Recipe for sampling a random measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PovmMethod {
    /// Ginibre PSD blocks `G_j` renormalized as `T^{-1/2} G_j T^{-1/2}` with
    /// `T = Σ G_j`, so the identity resolution is exact.
    GinibreRenormalized,
    /// `ε·P + (1-ε)·V₁`: close to the fuzzy measurement at slot 1.
    NearExtremal(f64),
    /// `ε·P + (1-ε)·P_u`: close to the uniform measurement.
    NearUniform(f64),
}

/// Random measurement with `n` outcomes in dimension `d`.
pub fn random_povm(
    n: usize,
    d: usize,
    method: PovmMethod,
    rng: &mut SeededRng,
) -> Result<Povm, SamplingError> {
    match method {
        PovmMethod::GinibreRenormalized => ginibre_renormalized(n, d, rng),
        PovmMethod::NearExtremal(eps) => {
            let base = ginibre_renormalized(n, d, rng)?;
            let anchor = fuzzy_povm(1, n, d)?;
            Ok(blend(&base, &anchor, eps))
        }
        PovmMethod::NearUniform(eps) => {
            let base = ginibre_renormalized(n, d, rng)?;
            let anchor = uniform_povm(n, d);
            Ok(blend(&base, &anchor, eps))
        }
    }
}

fn blend(base: &Povm, anchor: &Povm, eps: f64) -> Povm {
    let effects = base
        .effects()
        .iter()
        .zip(anchor.effects())
        .map(|(b, a)| &b.matrix().scale(eps) + &a.matrix().scale(1.0 - eps))
        .collect();
    Povm::from_effects_unchecked(effects)
}

fn ginibre_renormalized(n: usize, d: usize, rng: &mut SeededRng) -> Result<Povm, SamplingError> {
    for _ in 0..RENORMALIZER_RETRIES {
        let gs: Vec<HermitianMatrix> = (0..n).map(|_| wishart(d, rng)).collect();
        let mut t = HermitianMatrix::zeros(d);
        for g in &gs {
            t = &t + g;
        }
        let es = linalg::eig_h(&t)?;
        if es.lambda_min() <= 1e-12 * es.lambda_max() {
            continue;
        }
        let inv_root = es.map_spectrum(|l| 1.0 / l.sqrt());
        let effects: Vec<HermitianMatrix> = gs
            .iter()
            .map(|g| {
                let m = inv_root.matrix() * g.matrix() * inv_root.matrix();
                let adj = m.adjoint();
                HermitianMatrix::from_hermitian_unchecked((m + adj).scale(0.5))
            })
            .collect();
        return Ok(Povm::validate(effects, linalg::DEFAULT_TOL)?);
    }
    Err(SamplingError::SingularRenormalizer)
}

/// Recipe for sampling a random blockwise bistochastic matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BistochasticMethod {
    /// Seed block `(0,0)` with a random effect and complete the rest by
    /// Dykstra projection onto `{PSD blocks, rows and columns sum to
    /// identity}` from a random start. For `n = 2` the completion is the
    /// unique point `((B, 1-B), (1-B, B))` and is built directly.
    FeasibilityCompleted,
    /// `ε·B + (1-ε)·identity-blocks`.
    NearIdentity(f64),
    /// `ε·B + (1-ε)·(all blocks 1/n)`: drives everything to the uniform
    /// measurement.
    NearFlat(f64),
    /// Circulant grid of a random measurement.
    Circulant,
}

/// Random blockwise bistochastic matrix of `n²` blocks of size `d`.
pub fn random_bistochastic(
    n: usize,
    d: usize,
    method: BistochasticMethod,
    rng: &mut SeededRng,
) -> Result<BlockMatrix, SamplingError> {
    match method {
        BistochasticMethod::FeasibilityCompleted => feasibility_completed(n, d, rng),
        BistochasticMethod::NearIdentity(eps) => {
            let base = circulant_base(n, d, rng)?;
            Ok(blend_blocks(&base, &BlockMatrix::identity(n, d), eps))
        }
        BistochasticMethod::NearFlat(eps) => {
            let base = circulant_base(n, d, rng)?;
            let flat = BlockMatrix::from_blocks_unchecked(vec![
                vec![
                    HermitianMatrix::scaled_identity(
                        d,
                        1.0 / n as f64
                    );
                    n
                ];
                n
            ]);
            Ok(blend_blocks(&base, &flat, eps))
        }
        BistochasticMethod::Circulant => circulant_base(n, d, rng),
    }
}

fn circulant_base(n: usize, d: usize, rng: &mut SeededRng) -> Result<BlockMatrix, SamplingError> {
    let p = random_povm(n, d, PovmMethod::GinibreRenormalized, rng)?;
    Ok(dynamics::circulant_from_povm(&p))
}

fn blend_blocks(base: &BlockMatrix, anchor: &BlockMatrix, eps: f64) -> BlockMatrix {
    &base.scale(eps) + &anchor.scale(1.0 - eps)
}

fn feasibility_completed(
    n: usize,
    d: usize,
    rng: &mut SeededRng,
) -> Result<BlockMatrix, SamplingError> {
    let seed_block = ginibre_effect(d, rng);
    if n == 1 {
        return Ok(BlockMatrix::identity(1, d));
    }
    if n == 2 {
        let b = seed_block.matrix().clone();
        let c = &HermitianMatrix::identity(d) - &b;
        return Ok(BlockMatrix::from_blocks_unchecked(vec![
            vec![b, c.clone()],
            vec![c, seed_block.into_matrix()],
        ]));
    }
    // random start for the free blocks, typical block trace d/n
    let mut blocks = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            if i == 0 && j == 0 {
                blocks.push(seed_block.matrix().matrix().clone());
            } else {
                let w = wishart(d, rng);
                let scale = d as f64 / (n as f64 * w.trace());
                blocks.push(w.matrix().scale(scale));
            }
        }
    }
    let id = CMatrix::identity(d, d);
    let problem = FeasibilityProblem {
        rows: n,
        cols: n,
        d,
        row_targets: vec![id.clone(); n],
        col_targets: vec![id; n],
        pin: Some((0, 0, seed_block.matrix().matrix().clone())),
    };
    let outcome = project_feasible(&problem, blocks, COMPLETION_BUDGET, COMPLETION_TARGET)?;
    if !outcome.converged {
        return Err(SamplingError::CompletionBudgetExhausted {
            budget: COMPLETION_BUDGET,
            residual: outcome.residual,
        });
    }
    Ok(BlockMatrix::from_blocks_unchecked(outcome.blocks))
}

/// Random state under the Hilbert-Schmidt measure: `X†X / tr(X†X)`.
pub fn random_density(d: usize, rng: &mut SeededRng) -> DensityMatrix {
    let w = wishart(d, rng);
    DensityMatrix::new_unchecked(w.scale(1.0 / w.trace()))
}

/// Random pure state: normalized Gaussian vector outer product.
pub fn random_pure(d: usize, rng: &mut SeededRng) -> DensityMatrix {
    let v: Vec<C64> = (0..d)
        .map(|_| {
            let re = rng.gaussian();
            let im = rng.gaussian();
            C64::new(re, im)
        })
        .collect();
    let norm_sq: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    let m = CMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj() / norm_sq);
    let adj = m.adjoint();
    DensityMatrix::new_unchecked(HermitianMatrix::from_hermitian_unchecked(
        (m + adj).scale(0.5),
    ))
}

/// Random sortable measurement: ordered scalar mixtures with commuting
/// perturbations.
///
/// A common descending simplex vector `c` fixes the scalar chain; for every
/// eigendirection `m` an independent descending simplex vector `v_m` perturbs
/// it. The effect eigenvalues `λ_j[m] = (1-η)c_j + η v_m[j]` stay descending
/// in `j` for any mixing weight `η ∈ [0, 1)`, so conjugating the diagonal
/// family by one random unitary yields a valid measurement whose effects form
/// a Löwner chain.
pub fn random_sortable_povm(n: usize, d: usize, rng: &mut SeededRng) -> Povm {
    let descending_simplex = |rng: &mut SeededRng| -> Vec<f64> {
        let mut w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.uniform()).ln()).collect();
        w.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect()
    };
    let c = descending_simplex(rng);
    let eta = rng.uniform();
    let columns: Vec<Vec<f64>> = (0..d).map(|_| descending_simplex(rng)).collect();
    let u = random_unitary(d, rng);
    let effects = (0..n)
        .map(|j| {
            let diag: Vec<f64> = (0..d)
                .map(|m| (1.0 - eta) * c[j] + eta * columns[m][j])
                .collect();
            HermitianMatrix::from_diagonal(&diag).conjugate_with(&u)
        })
        .collect();
    Povm::from_effects_unchecked(effects)
}

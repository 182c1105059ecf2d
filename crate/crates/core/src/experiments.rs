//! Reproducible desk-scale experiments: the qubit measurement-set volume
//! ratio, noisy-identity fixed-point dynamics, the cumulative-norm profile
//! sweep, and entropy-monotone trajectories.
//!
//! Every experiment consumes a single `u64` seed and derives per-sample
//! streams with [`crate::sampling::mix_seed`], so any flagged case can be
//! replayed standalone from the seed recorded in the report.

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{self, apply_stochastic, DynamicsError};
use crate::linalg::{self, eig_h, HermitianMatrix, LinalgError};
use crate::majorization::{
    conjecture_check, entropy_monotone, sortable_order, ConjectureReading, ConjectureVerdict,
    MajorizationError,
};
use crate::povm::{BlockMatrix, DensityMatrix, Effect, Povm, PovmError};
use crate::sampling::{self, mix_seed, BistochasticMethod, PovmMethod, SamplingError, SeededRng};

/// Norm-shrinkage slack for samples produced by the iterative bistochastic
/// completion, whose blocks carry the sampler's marginal residual.
pub const SWEEP_SHRINKAGE_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum ExperimentsError {
    #[error("no sample fell into the conditioning set; estimate undefined")]
    EmptyConditioningSet,
    #[error("experiment requires dimension 2, got {dim}")]
    UnsupportedDimension { dim: usize },
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Majorization(#[from] MajorizationError),
    #[error(transparent)]
    Povm(#[from] PovmError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Bernoulli Monte Carlo estimate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Conditioning-set hits, the number of Bernoulli trials behind `mean`.
    pub samples: u64,
    pub seed: u64,
}

/// Fraction of PSD qubit operators with `tr ≤ 2` that remain below identity.
///
/// Effects `P = (t·1 + τ⃗·σ⃗)/2` are sampled in coordinates: `t` uniform on
/// `[0, 2]`, `τ⃗` uniform on `[-2, 2]³`. The coordinate box carries the flat
/// Hilbert-Schmidt measure up to a constant Jacobian. Conditioning on
/// `|τ⃗| ≤ t` picks the PSD cone; the estimated event `|τ⃗| ≤ 2 - t` adds
/// `P ≤ 1`. The expected fraction is 1/8.
pub fn volume_ratio_mc(samples: u64, seed: u64) -> Result<McEstimate, ExperimentsError> {
    let mut rng = SeededRng::new(seed);
    let mut conditioned = 0u64;
    let mut hits = 0u64;
    for _ in 0..samples {
        let t = 2.0 * rng.uniform();
        let tau = [
            4.0 * rng.uniform() - 2.0,
            4.0 * rng.uniform() - 2.0,
            4.0 * rng.uniform() - 2.0,
        ];
        let len = (tau[0] * tau[0] + tau[1] * tau[1] + tau[2] * tau[2]).sqrt();
        if len <= t {
            conditioned += 1;
            if len <= 2.0 - t {
                hits += 1;
            }
        }
    }
    if conditioned == 0 {
        return Err(ExperimentsError::EmptyConditioningSet);
    }
    let mean = hits as f64 / conditioned as f64;
    Ok(McEstimate {
        mean,
        std_error: (mean * (1.0 - mean) / conditioned as f64).sqrt(),
        samples: conditioned,
        seed,
    })
}

/// Which blockwise product drives an iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductKind {
    Star,
    StarDual,
}

impl std::fmt::Display for ProductKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProductKind::Star => write!(f, "star"),
            ProductKind::StarDual => write!(f, "star_dual"),
        }
    }
}

/// One recorded iteration of a qubit fixed-point run.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryStep {
    pub iteration: usize,
    /// Trace coordinate `tr(P)`.
    pub t: f64,
    /// Eigenvalue gap `λ₊ - λ₋`.
    pub tau: f64,
    /// Projection `tr(σ_Z P)`.
    pub tau_sigma_z: f64,
    /// Magnitude of the off-diagonal entry in the `|±⟩` basis; vanishing
    /// means the iterate commutes with the noisy-identity driver.
    pub offdiag_plusminus: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    /// The iterate after the last step, for fixed-point inspection.
    pub final_effect: HermitianMatrix,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryStep {
        self.steps.last().expect("at least the initial step")
    }
}

fn qubit_coords(p: &HermitianMatrix, iteration: usize) -> Result<TrajectoryStep, LinalgError> {
    let es = eig_h(p)?;
    let m = p.matrix();
    let plus_minus = (m[(0, 0)] - m[(0, 1)] + m[(1, 0)] - m[(1, 1)]) * 0.5;
    Ok(TrajectoryStep {
        iteration,
        t: p.trace(),
        tau: es.lambda_max() - es.lambda_min(),
        tau_sigma_z: (m[(0, 0)] - m[(1, 1)]).re,
        offdiag_plusminus: plus_minus.norm(),
    })
}

/// Iterate the two-outcome dynamics `P ← first effect of ((B,1-B),(1-B,B))
/// (*|*†) (P, 1-P)` and record the qubit coordinates at every step.
pub fn fixed_point_run(
    b: &Effect,
    p0: &Effect,
    steps: usize,
    product: ProductKind,
) -> Result<Trajectory, ExperimentsError> {
    if b.dim() != 2 || p0.dim() != 2 {
        return Err(ExperimentsError::UnsupportedDimension {
            dim: b.dim().max(p0.dim()),
        });
    }
    let id = HermitianMatrix::identity(2);
    let mut p = p0.matrix().clone();
    let mut recorded = Vec::with_capacity(steps + 1);
    recorded.push(qubit_coords(&p, 0).map_err(ExperimentsError::Linalg)?);
    let root_b = linalg::sqrt_psd(b.matrix())?;
    let root_bc = linalg::sqrt_psd(&(&id - b.matrix()))?;
    for k in 1..=steps {
        let pc = &id - &p;
        p = match product {
            ProductKind::Star => {
                // (B * P)_1 = sqrt(P) B sqrt(P) + sqrt(1-P)(1-B) sqrt(1-P)
                let rp = linalg::sqrt_psd(&p)?;
                let rpc = linalg::sqrt_psd(&pc)?;
                let first = HermitianMatrix::new(rp.matrix() * b.matrix().matrix() * rp.matrix())?;
                let second = HermitianMatrix::new(
                    rpc.matrix() * (&id - b.matrix()).matrix() * rpc.matrix(),
                )?;
                &first + &second
            }
            ProductKind::StarDual => {
                // (B *† P)_1 = sqrt(B) P sqrt(B) + sqrt(1-B)(1-P) sqrt(1-B)
                let first = HermitianMatrix::new(root_b.matrix() * p.matrix() * root_b.matrix())?;
                let second =
                    HermitianMatrix::new(root_bc.matrix() * pc.matrix() * root_bc.matrix())?;
                &first + &second
            }
        };
        recorded.push(qubit_coords(&p, k).map_err(ExperimentsError::Linalg)?);
    }
    Ok(Trajectory {
        steps: recorded,
        final_effect: p,
    })
}

/// The noisy identity driver `B = 1 - 2ε|−⟩⟨−|`.
pub fn noisy_identity_effect(epsilon: f64) -> Effect {
    let m =
        HermitianMatrix::from_real_rows(&[&[1.0 - epsilon, epsilon], &[epsilon, 1.0 - epsilon]])
            .expect("square");
    Effect::new_unchecked(m)
}

/// One labelled trajectory of the fixed-point experiment.
#[derive(Clone, Debug)]
pub struct FixedPointRun {
    pub start: usize,
    pub product: ProductKind,
    pub trajectory: Trajectory,
}

/// Fixed-point experiment: random starts with uniformly stratified traces
/// `t_k = (k + ½)/starts`, iterated under the noisy identity with both
/// products.
pub fn fixed_point_experiment(
    epsilon: f64,
    steps: usize,
    starts: usize,
    seed: u64,
) -> Result<Vec<FixedPointRun>, ExperimentsError> {
    let b = noisy_identity_effect(epsilon);
    let mut runs = Vec::with_capacity(2 * starts);
    for k in 0..starts {
        let mut rng = SeededRng::new(mix_seed(seed, k as u64));
        let raw = sampling::ginibre_effect(2, &mut rng);
        let target_trace = (k as f64 + 0.5) / starts as f64;
        let p0 = Effect::new_unchecked(raw.matrix().scale(target_trace / raw.matrix().trace()));
        for product in [ProductKind::Star, ProductKind::StarDual] {
            runs.push(FixedPointRun {
                start: k,
                product,
                trajectory: fixed_point_run(&b, &p0, steps, product)?,
            });
        }
    }
    Ok(runs)
}

/// Configuration of one profile-conjecture sweep.
#[derive(Clone, Copy, Debug)]
pub struct ConjectureSweepConfig {
    pub n: usize,
    pub d: usize,
    pub samples: u64,
    pub vector_method: PovmMethod,
    pub matrix_method: BistochasticMethod,
    pub seed: u64,
    pub reading: ConjectureReading,
}

/// A flagged sample with everything needed to replay it.
#[derive(Clone, Debug, Serialize)]
pub struct ConjectureViolation {
    pub sample_index: u64,
    pub replay_seed: u64,
    pub ordering_q: Vec<usize>,
    pub margin: f64,
}

/// Machine-readable outcome of one sweep.
#[derive(Clone, Debug, Serialize)]
pub struct ConjectureReport {
    pub n: usize,
    pub d: usize,
    pub samples: u64,
    pub seed: u64,
    pub vector_method: String,
    pub matrix_method: String,
    pub reading: String,
    pub violations: Vec<ConjectureViolation>,
    /// Only populated for `n = 2`, where the two-outcome norm shrinkage is
    /// checked on every sample as well.
    pub shrinkage_checked: u64,
    pub shrinkage_violations: u64,
}

/// Draw `(P, B)` pairs, form `Q = B * P`, and check the profile domination
/// for every ordering of `Q`. Violations beyond `1e-8` are recorded with the
/// seed that regenerates the sample.
pub fn conjecture_sweep(cfg: &ConjectureSweepConfig) -> Result<ConjectureReport, ExperimentsError> {
    let mut report = ConjectureReport {
        n: cfg.n,
        d: cfg.d,
        samples: cfg.samples,
        seed: cfg.seed,
        vector_method: format!("{:?}", cfg.vector_method),
        matrix_method: format!("{:?}", cfg.matrix_method),
        reading: format!("{:?}", cfg.reading),
        violations: Vec::new(),
        shrinkage_checked: 0,
        shrinkage_violations: 0,
    };
    for index in 0..cfg.samples {
        let replay_seed = mix_seed(cfg.seed, index);
        let mut rng = SeededRng::new(replay_seed);
        let p = sampling::random_povm(cfg.n, cfg.d, cfg.vector_method, &mut rng)?;
        let b = sampling::random_bistochastic(cfg.n, cfg.d, cfg.matrix_method, &mut rng)?;
        let q = apply_stochastic(&b, &p)?;
        match conjecture_check(&p, &q, 1e-8, cfg.reading)? {
            ConjectureVerdict::Holds => {}
            ConjectureVerdict::Violated { ordering_q, margin } => {
                report.violations.push(ConjectureViolation {
                    sample_index: index,
                    replay_seed,
                    ordering_q,
                    margin,
                });
            }
        }
        if cfg.n == 2 {
            // two-outcome shrinkage of the distance from the cone axis,
            // via the dual product so the square roots act on the sampler's
            // exactly-PSD blocks
            let dual = dynamics::dual_blockwise_product(&b, &p.to_block())?;
            let axis = HermitianMatrix::scaled_identity(cfg.d, 0.5);
            let before = linalg::hs_norm(&(p.effect(0).matrix() - &axis));
            let after = linalg::hs_norm(&(dual.block(0, 0) - &axis));
            report.shrinkage_checked += 1;
            if after > before + SWEEP_SHRINKAGE_TOL {
                report.shrinkage_violations += 1;
            }
        }
    }
    Ok(report)
}

/// All vector-method x matrix-method pairings at fixed `(n, d)`, each with
/// its own derived seed.
pub fn conjecture_sweep_all(
    n: usize,
    d: usize,
    samples: u64,
    seed: u64,
    reading: ConjectureReading,
    epsilon: f64,
) -> Result<Vec<ConjectureReport>, ExperimentsError> {
    let vector_methods = [
        PovmMethod::GinibreRenormalized,
        PovmMethod::NearExtremal(epsilon),
        PovmMethod::NearUniform(epsilon),
    ];
    let matrix_methods = [
        BistochasticMethod::FeasibilityCompleted,
        BistochasticMethod::NearIdentity(epsilon),
        BistochasticMethod::NearFlat(epsilon),
        BistochasticMethod::Circulant,
    ];
    let mut reports = Vec::new();
    let mut pairing = 0u64;
    for vm in vector_methods {
        for mm in matrix_methods {
            reports.push(conjecture_sweep(&ConjectureSweepConfig {
                n,
                d,
                samples,
                vector_method: vm,
                matrix_method: mm,
                seed: mix_seed(seed, pairing),
                reading,
            })?);
            pairing += 1;
        }
    }
    Ok(reports)
}

/// Divergence values along an iterated bistochastic evolution.
///
/// The run records the sortable prefix of the trajectory and stops at the
/// first unsortable iterate, reporting its index; early stop is a result,
/// not an error. The recorded values typically decrease toward zero, but
/// sortability alone does not force this — see the pinned counterexample in
/// the majorization tests — so the sequence is reported, not asserted.
#[derive(Clone, Debug, Serialize)]
pub struct MonotoneTrajectory {
    pub values: Vec<f64>,
    pub stopped_at: Option<usize>,
}

/// Iterate `P ← B * P` and record `E_ρ` along the sortable prefix.
pub fn monotone_trajectory(
    p0: &Povm,
    b: &BlockMatrix,
    rho: &DensityMatrix,
    steps: usize,
) -> Result<MonotoneTrajectory, ExperimentsError> {
    let mut current = p0.clone();
    let mut values = vec![entropy_monotone(&current, rho)];
    let mut stopped_at = None;
    for step in 1..=steps {
        if sortable_order(&current, linalg::DEFAULT_TOL)?.is_none() {
            stopped_at = Some(step - 1);
            break;
        }
        current = apply_stochastic(b, &current)?;
        values.push(entropy_monotone(&current, rho));
    }
    Ok(MonotoneTrajectory { values, stopped_at })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::circulant_from_povm;
    use crate::linalg::max_abs_diff;
    use crate::povm::{uniform_povm, BlockMatrix};
    use crate::sampling::random_density;

    #[test]
    fn volume_ratio_small_run_is_deterministic_and_close() {
        let a = volume_ratio_mc(200_000, 1).unwrap();
        let b = volume_ratio_mc(200_000, 1).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.samples, b.samples);
        assert!((a.mean - 0.125).abs() < 0.005, "mean {}", a.mean);
        // conditioning fraction is pi/24 for this box
        let frac = a.samples as f64 / 200_000.0;
        assert!((frac - std::f64::consts::PI / 24.0).abs() < 0.005);
    }

    #[test]
    fn degenerate_volume_run_errors() {
        assert!(matches!(
            volume_ratio_mc(0, 7),
            Err(ExperimentsError::EmptyConditioningSet)
        ));
    }

    #[test]
    fn identity_driver_freezes_any_start() {
        let b = Effect::new(HermitianMatrix::identity(2)).unwrap();
        let p0 = Effect::new(HermitianMatrix::from_real_rows(&[&[0.4, 0.1], &[0.1, 0.3]]).unwrap())
            .unwrap();
        for product in [ProductKind::Star, ProductKind::StarDual] {
            let t = fixed_point_run(&b, &p0, 50, product).unwrap();
            let first = t.steps[0];
            let last = t.last();
            assert!((first.t - last.t).abs() < 1e-12);
            assert!((first.tau - last.tau).abs() < 1e-12);
            assert!((first.tau_sigma_z - last.tau_sigma_z).abs() < 1e-12);
        }
    }

    #[test]
    fn commuting_ansatz_is_a_fixed_point_of_both_products() {
        let b = Effect::new(HermitianMatrix::from_diagonal(&[1.0, 0.6])).unwrap();
        let p0 = Effect::new(HermitianMatrix::from_diagonal(&[0.9, 0.5])).unwrap();
        for product in [ProductKind::Star, ProductKind::StarDual] {
            let t = fixed_point_run(&b, &p0, 20, product).unwrap();
            for s in &t.steps {
                assert!((s.t - 1.4).abs() < 1e-12);
                assert!((s.tau - 0.4).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noisy_identity_drives_offdiagonal_to_zero() {
        let runs = fixed_point_experiment(0.05, 800, 2, 11).unwrap();
        assert_eq!(runs.len(), 4);
        for run in runs {
            assert!(
                run.trajectory.last().offdiag_plusminus < 1e-6,
                "start {} product {} offdiag {}",
                run.start,
                run.product,
                run.trajectory.last().offdiag_plusminus
            );
        }
    }

    #[test]
    fn sweep_reports_zero_violations_on_small_run() {
        let cfg = ConjectureSweepConfig {
            n: 2,
            d: 2,
            samples: 40,
            vector_method: PovmMethod::GinibreRenormalized,
            matrix_method: BistochasticMethod::Circulant,
            seed: 5,
            reading: ConjectureReading::Joint,
        };
        let report = conjecture_sweep(&cfg).unwrap();
        assert_eq!(report.samples, 40);
        assert!(report.violations.is_empty());
        assert_eq!(report.shrinkage_checked, 40);
        assert_eq!(report.shrinkage_violations, 0);
    }

    #[test]
    fn monotone_trajectory_is_constant_for_uniform() {
        let u = uniform_povm(2, 2);
        let mut rng = SeededRng::new(3);
        let rho = random_density(2, &mut rng);
        let flat = BlockMatrix::from_blocks_unchecked(vec![
            vec![
                HermitianMatrix::scaled_identity(2, 0.5),
                HermitianMatrix::scaled_identity(2, 0.5),
            ],
            vec![
                HermitianMatrix::scaled_identity(2, 0.5),
                HermitianMatrix::scaled_identity(2, 0.5),
            ],
        ]);
        let t = monotone_trajectory(&u, &flat, &rho, 5).unwrap();
        assert_eq!(t.stopped_at, None);
        for v in &t.values {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn monotone_trajectory_is_constant_under_identity_blocks() {
        let mut rng = SeededRng::new(9);
        let p0 = crate::sampling::random_sortable_povm(2, 2, &mut rng);
        let rho = random_density(2, &mut rng);
        let t = monotone_trajectory(&p0, &BlockMatrix::identity(2, 2), &rho, 6).unwrap();
        let first = t.values[0];
        for v in &t.values {
            assert!((v - first).abs() < 1e-9);
        }
    }

    #[test]
    fn monotone_values_decrease_pairwise() {
        let mut rng = SeededRng::new(21);
        let p0 = crate::sampling::random_sortable_povm(2, 2, &mut rng);
        let rho = random_density(2, &mut rng);
        let b = circulant_from_povm(&uniform_povm(2, 2));
        let t = monotone_trajectory(&p0, &b, &rho, 4).unwrap();
        for w in t.values.windows(2) {
            assert!(w[0] >= w[1] - 1e-9, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn noisy_identity_effect_matrix() {
        let b = noisy_identity_effect(0.01);
        let expected = HermitianMatrix::from_real_rows(&[&[0.99, 0.01], &[0.01, 0.99]]).unwrap();
        assert!(max_abs_diff(b.matrix().matrix(), expected.matrix()) == 0.0);
    }
}

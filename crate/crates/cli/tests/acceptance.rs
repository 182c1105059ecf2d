//! Acceptance suite: every release gate runs here at pinned tolerances, one
//! pass line per criterion (visible with `--nocapture`).
//!
//! Criteria 1-14 exercise the library directly; criterion 15 runs the
//! compiled binary and byte-compares reruns.

use std::process::Command;
use std::time::Instant;

use povmdyn::compat::{
    decide_compatibility, mother_from_stochastic, projective_incompatibility_test,
    stochastic_from_mother, CompatVerdict, DEFAULT_BUDGET, DEFAULT_RESIDUAL_TOL,
};
use povmdyn::dynamics::{
    apply_stochastic, blockwise_product, dual_blockwise_product, seq_product, xi_combination,
};
use povmdyn::experiments::{
    conjecture_sweep_all, fixed_point_experiment, fixed_point_run, noisy_identity_effect,
    volume_ratio_mc, ProductKind,
};
use povmdyn::linalg::{eig_h, hs_norm, max_abs_diff, sqrt_psd, HermitianMatrix};
use povmdyn::majorization::{
    bistochastic_from_majorization, bistochastic_necessity_check, classical_majorizes,
    entropy_monotone, operator_majorizes, state_dep_precondition, ConjectureReading,
    NecessityVerdict,
};
use povmdyn::povm::{pauli_povms, uniform_povm, BlockMatrix, Effect, Povm};
use povmdyn::sampling::{
    ginibre_effect, mix_seed, random_bistochastic, random_density, random_povm,
    random_sortable_povm, random_unitary, BistochasticMethod, PovmMethod, SeededRng,
};

const COMBOS: [(usize, usize); 4] = [(2, 2), (3, 2), (2, 3), (3, 3)];

fn bistochastic_method(k: u64) -> BistochasticMethod {
    match k % 4 {
        0 => BistochasticMethod::FeasibilityCompleted,
        1 => BistochasticMethod::Circulant,
        2 => BistochasticMethod::NearIdentity(0.5),
        _ => BistochasticMethod::NearFlat(0.5),
    }
}

/// Independent random measurement per block-column: column-stochastic, rows
/// generically violating.
fn random_stochastic(n: usize, d: usize, rng: &mut SeededRng) -> BlockMatrix {
    let columns: Vec<Povm> = (0..n)
        .map(|_| random_povm(n, d, PovmMethod::GinibreRenormalized, rng).unwrap())
        .collect();
    let blocks = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| columns[j].effect(i).matrix().clone())
                .collect()
        })
        .collect();
    BlockMatrix::validate(blocks, 1e-9).unwrap()
}

fn pauli_stochastic(first: &Povm, second: &Povm) -> BlockMatrix {
    BlockMatrix::validate(
        vec![
            vec![
                first.effect(0).matrix().clone(),
                second.effect(0).matrix().clone(),
            ],
            vec![
                first.effect(1).matrix().clone(),
                second.effect(1).matrix().clone(),
            ],
        ],
        1e-9,
    )
    .unwrap()
}

#[test]
fn criterion_01_volume_ratio() {
    let seeds: [u64; 5] = [1, 2, 3, 4, 5];
    let single = Instant::now();
    let first = volume_ratio_mc(1_000_000, seeds[0]).unwrap();
    let single_elapsed = single.elapsed();
    assert!(
        single_elapsed.as_secs_f64() < 30.0,
        "single run took {single_elapsed:?}"
    );
    let mut means = vec![first.mean];
    for &seed in &seeds[1..] {
        means.push(volume_ratio_mc(1_000_000, seed).unwrap().mean);
    }
    for (seed, mean) in seeds.iter().zip(&means) {
        assert!(
            (0.123..=0.127).contains(mean),
            "seed {seed}: mean {mean} outside [0.123, 0.127]"
        );
    }
    println!(
        "criterion 01 PASS: volume ratio in [0.123, 0.127] for 5 pinned seeds \
         (means {means:?}, single run {single_elapsed:?})"
    );
}

#[test]
fn criterion_02_pauli_product_table() {
    let p = pauli_povms();
    let close = |a: &Povm, b: &Povm| {
        a.effects()
            .iter()
            .zip(b.effects())
            .map(|(x, y)| max_abs_diff(x.matrix().matrix(), y.matrix().matrix()))
            .fold(0.0f64, f64::max)
    };

    let zz = pauli_stochastic(&p.z, &p.z);
    let zx = pauli_stochastic(&p.z, &p.x);

    let dev1 = close(&apply_stochastic(&zz, &p.z).unwrap(), &p.z);
    assert!(dev1 <= 1e-12, "ZZ*Z deviation {dev1:.2e}");

    let dev2a = close(&apply_stochastic(&zz, &p.x).unwrap(), &p.flat);
    assert!(dev2a <= 1e-12, "ZZ*X deviation {dev2a:.2e}");
    let dev2b = close(&apply_stochastic(&zx, &p.y).unwrap(), &p.flat);
    assert!(dev2b <= 1e-12, "ZX*Y deviation {dev2b:.2e}");

    let xp_half = p.x.effect(0).matrix().scale(0.5);
    let expected = Povm::validate(
        vec![xp_half.clone(), &HermitianMatrix::identity(2) - &xp_half],
        1e-9,
    )
    .unwrap();
    let dev3 = close(&apply_stochastic(&zx, &p.x).unwrap(), &expected);
    assert!(dev3 <= 1e-12, "ZX*X deviation {dev3:.2e}");

    println!(
        "criterion 02 PASS: Pauli product table holds entrywise within 1e-12 \
         (worst {:.2e})",
        dev1.max(dev2a).max(dev2b).max(dev3)
    );
}

// KNOWN RED. The asserted Löwner majorization is falsified by explicit
// counterexamples whenever the bistochastic blocks fail to commute with the
// measurement: the sortable P = (diag(1, 0.6), diag(0, 0.4)) mapped through
// the bistochastic grid built from |+><+| and |-><-| yields a first
// cumulative sum with eigenvalue -0.136 in either ordering of the image, and
// scaling the commuting perturbation by eta only shrinks the violation as
// eta^2 (still -1e-9 at eta = 1e-4). See
// majorization::tests::loewner_majorization_fails_for_noncommuting_drivers
// for the pinned instance. The criterion is kept as stated and fails
// honestly.
#[test]
fn criterion_03_state_independent_majorization() {
    let mut worst_eigenvalue = f64::INFINITY;
    let mut worst_residual = 0.0f64;
    let mut violations = 0u32;
    let mut first_violation = None;
    let total = 1000u32;
    for (c, &(n, d)) in COMBOS.iter().enumerate() {
        for k in 0..250u64 {
            let mut rng = SeededRng::new(mix_seed(3_000 + c as u64, k));
            let p = random_sortable_povm(n, d, &mut rng);
            let b = random_bistochastic(n, d, bistochastic_method(k), &mut rng).unwrap();
            let q = apply_stochastic(&b, &p).unwrap();
            let report = operator_majorizes(&p, &q, 1e-9).unwrap();
            worst_eigenvalue = worst_eigenvalue.min(report.min_k_value());
            worst_residual = worst_residual.max(report.equality_residual);
            if !report.holds {
                violations += 1;
                first_violation.get_or_insert((n, d, k, report.min_k_value()));
            }
        }
    }
    if violations > 0 {
        println!(
            "criterion 03 FAIL: {violations}/{total} sortable/bistochastic pairs violate the \
             cumulative Löwner domination (worst eigenvalue {worst_eigenvalue:.3e}, first at \
             {first_violation:?}); the asserted operator majorization admits counterexamples \
             with non-commuting drivers"
        );
        panic!(
            "operator majorization violated on {violations}/{total} samples \
             (worst cumulative eigenvalue {worst_eigenvalue:.3e})"
        );
    }
    assert!(worst_eigenvalue >= -1e-9 && worst_residual <= 1e-9);
    println!(
        "criterion 03 PASS: 1000 sortable/bistochastic pairs majorize \
         (worst cumulative eigenvalue {worst_eigenvalue:.2e}, worst residual {worst_residual:.2e})"
    );
}

#[test]
fn criterion_04_bistochastic_necessity() {
    let mut checked = 0;
    for (c, &(n, d)) in COMBOS.iter().enumerate() {
        let mut k = 0u64;
        while checked < 25 * (c + 1) {
            let mut rng = SeededRng::new(mix_seed(4_000 + c as u64, k));
            k += 1;
            let s = random_stochastic(n, d, &mut rng);
            if s.row_deviation() < 1e-3 {
                continue; // essentially never happens
            }
            match bistochastic_necessity_check(&s, 1e-9) {
                NecessityVerdict::Violation { .. } => checked += 1,
                NecessityVerdict::Bistochastic => {
                    panic!("combo ({n},{d}): row-violating matrix not flagged")
                }
            }
        }
    }
    assert_eq!(checked, 100);
    println!(
        "criterion 04 PASS: 100 stochastic-not-bistochastic matrices flagged by the probe family"
    );
}

// KNOWN RED. Inherits the criterion-03 counterexamples: for the pinned
// instance the outcome distributions at the state |+><+| are p = (0.8, 0.2)
// and q = (0.887, 0.113), so p does not majorize q and no classical
// post-processing witness exists. On samples where majorization does hold,
// the T-transform witness is verified at full tolerance.
#[test]
fn criterion_05_classical_postprocessing_chain() {
    let mut worst_residual = 0.0f64;
    let mut violations = 0u32;
    let mut first_violation = None;
    let total = 1000u32;
    for (c, &(n, d)) in COMBOS.iter().enumerate() {
        for k in 0..250u64 {
            let mut rng = SeededRng::new(mix_seed(5_000 + c as u64, k));
            let rho = random_density(d, &mut rng);
            let p = random_sortable_povm(n, d, &mut rng);
            let b = random_bistochastic(n, d, bistochastic_method(k), &mut rng).unwrap();
            let q = apply_stochastic(&b, &p).unwrap();
            let pv: Vec<f64> = p
                .effects()
                .iter()
                .map(|e| rho.expectation(e.matrix()))
                .collect();
            let qv: Vec<f64> = q
                .effects()
                .iter()
                .map(|e| rho.expectation(e.matrix()))
                .collect();
            if !classical_majorizes(&pv, &qv, 1e-10).unwrap() {
                violations += 1;
                first_violation.get_or_insert((n, d, k));
                continue;
            }
            let bprime = bistochastic_from_majorization(&pv, &qv).unwrap();
            for i in 0..n {
                let row: f64 = bprime[i].iter().sum();
                let col: f64 = (0..n).map(|r| bprime[r][i]).sum();
                assert!((row - 1.0).abs() <= 1e-10 && (col - 1.0).abs() <= 1e-10);
                assert!(bprime[i].iter().all(|&v| v >= -1e-12));
                let qi: f64 = (0..n).map(|j| bprime[i][j] * pv[j]).sum();
                worst_residual = worst_residual.max((qi - qv[i]).abs());
            }
        }
    }
    if violations > 0 {
        println!(
            "criterion 05 FAIL: {violations}/{total} samples have p not majorizing q \
             (first at {first_violation:?}); witnesses on the majorizing samples stayed \
             within {worst_residual:.2e}"
        );
        panic!("classical majorization violated on {violations}/{total} samples");
    }
    assert!(worst_residual <= 1e-9);
    println!(
        "criterion 05 PASS: 1000 classical chains p ≻ q with post-processing witness \
         (worst |B'p - q| = {worst_residual:.2e})"
    );
}

// KNOWN RED. The eigenvalue-ordering precondition is always satisfiable by
// sorting (the scores are real and nonnegative for PSD operators), yet the
// claimed majorization fails on the same non-commuting counterexamples as
// criterion 03 — there the scores tie at zero, so every ordering passes the
// precondition while p = (0.8, 0.2) fails to majorize q = (0.887, 0.113) at
// the state |+><+|.
#[test]
fn criterion_06_state_dependent_majorization() {
    let mut violations = 0u32;
    let mut first_violation = None;
    let total = 500u32;
    for (c, &(n, d)) in COMBOS.iter().enumerate() {
        for k in 0..125u64 {
            let mut rng = SeededRng::new(mix_seed(6_000 + c as u64, k));
            let p = random_povm(n, d, PovmMethod::GinibreRenormalized, &mut rng).unwrap();
            let b = random_bistochastic(n, d, bistochastic_method(k), &mut rng).unwrap();
            let rho = random_density(d, &mut rng);
            let q = apply_stochastic(&b, &p).unwrap();
            // the ordering criterion: root-state minimal eigenvalues sort
            let order = state_dep_precondition(&p, &rho).unwrap();
            let scores: Vec<f64> = p
                .effects()
                .iter()
                .map(|e| {
                    let root = sqrt_psd(e.matrix()).unwrap();
                    let conj =
                        HermitianMatrix::new(root.matrix() * rho.matrix().matrix() * root.matrix())
                            .unwrap();
                    eig_h(&conj).unwrap().lambda_min()
                })
                .collect();
            for w in order.windows(2) {
                assert!(
                    scores[w[0]] >= scores[w[1]] - 1e-14 && scores[w[1]] >= -1e-12,
                    "ordering precondition violated"
                );
            }
            let pv: Vec<f64> = p
                .effects()
                .iter()
                .map(|e| rho.expectation(e.matrix()))
                .collect();
            let qv: Vec<f64> = q
                .effects()
                .iter()
                .map(|e| rho.expectation(e.matrix()))
                .collect();
            if !classical_majorizes(&pv, &qv, 1e-10).unwrap() {
                violations += 1;
                first_violation.get_or_insert((n, d, k));
            }
        }
    }
    if violations > 0 {
        println!(
            "criterion 06 FAIL: {violations}/{total} precondition-passing triples violate \
             p ≻ q (first at {first_violation:?}); the state-dependent majorization claim \
             admits counterexamples"
        );
        panic!("state-dependent majorization violated on {violations}/{total} samples");
    }
    println!(
        "criterion 06 PASS: 500 triples satisfying the eigenvalue-ordering precondition \
         give p ≻ q within 1e-10"
    );
}

#[test]
fn criterion_07_compatibility_round_trip() {
    let mut worst_product_dev = 0.0f64;
    for (c, &(n, d)) in COMBOS.iter().enumerate() {
        for k in 0..125u64 {
            let mut rng = SeededRng::new(mix_seed(7_000 + c as u64, k));
            let p = random_povm(n, d, PovmMethod::GinibreRenormalized, &mut rng).unwrap();
            let s = random_stochastic(n, d, &mut rng);
            let mother = mother_from_stochastic(&p, &s).unwrap();
            let uniform_dist = vec![1.0 / n as f64; n];
            let s_prime = stochastic_from_mother(&p, &mother, &uniform_dist).unwrap();
            let original = blockwise_product(&s, &p.to_block()).unwrap();
            let recovered = blockwise_product(&s_prime, &p.to_block()).unwrap();
            for i in 0..n {
                let dev = max_abs_diff(
                    original.block(i, 0).matrix(),
                    recovered.block(i, 0).matrix(),
                );
                worst_product_dev = worst_product_dev.max(dev);
                assert!(
                    dev <= 1e-8,
                    "combo ({n},{d}) sample {k}: block {i} dev {dev:.2e}"
                );
            }

            let q = original.to_povm().unwrap();
            match decide_compatibility(&p, &q, DEFAULT_BUDGET, DEFAULT_RESIDUAL_TOL).unwrap() {
                CompatVerdict::Feasible(_) => {}
                other => panic!(
                    "combo ({n},{d}) sample {k}: expected feasible, got {}",
                    other.status()
                ),
            }
        }
    }
    println!(
        "criterion 07 PASS: 500 mother round trips within 1e-8 and all compatibility \
         decisions feasible (worst product deviation {worst_product_dev:.2e})"
    );
}

#[test]
fn criterion_08_projective_incompatibility() {
    let p = pauli_povms();
    let verdict = decide_compatibility(&p.z, &p.x, DEFAULT_BUDGET, DEFAULT_RESIDUAL_TOL).unwrap();
    match verdict {
        CompatVerdict::Infeasible(cert) => {
            assert!((cert.commutator_norm - 1.0 / 2f64.sqrt()).abs() < 1e-12);
            // sanity: the certificate really is the commutation test's
            assert_eq!(projective_incompatibility_test(&p.z, &p.x).unwrap(), cert);
            println!(
                "criterion 08 PASS: Z vs X infeasible via commutation certificate \
                 (commutator norm {:.6})",
                cert.commutator_norm
            );
        }
        other => panic!("expected infeasible, got {}", other.status()),
    }
}

#[test]
fn criterion_09_sequential_product_spectra() {
    let mut worst = 0.0f64;
    for (i, d) in [2usize, 3, 4].into_iter().enumerate() {
        for k in 0..334u64 {
            let mut rng = SeededRng::new(mix_seed(9_000 + i as u64, k));
            let a = ginibre_effect(d, &mut rng);
            let b = ginibre_effect(d, &mut rng);
            let ab = seq_product(a.matrix(), b.matrix()).unwrap();
            let ba = seq_product(b.matrix(), a.matrix()).unwrap();
            let ea = eig_h(&ab).unwrap().eigenvalues;
            let eb = eig_h(&ba).unwrap().eigenvalues;
            for (x, y) in ea.iter().zip(&eb) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    assert!(worst <= 1e-9, "worst spectral gap {worst:.2e}");
    println!(
        "criterion 09 PASS: 1002 sequential-product pairs share spectra within 1e-9 \
         (worst gap {worst:.2e})"
    );
}

#[test]
fn criterion_10_distributivity_and_witnesses() {
    let mut rng = SeededRng::new(10_000);
    let mut worst_dist = 0.0f64;
    for _ in 0..200 {
        let (n, d) = (2, 2);
        let a = random_stochastic(n, d, &mut rng);
        let b = random_stochastic(n, d, &mut rng);
        let c = random_stochastic(n, d, &mut rng);

        let left = blockwise_product(&(&a + &b), &c).unwrap();
        let right = &blockwise_product(&a, &c).unwrap() + &blockwise_product(&b, &c).unwrap();
        for i in 0..n {
            for j in 0..n {
                worst_dist = worst_dist.max(max_abs_diff(
                    left.block(i, j).matrix(),
                    right.block(i, j).matrix(),
                ));
            }
        }

        let left = dual_blockwise_product(&a, &(&b + &c)).unwrap();
        let right =
            &dual_blockwise_product(&a, &b).unwrap() + &dual_blockwise_product(&a, &c).unwrap();
        for i in 0..n {
            for j in 0..n {
                worst_dist = worst_dist.max(max_abs_diff(
                    left.block(i, j).matrix(),
                    right.block(i, j).matrix(),
                ));
            }
        }
    }
    assert!(
        worst_dist <= 1e-12,
        "distributivity deviation {worst_dist:.2e}"
    );

    // explicit witnesses against commutativity and associativity
    let mut rng = SeededRng::new(10_500);
    let mut commut_witness = 0.0f64;
    let mut assoc_witness = 0.0f64;
    for _ in 0..50 {
        let a = random_stochastic(2, 2, &mut rng);
        let b = random_stochastic(2, 2, &mut rng);
        let c = random_stochastic(2, 2, &mut rng);
        let ab = blockwise_product(&a, &b).unwrap();
        let ba = blockwise_product(&b, &a).unwrap();
        let dev = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| max_abs_diff(ab.block(i, j).matrix(), ba.block(i, j).matrix()))
            .fold(0.0f64, f64::max);
        commut_witness = commut_witness.max(dev);
        let left = blockwise_product(&ab, &c).unwrap();
        let right = blockwise_product(&a, &blockwise_product(&b, &c).unwrap()).unwrap();
        let dev = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| max_abs_diff(left.block(i, j).matrix(), right.block(i, j).matrix()))
            .fold(0.0f64, f64::max);
        assoc_witness = assoc_witness.max(dev);
        if commut_witness > 1e-6 && assoc_witness > 1e-6 {
            break;
        }
    }
    assert!(
        commut_witness > 1e-6,
        "no commutativity violation witnessed"
    );
    assert!(assoc_witness > 1e-6, "no associativity violation witnessed");
    println!(
        "criterion 10 PASS: distributivity exact within 1e-12 on 200 triples \
         (worst {worst_dist:.2e}); non-commutativity witness {commut_witness:.3}, \
         non-associativity witness {assoc_witness:.3}"
    );
}

#[test]
fn criterion_11_two_outcome_norm_shrinkage() {
    let mut worst_gap = f64::NEG_INFINITY;
    for (i, d) in [2usize, 3, 4].into_iter().enumerate() {
        let axis = HermitianMatrix::scaled_identity(d, 0.5);
        for k in 0..3_334u64 {
            let mut rng = SeededRng::new(mix_seed(11_000 + i as u64, k));
            let b = ginibre_effect(d, &mut rng);
            let p = ginibre_effect(d, &mut rng);
            let xi = xi_combination(&b, &p).unwrap();
            let before = hs_norm(&(p.matrix() - &axis));
            let after = hs_norm(&(&xi - &axis));
            worst_gap = worst_gap.max(after - before);
            assert!(
                before >= after - 1e-10,
                "d={d} sample {k}: {before} < {after}"
            );
        }
    }
    assert!(worst_gap <= 1e-10);
    println!(
        "criterion 11 PASS: 10002 two-outcome maps shrink the distance from the cone \
         axis (worst growth {worst_gap:.2e})"
    );
}

#[test]
fn criterion_12_noisy_identity_fixed_points() {
    // convergence of the noisy-identity dynamics
    let epsilon = 0.01;
    let runs = fixed_point_experiment(epsilon, 5000, 10, 1212).unwrap();
    assert_eq!(runs.len(), 20);
    let driver = noisy_identity_effect(epsilon);
    let mut worst_offdiag = 0.0f64;
    let mut worst_commutator = 0.0f64;
    for run in &runs {
        let offdiag = run.trajectory.last().offdiag_plusminus;
        worst_offdiag = worst_offdiag.max(offdiag);
        assert!(
            offdiag <= 1e-6,
            "start {} product {}: off-diagonal {offdiag:.2e} after 5000 steps",
            run.start,
            run.product
        );
        // every numerically found fixed point commutes with the driver
        let p = &run.trajectory.final_effect;
        let commutator =
            (driver.matrix().matrix() * p.matrix() - p.matrix() * driver.matrix().matrix()).norm();
        worst_commutator = worst_commutator.max(commutator);
        assert!(commutator <= 1e-6, "commutator {commutator:.2e}");
    }

    // commuting-ansatz instances are exact fixed points, also under rotation
    let mut rng = SeededRng::new(1213);
    let mut worst_fixed = 0.0f64;
    for (a, bb) in [(0.3, 0.4), (0.9, 0.1), (0.05, 0.95)] {
        let b_diag = HermitianMatrix::from_diagonal(&[1.0, 1.0 - a]);
        let p_diag = HermitianMatrix::from_diagonal(&[(1.0 + bb) / 2.0, 0.5]);
        let u = random_unitary(2, &mut rng);
        for (bm, pm) in [
            (b_diag.clone(), p_diag.clone()),
            (b_diag.conjugate_with(&u), p_diag.conjugate_with(&u)),
        ] {
            let b_eff = Effect::new(bm).unwrap();
            let p_eff = Effect::new(pm).unwrap();
            for product in [ProductKind::Star, ProductKind::StarDual] {
                let t = fixed_point_run(&b_eff, &p_eff, 1, product).unwrap();
                let dev = max_abs_diff(t.final_effect.matrix(), p_eff.matrix().matrix());
                worst_fixed = worst_fixed.max(dev);
                assert!(dev <= 1e-12, "ansatz instance moved by {dev:.2e}");
            }
        }
    }
    println!(
        "criterion 12 PASS: 20 noisy-identity runs converge (worst off-diagonal \
         {worst_offdiag:.2e}), endpoints commute with the driver (worst commutator \
         {worst_commutator:.2e}), ansatz instances fixed within 1e-12 (worst {worst_fixed:.2e})"
    );
}

#[test]
fn criterion_13_entropy_monotone() {
    let mut worst_drop = f64::INFINITY;
    for (c, &(n, d)) in COMBOS.iter().enumerate() {
        for k in 0..250u64 {
            let mut rng = SeededRng::new(mix_seed(13_000 + c as u64, k));
            let p = random_sortable_povm(n, d, &mut rng);
            let b = random_bistochastic(n, d, bistochastic_method(k), &mut rng).unwrap();
            let rho = random_density(d, &mut rng);
            let q = apply_stochastic(&b, &p).unwrap();
            let before = entropy_monotone(&p, &rho);
            let after = entropy_monotone(&q, &rho);
            // infinite divergences compare as holding
            assert!(
                before >= after - 1e-9,
                "combo ({n},{d}) sample {k}: {before} < {after}"
            );
            if before.is_finite() && after.is_finite() {
                worst_drop = worst_drop.min(before - after);
            }
        }
    }
    let mut rng = SeededRng::new(13_999);
    let mut worst_uniform = 0.0f64;
    for _ in 0..100 {
        let rho = random_density(2, &mut rng);
        worst_uniform = worst_uniform.max(entropy_monotone(&uniform_povm(3, 2), &rho).abs());
    }
    assert!(worst_uniform <= 1e-12);
    println!(
        "criterion 13 PASS: divergence monotone never increases over 1000 samples \
         (smallest drop {worst_drop:.2e}); uniform measurement scores 0 within 1e-12 \
         for 100 states (worst {worst_uniform:.2e})"
    );
}

fn run_conjecture_combo(n: usize, d: usize) {
    let reports = conjecture_sweep_all(
        n,
        d,
        10_000,
        14_000 + (10 * n + d) as u64,
        ConjectureReading::Joint,
        0.1,
    )
    .unwrap();
    assert_eq!(reports.len(), 12, "one report per recipe pairing");
    let mut total_violations = 0usize;
    for report in &reports {
        assert_eq!(report.samples, 10_000);
        total_violations += report.violations.len();
        for v in &report.violations {
            // reported, not asserted: emit the replay data for any finding
            println!(
                "criterion 14 VIOLATION (n={n}, d={d}, {} x {}): sample {} seed {} \
                 ordering {:?} margin {:.3e}",
                report.vector_method,
                report.matrix_method,
                v.sample_index,
                v.replay_seed,
                v.ordering_q,
                v.margin
            );
        }
        if report.n == 2 {
            assert_eq!(report.shrinkage_checked, report.samples);
            assert_eq!(
                report.shrinkage_violations, 0,
                "two-outcome shrinkage violated"
            );
        }
    }
    println!(
        "criterion 14 PASS (n={n}, d={d}): 12 recipe pairings x 10000 samples swept, \
         {total_violations} profile violations beyond 1e-8"
    );
}

#[test]
fn criterion_14_conjecture_sweep_n2_d2() {
    run_conjecture_combo(2, 2);
}

#[test]
fn criterion_14_conjecture_sweep_n3_d2() {
    run_conjecture_combo(3, 2);
}

#[test]
fn criterion_14_conjecture_sweep_n2_d3() {
    run_conjecture_combo(2, 3);
}

#[test]
fn criterion_14_conjecture_sweep_n3_d3() {
    run_conjecture_combo(3, 3);
}

#[test]
fn criterion_15_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_povmdyn");
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name);

    let run_ok = |args: &[&str]| {
        let out = Command::new(bin).args(args).output().unwrap();
        assert!(
            out.status.success(),
            "command {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };

    // stdout experiments
    let volume_args = [
        "experiment",
        "volume",
        "--samples",
        "200000",
        "--seed",
        "17",
    ];
    assert_eq!(
        run_ok(&volume_args),
        run_ok(&volume_args),
        "volume reruns differ"
    );

    // file experiments
    let fp1 = path("fp1.csv");
    let fp2 = path("fp2.csv");
    for (file, _) in [(&fp1, 0), (&fp2, 1)] {
        run_ok(&[
            "experiment",
            "fixed-points",
            "--epsilon",
            "0.05",
            "--steps",
            "200",
            "--starts",
            "3",
            "--seed",
            "7",
            "--out",
            file.to_str().unwrap(),
        ]);
    }
    assert_eq!(
        std::fs::read(&fp1).unwrap(),
        std::fs::read(&fp2).unwrap(),
        "fixed-points reruns differ"
    );

    let cj1 = path("cj1.json");
    let cj2 = path("cj2.json");
    for file in [&cj1, &cj2] {
        run_ok(&[
            "experiment",
            "conjecture",
            "--n",
            "2",
            "--d",
            "2",
            "--samples",
            "50",
            "--seed",
            "23",
            "--reading",
            "joint",
            "--out",
            file.to_str().unwrap(),
        ]);
    }
    assert_eq!(
        std::fs::read(&cj1).unwrap(),
        std::fs::read(&cj2).unwrap(),
        "conjecture reruns differ"
    );

    // sampled inputs for the monotone experiment, themselves deterministic
    let povm_file = path("p.json");
    let matrix_file = path("b.json");
    let state_file = path("rho.json");
    let sample_povm = [
        "sample",
        "povm",
        "--n",
        "2",
        "--d",
        "2",
        "--method",
        "near-uniform",
        "--epsilon",
        "0.2",
        "--seed",
        "31",
        "--out",
        povm_file.to_str().unwrap(),
    ];
    run_ok(&sample_povm);
    let first = std::fs::read(&povm_file).unwrap();
    run_ok(&sample_povm);
    assert_eq!(
        first,
        std::fs::read(&povm_file).unwrap(),
        "sampler reruns differ"
    );
    run_ok(&[
        "sample",
        "bistochastic",
        "--n",
        "2",
        "--d",
        "2",
        "--method",
        "near-flat",
        "--epsilon",
        "0.5",
        "--seed",
        "37",
        "--out",
        matrix_file.to_str().unwrap(),
    ]);
    run_ok(&[
        "sample",
        "density",
        "--d",
        "2",
        "--seed",
        "41",
        "--out",
        state_file.to_str().unwrap(),
    ]);

    let mono_args = [
        "experiment",
        "monotone",
        "--povm",
        povm_file.to_str().unwrap(),
        "--matrix",
        matrix_file.to_str().unwrap(),
        "--state",
        state_file.to_str().unwrap(),
        "--steps",
        "10",
    ];
    assert_eq!(
        run_ok(&mono_args),
        run_ok(&mono_args),
        "monotone reruns differ"
    );

    println!(
        "criterion 15 PASS: volume, fixed-points, conjecture, sampler and monotone \
         reruns are byte-identical for fixed flags and seeds"
    );
}

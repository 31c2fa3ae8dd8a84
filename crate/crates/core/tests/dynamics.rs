mod common;

use common::{random_pure_env_channel, random_state, seed, tol};
use proptest::prelude::*;
use repint_core::channel::{pauli_channel, DensityMatrix, StinespringChannel};
use repint_core::dynamics::{
    convergence_diagnostics, evolve_with_unitaries, run_fixed, run_iid_unitary, run_random_env, tilde_unitary_sequence,
    trajectory_rows, twirl_mean, write_trajectory_csv, CheckpointPolicy, EnvSequence, InteractionScheme,
};
use repint_core::mat::ComplexMatrix;
use repint_core::sampling::{estimate_env_mean, haar_unitary, induced_density, EnvLaw, RngStream};
use repint_core::spectral::{channel_spectrum, invariant_state, InvariantStateConfig};

fn plus_y() -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DensityMatrix::pure(&[num_complex::Complex64::new(s, 0.0), num_complex::Complex64::new(0.0, s)]).unwrap()
}

#[test]
fn class_c_channel_converges_to_invariant_state() {
    let ch = random_pure_env_channel(2, 2, 21);
    assert!(channel_spectrum(&ch, &tol()).unwrap().in_class_c);
    let (theta, _) = invariant_state(&ch, &InvariantStateConfig::default(), &tol()).unwrap();
    let traj = run_fixed(&ch, &DensityMatrix::basis_state(2, 0), 10_000, CheckpointPolicy::Geometric).unwrap();
    assert!(traj.final_state().trace_distance(&theta).unwrap() <= 1e-8);
    assert!(traj.final_cesaro().trace_distance(&theta).unwrap() <= 1e-2);
}

#[test]
fn pauli_channel_oscillates_with_cesaro_rate_one_over_n() {
    let target = DensityMatrix::maximally_mixed(2);
    let traj = run_fixed(&pauli_channel(), &plus_y(), 1000, CheckpointPolicy::Every(1)).unwrap();
    for row in trajectory_rows(&traj, &target).unwrap() {
        assert!((row.distance_to_target - 1.0).abs() < 1e-12);
        if row.step > 0 {
            assert!(row.step as f64 * row.cesaro_distance <= 1.0 + 1e-9, "{row:?}");
        }
    }
}

#[test]
fn random_env_cesaro_mean_approaches_mean_channel_fixed_point() {
    let (d, dp) = (2, 2);
    let u = haar_unitary(d * dp, &mut RngStream::new(22, 0).rng());
    let law = EnvLaw::InducedPure { d_ancilla: 2 };
    let mean_ch = StinespringChannel::new(d, u.clone(), law.mean(dp).unwrap(), &tol()).unwrap().to_kraus(&tol()).unwrap();
    let (theta, _) = invariant_state(&mean_ch, &InvariantStateConfig::default(), &tol()).unwrap();

    let mut rng = RngStream::new(22, 1).rng();
    let traj = run_random_env(&u, dp, &law, &DensityMatrix::basis_state(2, 0), 10_000, &mut rng, CheckpointPolicy::Geometric, &tol())
        .unwrap();
    assert!(traj.final_cesaro().trace_distance(&theta).unwrap() <= 0.05);

    // same target from a Monte Carlo estimate of E[β]
    let (est, _) = estimate_env_mean(&law, dp, 20_000, &mut RngStream::new(22, 2).rng()).unwrap();
    let est_ch = StinespringChannel::new(d, u, est, &tol()).unwrap().to_kraus(&tol()).unwrap();
    let (theta_est, _) = invariant_state(&est_ch, &InvariantStateConfig::default(), &tol()).unwrap();
    assert!(theta_est.trace_distance(&theta).unwrap() <= 0.05);
}

#[test]
fn dirac_law_reproduces_fixed_run_exactly() {
    let u = haar_unitary(4, &mut RngStream::new(23, 0).rng());
    let beta = induced_density(2, 2, &mut RngStream::new(23, 1).rng()).unwrap();
    let ch = StinespringChannel::new(2, u.clone(), beta.clone(), &tol()).unwrap().to_kraus(&tol()).unwrap();
    let rho0 = random_state(2, 23);
    let a = run_fixed(&ch, &rho0, 500, CheckpointPolicy::Geometric).unwrap();
    let law = EnvLaw::DiracAt { beta };
    let b = run_random_env(&u, 2, &law, &rho0, 500, &mut RngStream::new(0, 0).rng(), CheckpointPolicy::Geometric, &tol())
        .unwrap();
    assert_eq!(a, b);
}

#[test]
fn iid_unitary_schemes_converge_to_maximally_mixed() {
    let target = DensityMatrix::maximally_mixed(2);
    let rho0 = DensityMatrix::basis_state(2, 0);
    let seqs = [
        (1, EnvSequence::Constant { beta: DensityMatrix::basis_state(1, 0) }),
        (2, EnvSequence::Constant { beta: DensityMatrix::basis_state(2, 0) }),
        (2, EnvSequence::Periodic { cycle: vec![DensityMatrix::basis_state(2, 0), DensityMatrix::basis_state(2, 1)] }),
        (3, EnvSequence::Iid { law: EnvLaw::InducedPure { d_ancilla: 3 } }),
    ];
    for (i, (dp, env)) in seqs.into_iter().enumerate() {
        let mut rng = RngStream::new(24, i as u64).rng();
        let traj = run_iid_unitary(dp, &env, &rho0, 10_000, &mut rng, CheckpointPolicy::Geometric).unwrap();
        let dist = traj.final_cesaro().trace_distance(&target).unwrap();
        assert!(dist <= 0.05, "case {i}: {dist}");
    }
}

#[test]
fn twirl_mean_approaches_maximally_mixed() {
    let taus: Vec<_> = (0..2000).map(|_| DensityMatrix::basis_state(3, 0)).collect();
    let m = twirl_mean(&taus, &mut RngStream::new(25, 0).rng()).unwrap();
    assert!(m.trace_distance(&DensityMatrix::maximally_mixed(3)).unwrap() <= 0.1);
}

#[test]
fn scheme_dispatch_matches_direct_runs() {
    let ch = random_pure_env_channel(2, 2, 26);
    let rho0 = random_state(2, 26);
    let scheme = InteractionScheme::Fixed { channel: ch.clone() };
    assert_eq!(scheme.name(), "fixed");
    let via = scheme.run(&rho0, 64, &mut RngStream::new(0, 0).rng(), CheckpointPolicy::Geometric, &tol()).unwrap();
    assert_eq!(via, run_fixed(&ch, &rho0, 64, CheckpointPolicy::Geometric).unwrap());
}

#[test]
fn trajectory_csv_layout() {
    let traj = run_fixed(&pauli_channel(), &plus_y(), 4, CheckpointPolicy::Geometric).unwrap();
    let rows = trajectory_rows(&traj, &DensityMatrix::maximally_mixed(2)).unwrap();
    let mut buf = Vec::new();
    write_trajectory_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,distance_to_target,cesaro_distance");
    assert_eq!(lines.len(), 1 + 4);
    assert!(lines[1].starts_with("0,"));
    assert!(!text.contains('\r'));
    let steps: Vec<usize> = traj.checkpoints.iter().map(|c| c.step).collect();
    assert_eq!(steps, vec![0, 1, 2, 4]);
    assert_eq!(convergence_diagnostics(&traj, &DensityMatrix::maximally_mixed(2)).unwrap().len(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn states_stay_valid(s in seed()) {
        let ch = random_pure_env_channel(3, 2, s);
        let traj = run_fixed(&ch, &random_state(3, s), 300, CheckpointPolicy::Every(50)).unwrap();
        for c in &traj.checkpoints {
            prop_assert!(c.state.validate(&tol()).is_ok());
            prop_assert!(c.cesaro.validate(&tol()).is_ok());
        }
    }

    #[test]
    fn rotated_frame_evolution(s in seed(), n in 1usize..12) {
        // evolving with Ũ_k gives V_k ρ_k V_k*
        let mut rng = RngStream::new(s, 0).rng();
        let us: Vec<ComplexMatrix> = (0..n).map(|_| haar_unitary(4, &mut rng)).collect();
        let vs: Vec<ComplexMatrix> = (0..n).map(|_| haar_unitary(2, &mut rng)).collect();
        let betas: Vec<DensityMatrix> = (0..n).map(|_| induced_density(2, 2, &mut rng).unwrap()).collect();
        let rho0 = random_state(2, s);
        let plain = evolve_with_unitaries(&us, &betas, &rho0).unwrap();
        let tilde = evolve_with_unitaries(&tilde_unitary_sequence(&us, &vs, 2).unwrap(), &betas, &rho0).unwrap();
        for k in 1..=n {
            let rotated = plain[k].matrix().conjugate_by(&vs[k - 1]);
            prop_assert!((&rotated - tilde[k].matrix()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn checkpoint_policy_keeps_ends(n in 1usize..5000, k in 1usize..100) {
        for p in [CheckpointPolicy::Geometric, CheckpointPolicy::Every(k)] {
            prop_assert!(p.is_checkpoint(0, n) && p.is_checkpoint(n, n));
        }
        prop_assert_eq!(CheckpointPolicy::Every(k).is_checkpoint(k, n.max(k + 1)), true);
    }
}

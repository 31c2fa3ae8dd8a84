mod common;

use common::{hermitian, matrix, random_kraus, random_state, seed, tol};
use num_complex::Complex64;
use proptest::prelude::*;
use repint_core::channel::{
    choi_rank, compose, depolarizing_channel, identity_depolarizing_mixture, pauli, pauli_channel, ChannelFile,
    DensityMatrix, KrausChannel, StinespringChannel,
};
use repint_core::mat::{hermitian_eig, ComplexMatrix};
use repint_core::sampling::{haar_unitary, induced_density, RngStream};

fn stinespring(d: usize, dp: usize, seed: u64) -> StinespringChannel {
    let mut rng = RngStream::new(seed, 3).rng();
    let u = haar_unitary(d * dp, &mut rng);
    let beta = induced_density(dp, dp, &mut rng).unwrap();
    StinespringChannel::new(d, u, beta, &tol()).unwrap()
}

#[test]
fn pauli_fixture_acts_as_expected() {
    let ch = pauli_channel();
    assert!(ch.apply(&pauli(1)).unwrap().max_abs() < 1e-15);
    let id = ComplexMatrix::identity(2);
    assert!((&ch.apply(&id).unwrap() - &id).max_abs() < 1e-15);
    let y = pauli(2);
    assert!((&ch.apply(&y).unwrap() + &y).max_abs() < 1e-15);
}

#[test]
fn depolarizing_sends_everything_to_maximally_mixed() {
    let ch = depolarizing_channel(3);
    let rho = random_state(3, 5);
    let out = ch.apply_state(&rho).unwrap();
    assert!((out.matrix() - DensityMatrix::maximally_mixed(3).matrix()).max_abs() < 1e-14);
    assert_eq!(choi_rank(&ch, &tol()).unwrap(), 9);
}

#[test]
fn trivial_environment_gives_unitary_conjugation() {
    let mut rng = RngStream::new(4, 0).rng();
    let u = haar_unitary(3, &mut rng);
    let ch = StinespringChannel::new(3, u.clone(), DensityMatrix::basis_state(1, 0), &tol()).unwrap();
    let rho = random_state(3, 6);
    let out = ch.apply(&rho).unwrap();
    assert!((out.matrix() - &rho.matrix().conjugate_by(&u)).max_abs() < 1e-13);
    assert_eq!(ch.to_kraus(&tol()).unwrap().len(), 1);
}

#[test]
fn swap_with_pure_environment_replaces_the_state() {
    // U = SWAP on C^2 ⊗ C^2 gives Φ(ρ) = β
    let mut swap = ComplexMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            swap[(j * 2 + i, i * 2 + j)] = Complex64::new(1.0, 0.0);
        }
    }
    let beta = DensityMatrix::basis_state(2, 1);
    let ch = StinespringChannel::new(2, swap, beta.clone(), &tol()).unwrap();
    let out = ch.apply(&random_state(2, 8)).unwrap();
    assert!((out.matrix() - beta.matrix()).max_abs() < 1e-14);
}

#[test]
fn composition_order_last_acts_first() {
    let x = KrausChannel::unitary(pauli(1), &tol()).unwrap();
    let amp = KrausChannel::new(
        vec![
            ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap(),
            ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap(),
        ],
        &tol(),
    )
    .unwrap();
    // amp sends everything to |0><0|, x then flips it
    let c = compose(&[x.clone(), amp.clone()], 16, &tol()).unwrap();
    let out = c.apply_state(&DensityMatrix::basis_state(2, 1)).unwrap();
    assert!((out.matrix() - DensityMatrix::basis_state(2, 1).matrix()).max_abs() < 1e-15);
    assert!(compose(&[amp.clone(), amp.clone(), amp], 7, &tol()).is_err());
}

#[test]
fn channel_file_round_trip() {
    for ch in [ChannelFile::Stinespring(stinespring(2, 2, 1)), ChannelFile::Kraus(random_kraus(2, 3, 1))] {
        let text = ch.to_json().unwrap();
        let back = ChannelFile::from_json(&text, &tol()).unwrap();
        let a = ch.into_kraus(&tol()).unwrap().choi_matrix();
        let b = back.into_kraus(&tol()).unwrap().choi_matrix();
        assert!((&a - &b).max_abs() < 1e-15);
    }
}

#[test]
fn malformed_channel_files_are_rejected() {
    assert!(ChannelFile::from_json(r#"{"d": 2, "operators": [[[2,0],[0,0],[0,0],[2,0]]]}"#, &tol()).is_err());
    assert!(ChannelFile::from_json(r#"{"d": 2, "operators": [[[1,0],[0,0],[0,0]]]}"#, &tol()).is_err());
    assert!(ChannelFile::from_json(r#"{"d": 2, "d_env": 1, "U": [[1,0],[1,0],[0,0],[1,0]], "beta": [[1,0]]}"#, &tol())
        .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trace_is_preserved(s in seed(), x in matrix(2)) {
        let ch = random_kraus(2, 3, s);
        prop_assert!((ch.apply(&x).unwrap().trace() - x.trace()).norm() < 1e-12);
        prop_assert!(ch.completeness_defect() < 1e-12);
    }

    #[test]
    fn states_map_to_states(s in seed()) {
        let ch = random_kraus(3, 2, s);
        let out = ch.apply_state(&random_state(3, s)).unwrap();
        prop_assert!(out.validate(&tol()).is_ok());
        let e = hermitian_eig(out.matrix(), 1e-10).unwrap();
        prop_assert!(e.eigenvalues[0] >= -1e-12);
    }

    #[test]
    fn dual_is_unital_and_adjoint(s in seed(), x in matrix(2), y in matrix(2)) {
        let ch = random_kraus(2, 2, s);
        let dual = ch.dual();
        prop_assert!(dual.unitality_defect() < 1e-12);
        // <Φ*(Y), X> = <Y, Φ(X)>
        let lhs = dual.apply(&y).unwrap().adjoint().matmul(&x).trace();
        let rhs = y.adjoint().matmul(&ch.apply(&x).unwrap()).trace();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn choi_is_psd_with_rank_at_most_kraus_count(s in seed()) {
        let ch = random_kraus(2, 2, s);
        let choi = ch.choi_matrix();
        prop_assert!(choi.hermiticity_defect() < 1e-13);
        let e = hermitian_eig(&choi, 1e-10).unwrap();
        prop_assert!(e.eigenvalues[0] >= -1e-12);
        prop_assert!((choi.trace().re - 2.0).abs() < 1e-12);
        prop_assert!(choi_rank(&ch, &tol()).unwrap() <= ch.len());
    }

    #[test]
    fn representations_agree(s in seed(), h in hermitian(3)) {
        let st = stinespring(3, 2, s);
        let kraus = st.to_kraus(&tol()).unwrap();
        let sup = kraus.superoperator();
        let a = st.apply_matrix(&h).unwrap();
        let b = kraus.apply(&h).unwrap();
        let c = sup.apply(&h).unwrap();
        prop_assert!((&a - &b).max_abs() < 1e-12);
        prop_assert!((&a - &c).max_abs() < 1e-12);
        prop_assert!(kraus.len() <= 3 * 2 * 2);
    }

    #[test]
    fn superoperator_composition_matches_kraus(s in seed(), x in matrix(2)) {
        let a = random_kraus(2, 2, s);
        let b = random_kraus(2, 2, s ^ 0x5555);
        let ab = compose(&[a.clone(), b.clone()], 64, &tol()).unwrap();
        let via_sup = a.superoperator().after(&b.superoperator());
        prop_assert!((&ab.apply(&x).unwrap() - &via_sup.apply(&x).unwrap()).max_abs() < 1e-12);
        prop_assert!((&ab.apply(&x).unwrap() - &a.apply(&b.apply(&x).unwrap()).unwrap()).max_abs() < 1e-12);
    }

    #[test]
    fn mixture_interpolates(p in 0.0f64..=1.0, x in hermitian(2)) {
        let ch = identity_depolarizing_mixture(2, p);
        let expected = &x.scale_real(p) + &ComplexMatrix::identity(2).scale(x.trace() * (1.0 - p) / 2.0);
        prop_assert!((&ch.apply(&x).unwrap() - &expected).max_abs() < 1e-13);
    }
}

#![allow(dead_code)]

use num_complex::Complex64;
use proptest::prelude::*;
use repint_core::channel::{DensityMatrix, KrausChannel};
use repint_core::mat::ComplexMatrix;
use repint_core::sampling::{haar_unitary, induced_density, random_channel, EnsembleSpec, RngStream};
use repint_core::ToleranceConfig;

pub fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

pub fn matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(-1.0f64..1.0, 2 * n * n).prop_map(move |v| {
        ComplexMatrix::from_fn(n, n, |r, c| {
            let k = 2 * (r * n + c);
            Complex64::new(v[k], v[k + 1])
        })
    })
}

pub fn hermitian(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    matrix(n).prop_map(|m| m.hermitian_part())
}

pub fn seed() -> impl Strategy<Value = u64> {
    any::<u64>()
}

/// Random `Φ^{U,β}` in Kraus form with `β` drawn from the induced measure.
pub fn random_kraus(d: usize, dp: usize, seed: u64) -> KrausChannel {
    let mut rng = RngStream::new(seed, 0).rng();
    let u = haar_unitary(d * dp, &mut rng);
    let beta = induced_density(dp, dp, &mut rng).unwrap();
    repint_core::channel::StinespringChannel::new(d, u, beta, &tol()).unwrap().to_kraus(&tol()).unwrap()
}

pub fn random_pure_env_channel(d: usize, dp: usize, seed: u64) -> KrausChannel {
    random_channel(&EnsembleSpec::pure(d, dp), &mut RngStream::new(seed, 0).rng()).unwrap().to_kraus(&tol()).unwrap()
}

pub fn random_state(d: usize, seed: u64) -> DensityMatrix {
    induced_density(d, d, &mut RngStream::new(seed, 99).rng()).unwrap()
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Critical value of the two-sample KS statistic at significance 0.01.
pub fn ks_critical_001(n: usize, m: usize) -> f64 {
    1.628 * (((n + m) as f64) / ((n * m) as f64)).sqrt()
}

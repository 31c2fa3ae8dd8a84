//! Seeded random generation: Ginibre matrices, Haar unitaries, induced and
//! asymptotic induced density matrices, random channels `Φ^{U,β}`.
//!
//! Every sampler draws from an explicit generator; an [`RngStream`] names a
//! reproducible ChaCha20 stream by `(seed, stream_id)`, so independent
//! substreams can be handed to parallel workers without shared state.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{DensityMatrix, StinespringChannel};
use crate::error::{Error, Result};
use crate::mat::{hermitian_eig, partial_trace_env, qr_unitary, ComplexMatrix};
use crate::spectral::{invariant_state, InvariantStateConfig};
use crate::tolerance::ToleranceConfig;

/// Retries allowed in [`sample_asymptotic`] before giving up.
pub const ASYMPTOTIC_RETRY_CAP: usize = 5;

/// Name of a reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Complex standard Gaussian (real and imaginary parts `N(0, 1/2)`) by Box–Muller.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    let r = (-u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    Complex64::new(r * c, r * s)
}

/// `m x n` matrix of independent complex standard Gaussians.
pub fn ginibre<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(m, n, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary: phase-fixed QR of a Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    loop {
        // a Ginibre matrix is singular with probability zero
        if let Ok((q, _)) = qr_unitary(&ginibre(n, n, rng)) {
            return q;
        }
    }
}

/// Uniformly distributed unit vector in `C^d`.
pub fn haar_pure_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Induced measure: `Tr_env[U |e_1⊗f_1><e_1⊗f_1| U*]` with `U` Haar on `U(d d')`.
pub fn induced_density<R: Rng + ?Sized>(d: usize, d_env: usize, rng: &mut R) -> Result<DensityMatrix> {
    if d == 0 || d_env == 0 {
        return Err(Error::InvalidParameter("dimensions must be positive".into()));
    }
    let u = haar_unitary(d * d_env, rng);
    let psi = u.column(0);
    let joint = ComplexMatrix::outer(&psi, &psi);
    Ok(DensityMatrix::from_matrix_unchecked(partial_trace_env(&joint, d, d_env)?))
}

/// Non-increasing probability vector `b` together with the system dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub d: usize,
    pub b: Vec<f64>,
}

impl EnsembleSpec {
    pub fn new(d: usize, b: Vec<f64>) -> Result<Self> {
        validate_probability_vector(&b, 1e-12)?;
        if d == 0 {
            return Err(Error::InvalidParameter("system dimension must be positive".into()));
        }
        Ok(Self { d, b })
    }

    /// `b = (1/d', …, 1/d')`.
    pub fn uniform(d: usize, d_env: usize) -> Self {
        Self { d, b: vec![1.0 / d_env as f64; d_env] }
    }

    /// `b = (1, 0, …, 0)`.
    pub fn pure(d: usize, d_env: usize) -> Self {
        let mut b = vec![0.0; d_env];
        b[0] = 1.0;
        Self { d, b }
    }

    pub fn d_env(&self) -> usize {
        self.b.len()
    }

    pub fn beta(&self) -> DensityMatrix {
        DensityMatrix::from_matrix_unchecked(ComplexMatrix::from_real_diag(&self.b))
    }
}

/// Checks non-negativity, non-increasing order and unit sum within `sum_tol`.
pub fn validate_probability_vector(b: &[f64], sum_tol: f64) -> Result<()> {
    if b.is_empty() {
        return Err(Error::InvalidProbabilityVector("empty".into()));
    }
    if b.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidProbabilityVector("entries must be finite and non-negative".into()));
    }
    if b.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidProbabilityVector("entries must be non-increasing".into()));
    }
    let s: f64 = b.iter().sum();
    if (s - 1.0).abs() > sum_tol {
        return Err(Error::InvalidProbabilityVector(format!("entries sum to {s}, not 1")));
    }
    Ok(())
}

/// Law of a single environment state `β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum EnvLaw {
    /// Induced measure on `d'` levels with a `d_ancilla`-level purifying space.
    InducedPure { d_ancilla: usize },
    /// `V diag(b) V*` with `V` Haar.
    FixedSpectrumHaarBasis { b: Vec<f64> },
    /// Always the given state.
    DiracAt { beta: DensityMatrix },
}

impl EnvLaw {
    pub fn validate(&self, d_env: usize) -> Result<()> {
        match self {
            EnvLaw::InducedPure { d_ancilla } if *d_ancilla == 0 => {
                Err(Error::InvalidParameter("ancilla dimension must be positive".into()))
            }
            EnvLaw::InducedPure { .. } => Ok(()),
            EnvLaw::FixedSpectrumHaarBasis { b } => {
                if b.len() != d_env {
                    return Err(Error::DimensionMismatch { expected: d_env, got: b.len() });
                }
                validate_probability_vector(b, 1e-12)
            }
            EnvLaw::DiracAt { beta } if beta.dim() != d_env => {
                Err(Error::DimensionMismatch { expected: d_env, got: beta.dim() })
            }
            EnvLaw::DiracAt { .. } => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, d_env: usize, rng: &mut R) -> Result<DensityMatrix> {
        match self {
            EnvLaw::InducedPure { d_ancilla } => induced_density(d_env, *d_ancilla, rng),
            EnvLaw::FixedSpectrumHaarBasis { b } => {
                let v = haar_unitary(d_env, rng);
                Ok(DensityMatrix::from_matrix_unchecked(ComplexMatrix::from_real_diag(b).conjugate_by(&v)))
            }
            EnvLaw::DiracAt { beta } => Ok(beta.clone()),
        }
    }

    /// `E[β]` in closed form. Both random laws are unitarily invariant with unit trace, so their mean is `I/d'`.
    pub fn mean(&self, d_env: usize) -> Option<DensityMatrix> {
        match self {
            EnvLaw::DiracAt { beta } => Some(beta.clone()),
            EnvLaw::FixedSpectrumHaarBasis { .. } | EnvLaw::InducedPure { .. } => {
                Some(DensityMatrix::maximally_mixed(d_env))
            }
        }
    }
}

/// Free-function form of [`EnvLaw::sample`] with validation.
pub fn random_env_density<R: Rng + ?Sized>(d_env: usize, rng: &mut R, law: &EnvLaw) -> Result<DensityMatrix> {
    law.validate(d_env)?;
    law.sample(d_env, rng)
}

/// Monte Carlo estimate of `E[β]` with the entrywise standard error (max over entries).
pub fn estimate_env_mean<R: Rng + ?Sized>(
    law: &EnvLaw,
    d_env: usize,
    n: usize,
    rng: &mut R,
) -> Result<(DensityMatrix, f64)> {
    let mut sum = ComplexMatrix::zeros(d_env, d_env);
    let mut sum_sq = vec![0.0; d_env * d_env];
    for _ in 0..n {
        let b = law.sample(d_env, rng)?;
        for (acc, z) in sum_sq.iter_mut().zip(b.matrix().as_slice()) {
            *acc += z.norm_sqr();
        }
        sum.add_scaled(b.matrix(), Complex64::new(1.0, 0.0));
    }
    let mean = sum.scale_real(1.0 / n as f64);
    let se = mean
        .as_slice()
        .iter()
        .zip(&sum_sq)
        .map(|(m, s2)| ((s2 / n as f64 - m.norm_sqr()).max(0.0) / n as f64).sqrt())
        .fold(0.0, f64::max);
    Ok((DensityMatrix::from_matrix_unchecked(mean.hermitian_part()), se))
}

/// `Φ^{U,β}` with `β = diag(b)` and `U` Haar on `U(d d')`.
pub fn random_channel<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<StinespringChannel> {
    let u = haar_unitary(spec.d * spec.d_env(), rng);
    StinespringChannel::new(spec.d, u, spec.beta(), &ToleranceConfig::default())
}

#[derive(Debug, Clone)]
pub struct AsymptoticSample {
    pub state: DensityMatrix,
    /// Number of unitaries discarded because the fixed-point iteration failed.
    pub retries: usize,
}

/// One draw from the asymptotic induced measure `ν_b`: the invariant state of a random `Φ^{U, diag(b)}`.
pub fn sample_asymptotic<R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    rng: &mut R,
    cfg: &InvariantStateConfig,
    tol: &ToleranceConfig,
) -> Result<AsymptoticSample> {
    for retries in 0..=ASYMPTOTIC_RETRY_CAP {
        let ch = random_channel(spec, rng)?.to_kraus(tol)?;
        match invariant_state(&ch, cfg, tol) {
            Ok((state, _)) => return Ok(AsymptoticSample { state, retries }),
            Err(Error::MaxIterationsExceeded { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetryCapExhausted(ASYMPTOTIC_RETRY_CAP))
}

/// Ascending eigenvalues of each sample; round-off negatives are clamped to zero.
pub fn eigenvalue_batch(samples: &[DensityMatrix]) -> Result<Vec<Vec<f64>>> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("empty sample list".into()));
    }
    samples
        .iter()
        .map(|s| {
            let eig = hermitian_eig(s.matrix(), f64::INFINITY)?;
            Ok(eig.eigenvalues.into_iter().map(|l| l.max(0.0)).collect())
        })
        .collect()
}

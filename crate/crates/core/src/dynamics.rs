//! Repeated-interaction schemes: a fixed channel, i.i.d. environment states
//! with a fixed coupling unitary, and i.i.d. Haar coupling unitaries.
//!
//! Each run records states at checkpoints together with the Cesàro mean
//! `μ_n = (ρ_1 + … + ρ_n)/n`, which is accumulated at every step. By
//! convention `μ_0 = ρ_0`.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{DensityMatrix, KrausChannel, StinespringChannel};
use crate::error::{Error, Result};
use crate::mat::{partial_trace_env, system_env_tensor, ComplexMatrix, ONE};
use crate::sampling::{haar_unitary, EnvLaw};
use crate::tolerance::ToleranceConfig;

/// Steps between renormalizations of the running state.
pub const DRIFT_CHECK_INTERVAL: usize = 1000;
/// Largest trace or Hermiticity drift tolerated at a renormalization.
pub const DRIFT_LIMIT: f64 = 1e-8;

/// Which steps keep a full copy of the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointPolicy {
    /// Steps 0, 1, 2, 4, 8, … and the final step.
    Geometric,
    /// Every `k`-th step, step 0 and the final step.
    Every(usize),
}

impl CheckpointPolicy {
    pub fn is_checkpoint(&self, step: usize, n_steps: usize) -> bool {
        step == 0
            || step == n_steps
            || match *self {
                CheckpointPolicy::Geometric => step.is_power_of_two(),
                CheckpointPolicy::Every(k) => k > 0 && step.is_multiple_of(k),
            }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub step: usize,
    pub state: DensityMatrix,
    pub cesaro: DensityMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub d: usize,
    pub n_steps: usize,
    pub checkpoints: Vec<Checkpoint>,
}

impl Trajectory {
    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("a trajectory always holds step 0")
    }

    pub fn final_state(&self) -> &DensityMatrix {
        &self.last().state
    }

    pub fn final_cesaro(&self) -> &DensityMatrix {
        &self.last().cesaro
    }

    pub fn states(&self) -> impl Iterator<Item = &DensityMatrix> {
        self.checkpoints.iter().map(|c| &c.state)
    }
}

/// Runs `n_steps` applications of `step`, keeping checkpoints and Cesàro sums.
fn evolve(
    rho0: &DensityMatrix,
    n_steps: usize,
    policy: CheckpointPolicy,
    mut step: impl FnMut(&ComplexMatrix) -> Result<ComplexMatrix>,
) -> Result<Trajectory> {
    let d = rho0.dim();
    let mut rho = rho0.matrix().clone();
    let mut sum = ComplexMatrix::zeros(d, d);
    let mut checkpoints = vec![Checkpoint { step: 0, state: rho0.clone(), cesaro: rho0.clone() }];
    for n in 1..=n_steps {
        rho = step(&rho)?;
        if n % DRIFT_CHECK_INTERVAL == 0 {
            rho = renormalize(&rho, n)?;
        }
        sum.add_scaled(&rho, ONE);
        if policy.is_checkpoint(n, n_steps) {
            checkpoints.push(Checkpoint {
                step: n,
                state: DensityMatrix::from_matrix_unchecked(rho.clone()),
                cesaro: DensityMatrix::from_matrix_unchecked(sum.scale_real(1.0 / n as f64)),
            });
        }
    }
    Ok(Trajectory { d, n_steps, checkpoints })
}

fn renormalize(rho: &ComplexMatrix, step: usize) -> Result<ComplexMatrix> {
    let drift = (rho.trace().re - 1.0).abs().max(rho.trace().im.abs()).max(rho.hermiticity_defect());
    if !rho.all_finite() || drift > DRIFT_LIMIT {
        return Err(Error::Drift { step, drift });
    }
    let h = rho.hermitian_part();
    let tr = h.trace().re;
    Ok(h.scale_real(1.0 / tr))
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `ρ_k = Φ(ρ_{k-1})`.
pub fn run_fixed(ch: &KrausChannel, rho0: &DensityMatrix, n_steps: usize, policy: CheckpointPolicy) -> Result<Trajectory> {
    check_dim(ch.d(), rho0.dim())?;
    evolve(rho0, n_steps, policy, |rho| ch.apply(rho))
}

/// `Tr_env[U (X ⊗ β) U*]` for an already-validated `U`.
fn dilate(u: &ComplexMatrix, beta: &DensityMatrix, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = x.dim();
    partial_trace_env(&system_env_tensor(x, beta.matrix())?.conjugate_by(u), d, beta.dim())
}

fn validate_unitary(u: &ComplexMatrix, d: usize, d_env: usize, tol: &ToleranceConfig) -> Result<()> {
    check_dim(d * d_env, u.require_square()?)?;
    let defect = u.unitarity_defect();
    if defect > tol.reconstruction * ((d * d_env) as f64).sqrt() {
        return Err(Error::NotUnitary(defect));
    }
    Ok(())
}

/// `ρ_n = Tr_env[U (ρ_{n-1} ⊗ β_n) U*]` with `β_n` i.i.d. from `law`.
///
/// A [`EnvLaw::DiracAt`] law goes through the Kraus form of `Φ^{U,β}`, so the
/// result is identical to [`run_fixed`] on that channel.
#[allow(clippy::too_many_arguments)]
pub fn run_random_env<R: Rng + ?Sized>(
    u: &ComplexMatrix,
    d_env: usize,
    law: &EnvLaw,
    rho0: &DensityMatrix,
    n_steps: usize,
    rng: &mut R,
    policy: CheckpointPolicy,
    tol: &ToleranceConfig,
) -> Result<Trajectory> {
    let d = rho0.dim();
    validate_unitary(u, d, d_env, tol)?;
    law.validate(d_env)?;
    if let EnvLaw::DiracAt { beta } = law {
        let ch = StinespringChannel::new(d, u.clone(), beta.clone(), tol)?.to_kraus(tol)?;
        return run_fixed(&ch, rho0, n_steps, policy);
    }
    evolve(rho0, n_steps, policy, |rho| {
        let beta = law.sample(d_env, rng)?;
        dilate(u, &beta, rho)
    })
}

/// Source of the environment states `β_n` for the i.i.d.-unitary scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvSequence {
    Constant { beta: DensityMatrix },
    /// `β_n = cycle[(n-1) mod len]`.
    Periodic { cycle: Vec<DensityMatrix> },
    Iid { law: EnvLaw },
}

impl EnvSequence {
    fn validate(&self, d_env: usize) -> Result<()> {
        match self {
            EnvSequence::Constant { beta } => check_dim(d_env, beta.dim()),
            EnvSequence::Periodic { cycle } if cycle.is_empty() => {
                Err(Error::InvalidParameter("periodic environment sequence is empty".into()))
            }
            EnvSequence::Periodic { cycle } => cycle.iter().try_for_each(|b| check_dim(d_env, b.dim())),
            EnvSequence::Iid { law } => law.validate(d_env),
        }
    }

    fn get<R: Rng + ?Sized>(&self, n: usize, d_env: usize, rng: &mut R) -> Result<DensityMatrix> {
        match self {
            EnvSequence::Constant { beta } => Ok(beta.clone()),
            EnvSequence::Periodic { cycle } => Ok(cycle[(n - 1) % cycle.len()].clone()),
            EnvSequence::Iid { law } => law.sample(d_env, rng),
        }
    }
}

/// `ρ_n = Tr_env[U_n (ρ_{n-1} ⊗ β_n) U_n*]` with `U_n` i.i.d. Haar on `U(d d')`.
/// Each step draws `U_n` before `β_n`.
pub fn run_iid_unitary<R: Rng + ?Sized>(
    d_env: usize,
    env: &EnvSequence,
    rho0: &DensityMatrix,
    n_steps: usize,
    rng: &mut R,
    policy: CheckpointPolicy,
) -> Result<Trajectory> {
    let d = rho0.dim();
    env.validate(d_env)?;
    let mut n = 0;
    evolve(rho0, n_steps, policy, |rho| {
        n += 1;
        let u = haar_unitary(d * d_env, rng);
        let beta = env.get(n, d_env, rng)?;
        dilate(&u, &beta, rho)
    })
}

/// The three schemes behind a single entry point.
#[derive(Debug, Clone, PartialEq)]
pub enum InteractionScheme {
    Fixed { channel: KrausChannel },
    RandomEnv { u: ComplexMatrix, d_env: usize, law: EnvLaw },
    IidUnitary { d_env: usize, env: EnvSequence },
}

impl InteractionScheme {
    pub fn name(&self) -> &'static str {
        match self {
            InteractionScheme::Fixed { .. } => "fixed",
            InteractionScheme::RandomEnv { .. } => "random-env",
            InteractionScheme::IidUnitary { .. } => "iid-unitary",
        }
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        rho0: &DensityMatrix,
        n_steps: usize,
        rng: &mut R,
        policy: CheckpointPolicy,
        tol: &ToleranceConfig,
    ) -> Result<Trajectory> {
        match self {
            InteractionScheme::Fixed { channel } => run_fixed(channel, rho0, n_steps, policy),
            InteractionScheme::RandomEnv { u, d_env, law } => {
                run_random_env(u, *d_env, law, rho0, n_steps, rng, policy, tol)
            }
            InteractionScheme::IidUnitary { d_env, env } => run_iid_unitary(*d_env, env, rho0, n_steps, rng, policy),
        }
    }
}

/// `(V_1 τ_1 V_1* + … + V_n τ_n V_n*)/n` with independent Haar `V_k`.
pub fn twirl_mean<R: Rng + ?Sized>(taus: &[DensityMatrix], rng: &mut R) -> Result<DensityMatrix> {
    let Some(first) = taus.first() else {
        return Err(Error::InvalidParameter("empty state list".into()));
    };
    let d = first.dim();
    let mut sum = ComplexMatrix::zeros(d, d);
    for tau in taus {
        check_dim(d, tau.dim())?;
        sum.add_scaled(&tau.matrix().conjugate_by(&haar_unitary(d, rng)), ONE);
    }
    Ok(DensityMatrix::from_matrix_unchecked(sum.scale_real(1.0 / taus.len() as f64)))
}

/// `Ũ_n = (V_n ⊗ I) U_n (V_{n-1}* ⊗ I)` with `V_0 = I`.
pub fn tilde_unitary_sequence(us: &[ComplexMatrix], vs: &[ComplexMatrix], d_env: usize) -> Result<Vec<ComplexMatrix>> {
    check_dim(us.len(), vs.len())?;
    let Some(v0) = vs.first() else {
        return Ok(Vec::new());
    };
    let d = v0.require_square()?;
    let id_env = ComplexMatrix::identity(d_env);
    let mut prev = ComplexMatrix::identity(d * d_env);
    let mut out = Vec::with_capacity(us.len());
    for (u, v) in us.iter().zip(vs) {
        check_dim(d * d_env, u.require_square()?)?;
        check_dim(d, v.require_square()?)?;
        let lifted = system_env_tensor(v, &id_env)?;
        out.push(lifted.matmul(u).matmul(&prev.adjoint()));
        prev = lifted;
    }
    Ok(out)
}

/// `ρ_0, …, ρ_n` for explicit unitaries `U_k` and environment states `β_k`.
pub fn evolve_with_unitaries(
    us: &[ComplexMatrix],
    betas: &[DensityMatrix],
    rho0: &DensityMatrix,
) -> Result<Vec<DensityMatrix>> {
    check_dim(us.len(), betas.len())?;
    let mut states = vec![rho0.clone()];
    for (u, beta) in us.iter().zip(betas) {
        check_dim(rho0.dim() * beta.dim(), u.require_square()?)?;
        let next = dilate(u, beta, states.last().expect("nonempty").matrix())?;
        states.push(DensityMatrix::from_matrix_unchecked(next));
    }
    Ok(states)
}

/// Trace-norm distance of each checkpoint state to `target`.
pub fn convergence_diagnostics(traj: &Trajectory, target: &DensityMatrix) -> Result<Vec<(usize, f64)>> {
    check_dim(traj.d, target.dim())?;
    traj.checkpoints.iter().map(|c| Ok((c.step, c.state.trace_distance(target)?))).collect()
}

/// One exported row per checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub distance_to_target: f64,
    pub cesaro_distance: f64,
}

pub fn trajectory_rows(traj: &Trajectory, target: &DensityMatrix) -> Result<Vec<TrajectoryRow>> {
    check_dim(traj.d, target.dim())?;
    traj.checkpoints
        .iter()
        .map(|c| {
            Ok(TrajectoryRow {
                step: c.step,
                distance_to_target: c.state.trace_distance(target)?,
                cesaro_distance: c.cesaro.trace_distance(target)?,
            })
        })
        .collect()
}

/// CSV with header `step,distance_to_target,cesaro_distance`.
pub fn write_trajectory_csv<W: Write>(rows: &[TrajectoryRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationManifest {
    pub scheme: String,
    pub d: usize,
    pub d_prime: usize,
    pub seed: u64,
    pub n_steps: usize,
}

impl SimulationManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

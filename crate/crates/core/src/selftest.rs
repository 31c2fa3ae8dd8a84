//! The acceptance suite as library code, shared by the `acceptance` test
//! target and the `selftest` subcommand.
//!
//! Every criterion is deterministic given its seed. Monte Carlo criteria use
//! tolerance bands, so a different seed changes the draws and should leave
//! the verdict unchanged.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::channel::{pauli, pauli_channel, DensityMatrix, KrausChannel, StinespringChannel};
use crate::dynamics::{
    evolve_with_unitaries, run_fixed, run_iid_unitary, run_random_env, tilde_unitary_sequence, CheckpointPolicy,
    EnvSequence,
};
use crate::error::Result;
use crate::mat::{frobenius_distance, qr_unitary, ComplexMatrix, ONE, ZERO};
use crate::pipeline::{figure_parameter_sets, read_eigenvalue_csv, sample_batch, write_eigenvalue_csv, Ensemble};
use crate::sampling::{ginibre, haar_unitary, induced_density, random_channel, EnsembleSpec, EnvLaw, RngStream};
use crate::spectral::{
    brute_force_common_eigenvector, channel_spectrum, invariant_state, irreducibility_check,
    shemesh_common_eigenvector, strict_positivity_probe, InvariantStateConfig, PositivityVerdict, Verdict,
};
use crate::tolerance::ToleranceConfig;

/// Threshold for Shemesh statistics and positivity probes.
pub const KERNEL_TOL: f64 = 1e-8;

type Check = fn(u64) -> Result<(bool, String)>;

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub tags: &'static [&'static str],
    pub seed: u64,
    pub budget: Option<Duration>,
    check: Check,
}

impl Criterion {
    pub fn matches(&self, filter: &str) -> bool {
        let f = filter.trim().to_ascii_lowercase();
        f == self.id.to_string() || self.name.contains(&f) || self.tags.iter().any(|t| *t == f)
    }

    pub fn run(&self, seed_override: Option<u64>) -> CriterionResult {
        let start = Instant::now();
        let outcome = (self.check)(seed_override.unwrap_or(self.seed));
        let elapsed = start.elapsed();
        let (mut passed, mut detail) = match outcome {
            Ok(x) => x,
            Err(e) => (false, format!("error: {e}")),
        };
        if let Some(budget) = self.budget {
            if elapsed > budget {
                passed = false;
                detail = format!("{detail}; over runtime budget of {:.0}s", budget.as_secs_f64());
            }
        }
        CriterionResult { id: self.id, name: self.name, passed, detail, seconds: elapsed.as_secs_f64() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {:<28} {:>7.2}s  {}", self.id, self.name, self.seconds, self.detail)
    }
}

pub fn criteria() -> Vec<Criterion> {
    let secs = Duration::from_secs;
    vec![
        Criterion { id: 1, name: "pauli-fixture", tags: &["pauli"], seed: 0, budget: Some(secs(1)), check: pauli_fixture },
        Criterion {
            id: 2,
            name: "representation-equivalence",
            tags: &["channel"],
            seed: 2,
            budget: Some(secs(30)),
            check: representation_equivalence,
        },
        Criterion { id: 3, name: "chaotic-fixed-point", tags: &["spectral"], seed: 3, budget: None, check: chaotic_fixed_point },
        Criterion { id: 4, name: "class-c-genericity", tags: &["spectral"], seed: 4, budget: Some(secs(120)), check: class_c_genericity },
        Criterion { id: 5, name: "haar-moments", tags: &["sampling"], seed: 5, budget: None, check: haar_moments },
        Criterion {
            id: 6,
            name: "random-env-ergodic-mean",
            tags: &["dynamics"],
            seed: 7,
            budget: Some(secs(60)),
            check: random_env_ergodic_mean,
        },
        Criterion { id: 7, name: "iid-unitary-ergodic-mean", tags: &["dynamics"], seed: 6, budget: None, check: iid_unitary_ergodic_mean },
        Criterion { id: 8, name: "tilde-unitary-identity", tags: &["dynamics"], seed: 8, budget: None, check: tilde_unitary_identity },
        Criterion { id: 9, name: "shemesh-oracle", tags: &["spectral"], seed: 9, budget: None, check: shemesh_oracle },
        Criterion { id: 10, name: "choi-rank-bound", tags: &["spectral"], seed: 10, budget: None, check: choi_rank_bound },
        Criterion { id: 11, name: "figure-pipeline", tags: &["pipeline"], seed: 11, budget: Some(secs(600)), check: figure_pipeline },
    ]
}

/// Runs the criteria selected by `only` (all when `None`).
pub fn run_selected(only: Option<&str>, seed_override: Option<u64>) -> Vec<CriterionResult> {
    criteria().iter().filter(|c| only.is_none_or(|f| c.matches(f))).map(|c| c.run(seed_override)).collect()
}

fn max_dev(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).max_abs()
}

fn pauli_fixture(_seed: u64) -> Result<(bool, String)> {
    let tol = ToleranceConfig::default();
    let ch = pauli_channel();
    let id = ComplexMatrix::identity(2);
    let zero = ComplexMatrix::zeros(2, 2);
    let mut worst: f64 = 0.0;
    worst = worst.max(max_dev(&ch.apply(&id)?, &id));
    worst = worst.max(max_dev(&ch.apply(&pauli(2))?, &pauli(2).scale_real(-1.0)));
    worst = worst.max(max_dev(&ch.apply(&pauli(1))?, &zero));
    worst = worst.max(max_dev(&ch.apply(&pauli(3))?, &zero));

    let report = channel_spectrum(&ch, &tol)?;
    let mut expected = vec![ONE, -ONE, ZERO, ZERO];
    for z in &report.eigenvalues {
        let (pos, dist) = expected
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (z - w).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("four expected values");
        worst = worst.max(dist);
        expected.remove(pos);
    }

    let start = DensityMatrix::new((&id + &pauli(2)).scale_real(0.5), &tol)?;
    let traj = run_fixed(&ch, &start, 20, CheckpointPolicy::Every(1))?;
    for c in &traj.checkpoints {
        let sign = if c.step % 2 == 0 { 1.0 } else { -1.0 };
        let want = (&id + &pauli(2).scale_real(sign)).scale_real(0.5);
        worst = worst.max(max_dev(c.state.matrix(), &want));
    }

    let verdict = irreducibility_check(&ch, KERNEL_TOL)?.verdict;
    let ok = worst <= 1e-12 && verdict == Verdict::Irreducible && !report.in_class_c;
    Ok((ok, format!("max deviation {worst:.1e}, verdict {verdict:?}, in_class_C {}", report.in_class_c)))
}

fn representation_equivalence(seed: u64) -> Result<(bool, String)> {
    let tol = ToleranceConfig::default();
    let dims = [(2, 2), (2, 3), (3, 2), (3, 3)];
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let mut rng = RngStream::new(seed, i).rng();
        let (d, dp) = dims[(i % 4) as usize];
        let u = haar_unitary(d * dp, &mut rng);
        let beta = induced_density(dp, dp, &mut rng)?;
        let st = StinespringChannel::new(d, u, beta, &tol)?;
        let kraus = st.to_kraus(&tol)?;
        let sup = kraus.superoperator();
        for _ in 0..20 {
            let rho = induced_density(d, d, &mut rng)?;
            let a = st.apply_matrix(rho.matrix())?;
            let b = kraus.apply(rho.matrix())?;
            let c = sup.apply(rho.matrix())?;
            worst = worst.max(frobenius_distance(&a, &b)).max(frobenius_distance(&a, &c)).max(frobenius_distance(&b, &c));
        }
    }
    Ok((worst <= 1e-12, format!("max pairwise Frobenius gap {worst:.1e} over 2000 states")))
}

fn chaotic_fixed_point(seed: u64) -> Result<(bool, String)> {
    let tol = ToleranceConfig::default();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (d, dp) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
        for i in 0..50u64 {
            let mut rng = RngStream::new(seed, i).rng();
            let ch = random_channel(&EnsembleSpec::uniform(d, dp), &mut rng)?.to_kraus(&tol)?;
            let (rho, _) = invariant_state(&ch, &InvariantStateConfig::default(), &tol)?;
            worst = worst.max(rho.trace_distance(&DensityMatrix::maximally_mixed(d))?);
            count += 1;
        }
    }
    Ok((worst <= 1e-10, format!("max ||ρ - I/d||_1 = {worst:.1e} over {count} channels")))
}

fn class_c_genericity(seed: u64) -> Result<(bool, String)> {
    let tol = ToleranceConfig::default();
    let spec = EnsembleSpec::pure(2, 2);
    let mut failures = 0;
    let mut min_gap = f64::INFINITY;
    for i in 0..200u64 {
        let ch = random_channel(&spec, &mut RngStream::new(seed, i).rng())?.to_kraus(&tol)?;
        let report = channel_spectrum(&ch, &tol)?;
        let irreducible = irreducibility_check(&ch, KERNEL_TOL)?.verdict == Verdict::Irreducible;
        if !(report.in_class_c && irreducible) {
            failures += 1;
        }
        min_gap = min_gap.min(report.spectral_gap);
    }
    Ok((failures == 0, format!("{failures}/200 failures, minimum spectral gap {min_gap:.4}")))
}

/// Per-entry check of `E|u_ij|² = 1/n` within three standard errors.
fn second_moment_check(samples: &[ComplexMatrix], n: usize) -> (usize, f64) {
    let count = samples.len() as f64;
    let mut violations = 0;
    let mut worst_z: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let xs: Vec<f64> = samples.iter().map(|u| u[(i, j)].norm_sqr()).collect();
            let mean = xs.iter().sum::<f64>() / count;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0);
            let z = (mean - 1.0 / n as f64).abs() / (var / count).sqrt();
            worst_z = worst_z.max(z);
            if z > 3.0 {
                violations += 1;
            }
        }
    }
    (violations, worst_z)
}

fn haar_moments(seed: u64) -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2usize, 4, 6] {
        let mut rng = RngStream::new(seed, n as u64).rng();
        let samples: Vec<ComplexMatrix> = (0..10_000).map(|_| haar_unitary(n, &mut rng)).collect();
        let unitarity = samples.iter().map(|u| u.unitarity_defect()).fold(0.0, f64::max);
        let (violations, worst_z) = second_moment_check(&samples, n);
        ok &= violations == 0 && unitarity <= 1e-12;
        parts.push(format!("n={n}: max z {worst_z:.2}, unitarity {unitarity:.1e}"));
    }
    Ok((ok, parts.join("; ")))
}

fn random_env_ergodic_mean(seed: u64) -> Result<(bool, String)> {
    let tol = ToleranceConfig::default();
    let u = haar_unitary(4, &mut RngStream::new(seed, 0).rng());
    let law = EnvLaw::InducedPure { d_ancilla: 2 };
    let target = DensityMatrix::maximally_mixed(2);
    let rho0 = DensityMatrix::basis_state(2, 0);
    let mut worst: f64 = 0.0;
    for s in 1..=10u64 {
        let mut rng = RngStream::new(seed, s).rng();
        let traj = run_random_env(&u, 2, &law, &rho0, 10_000, &mut rng, CheckpointPolicy::Geometric, &tol)?;
        worst = worst.max(traj.final_cesaro().trace_distance(&target)?);
    }
    Ok((worst <= 0.05, format!("max ||μ_N - I/2||_1 = {worst:.4} over 10 seeds (N = 10^4)")))
}

fn iid_unitary_ergodic_mean(seed: u64) -> Result<(bool, String)> {
    let env = EnvSequence::Constant { beta: DensityMatrix::basis_state(2, 0) };
    let target = DensityMatrix::maximally_mixed(2);
    let rho0 = DensityMatrix::basis_state(2, 0);
    let (mut within, mut sum_1e3, mut sum_1e4) = (0, 0.0, 0.0);
    for s in 0..10u64 {
        let mut rng = RngStream::new(seed, s).rng();
        let traj = run_iid_unitary(2, &env, &rho0, 10_000, &mut rng, CheckpointPolicy::Every(1000))?;
        let at = |n: usize| -> Result<f64> {
            let c = traj.checkpoints.iter().find(|c| c.step == n).expect("checkpoint present");
            c.cesaro.trace_distance(&target)
        };
        let (e3, e4) = (at(1000)?, at(10_000)?);
        if e3 <= 3.0 / 1000f64.sqrt() && e4 <= 3.0 / 10_000f64.sqrt() {
            within += 1;
        }
        sum_1e3 += e3;
        sum_1e4 += e4;
    }
    let ok = within >= 9 && sum_1e4 < sum_1e3;
    Ok((ok, format!("{within}/10 seeds inside 3/√N, mean error {:.4} (N=10^3) vs {:.4} (N=10^4)", sum_1e3 / 10.0, sum_1e4 / 10.0)))
}

fn tilde_unitary_identity(seed: u64) -> Result<(bool, String)> {
    let (d, dp) = (2, 2);
    let mut worst: f64 = 0.0;
    for s in 0..20u64 {
        let mut rng = RngStream::new(seed, s).rng();
        let us: Vec<_> = (0..10).map(|_| haar_unitary(d * dp, &mut rng)).collect();
        let vs: Vec<_> = (0..10).map(|_| haar_unitary(d, &mut rng)).collect();
        let betas = (0..10).map(|_| induced_density(dp, dp, &mut rng)).collect::<Result<Vec<_>>>()?;
        let rho0 = induced_density(d, d, &mut rng)?;
        let plain = evolve_with_unitaries(&us, &betas, &rho0)?;
        let tilde = evolve_with_unitaries(&tilde_unitary_sequence(&us, &vs, dp)?, &betas, &rho0)?;
        for n in 1..=10 {
            let rotated = plain[n].matrix().conjugate_by(&vs[n - 1]);
            worst = worst.max(frobenius_distance(tilde[n].matrix(), &rotated));
        }
    }

    let mut rng = RngStream::new(seed, 1000).rng();
    let samples: Vec<ComplexMatrix> = (0..10_000)
        .map(|_| {
            let us = [haar_unitary(d * dp, &mut rng), haar_unitary(d * dp, &mut rng)];
            let vs = [haar_unitary(d, &mut rng), haar_unitary(d, &mut rng)];
            tilde_unitary_sequence(&us, &vs, dp).map(|t| t[1].clone())
        })
        .collect::<Result<_>>()?;
    let (violations, worst_z) = second_moment_check(&samples, d * dp);
    let ok = worst <= 1e-12 && violations == 0;
    Ok((ok, format!("max ||ρ̃_n - V_n ρ_n V_n*||_F = {worst:.1e}; Ũ_2 second moments max z {worst_z:.2}")))
}

/// Pair with a shared eigenvector `S e_1`: similar upper-triangular matrices.
fn shared_eigenvector_pair(d: usize, rng: &mut impl rand::Rng) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let tri = |g: ComplexMatrix| ComplexMatrix::from_fn(d, d, |r, c| if r <= c { g[(r, c)] } else { ZERO });
    let (q, _) = qr_unitary(&ginibre(d, d, rng))?;
    let ta = tri(ginibre(d, d, rng));
    let tb = tri(ginibre(d, d, rng));
    Ok((ta.conjugate_by(&q), tb.conjugate_by(&q)))
}

fn shemesh_oracle(seed: u64) -> Result<(bool, String)> {
    let mut disagreements = 0;
    let mut cases = 0;
    for i in 0..120u64 {
        let mut rng = RngStream::new(seed, i).rng();
        let d = if i % 2 == 0 { 2 } else { 3 };
        let (a, b) = if i < 100 {
            (ginibre(d, d, &mut rng), ginibre(d, d, &mut rng))
        } else {
            shared_eigenvector_pair(d, &mut rng)?
        };
        let fast = shemesh_common_eigenvector(&a, &b, KERNEL_TOL)?.has_common;
        let slow = brute_force_common_eigenvector(&a, &b)?;
        if fast != slow || (i >= 100 && !fast) {
            disagreements += 1;
        }
        cases += 1;
    }
    Ok((disagreements == 0, format!("{disagreements} disagreements over {cases} pairs (100 random, 20 constructed)")))
}

fn choi_rank_bound(seed: u64) -> Result<(bool, String)> {
    let tol = ToleranceConfig::default();
    let mut misclassified = 0;
    let mut deficient = 0;
    let mut total = 0;
    for (d, n) in [(2usize, 100u64), (3, 50)] {
        let spec = EnsembleSpec::pure(d, d);
        for i in 0..n {
            let mut rng = RngStream::new(seed, 1000 * d as u64 + i).rng();
            let ch: KrausChannel = random_channel(&spec, &mut rng)?.to_kraus(&tol)?;
            if ch.len() >= 2 * d - 1 {
                continue;
            }
            total += 1;
            let probe = strict_positivity_probe(&ch, 32, &mut rng, &tol)?;
            if probe.verdict != PositivityVerdict::NotStrictlyPositive {
                misclassified += 1;
            }
            if d == 2 && probe.min_output_eigenvalue <= KERNEL_TOL {
                deficient += 1;
            }
        }
    }
    let ok = misclassified == 0 && deficient >= 95;
    Ok((ok, format!("{misclassified}/{total} misclassified; rank-deficient output found for {deficient}/100 at d=2")))
}

fn figure_pipeline(seed: u64) -> Result<(bool, String)> {
    let tol = ToleranceConfig::default();
    let mut sets = figure_parameter_sets();
    sets.push(Ensemble::Asymptotic { d: 2, b: vec![0.5, 0.5] });
    let mut worst_sum: f64 = 0.0;
    let mut negatives = 0;
    let mut uniform_dev: f64 = 0.0;
    for (k, set) in sets.iter().enumerate() {
        let batch = sample_batch(set, seed.wrapping_add(k as u64), 1000, 0, &tol)?;
        let mut buf = Vec::new();
        write_eigenvalue_csv(&batch.rows, &mut buf)?;
        let rows = read_eigenvalue_csv(&String::from_utf8_lossy(&buf))?;
        for row in &rows {
            negatives += row.iter().filter(|x| **x < 0.0).count();
            worst_sum = worst_sum.max((row.iter().sum::<f64>() - 1.0).abs());
            if k == sets.len() - 1 {
                uniform_dev = row.iter().map(|x| (x - 0.5).abs()).fold(uniform_dev, f64::max);
            }
        }
    }
    let ok = negatives == 0 && worst_sum <= 1e-10 && uniform_dev <= 1e-10;
    Ok((
        ok,
        format!("{} sets x 1000 rows: max |sum - 1| {worst_sum:.1e}, {negatives} negative entries, uniform-b deviation {uniform_dev:.1e}", sets.len()),
    ))
}

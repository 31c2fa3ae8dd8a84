//! Spectra of channels, class-C membership, invariant states and
//! irreducibility tests (Shemesh criteria, positivity probes).

use std::collections::VecDeque;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{DensityMatrix, KrausChannel, Superoperator};
use crate::error::{Error, Result};
use crate::mat::{
    commutator, complex_eigenvalues, hermitian_eig, k_subsets, smallest_eigenvalue_psd, trace_norm_hermitian,
    wedge_power, ComplexMatrix, ONE,
};
use crate::sampling::haar_pure_vector;
use crate::tolerance::ToleranceConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Superoperator eigenvalues, descending modulus then descending phase.
    pub eigenvalues: Vec<Complex64>,
    /// Eigenvalues with modulus at least `1 - peripheral`, ordered by `|arg|`.
    pub peripheral: Vec<Complex64>,
    pub spectral_gap: f64,
    #[serde(rename = "in_class_C")]
    pub in_class_c: bool,
    pub multiplicity_of_one: usize,
}

/// Spectrum of `superoperator_of(ch)` and its peripheral classification.
pub fn channel_spectrum(ch: &KrausChannel, tol: &ToleranceConfig) -> Result<SpectralReport> {
    let eigenvalues = complex_eigenvalues(ch.superoperator().matrix())?;
    let ptol = tol.peripheral;

    let mut peripheral: Vec<Complex64> = eigenvalues.iter().copied().filter(|z| z.norm() >= 1.0 - ptol).collect();
    peripheral.sort_by(|a, b| a.arg().abs().total_cmp(&b.arg().abs()).then(b.arg().total_cmp(&a.arg())));

    let multiplicity_of_one = eigenvalues.iter().filter(|z| (*z - ONE).norm() <= ptol).count();

    let invariant_idx = eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - ONE).norm().total_cmp(&(b.1 - ONE).norm()))
        .map(|(i, _)| i);
    let rest_max = eigenvalues
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != invariant_idx)
        .map(|(_, z)| z.norm())
        .fold(0.0, f64::max);

    let in_class_c = peripheral.len() == 1 && (peripheral[0] - ONE).norm() <= ptol;
    Ok(SpectralReport { eigenvalues, peripheral, spectral_gap: 1.0 - rest_max, in_class_c, multiplicity_of_one })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantStateConfig {
    pub max_iterations: usize,
    /// Length of the window over which a non-decreasing residual counts as oscillation.
    pub oscillation_window: usize,
    /// Number of iterates averaged in each Cesàro round.
    pub cesaro_length: usize,
    /// Starting point; `I/d` when absent.
    pub initial: Option<DensityMatrix>,
}

impl Default for InvariantStateConfig {
    fn default() -> Self {
        Self { max_iterations: 100_000, oscillation_window: 16, cesaro_length: 10_000, initial: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantDiagnostics {
    pub iterations: usize,
    pub cesaro_rounds: usize,
    /// `||Φ(ρ) - ρ||_1` of the returned state.
    pub residual: f64,
}

/// Fixed point of `Φ` by iteration, falling back to Cesàro averages when the
/// residual stops decreasing.
pub fn invariant_state(
    ch: &KrausChannel,
    cfg: &InvariantStateConfig,
    tol: &ToleranceConfig,
) -> Result<(DensityMatrix, InvariantDiagnostics)> {
    let d = ch.d();
    let mut rho = match &cfg.initial {
        Some(r) if r.dim() != d => return Err(Error::DimensionMismatch { expected: d, got: r.dim() }),
        Some(r) => r.matrix().clone(),
        None => DensityMatrix::maximally_mixed(d).into_matrix(),
    };
    // ||X||_1 <= sqrt(d) ||X||_F, so this stopping rule bounds the trace-norm residual
    let frob_target = tol.residual / (d as f64).sqrt();
    let window = cfg.oscillation_window.max(1);

    let mut history: VecDeque<f64> = VecDeque::with_capacity(window + 1);
    let mut best = (rho.clone(), f64::INFINITY);
    let mut iterations = 0;
    let mut cesaro_rounds = 0;

    loop {
        let next = ch.apply(&rho)?;
        iterations += 1;
        let res = (&next - &rho).frobenius_norm();
        if res < best.1 {
            best = (rho.clone(), res);
        }
        if res <= 0.5 * frob_target {
            if let Ok(out) = finish(ch, &rho, iterations, cesaro_rounds, tol) {
                return Ok(out);
            }
        }
        if iterations >= cfg.max_iterations {
            break;
        }
        history.push_back(res);
        if history.len() > window {
            let old = history.pop_front().unwrap_or(f64::INFINITY);
            if res >= old {
                let mut acc = ComplexMatrix::zeros(d, d);
                let mut cur = next;
                let mut count = 0usize;
                while count < cfg.cesaro_length && iterations < cfg.max_iterations {
                    acc.add_scaled(&cur, ONE);
                    cur = ch.apply(&cur)?;
                    iterations += 1;
                    count += 1;
                }
                rho = acc.scale_real(1.0 / count.max(1) as f64);
                history.clear();
                cesaro_rounds += 1;
                continue;
            }
        }
        rho = next;
    }

    let best_state = DensityMatrix::polish(&best.0)?;
    let residual = trace_residual(ch, best_state.matrix())?;
    Err(Error::MaxIterationsExceeded { best: Box::new(best_state), residual, iterations })
}

fn trace_residual(ch: &KrausChannel, rho: &ComplexMatrix) -> Result<f64> {
    trace_norm_hermitian(&(&ch.apply(rho)? - rho).hermitian_part())
}

fn finish(
    ch: &KrausChannel,
    rho: &ComplexMatrix,
    iterations: usize,
    cesaro_rounds: usize,
    tol: &ToleranceConfig,
) -> Result<(DensityMatrix, InvariantDiagnostics)> {
    let state = DensityMatrix::polish(rho)?;
    let residual = trace_residual(ch, state.matrix())?;
    if residual > tol.residual {
        return Err(Error::NoConvergence { what: "invariant state polishing", iterations });
    }
    Ok((state, InvariantDiagnostics { iterations, cesaro_rounds, residual }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShemeshOutcome {
    /// `true` when the statistic does not exclude a common eigenvector.
    pub has_common: bool,
    pub statistic: f64,
}

/// `λ_min(K)` for `K = Σ_{i,j=1}^{n-1} C_ij* C_ij`, `C_ij = [A^i, B^j]`, scaled
/// by `Σ ||A^i||_F² ||B^j||_F² / n`.
///
/// The scale is built from the factors rather than from `K` itself so that
/// round-off commutators of commuting inputs stay near zero.
pub fn shemesh_statistic(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let n = a.require_square()?;
    if b.rows() != n || !b.is_square() {
        return Err(Error::DimensionMismatch { expected: n, got: b.rows() });
    }
    if n == 1 {
        return Ok(0.0);
    }
    let powers = |m: &ComplexMatrix| {
        let mut out = vec![m.clone()];
        for _ in 2..n {
            let next = out.last().map(|p| p.matmul(m)).unwrap_or_else(|| m.clone());
            out.push(next);
        }
        out
    };
    let (pa, pb) = (powers(a), powers(b));
    let mut k = ComplexMatrix::zeros(n, n);
    let mut scale = 0.0;
    for ai in &pa {
        for bj in &pb {
            let c = commutator(ai, bj)?;
            k.add_scaled(&c.adjoint().matmul(&c), ONE);
            scale += ai.frobenius_norm().powi(2) * bj.frobenius_norm().powi(2);
        }
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    let lmin = smallest_eigenvalue_psd(&k.hermitian_part(), f64::INFINITY)?;
    Ok(lmin / (scale / n as f64))
}

/// Shemesh test for a common eigenvector of `A` and `B`.
pub fn shemesh_common_eigenvector(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> Result<ShemeshOutcome> {
    let statistic = shemesh_statistic(a, b)?;
    Ok(ShemeshOutcome { has_common: statistic <= tol, statistic })
}

/// Shemesh test on the `k`-th wedge powers. A statistic above `tol` rules out a
/// common `k`-dimensional invariant subspace; otherwise the result is inconclusive.
pub fn generalized_shemesh(a: &ComplexMatrix, b: &ComplexMatrix, k: usize, tol: f64) -> Result<ShemeshOutcome> {
    let d = a.require_square()?;
    if k == 0 || k >= d.max(1) {
        return Err(Error::WedgeOrder { k, d });
    }
    shemesh_common_eigenvector(&wedge_power(a, k)?, &wedge_power(b, k)?, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Irreducible,
    Inconclusive,
    ReducibleWitness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrreducibilityReport {
    pub verdict: Verdict,
    /// Shemesh statistic for `k = 1..d-1` of the best pair found.
    pub per_dimension_stats: Vec<f64>,
    pub witness_pair: Option<[usize; 2]>,
    /// Orthonormal basis (columns) of a common invariant subspace, for `ReducibleWitness`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub invariant_subspace: Option<ComplexMatrix>,
}

/// Largest dimension at which the exhaustive invariant-subspace search runs.
pub const BRUTE_FORCE_MAX_DIM: usize = 4;

/// Irreducibility via generalized Shemesh statistics on pairs of Kraus operators.
pub fn irreducibility_check(ch: &KrausChannel, tol: f64) -> Result<IrreducibilityReport> {
    let d = ch.d();
    let ops = ch.operators();
    if d == 1 {
        return Ok(IrreducibilityReport {
            verdict: Verdict::Irreducible,
            per_dimension_stats: Vec::new(),
            witness_pair: None,
            invariant_subspace: None,
        });
    }

    let mut best: Option<(f64, [usize; 2], Vec<f64>)> = None;
    for i in 0..ops.len() {
        for j in i + 1..ops.len() {
            let stats = (1..d)
                .map(|k| generalized_shemesh(&ops[i], &ops[j], k, tol).map(|o| o.statistic))
                .collect::<Result<Vec<f64>>>()?;
            let worst = stats.iter().copied().fold(f64::INFINITY, f64::min);
            if worst > tol {
                return Ok(IrreducibilityReport {
                    verdict: Verdict::Irreducible,
                    per_dimension_stats: stats,
                    witness_pair: Some([i, j]),
                    invariant_subspace: None,
                });
            }
            if best.as_ref().is_none_or(|b| worst > b.0) {
                best = Some((worst, [i, j], stats));
            }
        }
    }

    let (per_dimension_stats, witness_pair) = match best {
        Some((_, pair, stats)) => (stats, Some(pair)),
        None => (Vec::new(), None),
    };
    let subspace = if d <= BRUTE_FORCE_MAX_DIM { find_common_invariant_subspace(ops)? } else { None };
    let verdict = if subspace.is_some() { Verdict::ReducibleWitness } else { Verdict::Inconclusive };
    Ok(IrreducibilityReport { verdict, per_dimension_stats, witness_pair, invariant_subspace: subspace })
}

/// Exhaustive search for a nontrivial subspace invariant under every operator.
///
/// Common invariant subspaces are invariant under a generic linear combination
/// `M` of the operators, so candidates are spans of subsets of eigenvectors of `M`.
/// Exhaustive when `M` is diagonalizable.
pub fn find_common_invariant_subspace(ops: &[ComplexMatrix]) -> Result<Option<ComplexMatrix>> {
    let d = ops.first().map_or(0, |o| o.rows());
    search_invariant_subspace(ops, 1..d)
}

/// Exhaustive common-eigenvector test for a pair, independent of the Shemesh statistic.
pub fn brute_force_common_eigenvector(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<bool> {
    Ok(search_invariant_subspace(&[a.clone(), b.clone()], 1..2)?.is_some())
}

fn search_invariant_subspace(ops: &[ComplexMatrix], dims: std::ops::Range<usize>) -> Result<Option<ComplexMatrix>> {
    let Some(first) = ops.first() else {
        return Err(Error::EmptyKraus);
    };
    let d = first.require_square()?;
    let mut m = ComplexMatrix::zeros(d, d);
    for (i, op) in ops.iter().enumerate() {
        let t = 0.7 + 1.3 * i as f64;
        m.add_scaled(op, Complex64::from_polar(1.0 / (1.0 + 0.37 * i as f64), t));
    }
    let vectors = eigenvectors(&m)?;
    for k in dims.filter(|&k| k >= 1 && k < d) {
        for subset in k_subsets(vectors.len(), k) {
            let Some(q) = orthonormal_basis(subset.iter().map(|&i| vectors[i].as_slice()), d) else {
                continue;
            };
            if q.cols() != k {
                continue;
            }
            if ops.iter().all(|op| invariance_defect(op, &q) <= 1e-8 * op.frobenius_norm().max(f64::MIN_POSITIVE)) {
                return Ok(Some(q));
            }
        }
    }
    Ok(None)
}

/// `||(I - QQ*) L Q||_F` for `Q` with orthonormal columns.
fn invariance_defect(l: &ComplexMatrix, q: &ComplexMatrix) -> f64 {
    let lq = l.matmul(q);
    let proj = q.matmul(&q.adjoint().matmul(&lq));
    (&lq - &proj).frobenius_norm()
}

/// Eigenvectors of a general matrix as null vectors of `M - λI`, one basis per distinct eigenvalue.
fn eigenvectors(m: &ComplexMatrix) -> Result<Vec<Vec<Complex64>>> {
    let d = m.dim();
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut distinct: Vec<Complex64> = Vec::new();
    for l in complex_eigenvalues(m)? {
        if distinct.iter().all(|z| (z - l).norm() > 1e-6 * scale) {
            distinct.push(l);
        }
    }
    let mut out = Vec::new();
    for l in distinct {
        let mut shifted = m.clone();
        for i in 0..d {
            shifted[(i, i)] -= l;
        }
        let gram = shifted.adjoint().matmul(&shifted).hermitian_part();
        let eig = hermitian_eig(&gram, f64::INFINITY)?;
        let thr = 1e-10 * scale * scale;
        let mut found = false;
        for (c, &ev) in eig.eigenvalues.iter().enumerate() {
            if ev <= thr || !found {
                out.push(eig.eigenvectors.column(c));
                found = true;
            }
        }
    }
    Ok(out)
}

/// Gram–Schmidt with rank detection; columns of the result are orthonormal.
fn orthonormal_basis<'a>(vs: impl Iterator<Item = &'a [Complex64]>, d: usize) -> Option<ComplexMatrix> {
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for v in vs {
        let mut w = v.to_vec();
        for _ in 0..2 {
            for b in &basis {
                let c: Complex64 = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return None;
        }
        basis.push(w.into_iter().map(|z| z / norm).collect());
    }
    let k = basis.len();
    Some(ComplexMatrix::from_fn(d, k, |r, c| basis[c][r]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PositivityVerdict {
    NotStrictlyPositive,
    LikelyStrictlyPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrictPositivityProbe {
    pub verdict: PositivityVerdict,
    pub min_output_eigenvalue: f64,
    pub choi_rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnePlusPhiProbe {
    pub irreducible_evidence: bool,
    pub min_eigenvalue: f64,
}

/// Smallest eigenvalue of `S(|x><x|)` over pure `x`, estimated from Haar samples
/// refined by alternating minimization of `<y| S(|x><x|) |y>`.
pub fn min_pure_output_eigenvalue<R: Rng + ?Sized>(s: &Superoperator, num_samples: usize, rng: &mut R) -> Result<f64> {
    let d = s.d();
    let dual = s.adjoint();
    let eval = |x: &[Complex64]| -> Result<(f64, Vec<Complex64>)> {
        let out = s.apply(&ComplexMatrix::outer(x, x))?.hermitian_part();
        let eig = hermitian_eig(&out, f64::INFINITY)?;
        Ok((eig.eigenvalues[0], eig.eigenvectors.column(0)))
    };

    let mut starts: Vec<(f64, Vec<Complex64>)> = Vec::new();
    for _ in 0..num_samples.max(1) {
        let x = haar_pure_vector(d, rng);
        let (v, _) = eval(&x)?;
        starts.push((v, x));
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = starts[0].0;
    for (mut value, mut x) in starts.into_iter().take(8) {
        for _ in 0..200 {
            let (_, y) = eval(&x)?;
            let back = dual.apply(&ComplexMatrix::outer(&y, &y))?.hermitian_part();
            let eig = hermitian_eig(&back, f64::INFINITY)?;
            x = eig.eigenvectors.column(0);
            let (next, _) = eval(&x)?;
            let done = value - next <= 1e-15;
            value = value.min(next);
            if done {
                break;
            }
        }
        best = best.min(value);
    }
    Ok(best.max(0.0))
}

/// Strict positivity: a Choi rank below `2d - 1` rules it out; otherwise sampled evidence.
pub fn strict_positivity_probe<R: Rng + ?Sized>(
    ch: &KrausChannel,
    num_samples: usize,
    rng: &mut R,
    tol: &ToleranceConfig,
) -> Result<StrictPositivityProbe> {
    let d = ch.d();
    let choi_rank = ch.choi_rank(tol.kernel)?;
    let min_output_eigenvalue = min_pure_output_eigenvalue(&ch.superoperator(), num_samples, rng)?;
    let verdict = if choi_rank + 1 < 2 * d || min_output_eigenvalue <= tol.kernel {
        PositivityVerdict::NotStrictlyPositive
    } else {
        PositivityVerdict::LikelyStrictlyPositive
    };
    Ok(StrictPositivityProbe { verdict, min_output_eigenvalue, choi_rank })
}

/// Sampled positivity of `(1 + Φ)^{d-1}`, which is equivalent to irreducibility.
pub fn one_plus_phi_power_probe<R: Rng + ?Sized>(
    ch: &KrausChannel,
    num_samples: usize,
    rng: &mut R,
    tol: &ToleranceConfig,
) -> Result<OnePlusPhiProbe> {
    let p = ch.superoperator().one_plus_power(ch.d() as u32 - 1);
    let min_eigenvalue = min_pure_output_eigenvalue(&p, num_samples, rng)?;
    Ok(OnePlusPhiProbe { irreducible_evidence: min_eigenvalue > tol.kernel, min_eigenvalue })
}

impl IrreducibilityReport {
    pub fn is_irreducible(&self) -> bool {
        self.verdict == Verdict::Irreducible
    }
}

/// `true` when `zs`, each snapped to the nearest root of unity of order at most
/// `max_order`, is closed under multiplication.
pub fn is_root_of_unity_group(zs: &[Complex64], max_order: usize, tol: f64) -> bool {
    let snap = |z: Complex64| -> Option<(usize, usize)> {
        let theta = z.arg().rem_euclid(std::f64::consts::TAU);
        (1..=max_order).find_map(|n| {
            let k = (theta / std::f64::consts::TAU * n as f64).round() as usize % n;
            let w = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64);
            ((w - z).norm() <= tol).then_some((k, n))
        })
    };
    let Some(snapped) = zs.iter().map(|&z| snap(z)).collect::<Option<Vec<_>>>() else {
        return false;
    };
    // represent each as a fraction of a full turn with a common denominator
    let lcm = snapped.iter().fold(1usize, |acc, &(_, n)| acc / gcd(acc, n) * n);
    let mut set: Vec<usize> = snapped.iter().map(|&(k, n)| k * (lcm / n) % lcm).collect();
    set.sort_unstable();
    set.dedup();
    set.contains(&0) && set.iter().all(|&a| set.iter().all(|&b| set.binary_search(&((a + b) % lcm)).is_ok()))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};

const JACOBI_THRESHOLD: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;
const QR_DEFLATION: f64 = 1e-13;
const QR_ITERATIONS_PER_DIM: usize = 100;

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HermitianEigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, matching `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigenResult {
    /// `V diag(λ) V*`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        ComplexMatrix::from_fn(n, n, |r, c| {
            (0..n).map(|k| v[(r, k)] * self.eigenvalues[k] * v[(c, k)].conj()).sum()
        })
    }

    /// Applies `f` to the spectrum: `V diag(f(λ)) V*`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let mapped = HermitianEigenResult {
            eigenvalues: self.eigenvalues.iter().map(|&l| f(l)).collect(),
            eigenvectors: self.eigenvectors.clone(),
        };
        mapped.reconstruct()
    }
}

/// Cyclic complex Jacobi eigensolver.
///
/// `hermiticity_tol` bounds `||H - H*||_F` relative to `max(1, ||H||_F)`; the
/// Hermitian part of `H` is what gets diagonalized.
pub fn hermitian_eig(h: &ComplexMatrix, hermiticity_tol: f64) -> Result<HermitianEigenResult> {
    let n = h.require_square()?;
    let scale = h.frobenius_norm();
    let defect = h.hermiticity_defect();
    if defect > hermiticity_tol * scale.max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    let mut a = h.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let target = JACOBI_THRESHOLD * scale;

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).map(move |q| (p, q)))
            .filter(|(p, q)| p != q)
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= target || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { what: "Jacobi eigensolver", iterations: JACOBI_MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigenResult { eigenvalues, eigenvectors })
}

/// One Jacobi rotation annihilating `a[p,q]`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let n = a.dim();
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase_conj = (apq / mag).conj();
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]]
    let g_pp = Complex64::new(c, 0.0);
    let g_pq = Complex64::new(s, 0.0);
    let g_qp = phase_conj * (-s);
    let g_qq = phase_conj * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
}

/// Smallest eigenvalue of a Hermitian positive semidefinite matrix, clamped at zero.
pub fn smallest_eigenvalue_psd(k: &ComplexMatrix, hermiticity_tol: f64) -> Result<f64> {
    let eig = hermitian_eig(k, hermiticity_tol)?;
    Ok(eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0))
}

/// All eigenvalues of a general square matrix (Hessenberg reduction plus
/// Wilkinson-shifted complex QR), sorted by descending modulus then
/// descending phase in `(-π, π]`.
pub fn complex_eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let n = m.require_square()?;
    let mut h = hessenberg(m);
    let cap = QR_ITERATIONS_PER_DIM * n;
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;

    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let diag = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if sub <= QR_DEFLATION * diag || sub < f64::MIN_POSITIVE {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if total >= cap {
            return Err(Error::NoConvergence { what: "shifted QR eigensolver", iterations: total });
        }
        total += 1;
        since_deflation += 1;

        let shift = if since_deflation % 11 == 10 {
            // exceptional shift to break cycles
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        qr_step(&mut h, l, hi, shift);
    }

    let mut eig = h.diagonal();
    sort_spectrum(&mut eig);
    Ok(eig)
}

/// Eigenvalue of the trailing 2x2 block closest to its last diagonal entry.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let l1 = mean + disc;
    let l2 = mean - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicit shifted QR sweep on the Hessenberg block `lo..=hi` via Givens rotations.
fn qr_step(h: &mut ComplexMatrix, lo: usize, hi: usize, shift: Complex64) {
    for k in lo..=hi {
        h[(k, k)] -= shift;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let x = h[(k, k)];
        let y = h[(k + 1, k)];
        let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 { (Complex64::new(1.0, 0.0), ZERO) } else { (x / r, y / r) };
        for col in k..=hi {
            let hk = h[(k, col)];
            let hk1 = h[(k + 1, col)];
            h[(k, col)] = c.conj() * hk + s.conj() * hk1;
            h[(k + 1, col)] = -s * hk + c * hk1;
        }
        rots.push((c, s));
    }
    for (idx, &(c, s)) in rots.iter().enumerate() {
        let k = lo + idx;
        for row in lo..=(k + 2).min(hi) {
            let hk = h[(row, k)];
            let hk1 = h[(row, k + 1)];
            h[(row, k)] = hk * c + hk1 * s;
            h[(row, k + 1)] = -hk * s.conj() + hk1 * c.conj();
        }
    }
    for k in lo..=hi {
        h[(k, k)] += shift;
    }
}

/// Householder reduction to upper Hessenberg form (similarity transform).
fn hessenberg(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.dim();
    let mut h = m.clone();
    for k in 0..n.saturating_sub(2) {
        let norm_x = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] += phase * norm_x;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        for c in 0..n {
            let dot: Complex64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * h[(k + 1 + i, c)]).sum();
            for (i, vi) in v.iter().enumerate() {
                h[(k + 1 + i, c)] -= vi * dot * 2.0;
            }
        }
        for r in 0..n {
            let dot: Complex64 = v.iter().enumerate().map(|(i, vi)| h[(r, k + 1 + i)] * vi).sum();
            for (i, vi) in v.iter().enumerate() {
                h[(r, k + 1 + i)] -= dot * vi.conj() * 2.0;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    h
}

fn phase(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Descending modulus (compared on a 1e-9 grid so numerically equal moduli tie), then descending phase.
pub(crate) fn sort_spectrum(eig: &mut [Complex64]) {
    eig.sort_by(|a, b| {
        let ka = (a.norm() * 1e9).round() as i64;
        let kb = (b.norm() * 1e9).round() as i64;
        kb.cmp(&ka).then(phase(*b).total_cmp(&phase(*a)))
    });
}

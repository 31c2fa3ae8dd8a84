use num_complex::Complex64;

use super::{ComplexMatrix, ONE, ZERO};
use crate::error::{Error, Result};

/// Householder QR with the diagonal of `R` made real and positive.
///
/// With that phase convention the factorization is unique, which is what makes
/// `Q` Haar-distributed when `G` is Ginibre.
pub fn qr_unitary(g: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = g.require_square()?;
    let scale = g.frobenius_norm();
    let singular_floor = scale * f64::EPSILON * (n as f64) * 16.0;
    let mut r = g.clone();
    let mut q = ComplexMatrix::identity(n);

    for k in 0..n.saturating_sub(1) {
        let norm_x = (k..n).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm_x <= singular_floor {
            return Err(Error::Singular);
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        let alpha = -phase * norm_x;
        let mut v: Vec<Complex64> = (k..n).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // R <- (I - 2 v v*) R on rows k..n
        for c in 0..n {
            let dot: Complex64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * r[(k + i, c)]).sum();
            for (i, vi) in v.iter().enumerate() {
                r[(k + i, c)] -= vi * dot * 2.0;
            }
        }
        // Q <- Q (I - 2 v v*) on columns k..n
        for row in 0..n {
            let dot: Complex64 = v.iter().enumerate().map(|(i, vi)| q[(row, k + i)] * vi).sum();
            for (i, vi) in v.iter().enumerate() {
                q[(row, k + i)] -= dot * vi.conj() * 2.0;
            }
        }
        for i in k + 1..n {
            r[(i, k)] = ZERO;
        }
    }

    for j in 0..n {
        let rjj = r[(j, j)];
        let m = rjj.norm();
        if m <= singular_floor {
            return Err(Error::Singular);
        }
        let phase = rjj / m;
        for row in 0..n {
            q[(row, j)] *= phase;
        }
        for c in 0..n {
            r[(j, c)] *= phase.conj();
        }
        r[(j, j)] = Complex64::new(m, 0.0);
    }
    Ok((q, r))
}

/// Determinant via LU with partial pivoting.
pub fn determinant(a: &ComplexMatrix) -> Result<Complex64> {
    let n = a.require_square()?;
    let mut m = a.clone();
    let mut det = ONE;
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| m[(i, k)].norm().total_cmp(&m[(j, k)].norm()))
            .unwrap_or(k);
        if m[(pivot, k)] == ZERO {
            return Ok(ZERO);
        }
        if pivot != k {
            for c in 0..n {
                let tmp = m[(k, c)];
                m[(k, c)] = m[(pivot, c)];
                m[(pivot, c)] = tmp;
            }
            det = -det;
        }
        let p = m[(k, k)];
        det *= p;
        for i in k + 1..n {
            let f = m[(i, k)] / p;
            if f == ZERO {
                continue;
            }
            for c in k..n {
                let mkc = m[(k, c)];
                m[(i, c)] -= f * mkc;
            }
        }
    }
    Ok(det)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn qr_of_identity_and_scaled_identity() {
        let (q, r) = qr_unitary(&ComplexMatrix::identity(3)).unwrap();
        assert_eq!(q, ComplexMatrix::identity(3));
        assert_eq!(r, ComplexMatrix::identity(3));
        let (q, r) = qr_unitary(&ComplexMatrix::identity(3).scale_real(2.0)).unwrap();
        assert!((&q - &ComplexMatrix::identity(3)).frobenius_norm() < 1e-15);
        assert!((&r - &ComplexMatrix::identity(3).scale_real(2.0)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn qr_reconstructs_with_positive_diagonal() {
        let g = ComplexMatrix::from_vec(
            3,
            3,
            vec![
                c(0.3, -1.2),
                c(2.0, 0.1),
                c(-0.7, 0.4),
                c(1.1, 0.9),
                c(-0.2, -0.3),
                c(0.5, 1.5),
                c(-1.4, 0.0),
                c(0.6, -0.8),
                c(0.9, 0.2),
            ],
        )
        .unwrap();
        let (q, r) = qr_unitary(&g).unwrap();
        assert!((&q.matmul(&r) - &g).frobenius_norm() < 1e-13);
        assert!(q.unitarity_defect() < 1e-13);
        for j in 0..3 {
            assert!(r[(j, j)].re > 0.0 && r[(j, j)].im == 0.0);
            for i in j + 1..3 {
                assert_eq!(r[(i, j)], ZERO);
            }
        }
    }

    #[test]
    fn qr_rejects_singular() {
        let g = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(qr_unitary(&g), Err(Error::Singular)));
    }

    #[test]
    fn determinant_small_cases() {
        let a = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((determinant(&a).unwrap() - c(-2.0, 0.0)).norm() < 1e-14);
        let b = ComplexMatrix::from_vec(1, 1, vec![c(0.0, 3.0)]).unwrap();
        assert_eq!(determinant(&b).unwrap(), c(0.0, 3.0));
        let s = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(determinant(&s).unwrap().norm() < 1e-15);
    }
}

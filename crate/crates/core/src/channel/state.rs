use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{hermitian_eig, ComplexMatrix};
use crate::tolerance::ToleranceConfig;

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity against `tol`.
    pub fn new(matrix: ComplexMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let rho = Self { matrix };
        rho.validate(tol)?;
        Ok(rho)
    }

    /// Wraps a matrix that is a density matrix by construction (e.g. a channel output).
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    /// `I/d`.
    pub fn maximally_mixed(d: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(d).scale_real(1.0 / d as f64) }
    }

    /// `|ψ><ψ| / <ψ|ψ>`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if psi.is_empty() || norm2 == 0.0 || !norm2.is_finite() {
            return Err(Error::InvalidDensity("pure state vector must be nonzero and finite".into()));
        }
        Ok(Self { matrix: ComplexMatrix::outer(psi, psi).scale_real(1.0 / norm2) })
    }

    /// `|e_k><e_k|` in dimension `d`.
    pub fn basis_state(d: usize, k: usize) -> Self {
        Self { matrix: ComplexMatrix::unit(d, k, k) }
    }

    /// `diag(p)` for a probability vector `p`.
    pub fn diagonal(p: &[f64], tol: &ToleranceConfig) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diag(p), tol)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn validate(&self, tol: &ToleranceConfig) -> Result<()> {
        let m = &self.matrix;
        m.require_square()?;
        if !m.all_finite() {
            return Err(Error::NonFinite);
        }
        let herm = m.hermiticity_defect();
        if herm > tol.hermiticity {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = m.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > tol.hermiticity {
            return Err(Error::InvalidDensity(format!("trace {} is not 1", tr.re)));
        }
        let min = self.eigenvalues()?.first().copied().unwrap_or(0.0);
        if min < -tol.hermiticity {
            return Err(Error::InvalidDensity(format!("not positive semidefinite (eigenvalue {min:e})")));
        }
        Ok(())
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eig(&self.matrix, f64::INFINITY)?.eigenvalues)
    }

    /// Hermitize, clip negative eigenvalues at zero and renormalize the trace.
    pub fn polish(matrix: &ComplexMatrix) -> Result<Self> {
        let eig = hermitian_eig(&matrix.hermitian_part(), f64::INFINITY)?;
        let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDensity("no positive spectral weight".into()));
        }
        let m = eig.map_spectrum(|l| l.max(0.0) / total);
        Ok(Self { matrix: m })
    }

    /// Trace-norm distance `||self - other||_1`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        crate::mat::trace_norm_hermitian(&(&self.matrix - &other.matrix))
    }

    /// `V ρ V*`.
    pub fn rotate(&self, v: &ComplexMatrix) -> Result<Self> {
        if v.rows() != self.dim() || !v.is_square() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.rows() });
        }
        Ok(Self { matrix: self.matrix.conjugate_by(v) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_catches_each_invariant() {
        let tol = ToleranceConfig::default();
        assert!(DensityMatrix::new(ComplexMatrix::identity(2), &tol).is_err());
        let neg = ComplexMatrix::from_real_diag(&[1.5, -0.5]);
        assert!(DensityMatrix::new(neg, &tol).is_err());
        let nonherm = ComplexMatrix::from_real(2, 2, &[0.5, 0.1, 0.0, 0.5]).unwrap();
        assert!(DensityMatrix::new(nonherm, &tol).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_real_diag(&[0.25, 0.75]), &tol).is_ok());
    }

    #[test]
    fn scalar_state() {
        let rho = DensityMatrix::maximally_mixed(1);
        assert!(rho.validate(&ToleranceConfig::default()).is_ok());
        assert_eq!(rho.matrix()[(0, 0)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn polish_restores_invariants() {
        let m = ComplexMatrix::from_real(2, 2, &[0.7, 0.01, 0.0, 0.31]).unwrap();
        let rho = DensityMatrix::polish(&m).unwrap();
        assert!(rho.validate(&ToleranceConfig::strict()).is_ok());
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states() {
        let a = DensityMatrix::basis_state(2, 0);
        let b = DensityMatrix::basis_state(2, 1);
        assert!((a.trace_distance(&b).unwrap() - 2.0).abs() < 1e-14);
    }
}

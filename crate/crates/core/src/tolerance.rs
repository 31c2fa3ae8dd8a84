use serde::{Deserialize, Serialize};

/// Numerical thresholds, passed explicitly to every operation that needs them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Allowed Frobenius deviation from Hermiticity.
    pub hermiticity: f64,
    /// Allowed relative reconstruction / unitarity / completeness residual.
    pub reconstruction: f64,
    /// Relative threshold below which a kernel statistic or eigenvalue counts as zero.
    pub kernel: f64,
    /// Modulus tolerance for peripheral eigenvalues.
    pub peripheral: f64,
    /// Trace-norm residual required of an invariant state.
    pub residual: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            reconstruction: 1e-10,
            kernel: 1e-8,
            peripheral: 1e-6,
            residual: 1e-10,
        }
    }
}

impl ToleranceConfig {
    pub fn strict() -> Self {
        Self {
            hermiticity: 1e-12,
            reconstruction: 1e-12,
            kernel: 1e-10,
            peripheral: 1e-8,
            residual: 1e-12,
        }
    }
}

//! Quantum channel representations and conversions among them.
//!
//! A channel on `d x d` matrices is carried as a Stinespring pair `(U, β)`,
//! a Kraus list `{L_i}`, a `d² x d²` superoperator matrix acting on
//! column-stacked vectorizations, or a Choi matrix. All product-space
//! operators use the system-fastest basis ordering documented in [`crate::mat`].

mod file;
mod state;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat::{
    hermitian_eig, partial_trace_env, system_env_tensor, ComplexMatrix, ONE, ZERO,
};
use crate::tolerance::ToleranceConfig;

pub use file::ChannelFile;
pub use state::DensityMatrix;

/// Spectral weights of `β` at or below this are dropped when extracting Kraus operators.
pub const KRAUS_WEIGHT_THRESHOLD: f64 = 1e-14;

/// Default cap on the number of Kraus operators produced by [`compose`].
pub const DEFAULT_COMPOSE_CAP: usize = 4096;

/// `Φ(X) = Tr_env[U (X ⊗ β) U*]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StinespringChannel {
    d: usize,
    d_env: usize,
    u: ComplexMatrix,
    beta: DensityMatrix,
}

impl StinespringChannel {
    pub fn new(d: usize, u: ComplexMatrix, beta: DensityMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let d_env = beta.dim();
        let n = u.require_square()?;
        if d == 0 || n != d * d_env {
            return Err(Error::DimensionMismatch { expected: d * d_env, got: n });
        }
        let defect = u.unitarity_defect();
        if defect > tol.reconstruction * (n as f64).sqrt() {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self { d, d_env, u, beta })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn d_env(&self) -> usize {
        self.d_env
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.u
    }

    pub fn beta(&self) -> &DensityMatrix {
        &self.beta
    }

    /// Applies the dilation to an arbitrary `d x d` matrix.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.d || !x.is_square() {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.rows() });
        }
        let joint = system_env_tensor(x, self.beta.matrix())?;
        partial_trace_env(&joint.conjugate_by(&self.u), self.d, self.d_env)
    }

    /// One interaction: `ρ' = Tr_env[U (ρ ⊗ β) U*]`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(DensityMatrix::from_matrix_unchecked(self.apply_matrix(rho.matrix())?))
    }

    /// Kraus operators `√b_j U_ij` read off the blocks of `U (I ⊗ W)`, where `W`
    /// diagonalizes `β`. Weights `b_j <= 1e-14` and zero blocks are dropped.
    pub fn to_kraus(&self, tol: &ToleranceConfig) -> Result<KrausChannel> {
        let (d, dp) = (self.d, self.d_env);
        let eig = hermitian_eig(self.beta.matrix(), tol.hermiticity)?;
        let rotated = self.u.matmul(&system_env_tensor(&ComplexMatrix::identity(d), &eig.eigenvectors)?);
        let mut ops = Vec::new();
        // largest weight first
        for j in (0..dp).rev() {
            let b = eig.eigenvalues[j];
            if b <= KRAUS_WEIGHT_THRESHOLD {
                continue;
            }
            let w = b.sqrt();
            for i in 0..dp {
                let block = rotated.sub_block(i * d, j * d, d, d).scale_real(w);
                if block.frobenius_norm() > KRAUS_WEIGHT_THRESHOLD {
                    ops.push(block);
                }
            }
        }
        KrausChannel::new(ops, tol)
    }
}

/// Free-function form of [`StinespringChannel::apply`].
pub fn stinespring_apply(ch: &StinespringChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    ch.apply(rho)
}

/// Free-function form of [`StinespringChannel::to_kraus`].
pub fn kraus_from_stinespring(ch: &StinespringChannel, tol: &ToleranceConfig) -> Result<KrausChannel> {
    ch.to_kraus(tol)
}

/// Completely positive map `X ↦ Σ L_i X L_i*` without a trace-preservation requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausMap {
    d: usize,
    operators: Vec<ComplexMatrix>,
}

impl KrausMap {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let d = operators.first().ok_or(Error::EmptyKraus)?.require_square()?;
        for op in &operators {
            if op.rows() != d || !op.is_square() {
                return Err(Error::DimensionMismatch { expected: d, got: op.rows() });
            }
        }
        Ok(Self { d, operators })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        apply_operators(&self.operators, self.d, x)
    }

    /// `||Σ L_i L_i* - I||_F`, zero for a unital map.
    pub fn unitality_defect(&self) -> f64 {
        let id = ComplexMatrix::identity(self.d);
        let image = apply_operators(&self.operators, self.d, &id).expect("square identity");
        (&image - &id).frobenius_norm()
    }
}

fn apply_operators(ops: &[ComplexMatrix], d: usize, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    if x.rows() != d || !x.is_square() {
        return Err(Error::DimensionMismatch { expected: d, got: x.rows() });
    }
    let mut out = ComplexMatrix::zeros(d, d);
    for l in ops {
        out.add_scaled(&x.conjugate_by(l), ONE);
    }
    Ok(out)
}

/// Quantum channel in Kraus form, with `Σ L_i* L_i = I` enforced at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    d: usize,
    operators: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(operators: Vec<ComplexMatrix>, tol: &ToleranceConfig) -> Result<Self> {
        let map = KrausMap::new(operators)?;
        let ch = Self { d: map.d, operators: map.operators };
        let defect = ch.completeness_defect();
        if defect > tol.reconstruction * (ch.d as f64).sqrt().max(1.0) {
            return Err(Error::IncompleteKraus(defect));
        }
        Ok(ch)
    }

    /// `||Σ L_i* L_i - I||_F`.
    pub fn completeness_defect(&self) -> f64 {
        let mut acc = ComplexMatrix::zeros(self.d, self.d);
        for l in &self.operators {
            acc.add_scaled(&l.adjoint().matmul(l), ONE);
        }
        (&acc - &ComplexMatrix::identity(self.d)).frobenius_norm()
    }

    pub fn identity(d: usize) -> Self {
        Self { d, operators: vec![ComplexMatrix::identity(d)] }
    }

    /// `X ↦ U X U*`.
    pub fn unitary(u: ComplexMatrix, tol: &ToleranceConfig) -> Result<Self> {
        Self::new(vec![u], tol)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn as_map(&self) -> KrausMap {
        KrausMap { d: self.d, operators: self.operators.clone() }
    }

    /// `Φ(X) = Σ L_i X L_i*`.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        apply_operators(&self.operators, self.d, x)
    }

    pub fn apply_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(DensityMatrix::from_matrix_unchecked(self.apply(rho.matrix())?))
    }

    /// Heisenberg-picture dual `Ψ(X) = Σ L_i* X L_i`.
    pub fn dual(&self) -> KrausMap {
        KrausMap { d: self.d, operators: self.operators.iter().map(ComplexMatrix::adjoint).collect() }
    }

    pub fn superoperator(&self) -> Superoperator {
        let d = self.d;
        let n = d * d;
        let mut s = ComplexMatrix::zeros(n, n);
        // vec index of entry (k, l) is l*d + k
        for l_op in &self.operators {
            for out_col in 0..d {
                for out_row in 0..d {
                    let r = out_col * d + out_row;
                    for in_col in 0..d {
                        let right = l_op[(out_col, in_col)].conj();
                        if right == ZERO {
                            continue;
                        }
                        for in_row in 0..d {
                            s[(r, in_col * d + in_row)] += l_op[(out_row, in_row)] * right;
                        }
                    }
                }
            }
        }
        Superoperator { d, matrix: s }
    }

    /// Choi matrix `Σ_{k,l} E_kl ⊗ Φ(E_kl)`: block `(k, l)` holds `Φ(E_kl)`.
    pub fn choi_matrix(&self) -> ComplexMatrix {
        let d = self.d;
        let mut c = ComplexMatrix::zeros(d * d, d * d);
        for k in 0..d {
            for l in 0..d {
                let img = self.apply(&ComplexMatrix::unit(d, k, l)).expect("dimensions agree");
                for r in 0..d {
                    for col in 0..d {
                        c[(k * d + r, l * d + col)] = img[(r, col)];
                    }
                }
            }
        }
        c
    }

    /// Number of Choi eigenvalues above `relative_threshold × largest`.
    pub fn choi_rank(&self, relative_threshold: f64) -> Result<usize> {
        let eig = hermitian_eig(&self.choi_matrix(), f64::INFINITY)?;
        let top = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return Ok(0);
        }
        Ok(eig.eigenvalues.iter().filter(|&&l| l > relative_threshold * top).count())
    }
}

/// Free-function form of [`KrausChannel::apply`].
pub fn apply_kraus(ch: &KrausChannel, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    ch.apply(x)
}

/// Free-function form of [`KrausChannel::dual`].
pub fn dual_channel(ch: &KrausChannel) -> KrausMap {
    ch.dual()
}

pub fn superoperator_of(ch: &KrausChannel) -> Superoperator {
    ch.superoperator()
}

pub fn choi_matrix(ch: &KrausChannel) -> ComplexMatrix {
    ch.choi_matrix()
}

pub fn choi_rank(ch: &KrausChannel, tol: &ToleranceConfig) -> Result<usize> {
    ch.choi_rank(tol.kernel)
}

/// Composes channels listed outermost first: `[Φ_n, …, Φ_1]` gives
/// `Φ_n ∘ ⋯ ∘ Φ_1`, so the last entry acts first.
pub fn compose(chs: &[KrausChannel], cap: usize, tol: &ToleranceConfig) -> Result<KrausChannel> {
    let first = chs.first().ok_or(Error::EmptyKraus)?;
    let d = first.d;
    if let Some(bad) = chs.iter().find(|c| c.d != d) {
        return Err(Error::DimensionMismatch { expected: d, got: bad.d });
    }
    let count = chs.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.len())).unwrap_or(usize::MAX);
    if count > cap {
        return Err(Error::TooManyKrausOperators { count, cap });
    }
    let mut iter = chs.iter().rev();
    let mut acc: Vec<ComplexMatrix> = iter.next().expect("nonempty").operators.clone();
    for ch in iter {
        acc = ch.operators.iter().flat_map(|l| acc.iter().map(move |a| l.matmul(a))).collect();
    }
    KrausChannel::new(acc, tol)
}

/// Channel as a `d² x d²` matrix acting on column-stacked vectorizations.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    d: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn from_matrix(d: usize, matrix: ComplexMatrix) -> Result<Self> {
        let n = matrix.require_square()?;
        if n != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: n });
        }
        Ok(Self { d, matrix })
    }

    pub fn identity(d: usize) -> Self {
        Self { d, matrix: ComplexMatrix::identity(d * d) }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.d || !x.is_square() {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.rows() });
        }
        Ok(ComplexMatrix::unvectorize(&self.matrix.mul_vec(&x.vectorize()), self.d))
    }

    /// `self ∘ other` (other acts first).
    pub fn after(&self, other: &Superoperator) -> Superoperator {
        Superoperator { d: self.d, matrix: self.matrix.matmul(&other.matrix) }
    }

    /// Hilbert–Schmidt adjoint, i.e. the dual map.
    pub fn adjoint(&self) -> Superoperator {
        Superoperator { d: self.d, matrix: self.matrix.adjoint() }
    }

    /// `(1 + Φ)^p`.
    pub fn one_plus_power(&self, p: u32) -> Superoperator {
        let base = &self.matrix + &ComplexMatrix::identity(self.d * self.d);
        Superoperator { d: self.d, matrix: base.powi(p) }
    }
}

pub fn pauli(i: usize) -> ComplexMatrix {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let data = match i {
        0 => vec![c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)],
        1 => vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)],
        2 => vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)],
        3 => vec![c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)],
        _ => panic!("Pauli index {i} out of range 0..=3"),
    };
    ComplexMatrix::from_vec(2, 2, data).expect("2x2")
}

/// `Φ(X) = ½ σ₁ X σ₁ + ½ σ₃ X σ₃`: irreducible, with peripheral spectrum `{1, -1}`.
pub fn pauli_channel() -> KrausChannel {
    let w = std::f64::consts::FRAC_1_SQRT_2;
    KrausChannel { d: 2, operators: vec![pauli(1).scale_real(w), pauli(3).scale_real(w)] }
}

/// Completely depolarizing channel with the `d²` Kraus operators `E_kl / √d`.
pub fn depolarizing_channel(d: usize) -> KrausChannel {
    let w = 1.0 / (d as f64).sqrt();
    let ops = (0..d)
        .flat_map(|k| (0..d).map(move |l| (k, l)))
        .map(|(k, l)| ComplexMatrix::unit(d, k, l).scale_real(w))
        .collect();
    KrausChannel { d, operators: ops }
}

/// `p·id + (1-p)·depolarizing`.
pub fn identity_depolarizing_mixture(d: usize, p: f64) -> KrausChannel {
    let mut ops = vec![ComplexMatrix::identity(d).scale_real(p.sqrt())];
    ops.extend(depolarizing_channel(d).operators.into_iter().map(|l| l.scale_real((1.0 - p).sqrt())));
    KrausChannel { d, operators: ops }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn pauli_channel_action() {
        let ch = pauli_channel();
        let id = ComplexMatrix::identity(2);
        assert!((&ch.apply(&id).unwrap() - &id).frobenius_norm() < 1e-15);
        assert!((&ch.apply(&pauli(2)).unwrap() - &pauli(2).scale_real(-1.0)).frobenius_norm() < 1e-15);
        assert!(ch.apply(&pauli(1)).unwrap().frobenius_norm() < 1e-15);
        assert!(ch.apply(&pauli(3)).unwrap().frobenius_norm() < 1e-15);
    }

    #[test]
    fn kraus_rejects_incomplete_and_empty() {
        assert!(matches!(KrausChannel::new(vec![], &tol()), Err(Error::EmptyKraus)));
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(matches!(KrausChannel::new(vec![half], &tol()), Err(Error::IncompleteKraus(_))));
    }

    #[test]
    fn stinespring_rejects_bad_inputs() {
        let beta = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            StinespringChannel::new(2, ComplexMatrix::identity(3), beta.clone(), &tol()),
            Err(Error::DimensionMismatch { .. })
        ));
        let not_unitary = ComplexMatrix::identity(4).scale_real(2.0);
        assert!(matches!(StinespringChannel::new(2, not_unitary, beta, &tol()), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn identity_dilation_with_pure_beta_prunes_to_identity() {
        let ch = StinespringChannel::new(2, ComplexMatrix::identity(6), DensityMatrix::basis_state(3, 0), &tol())
            .unwrap();
        let k = ch.to_kraus(&tol()).unwrap();
        assert_eq!(k.len(), 1);
        assert!((&k.operators()[0] - &ComplexMatrix::identity(2)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn swap_dilation_outputs_environment_state() {
        // SWAP on C^2 ⊗ C^2: e_i ⊗ f_j  ->  e_j ⊗ f_i
        let swap = ComplexMatrix::from_fn(4, 4, |r, c| {
            let (j, i) = (c / 2, c % 2);
            if r == i * 2 + j {
                ONE
            } else {
                ZERO
            }
        });
        let beta = DensityMatrix::new(
            ComplexMatrix::from_vec(
                2,
                2,
                vec![Complex64::new(0.7, 0.0), Complex64::new(0.1, 0.2), Complex64::new(0.1, -0.2), Complex64::new(0.3, 0.0)],
            )
            .unwrap(),
            &tol(),
        )
        .unwrap();
        let ch = StinespringChannel::new(2, swap, beta.clone(), &tol()).unwrap();
        let rho = DensityMatrix::pure(&[Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]).unwrap();
        let out = ch.apply(&rho).unwrap();
        assert!((out.matrix() - beta.matrix()).frobenius_norm() < 1e-15);
    }

    #[test]
    fn dual_of_unitary_conjugation() {
        let u = ComplexMatrix::from_vec(
            2,
            2,
            vec![Complex64::new(0.0, 1.0), ZERO, ZERO, Complex64::new(0.6, 0.8)],
        )
        .unwrap();
        let ch = KrausChannel::unitary(u.clone(), &tol()).unwrap();
        assert_eq!(ch.dual().operators(), &[u.adjoint()]);
        assert!(ch.dual().unitality_defect() < 1e-15);
    }

    #[test]
    fn superoperator_of_phase_unitary() {
        let theta: f64 = 0.7;
        let e = Complex64::from_polar(1.0, theta);
        let ch = KrausChannel::unitary(ComplexMatrix::from_diag(&[ONE, e]), &tol()).unwrap();
        let s = ch.superoperator();
        // columns ordered (k,l) -> l*2+k: (0,0), (1,0), (0,1), (1,1)
        let expected = ComplexMatrix::from_diag(&[ONE, e, e.conj(), ONE]);
        assert!((s.matrix() - &expected).frobenius_norm() < 1e-15);
    }

    #[test]
    fn identity_superoperator_and_choi() {
        let ch = KrausChannel::identity(3);
        assert_eq!(ch.superoperator(), Superoperator::identity(3));
        assert_eq!(ch.choi_rank(1e-8).unwrap(), 1);
        let c = ch.choi_matrix();
        // d · |Ω><Ω| with |Ω> = Σ e_k⊗e_k / √d
        assert!((c.trace().re - 3.0).abs() < 1e-15);
        assert_eq!(c[(0, 4)], ONE);
    }

    #[test]
    fn pauli_choi_rank_two() {
        assert_eq!(pauli_channel().choi_rank(1e-8).unwrap(), 2);
        assert_eq!(depolarizing_channel(2).choi_rank(1e-8).unwrap(), 4);
    }

    #[test]
    fn compose_order_and_cap() {
        let a = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let b = pauli(2);
        let ca = KrausChannel::unitary(a.clone(), &tol()).unwrap();
        let cb = KrausChannel::unitary(b.clone(), &tol()).unwrap();
        // [B, A]: A acts first, then B
        let composed = compose(&[cb.clone(), ca.clone()], DEFAULT_COMPOSE_CAP, &tol()).unwrap();
        assert_eq!(composed.operators(), &[b.matmul(&a)]);
        let single = compose(std::slice::from_ref(&ca), DEFAULT_COMPOSE_CAP, &tol()).unwrap();
        assert_eq!(single, ca);
        let many = vec![pauli_channel(); 13];
        assert!(matches!(compose(&many, DEFAULT_COMPOSE_CAP, &tol()), Err(Error::TooManyKrausOperators { .. })));
    }

    #[test]
    fn composed_pauli_restores_sigma_y() {
        let ch = compose(&[pauli_channel(), pauli_channel()], DEFAULT_COMPOSE_CAP, &tol()).unwrap();
        assert!((&ch.apply(&pauli(2)).unwrap() - &pauli(2)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn depolarizing_outputs_maximally_mixed() {
        let x = ComplexMatrix::from_real(3, 3, &[0.2, 0.1, 0.0, 0.1, 0.5, 0.0, 0.0, 0.0, 0.3]).unwrap();
        let out = depolarizing_channel(3).apply(&x).unwrap();
        assert!((&out - &ComplexMatrix::identity(3).scale_real(1.0 / 3.0)).frobenius_norm() < 1e-15);
    }
}

//! Time-bin qubit algebra over the basis {|e>, |l>}.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for exact-algebra checks.
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Most negative eigenvalue still accepted as positive semidefinite.
pub const EIGEN_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Normalized pure state `alpha|e> + beta|l>`.
///
/// The global phase is kept as supplied; two qubits are considered equal when
/// their squared overlap exceeds `1 - 1e-10` (see [`TimeBinQubit::same_ray`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBinQubit {
    alpha: Complex64,
    beta: Complex64,
}

impl TimeBinQubit {
    /// Normalizes `(alpha, beta)`. Fails on the zero vector or non-finite input.
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if !norm.is_finite() {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector cannot be normalized".into()));
        }
        Ok(Self {
            alpha: alpha / norm,
            beta: beta / norm,
        })
    }

    /// Caller guarantees unit norm (up to rounding).
    pub(crate) const fn from_normalized(alpha: Complex64, beta: Complex64) -> Self {
        Self { alpha, beta }
    }

    pub fn from_real(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(Complex64::new(alpha, 0.0), Complex64::new(beta, 0.0))
    }

    /// Point on the Bloch sphere: `cos(theta/2)|e> + e^{i phi} sin(theta/2)|l>`.
    pub fn from_bloch_angles(theta: f64, phi: f64) -> Self {
        Self {
            alpha: Complex64::new((theta / 2.0).cos(), 0.0),
            beta: Complex64::from_polar((theta / 2.0).sin(), phi),
        }
    }

    /// Equal superposition `(|e> + e^{i phi}|l>)/sqrt(2)`.
    pub fn equator(phi: f64) -> Self {
        Self::from_bloch_angles(std::f64::consts::FRAC_PI_2, phi)
    }

    pub const fn early() -> Self {
        Self::from_normalized(ONE, ZERO)
    }

    pub const fn late() -> Self {
        Self::from_normalized(ZERO, ONE)
    }

    pub const fn plus() -> Self {
        Self::from_normalized(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(FRAC_1_SQRT_2, 0.0),
        )
    }

    pub const fn minus() -> Self {
        Self::from_normalized(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(-FRAC_1_SQRT_2, 0.0),
        )
    }

    /// `(|e> + i|l>)/sqrt(2)`, the +1 eigenstate of sigma_y.
    pub const fn left() -> Self {
        Self::from_normalized(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, FRAC_1_SQRT_2),
        )
    }

    /// `(|e> - i|l>)/sqrt(2)`.
    pub const fn right() -> Self {
        Self::from_normalized(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, -FRAC_1_SQRT_2),
        )
    }

    /// The six cardinal states in the order e, l, +, -, L, R.
    pub fn cardinal_states() -> [(&'static str, TimeBinQubit); 6] {
        [
            ("e", Self::early()),
            ("l", Self::late()),
            ("+", Self::plus()),
            ("-", Self::minus()),
            ("L", Self::left()),
            ("R", Self::right()),
        ]
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &TimeBinQubit) -> Complex64 {
        self.alpha.conj() * other.alpha + self.beta.conj() * other.beta
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &TimeBinQubit) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Ray equality: identical up to a global phase.
    pub fn same_ray(&self, other: &TimeBinQubit) -> bool {
        self.overlap(other) > 1.0 - EIGEN_TOL
    }

    /// Multiplies by a global phase factor.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let f = Complex64::from_polar(1.0, phase);
        Self::from_normalized(self.alpha * f, self.beta * f)
    }

    /// Bloch vector `(<sx>, <sy>, <sz>)`.
    pub fn bloch(&self) -> [f64; 3] {
        self.projector().bloch()
    }

    pub fn projector(&self) -> DensityMatrix2 {
        let (a, b) = (self.alpha, self.beta);
        DensityMatrix2 {
            m: [[a * a.conj(), a * b.conj()], [b * a.conj(), b * b.conj()]],
        }
    }

    /// True for |e> and |l> (up to phase): states insensitive to
    /// interferometer phase.
    pub fn is_pole(&self) -> bool {
        self.alpha.norm_sqr() > 1.0 - EIGEN_TOL || self.beta.norm_sqr() > 1.0 - EIGEN_TOL
    }
}

impl fmt::Display for TimeBinQubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6})|e> + ({:.6})|l>", self.alpha, self.beta)
    }
}

/// Normalizing constructor.
pub fn make_qubit(alpha: Complex64, beta: Complex64) -> Result<TimeBinQubit> {
    TimeBinQubit::new(alpha, beta)
}

/// The four two-photon Bell states, in their fixed iteration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
    ];

    /// Phi states have both photons in the same time bin and can be
    /// up-converted by a single SFG element.
    pub fn is_phi(self) -> bool {
        matches!(self, BellLabel::PhiPlus | BellLabel::PhiMinus)
    }
}

/// Single-qubit Pauli correction modulo global phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliCorrection {
    Identity,
    Z,
    X,
    /// Z applied first, then X.
    XZ,
}

impl PauliCorrection {
    pub const ALL: [PauliCorrection; 4] = [
        PauliCorrection::Identity,
        PauliCorrection::Z,
        PauliCorrection::X,
        PauliCorrection::XZ,
    ];

    fn bits(self) -> (bool, bool) {
        match self {
            PauliCorrection::Identity => (false, false),
            PauliCorrection::Z => (false, true),
            PauliCorrection::X => (true, false),
            PauliCorrection::XZ => (true, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => PauliCorrection::Identity,
            (false, true) => PauliCorrection::Z,
            (true, false) => PauliCorrection::X,
            (true, true) => PauliCorrection::XZ,
        }
    }

    /// `self` after `first`, modulo global phase.
    pub fn compose(self, first: PauliCorrection) -> PauliCorrection {
        let (x1, z1) = first.bits();
        let (x2, z2) = self.bits();
        Self::from_bits(x1 ^ x2, z1 ^ z2)
    }
}

/// Applies a Pauli correction:
/// Identity -> (a, b), Z -> (a, -b), X -> (b, a), XZ -> (-b, a).
pub fn apply_correction(q: &TimeBinQubit, c: PauliCorrection) -> TimeBinQubit {
    let (a, b) = (q.alpha, q.beta);
    match c {
        PauliCorrection::Identity => *q,
        PauliCorrection::Z => TimeBinQubit::from_normalized(a, -b),
        PauliCorrection::X => TimeBinQubit::from_normalized(b, a),
        PauliCorrection::XZ => TimeBinQubit::from_normalized(-b, a),
    }
}

/// One term of `|psi>_A (x) |Phi+>_{si}` re-expanded in the Bell basis of A and s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellBranch {
    pub label: BellLabel,
    /// Conditional state of the idler photon.
    pub idler: TimeBinQubit,
    pub amplitude: f64,
}

/// Expands Alice's qubit times the `Phi+` pair into the four Bell branches.
///
/// Conditional idler states, in [`BellLabel::ALL`] order, are
/// `(a, b)`, `(a, -b)`, `(b, a)` and `(-b, a)`, each with amplitude 1/2.
pub fn bell_decompose(alice: &TimeBinQubit) -> [BellBranch; 4] {
    BellLabel::ALL.map(|label| {
        let c = match label {
            BellLabel::PhiPlus => PauliCorrection::Identity,
            BellLabel::PhiMinus => PauliCorrection::Z,
            BellLabel::PsiPlus => PauliCorrection::X,
            BellLabel::PsiMinus => PauliCorrection::XZ,
        };
        BellBranch {
            label,
            idler: apply_correction(alice, c),
            amplitude: 0.5,
        }
    })
}

/// 2x2 density matrix, row-major over {|e>, |l>}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix2 {
    m: [[Complex64; 2]; 2],
}

impl DensityMatrix2 {
    /// Validating constructor: Hermitian and unit trace within 1e-12, both
    /// eigenvalues >= -1e-10.
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let rho = Self { m };
        rho.validate()?;
        Ok(rho)
    }

    /// No checks; used for linear-inversion estimates that may be unphysical.
    pub fn from_entries_unchecked(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    /// `(I + x sx + y sy + z sz)/2`.
    pub fn from_bloch(r: [f64; 3]) -> Self {
        let [x, y, z] = r;
        Self {
            m: [
                [
                    Complex64::new((1.0 + z) / 2.0, 0.0),
                    Complex64::new(x / 2.0, -y / 2.0),
                ],
                [
                    Complex64::new(x / 2.0, y / 2.0),
                    Complex64::new((1.0 - z) / 2.0, 0.0),
                ],
            ],
        }
    }

    pub fn maximally_mixed() -> Self {
        Self::from_bloch([0.0; 3])
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let diag = self.m[0][0].im.abs().max(self.m[1][1].im.abs());
        diag.max((self.m[0][1] - self.m[1][0].conj()).norm())
    }

    pub fn validate(&self) -> Result<()> {
        if self.m.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidDensityMatrix("non-finite entry".into()));
        }
        self.check_hermitian_unit_trace()?;
        let (lo, _) = self.eigenvalues();
        if lo < -EIGEN_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {lo:.3e}"
            )));
        }
        Ok(())
    }

    fn check_hermitian_unit_trace(&self) -> Result<()> {
        let h = self.hermiticity_defect();
        if !(h <= ALGEBRA_TOL) {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (defect {h:.3e})"
            )));
        }
        let tr = self.trace();
        if !((tr.re - 1.0).abs() <= ALGEBRA_TOL) {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {:.15} is not 1",
                tr.re
            )));
        }
        Ok(())
    }

    /// Eigenvalues `(lower, upper)` of the Hermitian part.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = self.m[0][1];
        let mean = (a + d) / 2.0;
        let half_gap = (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt();
        (mean - half_gap, mean + half_gap)
    }

    pub fn is_physical(&self) -> bool {
        self.validate().is_ok()
    }

    /// `(<sx>, <sy>, <sz>)` for a unit-trace matrix.
    pub fn bloch(&self) -> [f64; 3] {
        let c = self.m[0][1];
        [2.0 * c.re, -2.0 * c.im, self.m[0][0].re - self.m[1][1].re]
    }

    pub fn bloch_norm(&self) -> f64 {
        let [x, y, z] = self.bloch();
        (x * x + y * y + z * z).sqrt()
    }

    /// `<psi|rho|psi>` without validation.
    pub fn expectation(&self, psi: &TimeBinQubit) -> f64 {
        let v = [psi.alpha, psi.beta];
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += v[i].conj() * self.m[i][j] * v[j];
            }
        }
        acc.re
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &DensityMatrix2) -> f64 {
        let a = self.bloch();
        let b = other.bloch();
        let d2: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
        let dt = (self.trace().re - other.trace().re) / 2.0;
        // eigenvalues of the difference are dt +- |dr|/2
        let half = d2.sqrt() / 2.0;
        ((dt + half).abs() + (dt - half).abs()) / 2.0
    }

    /// Mixture `p*self + (1-p)*other`.
    pub fn mix(&self, other: &DensityMatrix2, p: f64) -> DensityMatrix2 {
        let mut m = self.m;
        for (i, row) in m.iter_mut().enumerate() {
            for (j, z) in row.iter_mut().enumerate() {
                *z = *z * p + other.m[i][j] * (1.0 - p);
            }
        }
        DensityMatrix2 { m }
    }
}

/// `<psi|rho|psi>` clamped to [0, 1].
///
/// Rejects matrices that are not Hermitian or not unit trace.
pub fn fidelity_pure(rho: &DensityMatrix2, target: &TimeBinQubit) -> Result<f64> {
    rho.check_hermitian_unit_trace()?;
    Ok(rho.expectation(target).clamp(0.0, 1.0))
}

/// `Tr(rho^2)`, which equals `(1 + |r|^2)/2`.
pub fn purity(rho: &DensityMatrix2) -> Result<f64> {
    rho.check_hermitian_unit_trace()?;
    let m = rho.m;
    let p = m[0][0].norm_sqr() + m[1][1].norm_sqr() + 2.0 * m[0][1].norm_sqr();
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn make_qubit_normalizes() {
        let q = make_qubit(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(q, TimeBinQubit::early());

        let q = make_qubit(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((q.alpha() - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!(q.same_ray(&TimeBinQubit::plus()));

        let q = make_qubit(c(3.0, 0.0), c(0.0, 4.0)).unwrap();
        assert!((q.alpha() - c(0.6, 0.0)).norm() < 1e-15);
        assert!((q.beta() - c(0.0, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn make_qubit_rejects_zero() {
        assert!(matches!(
            make_qubit(c(0.0, 0.0), c(0.0, 0.0)),
            Err(Error::InvalidState(_))
        ));
        assert!(make_qubit(c(f64::NAN, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn global_phase_is_preserved() {
        let q = make_qubit(c(0.0, 2.0), c(0.0, 0.0)).unwrap();
        assert!((q.alpha() - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn decompose_early() {
        let b = bell_decompose(&TimeBinQubit::early());
        assert!(b[0].idler.same_ray(&TimeBinQubit::early()));
        assert!(b[1].idler.same_ray(&TimeBinQubit::early()));
        assert!(b[2].idler.same_ray(&TimeBinQubit::late()));
        assert!(b[3].idler.same_ray(&TimeBinQubit::late()));
        assert!(b.iter().all(|x| x.amplitude == 0.5));
    }

    #[test]
    fn decompose_plus_signs() {
        let b = bell_decompose(&TimeBinQubit::plus());
        let minus = TimeBinQubit::minus();
        assert!((b[0].idler.inner(&TimeBinQubit::plus()).re - 1.0).abs() < 1e-15);
        assert!((b[1].idler.inner(&minus).re - 1.0).abs() < 1e-15);
        assert!((b[2].idler.inner(&TimeBinQubit::plus()).re - 1.0).abs() < 1e-15);
        // Psi- branch carries -|->
        assert!((b[3].idler.inner(&minus).re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn decompose_is_complete() {
        let q = make_qubit(c(0.3, -0.2), c(0.1, 0.9)).unwrap();
        let total: f64 = bell_decompose(&q)
            .iter()
            .map(|b| b.amplitude * b.amplitude * b.idler.norm_sqr())
            .sum();
        assert!((total - 1.0).abs() < ALGEBRA_TOL);
    }

    #[test]
    fn fidelity_examples() {
        let e = TimeBinQubit::early();
        assert_eq!(fidelity_pure(&e.projector(), &e).unwrap(), 1.0);
        let mixed = DensityMatrix2::maximally_mixed();
        assert!((fidelity_pure(&mixed, &TimeBinQubit::left()).unwrap() - 0.5).abs() < 1e-15);
        let plus = TimeBinQubit::plus().projector();
        assert!((fidelity_pure(&plus, &e).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fidelity_rejects_bad_matrix() {
        let bad = DensityMatrix2::from_entries_unchecked([
            [c(0.7, 0.0), c(0.1, 0.0)],
            [c(0.0, 0.0), c(0.5, 0.0)],
        ]);
        assert!(matches!(
            fidelity_pure(&bad, &TimeBinQubit::early()),
            Err(Error::InvalidDensityMatrix(_))
        ));
        let wrong_trace = DensityMatrix2::from_entries_unchecked([
            [c(0.7, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.5, 0.0)],
        ]);
        assert!(purity(&wrong_trace).is_err());
    }

    #[test]
    fn purity_examples() {
        assert!((purity(&DensityMatrix2::maximally_mixed()).unwrap() - 0.5).abs() < 1e-15);
        assert!((purity(&TimeBinQubit::right().projector()).unwrap() - 1.0).abs() < 1e-15);
        let r = DensityMatrix2::from_bloch([0.0, 0.8, 0.0]);
        assert!((purity(&r).unwrap() - 0.82).abs() < 1e-15);
    }

    #[test]
    fn correction_examples() {
        let m = apply_correction(&TimeBinQubit::plus(), PauliCorrection::Z);
        assert!(m.same_ray(&TimeBinQubit::minus()));
        let l = apply_correction(&TimeBinQubit::early(), PauliCorrection::X);
        assert!(l.same_ray(&TimeBinQubit::late()));
        let q = make_qubit(c(0.2, 0.4), c(-0.5, 0.1)).unwrap();
        let back = apply_correction(&apply_correction(&q, PauliCorrection::Z), PauliCorrection::Z);
        assert!(back.same_ray(&q));
    }

    #[test]
    fn pauli_group_closed() {
        for a in PauliCorrection::ALL {
            for b in PauliCorrection::ALL {
                let q = make_qubit(c(0.3, 0.1), c(0.2, -0.7)).unwrap();
                let seq = apply_correction(&apply_correction(&q, b), a);
                let once = apply_correction(&q, a.compose(b));
                assert!(seq.same_ray(&once), "{a:?} after {b:?}");
            }
        }
    }

    #[test]
    fn rejects_negative_eigenvalue() {
        let m = DensityMatrix2::from_bloch([0.8, 0.8, 0.8]).entries();
        assert!(matches!(
            DensityMatrix2::new(m),
            Err(Error::InvalidDensityMatrix(_))
        ));
        // boundary state is fine
        assert!(DensityMatrix2::new(DensityMatrix2::from_bloch([0.6, 0.0, 0.8]).entries()).is_ok());
    }

    #[test]
    fn bloch_round_trip() {
        let r = [0.1, -0.3, 0.5];
        let b = DensityMatrix2::from_bloch(r).bloch();
        for i in 0..3 {
            assert!((b[i] - r[i]).abs() < 1e-15);
        }
        assert!((TimeBinQubit::left().bloch()[1] - 1.0).abs() < 1e-15);
    }
}

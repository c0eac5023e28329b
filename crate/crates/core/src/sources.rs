//! Photon-number statistics of SPDC pair sources and of Alice's input.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, invalid, Result};

/// Default truncation for analytic sums over pair number.
pub const DEFAULT_N_MAX: usize = 64;

/// Two-mode squeezed vacuum source `sqrt(1-eps) sum eps^{n/2} |n>_s|n>_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSource {
    epsilon: f64,
}

impl PairSource {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && (0.0..1.0).contains(&epsilon)) {
            return Err(invalid("epsilon", format!("{epsilon} is outside [0, 1)")));
        }
        Ok(Self { epsilon })
    }

    /// Source on the weak-pump branch (`epsilon <= 1/2`) with the given
    /// single-pair probability.
    pub fn from_p_si(p_si: f64) -> Result<Self> {
        Self::new(epsilon_from_p_si(p_si)?)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `(1 - eps) eps`.
    pub fn p_si(&self) -> f64 {
        p_si_from_epsilon(self.epsilon)
    }

    /// `P(n) = (1 - eps) eps^n`.
    pub fn pair_probability(&self, n: u32) -> f64 {
        (1.0 - self.epsilon) * self.epsilon.powi(n as i32)
    }

    /// Mean number of pairs, `eps / (1 - eps)`.
    pub fn mean_pairs(&self) -> f64 {
        self.epsilon / (1.0 - self.epsilon)
    }
}

/// Truncated pair-number distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDistribution {
    /// `P(0..=n_max)`.
    pub probabilities: Vec<f64>,
    /// Mass beyond `n_max`, `eps^(n_max + 1)`.
    pub tail: f64,
}

pub fn spdc_distribution(source: &PairSource, n_max: usize) -> PairDistribution {
    let eps = source.epsilon;
    let mut probabilities = Vec::with_capacity(n_max + 1);
    let mut pow = 1.0;
    for _ in 0..=n_max {
        probabilities.push((1.0 - eps) * pow);
        pow *= eps;
    }
    PairDistribution {
        probabilities,
        tail: pow,
    }
}

pub fn p_si_from_epsilon(epsilon: f64) -> f64 {
    (1.0 - epsilon) * epsilon
}

/// Inverts `p = (1 - eps) eps` on the lower branch, `eps = (1 - sqrt(1 - 4p))/2`.
pub fn epsilon_from_p_si(p_si: f64) -> Result<f64> {
    check_range("p_si", p_si, 0.0, 0.25)?;
    let disc = (1.0 - 4.0 * p_si).max(0.0);
    // 2p / (1 + sqrt(1 - 4p)) is the same root without cancellation at small p
    Ok(2.0 * p_si / (1.0 + disc.sqrt()))
}

/// Alice's input: a coherent state described by its mean cavity photon
/// number, or an explicit pure state in the Fock basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AliceSource {
    mean_photon_number: f64,
    amplitudes: Option<Vec<Complex64>>,
}

impl AliceSource {
    pub fn coherent(mean_photon_number: f64) -> Result<Self> {
        if !(mean_photon_number.is_finite() && mean_photon_number >= 0.0) {
            return Err(invalid(
                "mean_photon_number",
                format!("{mean_photon_number} must be a finite value >= 0"),
            ));
        }
        Ok(Self {
            mean_photon_number,
            amplitudes: None,
        })
    }

    /// Pure state `sum c_m |m>`; the amplitudes must be normalized to 1e-10.
    pub fn fock_superposition(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if !((norm - 1.0).abs() <= 1e-10) {
            return Err(invalid(
                "amplitudes",
                format!("sum |c_m|^2 = {norm}, expected 1"),
            ));
        }
        let mean = amplitudes
            .iter()
            .enumerate()
            .map(|(m, c)| c.norm_sqr() * m as f64)
            .sum();
        Ok(Self {
            mean_photon_number: mean,
            amplitudes: Some(amplitudes),
        })
    }

    pub fn single_photon() -> Self {
        Self {
            mean_photon_number: 1.0,
            amplitudes: Some(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]),
        }
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.mean_photon_number
    }

    pub fn amplitudes(&self) -> Option<&[Complex64]> {
        self.amplitudes.as_deref()
    }
}

/// `Gamma = p_sfg (1 - eps) sum |c_m|^2 m`, the common prefactor of the
/// heralding weights `P(n) = Gamma eps^n n`.
pub fn alice_event_weight(alice: &AliceSource, p_sfg: f64, epsilon: f64) -> Result<f64> {
    check_range("p_sfg", p_sfg, 0.0, 1.0)?;
    check_range("epsilon", epsilon, 0.0, 1.0)?;
    Ok(p_sfg * (1.0 - epsilon) * alice.mean_photon_number())
}

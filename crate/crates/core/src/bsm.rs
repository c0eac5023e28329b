//! Bell state measurements built on sum-frequency generation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Result};
use crate::qubits::{apply_correction, bell_decompose, BellLabel, PauliCorrection, TimeBinQubit};

/// SFG detectors behind the Sigma analyzers. `Sigma1*` see the up-converted
/// Phi sector, `Sigma2*` the Psi sector (complete analyzer only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SfgDetector {
    Sigma1Plus,
    Sigma1Minus,
    Sigma2Plus,
    Sigma2Minus,
    NoClick,
}

impl SfgDetector {
    pub fn is_click(self) -> bool {
        self != SfgDetector::NoClick
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfgOutcome {
    detector: SfgDetector,
    phase_sigma: Option<f64>,
}

impl SfgOutcome {
    pub fn click(detector: SfgDetector, phase_sigma: f64) -> Self {
        debug_assert!(detector.is_click());
        Self {
            detector,
            phase_sigma: Some(phase_sigma),
        }
    }

    pub fn no_click() -> Self {
        Self {
            detector: SfgDetector::NoClick,
            phase_sigma: None,
        }
    }

    pub fn detector(&self) -> SfgDetector {
        self.detector
    }

    /// Analyzer phase; `None` for [`SfgDetector::NoClick`].
    pub fn phase_sigma(&self) -> Option<f64> {
        self.phase_sigma
    }
}

/// How the three interferometer visibilities combine into the fringe contrast.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "law", content = "value")]
pub enum VisibilityComposition {
    #[default]
    Product,
    Min,
    Explicit(f64),
}

/// Alice's, the SFG analyzer's and Bob's unbalanced interferometers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerBank {
    pub phi_a: f64,
    pub phi_sigma: f64,
    pub phi_b: f64,
    pub v_a: f64,
    pub v_sigma: f64,
    pub v_b: f64,
    #[serde(default)]
    pub composition: VisibilityComposition,
}

impl Default for InterferometerBank {
    fn default() -> Self {
        Self::ideal()
    }
}

impl InterferometerBank {
    /// Unit visibilities, zero phases.
    pub fn ideal() -> Self {
        Self {
            phi_a: 0.0,
            phi_sigma: 0.0,
            phi_b: 0.0,
            v_a: 1.0,
            v_sigma: 1.0,
            v_b: 1.0,
            composition: VisibilityComposition::Product,
        }
    }

    /// Individually measured visibilities 97.5%, 90.9%, 97.6%.
    pub fn measured() -> Self {
        Self {
            v_a: 0.975,
            v_sigma: 0.909,
            v_b: 0.976,
            ..Self::ideal()
        }
    }

    /// Fixes the effective visibility, ignoring the individual values.
    pub fn with_effective_visibility(v: f64) -> Self {
        Self {
            composition: VisibilityComposition::Explicit(v),
            ..Self::ideal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_range("v_a", self.v_a, 0.0, 1.0)?;
        check_range("v_sigma", self.v_sigma, 0.0, 1.0)?;
        check_range("v_b", self.v_b, 0.0, 1.0)?;
        if let VisibilityComposition::Explicit(v) = self.composition {
            check_range("v_eff", v, 0.0, 1.0)?;
        }
        for (name, p) in [
            ("phi_a", self.phi_a),
            ("phi_sigma", self.phi_sigma),
            ("phi_b", self.phi_b),
        ] {
            check_range(name, p, f64::MIN, f64::MAX)?;
        }
        Ok(())
    }

    pub fn v_eff(&self) -> f64 {
        match self.composition {
            VisibilityComposition::Product => self.v_a * self.v_sigma * self.v_b,
            VisibilityComposition::Min => self.v_a.min(self.v_sigma).min(self.v_b),
            VisibilityComposition::Explicit(v) => v,
        }
    }

    /// `phi_A - phi_Sigma - phi_B`.
    pub fn fringe_phase(&self) -> f64 {
        self.phi_a - self.phi_sigma - self.phi_b
    }
}

/// One heralding branch of the NLO-BSM teleportation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeraldBranch {
    pub outcome: SfgOutcome,
    /// Probability given that a single pair and Alice's photon meet the cavity
    /// and the up-conversion succeeds in the Phi sector.
    pub probability: f64,
    /// Idler state conditional on the outcome; `None` when nothing is heralded.
    pub idler: Option<TimeBinQubit>,
}

/// Projection of the up-converted photon onto `(|e> +- e^{i phi}|l>)/sqrt(2)`.
///
/// Returns `[Sigma1Plus, Sigma1Minus, NoClick]` with probabilities 1/4, 1/4,
/// 1/2. The heralded idler states are `(alpha, +-beta e^{-i phi})`.
pub fn nlo_herald(alice: &TimeBinQubit, phi_sigma: f64) -> [HeraldBranch; 3] {
    let rot = Complex64::from_polar(1.0, -phi_sigma);
    let (a, b) = (alice.alpha(), alice.beta());
    let idler = |sign: f64| {
        TimeBinQubit::new(a, b * rot * sign).expect("rotation of a normalized state")
    };
    [
        HeraldBranch {
            outcome: SfgOutcome::click(SfgDetector::Sigma1Plus, phi_sigma),
            probability: 0.25,
            idler: Some(idler(1.0)),
        },
        HeraldBranch {
            outcome: SfgOutcome::click(SfgDetector::Sigma1Minus, phi_sigma),
            probability: 0.25,
            idler: Some(idler(-1.0)),
        },
        HeraldBranch {
            outcome: SfgOutcome::no_click(),
            probability: 0.5,
            idler: None,
        },
    ]
}

/// Output port of the final analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Port {
    Plus,
    Minus,
}

impl Port {
    pub fn sign(self) -> f64 {
        match self {
            Port::Plus => 1.0,
            Port::Minus => -1.0,
        }
    }
}

/// `N0 (1 +- V_eff cos(phi_A - phi_Sigma - phi_B))`.
pub fn fringe_coincidences(n0: f64, bank: &InterferometerBank, port: Port) -> Result<f64> {
    check_range("n0", n0, 0.0, f64::MAX)?;
    bank.validate()?;
    Ok(n0 * (1.0 + port.sign() * bank.v_eff() * bank.fringe_phase().cos()))
}

/// Bell label to (detector, correction) for the four-outcome analyzer.
pub fn complete_bsa_map(label: BellLabel) -> (SfgDetector, PauliCorrection) {
    match label {
        BellLabel::PhiPlus => (SfgDetector::Sigma1Plus, PauliCorrection::Identity),
        BellLabel::PhiMinus => (SfgDetector::Sigma1Minus, PauliCorrection::Z),
        BellLabel::PsiPlus => (SfgDetector::Sigma2Plus, PauliCorrection::X),
        BellLabel::PsiMinus => (SfgDetector::Sigma2Minus, PauliCorrection::XZ),
    }
}

/// Routing of the Psi sector into the second SFG element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BsaScheme {
    /// Beam splitter before the delay line (half the Psi events are lost).
    BeamSplitterDelay,
    /// Beam splitter after the first SFG element (half the Psi events are lost).
    BeamSplitterCascade,
    /// Active optical switch.
    #[default]
    Switch,
}

impl BsaScheme {
    /// Heralding efficiency of the `Sigma2*` detectors.
    pub fn psi_efficiency(self) -> f64 {
        match self {
            BsaScheme::BeamSplitterDelay | BsaScheme::BeamSplitterCascade => 0.5,
            BsaScheme::Switch => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompleteBranch {
    pub label: BellLabel,
    pub detector: SfgDetector,
    pub probability: f64,
    pub conditional_idler: TimeBinQubit,
    pub correction: PauliCorrection,
    /// Idler after the correction; equals Alice's state up to global phase.
    pub corrected: TimeBinQubit,
}

/// Four-outcome teleportation with the lossless switch.
pub fn complete_teleport(alice: &TimeBinQubit) -> [CompleteBranch; 4] {
    complete_teleport_with(alice, BsaScheme::Switch)
}

/// Four-outcome teleportation; Psi branches are scaled by the scheme's
/// efficiency, the rest of the probability is unheralded.
pub fn complete_teleport_with(alice: &TimeBinQubit, scheme: BsaScheme) -> [CompleteBranch; 4] {
    bell_decompose(alice).map(|branch| {
        let (detector, correction) = complete_bsa_map(branch.label);
        let eff = if branch.label.is_phi() {
            1.0
        } else {
            scheme.psi_efficiency()
        };
        CompleteBranch {
            label: branch.label,
            detector,
            probability: branch.amplitude * branch.amplitude * eff,
            conditional_idler: branch.idler,
            correction,
            corrected: apply_correction(&branch.idler, correction),
        }
    })
}

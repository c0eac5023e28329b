//! Coupled-mode model of a triply resonant chi(2) microring (modes a + b -> c).
//!
//! All rates are angular (rad/s); `kappa = omega / Q`. Powers are in watts and
//! cavity amplitudes are normalized so that `|a|^2` is the intracavity photon
//! number.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

pub fn angular_frequency(wavelength: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / wavelength
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityMode {
    /// Resonance wavelength, m.
    pub wavelength: f64,
    /// Total dissipation rate, rad/s.
    pub kappa_total: f64,
    /// External (waveguide) coupling rate, rad/s.
    pub kappa_external: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub azimuthal_number: Option<i64>,
}

impl CavityMode {
    pub fn new(wavelength: f64, kappa_total: f64, kappa_external: f64) -> Result<Self> {
        let mode = Self {
            wavelength,
            kappa_total,
            kappa_external,
            azimuthal_number: None,
        };
        mode.validate()?;
        Ok(mode)
    }

    /// Mode with loaded quality factor `q` and `kappa_external = fraction * kappa_total`.
    pub fn from_q(wavelength: f64, q: f64, external_fraction: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(invalid("q", format!("{q} must be positive")));
        }
        let kappa = angular_frequency(wavelength) / q;
        Self::new(wavelength, kappa, kappa * external_fraction)
    }

    pub fn with_azimuthal_number(mut self, m: i64) -> Self {
        self.azimuthal_number = Some(m);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(invalid("wavelength", format!("{} must be positive", self.wavelength)));
        }
        if !(self.kappa_total.is_finite() && self.kappa_total > 0.0) {
            return Err(invalid("kappa_total", format!("{} must be positive", self.kappa_total)));
        }
        if !(self.kappa_external > 0.0 && self.kappa_external <= self.kappa_total) {
            return Err(invalid(
                "kappa_external",
                format!(
                    "{} must lie in (0, kappa_total = {}]",
                    self.kappa_external, self.kappa_total
                ),
            ));
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        angular_frequency(self.wavelength)
    }

    pub fn quality_factor(&self) -> f64 {
        self.omega() / self.kappa_total
    }

    /// `(kappa_e/2) / (delta^2 + (kappa/2)^2)`: intracavity photons per unit
    /// input photon flux at detuning `delta`.
    pub fn lorentzian(&self, delta: f64) -> f64 {
        let hw = self.kappa_total / 2.0;
        (self.kappa_external / 2.0) / (delta * delta + hw * hw)
    }

    /// Intracavity photon number for input power `power` (W) at detuning `delta`.
    pub fn photon_number(&self, delta: f64, power: f64) -> f64 {
        self.lorentzian(delta) * power / (HBAR * self.omega())
    }
}

/// Declares the modes frequency matched (`omega_c = omega_a + omega_b`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatching {
    /// Largest accepted `|omega_c - omega_a - omega_b|`, rad/s.
    pub frequency_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub mode_a: CavityMode,
    pub mode_b: CavityMode,
    pub mode_c: CavityMode,
    /// Single-photon nonlinear coupling, rad/s.
    pub g: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_matching: Option<PhaseMatching>,
}

impl CavityParams {
    pub fn new(
        mode_a: CavityMode,
        mode_b: CavityMode,
        mode_c: CavityMode,
        g: f64,
        phase_matching: Option<PhaseMatching>,
    ) -> Result<Self> {
        let p = Self {
            mode_a,
            mode_b,
            mode_c,
            g,
            phase_matching,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.mode_a.validate()?;
        self.mode_b.validate()?;
        self.mode_c.validate()?;
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(invalid("g", format!("{} must be >= 0", self.g)));
        }
        if let Some(pm) = self.phase_matching {
            let raw = self.raw_frequency_mismatch();
            if raw.abs() > pm.frequency_tolerance {
                return Err(invalid(
                    "phase_matching",
                    format!(
                        "|omega_c - omega_a - omega_b| = 2pi x {:.3} GHz exceeds tolerance 2pi x {:.3} GHz",
                        raw.abs() / (2.0 * PI * 1e9),
                        pm.frequency_tolerance / (2.0 * PI * 1e9)
                    ),
                ));
            }
            if let (Some(ma), Some(mb), Some(mc)) = (
                self.mode_a.azimuthal_number,
                self.mode_b.azimuthal_number,
                self.mode_c.azimuthal_number,
            ) {
                if (mc - ma - mb).abs() != 2 {
                    return Err(invalid(
                        "azimuthal_number",
                        format!("m_c = {mc} is not m_a + m_b +- 2 (m_a = {ma}, m_b = {mb})"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Device used in the teleportation experiment: Q_a = 4.4e4, Q_b = 4.7e4,
    /// Q_c = 1e5, g/2pi = 14 MHz. Modes a and b are critically coupled; mode c
    /// is under-coupled with `kappa_ce = 0.03 kappa_c` (assumed, not measured).
    pub fn experiment_device() -> Self {
        let nm = 1e-9;
        let tol = 2.0 * PI * 10e9;
        Self {
            mode_a: CavityMode::from_q(1541.010 * nm, 4.4e4, 0.5).unwrap(),
            mode_b: CavityMode::from_q(1565.392 * nm, 4.7e4, 0.5).unwrap(),
            mode_c: CavityMode::from_q(776.557 * nm, 1e5, MODE_C_EXTERNAL_FRACTION).unwrap(),
            g: 2.0 * PI * 14e6,
            phase_matching: Some(PhaseMatching {
                frequency_tolerance: tol,
            }),
        }
    }

    /// Improved ring: Q_a = Q_b = 4e5, Q_c = 2e5, g/2pi = 20 MHz.
    pub fn optimized_device() -> Self {
        let mut p = Self::experiment_device();
        let nm = 1e-9;
        p.mode_a = CavityMode::from_q(1541.010 * nm, 4e5, 0.5).unwrap();
        p.mode_b = CavityMode::from_q(1565.392 * nm, 4e5, 0.5).unwrap();
        p.mode_c = CavityMode::from_q(776.557 * nm, 2e5, MODE_C_EXTERNAL_FRACTION).unwrap();
        p.g = 2.0 * PI * 20e6;
        p
    }

    fn raw_frequency_mismatch(&self) -> f64 {
        self.mode_c.omega() - self.mode_a.omega() - self.mode_b.omega()
    }

    /// `omega_c - omega_a - omega_b`; zero when the modes are declared phase matched.
    pub fn frequency_mismatch(&self) -> f64 {
        if self.phase_matching.is_some() {
            0.0
        } else {
            self.raw_frequency_mismatch()
        }
    }

    /// Detuning of mode c from the generated sum frequency,
    /// `omega_c - omega_pa - omega_pb`.
    pub fn sum_detuning(&self, det: &Detunings) -> f64 {
        self.frequency_mismatch() + det.delta_a + det.delta_b
    }
}

/// Coupling fraction `kappa_ce / kappa_c` assumed for the under-coupled
/// 780 nm mode of the experimental device.
pub const MODE_C_EXTERNAL_FRACTION: f64 = 0.03;

/// Pump offsets from resonance, `omega_a - omega_pa` and `omega_b - omega_pb` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Detunings {
    pub delta_a: f64,
    pub delta_b: f64,
}

impl Detunings {
    pub const RESONANT: Detunings = Detunings {
        delta_a: 0.0,
        delta_b: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    /// Largest ratio of the neglected back-action term (`g b* c`, `g a* c`)
    /// to the linear damping term. The leading-order solution is trustworthy
    /// when this is well below 0.1.
    pub back_action: f64,
}

impl SteadyState {
    pub fn is_weak_conversion(&self) -> bool {
        self.back_action < 0.1
    }
}

/// Leading-order (in g/kappa) steady state under static driving of a and b.
pub fn steady_state(
    params: &CavityParams,
    det: &Detunings,
    input_powers: (f64, f64),
) -> Result<SteadyState> {
    let (p_a, p_b) = input_powers;
    for (name, p) in [("P_a", p_a), ("P_b", p_b)] {
        if !(p.is_finite() && p >= 0.0) {
            return Err(invalid(name, format!("{p} must be a finite power >= 0")));
        }
    }
    let i = Complex64::i();
    let drive = |mode: &CavityMode, delta: f64, power: f64| {
        let a_in = (power / (HBAR * mode.omega())).sqrt();
        -i * (mode.kappa_external / 2.0).sqrt() / (i * delta + mode.kappa_total / 2.0) * a_in
    };
    let a = drive(&params.mode_a, det.delta_a, p_a);
    let b = drive(&params.mode_b, det.delta_b, p_b);
    let denom_c = i * params.sum_detuning(det) + params.mode_c.kappa_total / 2.0;
    let c = -i * params.g * a * b / denom_c;

    let g2 = params.g * params.g;
    let dc = denom_c.norm();
    let back_action = (g2 * b.norm_sqr() / (params.mode_a.kappa_total / 2.0 * dc))
        .max(g2 * a.norm_sqr() / (params.mode_b.kappa_total / 2.0 * dc));
    Ok(SteadyState {
        a,
        b,
        c,
        back_action,
    })
}

/// Output SFG power (W) leaving through the external coupling of mode c.
pub fn sfg_output_power(params: &CavityParams, state: &SteadyState) -> f64 {
    params.mode_c.kappa_external / 2.0 * HBAR * params.mode_c.omega() * state.c.norm_sqr()
}

/// `eta_SFG = P_c / (P_a P_b)` in 1/W, including the three Lorentzian factors.
pub fn sfg_efficiency(params: &CavityParams, det: &Detunings) -> f64 {
    let la = params.mode_a.lorentzian(det.delta_a);
    let lb = params.mode_b.lorentzian(det.delta_b);
    let lc = params.mode_c.lorentzian(params.sum_detuning(det));
    let (wa, wb, wc) = (
        params.mode_a.omega(),
        params.mode_b.omega(),
        params.mode_c.omega(),
    );
    params.g * params.g * la * lb * lc * (HBAR * wc) / (HBAR * wa * HBAR * wb)
}

/// Resonant, frequency-matched efficiency (the closed form without detuning terms).
pub fn sfg_efficiency_resonant(params: &CavityParams) -> f64 {
    let la = params.mode_a.lorentzian(0.0);
    let lb = params.mode_b.lorentzian(0.0);
    let lc = params.mode_c.lorentzian(0.0);
    let (wa, wb, wc) = (
        params.mode_a.omega(),
        params.mode_b.omega(),
        params.mode_c.omega(),
    );
    params.g * params.g * la * lb * lc * (HBAR * wc) / (HBAR * wa * HBAR * wb)
}

/// Which linewidth stands in for the "influx" bandwidth of the a/b photon pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfluxLinewidth {
    /// `(kappa_a + kappa_b) / 2`, symmetric in a and b.
    #[default]
    Mean,
    /// `kappa_a` alone.
    ModeA,
}

/// `p_SFG = 4 g^2 / (kappa_ab kappa_c)` with the mean a/b linewidth.
pub fn single_photon_sfg_probability(params: &CavityParams) -> f64 {
    single_photon_sfg_probability_with(params, InfluxLinewidth::Mean)
}

pub fn single_photon_sfg_probability_with(params: &CavityParams, linewidth: InfluxLinewidth) -> f64 {
    let k_ab = match linewidth {
        InfluxLinewidth::Mean => (params.mode_a.kappa_total + params.mode_b.kappa_total) / 2.0,
        InfluxLinewidth::ModeA => params.mode_a.kappa_total,
    };
    (4.0 * params.g * params.g / (k_ab * params.mode_c.kappa_total)).min(1.0)
}

/// Both sides of the conversion between the classical efficiency and the
/// single-photon probability:
///
/// `lhs = 4 g^2 / (kappa_a kappa_c)`,
/// `rhs = eta (kappa_a/2)^2/(kappa_ae/2) (kappa_b/2)^2/(kappa_be/2)
///        kappa_c/(kappa_a kappa_ce/2) hbar w_a hbar w_b / (hbar w_c)`
/// with `eta` the resonant efficiency. The two agree identically.
pub fn efficiency_probability_relation(params: &CavityParams) -> (f64, f64) {
    let (a, b, c) = (&params.mode_a, &params.mode_b, &params.mode_c);
    let lhs = 4.0 * params.g * params.g / (a.kappa_total * c.kappa_total);
    let eta = sfg_efficiency_resonant(params);
    let rhs = eta
        * (a.kappa_total / 2.0).powi(2) / (a.kappa_external / 2.0)
        * (b.kappa_total / 2.0).powi(2) / (b.kappa_external / 2.0)
        * c.kappa_total / (a.kappa_total * c.kappa_external / 2.0)
        * (HBAR * a.omega()) * (HBAR * b.omega())
        / (HBAR * c.omega());
    (lhs, rhs)
}

/// Wavelengths (m) of the photons in the teleportation setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavelengthSetup {
    pub alice: f64,
    pub sfg: f64,
    pub signal: f64,
    pub idler: f64,
    pub pump: f64,
}

impl WavelengthSetup {
    /// Wavelengths of the reported experiment.
    pub fn experiment() -> Self {
        let nm = 1e-9;
        Self {
            alice: 1541.010 * nm,
            sfg: 776.553 * nm,
            signal: 1565.392 * nm,
            idler: 1522.870 * nm,
            pump: 771.921 * nm,
        }
    }
}

/// Component properties and tolerances for [`check_wavelength_conditions`].
/// All lengths in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavelengthConstraints {
    /// Free spectral range of the 1550 nm band ring resonances.
    pub fsr_ring: f64,
    /// Free spectral range of the idler fiber Fabry-Perot filter.
    pub fsr_ffp: f64,
    /// Tunable range of the SPDC pump.
    pub pump_range: (f64, f64),
    /// Coarse WDM channel width.
    pub wdm_channel_width: f64,
    /// Wavelength of a channel edge of the coarse WDM grid.
    pub wdm_grid_origin: f64,
    /// Allowed mismatch between the signal and `1/(1/l_sfg - 1/l_alice)`.
    pub signal_tolerance: f64,
    /// Allowed deviation of `(l_signal - l_alice)/fsr_ring` from an integer
    /// (the ring FSR is dispersive, so this is a fraction of one FSR).
    pub ring_fsr_fraction: f64,
    /// Allowed `|l_alice - l_idler - m fsr_ffp|`.
    pub ffp_tolerance: f64,
    /// Allowed mismatch between the pump and `1/(1/l_s + 1/l_i)`.
    pub energy_tolerance: f64,
}

impl Default for WavelengthConstraints {
    fn default() -> Self {
        let nm = 1e-9;
        Self {
            fsr_ring: 11.9 * nm,
            fsr_ffp: 9.1 * nm,
            pump_range: (770.5 * nm, 773.5 * nm),
            wdm_channel_width: 20.0 * nm,
            wdm_grid_origin: 1500.0 * nm,
            signal_tolerance: 0.05 * nm,
            ring_fsr_fraction: 0.1,
            ffp_tolerance: 0.1 * nm,
            energy_tolerance: 0.01 * nm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WavelengthReport {
    /// (a) signal set by the SFG and Alice wavelengths.
    pub signal_alignment: ConditionCheck,
    /// (a) signal and Alice resonances an integer number of ring FSRs apart.
    pub ring_fsr: ConditionCheck,
    /// (b) idler an integer (non-zero) number of FFP FSRs from Alice.
    pub ffp_fsr: ConditionCheck,
    /// (c) energy conservation of the SPDC process.
    pub energy_conservation: ConditionCheck,
    /// (c) pump inside the phase-matching range of the source.
    pub pump_range: ConditionCheck,
    /// (d) Alice, signal and idler in separate coarse WDM channels.
    pub wdm_separation: ConditionCheck,
}

impl WavelengthReport {
    pub fn checks(&self) -> [&ConditionCheck; 6] {
        [
            &self.signal_alignment,
            &self.ring_fsr,
            &self.ffp_fsr,
            &self.energy_conservation,
            &self.pump_range,
            &self.wdm_separation,
        ]
    }

    pub fn all_pass(&self) -> bool {
        self.checks().iter().all(|c| c.passed)
    }
}

pub fn check_wavelength_conditions(
    setup: &WavelengthSetup,
    constraints: &WavelengthConstraints,
) -> WavelengthReport {
    let nm = 1e-9;
    let w = setup;
    let k = constraints;

    let implied_signal = 1.0 / (1.0 / w.sfg - 1.0 / w.alice);
    let d = (implied_signal - w.signal).abs();
    let signal_alignment = ConditionCheck {
        name: "signal_alignment",
        passed: d <= k.signal_tolerance,
        detail: format!(
            "1/(1/l_sfg - 1/l_A) = {:.3} nm vs signal {:.3} nm (|diff| {:.4} nm)",
            implied_signal / nm,
            w.signal / nm,
            d / nm
        ),
    };

    let ratio = (w.signal - w.alice) / k.fsr_ring;
    let n = ratio.round();
    let ring_fsr = ConditionCheck {
        name: "ring_fsr",
        passed: n != 0.0 && (ratio - n).abs() <= k.ring_fsr_fraction,
        detail: format!("(l_s - l_A)/FSR_ring = {ratio:.4} (nearest integer {n})"),
    };

    let sep = w.alice - w.idler;
    let m = (sep / k.fsr_ffp).round();
    let resid = (sep - m * k.fsr_ffp).abs();
    let ffp_fsr = ConditionCheck {
        name: "ffp_fsr",
        passed: m != 0.0 && resid <= k.ffp_tolerance,
        detail: format!(
            "l_A - l_i = {:.3} nm = {m} x FSR_FFP + {:.4} nm",
            sep / nm,
            (sep - m * k.fsr_ffp) / nm
        ),
    };

    let implied_pump = 1.0 / (1.0 / w.signal + 1.0 / w.idler);
    let dp = (implied_pump - w.pump).abs();
    let energy_conservation = ConditionCheck {
        name: "energy_conservation",
        passed: dp <= k.energy_tolerance,
        detail: format!(
            "1/(1/l_s + 1/l_i) = {:.4} nm vs pump {:.4} nm",
            implied_pump / nm,
            w.pump / nm
        ),
    };

    let (lo, hi) = k.pump_range;
    let pump_range = ConditionCheck {
        name: "pump_range",
        passed: w.pump >= lo && w.pump <= hi,
        detail: format!(
            "pump {:.3} nm in [{:.1}, {:.1}] nm",
            w.pump / nm,
            lo / nm,
            hi / nm
        ),
    };

    let channel = |l: f64| ((l - k.wdm_grid_origin) / k.wdm_channel_width).floor() as i64;
    let (ca, cs, ci) = (channel(w.alice), channel(w.signal), channel(w.idler));
    let wdm_separation = ConditionCheck {
        name: "wdm_separation",
        passed: ca != cs && ca != ci && cs != ci,
        detail: format!("coarse WDM channels: alice {ca}, signal {cs}, idler {ci}"),
    };

    WavelengthReport {
        signal_alignment,
        ring_fsr,
        ffp_fsr,
        energy_conservation,
        pump_range,
        wdm_separation,
    }
}

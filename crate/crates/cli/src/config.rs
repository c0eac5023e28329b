//! TOML scenario files.
//!
//! Sections are named after the library types they build. Every key is
//! optional; a missing key takes the value of the measured teleportation
//! setup. Frequencies and rates are ordinary frequencies in Hz (the tool
//! multiplies by 2 pi where angular rates are needed), wavelengths are in nm.
//! Transmissions accept a bare linear number or a string with a unit:
//! `"7.2 dB"` (loss), `"0.19 lin"` or `"19 %"`. Angles accept radians or a
//! multiple of pi such as `"1.1e-3 pi"`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use sfg_bsm::bsm::{InterferometerBank, VisibilityComposition};
use sfg_bsm::cavity::{
    CavityMode, CavityParams, Detunings, InfluxLinewidth, PhaseMatching, WavelengthConstraints, WavelengthSetup,
};
use sfg_bsm::montecarlo::{BsmType, DarkCounts, HeraldMode, ScenarioConfig, SourceA};
use sfg_bsm::protocols::{LossMode, SystemEfficiencies};
use sfg_bsm::qubits::TimeBinQubit;
use sfg_bsm::sources::{AliceSource, PairSource};
use sfg_bsm::tomography::{MleOptions, NoiseSources};

use crate::error::{core_error, CliError, Result};

const NM: f64 = 1e-9;
const TWO_PI: f64 = 2.0 * PI;

/// Splits a trailing unit off `s`; the unit is empty when none matches.
fn split_unit<'a>(s: &'a str, units: &[&'static str]) -> (&'a str, &'static str) {
    units
        .iter()
        .find(|u| s.ends_with(**u))
        .map_or((s, ""), |u| (s[..s.len() - u.len()].trim_end(), *u))
}

/// A power transmission in [0, 1], stored linearly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission(pub f64);

impl Transmission {
    pub fn from_db_loss(db: f64) -> Self {
        Transmission(10f64.powf(-db / 10.0))
    }

    pub fn db_loss(self) -> f64 {
        10.0 * (1.0 / self.0).log10()
    }

    fn parse(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let (num, unit) = split_unit(s, &["dB", "db", "lin", "%"]);
        let v: f64 = num
            .parse()
            .map_err(|_| format!("`{s}` is not a number followed by a unit (dB, lin or %)"))?;
        let t = match unit {
            "dB" | "db" => Transmission::from_db_loss(v),
            "%" => Transmission(v / 100.0),
            _ => Transmission(v),
        };
        t.checked()
    }

    fn checked(self) -> std::result::Result<Self, String> {
        if self.0.is_finite() && (0.0..=1.0).contains(&self.0) {
            Ok(self)
        } else {
            Err(format!("transmission {} is outside [0, 1]", self.0))
        }
    }
}

impl Serialize for Transmission {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Transmission {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Transmission;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a linear transmission or a string such as \"7.2 dB\", \"0.19 lin\", \"19 %\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Transmission, E> {
                Transmission(v).checked().map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Transmission, E> {
                self.visit_f64(v as f64)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Transmission, E> {
                self.visit_f64(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Transmission, E> {
                Transmission::parse(v).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// An angle in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(pub f64);

impl Angle {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let (num, unit) = split_unit(s, &["pi", "rad"]);
        let v: f64 = if num.is_empty() && unit == "pi" {
            1.0
        } else {
            num.parse()
                .map_err(|_| format!("`{s}` is not an angle (radians, or a multiple such as \"0.5 pi\")"))?
        };
        let a = if unit == "pi" { v * PI } else { v };
        if a.is_finite() {
            Ok(Angle(a))
        } else {
            Err(format!("angle `{s}` is not finite"))
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Angle;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an angle in radians or a string such as \"0.5 pi\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Angle, E> {
                if v.is_finite() {
                    Ok(Angle(v))
                } else {
                    Err(E::custom("angle is not finite"))
                }
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Angle, E> {
                Ok(Angle(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Angle, E> {
                Ok(Angle(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Angle, E> {
                Angle::parse(v).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// A pure time-bin state: one of `e, l, +, -, L, R`, or Bloch angles
/// `{ theta = .., phi = .. }`.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetState {
    Named(String),
    Angles { theta: f64, phi: f64 },
}

impl TargetState {
    pub fn qubit(&self) -> TimeBinQubit {
        match self {
            TargetState::Named(n) => TimeBinQubit::cardinal_states()
                .into_iter()
                .find(|(name, _)| name == n)
                .map(|(_, q)| q)
                .expect("validated at parse time"),
            TargetState::Angles { theta, phi } => TimeBinQubit::from_bloch_angles(*theta, *phi),
        }
    }

    pub fn label(&self) -> String {
        match self {
            TargetState::Named(n) => n.clone(),
            TargetState::Angles { theta, phi } => format!("theta={theta},phi={phi}"),
        }
    }
}

impl Serialize for TargetState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        match self {
            TargetState::Named(n) => s.serialize_str(n),
            TargetState::Angles { theta, phi } => {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("theta", theta)?;
                m.serialize_entry("phi", phi)?;
                m.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for TargetState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = TargetState;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("one of \"e\", \"l\", \"+\", \"-\", \"L\", \"R\" or a table { theta, phi }")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<TargetState, E> {
                if TimeBinQubit::cardinal_states().iter().any(|(n, _)| *n == v) {
                    Ok(TargetState::Named(v.to_string()))
                } else {
                    Err(E::custom(format!(
                        "unknown state `{v}` (expected e, l, +, -, L, R or {{ theta, phi }})"
                    )))
                }
            }
            fn visit_map<M: MapAccess<'de>>(self, mut m: M) -> std::result::Result<TargetState, M::Error> {
                let (mut theta, mut phi) = (None, None);
                while let Some(k) = m.next_key::<String>()? {
                    match k.as_str() {
                        "theta" => theta = Some(m.next_value::<Angle>()?.0),
                        "phi" => phi = Some(m.next_value::<Angle>()?.0),
                        other => return Err(de::Error::unknown_field(other, &["theta", "phi"])),
                    }
                }
                Ok(TargetState::Angles {
                    theta: theta.ok_or_else(|| de::Error::missing_field("theta"))?,
                    phi: phi.ok_or_else(|| de::Error::missing_field("phi"))?,
                })
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub shots: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 1,
            shots: 1_000_000,
        }
    }
}

/// Transmissions and detector efficiencies of the teleportation setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub t_a: Transmission,
    pub t_s: Transmission,
    pub t_i: Transmission,
    pub t_sigma: Transmission,
    pub eta_i: Transmission,
    pub eta_sigma: Transmission,
    pub p_si: f64,
    pub p_sfg: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        let s = SystemEfficiencies::measured();
        Self {
            t_a: Transmission(s.t_a),
            t_s: Transmission(s.t_s),
            t_i: Transmission(s.t_i),
            t_sigma: Transmission(s.t_sigma),
            eta_i: Transmission(s.eta_i),
            eta_sigma: Transmission(s.eta_sigma),
            p_si: s.p_si,
            p_sfg: s.p_sfg,
        }
    }
}

impl SystemSection {
    pub fn build(&self) -> SystemEfficiencies {
        SystemEfficiencies {
            t_a: self.t_a.0,
            t_s: self.t_s.0,
            t_i: self.t_i.0,
            t_sigma: self.t_sigma.0,
            eta_i: self.eta_i.0,
            eta_sigma: self.eta_sigma.0,
            p_si: self.p_si,
            p_sfg: self.p_sfg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositionLaw {
    Product,
    Min,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterferometerSection {
    pub phi_a: Angle,
    pub phi_sigma: Angle,
    pub phi_b: Angle,
    pub v_a: f64,
    pub v_sigma: f64,
    pub v_b: f64,
    /// Defaults to `explicit` when `v_eff` is given, `product` otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composition: Option<CompositionLaw>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_eff: Option<f64>,
}

impl Default for InterferometerSection {
    fn default() -> Self {
        let m = InterferometerBank::measured();
        Self {
            phi_a: Angle(m.phi_a),
            phi_sigma: Angle(m.phi_sigma),
            phi_b: Angle(m.phi_b),
            v_a: m.v_a,
            v_sigma: m.v_sigma,
            v_b: m.v_b,
            composition: None,
            v_eff: None,
        }
    }
}

impl InterferometerSection {
    fn law(&self) -> CompositionLaw {
        self.composition.unwrap_or(if self.v_eff.is_some() {
            CompositionLaw::Explicit
        } else {
            CompositionLaw::Product
        })
    }

    pub fn build(&self) -> Result<InterferometerBank> {
        let composition = match (self.law(), self.v_eff) {
            (CompositionLaw::Product, None) => VisibilityComposition::Product,
            (CompositionLaw::Min, None) => VisibilityComposition::Min,
            (CompositionLaw::Explicit, Some(v)) => VisibilityComposition::Explicit(v),
            (CompositionLaw::Explicit, None) => {
                return Err(section_error("interferometer_bank", "composition = \"explicit\" needs v_eff"))
            }
            (law, Some(_)) => {
                return Err(section_error(
                    "interferometer_bank",
                    format!("v_eff is only used with composition = \"explicit\", not {law:?}"),
                ))
            }
        };
        let bank = InterferometerBank {
            phi_a: self.phi_a.0,
            phi_sigma: self.phi_sigma.0,
            phi_b: self.phi_b.0,
            v_a: self.v_a,
            v_sigma: self.v_sigma,
            v_b: self.v_b,
            composition,
        };
        bank.validate().map_err(core_error("[interferometer_bank]"))?;
        Ok(bank)
    }
}

/// Microring modes a (Alice), b (signal) and c (SFG).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavitySection {
    pub wavelength_a_nm: f64,
    pub wavelength_b_nm: f64,
    pub wavelength_c_nm: f64,
    /// Loaded quality factors.
    pub q_a: f64,
    pub q_b: f64,
    pub q_c: f64,
    /// `kappa_external / kappa_total` of each mode.
    pub external_fraction_a: f64,
    pub external_fraction_b: f64,
    pub external_fraction_c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub azimuthal_a: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub azimuthal_b: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub azimuthal_c: Option<i64>,
    /// `g / 2 pi`.
    pub g_hz: f64,
    /// Treat mode c as exactly at `omega_a + omega_b`.
    pub phase_matched: bool,
    /// Largest accepted `|f_c - f_a - f_b|` when phase matched.
    pub frequency_tolerance_hz: f64,
    pub influx_linewidth: InfluxLinewidth,
    /// Pump detunings from resonance, `delta / 2 pi`.
    pub detuning_a_hz: f64,
    pub detuning_b_hz: f64,
    /// Input powers used for the steady-state report, W.
    pub input_power_a_w: f64,
    pub input_power_b_w: f64,
}

impl Default for CavitySection {
    fn default() -> Self {
        let d = CavityParams::experiment_device();
        let f = |m: &CavityMode| m.kappa_external / m.kappa_total;
        Self {
            wavelength_a_nm: 1541.010,
            wavelength_b_nm: 1565.392,
            wavelength_c_nm: 776.557,
            q_a: 4.4e4,
            q_b: 4.7e4,
            q_c: 1e5,
            external_fraction_a: f(&d.mode_a),
            external_fraction_b: f(&d.mode_b),
            external_fraction_c: sfg_bsm::cavity::MODE_C_EXTERNAL_FRACTION,
            azimuthal_a: None,
            azimuthal_b: None,
            azimuthal_c: None,
            g_hz: 14e6,
            phase_matched: true,
            frequency_tolerance_hz: 10e9,
            influx_linewidth: InfluxLinewidth::Mean,
            detuning_a_hz: 0.0,
            detuning_b_hz: 0.0,
            input_power_a_w: 1e-6,
            input_power_b_w: 1e-6,
        }
    }
}

impl CavitySection {
    pub fn build(&self) -> Result<CavityParams> {
        let ctx = "[cavity_params]";
        let mode = |l: f64, q: f64, f: f64, m: Option<i64>| -> Result<CavityMode> {
            let mode = CavityMode::from_q(l * NM, q, f).map_err(core_error(ctx))?;
            Ok(match m {
                Some(m) => mode.with_azimuthal_number(m),
                None => mode,
            })
        };
        let pm = self.phase_matched.then_some(PhaseMatching {
            frequency_tolerance: TWO_PI * self.frequency_tolerance_hz,
        });
        CavityParams::new(
            mode(self.wavelength_a_nm, self.q_a, self.external_fraction_a, self.azimuthal_a)?,
            mode(self.wavelength_b_nm, self.q_b, self.external_fraction_b, self.azimuthal_b)?,
            mode(self.wavelength_c_nm, self.q_c, self.external_fraction_c, self.azimuthal_c)?,
            TWO_PI * self.g_hz,
            pm,
        )
        .map_err(core_error(ctx))
    }

    pub fn detunings(&self) -> Detunings {
        Detunings {
            delta_a: TWO_PI * self.detuning_a_hz,
            delta_b: TWO_PI * self.detuning_b_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WavelengthSection {
    pub alice_nm: f64,
    pub sfg_nm: f64,
    pub signal_nm: f64,
    pub idler_nm: f64,
    pub pump_nm: f64,
    pub fsr_ring_nm: f64,
    pub fsr_ffp_nm: f64,
    pub pump_min_nm: f64,
    pub pump_max_nm: f64,
    pub wdm_channel_width_nm: f64,
    pub wdm_grid_origin_nm: f64,
    pub signal_tolerance_nm: f64,
    pub ring_fsr_fraction: f64,
    pub ffp_tolerance_nm: f64,
    pub energy_tolerance_nm: f64,
}

impl Default for WavelengthSection {
    fn default() -> Self {
        Self {
            alice_nm: 1541.010,
            sfg_nm: 776.553,
            signal_nm: 1565.392,
            idler_nm: 1522.870,
            pump_nm: 771.921,
            fsr_ring_nm: 11.9,
            fsr_ffp_nm: 9.1,
            pump_min_nm: 770.5,
            pump_max_nm: 773.5,
            wdm_channel_width_nm: 20.0,
            wdm_grid_origin_nm: 1500.0,
            signal_tolerance_nm: 0.05,
            ring_fsr_fraction: 0.1,
            ffp_tolerance_nm: 0.1,
            energy_tolerance_nm: 0.01,
        }
    }
}

impl WavelengthSection {
    pub fn build(&self) -> Result<(WavelengthSetup, WavelengthConstraints)> {
        let fields = [
            ("alice_nm", self.alice_nm),
            ("sfg_nm", self.sfg_nm),
            ("signal_nm", self.signal_nm),
            ("idler_nm", self.idler_nm),
            ("pump_nm", self.pump_nm),
            ("fsr_ring_nm", self.fsr_ring_nm),
            ("fsr_ffp_nm", self.fsr_ffp_nm),
            ("wdm_channel_width_nm", self.wdm_channel_width_nm),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(section_error("wavelength_setup", format!("{name} = {v} must be positive")));
            }
        }
        if !(self.pump_min_nm <= self.pump_max_nm) {
            return Err(section_error("wavelength_setup", "pump_min_nm exceeds pump_max_nm"));
        }
        let setup = WavelengthSetup {
            alice: self.alice_nm * NM,
            sfg: self.sfg_nm * NM,
            signal: self.signal_nm * NM,
            idler: self.idler_nm * NM,
            pump: self.pump_nm * NM,
        };
        let constraints = WavelengthConstraints {
            fsr_ring: self.fsr_ring_nm * NM,
            fsr_ffp: self.fsr_ffp_nm * NM,
            pump_range: (self.pump_min_nm * NM, self.pump_max_nm * NM),
            wdm_channel_width: self.wdm_channel_width_nm * NM,
            wdm_grid_origin: self.wdm_grid_origin_nm * NM,
            signal_tolerance: self.signal_tolerance_nm * NM,
            ring_fsr_fraction: self.ring_fsr_fraction,
            ffp_tolerance: self.ffp_tolerance_nm * NM,
            energy_tolerance: self.energy_tolerance_nm * NM,
        };
        Ok((setup, constraints))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolChoice {
    #[default]
    Teleport,
    Swap,
    /// Full tomography experiment: heralded bin counts for `target`.
    Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DarkCountSection {
    pub idler_hz: f64,
    pub sfg_hz: f64,
    pub bin_width_ps: f64,
}

impl Default for DarkCountSection {
    fn default() -> Self {
        let d = DarkCounts::default();
        Self {
            idler_hz: d.idler_hz,
            sfg_hz: d.sfg_hz,
            bin_width_ps: 350.0,
        }
    }
}

/// Monte Carlo scenario. Transmissions, `p_si` (source B) and `p_sfg` come
/// from `[system_efficiencies]`, visibilities from `[interferometer_bank]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub protocol: ProtocolChoice,
    pub bsm: BsmType,
    pub herald: HeraldMode,
    /// Alice's mean cavity photon number.
    pub mean_photon_number: f64,
    /// Source A of a swapping run.
    pub p_a_si: f64,
    /// Attenuate source A to the fidelity-optimal value (LO, unbalanced loss).
    pub lo_optimal_source_a: bool,
    pub eta: Transmission,
    pub loss_mode: LossMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_pairs: Option<u32>,
    pub two_photon_only: bool,
    pub clock_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dark_counts: Option<DarkCountSection>,
    /// Input state of the `experiment` protocol.
    pub target: TargetState,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            protocol: ProtocolChoice::Teleport,
            bsm: BsmType::Nlo,
            herald: HeraldMode::Coincidence,
            mean_photon_number: 0.8,
            p_a_si: 0.003,
            lo_optimal_source_a: false,
            eta: Transmission(1e-2),
            loss_mode: LossMode::Balanced,
            max_pairs: None,
            two_photon_only: false,
            clock_hz: 250e6,
            dark_counts: None,
            target: TargetState::Named("+".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

/// Points from `lo` to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, points: usize, spacing: Spacing) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points)
        .map(|k| {
            if k == points - 1 {
                return hi;
            }
            let t = k as f64 / (points - 1) as f64;
            match spacing {
                Spacing::Log => lo * (hi / lo).powf(t),
                Spacing::Linear => lo + (hi - lo) * t,
            }
        })
        .collect()
}

fn check_grid(section: &str, lo: f64, hi: f64, max: f64, points: usize) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi && hi <= max) {
        return Err(section_error(section, format!("need 0 < min <= max <= {max}, got [{lo}, {hi}]")));
    }
    if points == 0 {
        return Err(section_error(section, "points must be at least 1"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TeleportCurveSection {
    pub p_min: f64,
    pub p_max: f64,
    pub points: usize,
    pub spacing: Spacing,
    pub mean_photon_numbers: Vec<f64>,
}

impl Default for TeleportCurveSection {
    fn default() -> Self {
        Self {
            p_min: 1e-4,
            p_max: 0.25,
            points: 60,
            spacing: Spacing::Log,
            mean_photon_numbers: vec![0.8, 8.0, 80.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwapCurvesSection {
    pub p_min: f64,
    pub p_max: f64,
    pub points: usize,
    pub spacing: Spacing,
    pub eta: Transmission,
    /// Loss placement for the NLO columns.
    pub loss_mode: LossMode,
}

impl Default for SwapCurvesSection {
    fn default() -> Self {
        Self {
            p_min: 1e-4,
            p_max: 0.2,
            points: 50,
            spacing: Spacing::Log,
            eta: Transmission(1e-2),
            loss_mode: LossMode::Balanced,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesSection {
    pub p_b: f64,
    pub clock_hz: f64,
    pub eta_min: Transmission,
    pub eta_max: Transmission,
    pub points: usize,
    pub p_sfg: Vec<f64>,
}

impl Default for RatesSection {
    fn default() -> Self {
        Self {
            p_b: 0.01,
            clock_hz: 1e9,
            eta_min: Transmission(1e-6),
            eta_max: Transmission(1.0),
            points: 25,
            p_sfg: vec![4e-5, 1e-3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographySection {
    /// Bin-count CSV, relative to the config file.
    pub counts: String,
    pub target: TargetState,
    /// Independent interferometer phase errors, combined in quadrature.
    pub phase_errors: Vec<Angle>,
    pub trials: usize,
    pub noise: NoiseSources,
    /// Relative efficiencies of the projections `[e, l, +, -, L, R]`.
    pub weights: [f64; 6],
}

impl Default for TomographySection {
    fn default() -> Self {
        Self {
            counts: String::new(),
            target: TargetState::Named("e".into()),
            phase_errors: vec![Angle(1.1e-3 * PI), Angle(1.1e-3 * PI), Angle(2.4e-3 * PI)],
            trials: 10_000,
            noise: NoiseSources::ShotAndPhase,
            weights: [1.0; 6],
        }
    }
}

impl TomographySection {
    pub fn mle_options(&self) -> MleOptions {
        MleOptions {
            weights: self.weights,
            ..MleOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub run: RunSection,
    pub system_efficiencies: SystemSection,
    pub interferometer_bank: InterferometerSection,
    pub cavity_params: CavitySection,
    pub wavelength_setup: WavelengthSection,
    pub scenario_config: ScenarioSection,
    pub teleport_curve: TeleportCurveSection,
    pub swap_scenario: SwapCurvesSection,
    pub entanglement_rates: RatesSection,
    pub tomography: TomographySection,
}

fn section_error(section: &str, msg: impl fmt::Display) -> CliError {
    CliError::Config(format!("[{section}] {msg}"))
}

impl Config {
    /// Parses TOML; errors carry the line, column and offending key.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg = Self::from_toml(&text, &path.display().to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fills in every choice that has a default depending on other keys.
    pub fn canonical(&self) -> Self {
        let mut c = self.clone();
        c.interferometer_bank.composition = Some(c.interferometer_bank.law());
        c
    }

    pub fn to_canonical_toml(&self) -> String {
        toml::to_string(&self.canonical()).expect("config serializes")
    }

    /// `sha256:<hex>` of the canonical TOML.
    pub fn digest(&self) -> String {
        let h = Sha256::digest(self.to_canonical_toml().as_bytes());
        format!("sha256:{}", hex::encode(h))
    }

    /// Builds every library object once so that bad values surface before
    /// any command runs.
    pub fn validate(&self) -> Result<()> {
        if self.run.shots == 0 {
            return Err(section_error("run", "shots must be at least 1"));
        }
        self.system_efficiencies
            .build()
            .validate()
            .map_err(core_error("[system_efficiencies]"))?;
        self.interferometer_bank.build()?;
        self.cavity_params.build()?;
        self.wavelength_setup.build()?;
        self.scenario()?;

        let t = &self.teleport_curve;
        check_grid("teleport_curve", t.p_min, t.p_max, 0.25, t.points)?;
        for &n in &t.mean_photon_numbers {
            if !(n.is_finite() && n >= 0.0) {
                return Err(section_error("teleport_curve", format!("mean photon number {n} must be >= 0")));
            }
        }
        let s = &self.swap_scenario;
        check_grid("swap_scenario", s.p_min, s.p_max, 0.25, s.points)?;
        if s.eta.0 <= 0.0 {
            return Err(section_error("swap_scenario", "eta must be positive"));
        }
        let r = &self.entanglement_rates;
        check_grid("entanglement_rates", r.eta_min.0, r.eta_max.0, 1.0, r.points)?;
        sfg_bsm::protocols::entanglement_rates(r.p_b, r.eta_max.0, 0.0, r.clock_hz)
            .map_err(core_error("[entanglement_rates]"))?;
        for &p in &r.p_sfg {
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                return Err(section_error("entanglement_rates", format!("p_sfg {p} is outside [0, 1]")));
            }
        }
        let m = &self.tomography;
        if m.trials < sfg_bsm::tomography::MIN_TRIALS {
            return Err(section_error(
                "tomography",
                format!("trials = {} is below {}", m.trials, sfg_bsm::tomography::MIN_TRIALS),
            ));
        }
        if m.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(section_error("tomography", "weights must be positive"));
        }
        Ok(())
    }

    /// Monte Carlo configuration for `[scenario_config]`.
    pub fn scenario(&self) -> Result<ScenarioConfig> {
        let ctx = "[scenario_config]";
        let s = &self.scenario_config;
        let sys = self.system_efficiencies.build();
        let mut c = match s.protocol {
            ProtocolChoice::Teleport | ProtocolChoice::Experiment => {
                let mut c = ScenarioConfig::measured();
                c.source_a = SourceA::Alice(AliceSource::coherent(s.mean_photon_number).map_err(core_error(ctx))?);
                c.source_b = PairSource::from_p_si(sys.p_si).map_err(core_error("[system_efficiencies]"))?;
                c.t_a = sys.t_a;
                c.t_s = sys.t_s;
                c.t_i = sys.t_i;
                c.t_sigma = sys.t_sigma;
                c.eta_i = sys.eta_i;
                c.eta_sigma = sys.eta_sigma;
                c.herald = s.herald;
                c
            }
            ProtocolChoice::Swap => {
                if s.lo_optimal_source_a {
                    if s.bsm != BsmType::Lo || s.loss_mode != LossMode::Unbalanced {
                        return Err(section_error(
                            "scenario_config",
                            "lo_optimal_source_a needs bsm = \"lo\" and loss_mode = \"unbalanced\"",
                        ));
                    }
                    ScenarioConfig::swap_lo_unbalanced_optimal(sys.p_si, s.eta.0).map_err(core_error(ctx))?
                } else {
                    ScenarioConfig::swap(s.bsm, s.p_a_si, sys.p_si, s.eta.0, s.loss_mode).map_err(core_error(ctx))?
                }
            }
        };
        c.p_sfg = sys.p_sfg;
        c.max_pairs = s.max_pairs;
        c.two_photon_only = s.two_photon_only;
        c.clock_hz = s.clock_hz;
        c.dark_counts = s.dark_counts.as_ref().map(|d| DarkCounts {
            idler_hz: d.idler_hz,
            sfg_hz: d.sfg_hz,
            bin_width_s: d.bin_width_ps * 1e-12,
        });
        c.interferometers = self.interferometer_bank.build()?;
        c.validate().map_err(core_error(ctx))?;
        Ok(c)
    }

    /// Joint phase error of `[tomography]`, rad.
    pub fn delta_theta(&self) -> f64 {
        let parts: Vec<f64> = self.tomography.phase_errors.iter().map(|a| a.0).collect();
        sfg_bsm::tomography::joint_phase_error(&parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transmission_units() {
        let t: Transmission = Transmission::parse("20 dB").unwrap();
        assert!((t.0 - 0.01).abs() < 1e-15);
        assert!((Transmission::parse("19 %").unwrap().0 - 0.19).abs() < 1e-15);
        assert_eq!(Transmission::parse("0.5 lin").unwrap().0, 0.5);
        assert_eq!(Transmission::parse("0.5").unwrap().0, 0.5);
        assert!(Transmission::parse("-3 dB").is_err());
        assert!(Transmission::parse("3 dBm").is_err());
        assert!((Transmission::parse("1e-3 lin").unwrap().0 - 1e-3).abs() < 1e-18);
        assert!((Transmission::parse("50dB").unwrap().0 - 1e-5).abs() < 1e-18);
        assert!(Transmission::parse("1.5").is_err());
        assert!((Transmission(1e-5).db_loss() - 50.0).abs() < 1e-9);
    }

    #[test]
    fn angle_units() {
        assert!((Angle::parse("0.5 pi").unwrap().0 - PI / 2.0).abs() < 1e-15);
        assert_eq!(Angle::parse("pi").unwrap().0, PI);
        assert_eq!(Angle::parse("0.25 rad").unwrap().0, 0.25);
        assert!(Angle::parse("3 deg").is_err());
        assert!((Angle::parse("1.1e-3 pi").unwrap().0 - 1.1e-3 * PI).abs() < 1e-18);
    }

    #[test]
    fn defaults_reproduce_library_constants() {
        let c = Config::default();
        c.validate().unwrap();
        assert_eq!(c.cavity_params.build().unwrap(), CavityParams::experiment_device());
        let (setup, k) = c.wavelength_setup.build().unwrap();
        assert_eq!(setup, WavelengthSetup::experiment());
        assert_eq!(k, WavelengthConstraints::default());
        assert_eq!(c.system_efficiencies.build(), SystemEfficiencies::measured());
        let mut expect = ScenarioConfig::measured();
        expect.clock_hz = 250e6;
        expect.interferometers = InterferometerBank::measured();
        assert_eq!(c.scenario().unwrap(), expect);
    }

    #[test]
    fn composition_rules() {
        let mut s = InterferometerSection::default();
        assert_eq!(s.build().unwrap().composition, VisibilityComposition::Product);
        s.v_eff = Some(0.905);
        assert_eq!(s.build().unwrap().v_eff(), 0.905);
        s.composition = Some(CompositionLaw::Min);
        assert!(s.build().is_err());
        s.v_eff = None;
        assert_eq!(s.build().unwrap().v_eff(), 0.909);
    }

    #[test]
    fn unknown_keys_rejected_with_location() {
        let err = Config::from_toml("[system_efficiencies]\nt_a = 0.3\nt_x = 1\n", "cfg").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("t_x") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn canonical_round_trip() {
        let text = "[swap_scenario]\neta = \"20 dB\"\n[interferometer_bank]\nv_eff = 0.905\nphi_a = \"0.5 pi\"\n\
                    [scenario_config]\ntarget = { theta = 1.0, phi = \"0.25 pi\" }\nmax_pairs = 2\n";
        let c = Config::from_toml(text, "cfg").unwrap().canonical();
        let again = Config::from_toml(&c.to_canonical_toml(), "canonical").unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_canonical_toml(), c.to_canonical_toml());
        assert_eq!(again.digest(), c.digest());
    }

    #[test]
    fn grid_endpoints() {
        let g = grid(1e-4, 0.2, 5, Spacing::Log);
        assert_eq!(g[0], 1e-4);
        assert_eq!(g[4], 0.2);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!((grid(0.1, 0.3, 3, Spacing::Linear)[1] - 0.2).abs() < 1e-15);
    }
}

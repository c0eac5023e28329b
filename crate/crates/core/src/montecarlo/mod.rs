//! Event-level Monte Carlo and exact enumeration of the teleportation and
//! swapping experiments.
//!
//! Rare heralds are reached by importance sampling: pair numbers, photon
//! survival and idler detection are drawn from biased proposals and every
//! shot carries its likelihood ratio. Fidelities are ratio estimates
//! `sum(w desired) / sum(w heralded)` with delta-method standard errors.
//!
//! Shot `k` uses a ChaCha8 stream keyed by `(seed, k)`, and shots are reduced
//! in fixed-size blocks in index order, so outputs are bit-identical for any
//! rayon thread count.

mod brute;
mod engine;
mod experiment;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bsm::InterferometerBank;
use crate::error::{check_range, invalid, Error, Result};
use crate::protocols::LossMode;
use crate::sources::{AliceSource, PairSource};

pub use brute::{brute_force_converged, brute_force_fidelity, BruteForce};
pub use experiment::{simulate_full_experiment, simulate_full_experiment_detailed, FullExperiment};

use engine::{run_blocks, tilted_bernoulli, tilted_binomial, PairSampler, RatioAcc};

/// Smallest geometric ratio used for pair-number proposals.
const Q_FLOOR: f64 = 0.25;
/// LO heralds need two photons in total, so its proposal is flatter.
const Q_FLOOR_LO: f64 = 0.5;
/// Photon survival and idler detection are proposed with at least this probability.
const P_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceA {
    /// Teleportation input.
    Alice(AliceSource),
    /// Second SPDC pair (swapping).
    Pairs(PairSource),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BsmType {
    #[default]
    Nlo,
    Lo,
}

/// What counts as a heralded teleportation event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeraldMode {
    /// Any SFG click; the event is desired when the source emitted one pair.
    /// Idler loss plays no role (non-postselected fidelity).
    #[default]
    State,
    /// SFG click in coincidence with at least one idler click. Superposition
    /// states are desired when the detected idler includes the partner of the
    /// converted signal; for e/l states an unrelated idler also lands in the
    /// correct bin half of the time.
    Coincidence,
}

/// Detector dark-count rates for [`simulate_full_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DarkCounts {
    /// Idler SNSPD dark-count rate, Hz.
    pub idler_hz: f64,
    /// SFG SPAD dark-count rate, Hz.
    pub sfg_hz: f64,
    /// Coincidence bin width, s.
    pub bin_width_s: f64,
}

impl Default for DarkCounts {
    fn default() -> Self {
        Self {
            idler_hz: 100.0,
            sfg_hz: 60.0,
            bin_width_s: 350e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub source_a: SourceA,
    pub source_b: PairSource,
    pub p_sfg: f64,
    /// Alice to cavity.
    pub t_a: f64,
    /// Signal to cavity.
    pub t_s: f64,
    /// Idler to detector.
    pub t_i: f64,
    /// Cavity to SFG detector.
    pub t_sigma: f64,
    pub eta_i: f64,
    pub eta_sigma: f64,
    pub bsm: BsmType,
    /// Transmission of the lossy BSM input channel(s) when swapping.
    pub eta: f64,
    pub loss_mode: LossMode,
    pub herald: HeraldMode,
    /// Ignore emissions with more than this many pairs per source.
    pub max_pairs: Option<u32>,
    /// NLO swapping: keep only events with exactly one photon surviving each
    /// lossy arm.
    pub two_photon_only: bool,
    pub clock_hz: f64,
    pub dark_counts: Option<DarkCounts>,
    pub interferometers: InterferometerBank,
}

impl ScenarioConfig {
    /// Ideal teleportation: unit transmissions, any SFG click heralds.
    pub fn teleport(p_si: f64) -> Result<Self> {
        Ok(Self {
            source_a: SourceA::Alice(AliceSource::coherent(1.0)?),
            source_b: PairSource::from_p_si(p_si)?,
            p_sfg: 4e-5,
            t_a: 1.0,
            t_s: 1.0,
            t_i: 1.0,
            t_sigma: 1.0,
            eta_i: 1.0,
            eta_sigma: 1.0,
            bsm: BsmType::Nlo,
            eta: 1.0,
            loss_mode: LossMode::Lossless,
            herald: HeraldMode::State,
            max_pairs: None,
            two_photon_only: false,
            clock_hz: 1e9,
            dark_counts: None,
            interferometers: InterferometerBank::ideal(),
        })
    }

    /// Measured system efficiencies, `p_si = 0.003`, coincidence heralding.
    pub fn measured() -> Self {
        let mut c = Self::teleport(0.003).expect("valid constants");
        c.source_a = SourceA::Alice(AliceSource::coherent(0.8).expect("valid constant"));
        c.t_a = 0.28;
        c.t_s = 0.19;
        c.t_i = 0.02;
        c.t_sigma = 0.08;
        c.eta_i = 0.90;
        c.eta_sigma = 0.65;
        c.herald = HeraldMode::Coincidence;
        c
    }

    /// Entanglement swapping between two SPDC sources.
    pub fn swap(bsm: BsmType, p_a: f64, p_b: f64, eta: f64, loss_mode: LossMode) -> Result<Self> {
        let mut c = Self::teleport(p_b)?;
        c.source_a = SourceA::Pairs(PairSource::from_p_si(p_a)?);
        c.p_sfg = 1e-3;
        c.bsm = bsm;
        c.eta = eta;
        c.loss_mode = loss_mode;
        c.validate()?;
        Ok(c)
    }

    /// LO swapping with unbalanced loss, source A attenuated to the
    /// fidelity-optimal `eps_A = eta eps_B / (1 - eps_B (1 - eta))`.
    pub fn swap_lo_unbalanced_optimal(p_b: f64, eta: f64) -> Result<Self> {
        let (_, eps_a) = crate::protocols::swap_fidelity_lo_unbalanced(p_b, eta)?;
        let mut c = Self::swap(BsmType::Lo, p_b, p_b, eta, LossMode::Unbalanced)?;
        c.source_a = SourceA::Pairs(PairSource::new(eps_a)?);
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("p_sfg", self.p_sfg, 0.0, 1.0)?;
        check_range("t_a", self.t_a, 0.0, 1.0)?;
        check_range("t_s", self.t_s, 0.0, 1.0)?;
        check_range("t_i", self.t_i, 0.0, 1.0)?;
        check_range("t_sigma", self.t_sigma, 0.0, 1.0)?;
        check_range("eta_i", self.eta_i, 0.0, 1.0)?;
        check_range("eta_sigma", self.eta_sigma, 0.0, 1.0)?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid("eta", format!("{} is outside (0, 1]", self.eta)));
        }
        if self.max_pairs == Some(0) {
            return Err(invalid("max_pairs", "must be at least 1"));
        }
        check_range("clock_hz", self.clock_hz, 0.0, f64::MAX)?;
        if let Some(d) = self.dark_counts {
            check_range("idler_hz", d.idler_hz, 0.0, f64::MAX)?;
            check_range("sfg_hz", d.sfg_hz, 0.0, f64::MAX)?;
            check_range("bin_width_s", d.bin_width_s, 0.0, f64::MAX)?;
        }
        self.interferometers.validate()
    }

    /// Transmissions of the A and B inputs to the swapping BSM.
    pub fn arm_transmissions(&self) -> (f64, f64) {
        match self.loss_mode {
            LossMode::Lossless => (1.0, 1.0),
            LossMode::Balanced => (self.eta, self.eta),
            LossMode::Unbalanced => (1.0, self.eta),
        }
    }

    pub fn idler_detection(&self) -> f64 {
        self.t_i * self.eta_i
    }

    fn alice(&self) -> Result<&AliceSource> {
        match &self.source_a {
            SourceA::Alice(a) => Ok(a),
            SourceA::Pairs(_) => Err(invalid("source_a", "teleportation needs an Alice input")),
        }
    }

    fn pairs_a(&self) -> Result<&PairSource> {
        match &self.source_a {
            SourceA::Pairs(p) => Ok(p),
            SourceA::Alice(_) => Err(invalid("source_a", "swapping needs a second pair source")),
        }
    }

    /// Per-signal-photon conversion probability for teleportation,
    /// `p_SFG` times Alice's mean cavity photon number.
    fn gamma(&self) -> Result<f64> {
        Ok(self.p_sfg * self.alice()?.mean_photon_number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Desired,
    Undesired,
    NoHerald,
}

/// One sampled shot. Teleportation fills only the B (SPDC) fields; Alice
/// enters through her mean photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub shot: u64,
    pub pairs_a: u32,
    pub pairs_b: u32,
    pub survived_a: u32,
    pub survived_b: u32,
    pub heralded: bool,
    pub classification: Classification,
    /// Importance weight including the conversion probability (0 if not heralded).
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct RunSummary {
    pub shots: u64,
    pub heralded: u64,
    pub desired: u64,
    pub undesired: u64,
    pub no_herald: u64,
    /// Shots whose conversion weight exceeded 1 and was clamped.
    pub clamped: u64,
}

impl RunSummary {
    fn add(&mut self, r: &TrialRecord, clamped: bool) {
        self.shots += 1;
        match r.classification {
            Classification::Desired => self.desired += 1,
            Classification::Undesired => self.undesired += 1,
            Classification::NoHerald => self.no_herald += 1,
        }
        self.heralded += r.heralded as u64;
        self.clamped += clamped as u64;
    }

    fn merge(&mut self, o: &RunSummary) {
        self.shots += o.shots;
        self.heralded += o.heralded;
        self.desired += o.desired;
        self.undesired += o.undesired;
        self.no_herald += o.no_herald;
        self.clamped += o.clamped;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloResult {
    /// Fidelity of superposition inputs (any input in `State` mode).
    pub f_hat: f64,
    pub stderr: f64,
    /// Fidelity of e/l inputs under coincidence heralding.
    pub f_poles: Option<Estimate>,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Teleport,
    Swap,
}

struct Shot {
    record: TrialRecord,
    w_sup: f64,
    w_pole: f64,
    clamped: bool,
}

impl Shot {
    fn none(record: TrialRecord) -> Self {
        Self {
            record,
            w_sup: 0.0,
            w_pole: 0.0,
            clamped: false,
        }
    }
}

fn clamp_conversion(p: f64) -> (f64, bool) {
    if p > 1.0 {
        (1.0, true)
    } else {
        (p, false)
    }
}

/// Pre-validated sampling parameters.
enum Plan {
    Teleport {
        pairs: PairSampler,
        t_s: f64,
        gamma: f64,
        x: f64,
        mode: HeraldMode,
    },
    Nlo {
        a: PairSampler,
        b: PairSampler,
        eta: (f64, f64),
        p_sfg: f64,
        two_photon_only: bool,
    },
    Lo {
        a: PairSampler,
        b: PairSampler,
        eta: (f64, f64),
    },
}

impl Plan {
    fn new(cfg: &ScenarioConfig, protocol: Protocol) -> Result<Self> {
        cfg.validate()?;
        let eps_b = cfg.source_b.epsilon();
        Ok(match protocol {
            Protocol::Teleport => Plan::Teleport {
                pairs: PairSampler::new(eps_b, Q_FLOOR, 1, cfg.max_pairs),
                t_s: cfg.t_s,
                gamma: cfg.gamma()?,
                x: cfg.idler_detection(),
                mode: cfg.herald,
            },
            Protocol::Swap => {
                let eps_a = cfg.pairs_a()?.epsilon();
                match cfg.bsm {
                    BsmType::Nlo => Plan::Nlo {
                        a: PairSampler::new(eps_a, Q_FLOOR, 1, cfg.max_pairs),
                        b: PairSampler::new(eps_b, Q_FLOOR, 1, cfg.max_pairs),
                        eta: cfg.arm_transmissions(),
                        p_sfg: cfg.p_sfg,
                        two_photon_only: cfg.two_photon_only,
                    },
                    BsmType::Lo => Plan::Lo {
                        a: PairSampler::new(eps_a, Q_FLOOR_LO, 0, cfg.max_pairs),
                        b: PairSampler::new(eps_b, Q_FLOOR_LO, 0, cfg.max_pairs),
                        eta: cfg.arm_transmissions(),
                    },
                }
            }
        })
    }

    fn shot(&self, shot: u64, rng: &mut ChaCha8Rng) -> Shot {
        let mut rec = TrialRecord {
            shot,
            pairs_a: 0,
            pairs_b: 0,
            survived_a: 0,
            survived_b: 0,
            heralded: false,
            classification: Classification::NoHerald,
            weight: 0.0,
        };
        match *self {
            Plan::Teleport {
                pairs,
                t_s,
                gamma,
                x,
                mode,
            } => {
                let (n, mut w) = pairs.sample(rng);
                let (k, lr) = tilted_binomial(n, t_s, P_FLOOR, rng);
                w *= lr;
                rec.pairs_b = n;
                rec.survived_b = k;
                if k == 0 {
                    return Shot::none(rec);
                }
                let (c, clamped) = clamp_conversion(gamma * k as f64);
                w *= c;
                let (sup, pole) = match mode {
                    HeraldMode::State => (n == 1, n == 1),
                    HeraldMode::Coincidence => {
                        let (partner, lr) = tilted_bernoulli(x, P_FLOOR, rng);
                        w *= lr;
                        let (others, lr) = tilted_binomial(n - 1, x, P_FLOOR, rng);
                        w *= lr;
                        if !partner && others == 0 {
                            return Shot::none(rec);
                        }
                        (partner, partner || rng.random::<bool>())
                    }
                };
                finish(rec, w, sup, pole, clamped)
            }
            Plan::Nlo {
                a,
                b,
                eta,
                p_sfg,
                two_photon_only,
            } => {
                let (n, wa) = a.sample(rng);
                let (m, wb) = b.sample(rng);
                let (ka, la) = tilted_binomial(n, eta.0, P_FLOOR, rng);
                let (kb, lb) = tilted_binomial(m, eta.1, P_FLOOR, rng);
                rec.pairs_a = n;
                rec.pairs_b = m;
                rec.survived_a = ka;
                rec.survived_b = kb;
                if ka == 0 || kb == 0 {
                    return Shot::none(rec);
                }
                if two_photon_only && ((eta.0 < 1.0 && ka != 1) || (eta.1 < 1.0 && kb != 1)) {
                    return Shot::none(rec);
                }
                let (c, clamped) = clamp_conversion(p_sfg * ka as f64 * kb as f64);
                let desired = n == 1 && m == 1;
                finish(rec, wa * wb * la * lb * c, desired, desired, clamped)
            }
            Plan::Lo { a, b, eta } => {
                let (n, wa) = a.sample(rng);
                let (m, wb) = b.sample(rng);
                let (ka, la) = tilted_binomial(n, eta.0, P_FLOOR, rng);
                let (kb, lb) = tilted_binomial(m, eta.1, P_FLOOR, rng);
                rec.pairs_a = n;
                rec.pairs_b = m;
                rec.survived_a = ka;
                rec.survived_b = kb;
                if ka + kb != 2 {
                    return Shot::none(rec);
                }
                let desired = n == 1 && m == 1;
                finish(rec, wa * wb * la * lb, desired, desired, false)
            }
        }
    }
}

fn finish(mut rec: TrialRecord, w: f64, sup: bool, pole: bool, clamped: bool) -> Shot {
    rec.heralded = w > 0.0;
    rec.weight = w;
    rec.classification = match (rec.heralded, sup) {
        (false, _) => Classification::NoHerald,
        (true, true) => Classification::Desired,
        (true, false) => Classification::Undesired,
    };
    Shot {
        record: rec,
        w_sup: if sup { w } else { 0.0 },
        w_pole: if pole { w } else { 0.0 },
        clamped,
    }
}

#[derive(Default)]
struct Acc {
    sup: RatioAcc,
    pole: RatioAcc,
    summary: RunSummary,
}

fn run(cfg: &ScenarioConfig, protocol: Protocol, shots: u64, seed: u64) -> Result<MonteCarloResult> {
    if shots == 0 {
        return Err(invalid("shots", "must be at least 1"));
    }
    let plan = Plan::new(cfg, protocol)?;
    let acc = run_blocks(
        shots,
        seed,
        Acc::default,
        |acc: &mut Acc, shot, rng| {
            let s = plan.shot(shot, rng);
            acc.sup.push(s.record.weight, s.w_sup);
            acc.pole.push(s.record.weight, s.w_pole);
            acc.summary.add(&s.record, s.clamped);
        },
        |a, b| {
            a.sup.merge(&b.sup);
            a.pole.merge(&b.pole);
            a.summary.merge(&b.summary);
        },
    );
    if acc.summary.clamped > 0 {
        log::warn!(
            "{} of {} shots had a conversion probability above 1 (clamped); the weak-conversion model does not apply",
            acc.summary.clamped,
            shots
        );
    }
    let (f_hat, stderr) = acc
        .sup
        .estimate()
        .ok_or_else(|| Error::DegenerateData(format!("no heralded events in {shots} shots")))?;
    let f_poles = match (protocol, cfg.herald) {
        (Protocol::Teleport, HeraldMode::Coincidence) => acc
            .pole
            .estimate()
            .map(|(value, stderr)| Estimate { value, stderr }),
        _ => None,
    };
    Ok(MonteCarloResult {
        f_hat,
        stderr,
        f_poles,
        summary: acc.summary,
    })
}

/// Heralded teleportation fidelity. SFG conversion is weighted by the number
/// of signal photons reaching the cavity; see [`HeraldMode`] for the event
/// classification.
pub fn simulate_teleport(cfg: &ScenarioConfig, shots: u64, seed: u64) -> Result<MonteCarloResult> {
    run(cfg, Protocol::Teleport, shots, seed)
}

/// Entanglement-swapping fidelity for the configured BSM.
///
/// NLO: conversion weight `p_SFG k_a k_b` over the surviving photons of each
/// source. LO: heralded when exactly two photons reach the BSM. Desired when
/// each source emitted exactly one pair.
pub fn simulate_swap(cfg: &ScenarioConfig, shots: u64, seed: u64) -> Result<MonteCarloResult> {
    run(cfg, Protocol::Swap, shots, seed)
}

/// The record of a single shot, reproducing what the simulators sample.
pub fn sample_trial(cfg: &ScenarioConfig, protocol: Protocol, seed: u64, shot: u64) -> Result<TrialRecord> {
    use rand::SeedableRng;
    let plan = Plan::new(cfg, protocol)?;
    let base = ChaCha8Rng::seed_from_u64(seed);
    let mut rng = engine::shot_rng(&base, shot);
    Ok(plan.shot(shot, &mut rng).record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{estimated_teleport_fidelity, swap_fidelity_lo_exact, SystemEfficiencies};
    use crate::sources::epsilon_from_p_si as epsilon;

    fn within(r: &MonteCarloResult, expect: f64, k: f64) -> bool {
        (r.f_hat - expect).abs() <= k * r.stderr
    }

    #[test]
    fn teleport_zero_p() {
        let r = simulate_teleport(&ScenarioConfig::teleport(0.0).unwrap(), 1000, 1).unwrap();
        assert_eq!(r.f_hat, 1.0);
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn teleport_matches_formula() {
        for (p, f) in [(0.1, 0.787_298_334_620_741_7), (0.25, 0.25)] {
            let r = simulate_teleport(&ScenarioConfig::teleport(p).unwrap(), 200_000, 7).unwrap();
            assert!(within(&r, f, 4.0), "p={p}: {r:?}");
        }
    }

    #[test]
    fn teleport_loss_does_not_change_state_fidelity() {
        let mut c = ScenarioConfig::teleport(0.1).unwrap();
        c.t_s = 0.05;
        c.t_i = 0.01;
        let r = simulate_teleport(&c, 200_000, 3).unwrap();
        assert!(within(&r, 0.787_298_334_620_741_7, 4.0), "{r:?}");
    }

    #[test]
    fn coincidence_two_pair_model() {
        let mut c = ScenarioConfig::measured();
        c.max_pairs = Some(2);
        // stronger source to make the multi-pair term visible
        c.source_b = PairSource::from_p_si(0.05).unwrap();
        let r = simulate_teleport(&c, 200_000, 11).unwrap();
        // geometric ratio eps instead of p_si between the two- and one-pair terms
        let eps = c.source_b.epsilon();
        let x = c.idler_detection();
        let sup = (1.0 + 2.0 * eps) / (1.0 + 2.0 * eps * (2.0 - x));
        let pole = (1.0 + eps * (3.0 - x)) / (1.0 + 2.0 * eps * (2.0 - x));
        assert!(within(&r, sup, 4.0), "{r:?} vs {sup}");
        let fp = r.f_poles.unwrap();
        assert!((fp.value - pole).abs() <= 4.0 * fp.stderr, "{fp:?} vs {pole}");
        let closed = estimated_teleport_fidelity(&SystemEfficiencies {
            p_si: 0.05,
            ..SystemEfficiencies::measured()
        })
        .unwrap();
        assert!((closed.f_superposition - sup).abs() < 1e-2);
    }

    #[test]
    fn swap_lo_lossless_one_third() {
        let c = ScenarioConfig::swap(BsmType::Lo, 0.05, 0.05, 1.0, LossMode::Lossless).unwrap();
        let r = simulate_swap(&c, 200_000, 5).unwrap();
        assert!(within(&r, 1.0 / 3.0, 4.0), "{r:?}");
    }

    #[test]
    fn swap_lo_balanced_exact() {
        let c = ScenarioConfig::swap(BsmType::Lo, 0.05, 0.05, 0.2, LossMode::Balanced).unwrap();
        let e = c.source_b.epsilon();
        let f = swap_fidelity_lo_exact(e, 0.2, e, 0.2).unwrap();
        let r = simulate_swap(&c, 300_000, 8).unwrap();
        assert!(within(&r, f, 4.0), "{r:?} vs {f}");
    }

    #[test]
    fn swap_nlo_product() {
        let c = ScenarioConfig::swap(BsmType::Nlo, 0.1, 0.05, 0.1, LossMode::Balanced).unwrap();
        let ea = 1.0 - epsilon(0.1).unwrap();
        let eb = 1.0 - epsilon(0.05).unwrap();
        let f = ea * ea * eb * eb;
        let r = simulate_swap(&c, 300_000, 9).unwrap();
        assert!(within(&r, f, 4.0), "{r:?} vs {f}");
    }

    #[test]
    fn swap_needs_pair_source() {
        let c = ScenarioConfig::teleport(0.1).unwrap();
        assert!(simulate_swap(&c, 10, 1).is_err());
        let s = ScenarioConfig::swap(BsmType::Nlo, 0.1, 0.1, 0.1, LossMode::Balanced).unwrap();
        assert!(simulate_teleport(&s, 10, 1).is_err());
        assert!(simulate_teleport(&ScenarioConfig::teleport(0.1).unwrap(), 0, 1).is_err());
    }

    #[test]
    fn clamping_is_counted() {
        let mut c = ScenarioConfig::swap(BsmType::Nlo, 0.2, 0.2, 1.0, LossMode::Lossless).unwrap();
        c.p_sfg = 0.5;
        let r = simulate_swap(&c, 50_000, 2).unwrap();
        assert!(r.summary.clamped > 0);
    }

    #[test]
    fn records_are_consistent() {
        let c = ScenarioConfig::swap(BsmType::Lo, 0.1, 0.1, 0.3, LossMode::Balanced).unwrap();
        for shot in 0..500 {
            let r = sample_trial(&c, Protocol::Swap, 4, shot).unwrap();
            assert!(r.survived_a <= r.pairs_a && r.survived_b <= r.pairs_b);
            assert_eq!(r.heralded, r.classification != Classification::NoHerald);
            assert_eq!(r.heralded, r.survived_a + r.survived_b == 2);
        }
    }
}

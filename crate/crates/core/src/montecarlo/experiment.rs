//! End-to-end detector counts for state tomography of the teleported qubit.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use super::engine::{run_blocks, shot_rng};
use super::ScenarioConfig;
use crate::bsm::nlo_herald;
use crate::error::{invalid, Error, Result};
use crate::qubits::{DensityMatrix2, TimeBinQubit};
use crate::tomography::{Detector, PhaseSetting, RawBinCounts, TimeBin};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FullExperiment {
    pub counts: RawBinCounts,
    /// Exact probability that a heralded coincidence involves the partner
    /// idler of the converted signal.
    pub desired_fraction: f64,
    /// Mean accidental coincidences per detector bin and phase setting.
    pub accidentals_per_bin: f64,
}

/// Cells in the order they are sampled: detector-major, then bin.
const CELLS: [(Detector, TimeBin); 6] = [
    (Detector::One, TimeBin::E),
    (Detector::One, TimeBin::L),
    (Detector::One, TimeBin::LL),
    (Detector::Two, TimeBin::E),
    (Detector::Two, TimeBin::L),
    (Detector::Two, TimeBin::LL),
];

/// Largest pair number kept when `max_pairs` is unset.
const N_LIMIT: u32 = 256;

/// Arrival probabilities of `rho` behind the analyzer at phase `phi`.
/// Side bins carry a quarter of each population; the middle bin of detector
/// `d` projects onto `(|e> + s_d e^{-i phi}|l>)/sqrt(2)` (`s_1 = -1`,
/// `s_2 = +1`) with the coherence scaled by `v`.
fn cell_probabilities(rho: &DensityMatrix2, phi: f64, v: f64) -> [f64; 6] {
    let r00 = rho.get(0, 0).re;
    let r11 = rho.get(1, 1).re;
    let c = rho.get(1, 0) * Complex64::from_polar(1.0, phi);
    let mid = |s: f64| 0.25 * (1.0 + 2.0 * v * s * c.re);
    [
        r00 / 4.0,
        mid(-1.0),
        r11 / 4.0,
        r00 / 4.0,
        mid(1.0),
        r11 / 4.0,
    ]
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = p
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = f64::INFINITY;
    }
    out
}

fn pick(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

/// Bin counts for `shots` heralded Sigma+ coincidences at each of the two
/// analyzer settings.
pub fn simulate_full_experiment(
    cfg: &ScenarioConfig,
    alice: &TimeBinQubit,
    shots: u64,
    seed: u64,
) -> Result<RawBinCounts> {
    Ok(simulate_full_experiment_detailed(cfg, alice, shots, seed)?.counts)
}

/// As [`simulate_full_experiment`], also reporting the model quantities.
///
/// Each event draws the pair number from `P(n | herald)`, proportional to
/// `P(n) n (1 - (1 - x)^n)` with `x = t_i eta_i`, and then whether the
/// detected idler is the partner, with probability `x / (1 - (1 - x)^n)`.
/// Partner events carry the heralded idler state; otherwise the idler is
/// unrelated to Alice and maximally mixed. Dark counts, when configured, add
/// Poisson background to every bin.
pub fn simulate_full_experiment_detailed(
    cfg: &ScenarioConfig,
    alice: &TimeBinQubit,
    shots: u64,
    seed: u64,
) -> Result<FullExperiment> {
    cfg.validate()?;
    if shots == 0 {
        return Err(invalid("shots", "must be at least 1"));
    }
    let gamma = cfg.gamma()?;
    let x = cfg.idler_detection();
    if x <= 0.0 {
        return Err(Error::DegenerateData("idler detection probability is zero".into()));
    }
    let eps = cfg.source_b.epsilon();
    let bank = cfg.interferometers;

    // herald distribution over n, scaled by 1/eps
    let n_top = cfg.max_pairs.unwrap_or(N_LIMIT);
    let mut weights = Vec::new();
    let mut partner = Vec::new();
    let mut p_n = 1.0 - eps;
    for n in 1..=n_top {
        let click = 1.0 - (1.0 - x).powi(n as i32);
        weights.push(p_n * n as f64 * click);
        partner.push(x / click);
        p_n *= eps;
        if p_n < 1e-300 {
            break;
        }
    }
    let w_sum: f64 = weights.iter().sum();
    let desired_fraction = weights.iter().zip(&partner).map(|(w, q)| w * q).sum::<f64>() / w_sum;
    let n_cdf = cumulative(&weights.iter().map(|w| w / w_sum).collect::<Vec<_>>());

    let rotated = TimeBinQubit::new(
        alice.alpha(),
        alice.beta() * Complex64::from_polar(1.0, bank.phi_a),
    )?;
    let idler = nlo_herald(&rotated, bank.phi_sigma)[0]
        .idler
        .expect("Sigma+ branch carries an idler");
    let desired_rho = idler.projector();
    let mixed = DensityMatrix2::maximally_mixed();
    let v = bank.v_eff();
    let tables: Vec<[Vec<f64>; 2]> = PhaseSetting::ALL
        .iter()
        .map(|p| {
            let phi = p.radians() + bank.phi_b;
            [
                cumulative(&cell_probabilities(&desired_rho, phi, v)),
                cumulative(&cell_probabilities(&mixed, phi, v)),
            ]
        })
        .collect();

    let counts = run_blocks(
        2 * shots,
        seed,
        || [[0u64; 6]; 2],
        |acc: &mut [[u64; 6]; 2], shot, rng| {
            let setting = (shot / shots) as usize;
            let n_idx = pick(&n_cdf, rng.random());
            let good = rng.random::<f64>() < partner[n_idx];
            let table = &tables[setting][if good { 0 } else { 1 }];
            acc[setting][pick(table, rng.random())] += 1;
        },
        |a, b| {
            for s in 0..2 {
                for c in 0..6 {
                    a[s][c] += b[s][c];
                }
            }
        },
    );

    let mut raw = RawBinCounts::default();
    for (s, phase) in PhaseSetting::ALL.iter().enumerate() {
        for (c, &(det, bin)) in CELLS.iter().enumerate() {
            raw.set(*phase, det, bin, counts[s][c] as f64);
        }
    }

    let mut accidentals_per_bin = 0.0;
    if let Some(dark) = cfg.dark_counts {
        accidentals_per_bin = accidentals_per_coincidence(cfg, gamma, eps, x, &dark) * shots as f64;
        if accidentals_per_bin > 0.0 {
            let pois = Poisson::new(accidentals_per_bin).map_err(|e| invalid("dark_counts", e.to_string()))?;
            let base = ChaCha8Rng::seed_from_u64(seed);
            for (s, phase) in PhaseSetting::ALL.iter().enumerate() {
                for (c, &(det, bin)) in CELLS.iter().enumerate() {
                    let mut rng = shot_rng(&base, 2 * shots + (6 * s + c) as u64);
                    let extra: f64 = pois.sample(&mut rng);
                    raw.add(*phase, det, bin, extra);
                }
            }
        }
    }

    Ok(FullExperiment {
        counts: raw,
        desired_fraction,
        accidentals_per_bin,
    })
}

/// Accidental coincidences in one detector bin per true Sigma+ coincidence.
///
/// Per clock cycle: an SFG dark count meets an idler click (signal or dark)
/// within the bin, or a true SFG click meets an idler dark count.
fn accidentals_per_coincidence(
    cfg: &ScenarioConfig,
    gamma: f64,
    eps: f64,
    x: f64,
    dark: &super::DarkCounts,
) -> f64 {
    let tau = dark.bin_width_s;
    let mean_pairs = eps / (1.0 - eps);
    let sfg_path = 0.25 * gamma * cfg.t_s * cfg.t_sigma * cfg.eta_sigma;
    // sum_n P(n) n (1 - (1 - x)^n) for the thermal distribution
    let click_weight = mean_pairs - eps * (1.0 - eps) * (1.0 - x) / (1.0 - eps * (1.0 - x)).powi(2);
    let true_coinc = sfg_path * click_weight;
    if true_coinc <= 0.0 {
        return 0.0;
    }
    let idler_click = x * mean_pairs + dark.idler_hz * tau;
    let true_sfg = sfg_path * mean_pairs;
    (dark.sfg_hz * tau * idler_click + true_sfg * dark.idler_hz * tau) / true_coinc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsm::InterferometerBank;
    use crate::montecarlo::{DarkCounts, HeraldMode};
    use crate::qubits::fidelity_pure;
    use crate::tomography::{mle_rho, projections_from_bins};

    fn ideal() -> ScenarioConfig {
        let mut c = ScenarioConfig::teleport(1e-9).unwrap();
        c.herald = HeraldMode::Coincidence;
        c
    }

    fn reconstructed(cfg: &ScenarioConfig, q: &TimeBinQubit, shots: u64, seed: u64) -> f64 {
        let raw = simulate_full_experiment(cfg, q, shots, seed).unwrap();
        let rho = mle_rho(&projections_from_bins(&raw)).unwrap();
        fidelity_pure(&rho, q).unwrap()
    }

    #[test]
    fn cell_probabilities_sum_to_one() {
        for q in TimeBinQubit::cardinal_states() {
            for v in [0.0, 0.7, 1.0] {
                for phi in [0.0, 1.0, 2.5] {
                    let s: f64 = cell_probabilities(&q.1.projector(), phi, v).iter().sum();
                    assert!((s - 1.0).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn plus_lands_on_detector_two() {
        let raw = simulate_full_experiment(&ideal(), &TimeBinQubit::plus(), 20_000, 1).unwrap();
        let c = projections_from_bins(&raw);
        assert!(c.n_plus > 20.0 * (c.n_minus + 1.0), "{c:?}");
        assert_eq!(raw.total(), 40_000.0);
    }

    #[test]
    fn ideal_reconstruction() {
        for (_, q) in TimeBinQubit::cardinal_states() {
            let f = reconstructed(&ideal(), &q, 20_000, 3);
            assert!(f > 0.995, "{q}: {f}");
        }
    }

    #[test]
    fn poles_beat_superpositions() {
        let mut c = ScenarioConfig::measured();
        c.interferometers = InterferometerBank::with_effective_visibility(0.905);
        let fe = reconstructed(&c, &TimeBinQubit::early(), 100_000, 5);
        let fp = reconstructed(&c, &TimeBinQubit::plus(), 100_000, 5);
        assert!(fe > fp, "{fe} vs {fp}");
    }

    #[test]
    fn desired_fraction_matches_closed_form() {
        let mut c = ScenarioConfig::measured();
        c.max_pairs = Some(2);
        let e = simulate_full_experiment_detailed(&c, &TimeBinQubit::plus(), 10, 1).unwrap();
        let eps = c.source_b.epsilon();
        let x = c.idler_detection();
        let expect = (1.0 + 2.0 * eps) / (1.0 + 2.0 * eps * (2.0 - x));
        assert!((e.desired_fraction - expect).abs() < 1e-12);
    }

    #[test]
    fn click_weight_series() {
        let (eps, x) = (0.2f64, 0.3f64);
        let direct: f64 = (1..400)
            .map(|n| (1.0 - eps) * eps.powi(n) * n as f64 * (1.0 - (1.0 - x).powi(n)))
            .sum();
        let mean_pairs = eps / (1.0 - eps);
        let closed = mean_pairs - eps * (1.0 - eps) * (1.0 - x) / (1.0 - eps * (1.0 - x)).powi(2);
        assert!((direct - closed).abs() < 1e-14);
    }

    #[test]
    fn dark_counts_add_background() {
        let mut c = ideal();
        c.source_b = crate::sources::PairSource::from_p_si(0.01).unwrap();
        c.dark_counts = Some(DarkCounts {
            sfg_hz: 1e7,
            ..DarkCounts::default()
        });
        let e = simulate_full_experiment_detailed(&c, &TimeBinQubit::early(), 10_000, 2).unwrap();
        assert!(e.accidentals_per_bin > 0.0);
        assert!(e.counts.total() > 20_000.0);
    }
}

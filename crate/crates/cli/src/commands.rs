use std::f64::consts::PI;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use sfg_bsm::cavity::{
    check_wavelength_conditions, efficiency_probability_relation, sfg_efficiency, sfg_efficiency_resonant,
    sfg_output_power, single_photon_sfg_probability_with, steady_state, CavityMode,
};
use sfg_bsm::montecarlo::{
    brute_force_converged, simulate_full_experiment_detailed, simulate_swap, simulate_teleport, BsmType, HeraldMode,
    ScenarioConfig, SourceA,
};
use sfg_bsm::protocols::*;
use sfg_bsm::qubits::{fidelity_pure, purity, DensityMatrix2, TimeBinQubit};
use sfg_bsm::sources::epsilon_from_p_si;
use sfg_bsm::tomography::{fidelity_error_with, mle_rho_with, projections_from_bins, rho_linear, stokes};

use crate::config::{grid, Config, ProtocolChoice};
use crate::counts::{counts_table, read_counts};
use crate::error::{core_error, CliError, Result};
use crate::output::{col, Artifact, InputEntry, Report, Table};

const TWO_PI: f64 = 2.0 * PI;
/// Enumeration tolerance for the exact model columns of `simulate`.
const MODEL_TOLERANCE: f64 = 1e-12;

pub struct Outputs {
    pub artifacts: Vec<Artifact>,
    pub inputs: Vec<InputEntry>,
}

impl From<Vec<Artifact>> for Outputs {
    fn from(artifacts: Vec<Artifact>) -> Self {
        Self {
            artifacts,
            inputs: Vec::new(),
        }
    }
}

pub fn teleport_curve(cfg: &Config) -> Result<Outputs> {
    let ctx = "teleport-curve";
    let e = core_error(ctx);
    let s = &cfg.teleport_curve;
    let sys = cfg.system_efficiencies.build();

    let mut t = Table::new(
        "teleport_curve_p_si",
        1,
        vec![
            col("p_si", "", "single-pair emission probability of the SPDC source"),
            col("epsilon", "", "thermal ratio of the pair-number distribution"),
            col("fidelity", "", "heralded fidelity with all multi-pair terms, any SFG click heralds"),
            col(
                "f_superposition_coincidence",
                "",
                "coincidence-heralded fidelity of superposition inputs, at most two pairs, system efficiencies",
            ),
            col("f_poles_coincidence", "", "same for the e and l inputs"),
            col("classical_limit", "", "2/3"),
            col("beats_classical", "", "fidelity > 2/3"),
        ],
    );
    for p in grid(s.p_min, s.p_max, s.points, s.spacing) {
        let f = teleport_fidelity_nlo(p).map_err(&e)?;
        let est = estimated_teleport_fidelity(&SystemEfficiencies { p_si: p, ..sys }).map_err(&e)?;
        t.push(vec![
            p.into(),
            epsilon_from_p_si(p).map_err(&e)?.into(),
            f.into(),
            est.f_superposition.into(),
            est.f_poles.into(),
            (2.0 / 3.0).into(),
            (f > 2.0 / 3.0).into(),
        ]);
    }

    let bank = cfg.interferometer_bank.build()?;
    let v = bank.v_eff();
    let fv = fidelity_from_visibility(v).map_err(&e)?;
    let events = coincidence_events(&sys).map_err(&e)?;
    let clock = cfg.scenario_config.clock_hz;
    let mut n = Table::new(
        "teleport_curve_mean_photon_number",
        1,
        vec![
            col("mean_photon_number", "", "Alice's mean cavity photon number"),
            col("v_eff", "", "effective fringe visibility"),
            col("fidelity", "", "(1 + v_eff) / 2"),
            col("coincidence_rate", "Hz", "heralded coincidence rate, at most two pairs"),
        ],
    );
    for &na in &s.mean_photon_numbers {
        n.push(vec![na.into(), v.into(), fv.into(), (events.total() * na * clock).into()]);
    }

    let summary = json!({
        "classical_limit": 2.0 / 3.0,
        "crossover_p_si": teleport_crossover(2.0 / 3.0).map_err(&e)?,
        "v_eff": v,
        "visibility_fidelity": fv,
    });
    Ok(vec![
        Artifact::Table(t),
        Artifact::Table(n),
        Artifact::Report(Report {
            name: "teleport_curve_summary".into(),
            schema_version: 1,
            body: summary,
        }),
    ]
    .into())
}

pub fn swap_curves(cfg: &Config) -> Result<Outputs> {
    let e = core_error("swap-curves");
    let s = &cfg.swap_scenario;
    let eta = s.eta.0;
    let mut t = Table::new(
        "swap_curves",
        1,
        vec![
            col("p_si", "", "single-pair probability of each source (source A for the unbalanced LO optimum is attenuated)"),
            col("epsilon", "", "thermal ratio"),
            col("eta", "", "transmission of the lossy channel(s)"),
            col("lo_balanced", "", "LO-BSM swapping fidelity, both inputs see eta"),
            col("lo_balanced_limit", "", "(1 - epsilon)^4 / 3, the eta -> 0 limit"),
            col("lo_unbalanced", "", "LO-BSM fidelity, only source B lossy, source A at its optimum"),
            col("lo_unbalanced_limit", "", "(1 - epsilon)^2 / 3, the eta -> 0 limit"),
            col("eps_a_optimal", "", "source A thermal ratio maximizing lo_unbalanced"),
            col("nlo", "", "NLO-BSM swapping fidelity (1 - epsilon)^4"),
            col("nlo_two_photon", "", "NLO fidelity keeping only one surviving photon per lossy arm"),
            col("lo_bound", "", "1/3"),
        ],
    );
    for p in grid(s.p_min, s.p_max, s.points, s.spacing) {
        let (lo_u, eps_a) = swap_fidelity_lo_unbalanced(p, eta).map_err(&e)?;
        t.push(vec![
            p.into(),
            epsilon_from_p_si(p).map_err(&e)?.into(),
            eta.into(),
            swap_fidelity_lo_balanced(p, eta).map_err(&e)?.into(),
            swap_fidelity_lo_balanced_approx(p).map_err(&e)?.into(),
            lo_u.into(),
            swap_fidelity_lo_unbalanced_approx(p, eta).map_err(&e)?.0.into(),
            eps_a.into(),
            swap_fidelity_nlo(p, p, eta, s.loss_mode).map_err(&e)?.into(),
            swap_fidelity_nlo_two_photon(p, p, eta, s.loss_mode).map_err(&e)?.into(),
            (1.0 / 3.0).into(),
        ]);
    }
    Ok(vec![Artifact::Table(t)].into())
}

pub fn rates(cfg: &Config) -> Result<Outputs> {
    let e = core_error("rates");
    let s = &cfg.entanglement_rates;
    let db = |eta: f64| 10.0 * (1.0 / eta).log10();
    let mut t = Table::new(
        "rates",
        1,
        vec![
            col("eta", "", "channel transmission"),
            col("loss", "dB", "channel loss"),
            col("p_sfg", "", "single-photon SFG probability"),
            col("r_lo", "Hz", "LO-BSM entanglement rate with p_A = eta p_B"),
            col("r_nlo", "Hz", "NLO-BSM entanglement rate"),
            col("ratio_nlo_lo", "", "r_nlo / r_lo = p_sfg / eta"),
            col("faster", "", "lo, nlo or equal"),
        ],
    );
    let etas = grid(s.eta_min.0, s.eta_max.0, s.points, crate::config::Spacing::Log);
    for &p_sfg in &s.p_sfg {
        for &eta in &etas {
            let r = entanglement_rates(s.p_b, eta, p_sfg, s.clock_hz).map_err(&e)?;
            let faster = if r.r_nlo > r.r_lo {
                "nlo"
            } else if r.r_nlo < r.r_lo {
                "lo"
            } else {
                "equal"
            };
            t.push(vec![
                eta.into(),
                db(eta).into(),
                p_sfg.into(),
                r.r_lo.into(),
                r.r_nlo.into(),
                (r.r_nlo / r.r_lo).into(),
                faster.into(),
            ]);
        }
    }

    let mut x = Table::new(
        "rates_crossover",
        1,
        vec![
            col("p_sfg", "", "single-photon SFG probability"),
            col("eta_crossover", "", "transmission where both rates agree (eta = p_sfg)"),
            col("loss_crossover", "dB", "loss beyond which the NLO-BSM is faster"),
            col("rate_at_crossover", "Hz", "common rate at the crossover"),
        ],
    );
    for &p_sfg in s.p_sfg.iter().filter(|p| **p > 0.0) {
        let r = entanglement_rates(s.p_b, p_sfg, p_sfg, s.clock_hz).map_err(&e)?;
        x.push(vec![p_sfg.into(), p_sfg.into(), db(p_sfg).into(), r.r_lo.into()]);
    }
    Ok(vec![Artifact::Table(t), Artifact::Table(x)].into())
}

fn mode_json(m: &CavityMode) -> Value {
    json!({
        "wavelength_nm": m.wavelength * 1e9,
        "quality_factor": m.quality_factor(),
        "linewidth_hz": m.kappa_total / TWO_PI,
        "external_coupling_hz": m.kappa_external / TWO_PI,
        "azimuthal_number": m.azimuthal_number,
    })
}

pub fn cavity(cfg: &Config) -> Result<Outputs> {
    let e = core_error("cavity");
    let c = &cfg.cavity_params;
    let p = c.build()?;
    let det = c.detunings();
    let (setup, constraints) = cfg.wavelength_setup.build()?;
    let ss = steady_state(&p, &det, (c.input_power_a_w, c.input_power_b_w)).map_err(&e)?;
    let (lhs, rhs) = efficiency_probability_relation(&p);
    let raw_mismatch = p.mode_c.omega() - p.mode_a.omega() - p.mode_b.omega();
    let report = check_wavelength_conditions(&setup, &constraints);

    let mut checks = Table::new(
        "cavity_wavelength_conditions",
        1,
        vec![
            col("condition", "", "wavelength condition"),
            col("passed", "", "whether it holds within tolerance"),
            col("detail", "", "values entering the check"),
        ],
    );
    for ch in report.checks() {
        checks.push(vec![ch.name.into(), ch.passed.into(), ch.detail.clone().into()]);
    }

    let body = json!({
        "modes": { "a": mode_json(&p.mode_a), "b": mode_json(&p.mode_b), "c": mode_json(&p.mode_c) },
        "g_hz": p.g / TWO_PI,
        "phase_matched": p.phase_matching.is_some(),
        "resonance_mismatch_hz": raw_mismatch / TWO_PI,
        "effective_mismatch_hz": p.frequency_mismatch() / TWO_PI,
        "detuning_a_hz": c.detuning_a_hz,
        "detuning_b_hz": c.detuning_b_hz,
        "eta_sfg_resonant_per_w": sfg_efficiency_resonant(&p),
        "eta_sfg_per_w": sfg_efficiency(&p, &det),
        "p_sfg": single_photon_sfg_probability_with(&p, c.influx_linewidth),
        "influx_linewidth": c.influx_linewidth,
        "efficiency_probability_relation": {
            "from_coupling": lhs,
            "from_efficiency": rhs,
        },
        "steady_state": {
            "input_power_a_w": c.input_power_a_w,
            "input_power_b_w": c.input_power_b_w,
            "photons_a": ss.a.norm_sqr(),
            "photons_b": ss.b.norm_sqr(),
            "photons_c": ss.c.norm_sqr(),
            "sfg_output_power_w": sfg_output_power(&p, &ss),
            "back_action": ss.back_action,
            "weak_conversion": ss.is_weak_conversion(),
        },
        "wavelength_conditions": {
            "all_pass": report.all_pass(),
            "checks": report.checks().iter().map(|c| json!({
                "name": c.name, "passed": c.passed, "detail": c.detail,
            })).collect::<Vec<_>>(),
        },
    });
    Ok(vec![
        Artifact::Report(Report {
            name: "cavity".into(),
            schema_version: 1,
            body,
        }),
        Artifact::Table(checks),
    ]
    .into())
}

fn rho_json(rho: &DensityMatrix2) -> Value {
    let m = rho.entries();
    json!({
        "re": m.iter().map(|r| r.iter().map(|z| z.re).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "im": m.iter().map(|r| r.iter().map(|z| z.im).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn input_entry(base_dir: &Path, rel: &str) -> Result<InputEntry> {
    Ok(InputEntry {
        path: rel.to_string(),
        sha256: sha256_file(&base_dir.join(rel))?,
    })
}

pub fn tomo(cfg: &Config, base_dir: &Path) -> Result<Outputs> {
    let m = &cfg.tomography;
    if m.counts.is_empty() {
        return Err(CliError::Config("[tomography] counts: no counts file given".into()));
    }
    let path = base_dir.join(&m.counts);
    let raw = read_counts(&path)?;
    let proj = projections_from_bins(&raw);
    let opts = m.mle_options();
    let rho = mle_rho_with(&proj, &opts).map_err(core_error("tomo: maximum-likelihood fit"))?;
    let target = m.target.qubit();
    let fidelity = fidelity_pure(&rho, &target).map_err(core_error("tomo"))?;
    let pur = purity(&rho).map_err(core_error("tomo"))?;
    let delta_theta = cfg.delta_theta();
    let err = fidelity_error_with(&proj, &target, delta_theta, m.trials, cfg.run.seed, m.noise, &opts)
        .map_err(core_error("tomo: fidelity uncertainty"))?;
    let linear = stokes(&proj).ok().map(|s| {
        let r = rho_linear(&s);
        json!({ "bloch": r.bloch(), "physical": r.is_physical() })
    });

    let body = json!({
        "target": m.target.label(),
        "counts_file": m.counts,
        "projections": {
            "n0": proj.n0, "n1": proj.n1,
            "n_plus": proj.n_plus, "n_minus": proj.n_minus,
            "n_left": proj.n_left, "n_right": proj.n_right,
        },
        "linear_inversion": linear,
        "rho": rho_json(&rho),
        "bloch": rho.bloch(),
        "fidelity": fidelity,
        "purity": pur,
        "uncertainty": {
            "noise": m.noise,
            "delta_theta_rad": delta_theta,
            "trials": m.trials,
            "seed": cfg.run.seed,
            "fidelity_std": err.f_std,
            "fidelity_mean": err.f_mean,
            "purity_std": err.purity_std,
            "purity_mean": err.purity_mean,
        },
    });
    Ok(Outputs {
        artifacts: vec![Artifact::Report(Report {
            name: "tomo".into(),
            schema_version: 1,
            body,
        })],
        inputs: vec![input_entry(base_dir, &m.counts)?],
    })
}

/// Closed-form value the Monte Carlo approximates, where one exists.
fn closed_form(cfg: &Config, sc: &ScenarioConfig) -> Result<(Option<f64>, Option<f64>)> {
    let e = core_error("simulate: closed form");
    Ok(match &sc.source_a {
        SourceA::Alice(_) => match sc.herald {
            HeraldMode::State => (Some(teleport_fidelity_nlo(sc.source_b.p_si()).map_err(&e)?), None),
            HeraldMode::Coincidence => {
                let est = estimated_teleport_fidelity(&cfg.system_efficiencies.build()).map_err(&e)?;
                (Some(est.f_superposition), Some(est.f_poles))
            }
        },
        SourceA::Pairs(a) => {
            let (pa, pb) = (a.p_si(), sc.source_b.p_si());
            let f = match sc.bsm {
                BsmType::Nlo if sc.two_photon_only => swap_fidelity_nlo_two_photon(pa, pb, sc.eta, sc.loss_mode),
                BsmType::Nlo => swap_fidelity_nlo(pa, pb, sc.eta, sc.loss_mode),
                BsmType::Lo => {
                    let (ta, tb) = sc.arm_transmissions();
                    swap_fidelity_lo_exact(a.epsilon(), ta, sc.source_b.epsilon(), tb)
                }
            };
            (Some(f.map_err(&e)?), None)
        }
    })
}

pub fn simulate(cfg: &Config) -> Result<Outputs> {
    let sc = cfg.scenario()?;
    let (shots, seed) = (cfg.run.shots, cfg.run.seed);
    let s = &cfg.scenario_config;
    if s.protocol == ProtocolChoice::Experiment {
        return experiment(cfg, &sc);
    }
    let mc = core_error("simulate: Monte Carlo");
    let r = match s.protocol {
        ProtocolChoice::Teleport => simulate_teleport(&sc, shots, seed),
        _ => simulate_swap(&sc, shots, seed),
    }
    .map_err(mc)?;
    let model = brute_force_converged(&sc, MODEL_TOLERANCE).map_err(core_error("simulate: exact enumeration"))?;
    let (closed, closed_poles) = closed_form(cfg, &sc)?;

    let protocol = match s.protocol {
        ProtocolChoice::Teleport => "teleport",
        _ => "swap",
    };
    let bsm = match sc.bsm {
        BsmType::Nlo => "nlo",
        BsmType::Lo => "lo",
    };
    let herald = match sc.herald {
        HeraldMode::State => "state",
        HeraldMode::Coincidence => "coincidence",
    };
    let mut t = Table::new(
        "simulate_summary",
        1,
        vec![
            col("protocol", "", "teleport or swap"),
            col("bsm", "", "nlo or lo"),
            col("herald", "", "state or coincidence (teleportation)"),
            col("shots", "", "simulated clock cycles"),
            col("seed", "", "random seed"),
            col("heralded", "", "shots with a herald"),
            col("desired", "", "shots classified desired"),
            col("undesired", "", "shots classified undesired"),
            col("no_herald", "", "shots without a herald"),
            col("clamped", "", "shots whose conversion weight was clamped to 1"),
            col("f_hat", "", "Monte Carlo fidelity (superposition inputs)"),
            col("stderr", "", "standard error of f_hat"),
            col("f_poles", "", "Monte Carlo fidelity of e/l inputs (coincidence heralding)"),
            col("f_poles_stderr", "", "standard error of f_poles"),
            col("f_model", "", "exact fidelity of the simulated event model"),
            col("f_poles_model", "", "exact e/l fidelity of the event model"),
            col("z_score", "", "(f_hat - f_model) / stderr"),
            col("f_closed_form", "", "analytic fidelity for this scenario"),
            col("f_poles_closed_form", "", "analytic e/l fidelity (coincidence heralding)"),
        ],
    );
    let z = if r.stderr > 0.0 {
        Some((r.f_hat - model.fidelity) / r.stderr)
    } else {
        None
    };
    t.push(vec![
        protocol.into(),
        bsm.into(),
        herald.into(),
        shots.into(),
        seed.into(),
        r.summary.heralded.into(),
        r.summary.desired.into(),
        r.summary.undesired.into(),
        r.summary.no_herald.into(),
        r.summary.clamped.into(),
        r.f_hat.into(),
        r.stderr.into(),
        r.f_poles.map(|p| p.value).into(),
        r.f_poles.map(|p| p.stderr).into(),
        model.fidelity.into(),
        model.f_poles.into(),
        z.into(),
        closed.into(),
        closed_poles.into(),
    ]);
    Ok(vec![Artifact::Table(t)].into())
}

/// `d F_V + (1 - d) / 2`: partner idlers carry the input with its coherence
/// scaled by `V`, unrelated idlers are maximally mixed.
fn mixture_fidelity(q: &TimeBinQubit, desired_fraction: f64, v: f64) -> f64 {
    let (a2, b2) = (q.alpha().norm_sqr(), q.beta().norm_sqr());
    let fv = a2 * a2 + b2 * b2 + 2.0 * v * a2 * b2;
    desired_fraction * fv + (1.0 - desired_fraction) / 2.0
}

fn experiment(cfg: &Config, sc: &ScenarioConfig) -> Result<Outputs> {
    let (shots, seed) = (cfg.run.shots, cfg.run.seed);
    let target = &cfg.scenario_config.target;
    let q = target.qubit();
    let run = simulate_full_experiment_detailed(sc, &q, shots, seed).map_err(core_error("simulate: experiment"))?;
    let proj = projections_from_bins(&run.counts);
    let opts = cfg.tomography.mle_options();
    let rho = mle_rho_with(&proj, &opts).map_err(core_error("simulate: maximum-likelihood fit"))?;
    let ctx = core_error("simulate");
    let v = sc.interferometers.v_eff();

    let mut t = Table::new(
        "simulate_experiment",
        1,
        vec![
            col("target", "", "input state"),
            col("shots", "", "heralded coincidences per analyzer phase"),
            col("seed", "", "random seed"),
            col("v_eff", "", "effective fringe visibility"),
            col("desired_fraction", "", "probability that the detected idler is the partner of the converted signal"),
            col("accidentals_per_bin", "", "mean dark-count coincidences per bin and phase"),
            col("fidelity", "", "fidelity of the maximum-likelihood state"),
            col("purity", "", "purity of the maximum-likelihood state"),
            col("fidelity_model", "", "desired_fraction F_V + (1 - desired_fraction)/2, accidentals excluded"),
        ],
    );
    t.push(vec![
        target.label().into(),
        shots.into(),
        seed.into(),
        v.into(),
        run.desired_fraction.into(),
        run.accidentals_per_bin.into(),
        fidelity_pure(&rho, &q).map_err(&ctx)?.into(),
        purity(&rho).map_err(&ctx)?.into(),
        mixture_fidelity(&q, run.desired_fraction, v).into(),
    ]);
    Ok(vec![Artifact::Table(counts_table("simulate_counts", &run.counts)), Artifact::Table(t)].into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_fidelity_limits() {
        let plus = TimeBinQubit::plus();
        assert!((mixture_fidelity(&plus, 1.0, 0.905) - 0.9525).abs() < 1e-15);
        assert_eq!(mixture_fidelity(&TimeBinQubit::early(), 0.5, 0.0), 0.75);
        assert_eq!(mixture_fidelity(&plus, 0.0, 1.0), 0.5);
    }

    #[test]
    fn closed_form_matches_model_for_state_heralding() {
        let mut cfg = Config::default();
        cfg.scenario_config.herald = HeraldMode::State;
        let sc = cfg.scenario().unwrap();
        let (f, poles) = closed_form(&cfg, &sc).unwrap();
        let model = brute_force_converged(&sc, MODEL_TOLERANCE).unwrap();
        assert!((f.unwrap() - model.fidelity).abs() < 1e-10);
        assert!(poles.is_none());
    }
}

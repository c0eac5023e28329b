//! Exact enumeration over pair numbers and survival counts.

use serde::Serialize;

use super::{BsmType, HeraldMode, ScenarioConfig, SourceA};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BruteForce {
    pub fidelity: f64,
    /// Upper bound on `|fidelity - limit|` from the truncated pair numbers.
    pub tail_bound: f64,
    /// e/l-state fidelity under coincidence heralding.
    pub f_poles: Option<f64>,
    pub n_max: u32,
}

/// Binomial pmf `P(k; n, p)` for `k = 0..=n`.
fn binomial_pmf(n: u32, p: f64) -> Vec<f64> {
    let n_us = n as usize;
    let mut out = vec![0.0; n_us + 1];
    if p <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if p >= 1.0 {
        out[n_us] = 1.0;
        return out;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let mut ln_fact = vec![0.0f64; n_us + 1];
    for i in 1..=n_us {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    for k in 0..=n_us {
        let ln_c = ln_fact[n_us] - ln_fact[k] - ln_fact[n_us - k];
        out[k] = (ln_c + k as f64 * lp + (n_us - k) as f64 * lq).exp();
    }
    out
}

/// `sum_{n >= k} n r^(n-1)`.
fn tail_n_weighted(r: f64, k: u32) -> f64 {
    if r == 0.0 {
        return if k <= 1 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    r.powi(k as i32 - 1) * (kf - (kf - 1.0) * r) / ((1.0 - r) * (1.0 - r))
}

/// Exact `P(desired) / P(heralded)` for the event model of the simulators,
/// summing pair numbers up to `n_max` (and `max_pairs` if set).
///
/// Teleportation is selected by an Alice input, swapping by a pair source A.
pub fn brute_force_fidelity(cfg: &ScenarioConfig, n_max: u32) -> Result<BruteForce> {
    if n_max == 0 {
        return Err(invalid("n_max", "must be at least 1"));
    }
    cfg.validate()?;
    let n_top = cfg.max_pairs.map_or(n_max, |m| m.min(n_max));
    let truncated = cfg.max_pairs.is_none_or(|m| m > n_max);
    match &cfg.source_a {
        SourceA::Alice(_) => teleport(cfg, n_top, truncated),
        SourceA::Pairs(a) => {
            let eps_a = a.epsilon();
            match cfg.bsm {
                BsmType::Nlo => swap_nlo(cfg, eps_a, n_top, truncated),
                BsmType::Lo => swap_lo(cfg, eps_a, n_top, truncated),
            }
        }
    }
}

/// Enumerates with growing `n_max` until the tail bound is below `tol`.
pub fn brute_force_converged(cfg: &ScenarioConfig, tol: f64) -> Result<BruteForce> {
    let mut n = 16;
    loop {
        let b = brute_force_fidelity(cfg, n)?;
        if b.tail_bound <= tol || n >= 2048 {
            return Ok(b);
        }
        n *= 2;
    }
}

fn teleport(cfg: &ScenarioConfig, n_top: u32, truncated: bool) -> Result<BruteForce> {
    let eps = cfg.source_b.epsilon();
    let gamma = cfg.gamma()?;
    let x = cfg.idler_detection();
    let (mut h, mut d_sup, mut d_pole) = (0.0, 0.0, 0.0);
    let mut p_n = 1.0 - eps; // P(n) / eps for n = 1
    for n in 1..=n_top {
        let conv: f64 = binomial_pmf(n, cfg.t_s)
            .iter()
            .enumerate()
            .map(|(k, b)| b * (gamma * k as f64).min(1.0))
            .sum();
        let w = p_n * conv;
        match cfg.herald {
            HeraldMode::State => {
                h += w;
                if n == 1 {
                    d_sup += w;
                    d_pole += w;
                }
            }
            HeraldMode::Coincidence => {
                // partner idler of the converted signal, plus n - 1 others
                let others = binomial_pmf(n - 1, x);
                let some_other: f64 = others[1..].iter().sum();
                let hit = w * x;
                let miss = w * (1.0 - x) * some_other;
                h += hit + miss;
                d_sup += hit;
                d_pole += hit + 0.5 * miss;
            }
        }
        p_n *= eps;
    }
    if h <= 0.0 {
        return Err(Error::DegenerateData("no heralded events".into()));
    }
    let tail = if truncated {
        gamma * cfg.t_s * (1.0 - eps) * tail_n_weighted(eps, n_top + 1)
    } else {
        0.0
    };
    Ok(BruteForce {
        fidelity: d_sup / h,
        tail_bound: tail / h,
        f_poles: (cfg.herald == HeraldMode::Coincidence).then(|| d_pole / h),
        n_max: n_top,
    })
}

/// `W[k] = sum_n P(n) Bin(k; n, eta)` over `n = n_min..=n_top`, with the
/// pair distribution scaled by `eps^-n_min`.
fn survivor_weights(eps: f64, eta: f64, n_min: u32, n_top: u32) -> Vec<f64> {
    let mut w = vec![0.0; n_top as usize + 1];
    let mut p_n = 1.0 - eps;
    for n in n_min..=n_top {
        for (k, b) in binomial_pmf(n, eta).iter().enumerate() {
            w[k] += p_n * b;
        }
        p_n *= eps;
    }
    w
}

fn swap_nlo(cfg: &ScenarioConfig, eps_a: f64, n_top: u32, truncated: bool) -> Result<BruteForce> {
    let eps_b = cfg.source_b.epsilon();
    let (eta_a, eta_b) = cfg.arm_transmissions();
    let wa = survivor_weights(eps_a, eta_a, 1, n_top);
    let wb = survivor_weights(eps_b, eta_b, 1, n_top);
    let mut h = 0.0;
    for (ka, &pa) in wa.iter().enumerate().skip(1) {
        if cfg.two_photon_only && eta_a < 1.0 && ka != 1 {
            continue;
        }
        for (kb, &pb) in wb.iter().enumerate().skip(1) {
            if cfg.two_photon_only && eta_b < 1.0 && kb != 1 {
                continue;
            }
            h += pa * pb * (cfg.p_sfg * (ka * kb) as f64).min(1.0);
        }
    }
    // one pair each, both photons through
    let d = (1.0 - eps_a) * eta_a * (1.0 - eps_b) * eta_b * cfg.p_sfg.min(1.0);
    if h <= 0.0 {
        return Err(Error::DegenerateData("no heralded events".into()));
    }
    let tail = if truncated {
        let k = n_top + 1;
        let (ma, mb) = (1.0 / (1.0 - eps_a), 1.0 / (1.0 - eps_b));
        let ta = (1.0 - eps_a) * tail_n_weighted(eps_a, k);
        let tb = (1.0 - eps_b) * tail_n_weighted(eps_b, k);
        cfg.p_sfg * eta_a * eta_b * (ta * mb + ma * tb)
    } else {
        0.0
    };
    Ok(BruteForce {
        fidelity: d / h,
        tail_bound: tail / h,
        f_poles: None,
        n_max: n_top,
    })
}

fn swap_lo(cfg: &ScenarioConfig, eps_a: f64, n_top: u32, truncated: bool) -> Result<BruteForce> {
    let eps_b = cfg.source_b.epsilon();
    let (eta_a, eta_b) = cfg.arm_transmissions();
    let wa = survivor_weights(eps_a, eta_a, 0, n_top);
    let wb = survivor_weights(eps_b, eta_b, 0, n_top);
    let get = |w: &[f64], k: usize| w.get(k).copied().unwrap_or(0.0);
    let h = get(&wa, 2) * get(&wb, 0) + get(&wa, 1) * get(&wb, 1) + get(&wa, 0) * get(&wb, 2);
    let d = (1.0 - eps_a) * eps_a * eta_a * (1.0 - eps_b) * eps_b * eta_b;
    if h <= 0.0 {
        return Err(Error::DegenerateData("no heralded events".into()));
    }
    let tail = if truncated {
        eps_a.powi(n_top as i32 + 1) + eps_b.powi(n_top as i32 + 1)
    } else {
        0.0
    };
    Ok(BruteForce {
        fidelity: d / h,
        tail_bound: tail / h,
        f_poles: None,
        n_max: n_top,
    })
}

//! Closed-form fidelities and rates for SFG-heralded teleportation and for
//! entanglement swapping with linear-optics (LO) and nonlinear (NLO) Bell
//! state measurements.
//!
//! Every public function takes single-pair probabilities `p_si` and converts
//! them to the thermal parameter `epsilon` internally. Transmissions are
//! linear, never dB.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, invalid, Result};
use crate::sources::epsilon_from_p_si;

/// Which BSM input channels are lossy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    Lossless,
    /// Both inputs see transmission `eta`.
    #[default]
    Balanced,
    /// Only source B's photon sees `eta`; source A is local.
    Unbalanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapScenario {
    pub p_a_si: f64,
    pub p_b_si: f64,
    pub eta: f64,
    pub loss_mode: LossMode,
}

impl SwapScenario {
    pub fn validate(&self) -> Result<()> {
        check_range("p_a_si", self.p_a_si, 0.0, 0.25)?;
        check_range("p_b_si", self.p_b_si, 0.0, 0.25)?;
        check_eta(self.eta)
    }

    /// Transmissions seen by the A and B inputs.
    pub fn arm_transmissions(&self) -> (f64, f64) {
        match self.loss_mode {
            LossMode::Lossless => (1.0, 1.0),
            LossMode::Balanced => (self.eta, self.eta),
            LossMode::Unbalanced => (1.0, self.eta),
        }
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(invalid("eta", format!("{eta} is outside (0, 1]")))
    }
}

fn check_positive_p(name: &'static str, p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p <= 0.25 {
        Ok(())
    } else {
        Err(invalid(name, format!("{p} is outside (0, 0.25]")))
    }
}

/// `((1 + sqrt(1 - 4 p_si)) / 2)^2 = (1 - eps)^2`, with or without postselection.
pub fn teleport_fidelity_nlo(p_si: f64) -> Result<f64> {
    let eps = epsilon_from_p_si(p_si)?;
    Ok((1.0 - eps) * (1.0 - eps))
}

/// Largest `p_si` whose teleportation fidelity is still at least `threshold`,
/// by bisection to `1e-14`.
pub fn teleport_crossover(threshold: f64) -> Result<f64> {
    check_range("threshold", threshold, 0.25, 1.0)?;
    let (mut lo, mut hi) = (0.0f64, 0.25f64);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if teleport_fidelity_nlo(mid)? >= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Leading order in `p` for the LO-BSM: `p_a p_b / (p_a p_b + p_a^2 + p_b^2)`.
pub fn swap_fidelity_lo_leading(p_a: f64, p_b: f64) -> Result<f64> {
    check_range("p_a", p_a, 0.0, 0.25)?;
    check_range("p_b", p_b, 0.0, 0.25)?;
    if p_a == 0.0 && p_b == 0.0 {
        return Err(invalid("p_a, p_b", "both zero: nothing is ever heralded"));
    }
    Ok(p_a * p_b / (p_a * p_b + p_a * p_a + p_b * p_b))
}

/// LO-BSM fidelity with per-arm thermal parameters and transmissions, summed
/// over all pair numbers. A herald is any event with exactly two photons
/// reaching the BSM; it is desired when each source emitted exactly one pair.
///
/// `F = ea eb na nb / (na^2 ea^2/(ua^3 ub) + na nb ea eb/(ua^2 ub^2) + nb^2 eb^2/(ua ub^3))`
/// with `u = 1 - e (1 - n)`.
pub fn swap_fidelity_lo_exact(eps_a: f64, eta_a: f64, eps_b: f64, eta_b: f64) -> Result<f64> {
    check_range("eps_a", eps_a, 0.0, 0.5)?;
    check_range("eps_b", eps_b, 0.0, 0.5)?;
    check_eta(eta_a)?;
    check_eta(eta_b)?;
    if eps_a == 0.0 && eps_b == 0.0 {
        return Err(invalid("eps_a, eps_b", "both zero: nothing is ever heralded"));
    }
    let ua = 1.0 - eps_a * (1.0 - eta_a);
    let ub = 1.0 - eps_b * (1.0 - eta_b);
    let xa = eta_a * eps_a;
    let xb = eta_b * eps_b;
    let den = xa * xa / (ua.powi(3) * ub) + xa * xb / (ua * ua * ub * ub) + xb * xb / (ua * ub.powi(3));
    Ok(xa * xb / den)
}

/// Balanced loss, equal sources: the exact expression at `eps_A = eps_B`.
pub fn swap_fidelity_lo_balanced(p_si: f64, eta: f64) -> Result<f64> {
    check_positive_p("p_si", p_si)?;
    check_eta(eta)?;
    let eps = epsilon_from_p_si(p_si)?;
    swap_fidelity_lo_exact(eps, eta, eps, eta)
}

/// The `eta -> 0` limit of [`swap_fidelity_lo_balanced`], `(1 - eps)^4 / 3`.
pub fn swap_fidelity_lo_balanced_approx(p_si: f64) -> Result<f64> {
    let eps = epsilon_from_p_si(p_si)?;
    Ok((1.0 - eps).powi(4) / 3.0)
}

/// Fidelity for unbalanced loss (A local, B through `eta`) at a chosen `eps_a`.
pub fn swap_fidelity_lo_unbalanced_at(p_b: f64, eta: f64, eps_a: f64) -> Result<f64> {
    let eps_b = epsilon_from_p_si(p_b)?;
    swap_fidelity_lo_exact(eps_a, 1.0, eps_b, eta)
}

/// Optimal unbalanced-loss LO fidelity and the attenuated source setting
/// `eps_A` that reaches it.
///
/// The exact optimum is `eps_A = eta eps_B / u` with `u = 1 - eps_B (1 - eta)`,
/// where the fidelity is `u^2 / 3`.
pub fn swap_fidelity_lo_unbalanced(p_b: f64, eta: f64) -> Result<(f64, f64)> {
    check_positive_p("p_b", p_b)?;
    check_eta(eta)?;
    let eps_b = epsilon_from_p_si(p_b)?;
    let u = 1.0 - eps_b * (1.0 - eta);
    let eps_a = eta * eps_b / u;
    let f = swap_fidelity_lo_exact(eps_a, 1.0, eps_b, eta)?;
    Ok((f, eps_a))
}

/// Small-`eta` approximations: `((1 - eps_B)^2 / 3, eta eps_B / (1 - eps_B))`.
pub fn swap_fidelity_lo_unbalanced_approx(p_b: f64, eta: f64) -> Result<(f64, f64)> {
    check_eta(eta)?;
    let eps_b = epsilon_from_p_si(p_b)?;
    Ok(((1.0 - eps_b).powi(2) / 3.0, eta * eps_b / (1.0 - eps_b)))
}

/// NLO-BSM swapping fidelity `(1 - eps_A)^2 (1 - eps_B)^2`.
///
/// With a conversion probability proportional to the number of surviving
/// photons from each source this is exact for every `eta` and loss mode.
pub fn swap_fidelity_nlo(p_a: f64, p_b: f64, eta: f64, loss_mode: LossMode) -> Result<f64> {
    let s = SwapScenario {
        p_a_si: p_a,
        p_b_si: p_b,
        eta,
        loss_mode,
    };
    s.validate()?;
    let ea = epsilon_from_p_si(p_a)?;
    let eb = epsilon_from_p_si(p_b)?;
    Ok((1.0 - ea).powi(2) * (1.0 - eb).powi(2))
}

/// NLO-BSM fidelity when only events with exactly one photon surviving each
/// lossy arm are kept: lossy arms contribute `(1 - eps (1 - eta))^2`,
/// lossless arms `(1 - eps)^2`.
pub fn swap_fidelity_nlo_two_photon(p_a: f64, p_b: f64, eta: f64, loss_mode: LossMode) -> Result<f64> {
    let s = SwapScenario {
        p_a_si: p_a,
        p_b_si: p_b,
        eta,
        loss_mode,
    };
    s.validate()?;
    let ea = epsilon_from_p_si(p_a)?;
    let eb = epsilon_from_p_si(p_b)?;
    let lossless = |e: f64| (1.0 - e).powi(2);
    let lossy = |e: f64| (1.0 - e * (1.0 - eta)).powi(2);
    Ok(match loss_mode {
        LossMode::Lossless => lossless(ea) * lossless(eb),
        LossMode::Balanced => lossy(ea) * lossy(eb),
        LossMode::Unbalanced => lossless(ea) * lossy(eb),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntanglementRates {
    /// LO-BSM rate with `p_A = eta p_B` (the optimum-fidelity setting), Hz.
    pub r_lo: f64,
    /// NLO-BSM rate, Hz.
    pub r_nlo: f64,
}

/// `r_LO = eta^2 p_B^2 clock`, `r_NLO = p_SFG eta p_B^2 clock`.
pub fn entanglement_rates(p_b: f64, eta: f64, p_sfg: f64, clock: f64) -> Result<EntanglementRates> {
    check_range("p_b", p_b, 0.0, 0.25)?;
    check_eta(eta)?;
    check_range("p_sfg", p_sfg, 0.0, 1.0)?;
    check_range("clock", clock, 0.0, f64::MAX)?;
    let base = p_b * p_b * clock;
    Ok(EntanglementRates {
        r_lo: eta * eta * base,
        r_nlo: p_sfg * eta * base,
    })
}

/// Transmissions and detector efficiencies of the teleportation setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemEfficiencies {
    pub t_a: f64,
    pub t_s: f64,
    pub t_i: f64,
    pub t_sigma: f64,
    pub eta_i: f64,
    pub eta_sigma: f64,
    pub p_si: f64,
    pub p_sfg: f64,
}

impl SystemEfficiencies {
    /// Measured system efficiencies with `p_si = 0.003` and `p_SFG = 4e-5`.
    pub fn measured() -> Self {
        Self {
            t_a: 0.28,
            t_s: 0.19,
            t_i: 0.02,
            t_sigma: 0.08,
            eta_i: 0.90,
            eta_sigma: 0.65,
            p_si: 0.003,
            p_sfg: 4e-5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_range("t_a", self.t_a, 0.0, 1.0)?;
        check_range("t_s", self.t_s, 0.0, 1.0)?;
        check_range("t_i", self.t_i, 0.0, 1.0)?;
        check_range("t_sigma", self.t_sigma, 0.0, 1.0)?;
        check_range("eta_i", self.eta_i, 0.0, 1.0)?;
        check_range("eta_sigma", self.eta_sigma, 0.0, 1.0)?;
        check_range("p_si", self.p_si, 0.0, 0.25)?;
        check_range("p_sfg", self.p_sfg, 0.0, 1.0)
    }

    /// Idler arrival-and-detection probability `t_i eta_i`.
    pub fn idler_detection(&self) -> f64 {
        self.t_i * self.eta_i
    }
}

/// Coincidence events with at most two pairs, per unit Alice photon number.
/// Names give (signals reaching the cavity, idlers detected); the primed
/// event is the two-pair emission that lost one photon of each kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoincidenceEvents {
    pub p_1s_1i: f64,
    pub p_2s_1i: f64,
    pub p_1s_2i: f64,
    pub p_2s_2i: f64,
    pub p_1s_1i_lossy: f64,
}

impl CoincidenceEvents {
    pub fn total(&self) -> f64 {
        self.p_1s_1i + self.p_2s_1i + self.p_1s_2i + self.p_2s_2i + self.p_1s_1i_lossy
    }

    /// Desired weight when a wrong-pair idler counts as correct with
    /// probability `lucky` (0 for superpositions, 1/2 for the poles).
    pub fn desired(&self, lucky: f64) -> f64 {
        let w = 0.5 + 0.5 * lucky;
        self.p_1s_1i + w * self.p_2s_1i + self.p_1s_2i + self.p_2s_2i + w * self.p_1s_1i_lossy
    }
}

pub fn coincidence_events(sys: &SystemEfficiencies) -> Result<CoincidenceEvents> {
    sys.validate()?;
    let p = sys.p_si;
    let (ts, x) = (sys.t_s, sys.idler_detection());
    let common = 0.25 * sys.p_sfg * sys.t_sigma * sys.eta_sigma;
    Ok(CoincidenceEvents {
        p_1s_1i: common * p * ts * x,
        p_2s_1i: common * p * p * 2.0 * ts * ts * 2.0 * x * (1.0 - x),
        p_1s_2i: common * p * p * 2.0 * ts * (1.0 - ts) * x * x,
        p_2s_2i: common * p * p * 2.0 * ts * ts * x * x,
        p_1s_1i_lossy: common * p * p * 2.0 * ts * (1.0 - ts) * 2.0 * x * (1.0 - x),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatedFidelity {
    /// States on the equator (+, -, L, R).
    pub f_superposition: f64,
    /// Time-bin states e, l.
    pub f_poles: f64,
    pub events: CoincidenceEvents,
}

/// Fidelity of the heralded coincidences with at most two pairs and perfect
/// interferometers: `F_+- = (1 + 2p)/(1 + 2p(2 - x))`,
/// `F_el = (1 + p(3 - x))/(1 + 2p(2 - x))` with `x = t_i eta_i`.
pub fn estimated_teleport_fidelity(sys: &SystemEfficiencies) -> Result<EstimatedFidelity> {
    let events = coincidence_events(sys)?;
    let p = sys.p_si;
    let x = sys.idler_detection();
    let den = 1.0 + 2.0 * p * (2.0 - x);
    Ok(EstimatedFidelity {
        f_superposition: (1.0 + 2.0 * p) / den,
        f_poles: (1.0 + p * (3.0 - x)) / den,
        events,
    })
}

/// `(1 + V) / 2`.
pub fn fidelity_from_visibility(v: f64) -> Result<f64> {
    check_range("visibility", v, 0.0, 1.0)?;
    Ok((1.0 + v) / 2.0)
}

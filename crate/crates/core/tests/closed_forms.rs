//! Closed-form fidelities against exhaustive enumeration over pair numbers.

use sfg_bsm::montecarlo::{brute_force_converged, brute_force_fidelity, BsmType, HeraldMode, ScenarioConfig};
use sfg_bsm::protocols::*;
use sfg_bsm::sources::epsilon_from_p_si;

const PS: [f64; 5] = [1e-4, 3e-3, 0.03, 0.12, 0.25];

fn brute(cfg: &ScenarioConfig) -> f64 {
    let b = brute_force_converged(cfg, 1e-13).unwrap();
    assert!(b.tail_bound <= 1e-13);
    b.fidelity
}

#[test]
fn teleport_grid() {
    for p in PS {
        for t_s in [1.0, 0.5, 0.19, 0.05, 1e-3] {
            let mut cfg = ScenarioConfig::teleport(p).unwrap();
            cfg.t_s = t_s;
            let closed = teleport_fidelity_nlo(p).unwrap();
            assert!((brute(&cfg) - closed).abs() < 1e-10, "p={p} t_s={t_s}");
        }
    }
}

#[test]
fn teleport_truncation_bound_holds() {
    let cfg = ScenarioConfig::teleport(0.25).unwrap();
    let exact = teleport_fidelity_nlo(0.25).unwrap();
    for n in [1, 2, 5, 10, 40] {
        let b = brute_force_fidelity(&cfg, n).unwrap();
        assert!((b.fidelity - exact).abs() <= b.tail_bound * (1.0 + 1e-12) + 1e-15, "n={n}");
    }
}

#[test]
fn nlo_swap_grid() {
    for mode in [LossMode::Lossless, LossMode::Balanced, LossMode::Unbalanced] {
        for eta in [1e-3, 0.3] {
            for pa in PS {
                for pb in PS {
                    let cfg = ScenarioConfig::swap(BsmType::Nlo, pa, pb, eta, mode).unwrap();
                    let (ea, eb) = (epsilon_from_p_si(pa).unwrap(), epsilon_from_p_si(pb).unwrap());
                    let oracle = (1.0 - ea).powi(2) * (1.0 - eb).powi(2);
                    let closed = swap_fidelity_nlo(pa, pb, eta, mode).unwrap();
                    assert!((closed - oracle).abs() < 1e-15);
                    assert!((brute(&cfg) - closed).abs() < 1e-10, "{mode:?} eta={eta} pa={pa} pb={pb}");
                }
            }
        }
    }
}

#[test]
fn nlo_two_photon_grid() {
    for mode in [LossMode::Lossless, LossMode::Balanced, LossMode::Unbalanced] {
        for eta in [1e-3, 0.3] {
            for pa in PS {
                for pb in PS {
                    let mut cfg = ScenarioConfig::swap(BsmType::Nlo, pa, pb, eta, mode).unwrap();
                    cfg.two_photon_only = true;
                    let closed = swap_fidelity_nlo_two_photon(pa, pb, eta, mode).unwrap();
                    assert!((brute(&cfg) - closed).abs() < 1e-10, "{mode:?} eta={eta} pa={pa} pb={pb}");
                }
            }
        }
    }
}

#[test]
fn lo_swap_grid() {
    for eta in [1e-3, 0.1, 1.0] {
        for pa in PS {
            for pb in PS {
                let (ea, eb) = (epsilon_from_p_si(pa).unwrap(), epsilon_from_p_si(pb).unwrap());
                let cfg = ScenarioConfig::swap(BsmType::Lo, pa, pb, eta, LossMode::Balanced).unwrap();
                let closed = swap_fidelity_lo_exact(ea, eta, eb, eta).unwrap();
                assert!((brute(&cfg) - closed).abs() < 1e-10, "balanced eta={eta} pa={pa} pb={pb}");
                assert!(closed <= 1.0 / 3.0 + 1e-12);

                let cfg = ScenarioConfig::swap(BsmType::Lo, pa, pb, eta, LossMode::Unbalanced).unwrap();
                let closed = swap_fidelity_lo_exact(ea, 1.0, eb, eta).unwrap();
                assert!((brute(&cfg) - closed).abs() < 1e-10, "unbalanced eta={eta} pa={pa} pb={pb}");
            }
        }
    }
}

#[test]
fn lo_balanced_limits() {
    for p in PS {
        let eps = epsilon_from_p_si(p).unwrap();
        let approx = swap_fidelity_lo_balanced_approx(p).unwrap();
        assert!((approx - (1.0 - eps).powi(4) / 3.0).abs() < 1e-15);
        // eta -> 0 approaches the limit, eta = 1 is lossless
        let small = swap_fidelity_lo_balanced(p, 1e-9).unwrap();
        assert!((small - approx).abs() < 1e-8);
        let lossless = swap_fidelity_lo_balanced(p, 1.0).unwrap();
        assert!((lossless - 1.0 / 3.0).abs() < 1e-15);
    }
}

#[test]
fn lo_leading_order_is_small_p_limit() {
    for (pa, pb) in [(1e-6, 1e-6), (1e-6, 3e-6), (2e-6, 1e-7)] {
        let (ea, eb) = (epsilon_from_p_si(pa).unwrap(), epsilon_from_p_si(pb).unwrap());
        let lead = swap_fidelity_lo_leading(pa, pb).unwrap();
        let exact = swap_fidelity_lo_exact(ea, 1.0, eb, 1.0).unwrap();
        assert!((lead - exact).abs() < 1e-5, "{lead} vs {exact}");
    }
    assert!((swap_fidelity_lo_leading(0.01, 0.01).unwrap() - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn lo_unbalanced_optimum_is_a_maximum() {
    for p in [0.005, 0.05, 0.2] {
        for eta in [1e-3, 1e-2, 0.3] {
            let (f, eps_a) = swap_fidelity_lo_unbalanced(p, eta).unwrap();
            let eps_b = epsilon_from_p_si(p).unwrap();
            let u = 1.0 - eps_b * (1.0 - eta);
            assert!((f - u * u / 3.0).abs() < 1e-14);
            // scan a fine grid around the optimum
            for k in 1..200 {
                let e = eps_a * k as f64 / 100.0;
                if e > 0.5 {
                    break;
                }
                let g = swap_fidelity_lo_unbalanced_at(p, eta, e).unwrap();
                assert!(g <= f + 1e-14, "p={p} eta={eta}: {g} at {e} > {f} at {eps_a}");
            }
            let (approx, eps_approx) = swap_fidelity_lo_unbalanced_approx(p, eta).unwrap();
            assert!((approx - f).abs() < 2.0 * eta);
            assert!((eps_approx - eps_a).abs() <= eta * eps_a);
        }
    }
}

#[test]
fn estimated_fidelity_rational_form() {
    for p in [1e-4, 3e-3, 0.02, 0.1] {
        let sys = SystemEfficiencies {
            p_si: p,
            ..SystemEfficiencies::measured()
        };
        let est = estimated_teleport_fidelity(&sys).unwrap();
        let x = sys.t_i * sys.eta_i;
        let sup = (1.0 + 2.0 * p) / (1.0 + 2.0 * p * (2.0 - x));
        let pole = (1.0 + p * (3.0 - x)) / (1.0 + 2.0 * p * (2.0 - x));
        assert!((est.f_superposition - sup).abs() < 1e-14, "p={p}");
        assert!((est.f_poles - pole).abs() < 1e-14, "p={p}");

        // the same event model enumerated exactly, with the thermal ratio eps in
        // place of p_si between the two- and one-pair terms
        let mut cfg = ScenarioConfig::measured();
        cfg.source_b = sfg_bsm::sources::PairSource::from_p_si(p).unwrap();
        cfg.max_pairs = Some(2);
        assert_eq!(cfg.herald, HeraldMode::Coincidence);
        let b = brute_force_fidelity(&cfg, 2).unwrap();
        let eps = epsilon_from_p_si(p).unwrap();
        let sup_eps = (1.0 + 2.0 * eps) / (1.0 + 2.0 * eps * (2.0 - x));
        let pole_eps = (1.0 + eps * (3.0 - x)) / (1.0 + 2.0 * eps * (2.0 - x));
        assert!((b.fidelity - sup_eps).abs() < 1e-14);
        assert!((b.f_poles.unwrap() - pole_eps).abs() < 1e-14);
    }
}

#[test]
fn table_values() {
    let est = estimated_teleport_fidelity(&SystemEfficiencies::measured()).unwrap();
    assert!((est.f_superposition - 0.994_177_244).abs() < 1e-9);
    assert!((est.f_poles - 0.997_088_622).abs() < 1e-9);
}

#[test]
fn rate_ratio() {
    for eta in [1e-6, 1e-4, 1e-2, 0.5] {
        for p_sfg in [1e-5, 4e-5, 1e-3, 0.1] {
            let r = entanglement_rates(0.02, eta, p_sfg, 2.5e8).unwrap();
            assert!((r.r_nlo / r.r_lo / (p_sfg / eta) - 1.0).abs() < 1e-12);
            assert!((r.r_lo - eta * eta * 0.02 * 0.02 * 2.5e8).abs() <= 1e-12 * r.r_lo);
        }
    }
}

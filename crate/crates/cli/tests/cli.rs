//! End-to-end runs of the `sfg-bsm` binary on the bundled configs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sfg_bsm_cli::{Config, RunManifest};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn sfg_bsm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfg-bsm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) {
    let o = sfg_bsm(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn config(name: &str) -> String {
    configs().join(name).display().to_string()
}

/// Rows of a CSV artifact as maps from column name to field.
fn read_csv(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    r.records()
        .map(|rec| header.iter().map(String::from).zip(rec.unwrap().iter().map(String::from)).collect())
        .collect()
}

fn num(row: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|_| panic!("{key} = {:?}", row[key]))
}

fn artifact_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.to_string_lossy().ends_with(".manifest.json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_and_replays_are_byte_identical() {
    let runs: [(&str, String, &[&str]); 6] = [
        ("teleport-curve", config("measured.toml"), &[]),
        ("swap-curves", config("swap_lo_unbalanced.toml"), &["--format", "json"]),
        ("rates", config("measured.toml"), &[]),
        ("cavity", config("device.toml"), &[]),
        ("tomo", config("tomo_plus.toml"), &[]),
        ("simulate", config("experiment_plus.toml"), &["--shots", "20000", "--seed", "11"]),
    ];
    for (cmd, cfg, extra) in runs {
        let tmp = tempfile::tempdir().unwrap();
        let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
        let mut args = vec![cmd, "--config", cfg.as_str()];
        args.extend_from_slice(extra);
        ok(&args, &a);
        ok(&args, &b);
        let manifest = a.join(RunManifest::file_name(cmd));
        ok(&["replay", manifest.to_str().unwrap()], &c);
        let first = artifact_bytes(&a);
        assert!(!first.is_empty());
        assert_eq!(first, artifact_bytes(&b), "{cmd}: rerun differs");
        assert_eq!(first, artifact_bytes(&c), "{cmd}: replay differs");

        let m = RunManifest::read(&manifest).unwrap();
        assert_eq!(m.command, cmd);
        assert_eq!(m.artifacts.len(), first.len());
        assert!(m.config_digest.starts_with("sha256:"));
        let tables = m.artifacts.iter().filter(|e| e.kind == "table");
        assert!(tables.clone().all(|e| e.schema_version >= 1 && !e.columns.is_empty()));
    }
}

#[test]
fn seed_changes_simulation_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("measured.toml");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["simulate", "--config", &cfg, "--shots", "50000", "--seed", "1"], &a);
    ok(&["simulate", "--config", &cfg, "--shots", "50000", "--seed", "2"], &b);
    assert_ne!(artifact_bytes(&a), artifact_bytes(&b));
    let m = RunManifest::read(&a.join("simulate.manifest.json")).unwrap();
    assert_eq!((m.seed, m.shots), (1, 50000));
}

#[test]
fn bundled_configs_round_trip() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = Config::load(&path).unwrap().canonical();
            let text = cfg.to_canonical_toml();
            let again = Config::from_toml(&text, "canonical").unwrap();
            assert_eq!(again, cfg, "{}", path.display());
            assert_eq!(again.to_canonical_toml(), text);
            assert_eq!(again.digest(), cfg.digest());
        }
    }
}

#[test]
fn config_errors_exit_2_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = tmp.path().join(name);
        fs::write(&p, text).unwrap();
        p.display().to_string()
    };

    let unknown = write("unknown.toml", "[system_efficiencies]\nt_a = 0.3\nt_q = 0.1\n");
    let o = sfg_bsm(&["rates", "--config", &unknown], &tmp.path().join("o"));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(o.status.code(), Some(2), "{err}");
    assert!(err.contains("line 3") && err.contains("t_q"), "{err}");

    let range = write("range.toml", "[system_efficiencies]\nt_s = \"-3 dB\"\n");
    let o = sfg_bsm(&["simulate", "--config", &range], &tmp.path().join("o"));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(o.status.code(), Some(2));
    assert!(err.contains("line 2") && err.contains("outside [0, 1]"), "{err}");

    let p_si = write("p.toml", "[system_efficiencies]\np_si = 0.3\n");
    let o = sfg_bsm(&["simulate", "--config", &p_si], &tmp.path().join("o"));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(o.status.code(), Some(2));
    assert!(err.contains("system_efficiencies") && err.contains("p_si"), "{err}");

    let counts = write("bad.csv", "phase_setting,detector,bin,counts\n0,1,e,3\n0,1,x,4\n");
    let tomo = write("tomo.toml", "[tomography]\ncounts = \"bad.csv\"\n");
    let o = sfg_bsm(&["tomo", "--config", &tomo], &tmp.path().join("o"));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(o.status.code(), Some(2));
    assert!(err.contains("line 3") && err.contains("bin"), "{err}");
    drop(counts);

    let o = sfg_bsm(&["rates", "--config", "/nonexistent/x.toml"], &tmp.path().join("o"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn empty_counts_are_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("zero.csv"), "phase_setting,detector,bin,counts\n0,1,e,0\n").unwrap();
    let cfg = tmp.path().join("tomo.toml");
    fs::write(&cfg, "[tomography]\ncounts = \"zero.csv\"\n").unwrap();
    let o = sfg_bsm(&["tomo", "--config", cfg.to_str().unwrap()], &tmp.path().join("o"));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(o.status.code(), Some(3), "{err}");
    assert!(err.contains("numerical failure") && err.contains("tomo"), "{err}");
}

#[test]
fn replay_detects_changed_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let src = configs();
    for f in ["tomo_e.toml", "counts_e.csv"] {
        fs::copy(src.join(f), tmp.path().join(f)).unwrap();
    }
    let out = tmp.path().join("o");
    ok(&["tomo", "--config", tmp.path().join("tomo_e.toml").to_str().unwrap()], &out);
    let manifest = out.join("tomo.manifest.json");
    ok(&["replay", manifest.to_str().unwrap()], &tmp.path().join("r"));

    let counts = tmp.path().join("counts_e.csv");
    let text = fs::read_to_string(&counts).unwrap().replace("0,1,e,86", "0,1,e,87");
    fs::write(&counts, text).unwrap();
    let o = sfg_bsm(&["replay", manifest.to_str().unwrap()], &tmp.path().join("r2"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("changed"));

    let o = sfg_bsm(&["replay", manifest.to_str().unwrap(), "--seed", "3"], &tmp.path().join("r3"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn swap_curves_limits() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["swap-curves"], tmp.path());
    let rows = read_csv(&tmp.path().join("swap_curves.csv"));
    assert_eq!(num(&rows[0], "p_si"), 1e-4);
    assert_eq!(num(rows.last().unwrap(), "p_si"), 0.2);
    let first = &rows[0];
    assert!(num(first, "nlo") > 0.999);
    assert!((num(first, "lo_balanced") - 1.0 / 3.0).abs() < 1e-3);
    assert!((num(first, "lo_unbalanced") - 1.0 / 3.0).abs() < 1e-3);
    for r in &rows {
        for k in ["lo_balanced", "lo_unbalanced"] {
            assert!(num(r, k) <= 1.0 / 3.0 + 1e-12, "{k} at p_si {}", r["p_si"]);
        }
        assert!(num(r, "nlo") >= num(r, "lo_unbalanced"));
        assert_eq!(num(r, "lo_bound"), 1.0 / 3.0);
    }
    // the NLO curve falls with p_si, the LO ones too
    assert!(rows.windows(2).all(|w| num(&w[1], "nlo") < num(&w[0], "nlo")));
}

#[test]
fn teleport_curve_is_flat_in_photon_number() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["teleport-curve", "--config", &config("measured.toml")], tmp.path());
    let rows = read_csv(&tmp.path().join("teleport_curve_mean_photon_number.csv"));
    let n: Vec<f64> = rows.iter().map(|r| num(r, "mean_photon_number")).collect();
    assert_eq!(n, vec![0.8, 8.0, 80.0]);
    for r in &rows {
        assert!((num(r, "fidelity") - 0.9525).abs() < 1e-12);
    }
    let summary: Value = serde_json::from_slice(&fs::read(tmp.path().join("teleport_curve_summary.json")).unwrap()).unwrap();
    assert!((summary["crossover_p_si"].as_f64().unwrap() - 0.1498).abs() < 1e-4);

    let rows = read_csv(&tmp.path().join("teleport_curve_p_si.csv"));
    let at = |p: f64| rows.iter().min_by(|a, b| (num(a, "p_si") - p).abs().total_cmp(&(num(b, "p_si") - p).abs())).unwrap();
    assert!(num(at(1e-4), "fidelity") > 0.9997);
    assert_eq!(at(0.25)["beats_classical"], "false");
}

#[test]
fn tomo_reproduces_bundled_state() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["tomo", "--config", &config("tomo_e.toml")], tmp.path());
    let r: Value = serde_json::from_slice(&fs::read(tmp.path().join("tomo.json")).unwrap()).unwrap();
    let f = r["fidelity"].as_f64().unwrap();
    let f_std = r["uncertainty"]["fidelity_std"].as_f64().unwrap();
    let purity = r["purity"].as_f64().unwrap();
    assert!((f - 0.955).abs() <= 0.016, "{f}");
    assert!((f_std - 0.016).abs() < 0.004, "{f_std}");
    assert!((purity - 0.91).abs() < 0.01, "{purity}");
    let re = &r["rho"]["re"];
    let trace = re[0][0].as_f64().unwrap() + re[1][1].as_f64().unwrap();
    assert!((trace - 1.0).abs() < 1e-12);
}

#[test]
fn cavity_report() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["cavity", "--config", &config("device.toml")], tmp.path());
    let r: Value = serde_json::from_slice(&fs::read(tmp.path().join("cavity.json")).unwrap()).unwrap();
    let p = r["p_sfg"].as_f64().unwrap();
    assert!((3.5e-5..=5.5e-5).contains(&p), "{p}");
    assert_eq!(r["wavelength_conditions"]["all_pass"], true);
    let rel = &r["efficiency_probability_relation"];
    let (a, b) = (rel["from_coupling"].as_f64().unwrap(), rel["from_efficiency"].as_f64().unwrap());
    assert!((a / b - 1.0).abs() < 1e-12);

    let opt = tmp.path().join("opt");
    ok(&["cavity", "--config", &config("optimized_device.toml")], &opt);
    let o: Value = serde_json::from_slice(&fs::read(opt.join("cavity.json")).unwrap()).unwrap();
    assert!(o["p_sfg"].as_f64().unwrap() > 10.0 * p);
}

#[test]
fn rates_cross_at_p_sfg() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["rates"], tmp.path());
    for r in read_csv(&tmp.path().join("rates.csv")) {
        let ratio = num(&r, "p_sfg") / num(&r, "eta");
        assert!((num(&r, "ratio_nlo_lo") / ratio - 1.0).abs() < 1e-12);
        let expect = match num(&r, "r_nlo").total_cmp(&num(&r, "r_lo")) {
            std::cmp::Ordering::Greater => "nlo",
            std::cmp::Ordering::Less => "lo",
            std::cmp::Ordering::Equal => "equal",
        };
        assert_eq!(r["faster"], expect);
        if (ratio - 1.0).abs() > 1e-9 {
            assert_eq!(r["faster"], if ratio > 1.0 { "nlo" } else { "lo" });
        }
    }
    let x = read_csv(&tmp.path().join("rates_crossover.csv"));
    assert_eq!(num(&x[0], "eta_crossover"), num(&x[0], "p_sfg"));
}

#[test]
fn simulate_agrees_with_exact_model() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, cfg) in [("t", "measured.toml"), ("s", "swap_lo_unbalanced.toml")] {
        let out = tmp.path().join(name);
        ok(&["simulate", "--config", &config(cfg), "--shots", "200000"], &out);
        let row = &read_csv(&out.join("simulate_summary.csv"))[0];
        assert!(num(row, "z_score").abs() < 5.0, "{cfg}: {row:?}");
        assert!((num(row, "f_model") - num(row, "f_closed_form")).abs() < 1e-4, "{cfg}");
    }
    let out = tmp.path().join("e");
    ok(&["simulate", "--config", &config("experiment_plus.toml"), "--shots", "100000"], &out);
    let row = &read_csv(&out.join("simulate_experiment.csv"))[0];
    assert!((num(row, "fidelity") - num(row, "fidelity_model")).abs() < 0.01, "{row:?}");
    let counts = read_csv(&out.join("simulate_counts.csv"));
    assert_eq!(counts.len(), 12);
    assert!(counts.iter().all(|r| r["counts"].parse::<u64>().is_ok()));
}

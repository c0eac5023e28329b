//! Command-line front end for `sfg-bsm`: scenario files in, CSV/JSON
//! artifacts and a run manifest out.

pub mod commands;
pub mod config;
pub mod counts;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::Config;
pub use error::{CliError, Result};
pub use output::{Format, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "sfg-bsm", version, about = "Teleportation and swapping with an SFG Bell state measurement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Scenario file (TOML). Without it the measured setup is used.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Overrides `[run] seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Overrides `[run] shots`.
    #[arg(long, global = true)]
    pub shots: Option<u64>,

    /// Format of tabular artifacts. Reports are always JSON.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Fidelity against p_si and against Alice's mean photon number.
    TeleportCurve,
    /// LO and NLO swapping fidelities over a p_si grid, with the 1/3 bound.
    SwapCurves,
    /// LO and NLO entanglement rates and their crossover.
    Rates,
    /// SFG efficiency, single-photon probability and wavelength conditions.
    Cavity,
    /// Density matrix, fidelity and purity from bin counts.
    Tomo,
    /// Monte Carlo run of `[scenario_config]`.
    Simulate,
    /// Re-runs the command recorded in a manifest, with its config and seed.
    Replay { manifest: PathBuf },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::TeleportCurve => "teleport-curve",
            Command::SwapCurves => "swap-curves",
            Command::Rates => "rates",
            Command::Cavity => "cavity",
            Command::Tomo => "tomo",
            Command::Simulate => "simulate",
            Command::Replay { .. } => "replay",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub artifacts: Vec<PathBuf>,
    pub manifest: PathBuf,
}

pub fn run(cli: &Cli) -> Result<RunOutcome> {
    if let Command::Replay { manifest } = &cli.command {
        if cli.seed.is_some() || cli.shots.is_some() || cli.config.is_some() {
            return Err(CliError::Config(
                "replay takes config, seed and shots from the manifest".into(),
            ));
        }
        return replay(manifest, &cli.out);
    }
    let (mut cfg, base_dir) = match &cli.config {
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            (Config::load(path)?, dir.to_path_buf())
        }
        None => (Config::default(), PathBuf::from(".")),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(shots) = cli.shots {
        cfg.run.shots = shots;
    }
    cfg.validate()?;
    execute(cli.command.name(), &cfg.canonical(), &base_dir, &cli.out, cli.format)
}

fn replay(path: &Path, out: &Path) -> Result<RunOutcome> {
    let m = RunManifest::read(path)?;
    let cfg = Config::from_toml(&m.config, &format!("{} (embedded config)", path.display()))?;
    cfg.validate()?;
    if cfg.digest() != m.config_digest {
        return Err(CliError::Config(format!(
            "{}: embedded config does not match config_digest",
            path.display()
        )));
    }
    let base_dir = PathBuf::from(&m.base_dir);
    for input in &m.inputs {
        let now = commands::input_entry(&base_dir, &input.path)?;
        if now.sha256 != input.sha256 {
            return Err(CliError::Config(format!("input {} changed since the recorded run", input.path)));
        }
    }
    execute(&m.command, &cfg, &base_dir, out, m.format)
}

fn execute(command: &str, cfg: &Config, base_dir: &Path, out: &Path, format: Format) -> Result<RunOutcome> {
    log::info!("{command}: config {}", cfg.digest());
    let outputs = match command {
        "teleport-curve" => commands::teleport_curve(cfg)?,
        "swap-curves" => commands::swap_curves(cfg)?,
        "rates" => commands::rates(cfg)?,
        "cavity" => commands::cavity(cfg)?,
        "tomo" => commands::tomo(cfg, base_dir)?,
        "simulate" => commands::simulate(cfg)?,
        other => return Err(CliError::Config(format!("unknown command `{other}`"))),
    };
    let (artifacts, entries) = output::write_artifacts(out, &outputs.artifacts, format)?;
    let base = std::fs::canonicalize(base_dir).unwrap_or_else(|_| base_dir.to_path_buf());
    let manifest = RunManifest {
        command: command.to_string(),
        config_digest: cfg.digest(),
        seed: cfg.run.seed,
        shots: cfg.run.shots,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        format,
        base_dir: base.display().to_string(),
        inputs: outputs.inputs,
        artifacts: entries,
        config: cfg.to_canonical_toml(),
    };
    let manifest = output::write_manifest(out, &manifest)?;
    Ok(RunOutcome { artifacts, manifest })
}

//! Front end for the snapgrip chamber and gripper models: parses one
//! strict TOML experiment description, dispatches to the requested
//! analysis, and persists CSV/JSON artifacts plus a manifest into the
//! output directory.
//!
//! Everything numeric is deterministic for a given config document and
//! seed: repeated runs produce byte-identical CSV bodies. The manifest
//! records the SHA-256 of the exact ingested config bytes together with
//! the command-line overrides, so a result directory pins down what
//! produced it up to the timestamp.
//!
//! Exit codes: 0 on success, 2 for usage and configuration problems, 3
//! when a requested analysis fails to converge.

pub mod config;

mod commands;

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

/// Validation exit status, for usage and configuration problems.
pub const EXIT_VALIDATION: i32 = 2;
/// Runtime exit status, for analyses that fail to converge.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Parser, Debug, Clone)]
#[command(
    name = "snapgrip",
    version,
    about = "Bistable fluidic chamber tracing and source-free gripper simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Experiment description, strict TOML; misspelled keys are rejected.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory. Defaults to $SNAPGRIP_OUT, then ./snapgrip-out.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Run seed, recorded in the manifest. The shipped experiments are
    /// deterministic on their own; the seed pins randomized harnesses
    /// built on top.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Tilt angles in degrees, replacing the sweep config's list.
    #[arg(long, global = true, value_delimiter = ',', value_name = "DEG,..")]
    pub angles: Option<Vec<f64>>,

    /// Injection flow override in mm^3/s, for the network command.
    #[arg(long = "flow-mm3s", global = true, value_name = "MM3/S")]
    pub flow_mm3s: Option<f64>,

    /// Continuation volume cap override in mm^3, for traced chambers.
    #[arg(long = "max-volume-mm3", global = true, value_name = "MM3")]
    pub max_volume_mm3: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Trace one chamber's equilibrium path and classify its bistability.
    Trace,
    /// Trace and classify a chamber template across tilt angles.
    Sweep,
    /// Tabulate fixture-beam tip deflection against tip load.
    Beam,
    /// Assemble the closed circuit and inject liquid through it.
    Network,
    /// Simulate a full pick-up attempt, from size filter to hold check.
    Grasp,
    /// Fit fixture stiffness and effective area to measured plateaus.
    Calibrate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Trace => "trace",
            Command::Sweep => "sweep",
            Command::Beam => "beam",
            Command::Network => "network",
            Command::Grasp => "grasp",
            Command::Calibrate => "calibrate",
        }
    }
}

/// Marker hung on an error chain when the failure is the user's input
/// rather than the analysis; [`exit_code_for`] looks for it.
#[derive(Debug, Clone, Copy)]
pub struct Invalid;

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid configuration")
    }
}

pub(crate) fn invalid(e: anyhow::Error) -> anyhow::Error {
    e.context(Invalid)
}

/// Map a run failure to the process exit status. The downcast looks
/// through every context layer, so the marker is found wherever in the
/// chain it was attached.
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<Invalid>().is_some() {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

/// Command-line overrides threaded into the experiment runners, plus the
/// directory that relative paths inside the config resolve against.
#[derive(Debug, Clone)]
pub struct Overrides {
    pub base_dir: PathBuf,
    pub angles: Option<Vec<f64>>,
    pub flow_mm3s: Option<f64>,
    pub max_volume_mm3: Option<f64>,
}

impl Overrides {
    fn reject(&self, given: bool, flag: &str, command: &str) -> Result<()> {
        if given {
            return Err(invalid(anyhow!("{flag} does not apply to the {command} command")));
        }
        Ok(())
    }

    pub fn reject_angles(&self, command: &str) -> Result<()> {
        self.reject(self.angles.is_some(), "--angles", command)
    }

    pub fn reject_flow(&self, command: &str) -> Result<()> {
        self.reject(self.flow_mm3s.is_some(), "--flow-mm3s", command)
    }

    pub fn reject_volume_cap(&self, command: &str) -> Result<()> {
        self.reject(self.max_volume_mm3.is_some(), "--max-volume-mm3", command)
    }
}

/// What a completed run left behind.
#[derive(Debug, Clone)]
pub struct RunBundle {
    pub out_dir: PathBuf,
    /// Artifact file names inside `out_dir`, in writing order, manifest
    /// last.
    pub outputs: Vec<String>,
    pub config_sha256: String,
}

fn resolve_out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os("SNAPGRIP_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("snapgrip-out"))
}

fn write_manifest(
    out_dir: &Path,
    cli: &Cli,
    config_path: &Path,
    config_sha256: &str,
    outputs: &[String],
) -> Result<()> {
    let doc = serde_json::json!({
        "tool": "snapgrip",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
        "config_path": config_path.display().to_string(),
        "config_sha256": config_sha256,
        "seed": cli.seed,
        "overrides": {
            "angles": cli.angles,
            "flow_mm3s": cli.flow_mm3s,
            "max_volume_mm3": cli.max_volume_mm3,
        },
        "created_utc": chrono::Utc::now().to_rfc3339(),
        "outputs": outputs,
    });
    let path = out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Load the config, run the requested experiment, and write the manifest.
/// Deterministic given the config document and the seed; the manifest
/// timestamp is the only thing that varies between identical runs.
pub fn run(cli: &Cli) -> Result<RunBundle> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| invalid(anyhow!("--config is required")))?
        .clone();
    let out_dir = resolve_out_dir(cli);
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))
        .map_err(invalid)?;

    let base_dir = config_path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let ov = Overrides {
        base_dir,
        angles: cli.angles.clone(),
        flow_mm3s: cli.flow_mm3s,
        max_volume_mm3: cli.max_volume_mm3,
    };

    let raw = std::fs::read(&config_path)
        .with_context(|| format!("reading config {}", config_path.display()))
        .map_err(invalid)?;
    let config_sha256 = hex_digest(&raw);
    let text = std::str::from_utf8(&raw)
        .with_context(|| format!("config {} is not UTF-8", config_path.display()))
        .map_err(invalid)?;

    let mut outputs = match cli.command {
        Command::Trace => {
            let cfg = parse_config(text, &config_path)?;
            commands::run_trace(&cfg, &ov, &out_dir)?
        }
        Command::Sweep => {
            let cfg = parse_config(text, &config_path)?;
            commands::run_sweep(&cfg, &ov, &out_dir)?
        }
        Command::Beam => {
            let cfg = parse_config(text, &config_path)?;
            commands::run_beam(&cfg, &ov, &out_dir)?
        }
        Command::Network => {
            let cfg = parse_config(text, &config_path)?;
            commands::run_network(&cfg, &ov, &out_dir)?
        }
        Command::Grasp => {
            let cfg = parse_config(text, &config_path)?;
            commands::run_grasp(&cfg, &ov, &out_dir)?
        }
        Command::Calibrate => {
            let cfg = parse_config(text, &config_path)?;
            commands::run_calibrate(&cfg, &ov, &out_dir)?
        }
    };

    write_manifest(&out_dir, cli, &config_path, &config_sha256, &outputs)?;
    outputs.push("manifest.json".into());
    Ok(RunBundle { out_dir, outputs, config_sha256 })
}

fn parse_config<C: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<C> {
    toml::from_str(text)
        .with_context(|| format!("parsing config {}", path.display()))
        .map_err(invalid)
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write as _;
        let _ = write!(out, "{b:02x}");
    }
    out
}

//! Command-line front end.
//!
//! Every subcommand produces one artifact, a CSV table or a JSON document,
//! written to `--out` (atomically, through a `.partial` file) or to standard
//! output. CSV artifacts open with `#` comment lines giving the tool version,
//! the config hash, the seed and the column units; JSON artifacts carry the
//! same information in a `meta` object. Numbers are printed with 12
//! significant digits.
//!
//! `nmrqi run <config.toml>` reads the same parameters from a file:
//!
//! ```toml
//! kind = "elgi"
//! seed = 7
//! output = "d3.csv"
//!
//! [elgi]
//! action = "sweep"
//! points = 97
//! ```
//!
//! Relative paths in a config are resolved against the config's directory
//! and unknown keys are rejected.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::aaqst::{optimize_delays, reconstruct_state, simulate_readout, UnitaryModel};
use crate::dd::{self, DDSequence};
use crate::error::Error;
use crate::files::{load_matrix, load_model, load_system, parse_model, parse_system};
use crate::ga::GaConfig;
use crate::macrorealism::{
    direct_three_time, information_deficit, invert_moments, quantum_moments, theta_grid,
    ProbabilityTable,
};
use crate::measurement::{add_noise, readout_from_csv, NoiseSpec};
use crate::noon::{self, StarSystem};
use crate::quantum::{DeviationDensityMatrix, SpinSystem, UnitaryOp};
use crate::sspt::{self, ChiJson, ChiMatrix, QuantumChannel, SsptPipeline};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const SSPT_SYSTEM: &str = include_str!("../data/sspt_system.toml");
const SSPT_MODEL: &str = include_str!("../data/sspt_model.toml");

#[derive(Parser, Debug)]
#[command(name = "nmrqi", version, about = "NMR quantum information toolkit")]
pub struct Cli {
    /// Seed for noise generation and optimization.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress status messages on standard error.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Ancilla-assisted state tomography.
    #[command(subcommand)]
    Aaqst(AaqstCmd),
    /// Single-scan process tomography.
    #[command(subcommand)]
    Sspt(SsptCmd),
    /// Entropic Leggett-Garg information deficit.
    #[command(subcommand)]
    Elgi(ElgiCmd),
    /// Moment-inverted versus direct three-time probabilities.
    #[command(subcommand)]
    Moments(MomentsCmd),
    /// Dynamical decoupling sequences and filter functions.
    #[command(subcommand)]
    Dd(DdCmd),
    /// NOON-state amplification, diffusion and RF-inhomogeneity fits.
    #[command(subcommand)]
    Noon(NoonCmd),
    /// Run an experiment described by a TOML config file.
    Run { config: PathBuf },
}

#[derive(Subcommand, Deserialize, Debug, Clone)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum AaqstCmd {
    /// Optimize the delays of a pulse-program model.
    Optimize(AaqstOptimize),
    /// Simulate the line readout of a register state.
    Simulate(AaqstSimulate),
    /// Reconstruct the register deviation matrix from a readout CSV.
    Reconstruct(AaqstReconstruct),
}

#[derive(Args, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct AaqstOptimize {
    #[arg(long)]
    pub system: Option<PathBuf>,
    #[arg(long)]
    pub model: PathBuf,
    /// Number of GA generations.
    #[arg(long, default_value_t = 200)]
    #[serde(default = "default_budget")]
    pub budget: usize,
}

#[derive(Args, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct AaqstSimulate {
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Model TOML whose parameter values fix the unitaries.
    #[arg(long)]
    pub unitaries: PathBuf,
    /// Register state TOML: a density matrix (trace one) or a traceless deviation.
    #[arg(long)]
    pub state: PathBuf,
    /// Readout noise level relative to the largest line.
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub eta: f64,
}

#[derive(Args, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct AaqstReconstruct {
    #[arg(long)]
    pub system: Option<PathBuf>,
    #[arg(long)]
    pub readout: PathBuf,
    #[arg(long)]
    pub unitaries: PathBuf,
}

#[derive(Subcommand, Deserialize, Debug, Clone)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum SsptCmd {
    /// Tomograph one gate and report its fidelity and process matrix.
    Run(SsptRun),
    /// Sweep the twirl angle and compare with the analytic process matrix.
    Twirl(SsptTwirl),
}

#[derive(Args, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct SsptRun {
    /// Three-spin system TOML; the bundled register when absent.
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Readout model TOML; the bundled program when absent.
    #[arg(long)]
    pub unitaries: Option<PathBuf>,
    /// Gate name or path to a 2x2 matrix TOML.
    #[arg(long)]
    pub gate: String,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub eta: f64,
}

#[derive(Args, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct SsptTwirl {
    #[arg(long)]
    pub system: Option<PathBuf>,
    #[arg(long)]
    pub unitaries: Option<PathBuf>,
    #[arg(long, default_value_t = 49)]
    #[serde(default = "default_twirl_points")]
    pub points: usize,
    /// Largest twirl angle in units of pi.
    #[arg(long, default_value_t = 3.5)]
    #[serde(default = "default_phi_max")]
    pub phi_max: f64,
}

#[derive(Subcommand, Deserialize, Debug, Clone)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum ElgiCmd {
    /// Information deficit on a uniform angle grid.
    Sweep(ElgiSweep),
}

#[derive(Args, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct ElgiSweep {
    /// Largest total angle in radians.
    #[arg(long, default_value_t = PI)]
    #[serde(default = "default_theta_max")]
    pub theta_max: f64,
    #[arg(long, default_value_t = 97)]
    #[serde(default = "default_points")]
    pub points: usize,
    /// Number of measurements.
    #[arg(long, default_value_t = 3)]
    #[serde(default = "default_measurements")]
    pub n: usize,
}

#[derive(Subcommand, Deserialize, Debug, Clone)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum MomentsCmd {
    /// Moments and both joint tables on a uniform angle grid.
    Sweep(MomentsSweep),
}

#[derive(Args, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct MomentsSweep {
    /// Largest step angle in radians.
    #[arg(long, default_value_t = PI)]
    #[serde(default = "default_theta_max")]
    pub theta_max: f64,
    #[arg(long, default_value_t = 97)]
    #[serde(default = "default_points")]
    pub points: usize,
}

#[derive(Subcommand, Deserialize, Debug, Clone)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum DdCmd {
    /// Generate a pulse sequence as JSON.
    Gen(DdGen),
    /// Tabulate the filter function of a sequence.
    Ff(DdFf),
    /// Integrated filter function over a band.
    Area(DdArea),
}

#[derive(ValueEnum, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum GenScheme {
    Cpmg,
    Udd,
    Rudd,
}

#[derive(Args, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct DdGen {
    #[arg(long, value_enum)]
    pub scheme: GenScheme,
    #[arg(long)]
    pub n: usize,
    /// CPMG half spacing in seconds.
    #[arg(long, default_value_t = dd::DEFAULT_TAU)]
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Pulse length in seconds.
    #[arg(long, default_value_t = dd::DEFAULT_TAU_PI)]
    #[serde(default = "default_tau_pi")]
    pub tau_pi: f64,
    /// Total time in seconds; `n (2 tau + tau_pi)` when absent.
    #[arg(long)]
    #[serde(default)]
    pub total_t: Option<f64>,
    /// Alternate pulse phases x, -x.
    #[arg(long)]
    #[serde(default)]
    pub alternate: bool,
}

#[derive(Args, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct DdFf {
    #[arg(long)]
    pub seq: PathBuf,
    #[arg(long, default_value_t = 1e3)]
    #[serde(default = "default_ff_lo")]
    pub omega_lo: f64,
    #[arg(long, default_value_t = 1e7)]
    #[serde(default = "default_ff_hi")]
    pub omega_hi: f64,
    #[arg(long, default_value_t = 200)]
    #[serde(default = "default_ff_points")]
    pub points: usize,
}

#[derive(Args, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct DdArea {
    #[arg(long)]
    pub seq: PathBuf,
    #[arg(long, default_value_t = dd::DEFAULT_OMEGA_MIN)]
    #[serde(default = "default_band_lo")]
    pub omega_lo: f64,
    #[arg(long, default_value_t = dd::DEFAULT_OMEGA_MAX)]
    #[serde(default = "default_band_hi")]
    pub omega_hi: f64,
}

#[derive(Subcommand, Deserialize, Debug, Clone)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum NoonCmd {
    /// Effective gyromagnetic ratio and amplification of a star system.
    Gfactor(NoonGfactor),
    /// Fit a diffusion coefficient to (G1, S) data.
    DiffusionFit(NoonDiffusionFit),
    /// Fit RF-inhomogeneity widths to (nu, p) or (nuH, nuP, p) data.
    RfiFit(NoonRfiFit),
}

#[derive(Args, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct NoonGfactor {
    #[arg(long)]
    pub system: Option<PathBuf>,
}

#[derive(Args, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct NoonDiffusionFit {
    #[arg(long)]
    pub data: PathBuf,
    /// Gradient pulse length in seconds.
    #[arg(long, default_value_t = 1e-3)]
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Diffusion delay in seconds.
    #[arg(long, default_value_t = 0.05)]
    #[serde(default = "default_big_delta")]
    pub big_delta: f64,
    /// Effective gyromagnetic ratio in rad/s/T.
    #[arg(long, conflicts_with = "system")]
    #[serde(default)]
    pub gamma_eff: Option<f64>,
    /// Star system TOML from which the effective ratio is computed.
    #[arg(long)]
    #[serde(default)]
    pub system: Option<PathBuf>,
}

#[derive(Args, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct NoonRfiFit {
    #[arg(long)]
    pub data: PathBuf,
    /// Nominal nutation frequency for two-column data; the peak when absent.
    #[arg(long)]
    #[serde(default)]
    pub nu0: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    pub nu0_h: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    pub nu0_p: Option<f64>,
    /// Correlation width gauge for three-column data.
    #[arg(long, default_value_t = 0.005)]
    #[serde(default = "default_lambda0")]
    pub lambda0: f64,
}

fn default_budget() -> usize {
    200
}
fn default_twirl_points() -> usize {
    49
}
fn default_phi_max() -> f64 {
    3.5
}
fn default_theta_max() -> f64 {
    PI
}
fn default_points() -> usize {
    97
}
fn default_measurements() -> usize {
    3
}
fn default_tau() -> f64 {
    dd::DEFAULT_TAU
}
fn default_tau_pi() -> f64 {
    dd::DEFAULT_TAU_PI
}
fn default_ff_lo() -> f64 {
    1e3
}
fn default_ff_hi() -> f64 {
    1e7
}
fn default_ff_points() -> usize {
    200
}
fn default_band_lo() -> f64 {
    dd::DEFAULT_OMEGA_MIN
}
fn default_band_hi() -> f64 {
    dd::DEFAULT_OMEGA_MAX
}
fn default_delta() -> f64 {
    1e-3
}
fn default_big_delta() -> f64 {
    0.05
}
fn default_lambda0() -> f64 {
    0.005
}

#[derive(Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Aaqst,
    Sspt,
    Elgi,
    Moments,
    Dd,
    Noon,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    kind: Kind,
    #[serde(default)]
    system: Option<PathBuf>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    aaqst: Option<AaqstCmd>,
    #[serde(default)]
    sspt: Option<SsptCmd>,
    #[serde(default)]
    elgi: Option<ElgiCmd>,
    #[serde(default)]
    moments: Option<MomentsCmd>,
    #[serde(default)]
    dd: Option<DdCmd>,
    #[serde(default)]
    noon: Option<NoonCmd>,
}

/// Failure classes with their process exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

type CliResult<T> = std::result::Result<T, CliError>;

/// A table of pre-formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub units: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(cols: &[(&str, &str)]) -> Self {
        Self {
            columns: cols.iter().map(|(c, _)| c.to_string()).collect(),
            units: cols.iter().map(|(_, u)| u.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push_numbers(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|&v| num(v)).collect());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Table(Table),
    Json(Value),
}

/// Provenance stamped onto every artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub command: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
}

/// Twelve significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

fn round12(x: f64) -> f64 {
    if x.is_finite() {
        num(x).parse().expect("formatted float parses")
    } else {
        x
    }
}

fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => n
            .as_f64()
            .map(|x| json!(round12(x)))
            .unwrap_or(Value::Number(n)),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

pub fn render(artifact: &Artifact, meta: &Meta) -> String {
    let seed = meta.seed.map_or("none".to_string(), |s| s.to_string());
    match artifact {
        Artifact::Table(t) => {
            let mut out = format!(
                "# nmrqi {VERSION}\n# command {}\n# config-sha256 {}\n# seed {seed}\n",
                meta.command, meta.config_sha256
            );
            let units: Vec<String> = t
                .columns
                .iter()
                .zip(&t.units)
                .map(|(c, u)| format!("{c} [{u}]"))
                .collect();
            out.push_str(&format!("# units {}\n", units.join(", ")));
            out.push_str(&t.columns.join(","));
            out.push('\n');
            for r in &t.rows {
                out.push_str(&r.join(","));
                out.push('\n');
            }
            out
        }
        Artifact::Json(v) => {
            let mut obj = match round_json(v.clone()) {
                Value::Object(o) => o,
                other => {
                    let mut m = Map::new();
                    m.insert("data".into(), other);
                    m
                }
            };
            obj.insert(
                "meta".into(),
                json!({
                    "tool": "nmrqi",
                    "version": VERSION,
                    "command": meta.command,
                    "config_sha256": meta.config_sha256,
                    "seed": meta.seed,
                }),
            );
            let mut s =
                serde_json::to_string_pretty(&Value::Object(obj)).expect("JSON value serializes");
            s.push('\n');
            s
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Command {
    fn name(&self) -> String {
        let (group, action) = match self {
            Command::Aaqst(c) => (
                "aaqst",
                match c {
                    AaqstCmd::Optimize(_) => "optimize",
                    AaqstCmd::Simulate(_) => "simulate",
                    AaqstCmd::Reconstruct(_) => "reconstruct",
                },
            ),
            Command::Sspt(c) => (
                "sspt",
                match c {
                    SsptCmd::Run(_) => "run",
                    SsptCmd::Twirl(_) => "twirl",
                },
            ),
            Command::Elgi(_) => ("elgi", "sweep"),
            Command::Moments(_) => ("moments", "sweep"),
            Command::Dd(c) => (
                "dd",
                match c {
                    DdCmd::Gen(_) => "gen",
                    DdCmd::Ff(_) => "ff",
                    DdCmd::Area(_) => "area",
                },
            ),
            Command::Noon(c) => (
                "noon",
                match c {
                    NoonCmd::Gfactor(_) => "gfactor",
                    NoonCmd::DiffusionFit(_) => "diffusion-fit",
                    NoonCmd::RfiFit(_) => "rfi-fit",
                },
            ),
            Command::Run { .. } => ("run", ""),
        };
        format!("{group} {action}").trim().to_string()
    }

    /// Input file fields, labeled for error messages.
    fn input_paths(&mut self) -> Vec<(&'static str, &mut PathBuf)> {
        let mut v: Vec<(&'static str, &mut PathBuf)> = Vec::new();
        match self {
            Command::Aaqst(AaqstCmd::Optimize(a)) => {
                v.extend(a.system.as_mut().map(|p| ("system", p)));
                v.push(("model", &mut a.model));
            }
            Command::Aaqst(AaqstCmd::Simulate(a)) => {
                v.extend(a.system.as_mut().map(|p| ("system", p)));
                v.push(("unitaries", &mut a.unitaries));
                v.push(("state", &mut a.state));
            }
            Command::Aaqst(AaqstCmd::Reconstruct(a)) => {
                v.extend(a.system.as_mut().map(|p| ("system", p)));
                v.push(("readout", &mut a.readout));
                v.push(("unitaries", &mut a.unitaries));
            }
            Command::Sspt(SsptCmd::Run(a)) => {
                v.extend(a.system.as_mut().map(|p| ("system", p)));
                v.extend(a.unitaries.as_mut().map(|p| ("unitaries", p)));
            }
            Command::Sspt(SsptCmd::Twirl(a)) => {
                v.extend(a.system.as_mut().map(|p| ("system", p)));
                v.extend(a.unitaries.as_mut().map(|p| ("unitaries", p)));
            }
            Command::Dd(DdCmd::Ff(a)) => v.push(("seq", &mut a.seq)),
            Command::Dd(DdCmd::Area(a)) => v.push(("seq", &mut a.seq)),
            Command::Noon(NoonCmd::Gfactor(a)) => {
                v.extend(a.system.as_mut().map(|p| ("system", p)))
            }
            Command::Noon(NoonCmd::DiffusionFit(a)) => {
                v.push(("data", &mut a.data));
                v.extend(a.system.as_mut().map(|p| ("system", p)));
            }
            Command::Noon(NoonCmd::RfiFit(a)) => v.push(("data", &mut a.data)),
            Command::Elgi(_)
            | Command::Moments(_)
            | Command::Dd(DdCmd::Gen(_))
            | Command::Run { .. } => {}
        }
        v
    }

    /// The `system` slot, for commands that take one.
    fn system_slot(&mut self) -> Option<&mut Option<PathBuf>> {
        match self {
            Command::Aaqst(AaqstCmd::Optimize(a)) => Some(&mut a.system),
            Command::Aaqst(AaqstCmd::Simulate(a)) => Some(&mut a.system),
            Command::Aaqst(AaqstCmd::Reconstruct(a)) => Some(&mut a.system),
            Command::Sspt(SsptCmd::Run(a)) => Some(&mut a.system),
            Command::Sspt(SsptCmd::Twirl(a)) => Some(&mut a.system),
            Command::Noon(NoonCmd::Gfactor(a)) => Some(&mut a.system),
            _ => None,
        }
    }

    fn rebase(&mut self, base: &Path) {
        for (_, p) in self.input_paths() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Command::Sspt(SsptCmd::Run(a)) = self {
            let known = sspt::GATE_NAMES.contains(&a.gate.to_ascii_lowercase().as_str());
            if !known && Path::new(&a.gate).is_relative() {
                a.gate = base.join(&a.gate).to_string_lossy().into_owned();
            }
        }
    }

    fn check_inputs(&mut self) -> CliResult<()> {
        let group = self.name();
        for (field, p) in self.input_paths() {
            if !p.is_file() {
                return Err(config(format!(
                    "{group}: {field}: file not found: {}",
                    p.display()
                )));
            }
        }
        Ok(())
    }
}

/// Command, seed, output path and raw bytes of a config file.
type LoadedConfig = (Command, Option<u64>, Option<PathBuf>, Vec<u8>);

fn load_config(path: &Path) -> CliResult<LoadedConfig> {
    let bytes = fs::read(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
    let text =
        std::str::from_utf8(&bytes).map_err(|e| config(format!("{}: {e}", path.display())))?;
    let cfg: ExperimentConfig = toml::from_str(text)
        .map_err(|e| config(format!("{}: {}", path.display(), e.to_string().trim_end())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let blocks: [(Kind, &str, bool); 6] = [
        (Kind::Aaqst, "aaqst", cfg.aaqst.is_some()),
        (Kind::Sspt, "sspt", cfg.sspt.is_some()),
        (Kind::Elgi, "elgi", cfg.elgi.is_some()),
        (Kind::Moments, "moments", cfg.moments.is_some()),
        (Kind::Dd, "dd", cfg.dd.is_some()),
        (Kind::Noon, "noon", cfg.noon.is_some()),
    ];
    for (kind, name, present) in blocks {
        if present && kind != cfg.kind {
            return Err(config(format!(
                "{}: [{name}] table does not match kind",
                path.display()
            )));
        }
    }
    let missing = |name: &str| {
        config(format!(
            "{}: kind = \"{name}\" needs a [{name}] table",
            path.display()
        ))
    };
    let mut cmd = match cfg.kind {
        Kind::Aaqst => Command::Aaqst(cfg.aaqst.ok_or_else(|| missing("aaqst"))?),
        Kind::Sspt => Command::Sspt(cfg.sspt.ok_or_else(|| missing("sspt"))?),
        Kind::Elgi => Command::Elgi(cfg.elgi.ok_or_else(|| missing("elgi"))?),
        Kind::Moments => Command::Moments(cfg.moments.ok_or_else(|| missing("moments"))?),
        Kind::Dd => Command::Dd(cfg.dd.ok_or_else(|| missing("dd"))?),
        Kind::Noon => Command::Noon(cfg.noon.ok_or_else(|| missing("noon"))?),
    };
    if let Some(sys) = cfg.system {
        match cmd.system_slot() {
            Some(slot) if slot.is_none() => *slot = Some(sys),
            Some(_) => {
                return Err(config(format!(
                    "{}: system is given both at top level and in the [{}] table",
                    path.display(),
                    cmd.name().split(' ').next().unwrap_or_default()
                )))
            }
            None => {
                return Err(config(format!(
                    "{}: system: not used by {}",
                    path.display(),
                    cmd.name()
                )))
            }
        }
    }
    cmd.rebase(&base);
    let output = cfg
        .output
        .map(|o| if o.is_relative() { base.join(o) } else { o });
    Ok((cmd, cfg.seed, output, bytes))
}

fn require_seed(seed: Option<u64>, what: &str) -> CliResult<u64> {
    seed.ok_or_else(|| config(format!("seed: required for {what}")))
}

fn noise(eta: f64, seed: Option<u64>, what: &str) -> CliResult<NoiseSpec> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(config(format!("eta: must be finite and >= 0, got {eta}")));
    }
    if eta == 0.0 {
        return Ok(NoiseSpec::none());
    }
    Ok(NoiseSpec::new(eta, require_seed(seed, what)?)?)
}

fn system_of(p: &Option<PathBuf>, what: &str) -> CliResult<SpinSystem> {
    let p = p
        .as_ref()
        .ok_or_else(|| config(format!("{what}: system: required")))?;
    Ok(load_system(p)?)
}

fn model_unitaries(system: &SpinSystem, model: &UnitaryModel) -> CliResult<Vec<UnitaryOp>> {
    let params = model
        .default_params()
        .ok_or_else(|| config("unitaries: every model parameter needs a value"))?;
    Ok(model.unitaries(system, &params)?)
}

fn sspt_pipeline(system: &Option<PathBuf>, unitaries: &Option<PathBuf>) -> CliResult<SsptPipeline> {
    let system = match system {
        Some(p) => load_system(p)?,
        None => parse_system(SSPT_SYSTEM, Path::new("<bundled sspt_system.toml>"))?,
    };
    let model = match unitaries {
        Some(p) => load_model(p)?,
        None => parse_model(SSPT_MODEL, Path::new("<bundled sspt_model.toml>"))?,
    };
    let u = model_unitaries(&system, &model)?;
    Ok(SsptPipeline::new(system, u)?)
}

/// Reads a numeric CSV with a header row; `#` lines are comments.
fn read_numeric_csv(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| config(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| config(format!("{}: row {}: {e}", path.display(), i + 1)))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, s)| {
                s.parse::<f64>().map_err(|e| {
                    config(format!(
                        "{}: row {} column {}: {e}",
                        path.display(),
                        i + 1,
                        header[c]
                    ))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(config(format!("{}: no data rows", path.display())));
    }
    Ok((header, rows))
}

fn chi_json(chi: &ChiMatrix) -> Value {
    serde_json::to_value(ChiJson::from(chi)).expect("chi serializes")
}

fn outcome_label(p: &ProbabilityTable, idx: usize) -> String {
    p.outcomes_of(idx)
        .iter()
        .map(|&o| if o > 0 { '+' } else { '-' })
        .collect()
}

fn aaqst(cmd: &AaqstCmd, seed: Option<u64>) -> CliResult<Artifact> {
    match cmd {
        AaqstCmd::Optimize(a) => {
            let system = system_of(&a.system, "aaqst optimize")?;
            let model = load_model(&a.model)?;
            if a.budget == 0 {
                return Err(config("budget: must be at least 1"));
            }
            let seed = require_seed(seed, "aaqst optimize")?;
            let r = optimize_delays(&system, &model, a.budget, seed, &GaConfig::default())?;
            let params: Map<String, Value> = model
                .names()
                .iter()
                .cloned()
                .zip(r.params.iter().map(|&p| json!(p)))
                .collect();
            Ok(Artifact::Json(json!({
                "params": params,
                "condition_number": r.condition_number,
                "evaluations": r.evaluations,
            })))
        }
        AaqstCmd::Simulate(a) => {
            let system = system_of(&a.system, "aaqst simulate")?;
            let u = model_unitaries(&system, &load_model(&a.unitaries)?)?;
            let m = load_matrix(&a.state)?;
            let trace = m.trace();
            let rho = if (trace.re - 1.0).abs() < 1e-9 && trace.im.abs() < 1e-9 {
                DeviationDensityMatrix::from_density(&m)?
            } else {
                DeviationDensityMatrix::new(m)?
            };
            let readout = add_noise(
                &simulate_readout(&system, &rho, &u)?,
                noise(a.eta, seed, "noisy readout")?,
            );
            let mut t = Table::new(&[
                ("experiment_k", "1"),
                ("spin_j", "1"),
                ("nu", "1"),
                ("R", "a.u."),
                ("S", "a.u."),
            ]);
            for l in &readout.lines {
                t.rows.push(vec![
                    l.experiment.to_string(),
                    l.spin.to_string(),
                    l.nu.to_string(),
                    num(l.r),
                    num(l.s),
                ]);
            }
            Ok(Artifact::Table(t))
        }
        AaqstCmd::Reconstruct(a) => {
            let system = system_of(&a.system, "aaqst reconstruct")?;
            let model = load_model(&a.unitaries)?;
            let u = model_unitaries(&system, &model)?;
            let text = fs::read_to_string(&a.readout)
                .map_err(|e| config(format!("{}: {e}", a.readout.display())))?;
            let readout = readout_from_csv(&text)?;
            let m = crate::aaqst::build_constraint_matrix(&system, &u)?;
            let rho = reconstruct_state(&m, &readout)?;
            let mut t = Table::new(&[("row", "1"), ("col", "1"), ("re", "1"), ("im", "1")]);
            let d = rho.dim();
            for r in 0..d {
                for c in 0..d {
                    let z = rho.matrix()[(r, c)];
                    t.rows
                        .push(vec![r.to_string(), c.to_string(), num(z.re), num(z.im)]);
                }
            }
            Ok(Artifact::Table(t))
        }
    }
}

fn sspt_cmd(cmd: &SsptCmd, seed: Option<u64>) -> CliResult<Artifact> {
    match cmd {
        SsptCmd::Run(a) => {
            let pipeline = sspt_pipeline(&a.system, &a.unitaries)?;
            let u = if sspt::GATE_NAMES.contains(&a.gate.to_ascii_lowercase().as_str()) {
                sspt::gate(&a.gate)?
            } else {
                let p = Path::new(&a.gate);
                if !p.is_file() {
                    return Err(config(format!(
                        "gate: {:?} is neither a known gate ({}) nor a matrix file",
                        a.gate,
                        sspt::GATE_NAMES.join(", ")
                    )));
                }
                load_matrix(p)?
            };
            let channel = QuantumChannel::unitary(u)?;
            let chi = pipeline.run(&channel, noise(a.eta, seed, "noisy sspt")?)?;
            let theory = sspt::chi_theory(&channel)?;
            Ok(Artifact::Json(json!({
                "gate": a.gate,
                "eta": a.eta,
                "fidelity": sspt::gate_fidelity(&chi, &theory)?,
                "chi": chi_json(&chi),
                "chi_theory": chi_json(&theory),
            })))
        }
        SsptCmd::Twirl(a) => {
            if a.points < 2 || !(a.phi_max > 0.0) || !a.phi_max.is_finite() {
                return Err(config(
                    "twirl sweep needs points >= 2 and a positive finite phi_max",
                ));
            }
            let pipeline = sspt_pipeline(&a.system, &a.unitaries)?;
            let mut t = Table::new(&[
                ("phi", "rad"),
                ("chi_EE", "1"),
                ("chi_ZZ", "1"),
                ("chi_EE_theory", "1"),
                ("chi_ZZ_theory", "1"),
                ("max_other", "1"),
            ]);
            for i in 0..a.points {
                let phi = a.phi_max * PI * i as f64 / (a.points - 1) as f64;
                let chi = pipeline.run(&QuantumChannel::twirl(phi)?, NoiseSpec::none())?;
                let th = sspt::chi_of_twirl(phi)?;
                let e = chi.entries();
                let mut other: f64 = 0.0;
                for r in 0..e.nrows() {
                    for c in 0..e.ncols() {
                        if !((r, c) == (0, 0) || (r, c) == (3, 3)) {
                            other = other.max(e[(r, c)].norm());
                        }
                    }
                }
                t.push_numbers(&[
                    phi,
                    e[(0, 0)].re,
                    e[(3, 3)].re,
                    th.entries()[(0, 0)].re,
                    th.entries()[(3, 3)].re,
                    other,
                ]);
            }
            Ok(Artifact::Table(t))
        }
    }
}

fn elgi(cmd: &ElgiCmd) -> CliResult<Artifact> {
    let ElgiCmd::Sweep(a) = cmd;
    let col = format!("D{}", a.n);
    let mut t = Table::new(&[("theta", "rad"), (col.as_str(), "bit")]);
    for theta in theta_grid(a.theta_max, a.points)? {
        t.push_numbers(&[theta, information_deficit(theta, a.n)?]);
    }
    Ok(Artifact::Table(t))
}

fn moments(cmd: &MomentsCmd) -> CliResult<Artifact> {
    let MomentsCmd::Sweep(a) = cmd;
    let grid = theta_grid(a.theta_max, a.points)?;
    let probe = direct_three_time(0.0)?;
    let labels: Vec<String> = (0..8).map(|i| outcome_label(&probe, i)).collect();
    let mut cols: Vec<(String, &str)> = vec![
        ("theta".into(), "rad"),
        ("mu110".into(), "1"),
        ("mu011".into(), "1"),
        ("mu101".into(), "1"),
        ("mu111".into(), "1"),
    ];
    cols.extend(labels.iter().map(|l| (format!("Pmu_{l}"), "1")));
    cols.extend(labels.iter().map(|l| (format!("Pd_{l}"), "1")));
    cols.push(("max_abs_diff".into(), "1"));
    cols.push(("sin2_over_8".into(), "1"));
    let cols_ref: Vec<(&str, &str)> = cols.iter().map(|(c, u)| (c.as_str(), *u)).collect();
    let mut t = Table::new(&cols_ref);
    for theta in grid {
        let mu = quantum_moments(theta)?;
        let pmu = invert_moments(&mu);
        let pd = direct_three_time(theta)?;
        let mut row = vec![
            theta,
            mu.get(1, 1, 0),
            mu.get(0, 1, 1),
            mu.get(1, 0, 1),
            mu.get(1, 1, 1),
        ];
        row.extend_from_slice(pmu.values());
        row.extend_from_slice(pd.values());
        row.push(pmu.max_abs_diff(&pd)?);
        row.push(theta.sin().powi(2) / 8.0);
        t.push_numbers(&row);
    }
    Ok(Artifact::Table(t))
}

fn dd_cmd(cmd: &DdCmd) -> CliResult<Artifact> {
    match cmd {
        DdCmd::Gen(a) => {
            let total = a.total_t.unwrap_or(a.n as f64 * (2.0 * a.tau + a.tau_pi));
            let seq = match a.scheme {
                GenScheme::Cpmg => {
                    if a.total_t.is_some() {
                        return Err(config("total_t: CPMG timing is fixed by n, tau and tau_pi"));
                    }
                    dd::make_cpmg(a.n, a.tau, a.tau_pi, a.alternate)?
                }
                GenScheme::Udd => dd::make_udd(a.n, total, a.tau_pi)?,
                GenScheme::Rudd => dd::make_rudd(a.n, total, a.tau_pi)?,
            };
            let seq = if a.alternate && a.scheme != GenScheme::Cpmg {
                seq.with_alternating_phase()
            } else {
                seq
            };
            Ok(Artifact::Json(
                serde_json::to_value(&seq).expect("sequence serializes"),
            ))
        }
        DdCmd::Ff(a) => {
            let seq = read_sequence(&a.seq)?;
            let mut t = Table::new(&[("omega", "rad/s"), ("F", "1"), ("F_over_omega2", "s^2")]);
            for (w, f) in dd::filter_table(&seq, a.omega_lo, a.omega_hi, a.points)? {
                let weighted = if w > 0.0 {
                    f / (w * w)
                } else {
                    dd::weighted_filter(&seq, w)
                };
                t.push_numbers(&[w, f, weighted]);
            }
            Ok(Artifact::Table(t))
        }
        DdCmd::Area(a) => {
            let seq = read_sequence(&a.seq)?;
            let area = dd::ff_area(&seq, (a.omega_lo, a.omega_hi))?;
            Ok(Artifact::Json(json!({
                "scheme": seq.scheme().as_str(),
                "omega_lo": a.omega_lo,
                "omega_hi": a.omega_hi,
                "area": area,
            })))
        }
    }
}

fn read_sequence(path: &Path) -> CliResult<DDSequence> {
    let text = fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
    DDSequence::from_json(&text).map_err(|e| config(format!("{}: {e}", path.display())))
}

fn peak(samples: &[(f64, f64)]) -> f64 {
    samples
        .iter()
        .copied()
        .fold(
            (f64::NAN, f64::NEG_INFINITY),
            |b, s| if s.1 > b.1 { s } else { b },
        )
        .0
}

fn noon_cmd(cmd: &NoonCmd) -> CliResult<Artifact> {
    match cmd {
        NoonCmd::Gfactor(a) => {
            let star = StarSystem::from_spin_system(&system_of(&a.system, "noon gfactor")?)?;
            let (gamma_eff, g) = noon::effective_gamma(&star);
            let mut t = Table::new(&[
                ("n_total", "1"),
                ("gamma_a", "rad/s/T"),
                ("gamma_m", "rad/s/T"),
                ("gamma_eff", "rad/s/T"),
                ("g", "1"),
            ]);
            t.rows.push(vec![
                star.n_total().to_string(),
                num(star.gamma_a()),
                num(star.gamma_m()),
                num(gamma_eff),
                num(g),
            ]);
            Ok(Artifact::Table(t))
        }
        NoonCmd::DiffusionFit(a) => {
            let gamma_eff = match (&a.gamma_eff, &a.system) {
                (Some(g), None) => *g,
                (None, Some(p)) => {
                    noon::effective_gamma(&StarSystem::from_spin_system(&load_system(p)?)?).0
                }
                _ => {
                    return Err(config(
                        "diffusion-fit: give exactly one of gamma_eff and system",
                    ))
                }
            };
            let (header, rows) = read_numeric_csv(&a.data)?;
            if header.len() != 2 {
                return Err(config(format!(
                    "{}: expected columns G1,S",
                    a.data.display()
                )));
            }
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
            let f = noon::fit_diffusion(&pts, a.delta, a.big_delta, gamma_eff)?;
            Ok(Artifact::Json(json!({
                "D": f.d,
                "sigma_D": f.sigma_d,
                "intercept": f.intercept,
                "gamma_eff": gamma_eff,
                "points": pts.len(),
            })))
        }
        NoonCmd::RfiFit(a) => {
            let (header, rows) = read_numeric_csv(&a.data)?;
            match header.len() {
                2 => {
                    let s: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
                    let nu0 = a.nu0.unwrap_or_else(|| peak(&s));
                    let p = noon::rfi_fit(&s, nu0)?;
                    Ok(Artifact::Json(json!({
                        "nu0": p.nu0,
                        "lambda_minus": p.lambda_minus,
                        "lambda_plus": p.lambda_plus,
                        "a": p.a,
                    })))
                }
                3 => {
                    let g: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r[0], r[1], r[2])).collect();
                    let nu0_h = a
                        .nu0_h
                        .unwrap_or_else(|| peak(&g.iter().map(|x| (x.0, x.2)).collect::<Vec<_>>()));
                    let nu0_p = a
                        .nu0_p
                        .unwrap_or_else(|| peak(&g.iter().map(|x| (x.1, x.2)).collect::<Vec<_>>()));
                    let p = noon::corr_fit(&g, nu0_h, nu0_p, a.lambda0)?;
                    Ok(Artifact::Json(json!({
                        "nu0_h": p.nu0_h,
                        "nu0_p": p.nu0_p,
                        "lambda0": p.lambda0,
                        "lambda_h": p.lambda_h,
                        "lambda_p": p.lambda_p,
                    })))
                }
                n => Err(config(format!(
                    "{}: expected 2 (nu,p) or 3 (nuH,nuP,p) columns, got {n}",
                    a.data.display()
                ))),
            }
        }
    }
}

/// Computes the artifact of a resolved command.
pub fn dispatch(cmd: &Command, seed: Option<u64>) -> CliResult<Artifact> {
    match cmd {
        Command::Aaqst(c) => aaqst(c, seed),
        Command::Sspt(c) => sspt_cmd(c, seed),
        Command::Elgi(c) => elgi(c),
        Command::Moments(c) => moments(c),
        Command::Dd(c) => dd_cmd(c),
        Command::Noon(c) => noon_cmd(c),
        Command::Run { .. } => Err(config("run: configs cannot nest")),
    }
}

fn write_atomic(path: &Path, text: &str) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = fs::write(&tmp, text).and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(config(format!("{}: {e}", path.display())));
    }
    Ok(())
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> CliResult<()> {
    let (mut cmd, seed, out, hash) = match &cli.command {
        Command::Run { config: path } => {
            let (cmd, cfg_seed, output, bytes) = load_config(path)?;
            let seed = cli.seed.or(cfg_seed);
            let mut h = bytes;
            if let (Some(cli_seed), true) = (cli.seed, cfg_seed != cli.seed) {
                h.extend_from_slice(format!("\nseed-override {cli_seed}").as_bytes());
            }
            (cmd, seed, cli.out.clone().or(output), sha256_hex(&h))
        }
        other => {
            let canonical = format!("{other:?}\nseed={:?}", cli.seed);
            (
                other.clone(),
                cli.seed,
                cli.out.clone(),
                sha256_hex(canonical.as_bytes()),
            )
        }
    };
    cmd.check_inputs()?;
    let artifact = dispatch(&cmd, seed)?;
    let meta = Meta {
        command: cmd.name(),
        config_sha256: hash,
        seed,
    };
    let text = render(&artifact, &meta);
    match &out {
        Some(p) => {
            write_atomic(p, &text)?;
            if !cli.quiet {
                eprintln!("nmrqi {}: wrote {}", meta.command, p.display());
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("nmrqi: error: {}", e.message());
            e.exit_code()
        }
    }
}

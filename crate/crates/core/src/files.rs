//! TOML schemas for spin systems, pulse-program models and gate matrices.
//!
//! Spin indices in every file are zero-based. Unknown keys are errors.
//!
//! Spin system:
//!
//! ```toml
//! n_spins = 3
//! offsets_hz = [412.0, -235.0, 118.0]
//! j_matrix_hz = [[0.0, 69.9, 47.5], [69.9, 0.0, -128.3], [47.5, -128.3, 0.0]]
//! labels = ["aaqst-ancilla", "system", "system"]
//! gammas = [251.815e6, 251.815e6, 251.815e6]   # optional, rad/T/s
//! ```
//!
//! Pulse-program model (delays may name a parameter or give seconds):
//!
//! ```toml
//! [[param]]
//! name = "tau1"
//! min = 0.0
//! max = 15e-3
//! value = 10.03e-3          # optional
//!
//! [[experiment]]
//! steps = [
//!   { delay = "tau1" },
//!   { pulse = "x", angle_deg = 90.0 },
//!   { pulse = "phase", phase_deg = 45.0, angle_deg = 180.0, targets = [1] },
//!   { delay = 2.5e-3 },
//! ]
//! ```
//!
//! Gate matrix: `re = [[...], ...]` and optional `im = [[...], ...]`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::aaqst::{TemplateStep, UnitaryModel};
use crate::error::{Error, Result};
use crate::quantum::{CMatrix, PulseAxis, PulseSpec, SpinRole, SpinSystem, Targets, C64};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    n_spins: usize,
    offsets_hz: Vec<f64>,
    j_matrix_hz: Vec<Vec<f64>>,
    labels: Vec<SpinRole>,
    #[serde(default)]
    gammas: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    param: Vec<ParamEntry>,
    experiment: Vec<ExperimentEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamEntry {
    name: String,
    min: f64,
    max: f64,
    #[serde(default)]
    value: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentEntry {
    steps: Vec<StepEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DelayValue {
    Param(String),
    Seconds(f64),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TargetsEntry {
    Named(String),
    Spins(Vec<usize>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum StepEntry {
    Delay {
        delay: DelayValue,
    },
    Pulse {
        pulse: String,
        angle_deg: f64,
        #[serde(default)]
        phase_deg: Option<f64>,
        #[serde(default)]
        targets: Option<TargetsEntry>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn field_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn parse_system(text: &str, path: &Path) -> Result<SpinSystem> {
    let f: SystemFile = parse_toml(text, path)?;
    let n = f.n_spins;
    if n == 0 {
        return Err(field_error(path, "n_spins: must be at least 1"));
    }
    if f.offsets_hz.len() != n {
        return Err(field_error(
            path,
            format!(
                "offsets_hz: expected {n} entries, found {}",
                f.offsets_hz.len()
            ),
        ));
    }
    if f.labels.len() != n {
        return Err(field_error(
            path,
            format!("labels: expected {n} entries, found {}", f.labels.len()),
        ));
    }
    if f.j_matrix_hz.len() != n || f.j_matrix_hz.iter().any(|r| r.len() != n) {
        return Err(field_error(
            path,
            format!("j_matrix_hz: expected a {n}x{n} array"),
        ));
    }
    let j = DMatrix::from_fn(n, n, |a, b| f.j_matrix_hz[a][b]);
    SpinSystem::new(f.offsets_hz, j, f.labels, f.gammas)
        .map_err(|e| field_error(path, e.to_string()))
}

pub fn load_system(path: &Path) -> Result<SpinSystem> {
    parse_system(&read(path)?, path)
}

fn axis_of(name: &str, phase_deg: Option<f64>, path: &Path, ctx: &str) -> Result<PulseAxis> {
    let axis = match name {
        "x" => PulseAxis::X,
        "y" => PulseAxis::Y,
        "z" => PulseAxis::Z,
        "-x" => PulseAxis::Phase(std::f64::consts::PI),
        "-y" => PulseAxis::Phase(-std::f64::consts::FRAC_PI_2),
        "phase" => {
            let p = phase_deg.ok_or_else(|| {
                field_error(path, format!("{ctx}: pulse = \"phase\" needs phase_deg"))
            })?;
            return Ok(PulseAxis::Phase(p.to_radians()));
        }
        other => {
            return Err(field_error(
                path,
                format!("{ctx}: unknown pulse axis {other:?} (expected x, y, z, -x, -y or phase)"),
            ))
        }
    };
    if phase_deg.is_some() {
        return Err(field_error(
            path,
            format!("{ctx}: phase_deg is only valid with pulse = \"phase\""),
        ));
    }
    Ok(axis)
}

pub fn parse_model(text: &str, path: &Path) -> Result<UnitaryModel> {
    let f: ModelFile = parse_toml(text, path)?;
    let names: Vec<String> = f.param.iter().map(|p| p.name.clone()).collect();
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(field_error(path, format!("param: duplicate name {n:?}")));
        }
    }
    let mut experiments = Vec::with_capacity(f.experiment.len());
    for (k, e) in f.experiment.iter().enumerate() {
        let mut steps = Vec::with_capacity(e.steps.len());
        for (s, step) in e.steps.iter().enumerate() {
            let ctx = format!("experiment[{k}].steps[{s}]");
            steps.push(match step {
                StepEntry::Delay {
                    delay: DelayValue::Param(name),
                } => {
                    let idx = names.iter().position(|n| n == name).ok_or_else(|| {
                        field_error(path, format!("{ctx}: unknown parameter {name:?}"))
                    })?;
                    TemplateStep::Param(idx)
                }
                StepEntry::Delay {
                    delay: DelayValue::Seconds(t),
                } => TemplateStep::Fixed(*t),
                StepEntry::Pulse {
                    pulse,
                    angle_deg,
                    phase_deg,
                    targets,
                } => {
                    let axis = axis_of(pulse, *phase_deg, path, &ctx)?;
                    let targets = match targets {
                        None => Targets::All,
                        Some(TargetsEntry::Named(s)) if s == "all" => Targets::All,
                        Some(TargetsEntry::Named(s)) => {
                            return Err(field_error(
                                path,
                                format!(
                                    "{ctx}.targets: expected \"all\" or a spin list, got {s:?}"
                                ),
                            ))
                        }
                        Some(TargetsEntry::Spins(v)) => Targets::Spins(v.clone()),
                    };
                    TemplateStep::Pulse(
                        PulseSpec::new(axis, angle_deg.to_radians(), targets)
                            .map_err(|e| field_error(path, format!("{ctx}: {e}")))?,
                    )
                }
            });
        }
        experiments.push(steps);
    }
    UnitaryModel::new(
        experiments,
        names,
        f.param.iter().map(|p| (p.min, p.max)).collect(),
        f.param.iter().map(|p| p.value).collect(),
    )
    .map_err(|e| field_error(path, e.to_string()))
}

pub fn load_model(path: &Path) -> Result<UnitaryModel> {
    parse_model(&read(path)?, path)
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<CMatrix> {
    let f: MatrixFile = parse_toml(text, path)?;
    let n = f.re.len();
    if n == 0 || f.re.iter().any(|r| r.len() != n) {
        return Err(field_error(path, "re: expected a non-empty square array"));
    }
    if let Some(im) = &f.im {
        if im.len() != n || im.iter().any(|r| r.len() != n) {
            return Err(field_error(path, format!("im: expected a {n}x{n} array")));
        }
    }
    Ok(CMatrix::from_fn(n, n, |a, b| {
        C64::new(f.re[a][b], f.im.as_ref().map_or(0.0, |im| im[a][b]))
    }))
}

pub fn load_matrix(path: &Path) -> Result<CMatrix> {
    parse_matrix(&read(path)?, path)
}

pub(crate) fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| field_error(path, format!("cannot read file: {e}")))
}

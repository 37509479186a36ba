//! Run configuration and its validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use covspde::levynoise::{LatticeConfig, NoiseSpec, NoiseSpecJson};
use covspde::models3d::{Family, ModelParams};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CovSolve,
    Spectrum,
    Green,
    Moments,
    NoiseSample,
    McVerify,
    FlCheck,
    Model,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CovSolve => "cov-solve",
            Command::Spectrum => "spectrum",
            Command::Green => "green",
            Command::Moments => "moments",
            Command::NoiseSample => "noise-sample",
            Command::McVerify => "mc-verify",
            Command::FlCheck => "fl-check",
            Command::Model => "model",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Emit {
    Symbol,
    Det,
    Green,
    Schwinger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum FlOp {
    #[serde(rename = "green")]
    #[value(name = "green")]
    Green,
    #[serde(rename = "identity2")]
    #[value(name = "identity2")]
    Identity2,
    #[serde(rename = "identityN")]
    #[value(name = "identityN")]
    IdentityN,
    #[serde(rename = "schwinger")]
    #[value(name = "schwinger")]
    Schwinger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum McCheck {
    Moments,
    TwoPoint,
    Char,
}

/// `family` is a catalog family, `scalar` (the operator `m` on one
/// component) or `klein-gordon` (fl-check only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub testfns: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emit: Option<Emit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op: Option<FlOp>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y1: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y2: Option<Vec<f64>>,
    /// Complex rates as `[re, im]` pairs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zetas: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ts: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<McCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    /// Catalog name or a path to a representation JSON file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rep: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reflection: Option<i8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpecJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default)]
    pub options: Options,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Error,
    Notice,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub level: Level,
    /// Dotted path of the offending key; empty for the whole document.
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(path: &str, message: impl Into<String>) -> Self {
        Self { level: Level::Error, path: path.into(), message: message.into() }
    }

    pub fn notice(path: &str, message: impl Into<String>) -> Self {
        Self { level: Level::Notice, path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {:?}: {}", self.level, self.path, self.message)
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, Diagnostic> {
    serde_json::from_str(text).map_err(|e| Diagnostic::error("", e.to_string()))
}

/// A resolved model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Catalog(ModelParams),
    Scalar(f64),
    KleinGordon(f64),
}

impl Model {
    /// Number of field components.
    pub fn dim(&self) -> usize {
        match self {
            Model::Catalog(p) => match p.family() {
                Family::Higgs3 | Family::Spinor | Family::DiracLeft | Family::DiracRight => 4,
                Family::Vector2 => 6,
            },
            Model::Scalar(_) | Model::KleinGordon(_) => 1,
        }
    }
}

fn mass_param(family: &str, params: &BTreeMap<String, f64>) -> Result<f64, String> {
    if let Some(k) = params.keys().find(|k| k.as_str() != "m") {
        return Err(format!("{family} has no parameter {k:?} (expected [\"m\"])"));
    }
    let m = params.get("m").copied().unwrap_or(1.0);
    if m.is_finite() && m > 0.0 {
        Ok(m)
    } else {
        Err(format!("{family} mass must be positive, got {m}"))
    }
}

pub fn resolve_model(cfg: &ModelConfig) -> Result<Model, String> {
    match cfg.family.as_str() {
        "scalar" => mass_param("scalar", &cfg.params).map(Model::Scalar),
        "klein-gordon" => mass_param("klein-gordon", &cfg.params).map(Model::KleinGordon),
        name => {
            let family: Family = name.parse().map_err(|e: covspde::Error| e.to_string())?;
            let pairs: Vec<(String, f64)> = cfg.params.iter().map(|(k, v)| (k.clone(), *v)).collect();
            ModelParams::from_pairs(family, &pairs).map(Model::Catalog).map_err(|e| e.to_string())
        }
    }
}

fn require<T>(diags: &mut Vec<Diagnostic>, value: &Option<T>, path: &str, command: Command) {
    if value.is_none() {
        diags.push(Diagnostic::error(path, format!("required by {}", command.name())));
    }
}

fn check_len(diags: &mut Vec<Diagnostic>, value: &Option<Vec<f64>>, path: &str, len: usize) {
    if let Some(v) = value {
        if v.len() != len {
            diags.push(Diagnostic::error(path, format!("expected {len} values, got {}", v.len())));
        } else if v.iter().any(|x| !x.is_finite()) {
            diags.push(Diagnostic::error(path, "values must be finite"));
        }
    }
}

/// Errors block the run; notices are reported alongside the result.
pub fn validate(command: Command, cfg: &RunConfig) -> Vec<Diagnostic> {
    let mut d = Vec::new();
    if let Some(v) = cfg.schema_version {
        if v != SCHEMA_VERSION {
            d.push(Diagnostic::error("schema_version", format!("unsupported version {v}, expected {SCHEMA_VERSION}")));
        }
    }

    let model = cfg.model.as_ref().and_then(|m| match resolve_model(m) {
        Ok(model) => Some(model),
        Err(e) => {
            d.push(Diagnostic::error("model", e));
            None
        }
    });
    if let Some(Model::KleinGordon(_)) = model {
        if command != Command::FlCheck || !matches!(cfg.options.op, Some(FlOp::Green | FlOp::Schwinger)) {
            d.push(Diagnostic::error("model.family", "klein-gordon is only available to fl-check green and schwinger"));
        }
    }

    if let Some(l) = &cfg.lattice {
        if let Err(e) = l.validate() {
            d.push(Diagnostic::error("lattice", e.to_string()));
        }
    }

    let noise_dim = cfg.noise.as_ref().and_then(|n| match NoiseSpec::from_json(n) {
        Ok(spec) => {
            if spec.was_symmetrized() {
                d.push(Diagnostic::notice("noise.atoms", "atom set was not symmetric; mirror atoms were added"));
            }
            Some(spec.dim())
        }
        Err(e) => {
            d.push(Diagnostic::error("noise", e.to_string()));
            None
        }
    });
    if let (Some(m), Some(n)) = (&model, noise_dim) {
        if m.dim() != n {
            d.push(Diagnostic::error("noise.N", format!("model has {} components, noise has {n}", m.dim())));
        }
    }

    let o = &cfg.options;
    let mc = cfg.mc.unwrap_or(McConfig { samples: None, seed: None });
    match command {
        Command::CovSolve => {
            require(&mut d, &cfg.rep, "rep", command);
            if let Some(r) = cfg.reflection {
                if r != 1 && r != -1 {
                    d.push(Diagnostic::error("reflection", format!("must be +1 or -1, got {r}")));
                }
            }
        }
        Command::Spectrum => require(&mut d, &cfg.model, "model", command),
        Command::Green => {
            require(&mut d, &cfg.model, "model", command);
            require(&mut d, &o.at, "options.at", command);
            check_len(&mut d, &o.at, "options.at", 3);
        }
        Command::Model => {
            require(&mut d, &cfg.model, "model", command);
            require(&mut d, &o.emit, "options.emit", command);
            if matches!(o.emit, Some(Emit::Green | Emit::Schwinger)) {
                require(&mut d, &o.at, "options.at", command);
            }
            check_len(&mut d, &o.at, "options.at", 3);
        }
        Command::Moments => {
            require(&mut d, &cfg.model, "model", command);
            require(&mut d, &cfg.noise, "noise", command);
            require(&mut d, &o.order, "options.order", command);
            require(&mut d, &o.testfns, "options.testfns", command);
            if let Some(n) = o.order {
                if !(1..=covspde::momenteng::MAX_MOMENT).contains(&n) {
                    d.push(Diagnostic::error("options.order", format!("must be in 1..={}", covspde::momenteng::MAX_MOMENT)));
                }
            }
        }
        Command::NoiseSample => {
            require(&mut d, &cfg.noise, "noise", command);
            require(&mut d, &cfg.lattice, "lattice", command);
            require(&mut d, &mc.seed, "mc.seed", command);
            if o.count == Some(0) {
                d.push(Diagnostic::error("options.count", "must be positive"));
            }
        }
        Command::McVerify => {
            require(&mut d, &cfg.model, "model", command);
            require(&mut d, &cfg.noise, "noise", command);
            require(&mut d, &cfg.lattice, "lattice", command);
            require(&mut d, &mc.samples, "mc.samples", command);
            require(&mut d, &mc.seed, "mc.seed", command);
            if let Some(s) = mc.samples {
                if s < covspde::latticemc::MIN_SAMPLES {
                    d.push(Diagnostic::error("mc.samples", format!("need at least {}", covspde::latticemc::MIN_SAMPLES)));
                }
            }
            if let Some(z) = o.z_max {
                if !(z > 0.0) {
                    d.push(Diagnostic::error("options.z_max", "must be positive"));
                }
            }
        }
        Command::FlCheck => {
            require(&mut d, &o.op, "options.op", command);
            match o.op {
                Some(FlOp::Green) => {
                    require(&mut d, &cfg.model, "model", command);
                    require(&mut d, &cfg.lattice, "lattice", command);
                    require(&mut d, &o.x, "options.x", command);
                    check_len(&mut d, &o.x, "options.x", 3);
                }
                Some(FlOp::Schwinger) => {
                    require(&mut d, &cfg.model, "model", command);
                    require(&mut d, &cfg.lattice, "lattice", command);
                    require(&mut d, &o.y1, "options.y1", command);
                    require(&mut d, &o.y2, "options.y2", command);
                    check_len(&mut d, &o.y1, "options.y1", 3);
                    check_len(&mut d, &o.y2, "options.y2", 3);
                }
                Some(op @ (FlOp::Identity2 | FlOp::IdentityN)) => {
                    require(&mut d, &o.zetas, "options.zetas", command);
                    require(&mut d, &o.ts, "options.ts", command);
                    if let (Some(z), Some(t)) = (&o.zetas, &o.ts) {
                        let ok = if op == FlOp::Identity2 { z.len() == 2 } else { !z.is_empty() && z.len() <= 8 };
                        if !ok || z.len() != t.len() {
                            d.push(Diagnostic::error("options.zetas", "need one rate per time (2 for identity2, 1 to 8 for identityN)"));
                        }
                    }
                }
                None => {}
            }
        }
    }
    if let Some(l) = &cfg.lattice {
        if l.d != 3 && matches!(command, Command::McVerify | Command::FlCheck | Command::Moments) {
            d.push(Diagnostic::error("lattice.D", "models live in three dimensions"));
        }
    }
    d
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.level == Level::Error)
}

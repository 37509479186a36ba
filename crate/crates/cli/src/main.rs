use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use covspde::levynoise::{LatticeConfig, NoiseSpecJson};
use covspde_cli::commands::run;
use covspde_cli::config::{
    has_errors, parse_config, validate, Command, Diagnostic, Emit, FlOp, McCheck, McConfig, ModelConfig, RunConfig,
    SCHEMA_VERSION,
};
use covspde_cli::output::to_canonical;
use covspde_cli::CliError;
use serde_json::json;

#[derive(Parser)]
#[command(name = "covspde", version, about = "Covariant SPDE toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Default)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct ModelArgs {
    /// Model family: higgs3, vector2, spinor, dirac-left, dirac-right, scalar, klein-gordon.
    #[arg(long)]
    model: Option<String>,
    /// Parameters as `key=value,...`.
    #[arg(long)]
    params: Option<String>,
}

#[derive(Args, Default)]
struct NoiseArgs {
    /// Noise specification: a JSON file or inline JSON.
    #[arg(long)]
    noise: Option<String>,
}

#[derive(Args, Default)]
struct LatticeArgs {
    /// `L,a`
    #[arg(long)]
    lattice: Option<String>,
    #[arg(long, default_value_t = 3)]
    dim: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Basis of covariant first-order operators for a representation.
    CovSolve {
        #[command(flatten)]
        common: Common,
        /// Catalog name (D0, D1, D0+D1, D1+D1, Dhalf+Dhalf) or representation JSON file.
        #[arg(long)]
        rep: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        reflection: Option<i8>,
    },
    /// Determinant and mass spectrum of a model.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Green function of a model at a momentum.
    Green {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// `p0,p1,p2`
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
    },
    /// Analytic moments of the solution field.
    Moments {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        testfns: Option<PathBuf>,
    },
    /// Draws white-noise samples on a lattice.
    NoiseSample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        count: Option<usize>,
        /// Binary dump of the samples.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Monte Carlo check of moments, two-point function or characteristic functional.
    McVerify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        check: Option<McCheck>,
        #[arg(long)]
        z_max: Option<f64>,
        /// Record the wall time (makes the output non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Fourier-Laplace checks.
    FlCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        op: Option<FlOp>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        y1: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        y2: Option<String>,
        /// Complex rates `re:im,re:im,...`.
        #[arg(long, allow_hyphen_values = true)]
        zetas: Option<String>,
        /// Times `t1,t2,...`.
        #[arg(long, allow_hyphen_values = true)]
        ts: Option<String>,
    },
    /// Symbol, determinant, Green or Schwinger function of a catalog model.
    Model {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        params: Option<String>,
        #[arg(long, value_enum)]
        emit: Option<Emit>,
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Validates a configuration for a command without running it.
    Validate {
        #[arg(long = "for", value_enum)]
        command: Command,
        #[arg(long)]
        config: PathBuf,
    },
}

type Diags = Vec<Diagnostic>;

fn floats(path: &str, s: &str, diags: &mut Diags) -> Option<Vec<f64>> {
    match s.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>() {
        Ok(v) => Some(v),
        Err(_) => {
            diags.push(Diagnostic::error(path, format!("expected comma-separated numbers, got {s:?}")));
            None
        }
    }
}

fn params(s: &str, diags: &mut Diags) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for kv in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        match kv.split_once('=').map(|(k, v)| (k.trim(), v.trim().parse::<f64>())) {
            Some((k, Ok(v))) => {
                out.insert(k.to_string(), v);
            }
            _ => diags.push(Diagnostic::error("model.params", format!("expected key=value, got {kv:?}"))),
        }
    }
    out
}

fn apply_model(cfg: &mut RunConfig, family: Option<String>, p: Option<String>, diags: &mut Diags) {
    if let Some(f) = family {
        cfg.model = Some(ModelConfig { family: f, params: BTreeMap::new() });
    }
    if let Some(p) = p {
        match cfg.model.as_mut() {
            Some(m) => m.params.extend(params(&p, diags)),
            None => diags.push(Diagnostic::error("model.params", "parameters given without a model")),
        }
    }
}

fn apply_noise(cfg: &mut RunConfig, noise: NoiseArgs, diags: &mut Diags) {
    let Some(src) = noise.noise else { return };
    let text = if src.trim_start().starts_with('{') {
        Ok(src)
    } else {
        std::fs::read_to_string(&src).map_err(|e| format!("{src}: {e}"))
    };
    match text.and_then(|t| serde_json::from_str::<NoiseSpecJson>(&t).map_err(|e| e.to_string())) {
        Ok(j) => cfg.noise = Some(j),
        Err(e) => diags.push(Diagnostic::error("noise", e)),
    }
}

fn apply_lattice(cfg: &mut RunConfig, lat: LatticeArgs, diags: &mut Diags) {
    let Some(s) = lat.lattice else { return };
    match s.split_once(',').map(|(l, a)| (l.trim().parse::<usize>(), a.trim().parse::<f64>())) {
        Some((Ok(l), Ok(a))) => cfg.lattice = Some(LatticeConfig { d: lat.dim, l, a }),
        _ => diags.push(Diagnostic::error("lattice", format!("expected L,a, got {s:?}"))),
    }
}

fn apply_mc(cfg: &mut RunConfig, samples: Option<usize>, seed: Option<u64>) {
    if samples.is_none() && seed.is_none() {
        return;
    }
    let mc = cfg.mc.get_or_insert(McConfig { samples: None, seed: None });
    mc.samples = samples.or(mc.samples);
    mc.seed = seed.or(mc.seed);
}

fn load(common: &Common, diags: &mut Diags) -> RunConfig {
    let Some(path) = &common.config else { return RunConfig::default() };
    let parsed = std::fs::read_to_string(path)
        .map_err(|e| Diagnostic::error("", format!("{}: {e}", path.display())))
        .and_then(|t| parse_config(&t));
    match parsed {
        Ok(mut cfg) => {
            // relative file references are taken from the config's directory
            let base = path.parent().unwrap_or(Path::new(""));
            if let Some(t) = cfg.options.testfns.as_mut().filter(|t| t.is_relative()) {
                *t = base.join(&*t);
            }
            cfg
        }
        Err(d) => {
            diags.push(d);
            RunConfig::default()
        }
    }
}

fn build(cmd: Cmd, diags: &mut Diags) -> (Command, RunConfig) {
    let set = |slot: &mut Option<Vec<f64>>, path: &str, v: Option<String>, diags: &mut Diags| {
        if let Some(s) = v {
            *slot = floats(path, &s, diags);
        }
    };
    match cmd {
        Cmd::CovSolve { common, rep, reflection } => {
            let mut cfg = finish(load(&common, diags), &common);
            cfg.rep = rep.or(cfg.rep);
            cfg.reflection = reflection.or(cfg.reflection);
            (Command::CovSolve, cfg)
        }
        Cmd::Spectrum { common, model } => {
            let mut cfg = finish(load(&common, diags), &common);
            apply_model(&mut cfg, model.model, model.params, diags);
            (Command::Spectrum, cfg)
        }
        Cmd::Green { common, model, at } => {
            let mut cfg = finish(load(&common, diags), &common);
            apply_model(&mut cfg, model.model, model.params, diags);
            set(&mut cfg.options.at, "options.at", at, diags);
            (Command::Green, cfg)
        }
        Cmd::Moments { common, model, noise, order, testfns } => {
            let mut cfg = finish(load(&common, diags), &common);
            apply_model(&mut cfg, model.model, model.params, diags);
            apply_noise(&mut cfg, noise, diags);
            cfg.options.order = order.or(cfg.options.order);
            cfg.options.testfns = testfns.or(cfg.options.testfns);
            (Command::Moments, cfg)
        }
        Cmd::NoiseSample { common, noise, lattice, seed, count, dump } => {
            let mut cfg = finish(load(&common, diags), &common);
            apply_noise(&mut cfg, noise, diags);
            apply_lattice(&mut cfg, lattice, diags);
            apply_mc(&mut cfg, None, seed);
            cfg.options.count = count.or(cfg.options.count);
            cfg.options.dump = dump.or(cfg.options.dump);
            (Command::NoiseSample, cfg)
        }
        Cmd::McVerify { common, model, noise, lattice, samples, seed, check, z_max, timing } => {
            let mut cfg = finish(load(&common, diags), &common);
            apply_model(&mut cfg, model.model, model.params, diags);
            apply_noise(&mut cfg, noise, diags);
            apply_lattice(&mut cfg, lattice, diags);
            apply_mc(&mut cfg, samples, seed);
            cfg.options.check = check.or(cfg.options.check);
            cfg.options.z_max = z_max.or(cfg.options.z_max);
            if timing {
                cfg.options.timing = Some(true);
            }
            (Command::McVerify, cfg)
        }
        Cmd::FlCheck { common, op, model, noise, lattice, x, y1, y2, zetas, ts } => {
            let mut cfg = finish(load(&common, diags), &common);
            cfg.options.op = op.or(cfg.options.op);
            apply_model(&mut cfg, model.model, model.params, diags);
            apply_noise(&mut cfg, noise, diags);
            apply_lattice(&mut cfg, lattice, diags);
            set(&mut cfg.options.x, "options.x", x, diags);
            set(&mut cfg.options.y1, "options.y1", y1, diags);
            set(&mut cfg.options.y2, "options.y2", y2, diags);
            set(&mut cfg.options.ts, "options.ts", ts, diags);
            if let Some(z) = zetas {
                let parsed: Option<Vec<[f64; 2]>> = z
                    .split(',')
                    .map(|p| {
                        let (re, im) = p.split_once(':').unwrap_or((p, "0"));
                        Some([re.trim().parse().ok()?, im.trim().parse().ok()?])
                    })
                    .collect();
                match parsed {
                    Some(v) => cfg.options.zetas = Some(v),
                    None => diags.push(Diagnostic::error("options.zetas", format!("expected re:im,..., got {z:?}"))),
                }
            }
            (Command::FlCheck, cfg)
        }
        Cmd::Model { common, family, params, emit, at, noise } => {
            let mut cfg = finish(load(&common, diags), &common);
            apply_model(&mut cfg, family, params, diags);
            apply_noise(&mut cfg, noise, diags);
            cfg.options.emit = emit.or(cfg.options.emit);
            set(&mut cfg.options.at, "options.at", at, diags);
            (Command::Model, cfg)
        }
        Cmd::Validate { .. } => unreachable!("handled before"),
    }
}

fn finish(mut cfg: RunConfig, common: &Common) -> RunConfig {
    if let Some(out) = &common.out {
        cfg.output = Some(out.clone());
    }
    cfg
}

fn report_invalid(diags: &[Diagnostic]) -> ExitCode {
    let doc = json!({ "schema_version": SCHEMA_VERSION, "status": "invalid", "diagnostics": diags });
    eprint!("{}", to_canonical(&doc).expect("serializable"));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Cmd::Validate { command, config } = &cli.command {
        let mut diags = Vec::new();
        let cfg = load(&Common { config: Some(config.clone()), out: None }, &mut diags);
        if diags.is_empty() {
            diags = validate(*command, &cfg);
        }
        let doc = json!({ "schema_version": SCHEMA_VERSION, "valid": !has_errors(&diags), "diagnostics": diags });
        print!("{}", to_canonical(&doc).expect("serializable"));
        return if has_errors(&diags) { ExitCode::from(2) } else { ExitCode::SUCCESS };
    }

    let mut diags = Vec::new();
    let (command, cfg) = build(cli.command, &mut diags);
    diags.extend(validate(command, &cfg));
    if has_errors(&diags) {
        return report_invalid(&diags);
    }
    let result = match run(command, &cfg) {
        Ok(r) => r,
        Err(CliError::Invalid(d)) => return report_invalid(&d),
        Err(e) => {
            let doc = json!({ "schema_version": SCHEMA_VERSION, "status": "numeric-failure", "error": e.to_string() });
            eprint!("{}", to_canonical(&doc).expect("serializable"));
            return ExitCode::from(e.exit_code());
        }
    };
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command.name(),
        "config": cfg,
        "notices": diags,
        "result": result,
    });
    let text = match to_canonical(&doc) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("serialization failed: {e}");
            return ExitCode::from(3);
        }
    };
    match &cfg.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                return report_invalid(&[Diagnostic::error("output", format!("{}: {e}", path.display()))]);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}

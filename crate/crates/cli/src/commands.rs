//! Command bodies. Each returns the `result` object of the output document.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use covspde::covsolve::{commutant_mass_terms, reflection_covariant_subspace, solve_cov_space, CovOperator};
use covspde::flwightman::{
    conv_identity2, conv_identity_n, schwinger_fl_check, verify_fl_green, GreenModel, FL_GREEN_TOL, SCHWINGER_TOL,
};
use covspde::latticemc::{
    empirical_char_functional, empirical_moments, empirical_two_point, moment_probes, two_point_probes, McReport,
    PROBE_SET_VERSION,
};
use covspde::levynoise::{dump_samples, sample_noise_batch, FieldKind, FieldSample, LatticeConfig, NoiseSpec};
use covspde::linalg::to_row_major;
use covspde::momenteng::{bell, schwinger2, solution_moments};
use covspde::repcore::{build_catalog, CatalogRep, Representation, RepresentationJson};
use covspde::symcalc::{complex_matrix_json, det_poly, invert_symbol, matrix_polynomial_json, symbol, MassSpectrum};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::{resolve_model, Command, Emit, FlOp, McCheck, Model, RunConfig};
use crate::CliError;

type Out = Result<Value, CliError>;

pub const CONV2_TOL: f64 = 1e-8;
pub const CONVN_TOL: f64 = 1e-7;
pub const DEFAULT_Z_MAX: f64 = 5.0;

pub fn run(command: Command, cfg: &RunConfig) -> Out {
    match command {
        Command::CovSolve => cov_solve(cfg),
        Command::Spectrum => spectrum(cfg),
        Command::Green => green(cfg, cfg.options.at.as_deref().unwrap_or_default()),
        Command::Moments => moments(cfg),
        Command::NoiseSample => noise_sample(cfg),
        Command::McVerify => mc_verify(cfg),
        Command::FlCheck => fl_check(cfg),
        Command::Model => model(cfg),
    }
}

fn model_of(cfg: &RunConfig) -> Result<Model, CliError> {
    let m = cfg.model.as_ref().ok_or_else(|| CliError::invalid("model", "missing"))?;
    resolve_model(m).map_err(|e| CliError::invalid("model", e))
}

fn scalar_operator(m: f64) -> Result<CovOperator<f64>, CliError> {
    let rep = Arc::new(build_catalog::<f64>(CatalogRep::D0)?);
    Ok(CovOperator::new(rep, vec![DMatrix::zeros(1, 1); 3], DMatrix::from_element(1, 1, m))?)
}

fn operator(cfg: &RunConfig) -> Result<CovOperator<f64>, CliError> {
    match model_of(cfg)? {
        Model::Catalog(p) => Ok(p.build()?),
        Model::Scalar(m) => scalar_operator(m),
        Model::KleinGordon(_) => Err(CliError::invalid("model.family", "klein-gordon has no first-order operator")),
    }
}

fn noise(cfg: &RunConfig, n: usize) -> Result<NoiseSpec, CliError> {
    match &cfg.noise {
        Some(j) => NoiseSpec::from_json(j).map_err(|e| CliError::invalid("noise", e.to_string())),
        None => Ok(NoiseSpec::gaussian(DMatrix::identity(n, n))?),
    }
}

fn lattice(cfg: &RunConfig) -> Result<LatticeConfig, CliError> {
    let l = cfg.lattice.ok_or_else(|| CliError::invalid("lattice", "missing"))?;
    l.validate().map_err(|e| CliError::invalid("lattice", e.to_string()))?;
    Ok(l)
}

fn seed(cfg: &RunConfig) -> Result<u64, CliError> {
    cfg.mc.and_then(|m| m.seed).ok_or_else(|| CliError::invalid("mc.seed", "missing"))
}

fn load_rep(name: &str) -> Result<Representation<f64>, CliError> {
    if let Ok(which) = name.parse::<CatalogRep>() {
        return Ok(build_catalog(which)?);
    }
    let text = std::fs::read_to_string(name)
        .map_err(|e| CliError::invalid("rep", format!("{name:?} is neither a catalog name nor a readable file: {e}")))?;
    let json: RepresentationJson = serde_json::from_str(&text).map_err(|e| CliError::invalid("rep", e.to_string()))?;
    Representation::from_json(&json).map_err(|e| CliError::invalid("rep", e.to_string()))
}

fn cov_solve(cfg: &RunConfig) -> Out {
    let rep = Arc::new(load_rep(cfg.rep.as_deref().unwrap_or_default())?);
    let basis = solve_cov_space(&rep);
    let residual = basis.iter().map(|b| b.covariance_residual()).fold(0.0, f64::max);
    let mut out = json!({
        "rep": rep.label(),
        "N": rep.dim(),
        "D": rep.group().dim(),
        "dimension": basis.len(),
        "basis": basis.iter().map(|op| op.b().iter().map(to_row_major).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "max_covariance_residual": residual,
        "mass_terms": commutant_mass_terms(&rep).iter().map(to_row_major).collect::<Vec<_>>(),
    });
    if let Some(sign) = cfg.reflection {
        let r = rep.reflection_image(sign)?;
        let sub = reflection_covariant_subspace(&rep, &r);
        out["reflection"] = json!({
            "sign": sign,
            "image": to_row_major(&r),
            "dimension": sub.len(),
            "weights": sub.iter().map(|v| v.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>(),
        });
    }
    Ok(out)
}

/// `{degree: coefficient}` in `s = p^2`.
fn radial_map(coeffs: &[f64]) -> BTreeMap<String, f64> {
    coeffs.iter().enumerate().map(|(k, c)| (k.to_string(), *c)).collect()
}

fn spectrum(cfg: &RunConfig) -> Out {
    let op = operator(cfg)?;
    let sym = symbol(&op);
    let det = det_poly(&sym);
    let spec = MassSpectrum::from_radial(&det.radial)?;
    Ok(json!({
        "det": radial_map(det.radial.coeffs()),
        "spectrum": spec.to_json(),
        "real_masses2": spec.real_masses2(),
        "symbol": matrix_polynomial_json(&sym),
    }))
}

fn green(cfg: &RunConfig, at: &[f64]) -> Out {
    let op = operator(cfg)?;
    let g = invert_symbol(&op, false)?;
    Ok(json!({
        "at": at,
        "value": complex_matrix_json(&g.eval(at)),
        "numerator": matrix_polynomial_json(&g.numerator),
        "denominator": radial_map(g.denominator.coeffs()),
    }))
}

fn model(cfg: &RunConfig) -> Out {
    let op = operator(cfg)?;
    let at = cfg.options.at.as_deref().unwrap_or_default();
    match cfg.options.emit {
        Some(Emit::Symbol) => Ok(json!({ "symbol": matrix_polynomial_json(&symbol(&op)) })),
        Some(Emit::Det) => {
            let det = det_poly(&symbol(&op));
            Ok(json!({
                "det": radial_map(det.radial.coeffs()),
                "radial_defect": det.radial_defect,
            }))
        }
        Some(Emit::Green) => green(cfg, at),
        Some(Emit::Schwinger) => {
            let spec = noise(cfg, op.dim())?;
            let s = schwinger2(&op, &spec)?;
            Ok(json!({
                "at": at,
                "value": complex_matrix_json(&s.eval(at)),
                "gaussian": complex_matrix_json(&s.gaussian(at)),
                "poisson": complex_matrix_json(&s.poisson(at)),
            }))
        }
        None => Err(CliError::invalid("options.emit", "missing")),
    }
}

/// Test functions for `moments`: row-major `site, component` values.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctions {
    pub lattice: LatticeConfig,
    #[serde(rename = "N")]
    pub n: usize,
    pub functions: Vec<Vec<f64>>,
}

fn load_testfns(path: &Path, n: usize) -> Result<Vec<FieldSample>, CliError> {
    let bad = |m: String| CliError::invalid("options.testfns", m);
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    let t: TestFunctions = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if t.n != n {
        return Err(bad(format!("test functions have {} components, model has {n}", t.n)));
    }
    t.lattice.validate().map_err(|e| bad(e.to_string()))?;
    t.functions
        .into_iter()
        .map(|v| FieldSample::from_values(t.lattice, n, v, FieldKind::Test).map_err(|e| bad(e.to_string())))
        .collect()
}

fn moments(cfg: &RunConfig) -> Out {
    let op = operator(cfg)?;
    let spec = noise(cfg, op.dim())?;
    let order = cfg.options.order.unwrap_or(0);
    let path = cfg.options.testfns.as_deref().ok_or_else(|| CliError::invalid("options.testfns", "missing"))?;
    let fs = load_testfns(path, op.dim())?;
    if fs.len() < order {
        return Err(CliError::invalid("options.testfns", format!("order {order} needs {order} test functions, got {}", fs.len())));
    }
    let rows = (1..=order)
        .map(|k| {
            Ok(json!({
                "order": k,
                "value": solution_moments(&op, &spec, &fs[..k])?,
                "terms": bell(k as u32),
            }))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(json!({ "moments": rows }))
}

fn noise_sample(cfg: &RunConfig) -> Out {
    let spec = noise(cfg, 1)?;
    let lat = lattice(cfg)?;
    let seed = seed(cfg)?;
    let samples = sample_noise_batch(&spec, &lat, seed, cfg.options.count.unwrap_or(1));
    let (header, bytes) = dump_samples(&samples, seed)?;
    if let Some(path) = &cfg.options.dump {
        std::fs::write(path, bytes).map_err(|e| CliError::invalid("options.dump", format!("{}: {e}", path.display())))?;
    }
    let summary: Vec<Value> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let nonzero = (0..lat.sites()).filter(|&x| s.site(x).iter().any(|&v| v != 0.0)).count();
            json!({
                "index": i,
                "sum": s.values.iter().sum::<f64>(),
                "norm2": s.norm2(),
                "nonzero_sites": nonzero,
            })
        })
        .collect();
    Ok(json!({
        "header": header,
        "dump": cfg.options.dump,
        "samples": summary,
    }))
}

fn mc_verify(cfg: &RunConfig) -> Out {
    let op = operator(cfg)?;
    let spec = noise(cfg, op.dim())?;
    let lat = lattice(cfg)?;
    let seed = seed(cfg)?;
    let samples = cfg.mc.and_then(|m| m.samples).ok_or_else(|| CliError::invalid("mc.samples", "missing"))?;
    let n = op.dim();
    let check = cfg.options.check.unwrap_or(McCheck::Moments);
    let report: McReport = match check {
        McCheck::Moments => empirical_moments(&op, &spec, &moment_probes(&lat, n), samples, seed)?,
        McCheck::TwoPoint => empirical_two_point(&op, &spec, lat, &two_point_probes(&lat, n), samples, seed)?,
        McCheck::Char => {
            let fs: Vec<FieldSample> = moment_probes(&lat, n).into_iter().take(5).map(|p| p[0].scaled(0.5)).collect();
            empirical_char_functional(&op, &spec, &fs, samples, seed)?
        }
    };
    let z_max = cfg.options.z_max.unwrap_or(DEFAULT_Z_MAX);
    let passes = report.passes(z_max);
    let mut out = serde_json::to_value(&report).map_err(covspde::Error::from)?;
    // wall time would break byte-identical reruns
    if !cfg.options.timing.unwrap_or(false) {
        out["wall_time_s"] = Value::Null;
    }
    out["check"] = serde_json::to_value(check).map_err(covspde::Error::from)?;
    out["z_max"] = json!(z_max);
    out["passes"] = json!(passes);
    out["probe_set_version"] = json!(PROBE_SET_VERSION);
    Ok(out)
}

fn green_model(cfg: &RunConfig) -> Result<GreenModel, CliError> {
    match model_of(cfg)? {
        Model::KleinGordon(m) => Ok(GreenModel::klein_gordon(m)),
        _ => Ok(GreenModel::Operator(operator(cfg)?)),
    }
}

fn complex_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn fl_check(cfg: &RunConfig) -> Out {
    let o = &cfg.options;
    let zetas = || -> Vec<Complex64> { o.zetas.iter().flatten().map(|[re, im]| Complex64::new(*re, *im)).collect() };
    let ts = o.ts.clone().unwrap_or_default();
    match o.op {
        Some(FlOp::Green) => {
            let model = green_model(cfg)?;
            let r = verify_fl_green(&model, o.x.as_deref().unwrap_or_default(), &lattice(cfg)?)?;
            Ok(json!({
                "op": "green",
                "lhs": complex_matrix_json(&r.lhs),
                "rhs": complex_matrix_json(&r.rhs),
                "residual": r.residual,
                "pass": r.residual < FL_GREEN_TOL,
                "tolerance": FL_GREEN_TOL,
                "quadrature": {
                    "regulator_width": r.eps,
                    "error": r.quadrature_error,
                    "radial_cutoff": r.radial_cutoff,
                    "angles": r.angles,
                },
            }))
        }
        Some(op @ (FlOp::Identity2 | FlOp::IdentityN)) => {
            let z = zetas();
            let (r, tol, name) = if op == FlOp::Identity2 {
                (conv_identity2(z[0], z[1], ts[0], ts[1])?, CONV2_TOL, "identity2")
            } else {
                (conv_identity_n(&z, &ts)?, CONVN_TOL, "identityN")
            };
            Ok(json!({
                "op": name,
                "lhs": complex_pair(r.lhs),
                "rhs": complex_pair(r.rhs),
                "residual": r.residual,
                "pass": r.residual < tol,
                "tolerance": tol,
            }))
        }
        Some(FlOp::Schwinger) => {
            let model = green_model(cfg)?;
            let spec = noise(cfg, model.n())?;
            let r = schwinger_fl_check(
                &model,
                &spec.second_moment(),
                o.y1.as_deref().unwrap_or_default(),
                o.y2.as_deref().unwrap_or_default(),
                &lattice(cfg)?,
            )?;
            Ok(json!({
                "op": "schwinger",
                "lhs": complex_matrix_json(&r.direct),
                "rhs": complex_matrix_json(&r.reconstructed),
                "residual": r.residual,
                "pass": r.residual < SCHWINGER_TOL,
                "tolerance": SCHWINGER_TOL,
                "quadrature": {
                    "regulator_width": r.eps,
                    "error": r.quadrature_error,
                },
            }))
        }
        None => Err(CliError::invalid("options.op", "missing")),
    }
}

//! The D = 3 catalog: Higgs-like (D0+D1), interacting vectors (D1+D1),
//! the D1/2+D1/2 spinor family and the quaternionic Dirac operators, with
//! comparisons against the printed closed forms.

pub mod printed;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::covsolve::{commutant_mass_terms, solve_cov_space, CovOperator};
use crate::error::{Error, Result};
use crate::levynoise::NoiseSpec;
use crate::linalg::projection_residual;
use crate::momenteng::schwinger2;
use crate::repcore::{build_catalog, CatalogRep};
use crate::symcalc::{det_poly, invert_symbol, mass_spectrum, sample_points, symbol, Poly};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Higgs3,
    Vector2,
    Spinor,
    DiracLeft,
    DiracRight,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Higgs3, Family::Vector2, Family::Spinor, Family::DiracLeft, Family::DiracRight];

    pub fn name(self) -> &'static str {
        match self {
            Family::Higgs3 => "higgs3",
            Family::Vector2 => "vector2",
            Family::Spinor => "spinor",
            Family::DiracLeft => "dirac_left",
            Family::DiracRight => "dirac_right",
        }
    }

    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Family::Higgs3 => &["a", "b", "c", "m0", "m1"],
            Family::Vector2 => &["a", "b", "c", "d", "m1", "m2"],
            Family::Spinor => &["a", "b", "c", "d", "m"],
            Family::DiracLeft | Family::DiracRight => &[],
        }
    }

    pub fn rep(self) -> CatalogRep {
        match self {
            Family::Higgs3 | Family::DiracLeft | Family::DiracRight => CatalogRep::D0D1,
            Family::Vector2 => CatalogRep::D1D1,
            Family::Spinor => CatalogRep::DhalfDhalf,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelParams {
    Higgs3 { a: f64, b: f64, c: f64, m0: f64, m1: f64 },
    Vector2 { a: f64, b: f64, c: f64, d: f64, m1: f64, m2: f64 },
    Spinor { a: f64, b: f64, c: f64, d: f64, m: f64 },
    DiracLeft,
    DiracRight,
}

impl ModelParams {
    /// Defaults: an admissible Higgs point (`c = 0`), the Proca point of the
    /// vector family and a spinor with `b = 0`.
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Higgs3 => ModelParams::Higgs3 { a: 1.0, b: 1.0, c: 0.0, m0: 1.0, m1: 1.0 },
            Family::Vector2 => ModelParams::proca(1.0),
            Family::Spinor => ModelParams::Spinor { a: 1.0, b: 0.0, c: 0.0, d: 0.0, m: 1.0 },
            Family::DiracLeft => ModelParams::DiracLeft,
            Family::DiracRight => ModelParams::DiracRight,
        }
    }

    /// `a = d = 0`, `b = 1`, `c = -1`, `m1 = m2 = m`.
    pub fn proca(m: f64) -> Self {
        ModelParams::Vector2 { a: 0.0, b: 1.0, c: -1.0, d: 0.0, m1: m, m2: m }
    }

    /// Defaults overridden by `key=value` pairs; unknown keys are errors.
    pub fn from_pairs(family: Family, pairs: &[(String, f64)]) -> Result<Self> {
        let keys = family.keys();
        let mut vals = ModelParams::default_for(family).values();
        for (k, v) in pairs {
            let i = keys
                .iter()
                .position(|x| x == k)
                .ok_or_else(|| Error::Invalid(format!("{family} has no parameter {k:?} (expected {keys:?})")))?;
            if !v.is_finite() {
                return Err(Error::Invalid(format!("parameter {k} must be finite")));
            }
            vals[i] = *v;
        }
        Ok(ModelParams::from_values(family, &vals))
    }

    /// Parses `a=1,b=0.5,...`.
    pub fn parse(family: &str, spec: &str) -> Result<Self> {
        let family: Family = family.parse()?;
        let pairs = spec
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|kv| {
                let (k, v) = kv.split_once('=').ok_or_else(|| Error::Invalid(format!("expected key=value, got {kv:?}")))?;
                let v: f64 = v.trim().parse().map_err(|_| Error::Invalid(format!("{v:?} is not a number")))?;
                Ok((k.trim().to_string(), v))
            })
            .collect::<Result<Vec<_>>>()?;
        ModelParams::from_pairs(family, &pairs)
    }

    fn from_values(family: Family, v: &[f64]) -> Self {
        match family {
            Family::Higgs3 => ModelParams::Higgs3 { a: v[0], b: v[1], c: v[2], m0: v[3], m1: v[4] },
            Family::Vector2 => ModelParams::Vector2 { a: v[0], b: v[1], c: v[2], d: v[3], m1: v[4], m2: v[5] },
            Family::Spinor => ModelParams::Spinor { a: v[0], b: v[1], c: v[2], d: v[3], m: v[4] },
            Family::DiracLeft => ModelParams::DiracLeft,
            Family::DiracRight => ModelParams::DiracRight,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match *self {
            ModelParams::Higgs3 { a, b, c, m0, m1 } => vec![a, b, c, m0, m1],
            ModelParams::Vector2 { a, b, c, d, m1, m2 } => vec![a, b, c, d, m1, m2],
            ModelParams::Spinor { a, b, c, d, m } => vec![a, b, c, d, m],
            ModelParams::DiracLeft | ModelParams::DiracRight => vec![],
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ModelParams::Higgs3 { .. } => Family::Higgs3,
            ModelParams::Vector2 { .. } => Family::Vector2,
            ModelParams::Spinor { .. } => Family::Spinor,
            ModelParams::DiracLeft => Family::DiracLeft,
            ModelParams::DiracRight => Family::DiracRight,
        }
    }

    /// The real matrix `L(p)` with `sigma(p) = i L(p) + M`.
    pub fn derivative_part(&self, p: &[f64]) -> DMatrix<f64> {
        let (p0, p1, p2) = (p[0], p[1], p[2]);
        match *self {
            ModelParams::Higgs3 { a, b, c, .. } => higgs_pattern(a, b, c, p),
            ModelParams::DiracLeft => higgs_pattern(-1.0, 1.0, 1.0, p),
            ModelParams::DiracRight => higgs_pattern(-1.0, 1.0, -1.0, p),
            ModelParams::Vector2 { a, b, c, d, .. } => DMatrix::from_row_slice(6, 6, &[
                0.0, -a * p2, a * p1, 0.0, -b * p2, b * p1,
                a * p2, 0.0, -a * p0, b * p2, 0.0, -b * p0,
                -a * p1, a * p0, 0.0, -b * p1, b * p0, 0.0,
                0.0, -c * p2, c * p1, 0.0, -d * p2, d * p1,
                c * p2, 0.0, -c * p0, d * p2, 0.0, -d * p0,
                -c * p1, c * p0, 0.0, -d * p1, d * p0, 0.0,
            ]),
            ModelParams::Spinor { a, b, c, d, .. } => DMatrix::from_row_slice(4, 4, &[
                c * p0 - d * p1 - a * p2, -d * p0 - c * p1 - b * p2, a * p0 - b * p1 + c * p2, b * p0 + a * p1 - d * p2,
                -d * p0 - c * p1 + b * p2, -c * p0 + d * p1 - a * p2, -b * p0 - a * p1 - d * p2, a * p0 - b * p1 - c * p2,
                a * p0 + b * p1 + c * p2, b * p0 - a * p1 - d * p2, -c * p0 - d * p1 + a * p2, d * p0 - c * p1 + b * p2,
                -b * p0 + a * p1 - d * p2, a * p0 + b * p1 - c * p2, d * p0 - c * p1 - b * p2, c * p0 + d * p1 + a * p2,
            ]),
        }
    }

    pub fn mass(&self) -> DMatrix<f64> {
        match *self {
            ModelParams::Higgs3 { m0, m1, .. } => DMatrix::from_diagonal(&DVector::from_vec(vec![m0, m1, m1, m1])),
            ModelParams::Vector2 { m1, m2, .. } => DMatrix::from_diagonal(&DVector::from_vec(vec![m1, m1, m1, m2, m2, m2])),
            ModelParams::Spinor { m, .. } => DMatrix::identity(4, 4) * m,
            ModelParams::DiracLeft | ModelParams::DiracRight => DMatrix::zeros(4, 4),
        }
    }

    /// Operator in the catalog basis of the family's representation,
    /// validated against the covariance equations.
    pub fn build(&self) -> Result<CovOperator<f64>> {
        let rep = Arc::new(build_catalog::<f64>(self.family().rep())?);
        let b = (0..3)
            .map(|j| {
                let mut e = [0.0; 3];
                e[j] = 1.0;
                self.derivative_part(&e)
            })
            .collect();
        CovOperator::new(rep, b, self.mass())
    }
}

fn higgs_pattern(a: f64, b: f64, c: f64, p: &[f64]) -> DMatrix<f64> {
    let (p0, p1, p2) = (p[0], p[1], p[2]);
    DMatrix::from_row_slice(4, 4, &[
        0.0, a * p0, a * p1, a * p2,
        b * p0, 0.0, -c * p2, c * p1,
        b * p1, c * p2, 0.0, -c * p0,
        b * p2, -c * p1, c * p0, 0.0,
    ])
}

/// Distance of an operator from the solved covariant span and of its mass
/// term from the commutant.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpanReport {
    pub derivative_residual: f64,
    pub mass_residual: f64,
}

/// Relative distance of `v` from the span of `cols`.
fn span_residual(cols: &[DVector<f64>], v: &DVector<f64>) -> f64 {
    let scale = v.norm().max(1e-300);
    if cols.is_empty() {
        return v.norm() / scale;
    }
    let q = DMatrix::from_columns(cols).qr().q();
    let onb: Vec<DVector<f64>> = q.column_iter().map(|c| c.into_owned()).collect();
    projection_residual(v, &onb) / scale
}

pub fn span_membership(op: &CovOperator<f64>) -> SpanReport {
    let basis = solve_cov_space(op.rep());
    let cols: Vec<DVector<f64>> = basis.iter().map(|b| b.vectorized()).collect();
    let derivative_residual = span_residual(&cols, &op.vectorized());
    let mass_cols: Vec<DVector<f64>> =
        commutant_mass_terms(op.rep()).iter().map(|m| DVector::from_column_slice(m.as_slice())).collect();
    let mass_residual = span_residual(&mass_cols, &DVector::from_column_slice(op.mass().as_slice()));
    SpanReport { derivative_residual, mass_residual }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeterminantComparison {
    pub family: Family,
    /// Ascending coefficients in `s = p^2`.
    pub printed: Vec<f64>,
    pub computed: Vec<f64>,
    /// Max relative difference of the two at sample points.
    pub max_rel_diff: f64,
    pub agrees: bool,
}

pub const DET_REL_TOL: f64 = 1e-8;

pub fn compare_determinant(params: &ModelParams, samples: usize, seed: u64) -> Result<DeterminantComparison> {
    let op = params.build()?;
    let computed = det_poly(&symbol(&op));
    let printed = printed::printed_determinant(params);
    let max_rel_diff = sample_points::<f64>(3, samples, seed)
        .iter()
        .map(|p| {
            let full = op_det(&op, p);
            let s: f64 = p.iter().map(|x| x * x).sum();
            let want = printed.eval(s);
            (full - want).abs() / full.abs().max(want.abs()).max(1e-300)
        })
        .fold(0.0, f64::max);
    let max_rel_diff = if computed.is_zero() && printed.is_zero() { 0.0 } else { max_rel_diff };
    Ok(DeterminantComparison {
        family: params.family(),
        printed: printed.coeffs().to_vec(),
        computed: computed.radial.coeffs().to_vec(),
        max_rel_diff,
        agrees: max_rel_diff < DET_REL_TOL,
    })
}

/// Determinant of the symbol by LU at one point.
fn op_det(op: &CovOperator<f64>, p: &[f64]) -> f64 {
    let d = crate::spectral::symbol_at(op, p).determinant();
    d.re
}

/// Computed radial determinant of the vector family compared with both
/// printed forms.
#[derive(Debug, Clone, Serialize)]
pub struct VectorDeterminantReport {
    pub printed_agrees: bool,
    /// `m1 m2` times the printed Green denominator.
    pub green_denominator_agrees: bool,
    pub computed: Vec<f64>,
    pub printed: Vec<f64>,
    pub green_denominator: Vec<f64>,
}

pub fn vector_determinant_report(params: &ModelParams) -> Result<VectorDeterminantReport> {
    let ModelParams::Vector2 { a, b, c, d, m1, m2 } = *params else {
        return Err(Error::Invalid("vector2 parameters expected".into()));
    };
    let computed = det_poly(&symbol(&params.build()?)).radial;
    let printed = printed::printed_determinant(params);
    let den = printed::printed_vector_green_denominator(a, b, c, d, m1, m2).map(|x| x * m1 * m2);
    let close = |x: &Poly<f64>| {
        let scale = computed.coeffs().iter().fold(1e-300f64, |m, c| m.max(c.abs()));
        (&computed - x).coeffs().iter().all(|c| c.abs() <= 1e-10 * scale)
    };
    Ok(VectorDeterminantReport {
        printed_agrees: close(&printed),
        green_denominator_agrees: close(&den),
        computed: computed.coeffs().to_vec(),
        printed: printed.coeffs().to_vec(),
        green_denominator: den.coeffs().to_vec(),
    })
}

/// Max over sample points of the entrywise relative difference.
pub fn max_rel_entry_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let scale = a.iter().chain(b.iter()).fold(0.0f64, |m, z| m.max(z.norm()));
    if scale == 0.0 {
        return 0.0;
    }
    a.iter().zip(b.iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).norm() / scale))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GreenComparison {
    pub max_rel_diff: f64,
    pub agrees: bool,
}

/// Printed Higgs Green function against `invert_symbol`.
pub fn compare_green_higgs3(params: &ModelParams, samples: usize, seed: u64) -> Result<GreenComparison> {
    let printed = printed::printed_green_higgs3(params)?;
    let computed = invert_symbol(&params.build()?, false)?;
    let max_rel_diff = sample_points::<f64>(3, samples, seed)
        .iter()
        .map(|p| max_rel_entry_diff(&printed.eval(p), &computed.eval(p)))
        .fold(0.0, f64::max);
    Ok(GreenComparison { max_rel_diff, agrees: max_rel_diff < DET_REL_TOL })
}

/// Per-atom Poisson block printed for the Higgs model against the
/// transpose of the computed `(G^dag alpha)(G^dag alpha)^dag`.
pub fn compare_higgs_poisson(
    params: &ModelParams,
    form: printed::PrintedForm,
    samples: usize,
    seed: u64,
) -> Result<GreenComparison> {
    let green = invert_symbol(&params.build()?, true)?;
    compare_poisson(&green, samples, seed, |p, alpha| printed::printed_higgs_poisson(params, p, alpha, form))
}

/// The same for the vector model. The printed blocks are compared with
/// the computed block and its transpose, each also rescaled by
/// `(m1 m2)^2`; the best of the four is reported.
pub fn compare_vector_poisson(params: &ModelParams, samples: usize, seed: u64) -> Result<GreenComparison> {
    let ModelParams::Vector2 { m1, m2, .. } = *params else {
        return Err(Error::Invalid("vector2 parameters expected".into()));
    };
    let op = params.build()?;
    let green = invert_symbol(&op, true)?;
    let points = sample_points::<f64>(3, samples, seed);
    let alphas = sample_points::<f64>(6, samples, seed ^ 0xa1fa);
    let scale2 = Complex64::new((m1 * m2).powi(2), 0.0);
    let mut best = f64::INFINITY;
    for (transpose, scaled) in [(false, false), (true, false), (false, true), (true, true)] {
        let mut worst = 0.0f64;
        for (p, alpha) in points.iter().zip(&alphas) {
            let v = green.eval(p).adjoint() * DVector::from_iterator(6, alpha.iter().map(|&x| Complex64::new(x, 0.0)));
            let mut k = &v * v.adjoint();
            if transpose {
                k = k.transpose();
            }
            if scaled {
                k *= scale2;
            }
            worst = worst.max(max_rel_entry_diff(&printed::printed_vector_poisson(params, p, alpha)?, &k));
        }
        best = best.min(worst);
    }
    Ok(GreenComparison { max_rel_diff: best, agrees: best < DET_REL_TOL })
}

fn compare_poisson(
    green: &crate::symcalc::RationalMatrix<f64>,
    samples: usize,
    seed: u64,
    printed: impl Fn(&[f64], &[f64]) -> Result<DMatrix<Complex64>>,
) -> Result<GreenComparison> {
    let n = green.dim();
    let points = sample_points::<f64>(3, samples, seed);
    let alphas = sample_points::<f64>(n, samples, seed ^ 0xa1fa);
    let mut worst = 0.0f64;
    for (p, alpha) in points.iter().zip(&alphas) {
        let v = green.eval(p).adjoint() * DVector::from_iterator(n, alpha.iter().map(|&x| Complex64::new(x, 0.0)));
        let k = (&v * v.adjoint()).transpose();
        worst = worst.max(max_rel_entry_diff(&printed(p, alpha)?, &k));
    }
    Ok(GreenComparison { max_rel_diff: worst, agrees: worst < DET_REL_TOL })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProcaReport {
    pub mass: f64,
    pub points: usize,
    pub max_abs_diff: f64,
    pub max_off_block: f64,
    pub pass: bool,
}

pub const PROCA_TOL: f64 = 1e-8;

/// Gaussian two-point function of the vector family at the Proca point
/// with `A = 1` against the two decoupled Proca propagators.
pub fn proca_gaussian_check(m: f64, samples: usize, seed: u64) -> Result<ProcaReport> {
    let op = ModelParams::proca(m).build()?;
    let s = schwinger2(&op, &NoiseSpec::gaussian(DMatrix::identity(6, 6))?)?;
    let mut points = sample_points::<f64>(3, samples, seed);
    points.push(vec![0.0; 3]);
    let (mut max_abs_diff, mut max_off_block) = (0.0f64, 0.0f64);
    for p in &points {
        let got = s.gaussian(p);
        let want = printed::printed_proca(m, p);
        for i in 0..6 {
            for j in 0..6 {
                max_abs_diff = max_abs_diff.max((got[(i, j)] - want[(i, j)]).norm());
                if (i < 3) != (j < 3) {
                    max_off_block = max_off_block.max(got[(i, j)].norm());
                }
            }
        }
    }
    Ok(ProcaReport { mass: m, points: points.len(), max_abs_diff, max_off_block, pass: max_abs_diff < PROCA_TOL })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiracSide {
    Left,
    Right,
    /// The pair `D, D^T` with `D D^T` proportional to the Laplacian.
    Transposed,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiracReport {
    pub side: DiracSide,
    /// `e` such that the symbol product equals `e p^2 I`, if it does.
    pub sign: Option<i64>,
    /// Coefficient matrices of `p_j p_k`, `j <= k`, of the symbol product.
    pub coefficients: Vec<((usize, usize), [[i64; 4]; 4])>,
    /// Whether the printed coefficients agree with the catalog operator.
    pub matches_catalog: bool,
}

fn mat_mul_t(x: &[[i64; 4]; 4], y: &[[i64; 4]; 4]) -> [[i64; 4]; 4] {
    let mut out = [[0i64; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..4).map(|k| x[i][k] * y[j][k]).sum();
        }
    }
    out
}

/// Symbol products in exact integer arithmetic. With `d_j -> i p_j` the
/// products `sigma sigma^*` (left, right) carry the factor `i (-i) = 1`
/// and `sigma sigma^T` carries `i^2 = -1`.
pub fn dirac_factorization_check(side: DiracSide) -> DiracReport {
    let k = printed::printed_dirac(side);
    let phase: i64 = match side {
        DiracSide::Left | DiracSide::Right => 1,
        DiracSide::Transposed => -1,
    };
    let mut coefficients = Vec::new();
    for j in 0..3 {
        for l in j..3 {
            let mut c = mat_mul_t(&k[j], &k[l]);
            if l != j {
                let other = mat_mul_t(&k[l], &k[j]);
                for (r, row) in c.iter_mut().enumerate() {
                    for (s, v) in row.iter_mut().enumerate() {
                        *v += other[r][s];
                    }
                }
            }
            for row in c.iter_mut() {
                for v in row.iter_mut() {
                    *v *= phase;
                }
            }
            coefficients.push(((j, l), c));
        }
    }
    let sign = {
        let e = coefficients[0].1[0][0];
        let ok = coefficients.iter().all(|((j, l), c)| {
            (0..4).all(|r| (0..4).all(|s| c[r][s] == if j == l && r == s { e } else { 0 }))
        });
        (ok && e != 0).then_some(e)
    };
    let catalog = match side {
        DiracSide::Left => ModelParams::DiracLeft,
        DiracSide::Right => ModelParams::DiracRight,
        DiracSide::Transposed => ModelParams::Higgs3 { a: 1.0, b: 1.0, c: 1.0, m0: 0.0, m1: 0.0 },
    };
    let matches_catalog = (0..3).all(|j| {
        let mut e = [0.0; 3];
        e[j] = 1.0;
        let l = catalog.derivative_part(&e);
        (0..4).all(|r| (0..4).all(|s| l[(r, s)] == k[j][r][s] as f64))
    });
    DiracReport { side, sign, coefficients, matches_catalog }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HiggsAdmissibility {
    Admissible,
    NotAdmissible,
    /// `m1 = 0`: a massless pole at `p = 0`.
    MasslessLimit,
}

/// The printed rule: admissible iff `c = 0` (for `m1 != 0`) with a
/// positive mass `m0 m1 / (a b)`; `m1 = 0` is the massless limit.
pub fn higgs_rule(params: &ModelParams) -> Result<HiggsAdmissibility> {
    let ModelParams::Higgs3 { a, b, c, m0, m1 } = *params else {
        return Err(Error::Invalid("higgs3 parameters expected".into()));
    };
    Ok(if m1 == 0.0 {
        HiggsAdmissibility::MasslessLimit
    } else if c == 0.0 && a * b * m0 * m1 > 0.0 {
        HiggsAdmissibility::Admissible
    } else {
        HiggsAdmissibility::NotAdmissible
    })
}

/// The same classification from the computed mass spectrum.
pub fn higgs_computed(params: &ModelParams) -> Result<HiggsAdmissibility> {
    let ModelParams::Higgs3 { m1, .. } = *params else {
        return Err(Error::Invalid("higgs3 parameters expected".into()));
    };
    let op = params.build()?;
    Ok(match mass_spectrum(&op) {
        Ok(s) if s.admissible => HiggsAdmissibility::Admissible,
        _ if m1 == 0.0 => HiggsAdmissibility::MasslessLimit,
        _ => HiggsAdmissibility::NotAdmissible,
    })
}

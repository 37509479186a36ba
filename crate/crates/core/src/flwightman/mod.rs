//! Fourier–Laplace machinery: difference variables, the half-space
//! Fourier–Laplace transform, mass-shell kernels built from Green functions
//! and numeric checks of the Laplace representations they imply.
//!
//! Position-space Green functions are computed as lattice momentum sums
//! regulated by `phi(s) = e^{-eps s} Q(s)`, `s = p^2`, where `Q` is the
//! Hermite interpolant of `e^{eps s}` at every `s = -m_j^2`. The regulator is
//! a radial smoothing whose transform equals one on each mass shell, so by
//! the mean-value property of `(Delta - m^2)^k u = 0` it leaves every shell
//! part unchanged away from the origin; only Gaussian tails of width
//! `sqrt(eps)` reach the singularity.

pub mod quad;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::covsolve::CovOperator;
use crate::error::{Error, Result};
use crate::levynoise::LatticeConfig;
use crate::parallel::pool;
use crate::spectral::symbol_at;
use crate::symcalc::{invert_symbol, mass_spectrum, partial_fractions, MultiPoly, PartialFractionTerm};
use quad::{integrate, integrate_scalar, Tolerance};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// `f^d(x_1, xi_1, .., xi_{n-1}) = f(x_1, x_1 + xi_1, ..)`.
pub fn difference_map<R, F>(f: F) -> impl Fn(&[Vec<f64>]) -> R
where
    F: Fn(&[Vec<f64>]) -> R,
{
    move |vars: &[Vec<f64>]| f(&from_difference(vars))
}

/// `(x_1, .., x_n) -> (x_1, x_2 - x_1, .., x_n - x_{n-1})`.
pub fn to_difference(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = points.first().cloned().into_iter().collect::<Vec<_>>();
    out.extend(points.windows(2).map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect()));
    out
}

pub fn from_difference(vars: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vars.len());
    for v in vars {
        let next = match out.last() {
            Some(prev) => prev.iter().zip(v).map(|(a, b)| a + b).collect(),
            None => v.clone(),
        };
        out.push(next);
    }
    out
}

/// Samples of `f(t, x)` at `t = k dt`, `k < nt`, and spatial sites
/// `x = a * (k_1, .., k_d)` with `0 <= k_j < l`; time is the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceSamples {
    pub dt: f64,
    pub nt: usize,
    pub d: usize,
    pub l: usize,
    pub a: f64,
    pub values: Vec<C>,
}

impl HalfSpaceSamples {
    pub fn from_fn(dt: f64, nt: usize, d: usize, l: usize, a: f64, f: impl Fn(f64, &[f64]) -> C) -> Self {
        let sites = l.pow(d as u32);
        let mut values = Vec::with_capacity(nt * sites);
        let mut x = vec![0.0; d];
        for k in 0..nt {
            for s in 0..sites {
                let mut rest = s;
                for j in (0..d).rev() {
                    x[j] = a * (rest % l) as f64;
                    rest /= l;
                }
                values.push(f(k as f64 * dt, &x));
            }
        }
        Self { dt, nt, d, l, a, values }
    }

    fn sites(&self) -> usize {
        self.l.pow(self.d as u32)
    }

    /// Trapezoid weight in time times the spatial cell.
    fn weight(&self, k: usize) -> f64 {
        let end = if k == 0 || k + 1 == self.nt { 0.5 } else { 1.0 };
        end * self.dt * self.a.powi(self.d as i32)
    }

    /// `sum |f| * weights`, the bound on any transform value.
    pub fn l1_norm(&self) -> f64 {
        let sites = self.sites();
        self.values.iter().enumerate().map(|(i, v)| v.norm() * self.weight(i / sites)).sum()
    }
}

/// `int_{t >= 0} dt int dx e^{-q0 t} e^{i q.x} f(t, x)` by the trapezoid rule
/// in time and the rectangle rule in space.
pub fn fl_transform(f: &HalfSpaceSamples, q0: f64, q: &[f64]) -> Result<C> {
    if !(q0 >= 0.0) {
        return Err(Error::OutOfDomain(format!("Laplace variable q0 = {q0} must be non-negative")));
    }
    if q.len() != f.d {
        return Err(Error::DimensionMismatch(format!("{} spatial momenta for {} spatial dimensions", q.len(), f.d)));
    }
    let sites = f.sites();
    let mut x = vec![0.0; f.d];
    let mut acc = ZERO;
    for (i, v) in f.values.iter().enumerate() {
        let (k, s) = (i / sites, i % sites);
        let mut rest = s;
        for j in (0..f.d).rev() {
            x[j] = f.a * (rest % f.l) as f64;
            rest /= f.l;
        }
        let phase: f64 = q.iter().zip(&x).map(|(a, b)| a * b).sum();
        acc += v * C::from_polar((-q0 * k as f64 * f.dt).exp(), phase) * f.weight(k);
    }
    Ok(acc)
}

/// Operators whose Green function is checked. `KleinGordon` is the scalar
/// `1 / (p^2 + m^2)`.
#[derive(Debug, Clone)]
pub enum GreenModel {
    Operator(CovOperator<f64>),
    KleinGordon { mass: f64, dim: usize },
}

impl GreenModel {
    pub fn klein_gordon(mass: f64) -> Self {
        Self::KleinGordon { mass, dim: 3 }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Operator(op) => op.dim(),
            Self::KleinGordon { .. } => 1,
        }
    }

    pub fn space_dim(&self) -> usize {
        match self {
            Self::Operator(op) => op.space_dim(),
            Self::KleinGordon { dim, .. } => *dim,
        }
    }

    /// `G^(p)`, the inverse symbol.
    pub fn green_at(&self, p: &[f64]) -> Result<DMatrix<C>> {
        match self {
            Self::Operator(op) => symbol_at(op, p)
                .try_inverse()
                .ok_or_else(|| Error::NotInvertible(format!("symbol singular at p = {p:?}"))),
            Self::KleinGordon { mass, .. } => {
                let s: f64 = p.iter().map(|x| x * x).sum();
                Ok(DMatrix::from_element(1, 1, C::new(1.0 / (s + mass * mass), 0.0)))
            }
        }
    }

    pub fn kernel(&self) -> Result<WightmanKernel> {
        wightman_kernel(self)
    }
}

/// Mass-shell kernel `W^{ab}(p0, p) = sum_i {B_i(p) + i p0 A_i(p)}
/// delta(p0^2 - p^2 - m_i^2) eps(p0)` plus the constant contact part of
/// the Green function, which does not contribute at positive time.
#[derive(Debug, Clone)]
pub struct WightmanKernel {
    n: usize,
    d: usize,
    masses2: Vec<f64>,
    /// Row-major `n x n`; each term carries the index of its mass.
    entries: Vec<Vec<(usize, PartialFractionTerm<f64>)>>,
    contact: DMatrix<C>,
}

impl WightmanKernel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn space_dim(&self) -> usize {
        self.d
    }

    pub fn masses2(&self) -> &[f64] {
        &self.masses2
    }

    pub fn contact(&self) -> &DMatrix<C> {
        &self.contact
    }

    pub fn terms(&self, a: usize, b: usize) -> impl Iterator<Item = &PartialFractionTerm<f64>> {
        self.entries[a * self.n + b].iter().map(|(_, t)| t)
    }

    /// Every shell has positive mass, so the support lies in `p0 >= m_min`.
    pub fn is_forward(&self) -> bool {
        self.masses2.iter().all(|&m2| m2 > 0.0)
    }

    pub fn omega(&self, i: usize, p: &[f64]) -> f64 {
        (p.iter().map(|x| x * x).sum::<f64>() + self.masses2[i]).sqrt()
    }

    /// `(omega_i(p), (B_i(p) + i sign omega_i A_i(p)) / (2 omega_i))` for each
    /// mass; `sign = +1` is the positive-time Laplace weight.
    pub fn shell_weights(&self, p: &[f64], sign: f64) -> Vec<(f64, DMatrix<C>)> {
        let mut out: Vec<(f64, DMatrix<C>)> =
            (0..self.masses2.len()).map(|i| (self.omega(i, p), DMatrix::zeros(self.n, self.n))).collect();
        for (k, terms) in self.entries.iter().enumerate() {
            for (i, t) in terms {
                let w = out[*i].0;
                let v = (t.bnum.eval_real(p) + C::new(0.0, sign * w) * t.anum.eval_real(p)) / (2.0 * w);
                out[*i].1[(k / self.n, k % self.n)] += v;
            }
        }
        out
    }

    /// `int dp0 W(p0, p) g(p0)`; the delta is reduced to `p0 = omega_i`.
    pub fn pair(&self, p: &[f64], g: impl Fn(f64) -> C) -> DMatrix<C> {
        self.shell_weights(p, 1.0).into_iter().fold(DMatrix::zeros(self.n, self.n), |acc, (w, m)| acc + m * g(w))
    }

    /// `int dp / (2 pi)^{D-1} e^{i p.x} int dp0 e^{-p0 x0} W(p0, p)` for
    /// `x0 > 0`.
    pub fn laplace_fourier(&self, x: &[f64]) -> Result<ShellIntegral> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch(format!("point has {} coordinates, kernel is {}-dimensional", x.len(), self.d)));
        }
        let x0 = x[0];
        if !(x0 > 0.0) {
            return Err(Error::OutOfDomain(format!("Laplace representation needs x0 > 0, got {x0}")));
        }
        let xs = &x[1..];
        momentum_integral(self.d - 1, self.n, x0, xs, |p| {
            self.shell_weights(p, 1.0).into_iter().fold(DMatrix::zeros(self.n, self.n), |acc, (w, m)| acc + m * C::new((-w * x0).exp(), 0.0))
        })
    }
}

pub fn wightman_kernel_from_green(op: &CovOperator<f64>) -> Result<WightmanKernel> {
    wightman_kernel(&GreenModel::Operator(op.clone()))
}

fn wightman_kernel(model: &GreenModel) -> Result<WightmanKernel> {
    let d = model.space_dim();
    if d < 2 {
        return Err(Error::UnsupportedDimension(format!("Laplace representation needs D >= 2, got {d}")));
    }
    match model {
        GreenModel::KleinGordon { mass, .. } => {
            if !(*mass > 0.0) {
                return Err(Error::OutOfDomain(format!("mass {mass} must be positive")));
            }
            let term = PartialFractionTerm {
                mass2: mass * mass,
                anum: MultiPoly::zero(d - 1),
                bnum: MultiPoly::constant(d - 1, C::new(1.0, 0.0)),
            };
            Ok(WightmanKernel { n: 1, d, masses2: vec![mass * mass], entries: vec![vec![(0, term)]], contact: DMatrix::zeros(1, 1) })
        }
        GreenModel::Operator(op) => {
            let mut masses2 = mass_spectrum(op)?
                .real_masses2()
                .ok_or_else(|| Error::NotInvertible("complex masses".into()))?;
            masses2.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(b.abs()));
            let green = invert_symbol(op, false)?;
            let n = op.dim();
            let mut contact = DMatrix::zeros(n, n);
            let mut entries = Vec::with_capacity(n * n);
            for a in 0..n {
                for b in 0..n {
                    let pf = partial_fractions(&green.entry(a, b))?;
                    let poly = pf.contact.chop(1e-12);
                    if poly.total_degree() > 0 {
                        return Err(Error::Invalid(format!("entry ({a},{b}) of the Green function is unbounded")));
                    }
                    contact[(a, b)] = poly.coeff(&vec![0; d]);
                    let terms = pf
                        .terms
                        .into_iter()
                        .map(|t| (t.anum.chop(1e-13), t.bnum.chop(1e-13), t.mass2))
                        .filter(|(an, bn, _)| !(an.is_zero() && bn.is_zero()))
                        .map(|(anum, bnum, mass2)| {
                            let i = nearest(&masses2, mass2);
                            (i, PartialFractionTerm { mass2, anum, bnum })
                        })
                        .collect();
                    entries.push(terms);
                }
            }
            Ok(WightmanKernel { n, d, masses2, entries, contact })
        }
    }
}

fn nearest(list: &[f64], x: f64) -> usize {
    list.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
        .map_or(0, |(i, _)| i)
}

#[derive(Debug, Clone)]
pub struct ShellIntegral {
    pub value: DMatrix<C>,
    pub error: f64,
    pub radial_cutoff: f64,
    pub angles: usize,
    pub intervals: usize,
}

pub const SHELL_TOL: f64 = 1e-11;

/// `int d^k p / (2 pi)^k e^{i p.x} f(p)` for `f` decaying like
/// `e^{-|p| decay}`: adaptive radial Gauss–Kronrod, angular trapezoid.
fn momentum_integral(k: usize, n: usize, decay: f64, x: &[f64], f: impl Fn(&[f64]) -> DMatrix<C>) -> Result<ShellIntegral> {
    let cutoff = 46.0 / decay;
    let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let phase = |p: &[f64]| C::from_polar(1.0, p.iter().zip(x).map(|(a, b)| a * b).sum());
    let tol = Tolerance::new(0.0, SHELL_TOL);
    match k {
        1 => {
            let res = integrate(
                |q| {
                    let g = |p: f64| f(&[p]) * phase(&[p]);
                    (g(q) + g(-q)).iter().map(|z| z / (2.0 * PI)).collect()
                },
                0.0,
                cutoff,
                tol,
                4000,
            );
            Ok(ShellIntegral {
                value: DMatrix::from_column_slice(n, n, &res.value),
                error: res.error,
                radial_cutoff: cutoff,
                angles: 2,
                intervals: res.intervals,
            })
        }
        2 => {
            let z = cutoff * r;
            let angles = 32 + (z + 12.0 * z.cbrt()).ceil() as usize;
            let trig: Vec<(f64, f64)> = (0..angles).map(|j| (2.0 * PI * j as f64 / angles as f64).sin_cos()).collect();
            let res = integrate(
                |q| {
                    let mut acc = DMatrix::<C>::zeros(n, n);
                    for &(s, c) in &trig {
                        let p = [q * c, q * s];
                        acc += f(&p) * phase(&p);
                    }
                    (acc * C::new(q / (2.0 * PI * angles as f64), 0.0)).as_slice().to_vec()
                },
                0.0,
                cutoff,
                tol,
                4000,
            );
            Ok(ShellIntegral {
                value: DMatrix::from_column_slice(n, n, &res.value),
                error: res.error,
                radial_cutoff: cutoff,
                angles,
                intervals: res.intervals,
            })
        }
        _ => Err(Error::UnsupportedDimension(format!("shell integrals support D = 2 or 3, got {}", k + 1))),
    }
}

/// `e^{-eps s} Q(s)` with `Q` interpolating `e^{eps s}` to order `mult` at
/// every `s = -m_j^2`.
#[derive(Debug, Clone)]
pub struct ShellRegulator {
    pub eps: f64,
    nodes: Vec<f64>,
    coeffs: Vec<f64>,
}

impl ShellRegulator {
    pub fn new(eps: f64, masses2: &[f64], mult: usize) -> Self {
        let nodes: Vec<f64> = masses2.iter().flat_map(|&m2| std::iter::repeat_n(-m2, mult)).collect();
        let n = nodes.len();
        let g = |z: f64, k: usize| eps.powi(k as i32) * (eps * z).exp() / (1..=k).map(|i| i as f64).product::<f64>();
        let mut dd: Vec<f64> = nodes.iter().map(|&z| g(z, 0)).collect();
        let mut coeffs = vec![dd[0]];
        for j in 1..n {
            for i in 0..n - j {
                dd[i] = if nodes[i + j] == nodes[i] { g(nodes[i], j) } else { (dd[i + 1] - dd[i]) / (nodes[i + j] - nodes[i]) };
            }
            coeffs.push(dd[0]);
        }
        Self { eps, nodes, coeffs }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let n = self.coeffs.len();
        let q = (0..n - 1).rev().fold(self.coeffs[n - 1], |acc, j| acc * (s - self.nodes[j]) + self.coeffs[j]);
        (-self.eps * s).exp() * q
    }
}

/// Regulator width balancing the Gaussian leak at distance `r` against the
/// cut at the edge of the Brillouin zone.
pub fn regulator_width(r: f64, spacing: f64) -> f64 {
    r * spacing / (2.0 * PI)
}

/// `(La)^{-D} sum_p e^{ip.x} phi(p^2) F(p)` over the momentum cube. Modes
/// on a Nyquist plane are split evenly between `+pi/a` and `-pi/a` so that
/// the grid is symmetric under `p -> -p`.
fn regulated_sum(
    lattice: &LatticeConfig,
    n: usize,
    x: &[f64],
    reg: &ShellRegulator,
    f: impl Fn(&[f64]) -> Result<DMatrix<C>> + Sync,
) -> Result<DMatrix<C>> {
    let (d, l) = (lattice.d, lattice.l);
    let dp = 2.0 * PI / (l as f64 * lattice.a);
    let half = (l / 2) as i64;
    let nyquist = l % 2 == 0;
    let inner = l.pow(d as u32 - 1);
    let parts: Vec<Result<DMatrix<C>>> = pool().install(|| {
        (0..l)
            .into_par_iter()
            .map(|k0| {
                let mut acc = DMatrix::<C>::zeros(n, n);
                let mut k = vec![0i64; d];
                let mut p = vec![0.0; d];
                k[0] = k0 as i64 - half;
                for s in 0..inner {
                    let mut rest = s;
                    for j in (1..d).rev() {
                        k[j] = (rest % l) as i64 - half;
                        rest /= l;
                    }
                    let edges: Vec<usize> = (0..d).filter(|&j| nyquist && k[j] == -half).collect();
                    let weight = 0.5f64.powi(edges.len() as i32);
                    for mask in 0..1usize << edges.len() {
                        for j in 0..d {
                            p[j] = k[j] as f64 * dp;
                        }
                        for (bit, &j) in edges.iter().enumerate() {
                            if mask >> bit & 1 == 1 {
                                p[j] = -p[j];
                            }
                        }
                        let s2: f64 = p.iter().map(|v| v * v).sum();
                        let w = reg.eval(s2) * weight;
                        if w == 0.0 {
                            continue;
                        }
                        let phase = C::from_polar(w, p.iter().zip(x).map(|(a, b)| a * b).sum());
                        acc += f(&p)? * phase;
                    }
                }
                Ok(acc)
            })
            .collect()
    });
    let mut total = DMatrix::<C>::zeros(n, n);
    for part in parts {
        total += part?;
    }
    Ok(total / C::new(lattice.volume(), 0.0))
}

fn check_grid(model: &GreenModel, lattice: &LatticeConfig, x: &[f64]) -> Result<()> {
    let d = model.space_dim();
    if lattice.d != d || x.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "model is {d}-dimensional, lattice {}-dimensional, point has {} coordinates",
            lattice.d,
            x.len()
        )));
    }
    Ok(())
}

fn max_abs(m: &DMatrix<C>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn relative_residual(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    max_abs(&(a - b)) / max_abs(b).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone)]
pub struct FlGreenReport {
    /// Regulated lattice sum of the Green function.
    pub lhs: DMatrix<C>,
    /// Laplace–Fourier integral of the shell kernel.
    pub rhs: DMatrix<C>,
    /// `max |lhs - rhs| / max |rhs|`.
    pub residual: f64,
    pub eps: f64,
    pub quadrature_error: f64,
    pub radial_cutoff: f64,
    pub angles: usize,
}

pub const FL_GREEN_TOL: f64 = 1e-3;

/// Green function at `x` (with `x0 > 0`) from the lattice and from the
/// Laplace–Fourier integral of its Wightman kernel.
pub fn verify_fl_green(model: &GreenModel, x: &[f64], lattice: &LatticeConfig) -> Result<FlGreenReport> {
    check_grid(model, lattice, x)?;
    let kernel = model.kernel()?;
    let shell = kernel.laplace_fourier(x)?;
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let reg = ShellRegulator::new(regulator_width(r, lattice.a), kernel.masses2(), 1);
    // the contact part is a delta at the origin and vanishes at x
    let lhs = regulated_sum(lattice, kernel.n(), x, &reg, |p| Ok(model.green_at(p)? - kernel.contact()))?;
    Ok(FlGreenReport {
        residual: relative_residual(&lhs, &shell.value),
        lhs,
        rhs: shell.value,
        eps: reg.eps,
        quadrature_error: shell.error,
        radial_cutoff: shell.radial_cutoff,
        angles: shell.angles,
    })
}

/// `(1 - e^{-z}) / z`.
fn exprel_neg(z: C) -> C {
    if z.norm() < 1e-3 {
        C::new(1.0, 0.0) - z / 2.0 + z * z / 6.0 - z * z * z / 24.0
    } else {
        (C::new(1.0, 0.0) - (-z).exp()) / z
    }
}

/// `dt int_0^1 e^{-(zl s + zr (1 - s)) dt} ds`.
fn middle(zl: C, zr: C, dt: f64) -> C {
    (-zr * dt).exp() * exprel_neg((zl - zr) * dt) * dt
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvReport {
    pub lhs: C,
    pub rhs: C,
    pub residual: f64,
}

impl ConvReport {
    fn new(lhs: C, rhs: C) -> Self {
        Self { lhs, rhs, residual: (lhs - rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE) }
    }
}

pub const CONV_TOL: Tolerance = Tolerance { abs: 0.0, rel: 1e-14 };

fn check_conv(zetas: &[C], ts: &[f64]) -> Result<()> {
    if zetas.len() != ts.len() || zetas.is_empty() {
        return Err(Error::DimensionMismatch(format!("{} rates for {} times", zetas.len(), ts.len())));
    }
    if let Some(z) = zetas.iter().find(|z| !(z.re > 0.0)) {
        return Err(Error::OutOfDomain(format!("rate {z} needs a positive real part")));
    }
    if ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::OutOfDomain("times must be strictly increasing".into()));
    }
    Ok(())
}

/// `int prod_i e^{-zeta_i |t - t_i|} dt` by adaptive quadrature over the
/// gaps and truncated tails.
fn conv_quadrature(zetas: &[C], ts: &[f64]) -> C {
    let f = |t: f64| zetas.iter().zip(ts).fold(C::new(1.0, 0.0), |acc, (z, ti)| acc * (-z * (t - ti).abs()).exp());
    let total: f64 = zetas.iter().map(|z| z.re).sum();
    let tail = 46.0 / total;
    let n = ts.len();
    let mut edges = vec![ts[0] - tail];
    edges.extend_from_slice(ts);
    edges.push(ts[n - 1] + tail);
    edges.windows(2).map(|w| integrate_scalar(f, w[0], w[1], CONV_TOL, 2000).0).sum()
}

pub fn conv_identity2(z1: C, z2: C, t1: f64, t2: f64) -> Result<ConvReport> {
    check_conv(&[z1, z2], &[t1, t2])?;
    let dt = t2 - t1;
    let rhs = ((-z2 * dt).exp() + (-z1 * dt).exp()) / (z1 + z2) + middle(z1, z2, dt);
    Ok(ConvReport::new(conv_quadrature(&[z1, z2], &[t1, t2]), rhs))
}

/// Closed form for ordered times: the two half-lines give
/// `e^{-sum_i zeta_i |t_i - t_end|} / sum zeta`, each gap
/// `[t_j, t_{j+1}]` the factors of the outer points times the middle
/// integral with left rate `zeta_1 + .. + zeta_j`.
pub fn conv_identity_n(zetas: &[C], ts: &[f64]) -> Result<ConvReport> {
    check_conv(zetas, ts)?;
    let n = ts.len();
    let sum: C = zetas.iter().sum();
    let decay = |anchor: f64, range: std::ops::Range<usize>| {
        range.fold(C::new(0.0, 0.0), |acc, i| acc + zetas[i] * (ts[i] - anchor).abs())
    };
    let mut rhs = ((-decay(ts[0], 0..n)).exp() + (-decay(ts[n - 1], 0..n)).exp()) / sum;
    for j in 0..n - 1 {
        let outer = decay(ts[j], 0..j) + decay(ts[j + 1], j + 2..n);
        let zl: C = zetas[..=j].iter().sum();
        rhs += (-outer).exp() * middle(zl, sum - zl, ts[j + 1] - ts[j]);
    }
    Ok(ConvReport::new(conv_quadrature(zetas, ts), rhs))
}

#[derive(Debug, Clone)]
pub struct SchwingerReport {
    /// Regulated lattice value of `int dx G(x - y1)^T W G(x - y2)`.
    pub direct: DMatrix<C>,
    /// Same quantity from the shell kernel through the two-point
    /// convolution identity.
    pub reconstructed: DMatrix<C>,
    pub residual: f64,
    pub eps: f64,
    pub quadrature_error: f64,
}

pub const SCHWINGER_TOL: f64 = 1e-2;

/// `Gamma(y1, y2) = int dx G(x - y1)^T W G(x - y2)` for `y2^0 > y1^0`,
/// with `W` a symmetric weight (the noise second moment).
pub fn schwinger_fl_check(model: &GreenModel, weight: &DMatrix<f64>, y1: &[f64], y2: &[f64], lattice: &LatticeConfig) -> Result<SchwingerReport> {
    check_grid(model, lattice, y1)?;
    check_grid(model, lattice, y2)?;
    let n = model.n();
    if weight.nrows() != n || weight.ncols() != n {
        return Err(Error::DimensionMismatch(format!("weight is {}x{}, model has N = {n}", weight.nrows(), weight.ncols())));
    }
    let dt = y2[0] - y1[0];
    if !(dt > 0.0) {
        return Err(Error::OutOfDomain(format!("need y2^0 > y1^0, got {} and {}", y2[0], y1[0])));
    }
    let kernel = model.kernel()?;
    let w = weight.map(|v| C::new(v, 0.0));
    let disp: Vec<f64> = y1.iter().zip(y2).map(|(a, b)| a - b).collect();
    let (direct, eps) = two_point_sum(model, &kernel, &w, &disp, lattice)?;
    let shift: Vec<f64> = y2[1..].iter().zip(&y1[1..]).map(|(a, b)| a - b).collect();
    let k = &kernel.contact;
    let shell = momentum_integral(kernel.d - 1, n, dt, &shift, |p| {
        let minus_p: Vec<f64> = p.iter().map(|v| -v).collect();
        let up = kernel.shell_weights(p, 1.0);
        let um = kernel.shell_weights(p, -1.0);
        let vp = kernel.shell_weights(&minus_p, 1.0);
        let vm = kernel.shell_weights(&minus_p, -1.0);
        let mut acc = DMatrix::<C>::zeros(n, n);
        for (i, (z1, _)) in up.iter().enumerate() {
            let z1 = C::new(*z1, 0.0);
            for (j, (z2, _)) in vp.iter().enumerate() {
                let z2 = C::new(*z2, 0.0);
                let left = (-z2 * dt).exp() / (z1 + z2);
                let right = (-z1 * dt).exp() / (z1 + z2);
                acc += um[i].1.transpose() * &w * &vm[j].1 * left
                    + up[i].1.transpose() * &w * &vm[j].1 * middle(z1, z2, dt)
                    + up[i].1.transpose() * &w * &vp[j].1 * right;
            }
            acc += k.transpose() * &w * &vm[i].1 * (-z1 * dt).exp() + up[i].1.transpose() * &w * k * (-z1 * dt).exp();
        }
        acc
    })?;
    Ok(SchwingerReport {
        residual: relative_residual(&direct, &shell.value),
        direct,
        reconstructed: shell.value,
        eps,
        quadrature_error: shell.error,
    })
}

fn two_point_sum(model: &GreenModel, kernel: &WightmanKernel, w: &DMatrix<C>, disp: &[f64], lattice: &LatticeConfig) -> Result<(DMatrix<C>, f64)> {
    let r = disp.iter().map(|v| v * v).sum::<f64>().sqrt();
    let reg = ShellRegulator::new(regulator_width(r, lattice.a), kernel.masses2(), 2);
    let local = kernel.contact().adjoint() * w * kernel.contact();
    let sum = regulated_sum(lattice, kernel.n(), disp, &reg, |q| {
        let g = model.green_at(q)?;
        Ok(g.adjoint() * w * g - &local)
    })?;
    Ok((sum, reg.eps))
}

/// Regulated lattice value of `int dx G(x)^T W G(x + disp)`, which is
/// `Gamma(y1, y2)` at `disp = y1 - y2`: the two-point function of the
/// solution driven by noise with second moment `W`.
pub fn regulated_two_point(model: &GreenModel, weight: &DMatrix<f64>, disp: &[f64], lattice: &LatticeConfig) -> Result<DMatrix<C>> {
    check_grid(model, lattice, disp)?;
    let kernel = model.kernel()?;
    Ok(two_point_sum(model, &kernel, &weight.map(|v| C::new(v, 0.0)), disp, lattice)?.0)
}

#[cfg(test)]
mod tests;

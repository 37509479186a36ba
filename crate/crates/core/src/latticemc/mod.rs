//! Spectral SPDE solver on periodic lattices and Monte Carlo checks of
//! characteristic functionals, moments and covariance.

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::covsolve::CovOperator;
use crate::error::{Error, Result};
use crate::levynoise::{char_functional, sample_noise, FieldKind, FieldSample, LatticeConfig, NoiseSpec};
use crate::momenteng::{lattice_two_point, solution_moments};
use crate::parallel::pool;
use crate::spectral::{green_kernel, transpose_inverse_kernel, transpose_kernel, SpectralKernel};
use crate::symcalc::mass_spectrum;

/// Bumped whenever the fixed probe sets below change.
pub const PROBE_SET_VERSION: u32 = 1;

/// `phi = D~^{-1} eta` with `D~` the pairing transpose, symbol `sigma^T(-p)`.
#[derive(Clone)]
pub struct SpdeSolver {
    n: usize,
    inverse: SpectralKernel,
    forward: SpectralKernel,
}

impl SpdeSolver {
    pub fn new(op: &CovOperator<f64>, lattice: LatticeConfig) -> Result<Self> {
        let spectrum = mass_spectrum(op)?;
        if !spectrum.admissible {
            return Err(Error::NotInvertible("operator is not admissible".into()));
        }
        Ok(Self { n: op.dim(), inverse: transpose_inverse_kernel(op, lattice)?, forward: transpose_kernel(op, lattice)? })
    }

    pub fn lattice(&self) -> &LatticeConfig {
        self.inverse.lattice()
    }

    fn check(&self, f: &FieldSample) -> Result<()> {
        if f.n != self.n || f.lattice != *self.lattice() {
            return Err(Error::DimensionMismatch(format!(
                "field with N = {} on {:?}, solver has N = {} on {:?}",
                f.n,
                f.lattice,
                self.n,
                self.lattice()
            )));
        }
        Ok(())
    }

    pub fn solve(&self, noise: &FieldSample) -> Result<FieldSample> {
        self.check(noise)?;
        Ok(self.inverse.apply(noise, FieldKind::Solution))
    }

    /// The discrete `D~` applied to a field.
    pub fn apply_operator(&self, phi: &FieldSample) -> Result<FieldSample> {
        self.check(phi)?;
        Ok(self.forward.apply(phi, FieldKind::Noise))
    }

    /// `sum_x |(D~ phi)(x) - eta(x)|^2 / sum_x |eta(x)|^2`.
    pub fn residual(&self, phi: &FieldSample, eta: &FieldSample) -> Result<f64> {
        let back = self.apply_operator(phi)?;
        Ok(back.add(eta, -1.0).norm2() / eta.norm2().max(f64::MIN_POSITIVE))
    }
}

pub fn solve_spde(op: &CovOperator<f64>, noise: &FieldSample) -> Result<FieldSample> {
    SpdeSolver::new(op, noise.lattice)?.solve(noise)
}

#[derive(Debug, Clone, Serialize)]
pub struct McEntry {
    pub label: String,
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
    pub z: f64,
}

impl McEntry {
    pub fn new(label: impl Into<String>, estimate: f64, stderr: f64, target: f64) -> Self {
        let diff = estimate - target;
        let z = if stderr > 0.0 {
            diff / stderr
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        };
        Self { label: label.into(), estimate, stderr, target, z }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub entries: Vec<McEntry>,
    pub samples: usize,
    pub seed: u64,
    pub wall_time_s: f64,
    pub max_abs_z: f64,
}

impl McReport {
    fn new(entries: Vec<McEntry>, samples: usize, seed: u64, start: Instant) -> Self {
        let max_abs_z = entries.iter().fold(0.0f64, |m, e| m.max(e.z.abs()));
        Self { entries, samples, seed, wall_time_s: start.elapsed().as_secs_f64(), max_abs_z }
    }

    pub fn passes(&self, z_max: f64) -> bool {
        self.max_abs_z < z_max
    }
}

pub const MIN_SAMPLES: usize = 100;

/// Per-sample statistics over solved fields; sample `i` uses seed `seed ^ i`.
/// Results are reduced in sample order so that they do not depend on the
/// thread count.
pub fn sample_statistics<F>(solver: &SpdeSolver, spec: &NoiseSpec, samples: usize, seed: u64, stat: F) -> Result<Vec<(f64, f64)>>
where
    F: Fn(&FieldSample) -> Vec<f64> + Sync,
{
    if samples < 2 {
        return Err(Error::Invalid(format!("need at least 2 samples, got {samples}")));
    }
    if spec.dim() != solver.n {
        return Err(Error::DimensionMismatch(format!("noise N = {}, operator N = {}", spec.dim(), solver.n)));
    }
    let lattice = *solver.lattice();
    let rows: Vec<Vec<f64>> = pool().install(|| {
        (0..samples)
            .into_par_iter()
            .map(|i| {
                let eta = sample_noise(spec, &lattice, seed ^ i as u64);
                stat(&solver.inverse.apply(&eta, FieldKind::Solution))
            })
            .collect()
    });
    let k = rows[0].len();
    let m = samples as f64;
    Ok((0..k)
        .map(|j| {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / m;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (m - 1.0);
            (mean, (var / m).sqrt())
        })
        .collect())
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::Invalid(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    Ok(())
}

/// Monte Carlo estimate of `E e^{i(phi, f)}` against `Gamma_eta(D^{-1} f)`.
pub fn empirical_char_functional(op: &CovOperator<f64>, spec: &NoiseSpec, fs: &[FieldSample], samples: usize, seed: u64) -> Result<McReport> {
    check_samples(samples)?;
    let start = Instant::now();
    let lattice = fs.first().ok_or_else(|| Error::Invalid("no test functions".into()))?.lattice;
    let solver = SpdeSolver::new(op, lattice)?;
    let green = green_kernel(op, lattice)?;
    let stats = sample_statistics(&solver, spec, samples, seed, |phi| {
        fs.iter()
            .flat_map(|f| {
                let z = Complex64::from_polar(1.0, phi.pairing(f));
                [z.re, z.im]
            })
            .collect()
    })?;
    let mut entries = Vec::new();
    for (i, f) in fs.iter().enumerate() {
        let target = char_functional(spec, &green.apply(f, FieldKind::Test));
        let (re, im) = (stats[2 * i], stats[2 * i + 1]);
        entries.push(McEntry::new(format!("f{i}.re"), re.0, re.1, target.re));
        entries.push(McEntry::new(format!("f{i}.im"), im.0, im.1, target.im));
    }
    Ok(McReport::new(entries, samples, seed, start))
}

/// Monte Carlo estimates of `E prod_i (phi, f_i)` for each probe.
pub fn empirical_moments(op: &CovOperator<f64>, spec: &NoiseSpec, probes: &[Vec<FieldSample>], samples: usize, seed: u64) -> Result<McReport> {
    check_samples(samples)?;
    let start = Instant::now();
    let lattice = probes
        .iter()
        .flatten()
        .next()
        .ok_or_else(|| Error::Invalid("no probes".into()))?
        .lattice;
    let solver = SpdeSolver::new(op, lattice)?;
    let stats = sample_statistics(&solver, spec, samples, seed, |phi| {
        probes.iter().map(|fs| fs.iter().map(|f| phi.pairing(f)).product()).collect()
    })?;
    let entries = probes
        .iter()
        .zip(stats)
        .enumerate()
        .map(|(i, (fs, (est, se)))| Ok(McEntry::new(format!("probe{i}.n{}", fs.len()), est, se, solution_moments(op, spec, fs)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(McReport::new(entries, samples, seed, start))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TwoPointProbe {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub a: usize,
    pub b: usize,
}

/// Ten site pairs at small separations, components cycling through `n`.
pub fn two_point_probes(lattice: &LatticeConfig, n: usize) -> Vec<TwoPointProbe> {
    const SHIFTS: [[usize; 3]; 10] =
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [2, 0, 0], [0, 2, 1], [1, 1, 1], [0, 0, 0], [1, 0, 1]];
    let d = lattice.d;
    let base: Vec<usize> = (0..d).map(|j| (j + 1) % lattice.l).collect();
    SHIFTS
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let y: Vec<usize> = (0..d).map(|j| (base[j] + s.get(j).copied().unwrap_or(0)) % lattice.l).collect();
            TwoPointProbe { x: base.clone(), y, a: i % n, b: (i / 2 + i) % n }
        })
        .collect()
}

/// Empirical `E phi_a(x) phi_b(y)` against the lattice-exact kernel.
pub fn empirical_two_point(
    op: &CovOperator<f64>,
    spec: &NoiseSpec,
    lattice: LatticeConfig,
    probes: &[TwoPointProbe],
    samples: usize,
    seed: u64,
) -> Result<McReport> {
    check_samples(samples)?;
    let start = Instant::now();
    let solver = SpdeSolver::new(op, lattice)?;
    let exact = lattice_two_point(op, spec, lattice)?;
    let idx: Vec<(usize, usize)> = probes.iter().map(|p| (lattice.index(&p.x), lattice.index(&p.y))).collect();
    let stats = sample_statistics(&solver, spec, samples, seed, |phi| {
        probes.iter().zip(&idx).map(|(p, &(x, y))| phi.site(x)[p.a] * phi.site(y)[p.b]).collect()
    })?;
    let entries = probes
        .iter()
        .zip(&idx)
        .zip(stats)
        .map(|((p, &(x, y)), (est, se))| {
            McEntry::new(format!("{:?}{:?}.{}{}", p.x, p.y, p.a, p.b), est, se, exact.at(x, y)[(p.a, p.b)])
        })
        .collect();
    Ok(McReport::new(entries, samples, seed, start))
}

/// Signed permutation matrices of determinant one map the lattice onto
/// itself; `tau` is found by a breadth-first search over quarter-turns.
#[derive(Debug, Clone)]
pub struct LatticeSymmetry {
    pub g: DMatrix<i64>,
    pub tau: DMatrix<f64>,
}

impl LatticeSymmetry {
    pub fn new(op: &CovOperator<f64>, g: DMatrix<i64>) -> Result<Self> {
        let d = op.space_dim();
        if g.nrows() != d || g.ncols() != d {
            return Err(Error::DimensionMismatch(format!("symmetry is {}x{}, space is {d}-dimensional", g.nrows(), g.ncols())));
        }
        let signed_perm = g.row_iter().all(|r| r.iter().filter(|&&x| x != 0).count() == 1 && r.iter().all(|&x| x.abs() <= 1))
            && g.column_iter().all(|c| c.iter().filter(|&&x| x != 0).count() == 1);
        if !signed_perm || g.map(|x| x as f64).determinant() < 0.5 {
            return Err(Error::UnsupportedSymmetry(format!("{g} is not a rotation by quarter turns")));
        }
        let rep = op.rep();
        let group = rep.group();
        let turns: Vec<(DMatrix<i64>, DMatrix<f64>)> = (0..group.count())
            .map(|k| {
                let mut c = vec![0.0; group.count()];
                c[k] = FRAC_PI_2;
                Ok((group.element(&c)?.map(|x| x.round() as i64), rep.exponential(&c)?))
            })
            .collect::<Result<_>>()?;
        let n = rep.dim();
        let mut seen = vec![DMatrix::<i64>::identity(d, d)];
        let mut queue = VecDeque::from([(DMatrix::<i64>::identity(d, d), DMatrix::<f64>::identity(n, n))]);
        while let Some((h, t)) = queue.pop_front() {
            if h == g {
                return Ok(Self { g, tau: t });
            }
            for (gk, tk) in &turns {
                let next = gk * &h;
                if !seen.contains(&next) {
                    seen.push(next.clone());
                    queue.push_back((next, tk * &t));
                }
            }
        }
        Err(Error::UnsupportedSymmetry(format!("{g} not reached by quarter turns")))
    }

    /// Quarter turn in the plane of axes `j < k`.
    pub fn quarter_turn(op: &CovOperator<f64>, j: usize, k: usize) -> Result<Self> {
        let d = op.space_dim();
        let mut g = DMatrix::<i64>::identity(d, d);
        g[(j, j)] = 0;
        g[(k, k)] = 0;
        g[(j, k)] = -1;
        g[(k, j)] = 1;
        Self::new(op, g)
    }

    pub fn map_site(&self, lattice: &LatticeConfig, coords: &[usize]) -> Vec<usize> {
        let l = lattice.l as i64;
        (0..coords.len())
            .map(|i| (0..coords.len()).map(|j| self.g[(i, j)] * coords[j] as i64).sum::<i64>().rem_euclid(l) as usize)
            .collect()
    }
}

/// Checks `E phi(gx) phi(gy)^T = tau(g) E phi(x) phi(y)^T tau(g)^T` with
/// paired per-sample differences, one entry per probe and component pair.
pub fn covariance_transform_check(
    op: &CovOperator<f64>,
    spec: &NoiseSpec,
    lattice: LatticeConfig,
    sym: &LatticeSymmetry,
    probes: &[(Vec<usize>, Vec<usize>)],
    samples: usize,
    seed: u64,
) -> Result<McReport> {
    check_samples(samples)?;
    let start = Instant::now();
    let solver = SpdeSolver::new(op, lattice)?;
    let n = op.dim();
    let sites: Vec<[usize; 4]> = probes
        .iter()
        .map(|(x, y)| {
            [lattice.index(x), lattice.index(y), lattice.index(&sym.map_site(&lattice, x)), lattice.index(&sym.map_site(&lattice, y))]
        })
        .collect();
    let tau = &sym.tau;
    let stats = sample_statistics(&solver, spec, samples, seed, |phi| {
        let mut out = Vec::with_capacity(sites.len() * n * n);
        for s in &sites {
            let v = |site: usize| nalgebra::DVector::from_column_slice(phi.site(site));
            let moved = v(s[2]) * v(s[3]).transpose();
            let rotated = tau * (v(s[0]) * v(s[1]).transpose()) * tau.transpose();
            out.extend((moved - rotated).iter().copied());
        }
        out
    })?;
    let mut entries = Vec::new();
    for (pi, chunk) in stats.chunks(n * n).enumerate() {
        for (k, &(est, se)) in chunk.iter().enumerate() {
            // column-major entry k
            entries.push(McEntry::new(format!("probe{pi}.{}{}", k % n, k / n), est, se, 0.0));
        }
    }
    Ok(McReport::new(entries, samples, seed, start))
}

/// Site pairs used by [`covariance_transform_check`].
pub fn transform_probes(lattice: &LatticeConfig) -> Vec<(Vec<usize>, Vec<usize>)> {
    two_point_probes(lattice, 1).into_iter().map(|p| (p.x, p.y)).collect()
}

/// Two-point and four-point probes made of Gaussian bumps of width
/// `2a` at fixed sites, components cycling through `n`.
pub fn moment_probes(lattice: &LatticeConfig, n: usize) -> Vec<Vec<FieldSample>> {
    let bump = |center: &[usize], comp: usize| {
        let l = lattice.l as f64;
        FieldSample::from_scalar(*lattice, n, comp, |c| {
            let r2: f64 = c
                .iter()
                .zip(center)
                .map(|(&x, &y)| {
                    let d = (x as f64 - y as f64).rem_euclid(l);
                    d.min(l - d).powi(2)
                })
                .sum();
            (-r2 / 8.0).exp()
        })
    };
    let d = lattice.d;
    let site = |k: usize| -> Vec<usize> { (0..d).map(|j| (k * (j + 1)) % lattice.l).collect() };
    let mut out = Vec::new();
    for i in 0..5 {
        out.push(vec![bump(&site(i), i % n), bump(&site(i + 1), (i + 1) % n)]);
    }
    for i in 0..5 {
        out.push((0..4).map(|j| bump(&site(i + j / 2), (i + j) % n)).collect());
    }
    out
}

#[cfg(test)]
mod tests;

//! Spectral operators on periodic lattices.
//!
//! Transforms are continuum-normalized: `f^(p) = a^D sum_x e^{-ipx} f(x)`
//! and `f(x) = V^{-1} sum_p e^{ipx} f^(p)` with `V = (La)^D` and lattice
//! momenta `p_j = 2 pi k_j / (L a)`, `k_j` folded to `(-L/2, L/2)`. The
//! Nyquist component `k_j = L/2` is its own negative, so it is mapped to
//! momentum 0 to keep real fields real.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::covsolve::CovOperator;
use crate::error::{Error, Result};
use crate::levynoise::{FieldKind, FieldSample, LatticeConfig};

/// Relative determinant floor for inverting symbols on a grid.
pub const SINGULAR_REL: f64 = 1e-12;

/// `sigma(p) = i sum_j B_j p_j + M`.
pub fn symbol_at(op: &CovOperator<f64>, p: &[f64]) -> DMatrix<Complex64> {
    op.b().iter().zip(p).fold(op.mass().map(|x| Complex64::new(x, 0.0)), |acc, (b, &pj)| {
        acc + b.map(|x| Complex64::new(0.0, x * pj))
    })
}

/// Symbol of the pairing transpose, `sigma^T(-p)`.
pub fn transpose_symbol_at(op: &CovOperator<f64>, p: &[f64]) -> DMatrix<Complex64> {
    let minus: Vec<f64> = p.iter().map(|x| -x).collect();
    symbol_at(op, &minus).transpose()
}

fn check_lattice(op: &CovOperator<f64>, lattice: &LatticeConfig) -> Result<()> {
    if op.space_dim() != lattice.d {
        return Err(Error::DimensionMismatch(format!(
            "operator on R^{} used on a {}-dimensional lattice",
            op.space_dim(),
            lattice.d
        )));
    }
    Ok(())
}

/// `D^{-1}`, the Green function applied to test functions.
pub fn green_kernel(op: &CovOperator<f64>, lattice: LatticeConfig) -> Result<SpectralKernel> {
    check_lattice(op, &lattice)?;
    SpectralKernel::inverse_of(lattice, |p| symbol_at(op, p), SINGULAR_REL)
}

/// The transposed operator that drives the SPDE.
pub fn transpose_kernel(op: &CovOperator<f64>, lattice: LatticeConfig) -> Result<SpectralKernel> {
    check_lattice(op, &lattice)?;
    Ok(SpectralKernel::new(lattice, |p| transpose_symbol_at(op, p)))
}

pub fn transpose_inverse_kernel(op: &CovOperator<f64>, lattice: LatticeConfig) -> Result<SpectralKernel> {
    check_lattice(op, &lattice)?;
    SpectralKernel::inverse_of(lattice, |p| transpose_symbol_at(op, p), SINGULAR_REL)
}

pub fn mode_momentum(lattice: &LatticeConfig, mode: usize) -> Vec<f64> {
    let l = lattice.l;
    lattice
        .coords(mode)
        .iter()
        .map(|&k| {
            let kk = if 2 * k == l {
                0.0
            } else if 2 * k > l {
                k as f64 - l as f64
            } else {
                k as f64
            };
            2.0 * PI * kk / (l as f64 * lattice.a)
        })
        .collect()
}

pub fn momenta(lattice: &LatticeConfig) -> Vec<Vec<f64>> {
    (0..lattice.sites()).map(|m| mode_momentum(lattice, m)).collect()
}

/// Unnormalized multidimensional FFT along every axis.
#[derive(Clone)]
pub struct LatticeFft {
    lattice: LatticeConfig,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl LatticeFft {
    pub fn new(lattice: LatticeConfig) -> Self {
        let mut planner = FftPlanner::new();
        Self { lattice, forward: planner.plan_fft_forward(lattice.l), inverse: planner.plan_fft_inverse(lattice.l) }
    }

    pub fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let (l, d) = (self.lattice.l, self.lattice.d);
        assert_eq!(data.len(), self.lattice.sites());
        let fft = if inverse { &self.inverse } else { &self.forward };
        let mut line = vec![Complex64::new(0.0, 0.0); l];
        for axis in 0..d {
            let stride = l.pow((d - 1 - axis) as u32);
            for start in 0..data.len() {
                if (start / stride) % l != 0 {
                    continue;
                }
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[start + k * stride];
                }
                fft.process(&mut line);
                for (k, v) in line.iter().enumerate() {
                    data[start + k * stride] = *v;
                }
            }
        }
    }

    /// Per-mode component vectors of `f^`.
    pub fn to_momentum(&self, f: &FieldSample) -> Vec<DVector<Complex64>> {
        let (sites, n) = (self.lattice.sites(), f.n);
        let mut comps: Vec<Vec<Complex64>> = (0..n)
            .map(|c| (0..sites).map(|s| Complex64::new(f.values[s * n + c], 0.0)).collect())
            .collect();
        for c in comps.iter_mut() {
            self.transform(c, false);
        }
        let cell = self.lattice.cell();
        (0..sites).map(|m| DVector::from_fn(n, |c, _| comps[c][m] * cell)).collect()
    }

    /// Real part of the inverse transform.
    pub fn to_position(&self, hat: &[DVector<Complex64>], kind: FieldKind) -> FieldSample {
        let sites = self.lattice.sites();
        let n = hat.first().map_or(0, |v| v.len());
        let mut out = FieldSample::zeros(self.lattice, n, kind);
        let norm = 1.0 / self.lattice.volume();
        for c in 0..n {
            let mut buf: Vec<Complex64> = hat.iter().map(|v| v[c]).collect();
            self.transform(&mut buf, true);
            for s in 0..sites {
                out.values[s * n + c] = buf[s].re * norm;
            }
        }
        out
    }
}

/// Translation-invariant operator given by a matrix symbol per mode.
#[derive(Clone)]
pub struct SpectralKernel {
    fft: LatticeFft,
    mats: Vec<DMatrix<Complex64>>,
}

impl SpectralKernel {
    pub fn new(lattice: LatticeConfig, symbol: impl Fn(&[f64]) -> DMatrix<Complex64>) -> Self {
        let mats = momenta(&lattice).iter().map(|p| symbol(p)).collect();
        Self { fft: LatticeFft::new(lattice), mats }
    }

    /// Inverse of a symbol, aborting at modes where `|det| < rel * scale`
    /// with `scale` the largest entry raised to the matrix size.
    pub fn inverse_of(lattice: LatticeConfig, symbol: impl Fn(&[f64]) -> DMatrix<Complex64>, rel: f64) -> Result<Self> {
        let mut mats = Vec::with_capacity(lattice.sites());
        for (mode, p) in momenta(&lattice).iter().enumerate() {
            let s = symbol(p);
            let n = s.nrows();
            let scale = s.iter().fold(0.0f64, |m, z| m.max(z.norm())).powi(n as i32);
            let lu = s.lu();
            let det = lu.determinant().norm();
            if !(det > rel * scale) {
                return Err(Error::NearSingularMode { mode: lattice.coords(mode), det });
            }
            mats.push(lu.try_inverse().expect("nonzero determinant"));
        }
        Ok(Self { fft: LatticeFft::new(lattice), mats })
    }

    pub fn lattice(&self) -> &LatticeConfig {
        &self.fft.lattice
    }

    pub fn matrix(&self, mode: usize) -> &DMatrix<Complex64> {
        &self.mats[mode]
    }

    pub fn fft(&self) -> &LatticeFft {
        &self.fft
    }

    pub fn apply(&self, f: &FieldSample, kind: FieldKind) -> FieldSample {
        let hat = self.fft.to_momentum(f);
        let out: Vec<DVector<Complex64>> = hat.iter().zip(&self.mats).map(|(v, m)| m * v).collect();
        self.fft.to_position(&out, kind)
    }
}

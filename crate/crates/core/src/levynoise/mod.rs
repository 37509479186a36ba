//! Gaussian plus compound-Poisson white noise with a finite symmetric
//! atomic Levy measure: the exponent `psi`, characteristic functionals,
//! covariance criteria, lattice sampling and the reflection-positivity Gram
//! matrix.

mod lattice;

pub use lattice::{dump_samples, load_samples, DumpHeader, FieldKind, FieldSample, LatticeConfig, DUMP_LAYOUT};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::pool;
use crate::repcore::Representation;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub weight: f64,
    pub alpha: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    n: usize,
    a: DMatrix<f64>,
    atoms: Vec<Atom>,
    symmetrized: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomJson {
    pub weight: f64,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpecJson {
    #[serde(rename = "N")]
    pub n: usize,
    /// Row-major `N x N`.
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(default)]
    pub atoms: Vec<AtomJson>,
}

impl NoiseSpec {
    /// Missing mirror atoms `(lambda, -alpha)` are added; see
    /// [`NoiseSpec::was_symmetrized`].
    pub fn new(a: DMatrix<f64>, atoms: Vec<Atom>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch("covariance must be square".into()));
        }
        let scale = a.amax().max(1.0);
        if (&a - a.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Invalid("covariance is not symmetric".into()));
        }
        if n > 0 && a.clone().symmetric_eigenvalues().min() < -1e-12 * scale {
            return Err(Error::Invalid("covariance is not positive semidefinite".into()));
        }
        for at in &atoms {
            if at.alpha.len() != n {
                return Err(Error::DimensionMismatch(format!("atom of length {} for N = {n}", at.alpha.len())));
            }
            if !(at.weight > 0.0 && at.weight.is_finite()) {
                return Err(Error::Invalid(format!("atom weight must be positive, got {}", at.weight)));
            }
            if at.alpha.iter().all(|&x| x == 0.0) {
                return Err(Error::Invalid("atoms must avoid the origin".into()));
            }
        }
        let mut closed = atoms.clone();
        for at in &atoms {
            let has_mirror = atoms.iter().any(|b| {
                (b.weight - at.weight).abs() <= 1e-12 * at.weight && (&b.alpha + &at.alpha).amax() <= 1e-12 * at.alpha.amax()
            });
            if !has_mirror {
                closed.push(Atom { weight: at.weight, alpha: -&at.alpha });
            }
        }
        let symmetrized = closed.len() != atoms.len();
        Ok(Self { n, a, atoms: closed, symmetrized })
    }

    pub fn gaussian(a: DMatrix<f64>) -> Result<Self> {
        Self::new(a, Vec::new())
    }

    /// Pairs `(lambda, +-alpha)` for each given atom.
    pub fn symmetric_pairs(a: DMatrix<f64>, pairs: &[(f64, Vec<f64>)]) -> Result<Self> {
        let atoms = pairs
            .iter()
            .flat_map(|(w, al)| {
                let v = DVector::from_vec(al.clone());
                [Atom { weight: *w, alpha: v.clone() }, Atom { weight: *w, alpha: -v }]
            })
            .collect();
        Self::new(a, atoms)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn was_symmetrized(&self) -> bool {
        self.symmetrized
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// `A + sum_k lambda_k alpha_k alpha_k^T`, the covariance of one cell.
    pub fn second_moment(&self) -> DMatrix<f64> {
        self.atoms.iter().fold(self.a.clone(), |acc, at| acc + at.alpha.clone() * at.alpha.transpose() * at.weight)
    }

    pub fn from_json(json: &NoiseSpecJson) -> Result<Self> {
        if json.a.len() != json.n * json.n {
            return Err(Error::DimensionMismatch(format!("A needs {} entries", json.n * json.n)));
        }
        let a = DMatrix::from_row_slice(json.n, json.n, &json.a);
        let atoms = json
            .atoms
            .iter()
            .map(|at| Atom { weight: at.weight, alpha: DVector::from_vec(at.alpha.clone()) })
            .collect();
        Self::new(a, atoms)
    }

    pub fn to_json(&self) -> NoiseSpecJson {
        NoiseSpecJson {
            n: self.n,
            a: (0..self.n).flat_map(|i| (0..self.n).map(move |j| (i, j))).map(|(i, j)| self.a[(i, j)]).collect(),
            atoms: self.atoms.iter().map(|at| AtomJson { weight: at.weight, alpha: at.alpha.iter().copied().collect() }).collect(),
        }
    }
}

/// `psi(y) = <y, A y>/2 + sum_k lambda_k (1 - e^{i<alpha_k, y>} + i<alpha_k, y>)`.
pub fn psi_eval(spec: &NoiseSpec, y: &[f64]) -> Complex64 {
    let yv = DVector::from_column_slice(y);
    let gauss = 0.5 * yv.dot(&(&spec.a * &yv));
    spec.atoms.iter().fold(Complex64::new(gauss, 0.0), |acc, at| {
        let t = at.alpha.dot(&yv);
        acc + at.weight * (Complex64::new(1.0, t) - Complex64::from_polar(1.0, t))
    })
}

/// `exp(-a^D sum_x psi(f(x)))`.
pub fn char_functional(spec: &NoiseSpec, f: &FieldSample) -> Complex64 {
    let cell = f.lattice.cell();
    let s: Complex64 = (0..f.lattice.sites()).map(|x| psi_eval(spec, f.site(x))).sum();
    (-s * cell).exp()
}

/// `sum_k lambda_k e^{t |alpha_k|}`.
pub fn moment_generating_bound(spec: &NoiseSpec, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::OutOfDomain(format!("t = {t} must be non-negative")));
    }
    Ok(spec.atoms.iter().map(|a| a.weight * (t * a.alpha.norm()).exp()).sum())
}

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceReport {
    /// `beta = 0` holds by construction.
    pub drift_free: bool,
    pub gaussian_residual: f64,
    /// `(order, residual)` for even orders `2..=max_order`.
    pub moment_residuals: Vec<(usize, f64)>,
    pub pass: bool,
}

/// Symmetric moment tensor `sum_k lambda_k alpha_k^{(x) order}`, flattened.
pub fn moment_tensor(spec: &NoiseSpec, order: usize) -> Vec<f64> {
    let n = spec.n;
    let size = n.pow(order as u32);
    let mut t = vec![0.0; size];
    for at in &spec.atoms {
        for (idx, slot) in t.iter_mut().enumerate() {
            let mut rem = idx;
            let mut prod = at.weight;
            for _ in 0..order {
                prod *= at.alpha[rem % n];
                rem /= n;
            }
            *slot += prod;
        }
    }
    t
}

/// `sum_slots (X acting on that slot) T`, the infinitesimal change of `T`.
fn tensor_variation(t: &[f64], x: &DMatrix<f64>, n: usize, order: usize) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    for slot in 0..order {
        let stride = n.pow(slot as u32);
        for (idx, o) in out.iter_mut().enumerate() {
            let i = (idx / stride) % n;
            let base = idx - i * stride;
            *o += (0..n).map(|j| x[(i, j)] * t[base + j * stride]).sum::<f64>();
        }
    }
    out
}

/// Lemma-style criteria: `X^T A + A X = 0` for every generator image `X`,
/// and invariance of the even moment tensors of `nu` up to `max_order`.
pub fn is_tau_covariant(spec: &NoiseSpec, rep: &Representation<f64>, max_order: usize) -> Result<CovarianceReport> {
    if rep.dim() != spec.n {
        return Err(Error::DimensionMismatch(format!("rep N = {} vs noise N = {}", rep.dim(), spec.n)));
    }
    if max_order < 2 {
        return Err(Error::OutOfDomain("max_order must be at least 2".into()));
    }
    let gaussian_residual = rep
        .dgen()
        .iter()
        .map(|x| (x.transpose() * &spec.a + &spec.a * x).amax())
        .fold(0.0, f64::max);
    let moment_residuals: Vec<(usize, f64)> = (2..=max_order)
        .step_by(2)
        .map(|k| {
            let t = moment_tensor(spec, k);
            let r = rep
                .dgen()
                .iter()
                .map(|x| tensor_variation(&t, x, spec.n, k).iter().fold(0.0f64, |m, v| m.max(v.abs())))
                .fold(0.0, f64::max);
            (k, r)
        })
        .collect();
    let pass = gaussian_residual < 1e-8 && moment_residuals.iter().all(|&(_, r)| r < 1e-8);
    Ok(CovarianceReport { drift_free: true, gaussian_residual, moment_residuals, pass })
}

/// Poisson points as `(site, atom index)`: total count `Poisson(sum lambda V)`,
/// uniform sites, marks drawn proportionally to the weights.
pub fn sample_poisson_points(spec: &NoiseSpec, lattice: &LatticeConfig, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mass = spec.total_mass();
    if mass == 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(mass * lattice.volume()).expect("positive intensity").sample(rng) as usize;
    let cumulative: Vec<f64> = spec
        .atoms
        .iter()
        .scan(0.0, |acc, a| {
            *acc += a.weight / mass;
            Some(*acc)
        })
        .collect();
    (0..count)
        .map(|_| {
            let site = rng.random_range(0..lattice.sites());
            let u: f64 = rng.random();
            let k = cumulative.iter().position(|&c| u < c).unwrap_or(spec.atoms.len() - 1);
            (site, k)
        })
        .collect()
}

/// Noise with per-site covariance `A / a^D` plus Poisson deposits
/// `alpha / a^D`. Deterministic in `seed`.
pub fn sample_noise(spec: &NoiseSpec, lattice: &LatticeConfig, seed: u64) -> FieldSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n;
    let cell = lattice.cell();
    let mut out = FieldSample::zeros(*lattice, n, FieldKind::Noise);
    if spec.a.amax() > 0.0 {
        let eig = spec.a.clone().symmetric_eigen();
        let root = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| (v.max(0.0) / cell).sqrt()));
        for s in 0..lattice.sites() {
            let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let v = &root * z;
            out.site_mut(s).copy_from_slice(v.as_slice());
        }
    }
    for (site, k) in sample_poisson_points(spec, lattice, &mut rng) {
        for (v, a) in out.site_mut(site).iter_mut().zip(spec.atoms[k].alpha.iter()) {
            *v += a / cell;
        }
    }
    out
}

/// Samples `i = 0..count` with seeds `seed ^ i`, in parallel.
pub fn sample_noise_batch(spec: &NoiseSpec, lattice: &LatticeConfig, seed: u64, count: usize) -> Vec<FieldSample> {
    pool().install(|| (0..count as u64).into_par_iter().map(|i| sample_noise(spec, lattice, seed ^ i)).collect())
}

#[derive(Debug, Clone)]
pub struct GramReport {
    pub matrix: DMatrix<Complex64>,
    pub hermitian_defect: f64,
    pub min_eigenvalue: f64,
    pub psd: bool,
    /// `max |M_kl - Gamma(f_k) conj(Gamma(f_l))|`.
    pub rank1_defect: f64,
}

/// Time reflection `(R f)(t, x) = R f(-t, x)` on axis 0.
pub fn reflect_time(f: &FieldSample, r: &DMatrix<f64>) -> FieldSample {
    let lat = f.lattice;
    let mut out = FieldSample::zeros(lat, f.n, f.kind);
    for s in 0..lat.sites() {
        let mut c = lat.coords(s);
        c[0] = (lat.l - c[0]) % lat.l;
        let v = r * DVector::from_column_slice(f.site(s));
        out.site_mut(lat.index(&c)).copy_from_slice(v.as_slice());
    }
    out
}

/// `M_kl = Gamma(f_k - R f_l)`. Test functions must vanish outside the
/// strictly positive time slices `1 <= t < L/2`.
pub fn reflection_positivity_gram(spec: &NoiseSpec, r: &DMatrix<f64>, testfns: &[FieldSample]) -> Result<GramReport> {
    for (k, f) in testfns.iter().enumerate() {
        let lat = f.lattice;
        for s in 0..lat.sites() {
            let t = lat.coords(s)[0];
            if !(t >= 1 && 2 * t < lat.l) && f.site(s).iter().any(|&v| v != 0.0) {
                return Err(Error::BadSupport(format!("test function {k} is nonzero at time slice {t}")));
            }
        }
    }
    let k = testfns.len();
    let reflected: Vec<FieldSample> = testfns.iter().map(|f| reflect_time(f, r)).collect();
    let m = DMatrix::from_fn(k, k, |i, j| char_functional(spec, &testfns[i].add(&reflected[j], -1.0)));
    let hermitian_defect = (&m - m.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let min_eigenvalue = if k == 0 { 0.0 } else { herm.symmetric_eigenvalues().min() };
    let v: Vec<Complex64> = testfns.iter().map(|f| char_functional(spec, f)).collect();
    let rank1_defect = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| (m[(i, j)] - v[i] * v[j].conj()).norm())
        .fold(0.0, f64::max);
    Ok(GramReport { matrix: m, hermitian_defect, min_eigenvalue, psd: min_eigenvalue >= -1e-9, rank1_defect })
}

/// `Gamma_chi(f) = e^{i (chi, f)} Gamma(f)` for a deterministic shift `chi`.
pub struct ShiftedFunctional<F> {
    base: F,
    chi: FieldSample,
}

impl<F: Fn(&FieldSample) -> Complex64> ShiftedFunctional<F> {
    pub fn new(base: F, chi: FieldSample) -> Self {
        Self { base, chi }
    }

    pub fn eval(&self, f: &FieldSample) -> Complex64 {
        Complex64::from_polar(1.0, self.chi.pairing(f)) * (self.base)(f)
    }
}

pub fn shift_solution_functional<F: Fn(&FieldSample) -> Complex64>(base: F, chi: FieldSample) -> ShiftedFunctional<F> {
    ShiftedFunctional::new(base, chi)
}

//! Exact moments of the noise and of the solution field: set partitions,
//! cumulant expansions, two-point kernels and an integration-by-parts check.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::covsolve::CovOperator;
use crate::error::{Error, Result};
use crate::levynoise::{char_functional, FieldKind, FieldSample, LatticeConfig, NoiseSpec};
use crate::spectral::{green_kernel, LatticeFft, SpectralKernel, SINGULAR_REL};
use crate::symcalc::{invert_symbol, RationalMatrix};

pub const MAX_PARTITION: usize = 10;
pub const MAX_MOMENT: usize = 8;

/// Blocks of 0-based indices, each sorted, ordered by smallest element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetPartition {
    pub blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    fn from_growth(rgs: &[usize]) -> Self {
        let k = rgs.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); k];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(i);
        }
        Self { blocks }
    }
}

/// All partitions of `{0..n}` via restricted growth strings.
pub fn partitions(n: usize) -> Result<Vec<SetPartition>> {
    if n == 0 || n > MAX_PARTITION {
        return Err(Error::TooLarge { what: "partition size", value: n, limit: MAX_PARTITION });
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    loop {
        out.push(SetPartition::from_growth(&rgs));
        // next growth string: rgs[i] <= 1 + max(rgs[..i])
        let mut i = n - 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            let bound = rgs[..i].iter().max().copied().unwrap_or(0) + 1;
            if rgs[i] < bound {
                rgs[i] += 1;
                rgs[i + 1..].iter_mut().for_each(|r| *r = 0);
                break;
            }
            i -= 1;
        }
    }
}

/// Stirling numbers of the second kind, `(1/p!) sum_j (-1)^j C(p,j) (p-j)^n`.
/// Zero when `p > n` or `p = 0 < n`.
pub fn stirling2(n: u32, p: u32) -> u64 {
    if p > n {
        return 0;
    }
    if n == 0 {
        return 1;
    }
    let mut sum: i128 = 0;
    let mut binom: i128 = 1;
    for j in 0..=p {
        let term = binom * i128::from(p - j).pow(n);
        sum += if j % 2 == 0 { term } else { -term };
        binom = binom * i128::from(p - j) / i128::from(j + 1);
    }
    let fact: i128 = (1..=i128::from(p)).product();
    (sum / fact) as u64
}

pub fn bell(n: u32) -> u64 {
    (0..=n).map(|p| stirling2(n, p)).sum()
}

fn check_fields(spec: &NoiseSpec, fs: &[FieldSample]) -> Result<()> {
    if fs.len() > MAX_MOMENT {
        return Err(Error::TooLarge { what: "moment order", value: fs.len(), limit: MAX_MOMENT });
    }
    if let Some(f0) = fs.first() {
        if fs.iter().any(|f| f.lattice != f0.lattice || f.n != spec.dim()) {
            return Err(Error::DimensionMismatch(format!(
                "test functions must share one lattice and have {} components",
                spec.dim()
            )));
        }
    }
    Ok(())
}

/// Joint cumulant of `(eta, f_i)` over the index set `mask`.
fn block_cumulant(spec: &NoiseSpec, fs: &[FieldSample], mask: usize) -> f64 {
    let idx: Vec<usize> = (0..fs.len()).filter(|i| mask >> i & 1 == 1).collect();
    if idx.len() < 2 {
        return 0.0;
    }
    let lat = fs[0].lattice;
    let cell = lat.cell();
    let mut total = 0.0;
    if idx.len() == 2 {
        let a = spec.covariance();
        let (f, g) = (&fs[idx[0]], &fs[idx[1]]);
        total += cell
            * (0..lat.sites())
                .map(|x| {
                    let (u, v) = (DVector::from_column_slice(f.site(x)), DVector::from_column_slice(g.site(x)));
                    u.dot(&(a * v))
                })
                .sum::<f64>();
    }
    for atom in spec.atoms() {
        let s: f64 = (0..lat.sites())
            .map(|x| idx.iter().map(|&i| atom.alpha.iter().zip(fs[i].site(x)).map(|(a, b)| a * b).sum::<f64>()).product::<f64>())
            .sum();
        total += atom.weight * cell * s;
    }
    total
}

/// `E[prod_i (eta, f_i)]` as a sum over partitions of products of block
/// cumulants. Pairs carry the Gaussian covariance plus the second Levy
/// moment; larger blocks are purely Poisson.
pub fn noise_moments(spec: &NoiseSpec, fs: &[FieldSample]) -> Result<f64> {
    check_fields(spec, fs)?;
    let n = fs.len();
    if n == 0 {
        return Ok(1.0);
    }
    let cumulants: Vec<f64> = (0..1usize << n).map(|m| block_cumulant(spec, fs, m)).collect();
    Ok(partitions(n)?
        .iter()
        .map(|p| p.blocks.iter().map(|b| cumulants[b.iter().fold(0, |m, &i| m | 1 << i)]).product::<f64>())
        .sum())
}

/// The same moments for `phi = D^{-1} eta`: each `f_i` is replaced by the
/// Green-applied `g_i` on the lattice.
pub fn solution_moments(op: &CovOperator<f64>, spec: &NoiseSpec, fs: &[FieldSample]) -> Result<f64> {
    check_fields(spec, fs)?;
    let Some(f0) = fs.first() else { return Ok(1.0) };
    let green = admissible_green_kernel(op, f0.lattice)?;
    let gs: Vec<FieldSample> = fs.iter().map(|f| green.apply(f, FieldKind::Test)).collect();
    noise_moments(spec, &gs)
}

fn admissible_green_kernel(op: &CovOperator<f64>, lattice: LatticeConfig) -> Result<SpectralKernel> {
    let spectrum = crate::symcalc::mass_spectrum(op)?;
    if !spectrum.admissible {
        return Err(Error::NotInvertible("operator is not admissible".into()));
    }
    green_kernel(op, lattice)
}

/// Momentum-space two-point kernel `G^dag C G` of the solution field.
#[derive(Debug, Clone)]
pub struct SchwingerTwoPoint {
    green: RationalMatrix<f64>,
    a: DMatrix<Complex64>,
    atoms: Vec<(f64, DVector<Complex64>)>,
}

impl SchwingerTwoPoint {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn green(&self, p: &[f64]) -> DMatrix<Complex64> {
        self.green.eval(p)
    }

    pub fn green_matrix(&self) -> &RationalMatrix<f64> {
        &self.green
    }

    pub fn gaussian(&self, p: &[f64]) -> DMatrix<Complex64> {
        let g = self.green(p);
        g.adjoint() * &self.a * g
    }

    /// Unweighted `(G^dag alpha)(G^dag alpha)^dag` for each atom.
    pub fn atom_parts(&self, p: &[f64]) -> Vec<(f64, DMatrix<Complex64>)> {
        let gd = self.green(p).adjoint();
        self.atoms
            .iter()
            .map(|(w, al)| {
                let v = &gd * al;
                (*w, &v * v.adjoint())
            })
            .collect()
    }

    pub fn poisson(&self, p: &[f64]) -> DMatrix<Complex64> {
        let n = self.dim();
        self.atom_parts(p).into_iter().fold(DMatrix::zeros(n, n), |acc, (w, m)| acc + m * Complex64::new(w, 0.0))
    }

    pub fn eval(&self, p: &[f64]) -> DMatrix<Complex64> {
        self.gaussian(p) + self.poisson(p)
    }

    /// `max |S - S^dag|` and the smallest eigenvalue of the Gaussian part.
    pub fn invariant_defects(&self, p: &[f64]) -> (f64, f64) {
        let s = self.eval(p);
        let herm = (&s - s.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let g = self.gaussian(p);
        let g = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
        let min = g.symmetric_eigenvalues().iter().fold(f64::INFINITY, |m, &e| m.min(e));
        (herm, min)
    }
}

pub fn schwinger2(op: &CovOperator<f64>, spec: &NoiseSpec) -> Result<SchwingerTwoPoint> {
    if op.dim() != spec.dim() {
        return Err(Error::DimensionMismatch(format!("operator has N = {}, noise has N = {}", op.dim(), spec.dim())));
    }
    let green = invert_symbol(op, false)?;
    let to_c = |x: f64| Complex64::new(x, 0.0);
    Ok(SchwingerTwoPoint {
        green,
        a: spec.covariance().map(to_c),
        atoms: spec.atoms().iter().map(|at| (at.weight, at.alpha.map(to_c))).collect(),
    })
}

/// `E[phi_a(x) phi_b(y)] = K_ab(x - y)` on a periodic lattice, indexed by
/// the displacement site.
#[derive(Debug, Clone)]
pub struct LatticeTwoPoint {
    pub lattice: LatticeConfig,
    pub kernel: Vec<DMatrix<f64>>,
}

impl LatticeTwoPoint {
    pub fn at(&self, x: usize, y: usize) -> &DMatrix<f64> {
        let (cx, cy) = (self.lattice.coords(x), self.lattice.coords(y));
        let l = self.lattice.l;
        let d: Vec<usize> = cx.iter().zip(&cy).map(|(a, b)| (a + l - b) % l).collect();
        &self.kernel[self.lattice.index(&d)]
    }
}

pub fn lattice_two_point(op: &CovOperator<f64>, spec: &NoiseSpec, lattice: LatticeConfig) -> Result<LatticeTwoPoint> {
    if op.dim() != spec.dim() {
        return Err(Error::DimensionMismatch(format!("operator has N = {}, noise has N = {}", op.dim(), spec.dim())));
    }
    let green = SpectralKernel::inverse_of(lattice, |p| crate::spectral::symbol_at(op, p), SINGULAR_REL)?;
    let n = op.dim();
    let c = spec.second_moment().map(|x| Complex64::new(x, 0.0));
    let sites = lattice.sites();
    let s: Vec<DMatrix<Complex64>> = (0..sites)
        .map(|m| {
            let g = green.matrix(m);
            g.adjoint() * &c * g
        })
        .collect();
    let fft = LatticeFft::new(lattice);
    let mut kernel = vec![DMatrix::zeros(n, n); sites];
    let norm = 1.0 / lattice.volume();
    for i in 0..n {
        for j in 0..n {
            let mut buf: Vec<Complex64> = s.iter().map(|m| m[(i, j)]).collect();
            fft.transform(&mut buf, true);
            for (k, v) in buf.iter().enumerate() {
                kernel[k][(i, j)] = v.re * norm;
            }
        }
    }
    Ok(LatticeTwoPoint { lattice, kernel })
}

/// `sigma_n(xi_1..xi_n) = S_{n+1}(0, xi_1, xi_1 + xi_2, ...)`.
pub fn difference_moments<S>(s: S) -> impl Fn(&[Vec<f64>]) -> f64
where
    S: Fn(&[Vec<f64>]) -> f64,
{
    move |xis: &[Vec<f64>]| {
        let d = xis.first().map_or(0, |x| x.len());
        let mut points = vec![vec![0.0; d]];
        for xi in xis {
            let last = points.last().unwrap();
            points.push(last.iter().zip(xi).map(|(a, b)| a + b).collect());
        }
        s(&points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbpReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
    pub pass: bool,
}

pub const IBP_STEP: f64 = 1e-5;

/// Integration by parts for `F(eta) = e^{i(eta, g)}` in the direction of
/// the scalar profile `f` placed in component `lambda`.
pub fn ibp_check(spec: &NoiseSpec, f: &FieldSample, g: &FieldSample, lambda: usize) -> Result<IbpReport> {
    let n = spec.dim();
    if lambda >= n || g.n != n || f.n != 1 || f.lattice != g.lattice {
        return Err(Error::DimensionMismatch("need a scalar f, an N-component g and lambda < N".into()));
    }
    let lat = g.lattice;
    let mut dir = FieldSample::zeros(lat, n, FieldKind::Test);
    for x in 0..lat.sites() {
        dir.site_mut(x)[lambda] = f.values[x];
    }
    let gamma = |s: f64| char_functional(spec, &g.add(&dir, s));
    let lhs = Complex64::new(0.0, -1.0) * (gamma(IBP_STEP) - gamma(-IBP_STEP)) / (2.0 * IBP_STEP);

    let g0 = gamma(0.0);
    let cell = lat.cell();
    let a = spec.covariance();
    let mut gauss = 0.0;
    let mut poisson = Complex64::new(0.0, 0.0);
    for x in 0..lat.sites() {
        let gx = DVector::from_column_slice(g.site(x));
        gauss += f.values[x] * (a * &gx)[lambda];
        for atom in spec.atoms() {
            let phase = Complex64::from_polar(1.0, atom.alpha.dot(&gx)) - 1.0;
            poisson += f.values[x] * atom.weight * atom.alpha[lambda] * phase;
        }
    }
    let rhs = Complex64::new(0.0, 1.0) * g0 * gauss * cell + g0 * poisson * cell;
    let residual = (lhs - rhs).norm();
    Ok(IbpReport { lhs, rhs, residual, pass: residual < 1e-6 * (1.0 + lhs.norm()) })
}

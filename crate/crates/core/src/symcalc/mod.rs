//! Fourier symbols of covariant operators, their determinants and mass
//! spectra, rational Green functions and cascade composition.
//!
//! The symbol of `sum_j B_j d_j + M` is `i sum_j B_j p_j + M`, a degree-one
//! matrix polynomial with complex coefficients in real momentum `p`.

pub mod multipoly;
pub mod partial;
pub mod poly;

use nalgebra::{DMatrix, DVector};
use nalgebra::ComplexField;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::covsolve::CovOperator;
use crate::error::{Error, Result};
use crate::scalar::{i_unit, lit, to_f64, Real};

pub use multipoly::{MatrixPolynomial, MultiPoly};
pub use partial::{partial_fractions, PartialFractionTerm, PartialFractions};
pub use poly::Poly;

/// Relative size under which determinant coefficients count as zero.
pub const DET_CHOP: f64 = 1e-12;

pub fn symbol<T: Real>(op: &CovOperator<T>) -> MatrixPolynomial<Complex<T>> {
    let to_c = |m: &DMatrix<T>| m.map(|x| Complex::new(x, T::zero()));
    let lin: Vec<_> = op.b().iter().map(|b| to_c(b) * i_unit::<T>()).collect();
    MatrixPolynomial::linear(to_c(op.mass()), &lin)
}

/// Seeded random momenta with components in `[-2, 2]`.
pub fn sample_points<T: Real>(d: usize, count: usize, seed: u64) -> Vec<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..d).map(|_| lit(rng.random_range(-2.0..2.0))).collect())
        .collect()
}

pub fn norm2<T: Real>(p: &[T]) -> T {
    p.iter().fold(T::zero(), |a, &x| a + x * x)
}

#[derive(Debug, Clone)]
pub struct DetPoly<T: Real> {
    /// Full expansion in `p`.
    pub full: MultiPoly<Complex<T>>,
    /// Polynomial in `s = p^2` read off along the `p_0` axis.
    pub radial: Poly<T>,
    /// Max relative mismatch between `full(p)` and `radial(p^2)` at random p.
    pub radial_defect: T,
    /// Largest imaginary radial coefficient relative to the largest one.
    pub imaginary_defect: T,
}

impl<T: Real> DetPoly<T> {
    pub fn is_zero(&self) -> bool {
        self.radial.is_zero() && self.full.is_zero()
    }
}

/// Exact expansion by the Faddeev-LeVerrier recursion.
pub fn det_poly<T: Real>(sym: &MatrixPolynomial<Complex<T>>) -> DetPoly<T> {
    let (_, det) = sym.adjugate_and_det();
    det_from_full(sym, det)
}

fn det_from_full<T: Real>(sym: &MatrixPolynomial<Complex<T>>, det: MultiPoly<Complex<T>>) -> DetPoly<T> {
    let n = sym.shape().0 as i32;
    let scale = sym.max_coeff().max(T::default_epsilon()).powi(n);
    let floor = lit::<T>(DET_CHOP) * scale.max(det.max_coeff());
    let full = det.chop(floor);
    let d = sym.nvars();
    let mut radial_c = Vec::new();
    for k in 0..=full.degree_in(0) / 2 {
        let mut e = vec![0u8; d];
        e[0] = (2 * k) as u8;
        radial_c.push(full.coeff(&e));
    }
    let radial_c = Poly::new(radial_c);
    let imaginary_defect = radial_c.imaginary_defect();
    let radial = radial_c.real_part();
    let radial_defect = sample_points::<T>(d, 20, 0x5eed)
        .iter()
        .map(|p| {
            let f = full.eval_real(p);
            let r = radial.eval(norm2(p));
            (f - Complex::new(r, T::zero())).modulus() / T::one().max(f.modulus())
        })
        .fold(T::zero(), |a, b| a.max(b));
    DetPoly { full, radial, radial_defect, imaginary_defect }
}

/// Radial determinant by interpolation at Chebyshev nodes in `s` along the
/// `p_0` axis, from numeric determinants. An independent cross-check of
/// [`det_poly`].
pub fn det_by_interpolation<T: Real>(sym: &MatrixPolynomial<Complex<T>>, s_max: T) -> Poly<T> {
    let n = sym.shape().0;
    let deg = n / 2;
    let d = sym.nvars();
    let nodes: Vec<T> = (0..=deg)
        .map(|k| {
            let theta = T::pi() * lit((2 * k + 1) as f64) / lit((2 * deg + 2) as f64);
            s_max * (T::one() + theta.cos()) / lit(2.0)
        })
        .collect();
    let vals: Vec<T> = nodes
        .iter()
        .map(|&s| {
            let mut p = vec![T::zero(); d];
            p[0] = s.sqrt();
            sym.eval_real(&p).determinant().re
        })
        .collect();
    let v = DMatrix::from_fn(deg + 1, deg + 1, |i, j| nodes[i].powi(j as i32));
    let coeffs = v.lu().solve(&DVector::from_vec(vals)).expect("distinct nodes");
    Poly::new(coeffs.iter().copied().collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct MassSpectrumJson {
    #[serde(rename = "C")]
    pub c: f64,
    pub masses2: Vec<[f64; 2]>,
    pub degree: usize,
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassSpectrum<T: Real> {
    /// Leading coefficient in `s = p^2`.
    pub c: T,
    pub masses2: Vec<Complex<T>>,
    /// Degree in `p`, twice the degree in `s`.
    pub degree: usize,
    pub admissible: bool,
}

impl<T: Real> MassSpectrum<T> {
    pub fn from_radial(radial: &Poly<T>) -> Result<Self> {
        let deg = radial.degree().ok_or(Error::DegenerateOperator)?;
        let c = radial.leading();
        let mut masses2: Vec<Complex<T>> = radial.roots().into_iter().map(|r| -r).collect();
        masses2.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        let scale = masses2.iter().fold(T::one(), |m, z| m.max(z.modulus()));
        let admissible = c != T::zero()
            && masses2.iter().all(|z| z.im.abs() <= lit::<T>(1e-9) * scale && z.re > T::zero());
        Ok(Self { c, masses2, degree: 2 * deg, admissible })
    }

    /// `C prod (s + m_i^2)`.
    pub fn reconstruct(&self) -> Poly<Complex<T>> {
        self.masses2.iter().fold(Poly::constant(Complex::new(self.c, T::zero())), |acc, &m2| {
            &acc * &Poly::new(vec![m2, Complex::new(T::one(), T::zero())])
        })
    }

    pub fn real_masses2(&self) -> Option<Vec<T>> {
        let scale = self.masses2.iter().fold(T::one(), |m, z| m.max(z.modulus()));
        self.masses2
            .iter()
            .map(|z| (z.im.abs() <= lit::<T>(1e-9) * scale).then_some(z.re))
            .collect()
    }

    pub fn to_json(&self) -> MassSpectrumJson {
        MassSpectrumJson {
            c: to_f64(self.c),
            masses2: self.masses2.iter().map(|z| [to_f64(z.re), to_f64(z.im)]).collect(),
            degree: self.degree,
            admissible: self.admissible,
        }
    }
}

pub fn mass_spectrum<T: Real>(op: &CovOperator<T>) -> Result<MassSpectrum<T>> {
    MassSpectrum::from_radial(&det_poly(&symbol(op)).radial)
}

/// Scalar rational function with a denominator in `s = p^2`.
#[derive(Debug, Clone)]
pub struct RationalFunction<T: Real> {
    pub numerator: MultiPoly<Complex<T>>,
    pub denominator: Poly<T>,
}

impl<T: Real> RationalFunction<T> {
    pub fn eval(&self, p: &[T]) -> Complex<T> {
        self.numerator.eval_real(p) / self.denominator.eval(norm2(p))
    }
}

/// `numerator(p) / denominator(p^2)`.
#[derive(Debug, Clone)]
pub struct RationalMatrix<T: Real> {
    pub numerator: MatrixPolynomial<Complex<T>>,
    pub denominator: Poly<T>,
}

impl<T: Real> RationalMatrix<T> {
    pub fn eval(&self, p: &[T]) -> DMatrix<Complex<T>> {
        self.numerator.eval_real(p) / Complex::new(self.denominator.eval(norm2(p)), T::zero())
    }

    pub fn dim(&self) -> usize {
        self.numerator.shape().0
    }

    pub fn entry(&self, i: usize, j: usize) -> RationalFunction<T> {
        RationalFunction { numerator: self.numerator.entry(i, j), denominator: self.denominator.clone() }
    }

    /// Max over the points of `|sym(p) G(p) - I|`.
    pub fn product_residual(&self, sym: &MatrixPolynomial<Complex<T>>, points: &[Vec<T>]) -> T {
        let n = self.dim();
        points
            .iter()
            .map(|p| {
                let r = sym.eval_real(p) * self.eval(p) - DMatrix::identity(n, n);
                r.iter().fold(T::zero(), |a, z| a.max(z.modulus()))
            })
            .fold(T::zero(), |a, b| a.max(b))
    }
}

/// Inverse of a square matrix polynomial whose determinant depends on `p`
/// only through `p^2`.
pub fn invert_matrix_polynomial<T: Real>(sym: &MatrixPolynomial<Complex<T>>) -> Result<RationalMatrix<T>> {
    let (adj, det) = sym.adjugate_and_det();
    let det = det_from_full(sym, det);
    if det.is_zero() {
        return Err(Error::DegenerateOperator);
    }
    Ok(RationalMatrix { numerator: adj, denominator: det.radial })
}

/// Green function `sym^{-1}`. Non-admissible spectra are refused unless
/// `force` is set.
pub fn invert_symbol<T: Real>(op: &CovOperator<T>, force: bool) -> Result<RationalMatrix<T>> {
    let spec = mass_spectrum(op)?;
    if !spec.admissible && !force {
        return Err(Error::NotInvertible(format!(
            "mass spectrum not admissible (C = {:e}, masses2 = {:?})",
            to_f64(spec.c),
            spec.masses2.iter().map(|z| (to_f64(z.re), to_f64(z.im))).collect::<Vec<_>>()
        )));
    }
    invert_matrix_polynomial(&symbol(op))
}

/// Green function of the cascade `D_1 A_1 = eta, D_2 A_2 = A_1, ...`,
/// i.e. `G_n ... G_1`.
pub fn compose_green<T: Real>(ops: &[CovOperator<T>]) -> Result<RationalMatrix<T>> {
    let first = ops.first().ok_or_else(|| Error::Invalid("empty cascade".into()))?;
    let n = first.dim();
    if let Some(bad) = ops.iter().find(|o| o.dim() != n || o.space_dim() != first.space_dim()) {
        return Err(Error::DimensionMismatch(format!(
            "cascade mixes N={} and N={}",
            n,
            bad.dim()
        )));
    }
    let mut acc: Option<RationalMatrix<T>> = None;
    for op in ops {
        let g = invert_symbol(op, false)?;
        acc = Some(match acc {
            None => g,
            Some(prev) => RationalMatrix {
                numerator: &g.numerator * &prev.numerator,
                denominator: &g.denominator * &prev.denominator,
            },
        });
    }
    Ok(acc.expect("non-empty"))
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexMatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

pub fn complex_matrix_json<T: Real>(m: &DMatrix<Complex<T>>) -> ComplexMatrixJson {
    let rows = |f: &dyn Fn(&Complex<T>) -> T| {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| to_f64(f(&m[(i, j)]))).collect()).collect()
    };
    ComplexMatrixJson { re: rows(&|z| z.re), im: rows(&|z| z.im) }
}

/// `{"e0,e1,..": coefficient matrix}` with comma-joined exponents.
pub fn matrix_polynomial_json<T: Real>(
    p: &MatrixPolynomial<Complex<T>>,
) -> std::collections::BTreeMap<String, ComplexMatrixJson> {
    p.terms()
        .iter()
        .map(|(e, m)| {
            let key = e.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
            (key, complex_matrix_json(m))
        })
        .collect()
}

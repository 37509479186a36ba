//! Closed forms as printed in the literature for the D = 3 catalog, kept
//! apart from the computational path so that comparisons stay independent.
//! Nothing here is used to build operators or Green functions.
//!
//! Known defects of the printed forms, reproduced verbatim:
//! - the vector-model determinant has `+2bc m1 m2` where the inverse
//!   carries `-(h^2 - 2 f m1 m2)`;
//! - the vector-model Green blocks carry an extra overall factor `m1 m2`;
//! - the Higgs Poisson blocks are the transpose of `(G^dag a)(G^dag a)^dag`,
//!   one cross term has its denominator squared once too often, the mixed
//!   entries are copied where they should be conjugated, and for `c != 0`
//!   the curl contributions are missing.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ModelParams;
use crate::error::{Error, Result};
use crate::symcalc::{MatrixPolynomial, MultiPoly, Poly, RationalMatrix};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn eps(m: usize, n: usize, l: usize) -> f64 {
    match (m, n, l) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

fn delta(m: usize, n: usize) -> f64 {
    if m == n { 1.0 } else { 0.0 }
}

/// Printed determinant as a polynomial in `s = p^2`.
pub fn printed_determinant(params: &ModelParams) -> Poly<f64> {
    match *params {
        ModelParams::Higgs3 { a, b, c, m0, m1 } => &Poly::new(vec![m1 * m1, -c * c]) * &Poly::new(vec![m0 * m1, a * b]),
        ModelParams::Vector2 { a, b, c, d, m1, m2 } => {
            let f = a * d - b * c;
            Poly::new(vec![m1 * m2 * m1 * m1 * m2 * m2, m1 * m2 * (m2 * m2 * a * a + 2.0 * b * c * m1 * m2 + m1 * m1 * d * d), m1 * m2 * f * f])
        }
        ModelParams::Spinor { a, b, c, d, m } => {
            let q = Poly::new(vec![m * m, a * a + b * b + c * c + d * d]);
            &(&q * &q) - &Poly::new(vec![0.0, 4.0 * m * m * b * b])
        }
        ModelParams::DiracLeft => printed_determinant(&ModelParams::Higgs3 { a: -1.0, b: 1.0, c: 1.0, m0: 0.0, m1: 0.0 }),
        ModelParams::DiracRight => printed_determinant(&ModelParams::Higgs3 { a: -1.0, b: 1.0, c: -1.0, m0: 0.0, m1: 0.0 }),
    }
}

/// Denominator of the printed vector-model Green function,
/// `f^2 s^2 - (h^2 - 2 f m1 m2) s + m1^2 m2^2`.
pub fn printed_vector_green_denominator(a: f64, b: f64, c: f64, d: f64, m1: f64, m2: f64) -> Poly<f64> {
    let f = a * d - b * c;
    let h = a * m2 + d * m1;
    Poly::new(vec![m1 * m1 * m2 * m2, -(h * h - 2.0 * f * m1 * m2), f * f])
}

/// The printed Higgs Green function as a rational matrix over
/// `(ab s + m0 m1)(-c^2 s + m1^2)`.
pub fn printed_green_higgs3(params: &ModelParams) -> Result<RationalMatrix<f64>> {
    let ModelParams::Higgs3 { a, b, c, m0, m1 } = *params else {
        return Err(Error::Invalid("the printed Green function exists for higgs3 only".into()));
    };
    let q = Poly::new(vec![m0 * m1, a * b]);
    let r = Poly::new(vec![m1 * m1, -c * c]);
    if q.is_zero() || r.is_zero() {
        return Err(Error::Degenerate(format!("a b = {}, m0 m1 = {}, c = {c}, m1 = {m1}", a * b, m0 * m1)));
    }
    type P = MultiPoly<Complex64>;
    let k = |x: Complex64| P::constant(3, x);
    let p = |i: usize| P::var(3, i);
    let s = (0..3).fold(P::zero(3), |acc, i| &acc + &(&p(i) * &p(i)));
    let lift = |poly: &Poly<f64>| {
        poly.coeffs().iter().enumerate().fold(P::zero(3), |acc, (e, &x)| &acc + &(&k(re(x)) * &s.pow(e)))
    };
    let (qp, rp) = (lift(&q), lift(&r));
    let mut entries = vec![vec![P::zero(3); 4]; 4];
    entries[0][0] = &k(re(m1)) * &rp;
    for mu in 0..3 {
        entries[0][mu + 1] = &(&k(-I * a) * &p(mu)) * &rp;
        entries[mu + 1][0] = &(&k(-I * b) * &p(mu)) * &rp;
        for nu in 0..3 {
            let curl = (0..3).fold(k(re(m1 * delta(mu, nu))), |acc, l| &acc + &(&k(I * c * eps(mu, nu, l)) * &p(l)));
            let pp = &(&p(mu) * &p(nu)) * &k(re(a * b * m1 + c * c * m0));
            entries[mu + 1][nu + 1] = &(&qp * &curl) - &pp;
        }
    }
    Ok(RationalMatrix { numerator: MatrixPolynomial::from_entries(&entries), denominator: &q * &r })
}

fn vector_blocks(a: f64, b: f64, c: f64, d: f64, m1: f64, m2: f64, p: &[f64]) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let s: f64 = p.iter().map(|x| x * x).sum();
    let f = a * d - b * c;
    let h = a * m2 + d * m1;
    let e1 = d * d * m1 + b * c * m2;
    let e2 = a * a * m2 + b * c * m1;
    let curl = |mu: usize, nu: usize| (0..3).map(|l| eps(mu, nu, l) * p[l]).sum::<f64>();
    let g11 = DMatrix::from_fn(3, 3, |mu, nu| {
        re(m1 * m2 * (-e1 * s + m1 * m2 * m2) * delta(mu, nu) + m2 * (f * f * s - m2 * e2) * p[mu] * p[nu])
            + I * m1 * m2 * (-d * f * s + a * m2 * m2) * curl(mu, nu)
    });
    let g12 = DMatrix::from_fn(3, 3, |mu, nu| {
        re(b * m1 * m2 * (h * s * delta(mu, nu) - h * p[mu] * p[nu])) + I * b * m1 * m2 * (f * s + m1 * m2) * curl(mu, nu)
    });
    (g11, g12)
}

/// Printed vector-model Green function at `p`, the lower blocks obtained by
/// the printed exchanges.
pub fn printed_vector_green(params: &ModelParams, p: &[f64]) -> Result<DMatrix<Complex64>> {
    let ModelParams::Vector2 { a, b, c, d, m1, m2 } = *params else {
        return Err(Error::Invalid("the printed vector Green function needs vector2 parameters".into()));
    };
    let (g11, g12) = vector_blocks(a, b, c, d, m1, m2, p);
    let (g22, _) = vector_blocks(d, b, c, a, m2, m1, p);
    let (_, g21) = vector_blocks(a, c, b, d, m1, m2, p);
    let den = printed_vector_green_denominator(a, b, c, d, m1, m2).eval(p.iter().map(|x| x * x).sum());
    let mut out = DMatrix::zeros(6, 6);
    out.view_mut((0, 0), (3, 3)).copy_from(&g11);
    out.view_mut((0, 3), (3, 3)).copy_from(&g12);
    out.view_mut((3, 0), (3, 3)).copy_from(&g21);
    out.view_mut((3, 3), (3, 3)).copy_from(&g22);
    Ok(out / re(den))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrintedForm {
    Verbatim,
    /// The cross term of the vector block divided by `R^2 Q` instead of
    /// `R^2 Q^2`, and the lower off-diagonal entries conjugated rather
    /// than copied.
    Corrected,
}

/// Printed per-atom Poisson block of the Higgs model. `alpha` is in the
/// component order (scalar, vector).
pub fn printed_higgs_poisson(params: &ModelParams, p: &[f64], alpha: &[f64], form: PrintedForm) -> Result<DMatrix<Complex64>> {
    let ModelParams::Higgs3 { a, b, c, m0, m1 } = *params else {
        return Err(Error::Invalid("the printed Poisson block exists for higgs3 only".into()));
    };
    let s: f64 = p.iter().map(|x| x * x).sum();
    let q = a * b * s + m0 * m1;
    let r = -c * c * s + m1 * m1;
    let k = a * b * m1 + c * c * m0;
    let a3 = alpha[0];
    let av = &alpha[1..4];
    let ap: f64 = av.iter().zip(p).map(|(x, y)| x * y).sum();
    let lead = re(m1 * a3) - I * b * ap;
    let mut out = DMatrix::zeros(4, 4);
    out[(0, 0)] = re(lead.norm_sqr() / (q * q));
    for mu in 0..3 {
        let v = lead * (re(m1 * q * av[mu]) + I * a * r * a3 * p[mu] - re(k * ap * p[mu])) / (r * q * q);
        out[(0, mu + 1)] = v;
        out[(mu + 1, 0)] = if form == PrintedForm::Verbatim { v } else { v.conj() };
    }
    let cross_den = match form {
        PrintedForm::Verbatim => r * r * q * q,
        PrintedForm::Corrected => r * r * q,
    };
    for mu in 0..3 {
        for nu in 0..3 {
            let t1 = (a * a * a3 * a3 + ap * ap * k * k / (r * r)) * p[mu] * p[nu] / (q * q);
            let t2 = m1 * m1 * av[mu] * av[nu] / (r * r);
            let t3 = m1 * k * ap * (p[mu] * av[nu] + p[nu] * av[mu]) / cross_den;
            let t4 = I * a * m1 * a3 * (p[mu] * av[nu] - p[nu] * av[mu]) / (r * q);
            out[(mu + 1, nu + 1)] = re(t1 + t2 - t3) - t4;
        }
    }
    Ok(out)
}

fn vector_s11(a: f64, b: f64, c: f64, d: f64, m1: f64, m2: f64, p: &[f64], al: &[f64], be: &[f64]) -> DMatrix<f64> {
    let s: f64 = p.iter().map(|x| x * x).sum();
    let f = a * d - b * c;
    let h = a * m2 + d * m1;
    let e1 = d * d * m1 + b * c * m2;
    let e2 = a * a * m2 + b * c * m1;
    let ap: f64 = al.iter().zip(p).map(|(x, y)| x * y).sum();
    let bp: f64 = be.iter().zip(p).map(|(x, y)| x * y).sum();
    let w = -e1 * s + m1 * m2 * m2;
    let x = m2 * (f * f * s - m2 * e2) * ap - c * m1 * m2 * h * bp;
    let z = c * m1 * m2 * h * s;
    DMatrix::from_fn(3, 3, |mu, nu| {
        x * x * p[mu] * p[nu]
            + x * (m1 * m2 * w * (p[mu] * al[nu] + p[nu] * al[mu]) + z * (p[mu] * be[nu] + p[nu] * be[mu]))
            + c * m1 * m1 * m2 * m2 * h * s * w * (al[mu] * be[nu] + al[nu] * be[mu])
            + m1 * m1 * m2 * m2 * w * w * al[mu] * al[nu]
            + z * z * be[mu] * be[nu]
    })
}

fn vector_s12(a: f64, b: f64, c: f64, d: f64, m1: f64, m2: f64, p: &[f64], al: &[f64], be: &[f64]) -> DMatrix<f64> {
    let s: f64 = p.iter().map(|x| x * x).sum();
    let f = a * d - b * c;
    let h = a * m2 + d * m1;
    let e1 = d * d * m1 + b * c * m2;
    let e2 = a * a * m2 + b * c * m1;
    let ap: f64 = al.iter().zip(p).map(|(x, y)| x * y).sum();
    let bp: f64 = be.iter().zip(p).map(|(x, y)| x * y).sum();
    let u2 = f * f * s - m2 * e2;
    let u1 = f * f * s - m1 * e1;
    let w1 = -e1 * s + m1 * m2 * m2;
    let w2 = -e2 * s + m1 * m1 * m2;
    let pp = -m1 * m2 * (h * b * m2 * u2 * ap * ap + h * c * m1 * u1 * bp * bp - ap * bp * (u2 * u1 + m1 * m2 * b * c * h * h));
    DMatrix::from_fn(3, 3, |mu, nu| {
        pp * p[mu] * p[nu]
            + m1 * m2 * m2 * b * h * s * (u2 * ap - m1 * c * h * bp) * p[mu] * al[nu]
            + m1 * m1 * m2 * w1 * (u1 * bp - m2 * b * h * ap) * p[nu] * al[mu]
            + m1 * m2 * m2 * w2 * (u2 * ap - m1 * c * h * bp) * p[mu] * be[nu]
            + m1 * m1 * m2 * c * h * s * (u1 * bp - b * m2 * h * ap) * p[nu] * be[mu]
            + m1 * m1 * m2 * m2 * h * s * (b * w1 * al[mu] * al[nu] + c * w2 * be[mu] * be[nu])
            + m1 * m1 * m2 * m2 * w1 * w2 * al[mu] * be[nu]
            + b * c * (m1 * m2 * h * s).powi(2) * al[nu] * be[mu]
    })
}

/// Printed per-atom Poisson block of the vector model; `alpha` holds
/// `(alpha_0..2, beta_0..2)` and the lower blocks use the printed
/// parameter exchanges.
pub fn printed_vector_poisson(params: &ModelParams, p: &[f64], alpha: &[f64]) -> Result<DMatrix<Complex64>> {
    let ModelParams::Vector2 { a, b, c, d, m1, m2 } = *params else {
        return Err(Error::Invalid("the printed vector Poisson block needs vector2 parameters".into()));
    };
    let (al, be) = (&alpha[0..3], &alpha[3..6]);
    let s11 = vector_s11(a, b, c, d, m1, m2, p, al, be);
    let s22 = vector_s11(d, c, b, a, m2, m1, p, al, be);
    let s12 = vector_s12(a, b, c, d, m1, m2, p, al, be);
    let s21 = vector_s12(a, c, b, d, m1, m2, p, al, be);
    let den = printed_vector_green_denominator(a, b, c, d, m1, m2).eval(p.iter().map(|x| x * x).sum());
    let mut out = DMatrix::zeros(6, 6);
    out.view_mut((0, 0), (3, 3)).copy_from(&s11);
    out.view_mut((0, 3), (3, 3)).copy_from(&s12);
    out.view_mut((3, 0), (3, 3)).copy_from(&s21);
    out.view_mut((3, 3), (3, 3)).copy_from(&s22);
    Ok(out.map(|x| re(x / (den * den))))
}

/// Gaussian two-point function of two Proca copies,
/// `(delta + p p / m^2) / (p^2 + m^2)` on each diagonal block.
pub fn printed_proca(m: f64, p: &[f64]) -> DMatrix<f64> {
    let s: f64 = p.iter().map(|x| x * x).sum();
    let block = DMatrix::from_fn(3, 3, |mu, nu| (delta(mu, nu) + p[mu] * p[nu] / (m * m)) / (s + m * m));
    let mut out = DMatrix::zeros(6, 6);
    out.view_mut((0, 0), (3, 3)).copy_from(&block);
    out.view_mut((3, 3), (3, 3)).copy_from(&block);
    out
}

/// Derivative coefficient matrices of the printed quaternionic Dirac
/// operators, `D = sum_j K_j d_j`.
pub fn printed_dirac(which: super::DiracSide) -> [[[i64; 4]; 4]; 3] {
    use super::DiracSide::*;
    let pattern: [[(i64, usize); 4]; 4] = match which {
        Left => [[(0, 0), (-1, 0), (-1, 1), (-1, 2)], [(1, 0), (0, 0), (-1, 2), (1, 1)], [(1, 1), (1, 2), (0, 0), (-1, 0)], [(1, 2), (-1, 1), (1, 0), (0, 0)]],
        Right => [[(0, 0), (-1, 0), (-1, 1), (-1, 2)], [(1, 0), (0, 0), (1, 2), (-1, 1)], [(1, 1), (-1, 2), (0, 0), (1, 0)], [(1, 2), (1, 1), (-1, 0), (0, 0)]],
        Transposed => [[(0, 0), (1, 0), (1, 1), (1, 2)], [(1, 0), (0, 0), (-1, 2), (1, 1)], [(1, 1), (1, 2), (0, 0), (-1, 0)], [(1, 2), (-1, 1), (1, 0), (0, 0)]],
    };
    let mut k = [[[0i64; 4]; 4]; 3];
    for (r, row) in pattern.iter().enumerate() {
        for (c, &(sign, j)) in row.iter().enumerate() {
            k[j][r][c] += sign;
        }
    }
    k
}

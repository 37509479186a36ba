//! Multivariate scalar and matrix polynomials over a coefficient ring.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use nalgebra::ComplexField;
use num_complex::Complex;

use crate::scalar::{Conj, Real, Ring};

/// Exponent vector of a monomial.
pub type Exponents = Vec<u8>;

fn add_exps(a: &[u8], b: &[u8]) -> Exponents {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn monomial_value<R: Ring>(exps: &[u8], x: &[R]) -> R {
    exps.iter().zip(x).fold(R::one(), |acc, (&e, &xi)| {
        (0..e).fold(acc, |a, _| a * xi)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly<R> {
    nvars: usize,
    terms: BTreeMap<Exponents, R>,
}

impl<R: Ring> MultiPoly<R> {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: R) -> Self {
        Self::monomial(vec![0; nvars], c)
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(e, R::one())
    }

    pub fn monomial(exps: Exponents, c: R) -> Self {
        let mut p = Self::zero(exps.len());
        p.add_term(exps, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Exponents, R> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exps: &[u8]) -> R {
        self.terms.get(exps).copied().unwrap_or_else(R::zero)
    }

    pub fn add_term(&mut self, exps: Exponents, c: R) {
        assert_eq!(exps.len(), self.nvars, "exponent length");
        let entry = self.terms.entry(exps).or_insert_with(R::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn eval(&self, x: &[R]) -> R {
        self.terms.iter().fold(R::zero(), |acc, (e, &c)| acc + c * monomial_value(e, x))
    }

    pub fn total_degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().map(|&x| x as usize).sum()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> usize {
        self.terms.keys().map(|e| e[var] as usize).max().unwrap_or(0)
    }

    pub fn scale(&self, c: R) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, &v) in &self.terms {
            out.add_term(e.clone(), v * c);
        }
        out
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Self::constant(self.nvars, R::one()), |acc, _| &acc * self)
    }

    pub fn map<S: Ring>(&self, f: impl Fn(R) -> S) -> MultiPoly<S> {
        let mut out = MultiPoly::zero(self.nvars);
        for (e, &v) in &self.terms {
            out.add_term(e.clone(), f(v));
        }
        out
    }

    /// Substitutes polynomials for the variables.
    pub fn compose(&self, subs: &[MultiPoly<R>]) -> MultiPoly<R> {
        assert_eq!(subs.len(), self.nvars);
        let target = subs.first().map_or(0, |s| s.nvars);
        let mut out = MultiPoly::zero(target);
        for (e, &c) in &self.terms {
            let mut term = MultiPoly::constant(target, c);
            for (s, &k) in subs.iter().zip(e) {
                term = &term * &s.pow(k as usize);
            }
            out = &out + &term;
        }
        out
    }
}

impl<T: Real> MultiPoly<Complex<T>> {
    /// Removes coefficients below `abs`.
    pub fn chop(&self, abs: T) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, &v) in &self.terms {
            if v.modulus() > abs {
                out.add_term(e.clone(), v);
            }
        }
        out
    }

    pub fn max_coeff(&self) -> T {
        self.terms.values().fold(T::zero(), |m, c| m.max(c.modulus()))
    }

    pub fn eval_real(&self, x: &[T]) -> Complex<T> {
        let xc: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.eval(&xc)
    }
}

impl<R: Ring> Add for &MultiPoly<R> {
    type Output = MultiPoly<R>;
    fn add(self, rhs: Self) -> MultiPoly<R> {
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            out.add_term(e.clone(), c);
        }
        out
    }
}

impl<R: Ring> Neg for &MultiPoly<R> {
    type Output = MultiPoly<R>;
    fn neg(self) -> MultiPoly<R> {
        self.scale(-R::one())
    }
}

impl<R: Ring> Sub for &MultiPoly<R> {
    type Output = MultiPoly<R>;
    fn sub(self, rhs: Self) -> MultiPoly<R> {
        self + &(-rhs)
    }
}

impl<R: Ring> Mul for &MultiPoly<R> {
    type Output = MultiPoly<R>;
    fn mul(self, rhs: Self) -> MultiPoly<R> {
        let mut out = MultiPoly::zero(self.nvars);
        for (ea, &a) in &self.terms {
            for (eb, &b) in &rhs.terms {
                out.add_term(add_exps(ea, eb), a * b);
            }
        }
        out
    }
}

/// Matrix-valued polynomial in `nvars` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial<R: Ring> {
    nvars: usize,
    rows: usize,
    cols: usize,
    terms: BTreeMap<Exponents, DMatrix<R>>,
}

impl<R: Ring> MatrixPolynomial<R> {
    pub fn zero(nvars: usize, rows: usize, cols: usize) -> Self {
        Self { nvars, rows, cols, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, m: DMatrix<R>) -> Self {
        let mut p = Self::zero(nvars, m.nrows(), m.ncols());
        p.add_term(vec![0; nvars], m);
        p
    }

    pub fn identity(nvars: usize, n: usize) -> Self {
        Self::constant(nvars, DMatrix::identity(n, n))
    }

    /// `constant + sum_j linear[j] * p_j`.
    pub fn linear(constant: DMatrix<R>, linear: &[DMatrix<R>]) -> Self {
        let nvars = linear.len();
        let mut p = Self::constant(nvars, constant);
        for (j, m) in linear.iter().enumerate() {
            let mut e = vec![0; nvars];
            e[j] = 1;
            p.add_term(e, m.clone());
        }
        p
    }

    pub fn from_entries(entries: &[Vec<MultiPoly<R>>]) -> Self {
        let rows = entries.len();
        let cols = entries.first().map_or(0, |r| r.len());
        let nvars = entries.first().and_then(|r| r.first()).map_or(0, |p| p.nvars());
        let mut out = Self::zero(nvars, rows, cols);
        for (i, row) in entries.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                for (e, &c) in p.terms() {
                    let mut m = DMatrix::zeros(rows, cols);
                    m[(i, j)] = c;
                    out.add_term(e.clone(), m);
                }
            }
        }
        out
    }

    pub fn add_term(&mut self, exps: Exponents, m: DMatrix<R>) {
        assert_eq!(exps.len(), self.nvars, "exponent length");
        assert_eq!(m.shape(), (self.rows, self.cols), "coefficient shape");
        let zero = DMatrix::zeros(self.rows, self.cols);
        let entry = self.terms.entry(exps.clone()).or_insert_with(|| zero.clone());
        *entry += m;
        if *entry == zero {
            self.terms.remove(&exps);
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn terms(&self) -> &BTreeMap<Exponents, DMatrix<R>> {
        &self.terms
    }

    pub fn total_degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().map(|&x| x as usize).sum()).max().unwrap_or(0)
    }

    pub fn constant_term(&self) -> DMatrix<R> {
        self.terms
            .get(&vec![0; self.nvars])
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(self.rows, self.cols))
    }

    pub fn eval(&self, x: &[R]) -> DMatrix<R> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (e, m) in &self.terms {
            out += m * monomial_value(e, x);
        }
        out
    }

    pub fn entry(&self, i: usize, j: usize) -> MultiPoly<R> {
        let mut p = MultiPoly::zero(self.nvars);
        for (e, m) in &self.terms {
            p.add_term(e.clone(), m[(i, j)]);
        }
        p
    }

    pub fn trace(&self) -> MultiPoly<R> {
        let mut p = MultiPoly::zero(self.nvars);
        for (e, m) in &self.terms {
            p.add_term(e.clone(), m.trace());
        }
        p
    }

    pub fn scale(&self, c: R) -> Self {
        self.map(|x| x * c)
    }

    pub fn scale_poly(&self, q: &MultiPoly<R>) -> Self {
        let mut out = Self::zero(self.nvars, self.rows, self.cols);
        for (e, m) in &self.terms {
            for (eq, &c) in q.terms() {
                out.add_term(add_exps(e, eq), m * c);
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zero(self.nvars, self.cols, self.rows);
        for (e, m) in &self.terms {
            out.add_term(e.clone(), m.transpose());
        }
        out
    }

    pub fn map<S: Ring>(&self, f: impl Fn(R) -> S) -> MatrixPolynomial<S> {
        let mut out = MatrixPolynomial::zero(self.nvars, self.rows, self.cols);
        for (e, m) in &self.terms {
            out.add_term(e.clone(), m.map(&f));
        }
        out
    }

    /// Adjugate and determinant by the Faddeev-LeVerrier recursion. Needs
    /// division by integers, so the ring must contain the rationals.
    pub fn adjugate_and_det(&self) -> (Self, MultiPoly<R>)
    where
        R: num_traits::FromPrimitive,
    {
        assert_eq!(self.rows, self.cols, "square matrix polynomial");
        let n = self.rows;
        let id = Self::identity(self.nvars, n);
        let mut m_prev = Self::zero(self.nvars, n, n);
        let mut c_prev = MultiPoly::constant(self.nvars, R::one());
        let mut m_k = m_prev.clone();
        for k in 1..=n {
            m_k = &(self * &m_prev) + &id.scale_poly(&c_prev);
            let tr = (self * &m_k).trace();
            let inv_k = R::from_usize(k).expect("small integer");
            c_prev = tr.scale(-R::one() / inv_k);
            m_prev = m_k.clone();
        }
        // c_prev is c_0 of det(lambda - A); det A = (-1)^n c_0, adj A = (-1)^(n+1) M_n
        let sign = if n % 2 == 0 { R::one() } else { -R::one() };
        (m_k.scale(-sign), c_prev.scale(sign))
    }
}

impl<R: Ring + Conj> MatrixPolynomial<R> {
    /// Conjugate transpose as a function of real arguments.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.nvars, self.cols, self.rows);
        for (e, m) in &self.terms {
            out.add_term(e.clone(), m.transpose().map(|x| x.conj()));
        }
        out
    }
}

impl<T: Real> MatrixPolynomial<Complex<T>> {
    pub fn chop(&self, abs: T) -> Self {
        let mut out = Self::zero(self.nvars, self.rows, self.cols);
        for (e, m) in &self.terms {
            let c = m.map(|z| if z.modulus() > abs { z } else { Complex::new(T::zero(), T::zero()) });
            out.add_term(e.clone(), c);
        }
        out
    }

    pub fn eval_real(&self, x: &[T]) -> DMatrix<Complex<T>> {
        let xc: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.eval(&xc)
    }

    pub fn max_coeff(&self) -> T {
        self.terms
            .values()
            .flat_map(|m| m.iter())
            .fold(T::zero(), |a, z| a.max(z.modulus()))
    }
}

impl<R: Ring> Add for &MatrixPolynomial<R> {
    type Output = MatrixPolynomial<R>;
    fn add(self, rhs: Self) -> MatrixPolynomial<R> {
        let mut out = self.clone();
        for (e, m) in &rhs.terms {
            out.add_term(e.clone(), m.clone());
        }
        out
    }
}

impl<R: Ring> Sub for &MatrixPolynomial<R> {
    type Output = MatrixPolynomial<R>;
    fn sub(self, rhs: Self) -> MatrixPolynomial<R> {
        self + &rhs.scale(-R::one())
    }
}

impl<R: Ring> Mul for &MatrixPolynomial<R> {
    type Output = MatrixPolynomial<R>;
    fn mul(self, rhs: Self) -> MatrixPolynomial<R> {
        assert_eq!(self.cols, rhs.rows, "inner dimensions");
        let mut out = MatrixPolynomial::zero(self.nvars, self.rows, rhs.cols);
        for (ea, a) in &self.terms {
            for (eb, b) in &rhs.terms {
                out.add_term(add_exps(ea, eb), a * b);
            }
        }
        out
    }
}

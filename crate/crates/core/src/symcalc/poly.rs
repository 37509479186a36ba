//! Univariate polynomials (ascending coefficients) and real-coefficient
//! root finding.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use nalgebra::ComplexField;
use num_complex::Complex;

use crate::scalar::{lit, Real, Ring};

#[derive(Debug, Clone, PartialEq)]
pub struct Poly<R> {
    coeffs: Vec<R>,
}

impl<R: Ring> Poly<R> {
    /// Trailing exact zeros are dropped.
    pub fn new(mut coeffs: Vec<R>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: R) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[R] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> R {
        self.coeffs.last().copied().unwrap_or_else(R::zero)
    }

    pub fn eval(&self, x: R) -> R {
        self.coeffs.iter().rev().fold(R::zero(), |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| {
                let mut kk = R::zero();
                for _ in 0..k {
                    kk = kk + R::one();
                }
                c * kk
            })
            .collect();
        Self::new(coeffs)
    }

    pub fn scale(&self, c: R) -> Self {
        Self::new(self.coeffs.iter().map(|&x| x * c).collect())
    }

    pub fn map<S: Ring>(&self, f: impl Fn(R) -> S) -> Poly<S> {
        Poly::new(self.coeffs.iter().map(|&x| f(x)).collect())
    }
}

impl<R: Ring> Add for &Poly<R> {
    type Output = Poly<R>;
    fn add(self, rhs: Self) -> Poly<R> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let get = |p: &Poly<R>, k: usize| p.coeffs.get(k).copied().unwrap_or_else(R::zero);
        Poly::new((0..n).map(|k| get(self, k) + get(rhs, k)).collect())
    }
}

impl<R: Ring> Neg for &Poly<R> {
    type Output = Poly<R>;
    fn neg(self) -> Poly<R> {
        Poly::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

impl<R: Ring> Sub for &Poly<R> {
    type Output = Poly<R>;
    fn sub(self, rhs: Self) -> Poly<R> {
        self + &(-rhs)
    }
}

impl<R: Ring> Mul for &Poly<R> {
    type Output = Poly<R>;
    fn mul(self, rhs: Self) -> Poly<R> {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![R::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl<T: Real> Poly<Complex<T>> {
    /// Drops trailing coefficients below `rel * max|c|`.
    pub fn chop(&self, rel: T) -> Self {
        let scale = self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.modulus()));
        let mut coeffs = self.coeffs.clone();
        while coeffs.last().is_some_and(|c| c.modulus() <= rel * scale) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// Largest imaginary part relative to the largest coefficient.
    pub fn imaginary_defect(&self) -> T {
        let scale = self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.modulus()));
        if scale == T::zero() {
            return T::zero();
        }
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.im.abs())) / scale
    }

    pub fn real_part(&self) -> Poly<T> {
        Poly::new(self.coeffs.iter().map(|c| c.re).collect())
    }
}

impl<T: Real> Poly<T> {
    pub fn to_complex(&self) -> Poly<Complex<T>> {
        Poly::new(self.coeffs.iter().map(|&c| Complex::new(c, T::zero())).collect())
    }

    pub fn eval_complex(&self, z: Complex<T>) -> Complex<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * z + Complex::new(c, T::zero()))
    }

    /// Roots with multiplicity. Companion-matrix eigenvalues are polished
    /// by Newton steps. Roots closer than `1e-7` (relative) are treated as
    /// one multiple root and refined on the matching derivative.
    pub fn roots(&self) -> Vec<Complex<T>> {
        let deg = match self.degree() {
            Some(d) if d > 0 => d,
            _ => return Vec::new(),
        };
        let lead = self.leading();
        let companion = DMatrix::from_fn(deg, deg, |i, j| {
            if i == 0 {
                -self.coeffs[deg - 1 - j] / lead
            } else if i == j + 1 {
                T::one()
            } else {
                T::zero()
            }
        });
        let mut roots: Vec<Complex<T>> = companion.complex_eigenvalues().iter().copied().collect();
        let dp = self.derivative();
        for z in roots.iter_mut() {
            for _ in 0..3 {
                let f = self.eval_complex(*z);
                let df = dp.eval_complex(*z);
                if df.modulus() == T::zero() {
                    break;
                }
                let step = f / df;
                let next = *z - step;
                if self.eval_complex(next).modulus() < f.modulus() {
                    *z = next;
                } else {
                    break;
                }
            }
        }
        for members in clusters(&roots, lit(1e-7)) {
            let k = members.len();
            // a k-fold root is a simple root of the (k-1)-th derivative
            let g = (1..k).fold(self.clone(), |acc, _| acc.derivative());
            let dg = g.derivative();
            let cnt: T = lit(k as f64);
            let mut z = members.iter().fold(Complex::new(T::zero(), T::zero()), |a, &i| a + roots[i]) / cnt;
            for _ in 0..4 {
                let df = dg.eval_complex(z);
                if df.modulus() == T::zero() {
                    break;
                }
                let next = z - g.eval_complex(z) / df;
                if g.eval_complex(next).modulus() >= g.eval_complex(z).modulus() {
                    break;
                }
                z = next;
            }
            for &i in &members {
                roots[i] = z;
            }
        }
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        roots
    }
}

/// Index groups of two or more roots within `rel` of each other.
fn clusters<T: Real>(roots: &[Complex<T>], rel: T) -> Vec<Vec<usize>> {
    let n = roots.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for i in 0..n {
        if seen[i] {
            continue;
        }
        seen[i] = true;
        let scale = T::one().max(roots[i].modulus());
        let mut group = vec![i];
        for j in i + 1..n {
            if !seen[j] && (roots[i] - roots[j]).modulus() <= rel * scale {
                seen[j] = true;
                group.push(j);
            }
        }
        if group.len() > 1 {
            out.push(group);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let p = Poly::new(vec![1.0f64, 2.0]);
        let q = Poly::new(vec![-1.0, 0.0, 3.0]);
        assert_eq!((&p * &q).coeffs(), &[-1.0, -2.0, 3.0, 6.0]);
        assert_eq!((&p + &q).coeffs(), &[0.0, 2.0, 3.0]);
        assert_eq!(q.derivative().coeffs(), &[0.0, 6.0]);
        assert_eq!(q.eval(2.0), 11.0);
        assert_eq!(Poly::new(vec![0.0, 0.0]).degree(), None);
    }

    #[test]
    fn simple_and_double_roots() {
        // (s + 1)(s + 4)
        let r = Poly::new(vec![4.0f64, 5.0, 1.0]).roots();
        assert!((r[0].re + 4.0).abs() < 1e-14 && (r[1].re + 1.0).abs() < 1e-14);
        // (s + 2)^2 (s - 3)
        let p = &(&Poly::new(vec![2.0f64, 1.0]) * &Poly::new(vec![2.0, 1.0])) * &Poly::new(vec![-3.0, 1.0]);
        let r = p.roots();
        assert!((r[0].re + 2.0).abs() < 1e-12 && r[0] == r[1]);
        assert!((r[2].re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn complex_pair() {
        let r = Poly::new(vec![1.0f64, 0.0, 1.0]).roots();
        assert!((r[0].im.abs() - 1.0).abs() < 1e-14 && r[0].re.abs() < 1e-14);
    }
}

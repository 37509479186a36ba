//! Decomposition of `Q(p_0, p) / (C prod_i (p_0^2 + |p|^2 + m_i^2))` into
//! simple mass-shell terms `(A_i(p) p_0 + B_i(p)) / (p_0^2 + |p|^2 + m_i^2)`
//! plus a polynomial (contact) remainder.
//!
//! `Q` is split into parts even and odd in `p_0`, each read as a polynomial
//! in `u = p_0^2`. After dividing out the monic `prod_i (u + |p|^2 + m_i^2)`,
//! the remainder `R` gives `R(-|p|^2 - m_i^2) / (C prod_{j!=i} (m_j^2 - m_i^2))`.

use num_complex::Complex;

use super::multipoly::MultiPoly;
use super::{norm2, MassSpectrum, RationalFunction};
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

type C<T> = Complex<T>;

#[derive(Debug, Clone)]
pub struct PartialFractionTerm<T: Real> {
    pub mass2: T,
    /// Coefficient of `p_0`, a polynomial in spatial momentum.
    pub anum: MultiPoly<C<T>>,
    pub bnum: MultiPoly<C<T>>,
}

impl<T: Real> PartialFractionTerm<T> {
    pub fn eval(&self, p: &[T]) -> C<T> {
        let (p0, rest) = (p[0], &p[1..]);
        let num = self.anum.eval_real(rest) * p0 + self.bnum.eval_real(rest);
        num / (p0 * p0 + norm2(rest) + self.mass2)
    }

    /// Total degree in spatial momentum of the two coefficient polynomials.
    pub fn coefficient_degree(&self) -> usize {
        self.anum.total_degree().max(self.bnum.total_degree())
    }
}

#[derive(Debug, Clone)]
pub struct PartialFractions<T: Real> {
    pub terms: Vec<PartialFractionTerm<T>>,
    /// Polynomial part in the full momentum; zero for proper fractions.
    pub contact: MultiPoly<C<T>>,
}

impl<T: Real> PartialFractions<T> {
    pub fn eval(&self, p: &[T]) -> C<T> {
        self.terms.iter().fold(self.contact.eval_real(p), |acc, t| acc + t.eval(p))
    }

    pub fn eval_without_contact(&self, p: &[T]) -> C<T> {
        self.terms.iter().fold(C::new(T::zero(), T::zero()), |acc, t| acc + t.eval(p))
    }
}

/// Polynomial in `u` with spatial-polynomial coefficients, ascending.
type UPoly<T> = Vec<MultiPoly<C<T>>>;

fn split_parity<T: Real>(num: &MultiPoly<C<T>>) -> (UPoly<T>, UPoly<T>) {
    let nsp = num.nvars() - 1;
    let deg0 = num.degree_in(0);
    let mut even = vec![MultiPoly::zero(nsp); deg0 / 2 + 1];
    let mut odd = vec![MultiPoly::zero(nsp); deg0.saturating_sub(1) / 2 + 1];
    for (e, &c) in num.terms() {
        let k = e[0] as usize;
        let rest = e[1..].to_vec();
        let target = if k % 2 == 0 { &mut even[k / 2] } else { &mut odd[k / 2] };
        target.add_term(rest, c);
    }
    (even, odd)
}

/// Long division by a monic divisor; returns (quotient, remainder).
fn divide_monic<T: Real>(num: &UPoly<T>, div: &UPoly<T>) -> (UPoly<T>, UPoly<T>) {
    let nsp = div[0].nvars();
    let n = div.len() - 1;
    let mut rem = num.clone();
    if rem.len() <= n {
        return (vec![MultiPoly::zero(nsp)], rem);
    }
    let mut quot = vec![MultiPoly::zero(nsp); rem.len() - n];
    for k in (n..rem.len()).rev() {
        let lead = rem[k].clone();
        if lead.is_zero() {
            continue;
        }
        quot[k - n] = lead.clone();
        for (j, dj) in div.iter().enumerate() {
            rem[k - n + j] = &rem[k - n + j] - &(&lead * dj);
        }
    }
    rem.truncate(n);
    (quot, rem)
}

fn eval_upoly<T: Real>(p: &UPoly<T>, u: &MultiPoly<C<T>>) -> MultiPoly<C<T>> {
    let nsp = u.nvars();
    p.iter().rev().fold(MultiPoly::zero(nsp), |acc, c| &(&acc * u) + c)
}

/// `sum_k q_k(p) p_0^(2k + shift)` as a polynomial in the full momentum.
fn lift<T: Real>(q: &UPoly<T>, shift: u8) -> MultiPoly<C<T>> {
    let nsp = q.first().map_or(0, |c| c.nvars());
    let mut out = MultiPoly::zero(nsp + 1);
    for (k, c) in q.iter().enumerate() {
        for (e, &v) in c.terms() {
            let mut full = Vec::with_capacity(nsp + 1);
            full.push(2 * k as u8 + shift);
            full.extend_from_slice(e);
            out.add_term(full, v);
        }
    }
    out
}

/// Masses must be real, positive and pairwise distinct (relative gap above
/// `1e-7`); repeated masses are reported as an error.
pub fn partial_fractions<T: Real>(f: &RationalFunction<T>) -> Result<PartialFractions<T>> {
    let spec = MassSpectrum::from_radial(&f.denominator)?;
    let masses = spec
        .real_masses2()
        .filter(|m| m.iter().all(|&x| x > T::zero()))
        .ok_or_else(|| Error::OutOfDomain("partial fractions need real positive masses".into()))?;
    for (i, &a) in masses.iter().enumerate() {
        for &b in &masses[i + 1..] {
            if (a - b).abs() <= lit::<T>(1e-7) * a.abs().max(b.abs()) {
                return Err(Error::RepeatedMass(to_f64(a)));
            }
        }
    }
    let nsp = f.numerator.nvars() - 1;
    let one = C::new(T::one(), T::zero());
    let r = (0..nsp).fold(MultiPoly::zero(nsp), |acc, i| {
        let x = MultiPoly::var(nsp, i);
        &acc + &(&x * &x)
    });
    let divisor = masses.iter().fold(vec![MultiPoly::constant(nsp, one)], |acc: UPoly<T>, &m2| {
        // multiply by (u + r + m2)
        let shift = &r + &MultiPoly::constant(nsp, C::new(m2, T::zero()));
        let mut out = vec![MultiPoly::zero(nsp); acc.len() + 1];
        for (k, c) in acc.iter().enumerate() {
            out[k + 1] = &out[k + 1] + c;
            out[k] = &out[k] + &(c * &shift);
        }
        out
    });
    let (even, odd) = split_parity(&f.numerator);
    let (qe, re) = divide_monic(&even, &divisor);
    let (qo, ro) = divide_monic(&odd, &divisor);
    let inv_c = one / C::new(spec.c, T::zero());
    let contact = (&lift(&qe, 0) + &lift(&qo, 1)).scale(inv_c);
    let terms = masses
        .iter()
        .enumerate()
        .map(|(i, &m2)| {
            let gap = masses
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(spec.c, |acc, (_, &mj)| acc * (mj - m2));
            let w = one / C::new(gap, T::zero());
            let at = &(-&r) - &MultiPoly::constant(nsp, C::new(m2, T::zero()));
            PartialFractionTerm {
                mass2: m2,
                anum: eval_upoly(&ro, &at).scale(w),
                bnum: eval_upoly(&re, &at).scale(w),
            }
        })
        .collect();
    Ok(PartialFractions { terms, contact })
}

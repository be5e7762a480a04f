//! Sparse multivariate polynomials over exact rationals.
//!
//! Terms are kept in a `BTreeMap` keyed by [`Monomial`], which orders
//! monomials graded-lexicographically. The map never stores a zero
//! coefficient, so structural equality is mathematical equality.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Largest supported number of variables of one kind (x or p).
pub const MAX_VARS: usize = 6;

/// Exponent vector in at most [`MAX_VARS`] variables.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Monomial(pub [u16; MAX_VARS]);

impl Monomial {
    pub const ONE: Monomial = Monomial([0; MAX_VARS]);

    pub fn var(i: usize) -> Self {
        let mut e = [0; MAX_VARS];
        e[i] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn exp(&self, i: usize) -> u16 {
        self.0[i]
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0.iter()) {
            *a += *b;
        }
        Monomial(e)
    }

    /// `self / other`, if `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0.iter()) {
            if *a < *b {
                return None;
            }
            *a -= *b;
        }
        Some(Monomial(e))
    }

    pub fn gcd_with(&self, other: &Monomial) -> Monomial {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0.iter()) {
            *a = (*a).min(*b);
        }
        Monomial(e)
    }

    pub fn with_exp(&self, i: usize, value: u16) -> Monomial {
        let mut e = self.0;
        e[i] = value;
        Monomial(e)
    }

    /// Multinomial coefficient `deg! / prod(e_i!)`.
    pub fn multinomial(&self) -> u64 {
        let mut acc: u64 = 1;
        let mut seen: u64 = 0;
        for &e in &self.0 {
            for k in 1..=e as u64 {
                seen += 1;
                acc = acc * seen / k;
            }
        }
        acc
    }

    /// Sorted index multiset (0-based) represented by the exponents.
    pub fn indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.degree() as usize);
        for (i, &e) in self.0.iter().enumerate() {
            for _ in 0..e {
                out.push(i);
            }
        }
        out
    }

    pub fn from_indices(indices: &[usize]) -> Monomial {
        let mut e = [0; MAX_VARS];
        for &i in indices {
            e[i] += 1;
        }
        Monomial(e)
    }

    pub(crate) fn fmt_with(&self, f: &mut fmt::Formatter<'_>, prefix: char) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "{}{}", prefix, i + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        self.fmt_with(f, 'x')
    }
}

/// A polynomial in `x1..x6` with rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::ONE, c);
        }
        Poly { terms }
    }

    pub fn from_int(c: i64) -> Self {
        Poly::constant(BigRational::from_integer(c.into()))
    }

    pub fn var(i: usize) -> Self {
        Poly::monomial(Monomial::var(i), BigRational::one())
    }

    pub fn monomial(m: Monomial, c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, BigRational)>>(iter: I) -> Self {
        let mut p = Poly::zero();
        for (m, c) in iter {
            p.add_term(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.constant_value().is_some_and(|c| c.is_one())
    }

    /// The value, if this polynomial is a constant (including zero).
    pub fn constant_value(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&Monomial::ONE).cloned(),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.constant_value().is_some()
    }

    /// Number of terms; `is_zero` is the emptiness test.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coeff(&self) -> BigRational {
        self.leading()
            .map(|(_, c)| c.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u16 {
        self.terms.keys().map(|m| m.exp(var)).max().unwrap_or(0)
    }

    pub fn has_var(&self, var: usize) -> bool {
        self.terms.keys().any(|m| m.exp(var) > 0)
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let (mut big, small) = if self.len() >= other.len() {
            (self.clone(), other)
        } else {
            (other.clone(), self)
        };
        for (m, c) in &small.terms {
            big.add_term(*m, c.clone());
        }
        big
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.constant_value() {
            return other.scale(&c);
        }
        if let Some(c) = other.constant_value() {
            return self.scale(&c);
        }
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        Poly {
            terms: self.terms.iter().map(|(m, a)| (*m, a * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(k, a)| (k.mul(m), a * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn partial(&self, var: usize) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exp(var);
            if e > 0 {
                out.add_term(
                    m.with_exp(var, e - 1),
                    c * BigRational::from_integer((e as i64).into()),
                );
            }
        }
        out
    }

    /// Divides by the leading coefficient; zero stays zero.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => Poly::zero(),
            Some((_, c)) if c.is_one() => self.clone(),
            Some((_, c)) => {
                let inv = c.recip();
                self.scale(&inv)
            }
        }
    }

    /// Exact division; `None` when `d` does not divide `self`.
    pub fn exact_div(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if let Some(c) = d.constant_value() {
            return Some(self.scale(&c.recip()));
        }
        let (dm, dc) = d.leading().map(|(m, c)| (*m, c.clone()))?;
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        while let Some((rm, rc)) = rem.leading().map(|(m, c)| (*m, c.clone())) {
            let qm = rm.div(&dm)?;
            let qc = rc / &dc;
            rem = rem.sub(&d.mul_monomial(&qm, &qc));
            quot.add_term(qm, qc);
        }
        Some(quot)
    }

    /// Coefficients with respect to `var`, indexed by the power of `var`.
    pub fn to_univariate(&self, var: usize) -> Vec<Poly> {
        let deg = self.degree_in(var) as usize;
        let mut out = vec![Poly::zero(); deg + 1];
        for (m, c) in &self.terms {
            let e = m.exp(var) as usize;
            out[e].add_term(m.with_exp(var, 0), c.clone());
        }
        out
    }

    pub fn from_univariate(coeffs: &[Poly], var: usize) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in coeffs.iter().enumerate() {
            for (m, a) in &c.terms {
                out.add_term(m.with_exp(var, m.exp(var) + e as u16), a.clone());
            }
        }
        out
    }

    fn lowest_var(&self) -> Option<usize> {
        (0..MAX_VARS).find(|&v| self.has_var(v))
    }

    /// Largest monomial dividing every term.
    fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let first = match it.next() {
            Some(m) => *m,
            None => return Monomial::ONE,
        };
        it.fold(first, |acc, m| acc.gcd_with(m))
    }

    /// Content with respect to `var`: the gcd of the coefficients in `var`.
    pub fn content_in(&self, var: usize) -> Poly {
        let coeffs = self.to_univariate(var);
        let mut g = Poly::zero();
        for c in coeffs.iter().rev() {
            if c.is_zero() {
                continue;
            }
            g = Poly::gcd(&g, c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    /// Monic greatest common divisor. `gcd(0, 0) = 0`.
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        if a.is_zero() {
            return b.monic();
        }
        if b.is_zero() {
            return a.monic();
        }
        if a.is_constant() || b.is_constant() {
            return Poly::one();
        }
        if a.len() == 1 || b.len() == 1 {
            let m = a.monomial_content().gcd_with(&b.monomial_content());
            return Poly::monomial(m, BigRational::one());
        }
        if a.monic() == b.monic() {
            return a.monic();
        }
        if let Some(v) = a.lowest_var().into_iter().chain(b.lowest_var()).min() {
            match (a.has_var(v), b.has_var(v)) {
                (true, false) => return Poly::gcd(&a.content_in(v), b),
                (false, true) => return Poly::gcd(a, &b.content_in(v)),
                _ => {}
            }
            let ca = a.content_in(v);
            let cb = b.content_in(v);
            let pa = a.exact_div(&ca).expect("content divides");
            let pb = b.exact_div(&cb).expect("content divides");
            let c = Poly::gcd(&ca, &cb);
            let g = primitive_prs_gcd(pa, pb, v);
            return c.mul(&g).monic();
        }
        Poly::one()
    }

    pub(crate) fn fmt_with(&self, f: &mut fmt::Formatter<'_>, prefix: char) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{abs}")?;
            } else {
                if !abs.is_one() {
                    write!(f, "{abs}*")?;
                }
                m.fmt_with(f, prefix)?;
            }
        }
        Ok(())
    }
}

/// Pseudo-remainder of `a` by `b` as polynomials in `var`.
fn pseudo_rem(a: &Poly, b: &Poly, var: usize) -> Poly {
    let bdeg = b.degree_in(var);
    let bu = b.to_univariate(var);
    let lcb = bu[bdeg as usize].clone();
    let mut r = a.clone();
    loop {
        if r.is_zero() {
            return r;
        }
        let rdeg = r.degree_in(var);
        if rdeg < bdeg {
            return r;
        }
        let ru = r.to_univariate(var);
        let lcr = &ru[rdeg as usize];
        let shift = Monomial::ONE.with_exp(var, rdeg - bdeg);
        let t = b.mul(lcr).mul_monomial(&shift, &BigRational::one());
        r = r.mul(&lcb).sub(&t);
    }
}

fn primitive_part(p: &Poly, var: usize) -> Poly {
    let c = p.content_in(var);
    p.exact_div(&c).expect("content divides")
}

/// Gcd of two polynomials that are primitive in `var`.
fn primitive_prs_gcd(a: Poly, b: Poly, var: usize) -> Poly {
    let (mut r0, mut r1) = if a.degree_in(var) >= b.degree_in(var) {
        (a, b)
    } else {
        (b, a)
    };
    loop {
        let r = pseudo_rem(&r0, &r1, var);
        if r.is_zero() {
            return primitive_part(&r1, var).monic();
        }
        if r.degree_in(var) == 0 {
            return Poly::one();
        }
        r0 = r1;
        r1 = primitive_part(&r, var);
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f, 'x')
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Poly {
        Poly::var(i)
    }

    fn c(v: i64) -> Poly {
        Poly::from_int(v)
    }

    #[test]
    fn commutative_cancellation() {
        let p = x(0).mul(&x(1)).sub(&x(1).mul(&x(0)));
        assert!(p.is_zero());
    }

    #[test]
    fn exact_division_roundtrip() {
        let a = x(0).add(&c(1)).mul(&x(1).sub(&x(2)));
        let b = x(0).add(&c(1));
        assert_eq!(a.exact_div(&b).unwrap(), x(1).sub(&x(2)));
        assert!(x(0).exact_div(&x(1)).is_none());
    }

    #[test]
    fn gcd_of_products() {
        let common = x(0).mul(&x(1)).add(&c(3));
        let a = common.mul(&x(0).sub(&x(2)));
        let b = common.mul(&x(1).add(&x(2)).pow(2));
        assert_eq!(Poly::gcd(&a, &b), common.monic());
    }

    #[test]
    fn gcd_coprime() {
        let a = x(0).add(&c(1));
        let b = x(0).sub(&c(1));
        assert!(Poly::gcd(&a, &b).is_one());
    }

    #[test]
    fn gcd_multivariate_power() {
        let f = x(0).mul(&x(0)).add(&x(1)).add(&c(2));
        let a = f.pow(3).mul(&x(2));
        let b = f.pow(2).mul(&x(0).sub(&x(2)));
        assert_eq!(Poly::gcd(&a, &b), f.pow(2).monic());
    }

    #[test]
    fn multinomial_counts() {
        assert_eq!(Monomial::from_indices(&[0, 1]).multinomial(), 2);
        assert_eq!(Monomial::from_indices(&[0, 0, 1]).multinomial(), 3);
        assert_eq!(Monomial::from_indices(&[0, 1, 2]).multinomial(), 6);
        assert_eq!(Monomial::from_indices(&[2, 2]).multinomial(), 1);
    }
}

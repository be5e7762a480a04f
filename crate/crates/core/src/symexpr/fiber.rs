use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;

use super::base::BaseScalar;
use super::poly::Monomial;

/// Polynomial in the momenta `p1..pn` with [`BaseScalar`] coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct FiberScalar {
    terms: BTreeMap<Monomial, BaseScalar>,
}

impl FiberScalar {
    pub fn zero() -> Self {
        FiberScalar::default()
    }

    pub fn one() -> Self {
        FiberScalar::from_base(BaseScalar::one())
    }

    pub fn from_int(v: i64) -> Self {
        FiberScalar::from_base(BaseScalar::from_int(v))
    }

    pub fn from_base(c: BaseScalar) -> Self {
        FiberScalar::term(Monomial::ONE, c)
    }

    pub fn term(m: Monomial, c: BaseScalar) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        FiberScalar { terms }
    }

    /// Momentum `p{i+1}`.
    pub fn momentum(i: usize) -> Self {
        FiberScalar::term(Monomial::var(i), BaseScalar::one())
    }

    /// Coordinate `x{i+1}` as a fiber-constant function.
    pub fn coord(i: usize) -> Self {
        FiberScalar::from_base(BaseScalar::var(i))
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, BaseScalar)>>(iter: I) -> Self {
        let mut out = FiberScalar::zero();
        for (m, c) in iter {
            out.add_term(m, &c);
        }
        out
    }

    pub fn add_term(&mut self, m: Monomial, c: &BaseScalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().add(c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BaseScalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> BaseScalar {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of terms; `is_zero` is the emptiness test.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// The coefficient if this is independent of the momenta.
    pub fn as_base(&self) -> Option<BaseScalar> {
        match self.terms.len() {
            0 => Some(BaseScalar::zero()),
            1 => self.terms.get(&Monomial::ONE).cloned(),
            _ => None,
        }
    }

    /// Largest p-degree present (0 for the zero polynomial).
    pub fn p_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Smallest p-degree present, `None` for zero.
    pub fn min_p_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).min()
    }

    /// True when every term has p-degree exactly `d` (zero qualifies).
    pub fn is_homogeneous(&self, d: u32) -> bool {
        self.terms.keys().all(|m| m.degree() == d)
    }

    pub fn homogeneous_component(&self, d: u32) -> FiberScalar {
        FiberScalar {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() == d)
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    pub fn add(&self, other: &FiberScalar) -> FiberScalar {
        let (mut big, small) = if self.len() >= other.len() {
            (self.clone(), other)
        } else {
            (other.clone(), self)
        };
        for (m, c) in &small.terms {
            big.add_term(*m, c);
        }
        big
    }

    pub fn neg(&self) -> FiberScalar {
        FiberScalar {
            terms: self.terms.iter().map(|(m, c)| (*m, c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &FiberScalar) -> FiberScalar {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, &c.neg());
        }
        out
    }

    pub fn mul(&self, other: &FiberScalar) -> FiberScalar {
        if self.is_zero() || other.is_zero() {
            return FiberScalar::zero();
        }
        let mut out = FiberScalar::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), &ca.mul(cb));
            }
        }
        out
    }

    pub fn mul_base(&self, c: &BaseScalar) -> FiberScalar {
        if c.is_zero() {
            return FiberScalar::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        FiberScalar::from_terms(self.terms.iter().map(|(m, a)| (*m, a.mul(c))))
    }

    pub fn scale(&self, c: &BigRational) -> FiberScalar {
        FiberScalar::from_terms(self.terms.iter().map(|(m, a)| (*m, a.scale(c))))
    }

    pub fn pow(&self, e: u32) -> FiberScalar {
        let mut acc = FiberScalar::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Partial derivative with respect to `x{var+1}`.
    pub fn partial_x(&self, var: usize) -> FiberScalar {
        FiberScalar::from_terms(self.terms.iter().map(|(m, c)| (*m, c.partial(var))))
    }

    /// Partial derivative with respect to `p{var+1}`.
    pub fn partial_p(&self, var: usize) -> FiberScalar {
        let mut out = FiberScalar::zero();
        for (m, c) in &self.terms {
            let e = m.exp(var);
            if e > 0 {
                out.add_term(m.with_exp(var, e - 1), &c.scale(&BigRational::from_integer(e.into())));
            }
        }
        out
    }
}

impl From<BaseScalar> for FiberScalar {
    fn from(c: BaseScalar) -> Self {
        FiberScalar::from_base(c)
    }
}

impl fmt::Display for FiberScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if m.is_one() {
                if self.terms.len() == 1 {
                    write!(f, "{c}")?;
                } else {
                    write!(f, "({c})")?;
                }
                continue;
            }
            if !c.is_one() {
                write!(f, "({c})*")?;
            }
            m.fmt_with(f, 'p')?;
        }
        Ok(())
    }
}

impl fmt::Debug for FiberScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiberScalar({self})")
    }
}

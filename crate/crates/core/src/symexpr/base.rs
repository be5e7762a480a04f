use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::poly::Poly;
use crate::error::{Error, Result};

/// Rational function in the base coordinates, kept in lowest terms with a
/// monic denominator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BaseScalar {
    num: Poly,
    den: Poly,
}

impl Default for BaseScalar {
    fn default() -> Self {
        BaseScalar::zero()
    }
}

impl BaseScalar {
    pub fn zero() -> Self {
        BaseScalar {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Self {
        BaseScalar {
            num: Poly::one(),
            den: Poly::one(),
        }
    }

    pub fn from_int(v: i64) -> Self {
        BaseScalar::from_poly(Poly::from_int(v))
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        BaseScalar::constant(BigRational::new(n.into(), d.into()))
    }

    pub fn constant(c: BigRational) -> Self {
        BaseScalar::from_poly(Poly::constant(c))
    }

    /// Coordinate `x{i+1}`.
    pub fn var(i: usize) -> Self {
        BaseScalar::from_poly(Poly::var(i))
    }

    pub fn from_poly(num: Poly) -> Self {
        BaseScalar {
            num,
            den: Poly::one(),
        }
    }

    /// Builds `num/den` in canonical form.
    pub fn from_fraction(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::reduce(num, den))
    }

    fn reduce(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return BaseScalar::zero();
        }
        if let Some(c) = den.constant_value() {
            return BaseScalar::from_poly(num.scale(&c.recip()));
        }
        let g = Poly::gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (
                num.exact_div(&g).expect("gcd divides numerator"),
                den.exact_div(&g).expect("gcd divides denominator"),
            )
        };
        let lc = den.leading_coeff();
        if lc.is_one() {
            BaseScalar { num, den }
        } else {
            let inv = lc.recip();
            BaseScalar {
                num: num.scale(&inv),
                den: den.scale(&inv),
            }
        }
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn constant_value(&self) -> Option<BigRational> {
        if self.den.is_one() {
            self.num.constant_value()
        } else {
            None
        }
    }

    pub fn add(&self, other: &BaseScalar) -> BaseScalar {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den.is_one() && other.den.is_one() {
            return BaseScalar::from_poly(self.num.add(&other.num));
        }
        if self.den == other.den {
            return Self::reduce(self.num.add(&other.num), self.den.clone());
        }
        let g = Poly::gcd(&self.den, &other.den);
        let bd = self.den.exact_div(&g).expect("gcd divides");
        let dd = other.den.exact_div(&g).expect("gcd divides");
        let num = self.num.mul(&dd).add(&other.num.mul(&bd));
        let den = self.den.mul(&dd);
        Self::reduce(num, den)
    }

    pub fn neg(&self) -> BaseScalar {
        BaseScalar {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &BaseScalar) -> BaseScalar {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &BaseScalar) -> BaseScalar {
        if self.is_zero() || other.is_zero() {
            return BaseScalar::zero();
        }
        if self.den.is_one() && other.den.is_one() {
            return BaseScalar::from_poly(self.num.mul(&other.num));
        }
        let g1 = Poly::gcd(&self.num, &other.den);
        let g2 = Poly::gcd(&other.num, &self.den);
        let a = self.num.exact_div(&g1).expect("gcd divides");
        let d = other.den.exact_div(&g1).expect("gcd divides");
        let c = other.num.exact_div(&g2).expect("gcd divides");
        let b = self.den.exact_div(&g2).expect("gcd divides");
        let num = a.mul(&c);
        let den = b.mul(&d);
        let lc = den.leading_coeff();
        if lc.is_one() {
            BaseScalar { num, den }
        } else {
            let inv = lc.recip();
            BaseScalar {
                num: num.scale(&inv),
                den: den.scale(&inv),
            }
        }
    }

    pub fn scale(&self, c: &BigRational) -> BaseScalar {
        if c.is_zero() {
            return BaseScalar::zero();
        }
        BaseScalar {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn recip(&self) -> Result<BaseScalar> {
        BaseScalar::from_fraction(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, other: &BaseScalar) -> Result<BaseScalar> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn pow(&self, e: i32) -> Result<BaseScalar> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let k = e.unsigned_abs();
        Ok(BaseScalar {
            num: base.num.pow(k),
            den: base.den.pow(k),
        })
    }

    /// Partial derivative with respect to `x{var+1}`.
    pub fn partial(&self, var: usize) -> BaseScalar {
        if self.den.is_one() {
            return BaseScalar::from_poly(self.num.partial(var));
        }
        if !self.num.has_var(var) && !self.den.has_var(var) {
            return BaseScalar::zero();
        }
        let num = self
            .num
            .partial(var)
            .mul(&self.den)
            .sub(&self.num.mul(&self.den.partial(var)));
        Self::reduce(num, self.den.mul(&self.den))
    }

    /// Largest total degree of numerator and denominator.
    pub fn complexity(&self) -> u32 {
        self.num.total_degree().max(self.den.total_degree())
    }
}

impl fmt::Display for BaseScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        let num_simple = self.num.len() == 1;
        let den_simple = self.den.len() == 1 && self.den.total_degree() == 1;
        if num_simple && !self.num.to_string().starts_with('-') {
            write!(f, "{}", self.num)?;
        } else {
            write!(f, "({})", self.num)?;
        }
        if den_simple {
            write!(f, "/{}", self.den)
        } else {
            write!(f, "/({})", self.den)
        }
    }
}

impl fmt::Debug for BaseScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BaseScalar({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> BaseScalar {
        BaseScalar::var(i)
    }

    #[test]
    fn reduces_common_factor() {
        let sq = x(0).mul(&x(0));
        assert_eq!(sq.div(&x(0)).unwrap(), x(0));
    }

    #[test]
    fn sum_of_reciprocals() {
        let one = BaseScalar::one();
        let a = one.add(&x(0)).recip().unwrap();
        let b = one.sub(&x(0)).recip().unwrap();
        let expected = BaseScalar::from_int(2)
            .div(&one.sub(&x(0).mul(&x(0))))
            .unwrap();
        assert_eq!(a.add(&b), expected);
    }

    #[test]
    fn quotient_rule() {
        let inv = x(0).recip().unwrap();
        let expected = x(0).mul(&x(0)).recip().unwrap().neg();
        assert_eq!(inv.partial(0), expected);
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(BaseScalar::zero().recip().is_err());
    }

    #[test]
    fn denominator_is_monic() {
        let v = BaseScalar::one()
            .div(&BaseScalar::from_int(2).sub(&x(1).scale(&BigRational::from_integer(4.into()))))
            .unwrap();
        assert!(v.denominator().leading_coeff().is_one());
    }
}

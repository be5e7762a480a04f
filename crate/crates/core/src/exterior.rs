//! Exterior algebra over a coordinate space, generic in the coefficient ring.
//!
//! A [`Multi`] is a sum of blades `c_I e_I` where `I` is a strictly increasing
//! set of generator indices stored as a bitmask. The same type serves for
//! multivector fields (generators `∂_a`) and differential forms (generators
//! `dx^a`); which one is meant is up to the caller.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;

use crate::symexpr::{BaseScalar, Coord, FiberScalar};

/// Coefficient ring operations needed by the tensor calculus.
pub trait Scalar: Clone + PartialEq + fmt::Display + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    fn negated(&self) -> Self;
    fn scaled(&self, c: &BigRational) -> Self;
    fn is_zero(&self) -> bool;
    fn partial(&self, c: Coord) -> Self;
    fn from_base(b: BaseScalar) -> Self;
}

impl Scalar for BaseScalar {
    fn zero() -> Self {
        BaseScalar::zero()
    }
    fn one() -> Self {
        BaseScalar::one()
    }
    fn plus(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn minus(&self, other: &Self) -> Self {
        self.sub(other)
    }
    fn times(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn negated(&self) -> Self {
        self.neg()
    }
    fn scaled(&self, c: &BigRational) -> Self {
        self.scale(c)
    }
    fn is_zero(&self) -> bool {
        BaseScalar::is_zero(self)
    }
    fn partial(&self, c: Coord) -> Self {
        match c {
            Coord::X(i) => BaseScalar::partial(self, i),
            Coord::P(_) => BaseScalar::zero(),
        }
    }
    fn from_base(b: BaseScalar) -> Self {
        b
    }
}

impl Scalar for FiberScalar {
    fn zero() -> Self {
        FiberScalar::zero()
    }
    fn one() -> Self {
        FiberScalar::one()
    }
    fn plus(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn minus(&self, other: &Self) -> Self {
        self.sub(other)
    }
    fn times(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn negated(&self) -> Self {
        self.neg()
    }
    fn scaled(&self, c: &BigRational) -> Self {
        self.scale(c)
    }
    fn is_zero(&self) -> bool {
        FiberScalar::is_zero(self)
    }
    fn partial(&self, c: Coord) -> Self {
        crate::symexpr::partial(self, c)
    }
    fn from_base(b: BaseScalar) -> Self {
        FiberScalar::from_base(b)
    }
}

/// The coordinate space a [`Multi`] lives over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Space {
    /// `M` with coordinates `x1..xn`.
    Base(usize),
    /// `T*M` with generators ordered `x1..xn, p1..pn`.
    Phase(usize),
}

impl Space {
    pub fn generators(&self) -> usize {
        match *self {
            Space::Base(n) => n,
            Space::Phase(n) => 2 * n,
        }
    }

    pub fn base_dim(&self) -> usize {
        match *self {
            Space::Base(n) | Space::Phase(n) => n,
        }
    }

    pub fn coord(&self, a: usize) -> Coord {
        match *self {
            Space::Base(_) => Coord::X(a),
            Space::Phase(n) if a < n => Coord::X(a),
            Space::Phase(n) => Coord::P(a - n),
        }
    }

    /// Human name of a generator, e.g. `x2` or `p1`.
    pub fn label(&self, a: usize) -> String {
        match self.coord(a) {
            Coord::X(i) => format!("x{}", i + 1),
            Coord::P(i) => format!("p{}", i + 1),
        }
    }
}

/// A set of generator indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Blade(pub u16);

impl Blade {
    pub const EMPTY: Blade = Blade(0);

    pub fn from_indices(idx: &[usize]) -> Option<(Blade, i32)> {
        let mut bits = 0u16;
        let mut sign = 1;
        for &a in idx {
            let bit = 1u16 << a;
            if bits & bit != 0 {
                return None;
            }
            if (bits >> a).count_ones() % 2 == 1 {
                sign = -sign;
            }
            bits |= bit;
        }
        Some((Blade(bits), sign))
    }

    pub fn single(a: usize) -> Blade {
        Blade(1 << a)
    }

    pub fn grade(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(&self, a: usize) -> bool {
        self.0 & (1 << a) != 0
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..16).filter(|&a| self.contains(a)).collect()
    }

    pub fn without(&self, a: usize) -> Blade {
        Blade(self.0 & !(1 << a))
    }

    /// Number of members strictly below `a`.
    pub fn count_below(&self, a: usize) -> u32 {
        (self.0 & ((1u16 << a) - 1)).count_ones()
    }

    /// Number of members strictly above `a`.
    pub fn count_above(&self, a: usize) -> u32 {
        (self.0 >> (a + 1)).count_ones()
    }

    /// Sign of `e_A ∧ e_B` relative to the sorted blade, or `None` if they overlap.
    pub fn wedge_sign(a: Blade, b: Blade) -> Option<i32> {
        if a.0 & b.0 != 0 {
            return None;
        }
        let mut swaps = 0u32;
        for j in b.indices() {
            swaps += a.count_above(j);
        }
        Some(if swaps.is_multiple_of(2) { 1 } else { -1 })
    }
}

fn signed<S: Scalar>(c: S, sign: i32) -> S {
    if sign < 0 {
        c.negated()
    } else {
        c
    }
}

/// Element of the exterior algebra over `space`.
#[derive(Clone, PartialEq)]
pub struct Multi<S: Scalar> {
    space: Space,
    terms: BTreeMap<Blade, S>,
}

impl<S: Scalar> Multi<S> {
    pub fn zero(space: Space) -> Self {
        Multi {
            space,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(space: Space, c: S) -> Self {
        let mut m = Multi::zero(space);
        m.add_term(Blade::EMPTY, c);
        m
    }

    pub fn generator(space: Space, a: usize) -> Self {
        let mut m = Multi::zero(space);
        m.add_term(Blade::single(a), S::one());
        m
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Blade, &S)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, b: Blade, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(b) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().plus(&c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// Adds `c` times the (possibly unsorted) wedge of generators `idx`.
    pub fn add_indexed(&mut self, idx: &[usize], c: S) {
        if let Some((b, sign)) = Blade::from_indices(idx) {
            self.add_term(b, signed(c, sign));
        }
    }

    /// Coefficient of the wedge of generators `idx`, respecting antisymmetry.
    pub fn component(&self, idx: &[usize]) -> S {
        match Blade::from_indices(idx) {
            None => S::zero(),
            Some((b, sign)) => signed(self.terms.get(&b).cloned().unwrap_or_else(S::zero), sign),
        }
    }

    pub fn coeff(&self, b: Blade) -> S {
        self.terms.get(&b).cloned().unwrap_or_else(S::zero)
    }

    /// Highest grade present (0 for zero).
    pub fn max_grade(&self) -> usize {
        self.terms.keys().map(Blade::grade).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self, k: usize) -> bool {
        self.terms.keys().all(|b| b.grade() == k)
    }

    pub fn grade_part(&self, k: usize) -> Self {
        Multi {
            space: self.space,
            terms: self
                .terms
                .iter()
                .filter(|(b, _)| b.grade() == k)
                .map(|(b, c)| (*b, c.clone()))
                .collect(),
        }
    }

    pub fn map_coeffs<F: Fn(&S) -> S>(&self, f: F) -> Self {
        let mut out = Multi::zero(self.space);
        for (b, c) in &self.terms {
            out.add_term(*b, f(c));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (b, c) in &other.terms {
            out.add_term(*b, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (b, c) in &other.terms {
            out.add_term(*b, c.negated());
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| c.negated())
    }

    pub fn mul_scalar(&self, s: &S) -> Self {
        self.map_coeffs(|c| c.times(s))
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        self.map_coeffs(|c| c.scaled(r))
    }

    pub fn wedge(&self, other: &Self) -> Self {
        let mut out = Multi::zero(self.space);
        for (ba, ca) in &self.terms {
            for (bb, cb) in &other.terms {
                if let Some(sign) = Blade::wedge_sign(*ba, *bb) {
                    out.add_term(Blade(ba.0 | bb.0), signed(ca.times(cb), sign));
                }
            }
        }
        out
    }

    /// Coefficient-wise partial derivative along generator `a`'s coordinate.
    pub fn partial(&self, a: usize) -> Self {
        let c = self.space.coord(a);
        self.map_coeffs(|s| s.partial(c))
    }

    /// Left derivative `∂/∂e_a` (removes `e_a` from the front).
    pub fn left_derivative(&self, a: usize) -> Self {
        let mut out = Multi::zero(self.space);
        for (b, c) in &self.terms {
            if b.contains(a) {
                let sign = if b.count_below(a) % 2 == 0 { 1 } else { -1 };
                out.add_term(b.without(a), signed(c.clone(), sign));
            }
        }
        out
    }

    /// Right derivative (removes `e_a` from the back).
    pub fn right_derivative(&self, a: usize) -> Self {
        let mut out = Multi::zero(self.space);
        for (b, c) in &self.terms {
            if b.contains(a) {
                let sign = if b.count_above(a) % 2 == 0 { 1 } else { -1 };
                out.add_term(b.without(a), signed(c.clone(), sign));
            }
        }
        out
    }

    /// Exterior derivative, reading generators as coordinate differentials.
    pub fn exterior_d(&self) -> Self {
        let mut out = Multi::zero(self.space);
        for a in 0..self.space.generators() {
            let da = self.partial(a);
            if !da.is_zero() {
                out = out.add(&Multi::generator(self.space, a).wedge(&da));
            }
        }
        out
    }

    /// Interior product of a form with a vector whose components are `v[a]`.
    pub fn interior(&self, v: &[S]) -> Self {
        let mut out = Multi::zero(self.space);
        for (a, va) in v.iter().enumerate() {
            if va.is_zero() {
                continue;
            }
            out = out.add(&self.left_derivative(a).mul_scalar(va));
        }
        out
    }

    /// Re-expresses the element after substituting each generator `a` by
    /// `images[a]` (a grade-one element).
    pub fn substitute(&self, images: &[Multi<S>], target: Space) -> Self {
        let mut out = Multi::zero(target);
        for (b, c) in &self.terms {
            let mut acc = Multi::scalar(target, c.clone());
            for a in b.indices() {
                acc = acc.wedge(&images[a]);
            }
            out = out.add(&acc);
        }
        out
    }

    /// Raw Schouten–Nijenhuis bracket of multivector fields.
    ///
    /// `[P,Q] = Σ_a (P ∂⃖_a)(∂_a Q) − (∂_a P)(∂⃗_a Q)`, so that on vector fields
    /// it is the Lie bracket and `[X, f] = X(f)`.
    pub fn schouten(&self, other: &Self) -> Self {
        let mut out = Multi::zero(self.space);
        for a in 0..self.space.generators() {
            let pr = self.right_derivative(a);
            if !pr.is_zero() {
                let dq = other.partial(a);
                if !dq.is_zero() {
                    out = out.add(&pr.wedge(&dq));
                }
            }
            let ql = other.left_derivative(a);
            if !ql.is_zero() {
                let dp = self.partial(a);
                if !dp.is_zero() {
                    out = out.sub(&dp.wedge(&ql));
                }
            }
        }
        out
    }

    /// Applies a vector field (grade-one element) to a scalar.
    pub fn apply_vector(&self, f: &S) -> S {
        let mut acc = S::zero();
        for (b, c) in &self.terms {
            if b.grade() == 1 {
                let a = b.indices()[0];
                acc = acc.plus(&c.times(&f.partial(self.space.coord(a))));
            }
        }
        acc
    }

    /// Evaluates a bivector on the differentials of two scalars.
    pub fn pair_differentials(&self, f: &S, g: &S) -> S {
        let mut acc = S::zero();
        let gens = self.space.generators();
        let df: Vec<S> = (0..gens).map(|a| f.partial(self.space.coord(a))).collect();
        let dg: Vec<S> = (0..gens).map(|a| g.partial(self.space.coord(a))).collect();
        for (b, c) in &self.terms {
            if b.grade() != 2 {
                continue;
            }
            let idx = b.indices();
            let (i, j) = (idx[0], idx[1]);
            let t = df[i].times(&dg[j]).minus(&df[j].times(&dg[i]));
            acc = acc.plus(&c.times(&t));
        }
        acc
    }
}

impl<S: Scalar> fmt::Display for Multi<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (b, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for a in b.indices() {
                write!(f, " e[{}]", self.space.label(a))?;
            }
        }
        Ok(())
    }
}

impl<S: Scalar> fmt::Debug for Multi<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Multi({self})")
    }
}

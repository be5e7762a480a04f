//! Exact scalar kernel: rational functions of the base coordinates and
//! polynomials in the momenta over them.

mod base;
mod fiber;
mod parse;
mod poly;

pub use base::BaseScalar;
pub use fiber::FiberScalar;
pub use parse::{canonicalize, parse_base, parse_expr, parse_fiber, Expr};
pub use poly::{Monomial, Poly, MAX_VARS};

/// Direction of a partial derivative on `T*M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coord {
    X(usize),
    P(usize),
}

/// Exact partial derivative of a fiber scalar.
pub fn partial(f: &FiberScalar, direction: Coord) -> FiberScalar {
    match direction {
        Coord::X(i) => f.partial_x(i),
        Coord::P(i) => f.partial_p(i),
    }
}

/// Part of `f` of exact momentum degree `d`.
pub fn homogeneous_component(f: &FiberScalar, d: u32) -> FiberScalar {
    f.homogeneous_component(d)
}

//! Seeded generators for random test data. Coefficients are small integers
//! and supports are sparse so that exact arithmetic stays cheap.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::base_geometry::{
    bivector_from_matrix, two_form_from_matrix, DiffForm, LinearConnection, Multivector, SymTensor,
};
use crate::phase_geometry::NonlinearConnection;
use crate::symexpr::{BaseScalar, FiberScalar, Monomial, Poly};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Monomials in `n` variables of total degree exactly `d`.
pub fn monomials_of_degree(n: usize, d: u32) -> Vec<Monomial> {
    fn go(n: usize, var: usize, left: u32, cur: Monomial, out: &mut Vec<Monomial>) {
        if var + 1 == n {
            out.push(cur.with_exp(var, left as u16));
            return;
        }
        for e in (0..=left).rev() {
            go(n, var + 1, left - e, cur.with_exp(var, e as u16), out);
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if d == 0 {
            out.push(Monomial::ONE);
        }
        return out;
    }
    go(n, 0, d, Monomial::ONE, &mut out);
    out
}

fn small_coeff<R: Rng>(rng: &mut R) -> i64 {
    let c = rng.gen_range(1..=3);
    if rng.gen_bool(0.5) {
        c
    } else {
        -c
    }
}

/// Polynomial in `x` of degree ≤ `max_degree` with at most `terms` terms;
/// zero with probability `zero_prob`.
pub fn base_poly<R: Rng>(rng: &mut R, n: usize, max_degree: u32, terms: usize, zero_prob: f64) -> BaseScalar {
    if rng.gen_bool(zero_prob) {
        return BaseScalar::zero();
    }
    let mut pool: Vec<Monomial> = (0..=max_degree).flat_map(|d| monomials_of_degree(n, d)).collect();
    pool.shuffle(rng);
    let k = rng.gen_range(1..=terms.max(1));
    let mut p = Poly::zero();
    for m in pool.into_iter().take(k) {
        p.add_term(m, num_rational::BigRational::from_integer(small_coeff(rng).into()));
    }
    BaseScalar::from_poly(p)
}

/// Fiber polynomial homogeneous of degree `p_degree` in `p`, with base
/// coefficients of degree ≤ `x_degree`.
pub fn fiber_homogeneous<R: Rng>(rng: &mut R, n: usize, p_degree: u32, x_degree: u32, terms: usize) -> FiberScalar {
    let mut pool = monomials_of_degree(n, p_degree);
    pool.shuffle(rng);
    let k = rng.gen_range(1..=terms.max(1));
    FiberScalar::from_terms(
        pool.into_iter()
            .take(k)
            .map(|m| (m, base_poly(rng, n, x_degree, 2, 0.0))),
    )
}

pub fn sym_tensor<R: Rng>(rng: &mut R, n: usize, degree: u32, x_degree: u32) -> SymTensor {
    let f = fiber_homogeneous(rng, n, degree, x_degree, 3);
    SymTensor::from_poly(n, degree, f).expect("homogeneous polynomial")
}

/// Random bivector on `ℝⁿ` (not Poisson in general).
pub fn bivector<R: Rng>(rng: &mut R, n: usize, x_degree: u32) -> Multivector {
    let mut m = vec![vec![BaseScalar::zero(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = base_poly(rng, n, x_degree, 2, 0.2);
            m[j][i] = v.neg();
            m[i][j] = v;
        }
    }
    bivector_from_matrix(&m).expect("antisymmetric")
}

pub fn two_form<R: Rng>(rng: &mut R, n: usize, x_degree: u32) -> DiffForm {
    let mut m = vec![vec![BaseScalar::zero(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = base_poly(rng, n, x_degree, 2, 0.2);
            m[j][i] = v.neg();
            m[i][j] = v;
        }
    }
    two_form_from_matrix(&m).expect("antisymmetric")
}

fn symmetric_table<R: Rng>(rng: &mut R, n: usize, x_degree: u32, zero_prob: f64) -> Vec<Vec<Vec<BaseScalar>>> {
    let mut g = vec![vec![vec![BaseScalar::zero(); n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let v = base_poly(rng, n, x_degree, 2, zero_prob);
                g[k][j][i] = v.clone();
                g[k][i][j] = v;
            }
        }
    }
    g
}

/// Random torsion-free connection.
pub fn symmetric_connection<R: Rng>(rng: &mut R, n: usize, x_degree: u32) -> LinearConnection {
    let g = symmetric_table(rng, n, x_degree, 0.5);
    LinearConnection::from_fn(n, true, |k, i, j| g[k][i][j].clone()).expect("symmetric")
}

/// Random torsion-free connection with `Γ^a_{ai} = 0`, obtained by solving
/// for `Γ^1_{1i}`.
pub fn trace_free_connection<R: Rng>(rng: &mut R, n: usize, x_degree: u32) -> LinearConnection {
    let mut g = symmetric_table(rng, n, x_degree, 0.5);
    for i in 0..n {
        let rest = (1..n).fold(BaseScalar::zero(), |acc, a| acc.add(&g[a][a][i]));
        g[0][0][i] = rest.neg();
        g[0][i][0] = rest.neg();
    }
    LinearConnection::from_fn(n, true, |k, i, j| g[k][i][j].clone()).expect("symmetric")
}

/// Random symmetric nonlinear connection with entries of `p`-degree ≤
/// `p_degree` (not necessarily homogeneous).
pub fn nonlinear_connection<R: Rng>(rng: &mut R, n: usize, x_degree: u32, p_degree: u32) -> NonlinearConnection {
    let mut m = vec![vec![FiberScalar::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut v = FiberScalar::zero();
            for d in 0..=p_degree {
                if rng.gen_bool(0.6) {
                    v = v.add(&fiber_homogeneous(rng, n, d, x_degree, 2));
                }
            }
            m[j][i] = v.clone();
            m[i][j] = v;
        }
    }
    NonlinearConnection::new(m).expect("symmetric")
}

//! Bracket engines: Schouten–Nijenhuis on `M` and `T*M`, the symmetric
//! bracket `⟨,⟩` in two independent implementations, Lie derivatives and
//! Poisson brackets of functions.

use std::collections::BTreeMap;

use num_rational::BigRational;

use crate::base_geometry::SymTensor;
use crate::error::{Error, Result};
use crate::exterior::{Multi, Scalar};
use crate::phase_geometry::{canonical_w0, PhaseForm, PhaseMultivector};
use crate::symexpr::{BaseScalar, FiberScalar, Monomial};

fn same_space<S: Scalar>(p: &Multi<S>, q: &Multi<S>) -> Result<()> {
    if p.space() != q.space() {
        return Err(Error::FrameMismatch(format!(
            "{:?} against {:?}",
            p.space(),
            q.space()
        )));
    }
    Ok(())
}

/// Schouten–Nijenhuis bracket of multivector fields on one coordinate space.
///
/// On vector fields this is the Lie bracket and `[X, f] = X(f)`. For a
/// bivector, `[w,w]^{ijk} = −2 Σ_(ijk) w^{hk} ∂_h w^{ij}`; see [`jacobiator`]
/// for the cyclic-sum normalization.
pub fn schouten<S: Scalar>(p: &Multi<S>, q: &Multi<S>) -> Result<Multi<S>> {
    same_space(p, q)?;
    Ok(p.schouten(q))
}

/// Schouten bracket of phase multivectors; adapted inputs are bracketed in the
/// natural frame and the result is returned in their common frame.
pub fn schouten_phase(p: &PhaseMultivector, q: &PhaseMultivector) -> Result<PhaseMultivector> {
    if p.frame() != q.frame() || p.dim() != q.dim() {
        return Err(Error::FrameMismatch(format!(
            "{} frame against {} frame",
            p.frame().name(),
            q.frame().name()
        )));
    }
    let raw = p.to_natural().body().schouten(q.to_natural().body());
    let out = PhaseMultivector::from_multi(crate::phase_geometry::Frame::Natural, raw)?;
    Ok(out.in_frame(p.frame()))
}

/// `−½[w,w]`, whose `(i,j,k)` component is `Σ_(ijk) w^{hk} ∂_h w^{ij}`.
pub fn jacobiator<S: Scalar>(w: &Multi<S>) -> Multi<S> {
    w.schouten(w).scale(&BigRational::new((-1).into(), 2.into()))
}

/// `⟨Q,H⟩` read back from `{Q̃, H̃}_{W₀}`.
pub fn sym_bracket(q: &SymTensor, h: &SymTensor) -> SymTensor {
    let n = q.dim();
    let degree = (q.degree() + h.degree()).saturating_sub(1);
    if q.degree() + h.degree() == 0 {
        return SymTensor::zero(n, 0);
    }
    let poly = canonical_w0(n).pair(q.tilde(), h.tilde());
    SymTensor::from_poly(n, degree, poly).expect("bracket of homogeneous polynomials is homogeneous")
}

/// A factor of a monomial symmetric tensor: a function or a coordinate field.
#[derive(Clone, Debug)]
enum Factor {
    Function(BaseScalar),
    Field(usize),
}

type Sparse = BTreeMap<Vec<usize>, BaseScalar>;

fn add_sparse(acc: &mut Sparse, key: Vec<usize>, c: BaseScalar) {
    if c.is_zero() {
        return;
    }
    let mut key = key;
    key.sort_unstable();
    let entry = acc.entry(key.clone()).or_insert_with(BaseScalar::zero);
    *entry = entry.add(&c);
    if entry.is_zero() {
        acc.remove(&key);
    }
}

/// Bracket of two generators as a sparse symmetric tensor.
fn generator_bracket(a: &Factor, b: &Factor) -> Sparse {
    let mut out = Sparse::new();
    match (a, b) {
        (Factor::Field(_), Factor::Field(_)) | (Factor::Function(_), Factor::Function(_)) => {}
        (Factor::Field(i), Factor::Function(f)) => add_sparse(&mut out, vec![], f.partial(*i)),
        (Factor::Function(f), Factor::Field(i)) => add_sparse(&mut out, vec![], f.partial(*i).neg()),
    }
    out
}

fn factors_of(indices: &[usize], coeff: &BaseScalar) -> Vec<Factor> {
    let mut f = vec![Factor::Function(coeff.clone())];
    f.extend(indices.iter().map(|&i| Factor::Field(i)));
    f
}

fn product_rest(factors: &[Factor], skip: usize) -> (BaseScalar, Vec<usize>) {
    let mut c = BaseScalar::one();
    let mut idx = Vec::new();
    for (r, f) in factors.iter().enumerate() {
        if r == skip {
            continue;
        }
        match f {
            Factor::Function(g) => c = c.mul(g),
            Factor::Field(i) => idx.push(*i),
        }
    }
    (c, idx)
}

/// `⟨Q,H⟩` by bilinearity and the derivation rule over `⊙`, starting from
/// `⟨∂_i,∂_j⟩ = 0`, `⟨∂_i, f⟩ = ∂_i f`, `⟨f, ∂_i⟩ = −∂_i f`, `⟨f,g⟩ = 0`.
pub fn sym_bracket_expand(q: &SymTensor, h: &SymTensor) -> SymTensor {
    let n = q.dim();
    if q.degree() + h.degree() == 0 {
        return SymTensor::zero(n, 0);
    }
    let mut acc = Sparse::new();
    for (mq, cq) in q.tilde().terms() {
        let fq = factors_of(&mq.indices(), cq);
        for (mh, ch) in h.tilde().terms() {
            let fh = factors_of(&mh.indices(), ch);
            for (r, a) in fq.iter().enumerate() {
                let (ca, ia) = product_rest(&fq, r);
                for (s, b) in fh.iter().enumerate() {
                    let gb = generator_bracket(a, b);
                    if gb.is_empty() {
                        continue;
                    }
                    let (cb, ib) = product_rest(&fh, s);
                    for (k, c) in gb {
                        let mut key = k;
                        key.extend_from_slice(&ia);
                        key.extend_from_slice(&ib);
                        add_sparse(&mut acc, key, c.mul(&ca).mul(&cb));
                    }
                }
            }
        }
    }
    let degree = q.degree() + h.degree() - 1;
    let mut poly = FiberScalar::zero();
    for (k, c) in acc {
        poly.add_term(Monomial::from_indices(&k), &c);
    }
    SymTensor::from_poly(n, degree, poly).expect("derivation expansion keeps degree")
}

/// `L_V T = [V, T]` for multivector fields.
pub fn lie_derivative<S: Scalar>(v: &Multi<S>, t: &Multi<S>) -> Result<Multi<S>> {
    same_space(v, t)?;
    if !v.is_homogeneous(1) && !v.is_zero() {
        return Err(Error::Degree("Lie derivative needs a vector field".into()));
    }
    Ok(v.schouten(t))
}

/// `L_V F = V(F)`.
pub fn lie_derivative_scalar<S: Scalar>(v: &Multi<S>, f: &S) -> S {
    v.apply_vector(f)
}

/// `L_V α = i_V dα + d i_V α` for a differential form.
pub fn lie_derivative_form<S: Scalar>(v: &Multi<S>, alpha: &Multi<S>) -> Result<Multi<S>> {
    same_space(v, alpha)?;
    let comps: Vec<S> = (0..v.space().generators()).map(|a| v.component(&[a])).collect();
    Ok(alpha
        .exterior_d()
        .interior(&comps)
        .add(&alpha.interior(&comps).exterior_d()))
}

/// `L_V T` for phase multivectors, in the frame of `T`.
pub fn lie_derivative_phase(v: &PhaseMultivector, t: &PhaseMultivector) -> Result<PhaseMultivector> {
    let vn = v.to_natural();
    let tn = t.to_natural();
    let raw = lie_derivative(vn.body(), tn.body())?;
    Ok(PhaseMultivector::from_multi(crate::phase_geometry::Frame::Natural, raw)?.in_frame(t.frame()))
}

/// `L_V α` for phase forms, returned in the frame of `α`.
pub fn lie_derivative_phase_form(v: &PhaseMultivector, alpha: &PhaseForm) -> Result<PhaseForm> {
    let raw = lie_derivative_form(v.to_natural().body(), alpha.to_natural().body())?;
    let out = PhaseForm::from_multi(crate::phase_geometry::Frame::Natural, raw);
    Ok(match alpha.frame() {
        crate::phase_geometry::Frame::Natural => out,
        crate::phase_geometry::Frame::Adapted(nl) => out.to_adapted(nl),
    })
}

/// `{F, G}_W = W(dF, dG)`.
pub fn poisson_bracket(w: &PhaseMultivector, f: &FiberScalar, g: &FiberScalar) -> FiberScalar {
    w.pair(f, g)
}

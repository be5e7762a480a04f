//! Tensor fields, connections and curvature on the base manifold in one
//! global chart.
//!
//! Conventions: `{f,g}_w = w(df,dg) = w^{ij} ∂_i f ∂_j g`, `(♯_w α)^j = w^{ij} α_i`,
//! `∇_{∂_i} ∂_j = Γ^k_{ij} ∂_k`, and
//! `R(∂_i,∂_j)∂_k = R^h_{kij} ∂_h` with
//! `R^h_{kij} = ∂_iΓ^h_{jk} − ∂_jΓ^h_{ik} + Γ^h_{il}Γ^l_{jk} − Γ^h_{jl}Γ^l_{ik}`.

use std::fmt;

use crate::error::{Error, Result};
use crate::exterior::{Multi, Space};
use crate::symexpr::{BaseScalar, FiberScalar, Monomial, MAX_VARS};

/// Antisymmetric contravariant tensor field on `M`.
pub type Multivector = Multi<BaseScalar>;

/// Differential form on `M` (generators read as `dx^a`).
pub type DiffForm = Multi<BaseScalar>;

pub fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_VARS {
        Err(Error::Dimension(n))
    } else {
        Ok(())
    }
}

/// Bivector `½ w^{ij} ∂_i∧∂_j` from its full antisymmetric matrix.
pub fn bivector_from_matrix(w: &[Vec<BaseScalar>]) -> Result<Multivector> {
    let n = w.len();
    check_dim(n)?;
    let mut out = Multivector::zero(Space::Base(n));
    for i in 0..n {
        if w[i].len() != n {
            return Err(Error::Shape(format!("row {} has {} entries, expected {n}", i + 1, w[i].len())));
        }
        if !w[i][i].is_zero() {
            return Err(Error::Symmetry {
                what: "Poisson matrix".into(),
                indices: vec![i + 1, i + 1],
            });
        }
        for j in i + 1..n {
            if w[i][j] != w[j][i].neg() {
                return Err(Error::Symmetry {
                    what: "Poisson matrix".into(),
                    indices: vec![i + 1, j + 1],
                });
            }
            out.add_indexed(&[i, j], w[i][j].clone());
        }
    }
    Ok(out)
}

/// Full matrix `w^{ij}` of a bivector.
pub fn bivector_matrix(w: &Multivector) -> Vec<Vec<BaseScalar>> {
    let n = w.space().base_dim();
    (0..n)
        .map(|i| (0..n).map(|j| w.component(&[i, j])).collect())
        .collect()
}

/// 2-form `½ ω_{ij} dx^i∧dx^j` from its antisymmetric matrix.
pub fn two_form_from_matrix(m: &[Vec<BaseScalar>]) -> Result<DiffForm> {
    bivector_from_matrix(m).map_err(|e| match e {
        Error::Symmetry { indices, .. } => Error::Symmetry {
            what: "two-form matrix".into(),
            indices,
        },
        other => other,
    })
}

/// Poisson bracket of base functions, `w(df, dg)`.
pub fn poisson_bracket_base(w: &Multivector, f: &BaseScalar, g: &BaseScalar) -> BaseScalar {
    w.pair_differentials(f, g)
}

/// Dense tensor of BaseScalar components indexed by `rank` indices in `0..n`.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    n: usize,
    rank: usize,
    data: Vec<BaseScalar>,
}

impl Tensor {
    pub fn zeros(n: usize, rank: usize) -> Self {
        Tensor {
            n,
            rank,
            data: vec![BaseScalar::zero(); n.pow(rank as u32)],
        }
    }

    pub fn from_fn<F: FnMut(&[usize]) -> BaseScalar>(n: usize, rank: usize, mut f: F) -> Self {
        let mut t = Tensor::zeros(n, rank);
        for (k, idx) in index_tuples(n, rank).into_iter().enumerate() {
            t.data[k] = f(&idx);
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> &BaseScalar {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: BaseScalar) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(BaseScalar::is_zero)
    }

    /// Lexicographically smallest nonzero component.
    pub fn first_nonzero(&self) -> Option<(Vec<usize>, BaseScalar)> {
        index_tuples(self.n, self.rank)
            .into_iter()
            .zip(self.data.iter())
            .find(|(_, v)| !v.is_zero())
            .map(|(i, v)| (i, v.clone()))
    }

    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, &BaseScalar)> {
        index_tuples(self.n, self.rank).into_iter().zip(self.data.iter())
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (idx, v) in self.entries() {
            if !v.is_zero() {
                m.entry(&idx, &v.to_string());
            }
        }
        m.finish()
    }
}

/// All index tuples of length `rank` over `0..n`, lexicographically.
pub fn index_tuples(n: usize, rank: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..rank {
        let mut next = Vec::with_capacity(out.len() * n);
        for t in &out {
            for i in 0..n {
                let mut u = t.clone();
                u.push(i);
                next.push(u);
            }
        }
        out = next;
    }
    out
}

/// Symmetric contravariant tensor stored through its fiber polynomial
/// `Q̃ = Q^{i_1..i_k} p_{i_1}..p_{i_k}`; the component of a multiset is the
/// coefficient of the corresponding monomial.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SymTensor {
    n: usize,
    degree: u32,
    poly: FiberScalar,
}

impl SymTensor {
    pub fn zero(n: usize, degree: u32) -> Self {
        SymTensor {
            n,
            degree,
            poly: FiberScalar::zero(),
        }
    }

    pub fn from_poly(n: usize, degree: u32, poly: FiberScalar) -> Result<Self> {
        if !poly.is_homogeneous(degree) {
            return Err(Error::Degree(format!(
                "polynomial is not homogeneous of degree {degree}"
            )));
        }
        Ok(SymTensor { n, degree, poly })
    }

    /// Reads a homogeneous polynomial back as a symmetric tensor, taking the
    /// degree from its terms (zero is taken to have `fallback` degree).
    pub fn from_homogeneous(n: usize, poly: FiberScalar, fallback: u32) -> Result<Self> {
        let degree = poly.min_p_degree().unwrap_or(fallback);
        SymTensor::from_poly(n, degree, poly)
    }

    pub fn scalar(n: usize, f: BaseScalar) -> Self {
        SymTensor {
            n,
            degree: 0,
            poly: FiberScalar::from_base(f),
        }
    }

    pub fn vector(comps: &[BaseScalar]) -> Self {
        let n = comps.len();
        let mut poly = FiberScalar::zero();
        for (i, c) in comps.iter().enumerate() {
            poly.add_term(Monomial::var(i), c);
        }
        SymTensor { n, degree: 1, poly }
    }

    /// Sets the coefficient of the multiset `indices` (0-based).
    pub fn with_component(mut self, indices: &[usize], c: BaseScalar) -> Self {
        let m = Monomial::from_indices(indices);
        let old = self.poly.coeff(&m);
        self.poly.add_term(m, &c.sub(&old));
        self
    }

    pub fn component(&self, indices: &[usize]) -> BaseScalar {
        self.poly.coeff(&Monomial::from_indices(indices))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn tilde(&self) -> &FiberScalar {
        &self.poly
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    /// Components of a vector field.
    pub fn vector_components(&self) -> Vec<BaseScalar> {
        (0..self.n).map(|i| self.poly.coeff(&Monomial::var(i))).collect()
    }

    pub fn add(&self, other: &SymTensor) -> SymTensor {
        SymTensor {
            n: self.n,
            degree: self.degree,
            poly: self.poly.add(&other.poly),
        }
    }

    pub fn sub(&self, other: &SymTensor) -> SymTensor {
        SymTensor {
            n: self.n,
            degree: self.degree,
            poly: self.poly.sub(&other.poly),
        }
    }

    pub fn scale(&self, f: &BaseScalar) -> SymTensor {
        SymTensor {
            n: self.n,
            degree: self.degree,
            poly: self.poly.mul_base(f),
        }
    }

    /// Weight-free symmetric product.
    pub fn sym_product(&self, other: &SymTensor) -> SymTensor {
        SymTensor {
            n: self.n,
            degree: self.degree + other.degree,
            poly: self.poly.mul(&other.poly),
        }
    }

    /// `i(df)Q`, the contraction of one slot with a differential, in
    /// polynomial form `Σ_j ∂_j f ∂Q̃/∂p_j`.
    pub fn contract_differential(&self, f: &BaseScalar) -> SymTensor {
        let mut poly = FiberScalar::zero();
        for j in 0..self.n {
            let df = f.partial(j);
            if !df.is_zero() {
                poly = poly.add(&self.poly.partial_p(j).mul_base(&df));
            }
        }
        SymTensor {
            n: self.n,
            degree: self.degree.saturating_sub(1),
            poly,
        }
    }
}

impl fmt::Display for SymTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.poly)
    }
}

impl fmt::Debug for SymTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymTensor[{}]({})", self.degree, self.poly)
    }
}

fn square_matrix(m: &[Vec<BaseScalar>], what: &str) -> Result<usize> {
    let n = m.len();
    check_dim(n)?;
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Shape(format!(
                "{what}: row {} has {} entries, expected {n}",
                i + 1,
                row.len()
            )));
        }
    }
    Ok(n)
}

/// Inverse of a square matrix of rational functions by Gauss–Jordan.
pub fn invert_matrix(m: &[Vec<BaseScalar>]) -> Option<Vec<Vec<BaseScalar>>> {
    let n = m.len();
    let mut a: Vec<Vec<BaseScalar>> = m.to_vec();
    let mut inv: Vec<Vec<BaseScalar>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BaseScalar::one() } else { BaseScalar::zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .min_by_key(|&r| a[r][col].complexity())?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let pinv = a[col][col].recip().ok()?;
        for j in 0..n {
            a[col][j] = a[col][j].mul(&pinv);
            inv[col][j] = inv[col][j].mul(&pinv);
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for j in 0..n {
                let t = a[col][j].mul(&factor);
                a[r][j] = a[r][j].sub(&t);
                let t = inv[col][j].mul(&factor);
                inv[r][j] = inv[r][j].sub(&t);
            }
        }
    }
    Some(inv)
}

/// Riemannian (or pseudo-Riemannian) metric with its cached inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric {
    g: Vec<Vec<BaseScalar>>,
    inv: Vec<Vec<BaseScalar>>,
}

impl Metric {
    pub fn new(g: Vec<Vec<BaseScalar>>) -> Result<Self> {
        let n = square_matrix(&g, "metric")?;
        for i in 0..n {
            for j in i + 1..n {
                if g[i][j] != g[j][i] {
                    return Err(Error::Symmetry {
                        what: "metric".into(),
                        indices: vec![i + 1, j + 1],
                    });
                }
            }
        }
        let inv = invert_matrix(&g).ok_or_else(|| Error::NonInvertible("metric".into()))?;
        Ok(Metric { g, inv })
    }

    pub fn flat(n: usize) -> Self {
        let id: Vec<Vec<BaseScalar>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { BaseScalar::one() } else { BaseScalar::zero() })
                    .collect()
            })
            .collect();
        Metric {
            g: id.clone(),
            inv: id,
        }
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn lower(&self, i: usize, j: usize) -> &BaseScalar {
        &self.g[i][j]
    }

    pub fn upper(&self, i: usize, j: usize) -> &BaseScalar {
        &self.inv[i][j]
    }

    pub fn matrix(&self) -> &[Vec<BaseScalar>] {
        &self.g
    }

    pub fn inverse_matrix(&self) -> &[Vec<BaseScalar>] {
        &self.inv
    }
}

/// Linear connection `∇_{∂_i}∂_j = Γ^k_{ij} ∂_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConnection {
    n: usize,
    gamma: Vec<BaseScalar>,
    symmetric: bool,
}

impl LinearConnection {
    pub fn zero(n: usize) -> Self {
        LinearConnection {
            n,
            gamma: vec![BaseScalar::zero(); n * n * n],
            symmetric: true,
        }
    }

    /// Builds a connection from a coefficient function `(k,i,j) ↦ Γ^k_{ij}`.
    pub fn from_fn<F: FnMut(usize, usize, usize) -> BaseScalar>(
        n: usize,
        symmetric: bool,
        mut f: F,
    ) -> Result<Self> {
        check_dim(n)?;
        let mut c = LinearConnection::zero(n);
        c.symmetric = symmetric;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let o = c.offset(k, i, j);
                    c.gamma[o] = f(k, i, j);
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Builds a connection from sparse `(k,i,j,Γ^k_{ij})` entries. With
    /// `symmetric` set, an entry with `i ≠ j` also fills `(k,j,i)` unless that
    /// slot is given explicitly, in which case both must agree.
    pub fn from_entries(
        n: usize,
        symmetric: bool,
        entries: &[(usize, usize, usize, BaseScalar)],
    ) -> Result<Self> {
        check_dim(n)?;
        let mut c = LinearConnection::zero(n);
        c.symmetric = symmetric;
        let mut given = vec![false; n * n * n];
        for (k, i, j, v) in entries {
            if *k >= n || *i >= n || *j >= n {
                return Err(Error::Shape(format!(
                    "connection index ({},{},{}) outside dimension {n}",
                    k + 1,
                    i + 1,
                    j + 1
                )));
            }
            let o = c.offset(*k, *i, *j);
            if given[o] {
                return Err(Error::Manifest(format!(
                    "connection entry ({},{},{}) given twice",
                    k + 1,
                    i + 1,
                    j + 1
                )));
            }
            given[o] = true;
            c.gamma[o] = v.clone();
        }
        if symmetric {
            for k in 0..n {
                for i in 0..n {
                    for j in i + 1..n {
                        let (a, b) = (c.offset(k, i, j), c.offset(k, j, i));
                        match (given[a], given[b]) {
                            (true, false) => c.gamma[b] = c.gamma[a].clone(),
                            (false, true) => c.gamma[a] = c.gamma[b].clone(),
                            _ => {}
                        }
                    }
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if !self.symmetric {
            return Ok(());
        }
        for k in 0..self.n {
            for i in 0..self.n {
                for j in i + 1..self.n {
                    if self.get(k, i, j) != self.get(k, j, i) {
                        return Err(Error::Symmetry {
                            what: "symmetric linear connection".into(),
                            indices: vec![k + 1, i + 1, j + 1],
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn offset(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.n + i) * self.n + j
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `Γ^k_{ij}`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> &BaseScalar {
        &self.gamma[self.offset(k, i, j)]
    }

    pub fn is_zero(&self) -> bool {
        self.gamma.iter().all(BaseScalar::is_zero)
    }

    /// Whether `Γ^k_{ij} = Γ^k_{ji}` holds, independent of the flag.
    pub fn is_torsion_free(&self) -> bool {
        (0..self.n).all(|k| {
            (0..self.n).all(|i| (0..self.n).all(|j| self.get(k, i, j) == self.get(k, j, i)))
        })
    }

    /// `Σ_a Γ^a_{ai}`.
    pub fn trace(&self, i: usize) -> BaseScalar {
        (0..self.n).fold(BaseScalar::zero(), |acc, a| acc.add(self.get(a, a, i)))
    }
}

/// Contravariant connection `D_{dx^i}∂_j = −Γ^{ik}_j ∂_k` on `(M, w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContravariantConnection {
    n: usize,
    gamma: Vec<BaseScalar>,
    w: Multivector,
}

impl ContravariantConnection {
    /// Builds `D` from `(i,j,k) ↦ Γ^{ij}_k`.
    pub fn from_fn<F: FnMut(usize, usize, usize) -> BaseScalar>(w: &Multivector, mut f: F) -> Self {
        let n = w.space().base_dim();
        let mut gamma = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    gamma.push(f(i, j, k));
                }
            }
        }
        ContravariantConnection {
            n,
            gamma,
            w: w.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn poisson(&self) -> &Multivector {
        &self.w
    }

    /// `Γ^{ij}_k`.
    pub fn get(&self, i: usize, j: usize, k: usize) -> &BaseScalar {
        &self.gamma[(i * self.n + j) * self.n + k]
    }

    /// Same connection, componentwise shifted by `τ^{ij}_k`.
    pub fn shifted(&self, tau: &Tensor) -> Self {
        ContravariantConnection::from_fn(&self.w, |i, j, k| self.get(i, j, k).add(tau.get(&[i, j, k])))
    }

    /// `D_α Q` for a 1-form with components `alpha`.
    pub fn derivative(&self, alpha: &[BaseScalar], q: &SymTensor) -> SymTensor {
        let n = self.n;
        let mut poly = FiberScalar::zero();
        let dq_dp: Vec<FiberScalar> = (0..n).map(|k| q.tilde().partial_p(k)).collect();
        let dq_dx: Vec<FiberScalar> = (0..n).map(|h| q.tilde().partial_x(h)).collect();
        for (i, ai) in alpha.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            let mut inner = FiberScalar::zero();
            for h in 0..n {
                let wih = self.w.component(&[i, h]);
                if !wih.is_zero() && !dq_dx[h].is_zero() {
                    inner = inner.add(&dq_dx[h].mul_base(&wih));
                }
            }
            for j in 0..n {
                for k in 0..n {
                    let g = self.get(i, j, k);
                    if !g.is_zero() && !dq_dp[k].is_zero() {
                        inner = inner.sub(&dq_dp[k].mul(&FiberScalar::momentum(j)).mul_base(g));
                    }
                }
            }
            poly = poly.add(&inner.mul_base(ai));
        }
        SymTensor {
            n,
            degree: q.degree(),
            poly,
        }
    }
}

/// Coordinates of the differential of `f`.
pub fn differential(f: &BaseScalar, n: usize) -> Vec<BaseScalar> {
    (0..n).map(|i| f.partial(i)).collect()
}

/// Christoffel symbols `Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})`.
pub fn levi_civita(g: &Metric) -> Result<LinearConnection> {
    let n = g.dim();
    let half = BaseScalar::from_ratio(1, 2);
    LinearConnection::from_fn(n, true, |k, i, j| {
        let mut acc = BaseScalar::zero();
        for l in 0..n {
            let gkl = g.upper(k, l);
            if gkl.is_zero() {
                continue;
            }
            let t = g
                .lower(j, l)
                .partial(i)
                .add(&g.lower(i, l).partial(j))
                .sub(&g.lower(i, j).partial(l));
            acc = acc.add(&gkl.mul(&t));
        }
        acc.mul(&half)
    })
}

/// `∇_k g_{ij}`, indexed `[k][i][j]`.
pub fn nabla_metric(nabla: &LinearConnection, g: &Metric) -> Tensor {
    let n = g.dim();
    Tensor::from_fn(n, 3, |idx| {
        let (k, i, j) = (idx[0], idx[1], idx[2]);
        let mut acc = g.lower(i, j).partial(k);
        for l in 0..n {
            acc = acc
                .sub(&nabla.get(l, k, i).mul(g.lower(l, j)))
                .sub(&nabla.get(l, k, j).mul(g.lower(i, l)));
        }
        acc
    })
}

/// Curvature components `R^h_{kij}`, indexed `[h][k][i][j]`.
pub fn curvature(nabla: &LinearConnection) -> Tensor {
    let n = nabla.dim();
    Tensor::from_fn(n, 4, |idx| {
        let (h, k, i, j) = (idx[0], idx[1], idx[2], idx[3]);
        if i == j {
            return BaseScalar::zero();
        }
        let mut acc = nabla.get(h, j, k).partial(i).sub(&nabla.get(h, i, k).partial(j));
        for l in 0..n {
            acc = acc
                .add(&nabla.get(h, i, l).mul(nabla.get(l, j, k)))
                .sub(&nabla.get(h, j, l).mul(nabla.get(l, i, k)));
        }
        acc
    })
}

/// Ricci tensor `R_{ba} = R^k_{akb}`, indexed `[b][a]`.
pub fn ricci(nabla: &LinearConnection) -> Tensor {
    let r = curvature(nabla);
    let n = nabla.dim();
    Tensor::from_fn(n, 2, |idx| {
        let (b, a) = (idx[0], idx[1]);
        (0..n).fold(BaseScalar::zero(), |acc, k| acc.add(r.get(&[k, a, k, b])))
    })
}

/// Scalar curvature `r = g^{ab} R_{ab}` of the Levi-Civita connection.
pub fn scalar_curvature(g: &Metric) -> Result<BaseScalar> {
    let ric = ricci(&levi_civita(g)?);
    let n = g.dim();
    let mut acc = BaseScalar::zero();
    for a in 0..n {
        for b in 0..n {
            acc = acc.add(&g.upper(a, b).mul(ric.get(&[a, b])));
        }
    }
    Ok(acc)
}

/// `♯_w α` with `(♯α)^j = w^{ij} α_i`.
pub fn sharp_w(w: &Multivector, alpha: &DiffForm) -> SymTensor {
    let n = w.space().base_dim();
    let comps: Vec<BaseScalar> = (0..n)
        .map(|j| {
            (0..n).fold(BaseScalar::zero(), |acc, i| {
                acc.add(&w.component(&[i, j]).mul(&alpha.component(&[i])))
            })
        })
        .collect();
    SymTensor::vector(&comps)
}

/// Hamiltonian vector field `X_f = ♯_w(df)`.
pub fn hamiltonian_field(w: &Multivector, f: &BaseScalar) -> SymTensor {
    let n = w.space().base_dim();
    let mut df = DiffForm::zero(Space::Base(n));
    for (i, c) in differential(f, n).into_iter().enumerate() {
        df.add_indexed(&[i], c);
    }
    sharp_w(w, &df)
}

/// Induced contravariant connection `Γ^{ij}_k = −w^{ih} Γ^j_{hk}`.
pub fn contravariant_from_linear(w: &Multivector, nabla: &LinearConnection) -> ContravariantConnection {
    let n = nabla.dim();
    ContravariantConnection::from_fn(w, |i, j, k| {
        (0..n)
            .fold(BaseScalar::zero(), |acc, h| acc.add(&w.component(&[i, h]).mul(nabla.get(j, h, k))))
            .neg()
    })
}

/// Curvature `C_D(dx^i, dx^j)∂_k = C[i][j][k][m] ∂_m` of a contravariant
/// connection, using the Koszul bracket `[dx^i, dx^j]_w = d w^{ij}`.
pub fn contravariant_curvature(d: &ContravariantConnection) -> Tensor {
    let n = d.dim();
    let w = d.poisson();
    let unit = |i: usize| -> Vec<BaseScalar> {
        (0..n)
            .map(|a| if a == i { BaseScalar::one() } else { BaseScalar::zero() })
            .collect()
    };
    let mut out = Tensor::zeros(n, 4);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let bracket = differential(&w.component(&[i, j]), n);
            for k in 0..n {
                let e_k = SymTensor::vector(&unit(k));
                let dj = d.derivative(&unit(j), &e_k);
                let di = d.derivative(&unit(i), &e_k);
                let v = d
                    .derivative(&unit(i), &dj)
                    .sub(&d.derivative(&unit(j), &di))
                    .sub(&d.derivative(&bracket, &e_k));
                for (m, c) in v.vector_components().into_iter().enumerate() {
                    out.set(&[i, j, k, m], c);
                }
            }
        }
    }
    out
}

/// `D_{df} Q`.
pub fn d_df(d: &ContravariantConnection, f: &BaseScalar, q: &SymTensor) -> SymTensor {
    d.derivative(&differential(f, d.dim()), q)
}

/// Symmetric derivative `ˢD Q`, in polynomial form `p_i (D_{dx^i} Q)~`.
pub fn sym_derivative(d: &ContravariantConnection, q: &SymTensor) -> SymTensor {
    let n = d.dim();
    let mut poly = FiberScalar::zero();
    for i in 0..n {
        let alpha: Vec<BaseScalar> = (0..n)
            .map(|a| if a == i { BaseScalar::one() } else { BaseScalar::zero() })
            .collect();
        let di = d.derivative(&alpha, q);
        poly = poly.add(&di.tilde().mul(&FiberScalar::momentum(i)));
    }
    SymTensor {
        n,
        degree: q.degree() + 1,
        poly,
    }
}

pub fn exterior_d(alpha: &DiffForm) -> DiffForm {
    alpha.exterior_d()
}

/// Covariant derivative of a form, `(∇_t α)_{i_1..i_k}`, for all `t`.
fn nabla_form(nabla: &LinearConnection, alpha: &DiffForm, k: usize) -> Vec<std::collections::BTreeMap<Vec<usize>, BaseScalar>> {
    let n = nabla.dim();
    let tuples: Vec<Vec<usize>> = index_tuples(n, k);
    (0..n)
        .map(|t| {
            let mut out = std::collections::BTreeMap::new();
            for idx in &tuples {
                let mut v = alpha.component(idx).partial(t);
                for r in 0..k {
                    for c in 0..n {
                        let g = nabla.get(c, t, idx[r]);
                        if g.is_zero() {
                            continue;
                        }
                        let mut j = idx.clone();
                        j[r] = c;
                        v = v.sub(&g.mul(&alpha.component(&j)));
                    }
                }
                if !v.is_zero() {
                    out.insert(idx.clone(), v);
                }
            }
            out
        })
        .collect()
}

/// Codifferential `(δα)_{i_1..i_{k−1}} = −g^{st} (∇_t α)_{s i_1..i_{k−1}}`.
pub fn codifferential_g(g: &Metric, nabla: &LinearConnection, alpha: &DiffForm) -> Result<DiffForm> {
    let n = g.dim();
    let k = alpha.max_grade();
    if k == 0 || !alpha.is_homogeneous(k) {
        return Err(Error::Degree(
            "codifferential needs a homogeneous form of degree at least one".into(),
        ));
    }
    let na = nabla_form(nabla, alpha, k);
    let mut out = DiffForm::zero(Space::Base(n));
    for rest in index_tuples(n, k - 1) {
        if rest.windows(2).any(|w| w[0] >= w[1]) {
            continue;
        }
        let mut acc = BaseScalar::zero();
        for s in 0..n {
            let mut idx = vec![s];
            idx.extend_from_slice(&rest);
            for (t, nt) in na.iter().enumerate() {
                let gst = g.upper(s, t);
                if gst.is_zero() {
                    continue;
                }
                if let Some(v) = nt.get(&idx) {
                    acc = acc.sub(&gst.mul(v));
                }
            }
        }
        out.add_indexed(&rest, acc);
    }
    Ok(out)
}

/// `∇_j w^{ai} = ∂_j w^{ai} + Γ^a_{jk} w^{ki} + Γ^i_{jk} w^{ak}`, indexed `[j][a][i]`.
pub fn nabla_w(nabla: &LinearConnection, w: &Multivector) -> Tensor {
    let n = nabla.dim();
    let wm = bivector_matrix(w);
    Tensor::from_fn(n, 3, |idx| {
        let (j, a, i) = (idx[0], idx[1], idx[2]);
        let mut acc = wm[a][i].partial(j);
        for k in 0..n {
            acc = acc
                .add(&nabla.get(a, j, k).mul(&wm[k][i]))
                .add(&nabla.get(i, j, k).mul(&wm[a][k]));
        }
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse_base;

    fn b(s: &str, n: usize) -> BaseScalar {
        parse_base(s, n).unwrap()
    }

    fn mat(rows: &[&[&str]], n: usize) -> Vec<Vec<BaseScalar>> {
        rows.iter().map(|r| r.iter().map(|s| b(s, n)).collect()).collect()
    }

    fn so3() -> Multivector {
        bivector_from_matrix(&mat(
            &[&["0", "x3", "-x2"], &["-x3", "0", "x1"], &["x2", "-x1", "0"]],
            3,
        ))
        .unwrap()
    }

    fn curved_metric() -> Metric {
        Metric::new(mat(&[&["1", "0"], &["0", "(1+x1)^2"]], 2)).unwrap()
    }

    #[test]
    fn flat_metric_has_zero_christoffels() {
        assert!(levi_civita(&Metric::flat(2)).unwrap().is_zero());
    }

    #[test]
    fn polar_like_metric_christoffels() {
        let lc = levi_civita(&curved_metric()).unwrap();
        assert_eq!(*lc.get(1, 0, 1), b("1/(1+x1)", 2));
        assert_eq!(*lc.get(1, 1, 0), b("1/(1+x1)", 2));
        assert_eq!(*lc.get(0, 1, 1), b("-(1+x1)", 2));
        assert!(lc.get(0, 0, 0).is_zero());
        assert!(lc.get(1, 1, 1).is_zero());
        assert!(nabla_metric(&lc, &curved_metric()).is_zero());
        assert!(curvature(&lc).is_zero());
        assert!(scalar_curvature(&curved_metric()).unwrap().is_zero());
    }

    #[test]
    fn sphere_like_metric_is_curved() {
        let g = Metric::new(mat(&[&["1", "0"], &["0", "1 + x1^2"]], 2)).unwrap();
        let r = scalar_curvature(&g).unwrap();
        assert_eq!(r, b("-2/(1+x1^2)^2", 2));
    }

    #[test]
    fn curvature_of_single_christoffel() {
        let c = LinearConnection::from_entries(2, false, &[(0, 1, 1, b("x1", 2))]).unwrap();
        let r = curvature(&c);
        assert_eq!(*r.get(&[0, 1, 0, 1]), BaseScalar::one());
        assert_eq!(*r.get(&[0, 1, 1, 0]), BaseScalar::from_int(-1));
        let nonzero = r.entries().filter(|(_, v)| !v.is_zero()).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn sharp_convention() {
        let w = bivector_from_matrix(&mat(&[&["0", "1"], &["-1", "0"]], 2)).unwrap();
        let mut dx1 = DiffForm::zero(Space::Base(2));
        dx1.add_indexed(&[0], BaseScalar::one());
        assert_eq!(
            sharp_w(&w, &dx1).vector_components(),
            vec![BaseScalar::zero(), BaseScalar::one()]
        );
        let mut dx1 = DiffForm::zero(Space::Base(3));
        dx1.add_indexed(&[0], BaseScalar::one());
        assert_eq!(
            sharp_w(&so3(), &dx1).vector_components(),
            vec![BaseScalar::zero(), b("x3", 3), b("-x2", 3)]
        );
    }

    #[test]
    fn induced_contravariant_coefficients() {
        let w = bivector_from_matrix(&mat(&[&["0", "1"], &["-1", "0"]], 2)).unwrap();
        let c = LinearConnection::from_entries(2, true, &[(1, 0, 0, BaseScalar::one())]).unwrap();
        let d = contravariant_from_linear(&w, &c);
        assert!(d.get(0, 1, 0).is_zero());
        assert_eq!(*d.get(1, 1, 0), BaseScalar::one());
        let nonzero = (0..2)
            .flat_map(|i| (0..2).flat_map(move |j| (0..2).map(move |k| (i, j, k))))
            .filter(|&(i, j, k)| !d.get(i, j, k).is_zero())
            .count();
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn symmetric_derivative_example() {
        let w = bivector_from_matrix(&mat(&[&["0", "1"], &["-1", "0"]], 2)).unwrap();
        let d = contravariant_from_linear(&w, &LinearConnection::zero(2));
        let x = SymTensor::vector(&[b("x2", 2), BaseScalar::zero()]);
        let sd = sym_derivative(&d, &x);
        assert_eq!(sd, SymTensor::zero(2, 2).with_component(&[0, 0], BaseScalar::one()));
    }

    #[test]
    fn symmetric_derivative_of_function_is_minus_hamiltonian() {
        let w = so3();
        let c = LinearConnection::from_entries(3, true, &[(0, 1, 2, b("x1", 3))]).unwrap();
        let d = contravariant_from_linear(&w, &c);
        let f = b("x1*x2 + x3^2", 3);
        let lhs = sym_derivative(&d, &SymTensor::scalar(3, f.clone()));
        let xf = hamiltonian_field(&w, &f);
        assert_eq!(lhs.tilde(), &xf.tilde().neg());
    }

    #[test]
    fn codifferential_examples() {
        let g = Metric::flat(2);
        let c = LinearConnection::zero(2);
        let mut a = DiffForm::zero(Space::Base(2));
        a.add_indexed(&[0], b("x1", 2));
        let d = codifferential_g(&g, &c, &a).unwrap();
        assert_eq!(d.component(&[]), BaseScalar::from_int(-1));
        let mut a = DiffForm::zero(Space::Base(2));
        a.add_indexed(&[1], b("x1", 2));
        assert!(codifferential_g(&g, &c, &a).unwrap().is_zero());
        let zero_form = DiffForm::scalar(Space::Base(2), BaseScalar::one());
        assert!(codifferential_g(&g, &c, &zero_form).is_err());
    }

    #[test]
    fn contravariant_curvature_matches_pulled_back_curvature() {
        let w = bivector_from_matrix(&mat(&[&["0", "1"], &["-1", "0"]], 2)).unwrap();
        let c = LinearConnection::from_entries(2, false, &[(0, 1, 1, b("x1", 2))]).unwrap();
        let d = contravariant_from_linear(&w, &c);
        let cd = contravariant_curvature(&d);
        let r = curvature(&c);
        let wm = bivector_matrix(&w);
        for idx in index_tuples(2, 4) {
            let (i, j, k, m) = (idx[0], idx[1], idx[2], idx[3]);
            let mut expected = BaseScalar::zero();
            for a in 0..2 {
                for bb in 0..2 {
                    expected = expected.add(&wm[i][a].mul(&wm[j][bb]).mul(r.get(&[m, k, a, bb])));
                }
            }
            assert_eq!(*cd.get(&idx), expected, "{idx:?}");
        }
        assert!(!cd.is_zero());
    }

    #[test]
    fn nabla_w_of_lie_poisson_is_plain_derivative() {
        let t = nabla_w(&LinearConnection::zero(3), &so3());
        assert_eq!(*t.get(&[2, 0, 1]), BaseScalar::one());
        assert_eq!(*t.get(&[2, 1, 0]), BaseScalar::from_int(-1));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(bivector_from_matrix(&mat(&[&["0", "1"], &["1", "0"]], 2)).is_err());
        assert!(Metric::new(mat(&[&["1", "1"], &["1", "1"]], 2)).is_err());
        assert!(LinearConnection::from_entries(
            2,
            true,
            &[(0, 0, 1, BaseScalar::one()), (0, 1, 0, BaseScalar::zero())]
        )
        .is_err());
    }
}

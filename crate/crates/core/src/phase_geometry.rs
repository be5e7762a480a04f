//! Objects on `T*M`: fiberwise polynomial functions, frames adapted to a
//! nonlinear connection, bivectors and forms in block storage, the canonical
//! structures, the metrics `G₁`/`G₂` and the `K` field.
//!
//! Generators of the phase exterior algebra are ordered `x1..xn, p1..pn`. In
//! the natural frame they stand for `∂/∂x^i, ∂/∂p_i` (or `dx^i, dp_i` for
//! forms); in the frame adapted to `N` for `δ/δx^i, ∂/∂p_i` (or `dx^i, δp_i`).
//! The `xp` block entry `(i,j)` is the coefficient of `e_{x_i} ∧ e_{p_j}`, so
//! the canonical bivector `W₀ = ∂/∂p_i ∧ ∂/∂x^i` has `xp = −I`.

use std::fmt;
use std::sync::Arc;

use crate::base_geometry::{
    check_dim, curvature, levi_civita, DiffForm, LinearConnection, Metric, Multivector, SymTensor,
};
use crate::error::{Error, Result};
use crate::exterior::{Multi, Space};
use crate::symexpr::{BaseScalar, FiberScalar};

/// Symmetric nonlinear connection with coefficients `N_{ij}`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearConnection {
    n: usize,
    coeffs: Vec<FiberScalar>,
}

impl NonlinearConnection {
    pub fn zero(n: usize) -> Self {
        NonlinearConnection {
            n,
            coeffs: vec![FiberScalar::zero(); n * n],
        }
    }

    pub fn new(matrix: Vec<Vec<FiberScalar>>) -> Result<Self> {
        let n = matrix.len();
        check_dim(n)?;
        let mut coeffs = Vec::with_capacity(n * n);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Shape(format!(
                    "nonlinear connection row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            coeffs.extend(row.iter().cloned());
        }
        for i in 0..n {
            for j in i + 1..n {
                if coeffs[i * n + j] != coeffs[j * n + i] {
                    return Err(Error::Symmetry {
                        what: "nonlinear connection (N_ij = N_ji is a standing assumption)".into(),
                        indices: vec![i + 1, j + 1],
                    });
                }
            }
        }
        Ok(NonlinearConnection { n, coeffs })
    }

    /// `N_{ij} = −p_k Γ^k_{ij}`.
    pub fn from_linear(nabla: &LinearConnection) -> Result<Self> {
        let n = nabla.dim();
        let matrix = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n).fold(FiberScalar::zero(), |acc, k| {
                            acc.sub(&FiberScalar::momentum(k).mul_base(nabla.get(k, i, j)))
                        })
                    })
                    .collect()
            })
            .collect();
        NonlinearConnection::new(matrix)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &FiberScalar {
        &self.coeffs[i * self.n + j]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(FiberScalar::is_zero)
    }

    /// `δF/δx^i = ∂F/∂x^i − N_{ij} ∂F/∂p_j`.
    pub fn delta(&self, i: usize, f: &FiberScalar) -> FiberScalar {
        let mut out = f.partial_x(i);
        for j in 0..self.n {
            let nij = self.get(i, j);
            if !nij.is_zero() {
                out = out.sub(&nij.mul(&f.partial_p(j)));
            }
        }
        out
    }

    /// Applies the adapted frame field `e_a` (`δ/δx^a` or `∂/∂p_{a−n}`).
    pub fn frame_apply(&self, a: usize, f: &FiberScalar) -> FiberScalar {
        if a < self.n {
            self.delta(a, f)
        } else {
            f.partial_p(a - self.n)
        }
    }
}

/// Frame in which phase components are expressed.
#[derive(Clone, Debug)]
pub enum Frame {
    Natural,
    Adapted(Arc<NonlinearConnection>),
}

impl PartialEq for Frame {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Frame::Natural, Frame::Natural) => true,
            (Frame::Adapted(a), Frame::Adapted(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }
}

impl Frame {
    pub fn name(&self) -> &'static str {
        match self {
            Frame::Natural => "natural",
            Frame::Adapted(_) => "adapted",
        }
    }
}

fn vector_images(n: usize, nl: &NonlinearConnection, sign: i32) -> Vec<Multi<FiberScalar>> {
    let space = Space::Phase(n);
    (0..2 * n)
        .map(|a| {
            let mut v = Multi::generator(space, a);
            if a < n {
                for j in 0..n {
                    let c = nl.get(a, j);
                    let c = if sign < 0 { c.neg() } else { c.clone() };
                    v.add_term(crate::exterior::Blade::single(n + j), c);
                }
            }
            v
        })
        .collect()
}

fn covector_images(n: usize, nl: &NonlinearConnection, sign: i32) -> Vec<Multi<FiberScalar>> {
    let space = Space::Phase(n);
    (0..2 * n)
        .map(|a| {
            let mut v = Multi::generator(space, a);
            if a >= n {
                let i = a - n;
                for j in 0..n {
                    let c = nl.get(i, j);
                    let c = if sign < 0 { c.neg() } else { c.clone() };
                    v.add_term(crate::exterior::Blade::single(j), c);
                }
            }
            v
        })
        .collect()
}

/// Multivector field on `T*M` with a frame tag.
#[derive(Clone, PartialEq)]
pub struct PhaseMultivector {
    n: usize,
    frame: Frame,
    body: Multi<FiberScalar>,
}

/// Bivector on `T*M`; blocks are read with [`PhaseMultivector::xx`] and friends.
pub type PhaseBivector = PhaseMultivector;

impl PhaseMultivector {
    pub fn zero(n: usize, frame: Frame) -> Self {
        PhaseMultivector {
            n,
            frame,
            body: Multi::zero(Space::Phase(n)),
        }
    }

    pub fn from_multi(frame: Frame, body: Multi<FiberScalar>) -> Result<Self> {
        match body.space() {
            Space::Phase(n) => Ok(PhaseMultivector { n, frame, body }),
            Space::Base(_) => Err(Error::FrameMismatch("expected a phase-space element".into())),
        }
    }

    /// Bivector from blocks: `xx[i][j]` (antisymmetric), `xp[i][j]`, `pp[i][j]`
    /// (antisymmetric). Only `i<j` entries of the antisymmetric blocks are read.
    pub fn from_blocks(
        frame: Frame,
        xx: &[Vec<FiberScalar>],
        xp: &[Vec<FiberScalar>],
        pp: &[Vec<FiberScalar>],
    ) -> Self {
        let n = xx.len();
        let mut body = Multi::zero(Space::Phase(n));
        for i in 0..n {
            for j in 0..n {
                if i < j {
                    body.add_indexed(&[i, j], xx[i][j].clone());
                    body.add_indexed(&[n + i, n + j], pp[i][j].clone());
                }
                body.add_indexed(&[i, n + j], xp[i][j].clone());
            }
        }
        PhaseMultivector { n, frame, body }
    }

    /// Pulls a base multivector into the x-directions.
    pub fn from_base(w: &Multivector, frame: Frame) -> Self {
        let n = w.space().base_dim();
        let mut body = Multi::zero(Space::Phase(n));
        for (b, c) in w.terms() {
            body.add_term(*b, FiberScalar::from_base(c.clone()));
        }
        PhaseMultivector { n, frame, body }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn body(&self) -> &Multi<FiberScalar> {
        &self.body
    }

    pub fn is_zero(&self) -> bool {
        self.body.is_zero()
    }

    pub fn xx(&self, i: usize, j: usize) -> FiberScalar {
        self.body.component(&[i, j])
    }

    pub fn xp(&self, i: usize, j: usize) -> FiberScalar {
        self.body.component(&[i, self.n + j])
    }

    pub fn pp(&self, i: usize, j: usize) -> FiberScalar {
        self.body.component(&[self.n + i, self.n + j])
    }

    pub fn component(&self, idx: &[usize]) -> FiberScalar {
        self.body.component(idx)
    }

    fn same_frame(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::FrameMismatch(format!(
                "dimensions {} and {} differ",
                self.n, other.n
            )));
        }
        if self.frame != other.frame {
            return Err(Error::FrameMismatch(format!(
                "{} frame against {} frame",
                self.frame.name(),
                other.frame.name()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_frame(other)?;
        Ok(PhaseMultivector {
            n: self.n,
            frame: self.frame.clone(),
            body: self.body.add(&other.body),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_frame(other)?;
        Ok(PhaseMultivector {
            n: self.n,
            frame: self.frame.clone(),
            body: self.body.sub(&other.body),
        })
    }

    pub fn scale(&self, c: &num_rational::BigRational) -> Self {
        PhaseMultivector {
            n: self.n,
            frame: self.frame.clone(),
            body: self.body.scale(c),
        }
    }

    pub fn to_natural(&self) -> Self {
        match &self.frame {
            Frame::Natural => self.clone(),
            Frame::Adapted(nl) => PhaseMultivector {
                n: self.n,
                frame: Frame::Natural,
                body: self
                    .body
                    .substitute(&vector_images(self.n, nl, -1), Space::Phase(self.n)),
            },
        }
    }

    pub fn to_adapted(&self, nl: &Arc<NonlinearConnection>) -> Self {
        let natural = self.to_natural();
        PhaseMultivector {
            n: self.n,
            frame: Frame::Adapted(nl.clone()),
            body: natural
                .body
                .substitute(&vector_images(self.n, nl, 1), Space::Phase(self.n)),
        }
    }

    /// Expresses the element in `frame`.
    pub fn in_frame(&self, frame: &Frame) -> Self {
        match frame {
            Frame::Natural => self.to_natural(),
            Frame::Adapted(nl) => self.to_adapted(nl),
        }
    }

    /// `W(dF, dG)`; requires the natural frame.
    pub fn pair(&self, f: &FiberScalar, g: &FiberScalar) -> FiberScalar {
        self.to_natural().body.pair_differentials(f, g)
    }
}

impl fmt::Display for PhaseMultivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.frame.name(), self.body)
    }
}

impl fmt::Debug for PhaseMultivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhaseMultivector({self})")
    }
}

/// Differential form on `T*M` with a frame tag.
#[derive(Clone, PartialEq)]
pub struct PhaseForm {
    n: usize,
    frame: Frame,
    body: Multi<FiberScalar>,
}

impl PhaseForm {
    pub fn zero(n: usize, frame: Frame) -> Self {
        PhaseForm {
            n,
            frame,
            body: Multi::zero(Space::Phase(n)),
        }
    }

    pub fn from_multi(frame: Frame, body: Multi<FiberScalar>) -> Self {
        PhaseForm {
            n: body.space().base_dim(),
            frame,
            body,
        }
    }

    /// Pullback `π*α` of a base form; the same components in either frame.
    pub fn pullback(alpha: &DiffForm, frame: Frame) -> Self {
        let n = alpha.space().base_dim();
        let mut body = Multi::zero(Space::Phase(n));
        for (b, c) in alpha.terms() {
            body.add_term(*b, FiberScalar::from_base(c.clone()));
        }
        PhaseForm { n, frame, body }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn body(&self) -> &Multi<FiberScalar> {
        &self.body
    }

    pub fn degree(&self) -> usize {
        self.body.max_grade()
    }

    pub fn is_zero(&self) -> bool {
        self.body.is_zero()
    }

    pub fn component(&self, idx: &[usize]) -> FiberScalar {
        self.body.component(idx)
    }

    fn same_frame(&self, other: &Self) -> Result<()> {
        if self.frame != other.frame || self.n != other.n {
            return Err(Error::FrameMismatch(format!(
                "{} frame against {} frame",
                self.frame.name(),
                other.frame.name()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_frame(other)?;
        Ok(PhaseForm::from_multi(self.frame.clone(), self.body.add(&other.body)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_frame(other)?;
        Ok(PhaseForm::from_multi(self.frame.clone(), self.body.sub(&other.body)))
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.same_frame(other)?;
        Ok(PhaseForm::from_multi(self.frame.clone(), self.body.wedge(&other.body)))
    }

    pub fn scale(&self, c: &num_rational::BigRational) -> Self {
        PhaseForm::from_multi(self.frame.clone(), self.body.scale(c))
    }

    pub fn to_natural(&self) -> Self {
        match &self.frame {
            Frame::Natural => self.clone(),
            Frame::Adapted(nl) => PhaseForm {
                n: self.n,
                frame: Frame::Natural,
                body: self
                    .body
                    .substitute(&covector_images(self.n, nl, 1), Space::Phase(self.n)),
            },
        }
    }

    pub fn to_adapted(&self, nl: &Arc<NonlinearConnection>) -> Self {
        let natural = self.to_natural();
        PhaseForm {
            n: self.n,
            frame: Frame::Adapted(nl.clone()),
            body: natural
                .body
                .substitute(&covector_images(self.n, nl, -1), Space::Phase(self.n)),
        }
    }

    /// Exterior derivative, computed in the natural frame and returned in the
    /// frame of `self`.
    pub fn exterior_d(&self) -> Self {
        let d = PhaseForm::from_multi(Frame::Natural, self.to_natural().body.exterior_d());
        match &self.frame {
            Frame::Natural => d,
            Frame::Adapted(nl) => d.to_adapted(nl),
        }
    }
}

impl fmt::Display for PhaseForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.frame.name(), self.body)
    }
}

impl fmt::Debug for PhaseForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhaseForm({self})")
    }
}

/// `Q ↦ Q̃`, the fiber polynomial of a symmetric tensor.
pub fn tilde(q: &SymTensor) -> FiberScalar {
    q.tilde().clone()
}

/// Conversions between the natural frame and the frame adapted to `N`.
#[derive(Clone, Debug)]
pub struct AdaptedFrame {
    nl: Arc<NonlinearConnection>,
}

impl AdaptedFrame {
    pub fn connection(&self) -> &Arc<NonlinearConnection> {
        &self.nl
    }

    pub fn frame(&self) -> Frame {
        Frame::Adapted(self.nl.clone())
    }

    pub fn bivector_to_natural(&self, w: &PhaseMultivector) -> PhaseMultivector {
        w.to_natural()
    }

    pub fn bivector_to_adapted(&self, w: &PhaseMultivector) -> PhaseMultivector {
        w.to_adapted(&self.nl)
    }

    pub fn form_to_natural(&self, a: &PhaseForm) -> PhaseForm {
        a.to_natural()
    }

    pub fn form_to_adapted(&self, a: &PhaseForm) -> PhaseForm {
        a.to_adapted(&self.nl)
    }
}

pub fn adapted_frame(nl: &NonlinearConnection) -> AdaptedFrame {
    AdaptedFrame {
        nl: Arc::new(nl.clone()),
    }
}

/// Curvature `R_{kij}` and `Φ^j_{ik}` of a nonlinear connection.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseCurvature {
    n: usize,
    r: Vec<FiberScalar>,
    phi: Vec<FiberScalar>,
}

impl PhaseCurvature {
    /// `R_{kij}`.
    pub fn r(&self, k: usize, i: usize, j: usize) -> &FiberScalar {
        &self.r[(k * self.n + i) * self.n + j]
    }

    /// `Φ^j_{ik}`.
    pub fn phi(&self, j: usize, i: usize, k: usize) -> &FiberScalar {
        &self.phi[(j * self.n + i) * self.n + k]
    }

    pub fn r_is_zero(&self) -> bool {
        self.r.iter().all(FiberScalar::is_zero)
    }
}

/// `R_{kij} = δN_{kj}/δx^i − δN_{ki}/δx^j` and `Φ^j_{ik} = −∂N_{ik}/∂p_j`.
pub fn phase_curvature(nl: &NonlinearConnection) -> PhaseCurvature {
    let n = nl.dim();
    let mut r = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                r.push(nl.delta(i, nl.get(k, j)).sub(&nl.delta(j, nl.get(k, i))));
            }
        }
    }
    let mut phi = Vec::with_capacity(n * n * n);
    for j in 0..n {
        for i in 0..n {
            for k in 0..n {
                phi.push(nl.get(i, k).partial_p(j).neg());
            }
        }
    }
    PhaseCurvature { n, r, phi }
}

/// Liouville form `λ = p_i dx^i` and `W₀ = ∂/∂p_i ∧ ∂/∂x^i`, both natural.
pub fn canonical_structures(n: usize) -> (PhaseForm, PhaseBivector) {
    let space = Space::Phase(n);
    let mut lambda = Multi::zero(space);
    let mut w0 = Multi::zero(space);
    for i in 0..n {
        lambda.add_indexed(&[i], FiberScalar::momentum(i));
        w0.add_indexed(&[n + i, i], FiberScalar::one());
    }
    (
        PhaseForm::from_multi(Frame::Natural, lambda),
        PhaseMultivector {
            n,
            frame: Frame::Natural,
            body: w0,
        },
    )
}

pub fn canonical_w0(n: usize) -> PhaseBivector {
    canonical_structures(n).1
}

/// `K = p_a w^{ai} ∂/∂x^i + ½ p_a p_b (w^{ak}Γ^b_{ki} + w^{bk}Γ^a_{ki}) ∂/∂p_i`.
pub fn k_field(w: &Multivector, nabla: &LinearConnection) -> PhaseMultivector {
    let n = nabla.dim();
    let space = Space::Phase(n);
    let mut body = Multi::zero(space);
    let half = BaseScalar::from_ratio(1, 2);
    for i in 0..n {
        let mut xi = FiberScalar::zero();
        for a in 0..n {
            xi = xi.add(&FiberScalar::momentum(a).mul_base(&w.component(&[a, i])));
        }
        body.add_indexed(&[i], xi);
        let mut pi = FiberScalar::zero();
        for a in 0..n {
            for b in 0..n {
                let mut c = BaseScalar::zero();
                for k in 0..n {
                    c = c
                        .add(&w.component(&[a, k]).mul(nabla.get(b, k, i)))
                        .add(&w.component(&[b, k]).mul(nabla.get(a, k, i)));
                }
                if !c.is_zero() {
                    pi = pi.add(
                        &FiberScalar::momentum(a)
                            .mul(&FiberScalar::momentum(b))
                            .mul_base(&c.mul(&half)),
                    );
                }
            }
        }
        body.add_indexed(&[n + i], pi);
    }
    PhaseMultivector {
        n,
        frame: Frame::Natural,
        body,
    }
}

/// Which lifted metric a [`PhaseMetric`] is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MetricKind {
    /// `G₁ = 2 δp_i ⊙ dx^i`.
    G1,
    /// `G₂ = g_{ij} dx^i⊙dx^j + g^{ij} δp_i⊙δp_j`.
    G2,
}

/// Metric on `T*M` over the adapted frame, with the covariant derivatives of
/// the frame fields stored as a table `∇_{e_A} e_B = Γ^C_{AB} e_C`.
#[derive(Clone, Debug)]
pub struct PhaseMetric {
    kind: MetricKind,
    n: usize,
    base: Option<Metric>,
    nabla: LinearConnection,
    nl: Arc<NonlinearConnection>,
    lower: Vec<FiberScalar>,
    upper: Vec<FiberScalar>,
    table: Vec<FiberScalar>,
}

impl PhaseMetric {
    /// `G₁` over the Levi-Civita connection of `g`, with table
    /// `∇^i ∂^j = 0`, `∇_i ∂^j = −Γ^j_{ik} ∂^k`, `∇^i δ_j = 0`,
    /// `∇_i δ_j = Γ^k_{ij} δ_k − p_h R^h_{ijk} ∂^k`.
    pub fn g1(g: &Metric) -> Result<Self> {
        let mut out = PhaseMetric::g1_from_connection(&levi_civita(g)?)?;
        out.base = Some(g.clone());
        Ok(out)
    }

    /// `G₁` only needs the nonlinear connection, so any symmetric linear
    /// connection will do.
    pub fn g1_from_connection(nabla: &LinearConnection) -> Result<Self> {
        let n = nabla.dim();
        let nabla = nabla.clone();
        let nl = Arc::new(NonlinearConnection::from_linear(&nabla)?);
        let r = curvature(&nabla);
        let m = 2 * n;
        let mut lower = vec![FiberScalar::zero(); m * m];
        for i in 0..n {
            lower[i * m + n + i] = FiberScalar::one();
            lower[(n + i) * m + i] = FiberScalar::one();
        }
        let upper = lower.clone();
        let mut table = vec![FiberScalar::zero(); m * m * m];
        let idx = |c: usize, a: usize, b: usize| (c * m + a) * m + b;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    table[idx(n + k, i, n + j)] = FiberScalar::from_base(nabla.get(j, i, k).neg());
                    table[idx(k, i, j)] = FiberScalar::from_base(nabla.get(k, i, j).clone());
                    let mut c = FiberScalar::zero();
                    for h in 0..n {
                        c = c.sub(&FiberScalar::momentum(h).mul_base(r.get(&[h, i, j, k])));
                    }
                    table[idx(n + k, i, j)] = c;
                }
            }
        }
        Ok(PhaseMetric {
            kind: MetricKind::G1,
            n,
            base: None,
            nabla,
            nl,
            lower,
            upper,
            table,
        })
    }

    /// `G₂` over the Levi-Civita connection of `g`, with table
    /// `∇^i ∂^j = 0`, `∇_i ∂^j = −½R^{jk}_i δ_k − Γ^j_{ik} ∂^k`,
    /// `∇^i δ_j = ½R^{i k}_j δ_k`, `∇_i δ_j = Γ^k_{ij} δ_k − ½R_{kij} ∂^k`,
    /// where `R_{kij} = −p_h R^h_{kij}` and indices are raised with `g`.
    pub fn g2(g: &Metric) -> Result<Self> {
        let n = g.dim();
        let nabla = levi_civita(g)?;
        let nl = Arc::new(NonlinearConnection::from_linear(&nabla)?);
        let pc = phase_curvature(&nl);
        let m = 2 * n;
        let mut lower = vec![FiberScalar::zero(); m * m];
        let mut upper = vec![FiberScalar::zero(); m * m];
        for i in 0..n {
            for j in 0..n {
                lower[i * m + j] = FiberScalar::from_base(g.lower(i, j).clone());
                lower[(n + i) * m + n + j] = FiberScalar::from_base(g.upper(i, j).clone());
                upper[i * m + j] = FiberScalar::from_base(g.upper(i, j).clone());
                upper[(n + i) * m + n + j] = FiberScalar::from_base(g.lower(i, j).clone());
            }
        }
        let raise = |x: usize, y: usize, z: usize, first_two: bool| -> FiberScalar {
            // first_two: R^{xy}_z = g^{xa} g^{yb} R_{abz}; else R^{x y}_z = g^{xa} g^{yb} R_{a z b}
            let mut acc = FiberScalar::zero();
            for a in 0..n {
                for b in 0..n {
                    let c = g.upper(x, a).mul(g.upper(y, b));
                    if c.is_zero() {
                        continue;
                    }
                    let r = if first_two { pc.r(a, b, z) } else { pc.r(a, z, b) };
                    acc = acc.add(&r.mul_base(&c));
                }
            }
            acc
        };
        let half = num_rational::BigRational::new(1.into(), 2.into());
        let mut table = vec![FiberScalar::zero(); m * m * m];
        let idx = |c: usize, a: usize, b: usize| (c * m + a) * m + b;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    table[idx(k, i, n + j)] = raise(j, k, i, true).scale(&half).neg();
                    table[idx(n + k, i, n + j)] = FiberScalar::from_base(nabla.get(j, i, k).neg());
                    table[idx(k, n + i, j)] = raise(i, k, j, false).scale(&half);
                    table[idx(k, i, j)] = FiberScalar::from_base(nabla.get(k, i, j).clone());
                    table[idx(n + k, i, j)] = pc.r(k, i, j).scale(&half).neg();
                }
            }
        }
        Ok(PhaseMetric {
            kind: MetricKind::G2,
            n,
            base: Some(g.clone()),
            nabla,
            nl,
            lower,
            upper,
            table,
        })
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// The base metric; absent for a `G₁` built from a bare connection.
    pub fn base_metric(&self) -> Option<&Metric> {
        self.base.as_ref()
    }

    pub fn linear_connection(&self) -> &LinearConnection {
        &self.nabla
    }

    pub fn nonlinear_connection(&self) -> &Arc<NonlinearConnection> {
        &self.nl
    }

    pub fn frame(&self) -> Frame {
        Frame::Adapted(self.nl.clone())
    }

    /// `G(e_A, e_B)`.
    pub fn lower(&self, a: usize, b: usize) -> &FiberScalar {
        &self.lower[a * 2 * self.n + b]
    }

    /// Inverse matrix entry `G^{AB}`.
    pub fn upper(&self, a: usize, b: usize) -> &FiberScalar {
        &self.upper[a * 2 * self.n + b]
    }

    /// `Γ^C_{AB}` with `∇_{e_A} e_B = Γ^C_{AB} e_C`.
    pub fn table(&self, c: usize, a: usize, b: usize) -> &FiberScalar {
        let m = 2 * self.n;
        &self.table[(c * m + a) * m + b]
    }

    /// Raises both indices of a 2-form: `W^{AB} = G^{AC} G^{BD} Θ_{CD}`.
    pub fn sharp_two_form(&self, theta: &PhaseForm) -> Result<PhaseBivector> {
        if theta.frame() != &self.frame() {
            return Err(Error::FrameMismatch(
                "form is not in the frame adapted to the metric's connection".into(),
            ));
        }
        let m = 2 * self.n;
        let mut body = Multi::zero(Space::Phase(self.n));
        for a in 0..m {
            for b in a + 1..m {
                let mut acc = FiberScalar::zero();
                for c in 0..m {
                    let gac = self.upper(a, c);
                    if gac.is_zero() {
                        continue;
                    }
                    for d in 0..m {
                        let gbd = self.upper(b, d);
                        if gbd.is_zero() {
                            continue;
                        }
                        let t = theta.component(&[c, d]);
                        if !t.is_zero() {
                            acc = acc.add(&gac.mul(gbd).mul(&t));
                        }
                    }
                }
                body.add_indexed(&[a, b], acc);
            }
        }
        PhaseMultivector::from_multi(self.frame(), body)
    }
}

/// Strictly increasing index tuples of length `k` over `0..m`.
pub(crate) fn sorted_tuples(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for a in start..m {
            cur.push(a);
            rec(a + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, k, &mut Vec::new(), &mut out);
    out
}

/// Codifferential `(δα)_{B..} = −G^{AS} (∇_{e_A} α)_{S B..}` over the adapted
/// frame, using the metric's derivative table.
pub fn phase_codifferential(metric: &PhaseMetric, alpha: &PhaseForm) -> Result<PhaseForm> {
    if alpha.frame() != &metric.frame() {
        return Err(Error::FrameMismatch(
            "form is not in the frame adapted to the metric's connection".into(),
        ));
    }
    let k = alpha.degree();
    if k == 0 || alpha.is_zero() || !alpha.body().is_homogeneous(k) {
        return Err(Error::Degree(
            "codifferential needs a nonzero homogeneous form of degree at least one".into(),
        ));
    }
    let n = metric.dim();
    let m = 2 * n;
    let nl = metric.nonlinear_connection();
    let mut out = Multi::zero(Space::Phase(n));
    for rest in sorted_tuples(m, k - 1) {
        let mut acc = FiberScalar::zero();
        for a in 0..m {
            for s in 0..m {
                let gas = metric.upper(a, s);
                if gas.is_zero() {
                    continue;
                }
                let mut idx = vec![s];
                idx.extend_from_slice(&rest);
                // (∇_A α)_{idx} = e_A(α_idx) − Σ_r Γ^C_{A idx_r} α_{..C..}
                let mut v = nl.frame_apply(a, &alpha.component(&idx));
                for r in 0..idx.len() {
                    for c in 0..m {
                        let gamma = metric.table(c, a, idx[r]);
                        if gamma.is_zero() {
                            continue;
                        }
                        let mut j = idx.clone();
                        j[r] = c;
                        let comp = alpha.component(&j);
                        if !comp.is_zero() {
                            v = v.sub(&gamma.mul(&comp));
                        }
                    }
                }
                if !v.is_zero() {
                    acc = acc.sub(&gas.mul(&v));
                }
            }
        }
        out.add_indexed(&rest, acc);
    }
    Ok(PhaseForm::from_multi(metric.frame(), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base_geometry::bivector_from_matrix;
    use crate::symexpr::{parse_base, parse_fiber};

    fn b(s: &str, n: usize) -> BaseScalar {
        parse_base(s, n).unwrap()
    }

    fn curved_connection() -> LinearConnection {
        LinearConnection::from_entries(2, true, &[(0, 1, 1, b("x1", 2))]).unwrap()
    }

    #[test]
    fn canonical_bracket_of_coordinates() {
        let w0 = canonical_w0(3);
        for j in 0..3 {
            for k in 0..3 {
                let v = w0.pair(&FiberScalar::momentum(j), &FiberScalar::coord(k));
                let expected = if j == k { FiberScalar::one() } else { FiberScalar::zero() };
                assert_eq!(v, expected);
            }
        }
        assert_eq!(w0.xp(1, 1), FiberScalar::from_int(-1));
        assert!(w0.body().schouten(w0.body()).is_zero());
    }

    #[test]
    fn liouville_differential_is_symplectic() {
        let (lambda, _) = canonical_structures(2);
        let d = lambda.exterior_d();
        assert_eq!(d.component(&[2, 0]), FiberScalar::one());
        assert_eq!(d.component(&[3, 1]), FiberScalar::one());
        assert_eq!(d.body().terms().count(), 2);
    }

    #[test]
    fn curvature_of_linear_connection() {
        let nl = NonlinearConnection::from_linear(&curved_connection()).unwrap();
        let pc = phase_curvature(&nl);
        assert_eq!(*pc.r(1, 0, 1), FiberScalar::momentum(0).neg());
        assert_eq!(*pc.phi(0, 1, 1), FiberScalar::from_base(b("x1", 2)));
    }

    #[test]
    fn non_symmetric_n_rejected() {
        let m = vec![
            vec![FiberScalar::zero(), FiberScalar::momentum(0)],
            vec![FiberScalar::zero(), FiberScalar::zero()],
        ];
        assert!(matches!(NonlinearConnection::new(m), Err(Error::Symmetry { .. })));
    }

    #[test]
    fn adapted_roundtrip() {
        let nl = Arc::new(NonlinearConnection::from_linear(&curved_connection()).unwrap());
        let w = bivector_from_matrix(&[
            vec![BaseScalar::zero(), b("x2", 2)],
            vec![b("-x2", 2), BaseScalar::zero()],
        ])
        .unwrap();
        let wh = PhaseMultivector::from_base(&w, Frame::Adapted(nl.clone()));
        let back = wh.to_natural().to_adapted(&nl);
        assert_eq!(back, wh);
        let (lambda, _) = canonical_structures(2);
        let again = lambda.to_adapted(&nl).to_natural();
        assert_eq!(again, lambda);
    }

    #[test]
    fn frame_commutators() {
        let nl = NonlinearConnection::from_linear(&curved_connection()).unwrap();
        let pc = phase_curvature(&nl);
        let f = parse_fiber("x1^2*p2*p1 + x2*p2^2 - p1", 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let lhs = nl.delta(i, &nl.delta(j, &f)).sub(&nl.delta(j, &nl.delta(i, &f)));
                let mut rhs = FiberScalar::zero();
                for k in 0..2 {
                    rhs = rhs.sub(&pc.r(k, i, j).mul(&f.partial_p(k)));
                }
                assert_eq!(lhs, rhs);
                let lhs = nl.delta(i, &f.partial_p(j)).sub(&nl.delta(i, &f).partial_p(j));
                let mut rhs = FiberScalar::zero();
                for k in 0..2 {
                    rhs = rhs.sub(&pc.phi(j, i, k).mul(&f.partial_p(k)));
                }
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn k_field_symplectic_plane() {
        let w = bivector_from_matrix(&[
            vec![BaseScalar::zero(), BaseScalar::one()],
            vec![BaseScalar::from_int(-1), BaseScalar::zero()],
        ])
        .unwrap();
        let k = k_field(&w, &LinearConnection::zero(2));
        assert_eq!(k.component(&[0]), FiberScalar::momentum(1).neg());
        assert_eq!(k.component(&[1]), FiberScalar::momentum(0));
        assert!(k.component(&[2]).is_zero());
    }

    #[test]
    fn g1_sharp_of_theta_with_zero_form_is_w0() {
        let g = Metric::flat(2);
        let metric = PhaseMetric::g1(&g).unwrap();
        let mut theta = Multi::zero(Space::Phase(2));
        for i in 0..2 {
            theta.add_indexed(&[i, 2 + i], FiberScalar::one());
        }
        let theta = PhaseForm::from_multi(metric.frame(), theta);
        let w = metric.sharp_two_form(&theta).unwrap().to_natural();
        assert_eq!(w, canonical_w0(2));
    }

    #[test]
    fn codifferential_rejects_functions() {
        let metric = PhaseMetric::g1(&Metric::flat(2)).unwrap();
        let f = PhaseForm::from_multi(metric.frame(), Multi::scalar(Space::Phase(2), FiberScalar::one()));
        assert!(phase_codifferential(&metric, &f).is_err());
    }
}

//! Exact deciders for the named conditions, plus block decomposition of
//! polynomially graded bivectors.

use std::fmt::{self, Display, Write as _};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::base_geometry::{
    bivector_matrix, contravariant_curvature, contravariant_from_linear, curvature, exterior_d,
    levi_civita, nabla_w, scalar_curvature, ContravariantConnection, DiffForm, LinearConnection,
    Metric, Multivector, SymTensor, Tensor,
};
use crate::calculus::jacobiator;
use crate::error::{Error, Result};
use crate::exterior::{Multi, Scalar, Space};
use crate::lifts::{horizontal_lift, theta_lift};
use crate::phase_geometry::{
    canonical_w0, phase_codifferential, phase_curvature, Frame, MetricKind, NonlinearConnection,
    PhaseBivector, PhaseForm, PhaseMetric, PhaseMultivector,
};
use crate::symexpr::{BaseScalar, FiberScalar, Monomial};

/// Witnesses kept per check, smallest index tuples first.
pub const MAX_WITNESSES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    pub fn from_holds(holds: bool) -> Self {
        if holds {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn holds(self) -> bool {
        self == Verdict::Pass
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "not-applicable",
        }
    }
}

impl Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A nonvanishing component: index labels and the canonical expression.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub indices: Vec<String>,
    pub expression: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub condition: String,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
    pub elapsed_ms: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Report>,
}

impl Report {
    pub fn new(condition: &str, verdict: Verdict) -> Self {
        Report {
            condition: condition.to_string(),
            verdict,
            witnesses: Vec::new(),
            notes: Vec::new(),
            elapsed_ms: 0,
            checks: Vec::new(),
        }
    }

    /// Sub-report with the given condition name, if present.
    pub fn check(&self, condition: &str) -> Option<&Report> {
        self.checks.iter().find(|c| c.condition == condition)
    }

    /// Sub-reports whose name starts with `meta:`.
    pub fn meta_checks(&self) -> impl Iterator<Item = &Report> {
        self.checks.iter().filter(|c| c.condition.starts_with("meta:"))
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    fn timed(mut self, start: Instant) -> Self {
        self.elapsed_ms = start.elapsed().as_millis() as u64;
        self
    }

    /// Copy with all timings zeroed, for comparisons across runs.
    pub fn without_timing(&self) -> Report {
        let mut r = self.clone();
        r.elapsed_ms = 0;
        r.checks = r.checks.iter().map(Report::without_timing).collect();
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_text(&mut out, 0);
        out
    }

    fn write_text(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        let _ = writeln!(out, "{pad}{}: {}", self.condition, self.verdict);
        for w in &self.witnesses {
            let _ = writeln!(out, "{pad}  witness ({}) = {}", w.indices.join(","), w.expression);
        }
        for n in &self.notes {
            let _ = writeln!(out, "{pad}  note: {n}");
        }
        for c in &self.checks {
            c.write_text(out, depth + 1);
        }
    }
}

/// Accumulates nonzero components in the order they are offered.
struct Check {
    report: Report,
    failures: usize,
}

impl Check {
    fn new(condition: &str) -> Self {
        Check {
            report: Report::new(condition, Verdict::Pass),
            failures: 0,
        }
    }

    fn offer<T: Display>(&mut self, indices: Vec<String>, value: &T, is_zero: bool) {
        if is_zero {
            return;
        }
        self.failures += 1;
        if self.report.witnesses.len() < MAX_WITNESSES {
            self.report.witnesses.push(Witness {
                indices,
                expression: value.to_string(),
            });
        }
    }

    fn base(&mut self, indices: &[usize], v: &BaseScalar) {
        self.offer(one_based(indices), v, v.is_zero());
    }

    fn fiber(&mut self, indices: &[usize], v: &FiberScalar) {
        self.offer(one_based(indices), v, v.is_zero());
    }

    fn note(&mut self, note: impl Into<String>) {
        self.report.notes.push(note.into());
    }

    fn finish(mut self) -> Report {
        self.report.verdict = Verdict::from_holds(self.failures == 0);
        if self.failures > self.report.witnesses.len() {
            let n = self.failures;
            self.report.notes.push(format!("{n} nonvanishing components in total"));
        }
        self.report
    }
}

fn one_based(idx: &[usize]) -> Vec<String> {
    idx.iter().map(|i| (i + 1).to_string()).collect()
}

/// Offers every component of a multivector, in lexicographic index order.
fn multi_check<S: Scalar + Display>(condition: &str, m: &Multi<S>) -> Report {
    let mut check = Check::new(condition);
    let space = m.space();
    let mut terms: Vec<(Vec<usize>, &S)> = m.terms().map(|(b, c)| (b.indices(), c)).collect();
    terms.sort_by(|a, b| a.0.cmp(&b.0));
    for (idx, c) in terms {
        let labels = idx.iter().map(|&a| space.label(a)).collect();
        check.offer(labels, c, c.is_zero());
    }
    check.finish()
}

fn meta(name: &str, claimed: Verdict, direct: Verdict) -> Report {
    let agree = claimed == direct;
    Report::new(name, Verdict::from_holds(agree)).with_note(format!(
        "condition verdict {claimed}, direct verdict {direct}"
    ))
}

fn all_pass(reports: &[&Report]) -> Verdict {
    Verdict::from_holds(reports.iter().all(|r| r.verdict.holds()))
}

/// Fiber-polynomial shape of a phase bivector in the natural frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    NotPolynomial,
    PolynomiallyGraded,
    Graded,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::NotPolynomial => "not-polynomial",
            Shape::PolynomiallyGraded => "polynomially-graded",
            Shape::Graded => "graded",
        }
    }
}

fn block_kind(n: usize, idx: &[usize]) -> u32 {
    idx.iter().filter(|&&a| a >= n).count() as u32
}

/// Offending components for a target shape, lexicographic.
fn shape_offenders(w: &PhaseBivector, graded: bool) -> Vec<(Vec<String>, FiberScalar)> {
    let natural = w.to_natural();
    let n = natural.dim();
    let space = Space::Phase(n);
    let mut terms: Vec<(Vec<usize>, &FiberScalar)> =
        natural.body().terms().map(|(b, c)| (b.indices(), c)).collect();
    terms.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = Vec::new();
    for (idx, c) in terms {
        let ok = if idx.len() != 2 {
            false
        } else {
            let d = block_kind(n, &idx);
            if graded {
                c.is_homogeneous(d)
            } else {
                c.p_degree() <= d
            }
        };
        if !ok {
            out.push((idx.iter().map(|&a| space.label(a)).collect(), c.clone()));
        }
    }
    out
}

pub fn shape_of(w: &PhaseBivector) -> Shape {
    if shape_offenders(w, true).is_empty() {
        Shape::Graded
    } else if shape_offenders(w, false).is_empty() {
        Shape::PolynomiallyGraded
    } else {
        Shape::NotPolynomial
    }
}

/// Passes when `W` is graded; the note names the exact shape.
pub fn classify_shape(w: &PhaseBivector) -> Report {
    let start = Instant::now();
    let shape = shape_of(w);
    let mut check = Check::new("shape");
    if shape != Shape::Graded {
        for (labels, c) in shape_offenders(w, shape == Shape::PolynomiallyGraded) {
            check.offer(labels, &c, false);
        }
    }
    check.note(format!("shape: {}", shape.name()));
    check.note("xp entry (i,j) is the coefficient of ∂/∂x^i ∧ ∂/∂p_j");
    check.finish().timed(start)
}

/// `[P,P] = 0` for a bivector on `M`; witnesses are components of the
/// cyclic sum `Σ_(ijk) w^{hk} ∂_h w^{ij}`.
pub fn is_poisson_base(w: &Multivector) -> Report {
    let start = Instant::now();
    multi_check("poisson", &jacobiator(w)).timed(start)
}

/// `[W,W] = 0` for a phase bivector, computed in the natural frame.
pub fn is_poisson(w: &PhaseBivector) -> Report {
    let start = Instant::now();
    multi_check("poisson", &jacobiator(w.to_natural().body())).timed(start)
}

/// Transversal Poisson condition relative to the vertical foliation.
pub fn is_semi_poisson(w: &PhaseBivector) -> Report {
    let start = Instant::now();
    let natural = w.to_natural();
    let n = natural.dim();
    let mut lie = Check::new("vertical Lie derivative on dx pairs");
    for k in 0..n {
        for i in 0..n {
            for j in i + 1..n {
                let v = natural.xx(i, j).partial_p(k);
                lie.offer(
                    vec![format!("p{}", k + 1), format!("x{}", i + 1), format!("x{}", j + 1)],
                    &v,
                    v.is_zero(),
                );
            }
        }
    }
    let lie = lie.finish();
    let jac = jacobiator(natural.body());
    let mut xxx = Multi::zero(Space::Phase(n));
    for (b, c) in jac.terms() {
        if b.indices().iter().all(|&a| a < n) {
            xxx.add_term(*b, c.clone());
        }
    }
    let bracket = multi_check("[W,W] on dx triples", &xxx);
    let verdict = all_pass(&[&lie, &bracket]);
    let mut r = Report::new("semi-poisson", verdict);
    r.witnesses = lie.witnesses.iter().chain(&bracket.witnesses).take(MAX_WITNESSES).cloned().collect();
    r.checks = vec![lie, bracket];
    r.timed(start)
}

/// Coefficient families of a polynomially graded bivector:
/// `xx = w^{ij}`, `xp_{ij} = φ^i_j + p_a A^{ia}_j`,
/// `pp_{ij} = η_{ij} + p_a B^a_{ij} + p_a p_b C^{ab}_{ij}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub n: usize,
    /// `w[i][j]`.
    pub w: Tensor,
    /// `phi[i][j]`.
    pub phi: Tensor,
    /// `a[i][a][j] = A^{ia}_j`.
    pub a: Tensor,
    /// `eta[i][j]`.
    pub eta: Tensor,
    /// `b[a][i][j] = B^a_{ij}`.
    pub b: Tensor,
    /// `c[a][b][i][j] = C^{ab}_{ij}`, symmetric in `(a,b)`.
    pub c: Tensor,
}

impl Decomposition {
    pub fn reassemble(&self) -> PhaseBivector {
        let n = self.n;
        let mut body = Multi::zero(Space::Phase(n));
        for i in 0..n {
            for j in 0..n {
                let mut xp = FiberScalar::from_base(self.phi.get(&[i, j]).clone());
                for a in 0..n {
                    xp = xp.add(&FiberScalar::momentum(a).mul_base(self.a.get(&[i, a, j])));
                }
                body.add_indexed(&[i, n + j], xp);
                if i < j {
                    body.add_indexed(&[i, j], FiberScalar::from_base(self.w.get(&[i, j]).clone()));
                    let mut pp = FiberScalar::from_base(self.eta.get(&[i, j]).clone());
                    for a in 0..n {
                        pp = pp.add(&FiberScalar::momentum(a).mul_base(self.b.get(&[a, i, j])));
                        for b in 0..n {
                            pp = pp.add(
                                &FiberScalar::momentum(a)
                                    .mul(&FiberScalar::momentum(b))
                                    .mul_base(self.c.get(&[a, b, i, j])),
                            );
                        }
                    }
                    body.add_indexed(&[n + i, n + j], pp);
                }
            }
        }
        PhaseMultivector::from_multi(Frame::Natural, body).expect("phase space")
    }

    pub fn base_bivector(&self) -> Multivector {
        let mut w = Multi::zero(Space::Base(self.n));
        for i in 0..self.n {
            for j in i + 1..self.n {
                w.add_indexed(&[i, j], self.w.get(&[i, j]).clone());
            }
        }
        w
    }

    /// `Z = 0`, `β = 0`, `V = 0`, i.e. `φ`, `η`, `B` vanish.
    pub fn is_graded(&self) -> bool {
        self.phi.is_zero() && self.eta.is_zero() && self.b.is_zero()
    }

    /// `D` with `{m(X), f} = −m(D_{df}X)`: `Γ^{ia}_j = −A^{ia}_j`.
    pub fn contravariant_connection(&self) -> ContravariantConnection {
        ContravariantConnection::from_fn(&self.base_bivector(), |i, a, j| self.a.get(&[i, a, j]).neg())
    }
}

/// Splits a polynomially graded bivector into its coefficient families.
pub fn decompose(w: &PhaseBivector) -> Result<Decomposition> {
    if shape_of(w) == Shape::NotPolynomial {
        return Err(Error::Degree("bivector is not polynomially graded".into()));
    }
    let natural = w.to_natural();
    let n = natural.dim();
    let mut d = Decomposition {
        n,
        w: Tensor::zeros(n, 2),
        phi: Tensor::zeros(n, 2),
        a: Tensor::zeros(n, 3),
        eta: Tensor::zeros(n, 2),
        b: Tensor::zeros(n, 3),
        c: Tensor::zeros(n, 4),
    };
    let half = num_rational::BigRational::new(1.into(), 2.into());
    for i in 0..n {
        for j in 0..n {
            let xx = natural.xx(i, j);
            d.w.set(&[i, j], xx.coeff(&Monomial::ONE));
            let xp = natural.xp(i, j);
            d.phi.set(&[i, j], xp.coeff(&Monomial::ONE));
            for a in 0..n {
                d.a.set(&[i, a, j], xp.coeff(&Monomial::var(a)));
            }
            let pp = natural.pp(i, j);
            d.eta.set(&[i, j], pp.coeff(&Monomial::ONE));
            for a in 0..n {
                d.b.set(&[a, i, j], pp.coeff(&Monomial::var(a)));
                for b in 0..n {
                    let m = Monomial::var(a).mul(&Monomial::var(b));
                    let mut c = pp.coeff(&m);
                    if a != b {
                        c = c.scale(&half);
                    }
                    d.c.set(&[a, b, i, j], c);
                }
            }
        }
    }
    Ok(d)
}

/// `{X̃, Ỹ}_W`, which is `s(Ψ(X,Y))` for graded `W`.
pub fn psi(w: &PhaseBivector, x: &SymTensor, y: &SymTensor) -> FiberScalar {
    w.pair(x.tilde(), y.tilde())
}

/// `{G̃, X̃}_W`, which is `Θ(G,X)~` for graded `W`.
pub fn theta_operator(w: &PhaseBivector, g: &SymTensor, x: &SymTensor) -> FiberScalar {
    w.pair(g.tilde(), x.tilde())
}

fn unit(n: usize, i: usize) -> Vec<BaseScalar> {
    (0..n)
        .map(|a| if a == i { BaseScalar::one() } else { BaseScalar::zero() })
        .collect()
}

/// Graded Jacobi decomposition: `[w,w] = 0`, `C_D = 0`, the `D_{df}Ψ`
/// identity and the cyclic `Θ(Ψ(X,Y),Z)` identity on coordinate fields,
/// cross-validated against `[W,W] = 0`.
pub fn check_graded_jacobi(w: &PhaseBivector) -> Report {
    let start = Instant::now();
    let natural = w.to_natural();
    let n = natural.dim();
    if shape_of(&natural) != Shape::Graded {
        return Report::new("graded-jacobi", Verdict::NotApplicable)
            .with_note("bivector is not graded")
            .timed(start);
    }
    let dec = decompose(&natural).expect("graded bivector decomposes");
    let base = is_poisson_base(&dec.base_bivector());
    let base = Report {
        condition: "base bracket Jacobi".into(),
        ..base
    };
    let d = dec.contravariant_connection();
    let cd = contravariant_curvature(&d);
    let mut flat = Check::new("flat C_D");
    for (idx, v) in cd.entries() {
        flat.base(&idx, v);
    }
    let flat = flat.finish();
    let (dpsi, cyclic) = if flat.verdict.holds() {
        let fields: Vec<SymTensor> = (0..n).map(|i| SymTensor::vector(&unit(n, i))).collect();
        let mut c = Check::new("D_df Psi on coordinate fields");
        for l in 0..n {
            let dl = unit(n, l);
            let moved: Vec<SymTensor> = fields.iter().map(|f| d.derivative(&dl, f)).collect();
            for i in 0..n {
                for j in i + 1..n {
                    let psi_ij = SymTensor::from_poly(n, 2, natural.pp(i, j)).expect("graded pp block");
                    let v = d
                        .derivative(&dl, &psi_ij)
                        .tilde()
                        .sub(&psi(&natural, &moved[i], &fields[j]))
                        .sub(&psi(&natural, &fields[i], &moved[j]));
                    c.fiber(&[l, i, j], &v);
                }
            }
        }
        let dpsi = c.finish();
        let mut c = Check::new("cyclic Theta(Psi) on coordinate fields");
        let psi_t = |i: usize, j: usize| SymTensor::from_poly(n, 2, natural.pp(i, j)).expect("graded pp block");
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let v = theta_operator(&natural, &psi_t(i, j), &fields[k])
                        .add(&theta_operator(&natural, &psi_t(j, k), &fields[i]))
                        .add(&theta_operator(&natural, &psi_t(k, i), &fields[j]));
                    c.fiber(&[i, j, k], &v);
                }
            }
        }
        (dpsi, c.finish())
    } else {
        let na = |name: &str| {
            Report::new(name, Verdict::NotApplicable).with_note("C_D does not vanish; the identity is not tensorial")
        };
        (na("D_df Psi on coordinate fields"), na("cyclic Theta(Psi) on coordinate fields"))
    };
    let verdict = if !base.verdict.holds() || !flat.verdict.holds() {
        Verdict::Fail
    } else {
        all_pass(&[&dpsi, &cyclic])
    };
    let direct = is_poisson(&natural).verdict;
    let mut r = Report::new("graded-jacobi", verdict);
    r.witnesses = [&base, &flat, &dpsi, &cyclic]
        .iter()
        .flat_map(|c| c.witnesses.iter().cloned())
        .take(MAX_WITNESSES)
        .collect();
    r.checks = vec![base, flat, dpsi, cyclic, meta("meta: graded-jacobi ⇔ [W,W]=0", verdict, direct)];
    r.timed(start)
}

/// `w^{il} w^{jh} R_{klh}` for `i<j`, all `k`.
fn horizontal_second(w: &Multivector, nl: &NonlinearConnection) -> Report {
    let n = nl.dim();
    let wm = bivector_matrix(w);
    let pc = phase_curvature(nl);
    let mut c = Check::new("w^il w^jh R_klh = 0");
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                let mut acc = FiberScalar::zero();
                for l in 0..n {
                    if wm[i][l].is_zero() {
                        continue;
                    }
                    for h in 0..n {
                        let c2 = wm[i][l].mul(&wm[j][h]);
                        if !c2.is_zero() {
                            acc = acc.add(&pc.r(k, l, h).mul_base(&c2));
                        }
                    }
                }
                c.fiber(&[i, j, k], &acc);
            }
        }
    }
    c.finish()
}

fn direct_horizontal_poisson(w: &Multivector, nl: &NonlinearConnection) -> Result<Verdict> {
    let wh = horizontal_lift(w, nl)?.to_natural();
    Ok(Verdict::from_holds(jacobiator(wh.body()).is_zero()))
}

fn direct_compat_w0(w: &Multivector, nl: &NonlinearConnection) -> Result<Verdict> {
    let wh = horizontal_lift(w, nl)?.to_natural();
    Ok(Verdict::from_holds(wh.body().schouten(canonical_w0(nl.dim()).body()).is_zero()))
}

fn check_dims(w: &Multivector, n: usize) -> Result<()> {
    if w.space() != Space::Base(n) {
        return Err(Error::Shape("bivector and connection dimensions differ".into()));
    }
    Ok(())
}

/// Poisson condition for `wᴴ`: both parts of the coordinate criterion, the
/// linear-connection forms when `nabla` is given, and the direct bracket.
pub fn check_horizontal(
    w: &Multivector,
    nl: &NonlinearConnection,
    nabla: Option<&LinearConnection>,
) -> Result<Report> {
    let start = Instant::now();
    let n = nl.dim();
    check_dims(w, n)?;
    let first = Report {
        condition: "cyclic w^hk ∂_h w^ij = 0".into(),
        ..is_poisson_base(w)
    };
    let second = horizontal_second(w, nl);
    let verdict = all_pass(&[&first, &second]);
    let direct = direct_horizontal_poisson(w, nl)?;
    let mut checks = vec![first, second];
    if let Some(nabla) = nabla {
        let r = curvature(nabla);
        let wm = bivector_matrix(w);
        let mut c = Check::new("R(X_f, X_g)Z = 0");
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    for h in 0..n {
                        let mut acc = BaseScalar::zero();
                        for a in 0..n {
                            for b in 0..n {
                                let c2 = wm[i][a].mul(&wm[j][b]);
                                if !c2.is_zero() {
                                    acc = acc.add(&c2.mul(r.get(&[h, k, a, b])));
                                }
                            }
                        }
                        c.base(&[i, j, k, h], &acc);
                    }
                }
            }
        }
        checks.push(c.finish());
        let cd = contravariant_curvature(&contravariant_from_linear(w, nabla));
        let mut c = Check::new("C_D = 0 for the induced connection");
        for (idx, v) in cd.entries() {
            c.base(&idx, v);
        }
        let cd = c.finish();
        let cor = Verdict::from_holds(checks[0].verdict.holds() && cd.verdict.holds());
        checks.push(cd);
        checks.push(meta("meta: ([w,w]=0 and C_D=0) ⇔ [wᴴ,wᴴ]=0", cor, direct));
    }
    checks.push(meta("meta: cond-3-8 ⇔ [wᴴ,wᴴ]=0", verdict, direct));
    let mut r = Report::new("cond-3-8", verdict);
    r.witnesses = checks[..2]
        .iter()
        .flat_map(|c| c.witnesses.iter().cloned())
        .take(MAX_WITNESSES)
        .collect();
    r.checks = checks;
    Ok(r.timed(start))
}

/// Compatibility of `wᴴ` with `W₀`.
pub fn check_compat_w0(w: &Multivector, nl: &NonlinearConnection) -> Result<Report> {
    let start = Instant::now();
    let n = nl.dim();
    check_dims(w, n)?;
    let wm = bivector_matrix(w);
    let pc = phase_curvature(nl);
    let mut c = Check::new("∂_k w^ij + w^ih Φ^j_hk − w^jh Φ^i_hk = 0");
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                let mut acc = FiberScalar::from_base(wm[i][j].partial(k));
                for h in 0..n {
                    acc = acc
                        .add(&pc.phi(j, h, k).mul_base(&wm[i][h]))
                        .sub(&pc.phi(i, h, k).mul_base(&wm[j][h]));
                }
                c.fiber(&[i, j, k], &acc);
            }
        }
    }
    let first = c.finish();
    let mut c = Check::new("w^ih R_hjk = 0");
    for i in 0..n {
        for j in 0..n {
            for k in j + 1..n {
                let mut acc = FiberScalar::zero();
                for h in 0..n {
                    if !wm[i][h].is_zero() {
                        acc = acc.add(&pc.r(h, j, k).mul_base(&wm[i][h]));
                    }
                }
                c.fiber(&[i, j, k], &acc);
            }
        }
    }
    let second = c.finish();
    let verdict = all_pass(&[&first, &second]);
    let direct = direct_compat_w0(w, nl)?;
    let bianchi = if second.verdict.holds() {
        let r38 = horizontal_second(w, nl);
        Report::new("second compatibility part ⇒ R(X_fᴴ, X_gᴴ) = 0", r38.verdict)
    } else {
        Report::new("second compatibility part ⇒ R(X_fᴴ, X_gᴴ) = 0", Verdict::NotApplicable)
            .with_note("premise does not hold on this instance")
    };
    let mut r = Report::new("cond-3-12", verdict);
    r.witnesses = first
        .witnesses
        .iter()
        .chain(&second.witnesses)
        .take(MAX_WITNESSES)
        .cloned()
        .collect();
    r.notes.push("stated for Poisson wᴴ; decided here for any w".into());
    r.checks = vec![first, second, bianchi, meta("meta: cond-3-12 ⇔ [wᴴ,W₀]=0", verdict, direct)];
    Ok(r.timed(start))
}

/// Poisson connection case: `w^{ih} R^l_{hjk} = 0`, against wᴴ being Poisson
/// and compatible with `W₀`.
pub fn check_prop_3_9(w: &Multivector, nabla: &LinearConnection) -> Result<Report> {
    let start = Instant::now();
    let n = nabla.dim();
    check_dims(w, n)?;
    let mut hyp = Check::new("∇w = 0 with ∇ symmetric");
    if !nabla.is_symmetric() {
        hyp.note("connection is not symmetric");
        hyp.failures += 1;
    }
    for (idx, v) in nabla_w(nabla, w).entries() {
        hyp.base(&idx, v);
    }
    let hyp = hyp.finish();
    if !hyp.verdict.holds() {
        let mut r = Report::new("prop-3-9", Verdict::NotApplicable)
            .with_note("hypothesis ∇w = 0 (symmetric ∇) fails");
        r.checks = vec![hyp];
        return Ok(r.timed(start));
    }
    let wm = bivector_matrix(w);
    let rt = curvature(nabla);
    let mut c = Check::new("w^ih R^l_hjk = 0");
    for i in 0..n {
        for l in 0..n {
            for j in 0..n {
                for k in j + 1..n {
                    let mut acc = BaseScalar::zero();
                    for h in 0..n {
                        acc = acc.add(&wm[i][h].mul(rt.get(&[l, h, j, k])));
                    }
                    c.base(&[i, l, j, k], &acc);
                }
            }
        }
    }
    let cond = c.finish();
    let nl = NonlinearConnection::from_linear(nabla)?;
    let direct = Verdict::from_holds(
        direct_horizontal_poisson(w, &nl)?.holds() && direct_compat_w0(w, &nl)?.holds(),
    );
    let mut r = Report::new("prop-3-9", cond.verdict);
    r.witnesses = cond.witnesses.clone();
    r.checks = vec![
        hyp,
        cond,
        meta("meta: prop-3-9 ⇔ ([wᴴ,wᴴ]=0 and [wᴴ,W₀]=0)", r.verdict, direct),
    ];
    Ok(r.timed(start))
}

fn omega_matrix(omega: &DiffForm, n: usize) -> Vec<Vec<BaseScalar>> {
    (0..n)
        .map(|i| (0..n).map(|j| omega.component(&[i, j])).collect())
        .collect()
}

/// `∇_k ω_{ij}`, indexed `[k][i][j]`.
pub fn nabla_two_form(nabla: &LinearConnection, omega: &DiffForm) -> Tensor {
    let n = nabla.dim();
    let om = omega_matrix(omega, n);
    Tensor::from_fn(n, 3, |idx| {
        let (k, i, j) = (idx[0], idx[1], idx[2]);
        let mut acc = om[i][j].partial(k);
        for l in 0..n {
            acc = acc
                .sub(&nabla.get(l, k, i).mul(&om[l][j]))
                .sub(&nabla.get(l, k, j).mul(&om[i][l]));
        }
        acc
    })
}

fn phase_zero_or_codiff(metric: &PhaseMetric, alpha: &PhaseForm) -> Result<PhaseForm> {
    if alpha.is_zero() {
        return Ok(PhaseForm::zero(alpha.dim(), alpha.frame().clone()));
    }
    phase_codifferential(metric, alpha)
}

/// `δ_G(Θ∧Θ) − 2 Θ∧δ_G Θ`, evaluated with the metric's derivative table.
pub fn codifferential_identity_defect(metric: &PhaseMetric, theta: &PhaseForm) -> Result<PhaseForm> {
    let tt = theta.wedge(theta)?;
    let lhs = phase_zero_or_codiff(metric, &tt)?;
    let dt = phase_zero_or_codiff(metric, theta)?;
    let rhs = theta.wedge(&dt)?;
    let two = num_rational::BigRational::from_integer(2.into());
    lhs.sub(&rhs.scale(&two))
}

fn phase_form_check(condition: &str, form: &PhaseForm) -> Report {
    let mut c = Check::new(condition);
    let space = Space::Phase(form.dim());
    let mut terms: Vec<(Vec<usize>, &FiberScalar)> =
        form.body().terms().map(|(b, c)| (b.indices(), c)).collect();
    terms.sort_by(|a, b| a.0.cmp(&b.0));
    for (idx, v) in terms {
        let labels = idx
            .iter()
            .map(|&a| {
                if a < form.dim() {
                    format!("dx{}", a + 1)
                } else {
                    format!("δp{}", a - form.dim() + 1)
                }
            })
            .collect();
        let _ = space;
        c.offer(labels, v, v.is_zero());
    }
    c.finish()
}

/// Which lifted metric a section-4 check uses.
pub type Which = MetricKind;

fn theta_bivector(g: &Metric, omega: &DiffForm, which: Which) -> Result<(PhaseMetric, PhaseForm, PhaseBivector)> {
    let metric = match which {
        MetricKind::G1 => PhaseMetric::g1(g)?,
        MetricKind::G2 => PhaseMetric::g2(g)?,
    };
    let nl = metric.nonlinear_connection().clone();
    let (theta, w) = theta_lift(omega, &nl, &metric)?;
    Ok((metric, theta, w))
}

fn direct_theta_poisson(w: &PhaseBivector) -> Verdict {
    Verdict::from_holds(jacobiator(w.to_natural().body()).is_zero())
}

/// Conditions for `♯_G Θ(ω)` to be Poisson, for `G₁` or `G₂`.
pub fn check_section4(g: &Metric, omega: &DiffForm, which: Which) -> Result<Report> {
    let start = Instant::now();
    let n = g.dim();
    if omega.space() != Space::Base(n) {
        return Err(Error::Shape("two-form and metric dimensions differ".into()));
    }
    let (metric, theta, w) = theta_bivector(g, omega, which)?;
    let nabla = metric.linear_connection().clone();
    let direct = direct_theta_poisson(&w);
    let defect = codifferential_identity_defect(&metric, &theta)?;
    let identity = phase_form_check("δ_G(Θ∧Θ) = 2 Θ∧δ_G Θ", &defect);
    let mut checks = Vec::new();
    let verdict;
    let name;
    match which {
        MetricKind::G1 => {
            name = "prop-4-2";
            let d = exterior_d(omega);
            let closed = multi_check("dω = 0", &d);
            let mut c = Check::new("Γ^a_ai = 0");
            for i in 0..n {
                c.base(&[i], &nabla.trace(i));
            }
            let trace = c.finish();
            verdict = all_pass(&[&closed, &trace]);
            checks.push(closed);
            checks.push(trace);
        }
        MetricKind::G2 => {
            name = "prop-4-15";
            let rt = curvature(&nabla);
            let nw = nabla_two_form(&nabla, omega);
            let mut c = Check::new("∇ω = 0");
            for k in 0..n {
                for i in 0..n {
                    for j in i + 1..n {
                        c.base(&[k, i, j], nw.get(&[k, i, j]));
                    }
                }
            }
            let par = c.finish();
            let mut c = Check::new("g^ab R^k_abi = 0");
            for k in 0..n {
                for i in 0..n {
                    let mut acc = BaseScalar::zero();
                    for a in 0..n {
                        for b in 0..n {
                            acc = acc.add(&g.upper(a, b).mul(rt.get(&[k, a, b, i])));
                        }
                    }
                    c.base(&[k, i], &acc);
                }
            }
            let trace = c.finish();
            let om = omega_matrix(omega, n);
            let raised = raise_two_form(g, &om);
            let mut c = Check::new("ω^ab R^k_iab = 0");
            for k in 0..n {
                for i in 0..n {
                    let mut acc = BaseScalar::zero();
                    for a in 0..n {
                        for b in 0..n {
                            acc = acc.add(&raised[a][b].mul(rt.get(&[k, i, a, b])));
                        }
                    }
                    c.base(&[k, i], &acc);
                }
            }
            let contr = c.finish();
            verdict = all_pass(&[&par, &trace, &contr]);
            let (first16, second16) = conditions_4_16(g, &nabla, omega);
            let holds17 = par.verdict.holds() && trace.verdict.holds();
            let holds16 = first16.verdict.holds() && second16.verdict.holds();
            let chain = if holds17 {
                Report::new("(∇ω=0, g^ab R^k_abi=0) ⇒ cyclic conditions", Verdict::from_holds(holds16))
            } else {
                Report::new("(∇ω=0, g^ab R^k_abi=0) ⇒ cyclic conditions", Verdict::NotApplicable)
                    .with_note("premise does not hold on this instance")
            };
            checks.extend([par, trace, contr, first16, second16, chain]);
        }
    }
    let identity_verdict = identity.verdict;
    checks.push(identity);
    checks.push(meta(&format!("meta: {name} ⇔ [W,W]=0"), verdict, direct));
    checks.push(meta("meta: codifferential identity ⇔ [W,W]=0", identity_verdict, direct));
    let mut r = Report::new(name, verdict);
    r.witnesses = checks
        .iter()
        .take_while(|c| !c.condition.starts_with("δ_G"))
        .flat_map(|c| c.witnesses.iter().cloned())
        .take(MAX_WITNESSES)
        .collect();
    r.notes.push(format!(
        "W = ♯_G Θ(ω) with G = {}; the derivative table is used verbatim",
        if which == MetricKind::G1 { "G1" } else { "G2" }
    ));
    if which == MetricKind::G2 {
        r.notes
            .push("raised curvatures g^ja g^kb R_abi keep their momentum dependence".into());
    }
    r.checks = checks;
    Ok(r.timed(start))
}

fn raise_two_form(g: &Metric, om: &[Vec<BaseScalar>]) -> Vec<Vec<BaseScalar>> {
    let n = g.dim();
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let mut acc = BaseScalar::zero();
                    for i in 0..n {
                        for j in 0..n {
                            let c = g.upper(a, i).mul(g.upper(b, j));
                            if !c.is_zero() {
                                acc = acc.add(&c.mul(&om[i][j]));
                            }
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// The two cyclic conditions derived for `G₂`.
fn conditions_4_16(g: &Metric, nabla: &LinearConnection, omega: &DiffForm) -> (Report, Report) {
    let n = g.dim();
    let rt = curvature(nabla);
    let om = omega_matrix(omega, n);
    let nw = nabla_two_form(nabla, omega);
    let cyc = |i: usize, j: usize, k: usize| [(i, j, k), (j, k, i), (k, i, j)];
    let mut c1 = Check::new("g^ab Σ ω_ij R^h_abk = 0");
    let mut c2 = Check::new("g^ab Σ (∇_a ω_ij) ω_kb = 0");
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for h in 0..n {
                    let mut acc = BaseScalar::zero();
                    for (x, y, z) in cyc(i, j, k) {
                        for a in 0..n {
                            for b in 0..n {
                                let gab = g.upper(a, b);
                                if !gab.is_zero() {
                                    acc = acc.add(&gab.mul(&om[x][y]).mul(rt.get(&[h, a, b, z])));
                                }
                            }
                        }
                    }
                    c1.base(&[i, j, k, h], &acc);
                }
                let mut acc = BaseScalar::zero();
                for (x, y, z) in cyc(i, j, k) {
                    for a in 0..n {
                        for b in 0..n {
                            let gab = g.upper(a, b);
                            if !gab.is_zero() {
                                acc = acc.add(&gab.mul(nw.get(&[a, x, y])).mul(&om[z][b]));
                            }
                        }
                    }
                }
                c2.base(&[i, j, k], &acc);
            }
        }
    }
    (c1.finish(), c2.finish())
}

/// `w^{ij} = g^{ia} g^{jb} ω_{ab}`.
pub fn sharp_metric_two_form(g: &Metric, omega: &DiffForm) -> Multivector {
    let n = g.dim();
    let raised = raise_two_form(g, &omega_matrix(omega, n));
    let mut w = Multi::zero(Space::Base(n));
    for i in 0..n {
        for j in i + 1..n {
            w.add_indexed(&[i, j], raised[i][j].clone());
        }
    }
    w
}

/// `Σ_(ijk) w^{ia} ∇_a w^{jk} = 0` for `w = ♯_g ω`.
fn covariant_jacobi(g: &Metric, nabla: &LinearConnection, omega: &DiffForm) -> Report {
    let n = g.dim();
    let raised = raise_two_form(g, &omega_matrix(omega, n));
    let w = sharp_metric_two_form(g, omega);
    let nw = nabla_w(nabla, &w);
    let mut c = Check::new("Σ w^ia ∇_a w^jk = 0");
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let mut acc = BaseScalar::zero();
                for (x, y, z) in [(i, j, k), (j, k, i), (k, i, j)] {
                    for a in 0..n {
                        acc = acc.add(&raised[x][a].mul(nw.get(&[a, y, z])));
                    }
                }
                c.base(&[i, j, k], &acc);
            }
        }
    }
    c.finish()
}

/// `w = ♯_g ω` is Poisson, with the claimed equivalence to the second cyclic
/// condition and the implication from `♯_{G₂}Θ(ω)` being Poisson.
pub fn check_remark_4_5(g: &Metric, omega: &DiffForm) -> Result<Report> {
    let start = Instant::now();
    let nabla = levi_civita(g)?;
    let cond = covariant_jacobi(g, &nabla, omega);
    let (_, second) = conditions_4_16(g, &nabla, omega);
    let (_, _, w) = theta_bivector(g, omega, MetricKind::G2)?;
    let direct = direct_theta_poisson(&w);
    let implication = if direct.holds() {
        Report::new("[W,W]=0 ⇒ ♯_g ω Poisson", cond.verdict)
    } else {
        Report::new("[W,W]=0 ⇒ ♯_g ω Poisson", Verdict::NotApplicable)
            .with_note("♯_G2 Θ(ω) is not Poisson on this instance")
    };
    let mut r = Report::new("remark-4-5", cond.verdict);
    r.witnesses = cond.witnesses.clone();
    let eq = meta("meta: second cyclic condition ⇔ Σ w^ia ∇_a w^jk = 0", second.verdict, cond.verdict);
    r.checks = vec![cond, second, implication, eq];
    Ok(r.timed(start))
}

/// `r = 0`, with the implication from `♯_{G₂}Θ(ω)` being Poisson.
pub fn check_scalar_curvature(g: &Metric, omega: &DiffForm) -> Result<Report> {
    let start = Instant::now();
    let r = scalar_curvature(g)?;
    let mut c = Check::new("scalar-curvature");
    c.base(&[], &r);
    let mut rep = c.finish();
    let (_, _, w) = theta_bivector(g, omega, MetricKind::G2)?;
    let implication = if direct_theta_poisson(&w).holds() {
        Report::new("[W,W]=0 ⇒ r = 0", rep.verdict)
    } else {
        Report::new("[W,W]=0 ⇒ r = 0", Verdict::NotApplicable)
            .with_note("♯_G2 Θ(ω) is not Poisson on this instance")
    };
    rep.checks.push(implication);
    Ok(rep.timed(start))
}

/// `π`-relatedness: the `xx` block of `W` is `w` and carries no momenta.
pub fn check_pi_related(w_lift: &PhaseBivector, w: &Multivector) -> Report {
    let start = Instant::now();
    let natural = w_lift.to_natural();
    let n = natural.dim();
    let mut c = Check::new("pi-related");
    for i in 0..n {
        for j in i + 1..n {
            let v = natural.xx(i, j).sub(&FiberScalar::from_base(w.component(&[i, j])));
            c.fiber(&[i, j], &v);
        }
    }
    c.finish().timed(start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base_geometry::{bivector_from_matrix, two_form_from_matrix};
    use crate::lifts::{lift_w1, lift_w2};
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

    fn plane() -> Multivector {
        bivector_from_matrix(&mat(&[&["0", "1"], &["-1", "0"]], 2)).unwrap()
    }

    #[test]
    fn shapes() {
        let w0 = canonical_w0(2);
        assert_eq!(shape_of(&w0), Shape::PolynomiallyGraded);
        let r = classify_shape(&w0);
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(!r.witnesses.is_empty());
        let w2 = lift_w2(&so3(), &LinearConnection::zero(3)).unwrap();
        assert_eq!(shape_of(&w2), Shape::Graded);
        let mut body = Multi::zero(Space::Phase(2));
        body.add_indexed(&[2, 3], FiberScalar::momentum(0).pow(3));
        let bad = PhaseMultivector::from_multi(Frame::Natural, body).unwrap();
        assert_eq!(shape_of(&bad), Shape::NotPolynomial);
        assert!(decompose(&bad).is_err());
    }

    #[test]
    fn w0_is_poisson_and_semi_poisson() {
        let w0 = canonical_w0(3);
        assert!(is_poisson(&w0).verdict.holds());
        assert!(is_semi_poisson(&w0).verdict.holds());
    }

    #[test]
    fn decompose_w0_and_round_trip() {
        let w0 = canonical_w0(2);
        let d = decompose(&w0).unwrap();
        assert_eq!(*d.phi.get(&[0, 0]), BaseScalar::from_int(-1));
        assert!(d.w.is_zero() && d.a.is_zero() && d.c.is_zero());
        assert_eq!(d.reassemble(), w0);
    }

    #[test]
    fn decompose_w1_recovers_connection() {
        let w = so3();
        let dconn = ContravariantConnection::from_fn(&w, |i, j, k| {
            if (i + j + k) % 2 == 0 {
                BaseScalar::var(k)
            } else {
                BaseScalar::from_int((i + 2 * j) as i64)
            }
        });
        let w1 = lift_w1(&w, &dconn).unwrap();
        let d = decompose(&w1).unwrap();
        assert_eq!(d.reassemble(), w1);
        assert_eq!(d.contravariant_connection(), dconn);
    }

    #[test]
    fn graded_jacobi_flat_data() {
        let w = plane();
        let d = ContravariantConnection::from_fn(&w, |_, _, _| BaseScalar::zero());
        let r = check_graded_jacobi(&lift_w1(&w, &d).unwrap());
        assert!(r.verdict.holds(), "{}", r.to_text());
        assert!(r.meta_checks().all(|m| m.verdict.holds()));
    }

    #[test]
    fn graded_jacobi_agrees_on_non_poisson_lift() {
        let w2 = lift_w2(&so3(), &LinearConnection::zero(3)).unwrap();
        let r = check_graded_jacobi(&w2);
        assert!(r.meta_checks().all(|m| m.verdict.holds()), "{}", r.to_text());
    }

    #[test]
    fn horizontal_examples() {
        let nl = NonlinearConnection::zero(3);
        let r = check_horizontal(&so3(), &nl, Some(&LinearConnection::zero(3))).unwrap();
        assert!(r.verdict.holds());
        let nabla = LinearConnection::from_entries(2, true, &[(0, 1, 1, b("x1", 2))]).unwrap();
        let nl = NonlinearConnection::from_linear(&nabla).unwrap();
        let r = check_horizontal(&plane(), &nl, Some(&nabla)).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(!r.witnesses.is_empty());
        assert!(r.meta_checks().all(|m| m.verdict.holds()), "{}", r.to_text());
    }

    #[test]
    fn compat_examples() {
        let r = check_compat_w0(&so3(), &NonlinearConnection::zero(3)).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.checks[0].verdict, Verdict::Fail);
        assert!(r.meta_checks().all(|m| m.verdict.holds()));
        let r = check_compat_w0(&plane(), &NonlinearConnection::zero(2)).unwrap();
        assert!(r.verdict.holds());
        let r = check_prop_3_9(&plane(), &LinearConnection::zero(2)).unwrap();
        assert!(r.verdict.holds());
        let r = check_prop_3_9(&so3(), &LinearConnection::zero(3)).unwrap();
        assert_eq!(r.verdict, Verdict::NotApplicable);
    }

    #[test]
    fn section4_flat_examples() {
        let g = Metric::flat(2);
        let omega = two_form_from_matrix(&mat(&[&["0", "x1"], &["-x1", "0"]], 2)).unwrap();
        let r = check_section4(&g, &omega, MetricKind::G1).unwrap();
        assert!(r.verdict.holds(), "{}", r.to_text());
        let omega = two_form_from_matrix(&mat(&[&["0", "3"], &["-3", "0"]], 2)).unwrap();
        let r = check_section4(&g, &omega, MetricKind::G2).unwrap();
        assert!(r.verdict.holds(), "{}", r.to_text());
    }

    #[test]
    fn section4_trace_witness() {
        let g = Metric::new(mat(&[&["1", "0"], &["0", "(1+x1)^2"]], 2)).unwrap();
        let omega = two_form_from_matrix(&mat(&[&["0", "0"], &["0", "0"]], 2)).unwrap();
        let r = check_section4(&g, &omega, MetricKind::G1).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.witnesses[0].indices, vec!["1".to_string()]);
    }

    #[test]
    fn report_serializes() {
        let r = is_poisson(&canonical_w0(1));
        let json = r.to_json();
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert!(json.contains("\"elapsed_ms\""));
    }
}

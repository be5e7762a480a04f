//! Constructors for lifted structures on `T*M`.

use std::sync::Arc;

use num_rational::BigRational;

use crate::base_geometry::{
    bivector_matrix, check_dim, invert_matrix, nabla_w, ContravariantConnection, DiffForm,
    LinearConnection, Multivector, Tensor,
};
use crate::error::{Error, Result};
use crate::exterior::{Blade, Multi, Space};
use crate::phase_geometry::{
    canonical_structures, canonical_w0, k_field, Frame, NonlinearConnection, PhaseBivector,
    PhaseForm, PhaseMetric, PhaseMultivector,
};
use crate::symexpr::{BaseScalar, FiberScalar};

fn half() -> BigRational {
    BigRational::new(1.into(), 2.into())
}

fn quarter() -> BigRational {
    BigRational::new(1.into(), 4.into())
}

fn pp_monomial(a: usize, b: usize) -> FiberScalar {
    FiberScalar::momentum(a).mul(&FiberScalar::momentum(b))
}

fn natural_from_parts(
    w: &Multivector,
    xp: impl Fn(usize, usize) -> FiberScalar,
    pp: impl Fn(usize, usize) -> FiberScalar,
) -> PhaseBivector {
    let n = w.space().base_dim();
    let wm = bivector_matrix(w);
    let xx: Vec<Vec<FiberScalar>> = wm
        .iter()
        .map(|r| r.iter().map(|c| FiberScalar::from_base(c.clone())).collect())
        .collect();
    let xpm: Vec<Vec<FiberScalar>> = (0..n).map(|i| (0..n).map(|j| xp(i, j)).collect()).collect();
    let ppm: Vec<Vec<FiberScalar>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i < j { pp(i, j) } else { FiberScalar::zero() })
                .collect()
        })
        .collect();
    PhaseMultivector::from_blocks(Frame::Natural, &xx, &xpm, &ppm)
}

/// Graded lift `W₁` of `w` determined by a contravariant connection `D`:
/// `xx = w`, `xp_{ij} = −p_a Γ^{ia}_j`,
/// `pp_{ij} = −½ p_a p_b (∂_j Γ^{ab}_i − ∂_i Γ^{ab}_j)`.
pub fn lift_w1(w: &Multivector, d: &ContravariantConnection) -> Result<PhaseBivector> {
    let n = d.dim();
    if w.space() != Space::Base(n) {
        return Err(Error::Shape("bivector and connection dimensions differ".into()));
    }
    Ok(natural_from_parts(
        w,
        |i, j| {
            (0..n).fold(FiberScalar::zero(), |acc, a| {
                acc.sub(&FiberScalar::momentum(a).mul_base(d.get(i, a, j)))
            })
        },
        |i, j| {
            let mut acc = FiberScalar::zero();
            for a in 0..n {
                for b in 0..n {
                    let c = d.get(a, b, i).partial(j).sub(&d.get(a, b, j).partial(i));
                    if !c.is_zero() {
                        acc = acc.add(&pp_monomial(a, b).mul_base(&c));
                    }
                }
            }
            acc.scale(&half()).neg()
        },
    ))
}

/// `W₂ = ½ L_K W₀`, computed by the Schouten bracket.
pub fn lift_w2(w: &Multivector, nabla: &LinearConnection) -> Result<PhaseBivector> {
    let n = nabla.dim();
    if w.space() != Space::Base(n) {
        return Err(Error::Shape("bivector and connection dimensions differ".into()));
    }
    let k = k_field(w, nabla);
    let w0 = canonical_w0(n);
    let body = k.body().schouten(w0.body()).scale(&half());
    PhaseMultivector::from_multi(Frame::Natural, body)
}

/// Coordinate form of `W₂`:
/// `xp_{ij} = ½ p_a (∇_j w^{ai} + 2 w^{ik} Γ^a_{kj})`,
/// `pp_{ij} = ¼ p_a p_b [∂_j S^{ab}_i − ∂_i S^{ab}_j]` with
/// `S^{ab}_i = w^{ak}Γ^b_{ki} + w^{bk}Γ^a_{ki}`, one coefficient per pair `i<j`.
pub fn lift_w2_closed_form(w: &Multivector, nabla: &LinearConnection) -> Result<PhaseBivector> {
    let n = nabla.dim();
    if w.space() != Space::Base(n) {
        return Err(Error::Shape("bivector and connection dimensions differ".into()));
    }
    let wm = bivector_matrix(w);
    let nw = nabla_w(nabla, w);
    let s = |a: usize, b: usize, i: usize| -> BaseScalar {
        let mut acc = BaseScalar::zero();
        for k in 0..n {
            acc = acc
                .add(&wm[a][k].mul(nabla.get(b, k, i)))
                .add(&wm[b][k].mul(nabla.get(a, k, i)));
        }
        acc
    };
    Ok(natural_from_parts(
        w,
        |i, j| {
            let mut acc = FiberScalar::zero();
            for a in 0..n {
                let mut c = nw.get(&[j, a, i]).clone();
                for k in 0..n {
                    c = c.add(&wm[i][k].mul(nabla.get(a, k, j)).scale(&BigRational::from_integer(2.into())));
                }
                acc = acc.add(&FiberScalar::momentum(a).mul_base(&c));
            }
            acc.scale(&half())
        },
        |i, j| {
            let mut acc = FiberScalar::zero();
            for a in 0..n {
                for b in 0..n {
                    let c = s(a, b, i).partial(j).sub(&s(a, b, j).partial(i));
                    if !c.is_zero() {
                        acc = acc.add(&pp_monomial(a, b).mul_base(&c));
                    }
                }
            }
            acc.scale(&quarter())
        },
    ))
}

/// `wᴴ = ½ w^{ij} δ_i ∧ δ_j`, in the frame adapted to `N`.
pub fn horizontal_lift(w: &Multivector, nl: &NonlinearConnection) -> Result<PhaseBivector> {
    if w.space() != Space::Base(nl.dim()) {
        return Err(Error::Shape("bivector and connection dimensions differ".into()));
    }
    Ok(PhaseMultivector::from_base(w, Frame::Adapted(Arc::new(nl.clone()))))
}

/// Same as [`horizontal_lift`] but sharing an existing connection handle.
pub fn horizontal_lift_shared(w: &Multivector, nl: &Arc<NonlinearConnection>) -> PhaseBivector {
    PhaseMultivector::from_base(w, Frame::Adapted(nl.clone()))
}

/// `Θ(ω) = π*ω − dλ` in the frame adapted to `N`, and `W = ♯_G Θ(ω)`.
pub fn theta_lift(
    omega: &DiffForm,
    nl: &NonlinearConnection,
    metric: &PhaseMetric,
) -> Result<(PhaseForm, PhaseBivector)> {
    if metric.nonlinear_connection().as_ref() != nl {
        return Err(Error::FrameMismatch(
            "metric is built on a different nonlinear connection".into(),
        ));
    }
    if omega.space() != Space::Base(nl.dim()) || !(omega.is_zero() || omega.is_homogeneous(2)) {
        return Err(Error::Shape("ω must be a 2-form on the base".into()));
    }
    let (lambda, _) = canonical_structures(nl.dim());
    let natural = PhaseForm::pullback(omega, Frame::Natural).sub(&lambda.exterior_d())?;
    let theta = natural.to_adapted(metric.nonlinear_connection());
    let w = metric.sharp_two_form(&theta)?;
    Ok((theta, w))
}

/// Global chart adapted to a regular foliation: the first `n − p`
/// coordinates are transverse, the last `p` run along the leaves. The
/// leafwise frame is `Y_u = a^v_u ∂/∂y^v`.
#[derive(Clone, Debug, PartialEq)]
pub struct FoliationChart {
    n: usize,
    leaf_dim: usize,
    frame: Vec<Vec<BaseScalar>>,
    frame_inverse: Vec<Vec<BaseScalar>>,
    leaf_bivector: Vec<Vec<BaseScalar>>,
}

impl FoliationChart {
    /// `frame[v][u] = a^v_u`, `leaf_bivector[u][v] = w^{uv}`; functions of all
    /// `n` coordinates.
    pub fn new(
        n: usize,
        leaf_dim: usize,
        frame: Vec<Vec<BaseScalar>>,
        leaf_bivector: Vec<Vec<BaseScalar>>,
    ) -> Result<Self> {
        check_dim(n)?;
        if leaf_dim == 0 || leaf_dim > n {
            return Err(Error::Shape(format!("leaf dimension {leaf_dim} for n = {n}")));
        }
        let square = |m: &Vec<Vec<BaseScalar>>| m.len() == leaf_dim && m.iter().all(|r| r.len() == leaf_dim);
        if !square(&frame) || !square(&leaf_bivector) {
            return Err(Error::Shape(format!("foliation blocks must be {leaf_dim}×{leaf_dim}")));
        }
        for u in 0..leaf_dim {
            for v in u..leaf_dim {
                if leaf_bivector[u][v] != leaf_bivector[v][u].neg() {
                    return Err(Error::Symmetry {
                        what: "leafwise bivector".into(),
                        indices: vec![u + 1, v + 1],
                    });
                }
            }
        }
        let frame_inverse =
            invert_matrix(&frame).ok_or_else(|| Error::NonInvertible("foliation frame matrix".into()))?;
        Ok(FoliationChart {
            n,
            leaf_dim,
            frame,
            frame_inverse,
            leaf_bivector,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn leaf_dim(&self) -> usize {
        self.leaf_dim
    }

    pub fn frame(&self) -> &[Vec<BaseScalar>] {
        &self.frame
    }

    pub fn leaf_bivector(&self) -> &[Vec<BaseScalar>] {
        &self.leaf_bivector
    }

    /// The bivector `w` on `M`.
    pub fn base_bivector(&self) -> Multivector {
        let off = self.n - self.leaf_dim;
        let mut w = Multi::zero(Space::Base(self.n));
        for u in 0..self.leaf_dim {
            for v in u + 1..self.leaf_dim {
                w.add_indexed(&[off + u, off + v], self.leaf_bivector[u][v].clone());
            }
        }
        w
    }
}

/// `W = ½ w^{uv} ∂/∂y^u ∧ ∂/∂y^v` in distinguished coordinates, rewritten in
/// the natural frame. With `ε_u = a^v_u p_{y^v}`, the distinguished field is
/// `∂/∂y^u + p_{y^s} a^s_t ∂_u(a⁻¹)^t_v ∂/∂p_{y^v}`.
pub fn foliated_lift(chart: &FoliationChart) -> PhaseBivector {
    let n = chart.n;
    let q = chart.leaf_dim;
    let off = n - q;
    let space = Space::Phase(n);
    let fields: Vec<Multi<FiberScalar>> = (0..q)
        .map(|u| {
            let mut v_u = Multi::generator(space, off + u);
            for v in 0..q {
                let mut c = FiberScalar::zero();
                for s in 0..q {
                    for t in 0..q {
                        let coeff = chart.frame[s][t].mul(&chart.frame_inverse[t][v].partial(off + u));
                        if !coeff.is_zero() {
                            c = c.add(&FiberScalar::momentum(off + s).mul_base(&coeff));
                        }
                    }
                }
                v_u.add_term(Blade::single(n + off + v), c);
            }
            v_u
        })
        .collect();
    let mut body = Multi::zero(space);
    for u in 0..q {
        for v in u + 1..q {
            let c = &chart.leaf_bivector[u][v];
            if c.is_zero() {
                continue;
            }
            body = body.add(&fields[u].wedge(&fields[v]).mul_scalar(&FiberScalar::from_base(c.clone())));
        }
    }
    PhaseMultivector::from_multi(Frame::Natural, body).expect("phase space")
}

/// Shifts a graded bivector's connection by `τ^{ia}_j` and adds
/// `p_a p_b T^{ab}_{ij}` to its `pp` block. `tau[i][a][j]`, `t[a][b][i][j]`.
pub fn perturb_graded(w: &PhaseBivector, tau: &Tensor, t: &Tensor) -> Result<PhaseBivector> {
    let n = w.dim();
    if tau.rank() != 3 || tau.dim() != n || t.rank() != 4 || t.dim() != n {
        return Err(Error::Shape("τ must be rank 3 and T rank 4 over the same dimension".into()));
    }
    for a in 0..n {
        for b in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let v = t.get(&[a, b, i, j]);
                    if v != t.get(&[b, a, i, j]) || *v != t.get(&[a, b, j, i]).neg() {
                        return Err(Error::Symmetry {
                            what: "T (symmetric in its upper pair, skew in its lower pair)".into(),
                            indices: vec![a + 1, b + 1, i + 1, j + 1],
                        });
                    }
                }
            }
        }
    }
    let natural = w.to_natural();
    let mut body = natural.body().clone();
    for i in 0..n {
        for j in 0..n {
            let mut c = FiberScalar::zero();
            for a in 0..n {
                c = c.sub(&FiberScalar::momentum(a).mul_base(tau.get(&[i, a, j])));
            }
            body.add_indexed(&[i, n + j], c);
            if i < j {
                let mut c = FiberScalar::zero();
                for a in 0..n {
                    for b in 0..n {
                        let v = t.get(&[a, b, i, j]);
                        if !v.is_zero() {
                            c = c.add(&pp_monomial(a, b).mul_base(v));
                        }
                    }
                }
                body.add_indexed(&[n + i, n + j], c);
            }
        }
    }
    Ok(PhaseMultivector::from_multi(Frame::Natural, body)?.in_frame(w.frame()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base_geometry::{bivector_from_matrix, contravariant_from_linear, two_form_from_matrix, Metric};
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

    fn symplectic_plane() -> Multivector {
        bivector_from_matrix(&mat(&[&["0", "1"], &["-1", "0"]], 2)).unwrap()
    }

    #[test]
    fn w2_routes_agree_for_symmetric_connection() {
        let w = bivector_from_matrix(&mat(&[&["0", "x1*x2"], &["-x1*x2", "0"]], 2)).unwrap();
        let nabla = LinearConnection::from_entries(
            2,
            true,
            &[(0, 1, 1, b("x1", 2)), (1, 0, 1, b("x2^2", 2)), (0, 0, 0, b("3", 2))],
        )
        .unwrap();
        assert_eq!(lift_w2(&w, &nabla).unwrap(), lift_w2_closed_form(&w, &nabla).unwrap());
    }

    #[test]
    fn w2_of_so3_with_flat_connection() {
        let w = so3();
        let w2 = lift_w2(&w, &LinearConnection::zero(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut expected = FiberScalar::zero();
                for a in 0..3 {
                    expected = expected.add(
                        &FiberScalar::momentum(a).mul_base(&w.component(&[a, i]).partial(j).scale(&half())),
                    );
                }
                assert_eq!(w2.xp(i, j), expected);
                assert!(w2.pp(i, j).is_zero());
            }
        }
    }

    #[test]
    fn w1_equals_w2_exactly_when_w_is_parallel() {
        let flat = LinearConnection::zero(2);
        let w = symplectic_plane();
        let d = contravariant_from_linear(&w, &flat);
        assert_eq!(lift_w1(&w, &d).unwrap(), lift_w2(&w, &flat).unwrap());
        let flat3 = LinearConnection::zero(3);
        let d3 = contravariant_from_linear(&so3(), &flat3);
        assert_ne!(lift_w1(&so3(), &d3).unwrap(), lift_w2(&so3(), &flat3).unwrap());
    }

    #[test]
    fn w1_with_zero_connection_is_w_block() {
        let w = so3();
        let d = ContravariantConnection::from_fn(&w, |_, _, _| BaseScalar::zero());
        let w1 = lift_w1(&w, &d).unwrap();
        assert_eq!(w1, PhaseMultivector::from_base(&w, Frame::Natural));
    }

    #[test]
    fn horizontal_lift_matches_coordinate_blocks() {
        let w = bivector_from_matrix(&mat(&[&["0", "x2"], &["-x2", "0"]], 2)).unwrap();
        let nabla = LinearConnection::from_entries(2, true, &[(0, 1, 1, b("x1", 2)), (1, 0, 1, b("x2", 2))]).unwrap();
        let nl = NonlinearConnection::from_linear(&nabla).unwrap();
        let wh = horizontal_lift(&w, &nl).unwrap().to_natural();
        let wm = bivector_matrix(&w);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(wh.xx(i, j), FiberScalar::from_base(wm[i][j].clone()));
                let mut xp = FiberScalar::zero();
                let mut pp = FiberScalar::zero();
                for k in 0..2 {
                    for a in 0..2 {
                        xp = xp.add(&FiberScalar::momentum(a).mul_base(&wm[i][k].mul(nabla.get(a, k, j))));
                        for h in 0..2 {
                            for c in 0..2 {
                                pp = pp.add(&pp_monomial(a, c).mul_base(
                                    &wm[k][h].mul(nabla.get(a, k, i)).mul(nabla.get(c, h, j)),
                                ));
                            }
                        }
                    }
                }
                assert_eq!(wh.xp(i, j), xp);
                if i < j {
                    assert_eq!(wh.pp(i, j), pp);
                }
            }
        }
    }

    #[test]
    fn theta_lift_flat_g1_gives_w0() {
        let metric = PhaseMetric::g1(&Metric::flat(2)).unwrap();
        let omega = two_form_from_matrix(&mat(&[&["0", "0"], &["0", "0"]], 2)).unwrap();
        let (_, w) = theta_lift(&omega, &NonlinearConnection::zero(2), &metric).unwrap();
        assert_eq!(w.to_natural(), canonical_w0(2));
    }

    #[test]
    fn theta_lift_matches_adapted_expression() {
        let g = Metric::new(mat(&[&["1", "0"], &["0", "(1+x1)^2"]], 2)).unwrap();
        let metric = PhaseMetric::g2(&g).unwrap();
        let omega = two_form_from_matrix(&mat(&[&["0", "x1"], &["-x1", "0"]], 2)).unwrap();
        let (theta, w) = theta_lift(&omega, metric.nonlinear_connection(), &metric).unwrap();
        let mut expected = PhaseForm::pullback(&omega, metric.frame()).body().clone();
        for i in 0..2 {
            expected.add_indexed(&[i, 2 + i], FiberScalar::one());
        }
        assert_eq!(theta.body(), &expected);
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { FiberScalar::one() } else { FiberScalar::zero() };
                assert_eq!(w.xp(i, j), e);
            }
        }
    }

    #[test]
    fn foliated_lift_cases() {
        let ident = mat(&[&["1", "0"], &["0", "1"]], 3);
        let wc = mat(&[&["0", "1"], &["-1", "0"]], 3);
        let chart = FoliationChart::new(3, 2, ident.clone(), wc.clone()).unwrap();
        let w = foliated_lift(&chart);
        assert_eq!(w, PhaseMultivector::from_base(&chart.base_bivector(), Frame::Natural));
        let bent = mat(&[&["1+x3", "0"], &["0", "1+x2"]], 3);
        let chart = FoliationChart::new(3, 2, bent, wc).unwrap();
        let w = foliated_lift(&chart);
        assert!(!w.pp(1, 2).is_zero());
        let singular = mat(&[&["x1", "0"], &["0", "0"]], 3);
        assert!(FoliationChart::new(3, 2, singular, ident).is_err());
    }

    #[test]
    fn perturb_round_trip_blocks() {
        let w = lift_w2(&symplectic_plane(), &LinearConnection::zero(2)).unwrap();
        let zero3 = Tensor::zeros(2, 3);
        let zero4 = Tensor::zeros(2, 4);
        assert_eq!(perturb_graded(&w, &zero3, &zero4).unwrap(), w);
        let mut t = Tensor::zeros(2, 4);
        t.set(&[0, 1, 0, 1], b("x1", 2));
        t.set(&[1, 0, 0, 1], b("x1", 2));
        t.set(&[0, 1, 1, 0], b("-x1", 2));
        t.set(&[1, 0, 1, 0], b("-x1", 2));
        let p = perturb_graded(&w, &zero3, &t).unwrap();
        assert_eq!(p.pp(0, 1), pp_monomial(0, 1).mul_base(&b("2*x1", 2)));
        let mut bad = Tensor::zeros(2, 4);
        bad.set(&[0, 1, 0, 1], BaseScalar::one());
        assert!(perturb_graded(&w, &zero3, &bad).is_err());
    }
}

use proptest::prelude::*;

use cotlift::base_geometry::{bivector_from_matrix, contravariant_from_linear, LinearConnection};
use cotlift::calculus::{jacobiator, schouten, sym_bracket};
use cotlift::lifts::{lift_w1, lift_w2, lift_w2_closed_form};
use cotlift::phase_geometry::NonlinearConnection;
use cotlift::random;
use cotlift::symexpr::{BaseScalar, FiberScalar};
use cotlift::verify::{decompose, is_semi_poisson};
use cotlift::workbench::GeometryManifest;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn decomposition_reassembles(seed in any::<u64>(), n in 2usize..4) {
        let mut rng = random::rng(seed);
        let w = random::bivector(&mut rng, n, 1);
        let g = random::symmetric_connection(&mut rng, n, 1);
        let lift = lift_w2(&w, &g).unwrap();
        let d = decompose(&lift).unwrap();
        prop_assert_eq!(d.reassemble(), lift);
        prop_assert_eq!(d.base_bivector(), w);
    }

    #[test]
    fn jacobiator_is_the_cyclic_sum(seed in any::<u64>(), n in 3usize..5) {
        let mut rng = random::rng(seed);
        let w = random::bivector(&mut rng, n, 2);
        let jac = jacobiator(&w);
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let mut direct = BaseScalar::zero();
                    for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
                        for h in 0..n {
                            direct = direct.add(&w.component(&[h, c]).mul(&w.component(&[a, b]).partial(h)));
                        }
                    }
                    prop_assert_eq!(jac.component(&[i, j, k]), direct);
                }
            }
        }
    }

    #[test]
    fn schouten_is_symmetric_on_bivectors(seed in any::<u64>(), n in 2usize..4) {
        let mut rng = random::rng(seed);
        let a = random::bivector(&mut rng, n, 2);
        let b = random::bivector(&mut rng, n, 2);
        prop_assert_eq!(schouten(&a, &b).unwrap(), schouten(&b, &a).unwrap());
    }

    #[test]
    fn phase_bracket_obeys_leibniz(seed in any::<u64>(), n in 2usize..4) {
        let mut rng = random::rng(seed);
        let w = random::bivector(&mut rng, n, 1);
        let g = random::symmetric_connection(&mut rng, n, 1);
        let lift = lift_w2(&w, &g).unwrap();
        let f = random::fiber_homogeneous(&mut rng, n, 1, 1, 3);
        let u = random::fiber_homogeneous(&mut rng, n, 2, 1, 3);
        let v = random::fiber_homogeneous(&mut rng, n, 0, 2, 3);
        let lhs = lift.pair(&f, &u.mul(&v));
        let rhs = lift.pair(&f, &u).mul(&v).add(&u.mul(&lift.pair(&f, &v)));
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(lift.pair(&f, &u), lift.pair(&u, &f).neg());
    }

    #[test]
    fn sym_bracket_is_antisymmetric(seed in any::<u64>(), n in 1usize..4, dq in 0u32..3, dh in 0u32..3) {
        let mut rng = random::rng(seed);
        let q = random::sym_tensor(&mut rng, n, dq, 2);
        let h = random::sym_tensor(&mut rng, n, dh, 2);
        let qh = sym_bracket(&q, &h);
        let hq = sym_bracket(&h, &q);
        prop_assert!(qh.add(&hq).is_zero());
    }

    #[test]
    fn lifts_of_planar_bivectors_are_semi_poisson(seed in any::<u64>()) {
        // Every bivector on a two-dimensional base is Poisson.
        let mut rng = random::rng(seed);
        let w = random::bivector(&mut rng, 2, 2);
        let g = random::symmetric_connection(&mut rng, 2, 1);
        let w2 = lift_w2(&w, &g).unwrap();
        prop_assert!(is_semi_poisson(&w2).verdict.holds());
        let w1 = lift_w1(&w, &contravariant_from_linear(&w, &g)).unwrap();
        prop_assert!(is_semi_poisson(&w1).verdict.holds());
    }

    #[test]
    fn w2_shares_psi_with_w1(seed in any::<u64>(), n in 2usize..4) {
        let mut rng = random::rng(seed);
        let w = random::bivector(&mut rng, n, 1);
        let g = random::symmetric_connection(&mut rng, n, 1);
        let a = decompose(&lift_w2(&w, &g).unwrap()).unwrap();
        let b = decompose(&lift_w1(&w, &contravariant_from_linear(&w, &g)).unwrap()).unwrap();
        prop_assert_eq!(&a.c, &b.c);
        prop_assert_eq!(&a.b, &b.b);
        prop_assert_eq!(&a.eta, &b.eta);
    }

    #[test]
    fn frame_change_round_trips(seed in any::<u64>(), n in 2usize..4) {
        let mut rng = random::rng(seed);
        let w = random::bivector(&mut rng, n, 1);
        let g = random::symmetric_connection(&mut rng, n, 1);
        let lift = lift_w2(&w, &g).unwrap();
        let nl = std::sync::Arc::new(random::nonlinear_connection(&mut rng, n, 1, 2));
        prop_assert_eq!(lift.to_adapted(&nl).to_natural(), lift);
    }

    #[test]
    fn manifests_round_trip(seed in any::<u64>(), n in 2usize..4) {
        let mut rng = random::rng(seed);
        let mut m = GeometryManifest::empty("random", n).unwrap();
        m.description = format!("seed {seed}");
        m.poisson = Some(random::bivector(&mut rng, n, 2));
        m.two_form = Some(random::two_form(&mut rng, n, 1));
        m.linear_connection = Some(random::symmetric_connection(&mut rng, n, 1));
        m.nonlinear_connection = Some(random::nonlinear_connection(&mut rng, n, 1, 2));
        let back = GeometryManifest::parse(&m.to_toml()).unwrap();
        prop_assert_eq!(back, m);
    }
}

#[test]
fn closed_form_misses_torsion() {
    let one = BaseScalar::one();
    let zero = BaseScalar::zero();
    let w = bivector_from_matrix(&[vec![zero.clone(), one.clone()], vec![one.neg(), zero.clone()]]).unwrap();
    let g = LinearConnection::from_fn(2, false, |k, i, j| if (k, i, j) == (0, 0, 1) { one.clone() } else { zero.clone() })
        .unwrap();
    assert!(!g.is_torsion_free());
    let a = lift_w2(&w, &g).unwrap();
    let b = lift_w2_closed_form(&w, &g).unwrap();
    assert_ne!(a, b);

    // Its symmetric part shows no discrepancy.
    let half = BaseScalar::from_ratio(1, 2);
    let s = LinearConnection::from_fn(2, true, |k, i, j| {
        if k == 0 && (i, j) != (0, 0) && (i, j) != (1, 1) { half.clone() } else { zero.clone() }
    })
    .unwrap();
    assert_eq!(lift_w2(&w, &s).unwrap(), lift_w2_closed_form(&w, &s).unwrap());
}

#[test]
fn linear_nonlinear_connection_is_linear_in_momenta() {
    let mut rng = random::rng(11);
    let g = random::symmetric_connection(&mut rng, 3, 2);
    let nl = NonlinearConnection::from_linear(&g).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let expected = (0..3).fold(FiberScalar::zero(), |acc, k| {
                acc.sub(&FiberScalar::momentum(k).mul_base(g.get(k, i, j)))
            });
            assert_eq!(*nl.get(i, j), expected);
        }
    }
}

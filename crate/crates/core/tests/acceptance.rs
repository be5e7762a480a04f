//! Acceptance suite: one line per criterion, with its tolerance and time
//! limit. Criteria listed in `KNOWN_DEVIATIONS` are expected to fail; the run
//! is red if any other criterion fails or if a listed one starts passing.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cotlift::base_geometry::{contravariant_from_linear, curvature, LinearConnection, Multivector};
use cotlift::calculus::{jacobiator, lie_derivative_scalar, sym_bracket, sym_bracket_expand};
use cotlift::base_geometry::sym_derivative;
use cotlift::exterior::{Multi, Space};
use cotlift::lifts::{lift_w1, lift_w2, lift_w2_closed_form, theta_lift};
use cotlift::phase_geometry::{
    k_field, phase_codifferential, phase_curvature, NonlinearConnection, PhaseForm, PhaseMetric,
};
use cotlift::random::{self, TestRng};
use cotlift::symexpr::{BaseScalar, FiberScalar};
use cotlift::verify::{is_poisson, is_semi_poisson, nabla_two_form, shape_of, Shape, Verdict};
use cotlift::workbench::{build_lift, catalog, run_suite, Condition, LiftKind, Lifted};

/// Criteria that fail for reasons analysed in the project notes.
const KNOWN_DEVIATIONS: &[(u32, &str)] = &[(
    4,
    "the trace condition for G1 and the curvature conditions for G2 are not necessary on curved or non-unimodular charts",
)];

struct Outcome {
    pass: bool,
    detail: String,
    extra: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
            extra: Vec::new(),
        }
    }
}

fn criterion_1() -> Outcome {
    let mut rng = random::rng(1);
    let mut agree = 0;
    let total = 120;
    let mut first_bad = None;
    for t in 0..total {
        let n = 1 + t % 3;
        let q = random::sym_tensor(&mut rng, n, (t % 4) as u32, 2);
        let h = random::sym_tensor(&mut rng, n, ((t / 4) % 4) as u32, 2);
        if sym_bracket(&q, &h) == sym_bracket_expand(&q, &h) {
            agree += 1;
        } else if first_bad.is_none() {
            first_bad = Some(t);
        }
    }
    Outcome::new(
        agree == total,
        format!("routes agree on {agree}/{total} random pairs (n ≤ 3, degrees ≤ 3), exact; first mismatch {first_bad:?}"),
    )
}

fn random_w_and_gamma(rng: &mut TestRng, n: usize) -> (Multivector, LinearConnection) {
    (random::bivector(rng, n, 2), random::symmetric_connection(rng, n, 2))
}

fn criterion_2() -> Outcome {
    let mut rng = random::rng(2);
    let total = 24;
    let mut agree = 0;
    for t in 0..total {
        let n = 2 + t % 2;
        let (w, gamma) = random_w_and_gamma(&mut rng, n);
        let a = lift_w2(&w, &gamma).expect("route A");
        let b = lift_w2_closed_form(&w, &gamma).expect("closed form");
        if a == b {
            agree += 1;
        }
    }
    Outcome::new(
        agree == total,
        format!("½ L_K W0 equals the closed form on {agree}/{total} random (w, symmetric Γ), degree ≤ 2, n ≤ 3, exact"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = random::rng(3);
    let total = 60;
    let mut agree = 0;
    for t in 0..total {
        let n = 1 + t % 3;
        let (w, gamma) = random_w_and_gamma(&mut rng, n);
        let q = random::sym_tensor(&mut rng, n, (t % 4) as u32, 2);
        let k = k_field(&w, &gamma);
        let lhs = lie_derivative_scalar(k.body(), q.tilde());
        let rhs = sym_derivative(&contravariant_from_linear(&w, &gamma), &q);
        if lhs == *rhs.tilde() {
            agree += 1;
        }
    }
    Outcome::new(
        agree == total,
        format!("L_K Q~ equals (ˢD Q)~ on {agree}/{total} random Q of degree ≤ 3, exact"),
    )
}

fn criterion_4() -> Outcome {
    let suite = run_suite(&catalog()).expect("catalog runs");
    let groups: [(&str, Condition); 5] = [
        ("cond-3-8 ⇔ [wᴴ,wᴴ]=0", Condition::Cond38),
        ("cond-3-12 ⇔ [wᴴ,W0]=0", Condition::Cond312),
        ("prop-4-2 ⇔ [♯G1 Θ, ♯G1 Θ]=0", Condition::Prop42),
        ("prop-4-15 ⇔ [♯G2 Θ, ♯G2 Θ]=0", Condition::Prop415),
        ("graded-jacobi ⇔ poisson", Condition::GradedJacobi),
    ];
    let mut all = true;
    let mut extra = Vec::new();
    for (title, cond) in groups {
        let prefix = format!("meta: {}", cond.name());
        let mut entries = BTreeSet::new();
        let mut verdicts = BTreeSet::new();
        let mut disagreements = Vec::new();
        for row in suite.rows.iter().filter(|r| r.condition == cond) {
            let Some(meta) = row.report.meta_checks().find(|m| m.condition.starts_with(&prefix)) else {
                continue;
            };
            entries.insert(row.entry.clone());
            verdicts.insert(row.report.verdict);
            if !meta.verdict.holds() {
                disagreements.push(format!("{} ({})", row.entry, meta.notes.join("; ")));
            }
        }
        let mixed = verdicts.contains(&Verdict::Pass) && verdicts.contains(&Verdict::Fail);
        let ok = disagreements.is_empty() && entries.len() >= 4 && mixed;
        all &= ok;
        extra.push(format!(
            "{} {title}: {} entries, mixed verdicts {mixed}, disagreements {}",
            if ok { "PASS" } else { "FAIL" },
            entries.len(),
            if disagreements.is_empty() { "none".to_string() } else { disagreements.join(", ") }
        ));
    }
    let mut o = Outcome::new(all, "meta-oracle verdict equality on the catalog, exact");
    o.extra = extra;
    o
}

fn criterion_5() -> Outcome {
    let flat = catalog().into_iter().find(|m| m.name == "flat-symplectic-r2").unwrap();
    let so3 = catalog().into_iter().find(|m| m.name == "so3-dual").unwrap();
    let lifts = |m: &cotlift::workbench::GeometryManifest| {
        let w = m.poisson.clone().unwrap();
        let g = LinearConnection::zero(m.n);
        let w1 = lift_w1(&w, &contravariant_from_linear(&w, &g)).unwrap();
        let w2 = lift_w2(&w, &g).unwrap();
        (w1, w2)
    };
    let (a1, a2) = lifts(&flat);
    let (b1, b2) = lifts(&so3);
    let diff = b2.sub(&b1).unwrap();
    let mut witness: Vec<(Vec<usize>, String)> =
        diff.body().terms().map(|(b, c)| (b.indices(), c.to_string())).collect();
    witness.sort();
    let space = Space::Phase(3);
    let shown = witness.first().map(|(idx, c)| {
        let labels: Vec<String> = idx.iter().map(|&a| space.label(a)).collect();
        format!("({}) = {c}", labels.join(","))
    });
    Outcome::new(
        a1 == a2 && !diff.is_zero(),
        format!(
            "W1 = W2 on flat-symplectic-r2: {}; W1 ≠ W2 on so3-dual with witness {}",
            a1 == a2,
            shown.unwrap_or_else(|| "none".into())
        ),
    )
}

fn graded_lifts() -> Vec<(String, LiftKind, cotlift::phase_geometry::PhaseBivector)> {
    let mut out = Vec::new();
    for m in catalog() {
        for &kind in LiftKind::ALL {
            if let Ok(Lifted::Phase(w)) = build_lift(&m, kind) {
                out.push((m.name.clone(), kind, w));
            }
        }
    }
    out
}

fn criterion_6() -> Outcome {
    let mut rng = random::rng(6);
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut lifts = 0;
    for (name, kind, w) in graded_lifts() {
        if shape_of(&w) != Shape::Graded {
            continue;
        }
        lifts += 1;
        let n = w.dim();
        for h in 0..3u32 {
            for k in 0..3u32 {
                for _ in 0..2 {
                    let f = random::fiber_homogeneous(&mut rng, n, h, 1, 3);
                    let g = random::fiber_homogeneous(&mut rng, n, k, 1, 3);
                    let b = w.pair(&f, &g);
                    checked += 1;
                    if !(b.is_zero() || b.is_homogeneous(h + k)) {
                        bad.push(format!("{name}/{kind} ({h},{k})"));
                    }
                }
            }
        }
    }
    Outcome::new(
        bad.is_empty() && lifts > 0,
        format!("{checked} brackets over {lifts} graded catalog lifts land in HP_(h+k); violations {bad:?}"),
    )
}

/// Checks the frame identities on all coordinate functions.
fn frame_identities(nl: &NonlinearConnection) -> Vec<String> {
    let n = nl.dim();
    let pc = phase_curvature(nl);
    let mut bad = Vec::new();
    let coords: Vec<FiberScalar> = (0..n)
        .map(FiberScalar::coord)
        .chain((0..n).map(FiberScalar::momentum))
        .collect();
    for i in 0..n {
        for j in 0..n {
            for f in &coords {
                let lhs = nl.delta(i, &nl.delta(j, f)).sub(&nl.delta(j, &nl.delta(i, f)));
                let rhs = (0..n).fold(FiberScalar::zero(), |acc, k| acc.sub(&pc.r(k, i, j).mul(&f.partial_p(k))));
                if lhs != rhs {
                    bad.push(format!("[δ{},δ{}]", i + 1, j + 1));
                }
                let lhs = nl.delta(i, &f.partial_p(j)).sub(&nl.delta(i, f).partial_p(j));
                let rhs = (0..n).fold(FiberScalar::zero(), |acc, k| acc.sub(&pc.phi(j, i, k).mul(&f.partial_p(k))));
                if lhs != rhs {
                    bad.push(format!("[δ{},∂p{}]", i + 1, j + 1));
                }
            }
            for k in 0..n {
                let cyc = pc.r(k, i, j).add(pc.r(i, j, k)).add(pc.r(j, k, i));
                if !cyc.is_zero() {
                    bad.push(format!("Bianchi ({},{},{})", k + 1, i + 1, j + 1));
                }
            }
        }
    }
    bad
}

fn linear_identities(gamma: &LinearConnection) -> Vec<String> {
    let n = gamma.dim();
    let nl = NonlinearConnection::from_linear(gamma).unwrap();
    let pc = phase_curvature(&nl);
    let r = curvature(gamma);
    let mut bad = frame_identities(&nl);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let expected = (0..n).fold(FiberScalar::zero(), |acc, h| {
                    acc.sub(&FiberScalar::momentum(h).mul_base(r.get(&[h, k, i, j])))
                });
                if *pc.r(k, i, j) != expected {
                    bad.push(format!("R_kij vs curvature ({},{},{})", k + 1, i + 1, j + 1));
                }
                if *pc.phi(k, i, j) != FiberScalar::from_base(gamma.get(k, i, j).clone()) {
                    bad.push(format!("Φ vs Γ ({},{},{})", k + 1, i + 1, j + 1));
                }
            }
        }
    }
    bad
}

fn criterion_7() -> Outcome {
    let mut rng = random::rng(7);
    let mut bad = Vec::new();
    let mut count = (0, 0, 0);
    for m in catalog() {
        if let Some(g) = &m.linear_connection {
            count.0 += 1;
            bad.extend(linear_identities(g).into_iter().map(|b| format!("{}: {b}", m.name)));
        }
        if let Some(g) = &m.metric {
            count.0 += 1;
            let lc = cotlift::base_geometry::levi_civita(g).unwrap();
            bad.extend(linear_identities(&lc).into_iter().map(|b| format!("{} (Levi-Civita): {b}", m.name)));
        }
    }
    for t in 0..12 {
        let n = 2 + t % 2;
        let g = random::symmetric_connection(&mut rng, n, 2);
        count.1 += 1;
        bad.extend(linear_identities(&g).into_iter().map(|b| format!("random Γ #{t}: {b}")));
        let nl = random::nonlinear_connection(&mut rng, n, 2, 2);
        count.2 += 1;
        bad.extend(frame_identities(&nl).into_iter().map(|b| format!("random N #{t}: {b}")));
    }
    Outcome::new(
        bad.is_empty(),
        format!(
            "frame brackets, Bianchi, R = −p R^h and Φ = Γ on {} catalog, {} random linear and {} random nonlinear connections, exact; failures {:?}",
            count.0,
            count.1,
            count.2,
            bad.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = random::rng(8);
    let total = 12;
    let mut agree = 0;
    for t in 0..total {
        let n = 2 + t % 2;
        let gamma = random::trace_free_connection(&mut rng, n, 1);
        let omega = random::two_form(&mut rng, n, 1);
        let metric = PhaseMetric::g1_from_connection(&gamma).unwrap();
        let (theta, _) = theta_lift(&omega, metric.nonlinear_connection().as_ref(), &metric).unwrap();
        let tt = theta.wedge(&theta).unwrap();
        let lhs = phase_codifferential(&metric, &tt).unwrap();
        let nw = nabla_two_form(&gamma, &omega);
        let mut body = Multi::zero(Space::Phase(n));
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let cyc = nw
                        .get(&[i, j, k])
                        .add(nw.get(&[j, k, i]))
                        .add(nw.get(&[k, i, j]))
                        .mul(&BaseScalar::from_int(2));
                    body.add_indexed(&[i, j, k], FiberScalar::from_base(cyc));
                }
            }
        }
        let rhs = PhaseForm::from_multi(metric.frame(), body);
        if lhs.sub(&rhs).map(|d| d.is_zero()).unwrap_or(false) {
            agree += 1;
        }
    }
    Outcome::new(
        agree == total,
        format!("δ_G1(Θ∧Θ) equals the displayed right-hand side on {agree}/{total} random (trace-free Γ, ω), n ≤ 3, exact"),
    )
}

fn criterion_9() -> Outcome {
    let mut checked = 0;
    let mut non_poisson = Vec::new();
    let mut bad = Vec::new();
    for (name, kind, w) in graded_lifts() {
        if shape_of(&w) == Shape::NotPolynomial {
            continue;
        }
        let natural = w.to_natural();
        let n = natural.dim();
        let mut xx = Multi::zero(Space::Base(n));
        for i in 0..n {
            for j in i + 1..n {
                if let Some(c) = natural.xx(i, j).as_base() {
                    xx.add_indexed(&[i, j], c);
                }
            }
        }
        if !jacobiator(&xx).is_zero() {
            continue;
        }
        checked += 1;
        if !is_semi_poisson(&w).verdict.holds() {
            bad.push(format!("{name}/{kind}"));
        }
        if !is_poisson(&w).verdict.holds() {
            non_poisson.push(format!("{name}/{kind}"));
        }
    }
    Outcome::new(
        bad.is_empty() && non_poisson.len() >= 2,
        format!(
            "{checked} polynomially graded lifts with Poisson xx block are semi-Poisson ({} of them not Poisson); failures {bad:?}",
            non_poisson.len()
        ),
    )
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let first = run_suite(&catalog()).expect("catalog runs");
    let second = run_suite(&catalog()).expect("catalog runs");
    let elapsed = start.elapsed() / 2;
    let same = first.verdict_table() == first.expected_table();
    let stable = first.verdict_table() == second.verdict_table();
    Outcome::new(
        same && stable && elapsed < Duration::from_secs(300),
        format!(
            "{} checks; table matches shipped expectations byte for byte: {same}; identical across runs: {stable}; {:.2} s per run (limit 300 s)",
            first.rows.len(),
            elapsed.as_secs_f64()
        ),
    )
}

type Criterion = (u32, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    // libtest flags such as --nocapture or a filter are accepted and ignored.
    let criteria: [Criterion; 10] = [
        (1, Duration::from_secs(10), criterion_1),
        (2, Duration::from_secs(30), criterion_2),
        (3, Duration::from_secs(10), criterion_3),
        (4, Duration::from_secs(120), criterion_4),
        (5, Duration::from_secs(60), criterion_5),
        (6, Duration::from_secs(60), criterion_6),
        (7, Duration::from_secs(60), criterion_7),
        (8, Duration::from_secs(120), criterion_8),
        (9, Duration::from_secs(60), criterion_9),
        (10, Duration::from_secs(300), criterion_10),
    ];
    let known: BTreeMap<u32, &str> = KNOWN_DEVIATIONS.iter().copied().collect();
    let mut unexpected = 0;
    for (id, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = outcome.pass && in_time;
        let status = if pass { "PASS" } else { "FAIL" };
        println!(
            "acceptance {id:>2}: {status}  {}  [{:.2} s, limit {} s]",
            outcome.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
        for line in &outcome.extra {
            println!("               {line}");
        }
        match (pass, known.get(&id)) {
            (false, Some(why)) => println!("               known deviation: {why}"),
            (false, None) => unexpected += 1,
            (true, Some(_)) => {
                println!("               listed as a known deviation but passed; update the list");
                unexpected += 1;
            }
            (true, None) => {}
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} unexpected acceptance outcome(s)");
        ExitCode::FAILURE
    }
}

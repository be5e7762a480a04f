//! Manifests, the shipped catalog, and dispatch from `(lift, condition)`
//! pairs to the deciders in [`crate::verify`].

mod catalog;
mod manifest;

use std::fmt::{self, Display, Write as _};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::base_geometry::{contravariant_from_linear, Multivector};
use crate::calculus::schouten_phase;
use crate::error::{Error, Result};
use crate::lifts::{foliated_lift, horizontal_lift, lift_w1, lift_w2, theta_lift};
use crate::phase_geometry::{canonical_w0, Frame, MetricKind, PhaseBivector, PhaseMetric, PhaseMultivector};
use crate::verify::{self, Report, Verdict};

pub use catalog::{catalog, catalog_entry, catalog_source, CATALOG_NAMES};
pub use manifest::{parse_verdict, Expectation, GeometryManifest};

macro_rules! named_enum {
    ($(#[$m:meta])* $name:ident, $kind:literal, { $($var:ident => $s:literal),* $(,)? }) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, clap::ValueEnum)]
        pub enum $name {
            $(#[value(name = $s)] $var),*
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$var),*];

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$var => $s),*
                }
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($name::$var),)*
                    _ => Err(Error::Unknown { kind: $kind.into(), name: s.into() }),
                }
            }
        }

        impl Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_str(self.name())
            }
        }
    };
}

named_enum!(
    /// Which bivector a check is run on.
    LiftKind, "lift", {
        None => "none",
        W1 => "w1",
        W2 => "w2",
        Horizontal => "horizontal",
        Foliated => "foliated",
        ThetaG1 => "theta-g1",
        ThetaG2 => "theta-g2",
    }
);

named_enum!(
    Condition, "condition", {
        Poisson => "poisson",
        SemiPoisson => "semi-poisson",
        Shape => "shape",
        PiRelated => "pi-related",
        GradedJacobi => "graded-jacobi",
        Cond38 => "cond-3-8",
        Cond312 => "cond-3-12",
        Prop39 => "prop-3-9",
        Prop42 => "prop-4-2",
        Prop415 => "prop-4-15",
        Remark45 => "remark-4-5",
        ScalarCurvature => "scalar-curvature",
    }
);

named_enum!(
    FrameChoice, "frame", {
        Natural => "natural",
        Adapted => "adapted",
    }
);

/// Result of applying a lift to a manifest.
#[derive(Clone, Debug, PartialEq)]
pub enum Lifted {
    Base(Multivector),
    Phase(PhaseBivector),
}

impl Lifted {
    pub fn phase(&self) -> Option<&PhaseBivector> {
        match self {
            Lifted::Phase(w) => Some(w),
            Lifted::Base(_) => None,
        }
    }
}

fn theta_metric(m: &GeometryManifest, kind: MetricKind) -> Result<PhaseMetric> {
    let g = m.require_metric()?;
    match kind {
        MetricKind::G1 => PhaseMetric::g1(g),
        MetricKind::G2 => PhaseMetric::g2(g),
    }
}

pub fn build_lift(m: &GeometryManifest, kind: LiftKind) -> Result<Lifted> {
    Ok(match kind {
        LiftKind::None => Lifted::Base(m.require_poisson()?.clone()),
        LiftKind::W1 => {
            let w = m.require_poisson()?;
            let d = contravariant_from_linear(w, m.require_linear_connection()?);
            Lifted::Phase(lift_w1(w, &d)?)
        }
        LiftKind::W2 => Lifted::Phase(lift_w2(m.require_poisson()?, m.require_linear_connection()?)?),
        LiftKind::Horizontal => {
            Lifted::Phase(horizontal_lift(m.require_poisson()?, &m.effective_nonlinear_connection()?)?)
        }
        LiftKind::Foliated => Lifted::Phase(foliated_lift(m.require_foliation()?)),
        LiftKind::ThetaG1 | LiftKind::ThetaG2 => {
            let which = if kind == LiftKind::ThetaG1 { MetricKind::G1 } else { MetricKind::G2 };
            let metric = theta_metric(m, which)?;
            let nl = metric.nonlinear_connection().clone();
            Lifted::Phase(theta_lift(m.require_two_form()?, &nl, &metric)?.1)
        }
    })
}

/// The nonlinear connection defining the adapted frame for a lift.
fn adapted_frame_for(m: &GeometryManifest, kind: LiftKind) -> Result<Frame> {
    let nl = match kind {
        LiftKind::ThetaG1 => theta_metric(m, MetricKind::G1)?.nonlinear_connection().clone(),
        LiftKind::ThetaG2 => theta_metric(m, MetricKind::G2)?.nonlinear_connection().clone(),
        _ => Arc::new(m.effective_nonlinear_connection()?),
    };
    Ok(Frame::Adapted(nl))
}

/// Expresses a phase bivector in the requested frame.
pub fn in_frame(m: &GeometryManifest, kind: LiftKind, w: &PhaseMultivector, frame: FrameChoice) -> Result<PhaseMultivector> {
    Ok(match frame {
        FrameChoice::Natural => w.to_natural(),
        FrameChoice::Adapted => w.in_frame(&adapted_frame_for(m, kind)?),
    })
}

fn need_phase(lifted: &Lifted, condition: Condition) -> Result<&PhaseBivector> {
    lifted.phase().ok_or_else(|| {
        Error::Manifest(format!("condition `{condition}` concerns a bivector on T*M; choose a lift"))
    })
}

fn allowed(lift: LiftKind, condition: Condition, ok: &[LiftKind]) -> Result<()> {
    if ok.contains(&lift) {
        Ok(())
    } else {
        let names: Vec<&str> = ok.iter().map(|k| k.name()).collect();
        Err(Error::Manifest(format!(
            "condition `{condition}` is stated for lift {}, not `{lift}`",
            names.join(" or ")
        )))
    }
}

/// Decides `condition` for the bivector produced by `lift`.
pub fn run_check(m: &GeometryManifest, lift: LiftKind, condition: Condition) -> Result<Report> {
    use LiftKind as L;
    let start = Instant::now();
    let mut report = match condition {
        Condition::Poisson => match build_lift(m, lift)? {
            Lifted::Base(w) => verify::is_poisson_base(&w),
            Lifted::Phase(w) => verify::is_poisson(&w),
        },
        Condition::SemiPoisson => verify::is_semi_poisson(need_phase(&build_lift(m, lift)?, condition)?),
        Condition::Shape => verify::classify_shape(need_phase(&build_lift(m, lift)?, condition)?),
        Condition::GradedJacobi => verify::check_graded_jacobi(need_phase(&build_lift(m, lift)?, condition)?),
        Condition::PiRelated => {
            let lifted = build_lift(m, lift)?;
            let w = match lift {
                L::ThetaG1 => Multivector::zero(crate::exterior::Space::Base(m.n)),
                L::ThetaG2 => verify::sharp_metric_two_form(m.require_metric()?, m.require_two_form()?),
                _ => m.require_poisson()?.clone(),
            };
            verify::check_pi_related(need_phase(&lifted, condition)?, &w)
        }
        Condition::Cond38 => {
            allowed(lift, condition, &[L::None, L::Horizontal])?;
            let nl = m.effective_nonlinear_connection()?;
            verify::check_horizontal(m.require_poisson()?, &nl, m.inducing_linear_connection())?
        }
        Condition::Cond312 => {
            allowed(lift, condition, &[L::None, L::Horizontal])?;
            verify::check_compat_w0(m.require_poisson()?, &m.effective_nonlinear_connection()?)?
        }
        Condition::Prop39 => {
            allowed(lift, condition, &[L::None, L::Horizontal])?;
            verify::check_prop_3_9(m.require_poisson()?, m.require_linear_connection()?)?
        }
        Condition::Prop42 => {
            allowed(lift, condition, &[L::None, L::ThetaG1])?;
            verify::check_section4(m.require_metric()?, m.require_two_form()?, MetricKind::G1)?
        }
        Condition::Prop415 => {
            allowed(lift, condition, &[L::None, L::ThetaG2])?;
            verify::check_section4(m.require_metric()?, m.require_two_form()?, MetricKind::G2)?
        }
        Condition::Remark45 => {
            allowed(lift, condition, &[L::None, L::ThetaG2])?;
            verify::check_remark_4_5(m.require_metric()?, m.require_two_form()?)?
        }
        Condition::ScalarCurvature => {
            allowed(lift, condition, &[L::None, L::ThetaG2])?;
            verify::check_scalar_curvature(m.require_metric()?, m.require_two_form()?)?
        }
    };
    report.condition = condition.name().to_string();
    report.elapsed_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

/// Bivectors that `bracket` accepts by name: `w0`, `pullback` (`w` with no
/// fiber part) and any lift other than `none`.
pub fn named_bivector(m: &GeometryManifest, name: &str) -> Result<PhaseBivector> {
    match name {
        "w0" => Ok(canonical_w0(m.n)),
        "pullback" => Ok(PhaseMultivector::from_base(m.require_poisson()?, Frame::Natural)),
        other => match build_lift(m, other.parse()?)? {
            Lifted::Phase(w) => Ok(w),
            Lifted::Base(_) => Err(Error::Unknown {
                kind: "bivector".into(),
                name: other.into(),
            }),
        },
    }
}

pub fn bracket(m: &GeometryManifest, left: &str, right: &str) -> Result<PhaseMultivector> {
    schouten_phase(&named_bivector(m, left)?.to_natural(), &named_bivector(m, right)?.to_natural())
}

/// Component listing of a phase multivector, one line per nonzero
/// component in lexicographic order.
pub fn render_components(w: &PhaseMultivector) -> String {
    let n = w.dim();
    let label = |a: usize| match (w.frame(), a < n) {
        (Frame::Natural, true) => format!("d/dx{}", a + 1),
        (Frame::Adapted(_), true) => format!("δ/δx{}", a + 1),
        (_, false) => format!("d/dp{}", a - n + 1),
    };
    let mut terms: Vec<(Vec<usize>, String)> =
        w.body().terms().map(|(b, c)| (b.indices(), c.to_string())).collect();
    terms.sort();
    let mut out = format!("frame: {}\n", w.frame().name());
    if terms.is_empty() {
        out.push_str("0\n");
    }
    for (idx, c) in terms {
        let names: Vec<String> = idx.iter().map(|&a| label(a)).collect();
        let _ = writeln!(out, "{} : {c}", names.join(" ^ "));
    }
    out
}

/// Serializable block form of a phase bivector (`xp` entry `(i,j)` is the
/// coefficient of the `i`-th horizontal and `j`-th vertical field).
#[derive(Clone, Debug, Serialize)]
pub struct BivectorBlocks {
    pub dimension: usize,
    pub frame: String,
    pub xx: Vec<Vec<String>>,
    pub xp: Vec<Vec<String>>,
    pub pp: Vec<Vec<String>>,
}

impl BivectorBlocks {
    pub fn new(w: &PhaseMultivector) -> Self {
        let n = w.dim();
        let grid = |f: &dyn Fn(usize, usize) -> String| -> Vec<Vec<String>> {
            (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect()
        };
        BivectorBlocks {
            dimension: n,
            frame: w.frame().name().to_string(),
            xx: grid(&|i, j| w.xx(i, j).to_string()),
            xp: grid(&|i, j| w.xp(i, j).to_string()),
            pp: grid(&|i, j| w.pp(i, j).to_string()),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("blocks serialize")
    }
}

pub fn render_decomposition(d: &verify::Decomposition) -> String {
    let n = d.n;
    let mut out = String::new();
    let mut family = |title: &str, t: &crate::base_geometry::Tensor| {
        let _ = writeln!(out, "{title}:");
        let mut any = false;
        for (idx, v) in t.entries() {
            if !v.is_zero() {
                any = true;
                let idx: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
                let _ = writeln!(out, "  ({}) {v}", idx.join(","));
            }
        }
        if !any {
            let _ = writeln!(out, "  0");
        }
    };
    let _ = n;
    family("w[i][j]", &d.w);
    family("phi[i][j]", &d.phi);
    family("A[i][a][j]", &d.a);
    family("eta[i][j]", &d.eta);
    family("B[a][i][j]", &d.b);
    family("C[a][b][i][j]", &d.c);
    let dconn = d.contravariant_connection();
    let mut out2 = String::from("Gamma^{ij}_k of D:\n");
    let mut any = false;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = dconn.get(i, j, k);
                if !v.is_zero() {
                    any = true;
                    let _ = writeln!(out2, "  ({},{},{}) {v}", i + 1, j + 1, k + 1);
                }
            }
        }
    }
    if !any {
        out2.push_str("  0\n");
    }
    out + &out2
}

/// One catalog check and its outcome.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteRow {
    pub entry: String,
    pub lift: LiftKind,
    pub condition: Condition,
    pub expected: Verdict,
    pub report: Report,
}

impl SuiteRow {
    pub fn matches(&self) -> bool {
        self.report.verdict == self.expected
    }

    /// Meta sub-checks that did not agree with the direct computation.
    pub fn meta_disagreements(&self) -> Vec<&Report> {
        self.report.meta_checks().filter(|c| !c.verdict.holds()).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub rows: Vec<SuiteRow>,
    pub elapsed_ms: u64,
}

impl SuiteReport {
    pub fn regressions(&self) -> Vec<&SuiteRow> {
        self.rows.iter().filter(|r| !r.matches()).collect()
    }

    /// Verdict table, free of timings.
    pub fn verdict_table(&self) -> String {
        render_table(self.rows.iter().map(|r| (r.entry.as_str(), r.lift, r.condition, r.report.verdict)))
    }

    pub fn expected_table(&self) -> String {
        render_table(self.rows.iter().map(|r| (r.entry.as_str(), r.lift, r.condition, r.expected)))
    }

    pub fn to_text(&self) -> String {
        let mut out = self.verdict_table();
        let regressions = self.regressions();
        let _ = writeln!(out, "\n{} checks, {} regressions", self.rows.len(), regressions.len());
        for r in regressions {
            let _ = writeln!(
                out,
                "regression: {} {} {}: expected {}, got {}",
                r.entry, r.lift, r.condition, r.expected, r.report.verdict
            );
        }
        for r in &self.rows {
            for m in r.meta_disagreements() {
                let _ = writeln!(out, "meta disagreement: {} {} {}: {}", r.entry, r.lift, r.condition, m.condition);
                for note in &m.notes {
                    let _ = writeln!(out, "  {note}");
                }
            }
        }
        out
    }
}

pub fn render_table<'a>(rows: impl Iterator<Item = (&'a str, LiftKind, Condition, Verdict)>) -> String {
    let mut out = String::new();
    for (entry, lift, condition, verdict) in rows {
        let _ = writeln!(out, "{entry:<28} {:<11} {:<17} {verdict}", lift.name(), condition.name());
    }
    out
}

/// Runs every expectation of every entry concurrently; rows come back in
/// catalog order, then expectation order.
pub fn run_suite(entries: &[GeometryManifest]) -> Result<SuiteReport> {
    let start = Instant::now();
    let jobs: Vec<(&GeometryManifest, &Expectation)> =
        entries.iter().flat_map(|m| m.expected.iter().map(move |e| (m, e))).collect();
    let rows = jobs
        .par_iter()
        .map(|(m, e)| {
            let report = run_check(m, e.lift, e.condition).map_err(|err| {
                Error::Manifest(format!("{} {} {}: {err}", m.name, e.lift, e.condition))
            })?;
            Ok(SuiteRow {
                entry: m.name.clone(),
                lift: e.lift,
                condition: e.condition,
                expected: e.verdict,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        rows,
        elapsed_ms: start.elapsed().as_millis() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn so3() -> GeometryManifest {
        catalog_entry("so3-dual").unwrap()
    }

    #[test]
    fn names_round_trip() {
        for c in Condition::ALL {
            assert_eq!(c.name().parse::<Condition>().unwrap(), *c);
        }
        for l in LiftKind::ALL {
            assert_eq!(l.name().parse::<LiftKind>().unwrap(), *l);
        }
    }

    #[test]
    fn so3_horizontal_checks() {
        let m = so3();
        assert!(run_check(&m, LiftKind::Horizontal, Condition::Poisson).unwrap().verdict.holds());
        let r = run_check(&m, LiftKind::Horizontal, Condition::Cond312).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.checks[0].verdict, Verdict::Fail);
        assert!(!r.checks[0].witnesses.is_empty());
    }

    #[test]
    fn flat_w2_is_graded() {
        let m = catalog_entry("flat-symplectic-r2").unwrap();
        assert!(run_check(&m, LiftKind::W2, Condition::Shape).unwrap().verdict.holds());
    }

    #[test]
    fn missing_block_is_named() {
        let m = GeometryManifest::parse("dimension = 2\npoisson = [[\"0\",\"1\"],[\"-1\",\"0\"]]\n").unwrap();
        match run_check(&m, LiftKind::ThetaG1, Condition::Prop42) {
            Err(Error::MissingBlock(b)) => assert_eq!(b, "metric"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_lift_rejected() {
        assert!(run_check(&so3(), LiftKind::W2, Condition::Cond38).is_err());
        assert!(run_check(&so3(), LiftKind::None, Condition::Shape).is_err());
    }

    #[test]
    fn bracket_of_w0_with_itself_vanishes() {
        assert!(bracket(&so3(), "w0", "w0").unwrap().is_zero());
    }
}

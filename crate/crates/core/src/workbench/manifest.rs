//! TOML geometry manifests. Matrices are row-major arrays of expression
//! strings; tensor indices in the file are 1-based. An omitted block means
//! "not provided", never zero.

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::base_geometry::{
    bivector_from_matrix, bivector_matrix, check_dim, two_form_from_matrix, DiffForm, LinearConnection,
    Metric, Multivector,
};
use crate::error::{Error, Result};
use crate::lifts::FoliationChart;
use crate::phase_geometry::NonlinearConnection;
use crate::symexpr::{parse_base, parse_fiber, BaseScalar, FiberScalar};
use crate::verify::Verdict;

use super::{Condition, LiftKind};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "E: Deserialize<'de>"))]
struct RawManifest<E> {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    description: String,
    dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    poisson: Option<Vec<Vec<E>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metric: Option<Vec<Vec<E>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    two_form: Option<Vec<Vec<E>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nonlinear_connection: Option<Vec<Vec<E>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    linear_connection: Option<RawConnection<E>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    foliation: Option<RawFoliation<E>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    expected: Vec<RawExpected>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "E: Deserialize<'de>"))]
struct RawConnection<E> {
    #[serde(default = "yes")]
    symmetric: bool,
    #[serde(default)]
    entries: Vec<RawGamma<E>>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "E: Deserialize<'de>"))]
struct RawGamma<E> {
    k: usize,
    i: usize,
    j: usize,
    value: E,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "E: Deserialize<'de>"))]
struct RawFoliation<E> {
    leaf_dim: usize,
    frame: Vec<Vec<E>>,
    leaf_bivector: Vec<Vec<E>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpected {
    lift: String,
    condition: String,
    verdict: String,
}

/// Expected verdict for one `(lift, condition)` pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expectation {
    pub lift: LiftKind,
    pub condition: Condition,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryManifest {
    pub name: String,
    pub description: String,
    pub n: usize,
    pub poisson: Option<Multivector>,
    pub linear_connection: Option<LinearConnection>,
    pub metric: Option<Metric>,
    pub two_form: Option<DiffForm>,
    pub nonlinear_connection: Option<NonlinearConnection>,
    pub foliation: Option<FoliationChart>,
    /// Regression baseline; empty for plain manifests.
    pub expected: Vec<Expectation>,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.chars().count(), |p| before[p + 1..].chars().count()) + 1;
    (line, col)
}

/// Reparents an expression error onto the position of the string in `src`.
fn relocate(err: Error, src: &str, span: Range<usize>) -> Error {
    match err {
        Error::Parse { col, msg, .. } => {
            let (line, start) = line_col(src, span.start);
            Error::Parse {
                line,
                col: start + col,
                msg,
            }
        }
        other => other,
    }
}

struct Ctx<'a> {
    src: &'a str,
    n: usize,
}

impl Ctx<'_> {
    fn base(&self, e: &Spanned<String>) -> Result<BaseScalar> {
        parse_base(e.get_ref(), self.n).map_err(|err| relocate(err, self.src, e.span()))
    }

    fn fiber(&self, e: &Spanned<String>) -> Result<FiberScalar> {
        parse_fiber(e.get_ref(), self.n).map_err(|err| relocate(err, self.src, e.span()))
    }

    fn base_matrix(&self, m: &[Vec<Spanned<String>>], what: &str, size: usize) -> Result<Vec<Vec<BaseScalar>>> {
        check_square(m.len(), m.iter().map(Vec::len), size, what)?;
        m.iter().map(|r| r.iter().map(|e| self.base(e)).collect()).collect()
    }
}

fn check_square(rows: usize, lens: impl Iterator<Item = usize>, size: usize, what: &str) -> Result<()> {
    if rows != size {
        return Err(Error::Shape(format!("{what} has {rows} rows, expected {size}")));
    }
    for (i, l) in lens.enumerate() {
        if l != size {
            return Err(Error::Shape(format!("{what} row {} has {l} entries, expected {size}", i + 1)));
        }
    }
    Ok(())
}

fn named(err: Error, block: &str) -> Error {
    match err {
        Error::Symmetry { indices, .. } => Error::Symmetry {
            what: block.to_string(),
            indices,
        },
        other => other,
    }
}

impl GeometryManifest {
    /// Bare manifest with no blocks.
    pub fn empty(name: &str, n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(GeometryManifest {
            name: name.to_string(),
            description: String::new(),
            n,
            poisson: None,
            linear_connection: None,
            metric: None,
            two_form: None,
            nonlinear_connection: None,
            foliation: None,
            expected: Vec::new(),
        })
    }

    pub fn parse(src: &str) -> Result<Self> {
        let raw: RawManifest<Spanned<String>> = toml::from_str(src).map_err(|e| {
            let (line, col) = e.span().map_or((1, 1), |s| line_col(src, s.start));
            Error::Parse {
                line,
                col,
                msg: e.message().to_string(),
            }
        })?;
        let n = raw.dimension;
        check_dim(n)?;
        let cx = Ctx { src, n };
        let mut m = GeometryManifest::empty(&raw.name, n)?;
        m.description = raw.description.clone();
        if let Some(p) = &raw.poisson {
            let mat = cx.base_matrix(p, "poisson", n)?;
            m.poisson = Some(bivector_from_matrix(&mat).map_err(|e| named(e, "poisson"))?);
        }
        if let Some(g) = &raw.metric {
            m.metric = Some(Metric::new(cx.base_matrix(g, "metric", n)?)?);
        }
        if let Some(w) = &raw.two_form {
            let mat = cx.base_matrix(w, "two_form", n)?;
            m.two_form = Some(two_form_from_matrix(&mat).map_err(|e| named(e, "two_form"))?);
        }
        if let Some(nl) = &raw.nonlinear_connection {
            check_square(nl.len(), nl.iter().map(Vec::len), n, "nonlinear_connection")?;
            let mat = nl
                .iter()
                .map(|r| r.iter().map(|e| cx.fiber(e)).collect())
                .collect::<Result<Vec<Vec<_>>>>()?;
            m.nonlinear_connection = Some(NonlinearConnection::new(mat)?);
        }
        if let Some(c) = &raw.linear_connection {
            let mut entries = Vec::with_capacity(c.entries.len());
            for e in &c.entries {
                if [e.k, e.i, e.j].iter().any(|&x| x == 0 || x > n) {
                    let (line, col) = line_col(src, e.value.span().start);
                    return Err(Error::Parse {
                        line,
                        col,
                        msg: format!("connection index ({},{},{}) outside 1..={n}", e.k, e.i, e.j),
                    });
                }
                entries.push((e.k - 1, e.i - 1, e.j - 1, cx.base(&e.value)?));
            }
            m.linear_connection = Some(LinearConnection::from_entries(n, c.symmetric, &entries)?);
        }
        if let Some(f) = &raw.foliation {
            let p = f.leaf_dim;
            if p == 0 || p > n {
                return Err(Error::Shape(format!("leaf dimension {p} for n = {n}")));
            }
            let frame = cx.base_matrix(&f.frame, "foliation frame", p)?;
            let leaf = cx.base_matrix(&f.leaf_bivector, "foliation leaf_bivector", p)?;
            let chart = FoliationChart::new(n, p, frame, leaf)?;
            let w = chart.base_bivector();
            match &m.poisson {
                Some(given) if *given != w => {
                    return Err(Error::Manifest(
                        "poisson block disagrees with the foliation's leafwise bivector".into(),
                    ))
                }
                Some(_) => {}
                None => m.poisson = Some(w),
            }
            m.foliation = Some(chart);
        }
        for e in &raw.expected {
            m.expected.push(Expectation {
                lift: e.lift.parse()?,
                condition: e.condition.parse()?,
                verdict: parse_verdict(&e.verdict)?,
            });
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        GeometryManifest::parse(&src)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Canonical serialization; `parse(to_toml(m)) == m`.
    pub fn to_toml(&self) -> String {
        let n = self.n;
        let strings = |m: &[Vec<BaseScalar>]| -> Vec<Vec<String>> {
            m.iter().map(|r| r.iter().map(ToString::to_string).collect()).collect()
        };
        // A foliation implies the poisson block, so only one of them is written.
        let poisson = match (&self.poisson, &self.foliation) {
            (Some(w), None) => Some(strings(&bivector_matrix(w))),
            _ => None,
        };
        let linear_connection = self.linear_connection.as_ref().map(|c| {
            let mut entries = Vec::new();
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let v = c.get(k, i, j);
                        if v.is_zero() || (c.is_symmetric() && j < i) {
                            continue;
                        }
                        entries.push(RawGamma {
                            k: k + 1,
                            i: i + 1,
                            j: j + 1,
                            value: v.to_string(),
                        });
                    }
                }
            }
            RawConnection {
                symmetric: c.is_symmetric(),
                entries,
            }
        });
        let raw = RawManifest {
            name: self.name.clone(),
            description: self.description.clone(),
            dimension: n,
            poisson,
            metric: self.metric.as_ref().map(|g| strings(g.matrix())),
            two_form: self.two_form.as_ref().map(|w| strings(&bivector_matrix(w))),
            nonlinear_connection: self.nonlinear_connection.as_ref().map(|nl| {
                (0..n)
                    .map(|i| (0..n).map(|j| nl.get(i, j).to_string()).collect())
                    .collect()
            }),
            linear_connection,
            foliation: self.foliation.as_ref().map(|f| RawFoliation {
                leaf_dim: f.leaf_dim(),
                frame: strings(f.frame()),
                leaf_bivector: strings(f.leaf_bivector()),
            }),
            expected: self
                .expected
                .iter()
                .map(|e| RawExpected {
                    lift: e.lift.name().into(),
                    condition: e.condition.name().into(),
                    verdict: e.verdict.name().into(),
                })
                .collect(),
        };
        toml::to_string(&raw).expect("manifest serializes")
    }

    pub fn require_poisson(&self) -> Result<&Multivector> {
        self.poisson.as_ref().ok_or_else(|| Error::MissingBlock("poisson".into()))
    }

    pub fn require_linear_connection(&self) -> Result<&LinearConnection> {
        self.linear_connection
            .as_ref()
            .ok_or_else(|| Error::MissingBlock("linear_connection".into()))
    }

    pub fn require_metric(&self) -> Result<&Metric> {
        self.metric.as_ref().ok_or_else(|| Error::MissingBlock("metric".into()))
    }

    pub fn require_two_form(&self) -> Result<&DiffForm> {
        self.two_form.as_ref().ok_or_else(|| Error::MissingBlock("two_form".into()))
    }

    pub fn require_foliation(&self) -> Result<&FoliationChart> {
        self.foliation.as_ref().ok_or_else(|| Error::MissingBlock("foliation".into()))
    }

    /// The given nonlinear connection, else the one induced by the linear
    /// connection.
    pub fn effective_nonlinear_connection(&self) -> Result<NonlinearConnection> {
        if let Some(nl) = &self.nonlinear_connection {
            return Ok(nl.clone());
        }
        match &self.linear_connection {
            Some(c) => NonlinearConnection::from_linear(c),
            None => Err(Error::MissingBlock("nonlinear_connection (or linear_connection)".into())),
        }
    }

    /// The linear connection, when it is the one inducing the effective
    /// nonlinear connection.
    pub fn inducing_linear_connection(&self) -> Option<&LinearConnection> {
        let c = self.linear_connection.as_ref()?;
        match &self.nonlinear_connection {
            None => Some(c),
            Some(nl) => (NonlinearConnection::from_linear(c).ok().as_ref() == Some(nl)).then_some(c),
        }
    }
}

pub fn parse_verdict(s: &str) -> Result<Verdict> {
    match s {
        "pass" => Ok(Verdict::Pass),
        "fail" => Ok(Verdict::Fail),
        "not-applicable" => Ok(Verdict::NotApplicable),
        _ => Err(Error::Unknown {
            kind: "verdict".into(),
            name: s.into(),
        }),
    }
}

//! Python bindings: manifests, lifts, condition checks and the catalog.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use cotlift::base_geometry::SymTensor;
use cotlift::calculus::{schouten_phase, sym_bracket as core_sym_bracket};
use cotlift::phase_geometry::PhaseMultivector;
use cotlift::symexpr::parse_fiber;
use cotlift::verify;
use cotlift::workbench::{self, BivectorBlocks, Condition, FrameChoice, GeometryManifest, LiftKind, Lifted};

fn err(e: cotlift::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parsed<T: std::str::FromStr<Err = cotlift::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// Outcome of a condition check.
#[pyclass(name = "Report", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyReport(verify::Report);

#[pymethods]
impl PyReport {
    #[getter]
    fn condition(&self) -> &str {
        &self.0.condition
    }

    /// `"pass"`, `"fail"` or `"not-applicable"`.
    #[getter]
    fn verdict(&self) -> &'static str {
        self.0.verdict.name()
    }

    #[getter]
    fn passed(&self) -> bool {
        self.0.verdict.holds()
    }

    /// `(indices, expression)` pairs for nonvanishing components.
    #[getter]
    fn witnesses(&self) -> Vec<(Vec<String>, String)> {
        self.0
            .witnesses
            .iter()
            .map(|w| (w.indices.clone(), w.expression.clone()))
            .collect()
    }

    #[getter]
    fn notes(&self) -> Vec<String> {
        self.0.notes.clone()
    }

    #[getter]
    fn checks(&self) -> Vec<PyReport> {
        self.0.checks.iter().cloned().map(PyReport).collect()
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    fn __repr__(&self) -> String {
        format!("Report({}: {})", self.0.condition, self.0.verdict)
    }
}

/// A multivector on the cotangent bundle, in the natural or an adapted frame.
#[pyclass(name = "PhaseMultivector", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPhase(PhaseMultivector);

#[pymethods]
impl PyPhase {
    #[getter]
    fn dimension(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn frame(&self) -> &'static str {
        self.0.frame().name()
    }

    /// Nonzero components keyed by coordinate labels, e.g. `("x1", "p2")`.
    fn components(&self) -> BTreeMap<Vec<String>, String> {
        let space = self.0.body().space();
        self.0
            .body()
            .terms()
            .map(|(b, c)| (b.indices().into_iter().map(|a| space.label(a)).collect(), c.to_string()))
            .collect()
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// `W(dF, dG)` for functions written over `x1..xn, p1..pn`.
    fn pair(&self, f: &str, g: &str) -> PyResult<String> {
        let n = self.0.dim();
        let f = parse_fiber(f, n).map_err(err)?;
        let g = parse_fiber(g, n).map_err(err)?;
        Ok(self.0.pair(&f, &g).to_string())
    }

    fn schouten(&self, other: &PyPhase) -> PyResult<PyPhase> {
        schouten_phase(&self.0, &other.0).map(PyPhase).map_err(err)
    }

    fn is_poisson(&self) -> PyReport {
        PyReport(verify::is_poisson(&self.0))
    }

    fn is_semi_poisson(&self) -> PyReport {
        PyReport(verify::is_semi_poisson(&self.0))
    }

    fn shape(&self) -> PyReport {
        PyReport(verify::classify_shape(&self.0))
    }

    /// Coefficient families `w, phi, a, eta, b, c` of a polynomially graded
    /// bivector, each as a map from 1-based index strings to expressions.
    fn decompose(&self) -> PyResult<BTreeMap<String, BTreeMap<String, String>>> {
        let d = verify::decompose(&self.0).map_err(err)?;
        let mut out = BTreeMap::new();
        for (name, t) in [("w", &d.w), ("phi", &d.phi), ("a", &d.a), ("eta", &d.eta), ("b", &d.b), ("c", &d.c)] {
            let entries = t
                .entries()
                .filter(|(_, v)| !v.is_zero())
                .map(|(idx, v)| {
                    let idx: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
                    (idx.join(","), v.to_string())
                })
                .collect();
            out.insert(name.to_string(), entries);
        }
        Ok(out)
    }

    /// The `xx`, `xp` and `pp` blocks as TOML.
    fn to_toml(&self) -> String {
        BivectorBlocks::new(&self.0).to_toml()
    }

    fn __eq__(&self, other: &PyPhase) -> bool {
        self.0 == other.0
    }

    fn __str__(&self) -> String {
        workbench::render_components(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("PhaseMultivector(dimension={}, frame={})", self.0.dim(), self.0.frame().name())
    }
}

/// Geometric data on a coordinate chart, read from TOML.
#[pyclass(name = "Manifest", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyManifest(GeometryManifest);

#[pymethods]
impl PyManifest {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        GeometryManifest::parse(text).map(PyManifest).map_err(err)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        GeometryManifest::load(&path).map(PyManifest).map_err(err)
    }

    #[staticmethod]
    fn catalog(name: &str) -> PyResult<Self> {
        workbench::catalog_entry(name).map(PyManifest).map_err(err)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.0.name
    }

    #[getter]
    fn description(&self) -> &str {
        &self.0.description
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.0.n
    }

    fn to_toml(&self) -> String {
        self.0.to_toml()
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.0.save(&path).map_err(err)
    }

    #[pyo3(signature = (condition, lift = "none"))]
    fn check(&self, condition: &str, lift: &str) -> PyResult<PyReport> {
        let condition: Condition = parsed(condition)?;
        let lift: LiftKind = parsed(lift)?;
        workbench::run_check(&self.0, lift, condition).map(PyReport).map_err(err)
    }

    /// Builds a lift; `frame` is `"natural"` or `"adapted"`.
    #[pyo3(signature = (kind, frame = "natural"))]
    fn lift(&self, kind: &str, frame: &str) -> PyResult<PyPhase> {
        let kind: LiftKind = parsed(kind)?;
        let frame: FrameChoice = parsed(frame)?;
        match workbench::build_lift(&self.0, kind).map_err(err)? {
            Lifted::Phase(w) => workbench::in_frame(&self.0, kind, &w, frame).map(PyPhase).map_err(err),
            Lifted::Base(_) => Err(PyValueError::new_err("the `none` lift stays on the base")),
        }
    }

    /// Schouten bracket of two named bivectors (`w0`, `pullback`, or a lift).
    fn bracket(&self, left: &str, right: &str) -> PyResult<PyPhase> {
        workbench::bracket(&self.0, left, right).map(PyPhase).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Manifest({:?}, dimension={})", self.0.name, self.0.n)
    }
}

#[pyfunction]
fn catalog_names() -> Vec<&'static str> {
    workbench::CATALOG_NAMES.to_vec()
}

/// Runs the catalog; returns the report text and the number of regressions.
#[pyfunction]
fn run_catalog() -> PyResult<(String, usize)> {
    let suite = workbench::run_suite(&workbench::catalog()).map_err(err)?;
    Ok((suite.to_text(), suite.regressions().len()))
}

/// `⟨Q,H⟩` of symmetric tensors written as momentum polynomials, e.g. `"x1*p1*p2"`.
#[pyfunction]
fn sym_bracket(dimension: usize, q: &str, h: &str) -> PyResult<String> {
    let read = |s: &str| {
        parse_fiber(s, dimension).and_then(|f| SymTensor::from_homogeneous(dimension, f, 0))
    };
    let q = read(q).map_err(err)?;
    let h = read(h).map_err(err)?;
    Ok(core_sym_bracket(&q, &h).tilde().to_string())
}

#[pymodule]
pub fn cotlift_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyManifest>()?;
    m.add_class::<PyPhase>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(catalog_names, m)?)?;
    m.add_function(wrap_pyfunction!(run_catalog, m)?)?;
    m.add_function(wrap_pyfunction!(sym_bracket, m)?)?;
    m.add("LIFTS", LiftKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>())?;
    m.add("CONDITIONS", Condition::ALL.iter().map(|c| c.name()).collect::<Vec<_>>())?;
    Ok(())
}

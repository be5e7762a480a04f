use pyo3::prelude::*;
use pyo3::types::PyDict;

use cotlift_py::cotlift_py as module;

#[test]
fn module_works_from_python() {
    pyo3::append_to_inittab!(module);
    Python::initialize();
    Python::attach(|py| {
        let locals = PyDict::new(py);
        py.run(
            cr#"
import cotlift_py as c
m = c.Manifest.catalog("so3-dual")
assert m.dimension == 3
assert m.check("poisson", lift="w1").passed
r = m.check("poisson", lift="w2")
assert r.verdict == "fail" and r.witnesses
w2 = m.lift("w2")
assert not w2.is_poisson().passed and w2.is_semi_poisson().passed
assert w2.decompose()["w"]["1,2"] == "x3"
assert m.bracket("w0", "w0").is_zero()
assert c.sym_bracket(1, "p1", "x1") == "1"
text, regressions = c.run_catalog()
assert regressions == 0
try:
    m.check("nonsense")
except ValueError:
    pass
else:
    raise AssertionError("unknown condition accepted")
"#,
            None,
            Some(&locals),
        )
        .unwrap();
    });
}

use pyo3::prelude::*;
use pyo3::types::{PyDict, PyModule};

fn with_module(code: &std::ffi::CStr) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "gustl").unwrap();
        gustl_py::gustl_module(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("gustl", m).unwrap();
        if let Err(e) = py.run(code, Some(&globals), None) {
            e.print(py);
            panic!("python code failed");
        }
    });
}

#[test]
fn compile_and_decode() {
    with_module(
        c"img = gustl.compile('process p(c) start stop')
data = img.encode()
assert data[:4] == bytes([0xcf, 0x80, 0xcf, 0x85])
assert gustl.Image.decode(data) == img
assert gustl.Image([1], entry=0).body == [1]",
    );
}

#[test]
fn rejected_source() {
    with_module(
        c"assert [d.code for d in gustl.check('process p(c) word x, x start stop')] == ['E-REDECLARED']
try:
    gustl.compile(b'process')
    raise SystemExit('accepted')
except gustl.CompileError as e:
    assert e.args[1][0].code == 'E-PARSE'",
    );
}

#[test]
fn run_report() {
    with_module(
        c"img = gustl.compile('process p(c) start c ! 7 / 2 c ! end stop')
r = gustl.run({'p': img}, 'p')
assert r.outcome == 'Completed' and r.output == [3] and r.output_ended
assert r.counters['data_sent'] == 1
assert r.units[0][3] == 'halted'
assert gustl.div_euclid(-7, 2) == -4 and gustl.mod_euclid(-7, -2) == 1",
    );
}

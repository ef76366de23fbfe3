//! Python module `gustl`: compiler, image format and fabric runs.

use pyo3::exceptions::{PyValueError, PyZeroDivisionError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use gustl::bytecode::{self, Image};
use gustl::diag;
use gustl::fabric::{self, FabricConfig, ProgramStore};
use gustl::word::{self, Word};

pyo3::create_exception!(gustl, CompileError, PyValueError, "Source rejected; `args[1]` lists the diagnostics.");

/// One compiler diagnostic.
#[pyclass(name = "Diagnostic", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct PyDiagnostic {
    pub code: String,
    pub message: String,
    pub line: u32,
    pub column: u32,
}

#[pymethods]
impl PyDiagnostic {
    fn __repr__(&self) -> String {
        format!("{}:{}: {}: {}", self.line, self.column, self.code, self.message)
    }
}

impl From<&diag::Diagnostic> for PyDiagnostic {
    fn from(d: &diag::Diagnostic) -> Self {
        PyDiagnostic { code: d.code.as_str().to_string(), message: d.message.clone(), line: d.line, column: d.column }
    }
}

/// A compiled program image.
#[pyclass(name = "Image", eq, from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyImage {
    pub inner: Image,
}

#[pymethods]
impl PyImage {
    #[new]
    #[pyo3(signature = (body, d1=0, d0=0, entry=0))]
    fn new(body: Vec<Word>, d1: Word, d0: Word, entry: Word) -> Self {
        PyImage { inner: Image { d1, d0, entry, body } }
    }

    #[getter]
    fn d1(&self) -> Word {
        self.inner.d1
    }

    #[getter]
    fn d0(&self) -> Word {
        self.inner.d0
    }

    #[getter]
    fn entry(&self) -> Word {
        self.inner.entry
    }

    #[getter]
    fn body(&self) -> Vec<Word> {
        self.inner.body.clone()
    }

    /// Header words: magic, flags, d1, d0, code size, entry.
    fn header(&self) -> Vec<Word> {
        self.inner.header().to_vec()
    }

    fn data_size(&self, dimension: Word) -> u64 {
        self.inner.data_size(dimension)
    }

    fn encode<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.encode())
    }

    #[staticmethod]
    fn decode(data: &[u8]) -> PyResult<Self> {
        Image::decode(data).map(|inner| PyImage { inner }).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn disassemble(&self) -> String {
        bytecode::disassemble(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Image(d1={}, d0={}, entry={}, code_size={})",
            self.inner.d1,
            self.inner.d0,
            self.inner.entry,
            self.inner.code_size()
        )
    }
}

/// Outcome of a fabric run.
#[pyclass(name = "RunReport", frozen)]
pub struct PyRunReport {
    inner: fabric::RunReport,
}

#[pymethods]
impl PyRunReport {
    /// `Completed`, `Deadlock`, `StepLimit` or `NoRoot`.
    #[getter]
    fn outcome(&self) -> String {
        format!("{:?}", self.inner.outcome)
    }

    #[getter]
    fn output(&self) -> Vec<Word> {
        self.inner.output.clone()
    }

    #[getter]
    fn output_ended(&self) -> bool {
        self.inner.output_ended
    }

    #[getter]
    fn steps(&self) -> u64 {
        self.inner.steps
    }

    #[getter]
    fn exit_code(&self) -> i32 {
        self.inner.exit_code()
    }

    #[getter]
    fn trace(&self) -> Vec<String> {
        self.inner.trace.clone()
    }

    /// Token counters by name.
    #[getter]
    fn counters<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = self.inner.counters;
        let d = PyDict::new(py);
        d.set_item("data_sent", c.data_sent)?;
        d.set_item("end_sent", c.end_sent)?;
        d.set_item("pause_dropped", c.pause_dropped)?;
        d.set_item("data_consumed", c.data_consumed)?;
        d.set_item("end_consumed", c.end_consumed)?;
        Ok(d)
    }

    /// `(unit, program, dimension, status)` for every process started.
    #[getter]
    fn units(&self) -> Vec<(usize, String, Word, String)> {
        self.inner
            .units
            .iter()
            .map(|u| {
                let status = match &u.status {
                    fabric::UnitStatus::Trapped(t) => format!("trapped: {t}"),
                    other => format!("{other:?}").to_lowercase(),
                };
                (u.unit, u.program.clone(), u.dimension, status)
            })
            .collect()
    }

    fn conservation_holds(&self) -> bool {
        self.inner.conservation.holds()
    }

    fn summary(&self) -> String {
        self.inner.summary()
    }

    fn __repr__(&self) -> String {
        format!("RunReport(outcome={:?}, steps={})", self.inner.outcome, self.inner.steps)
    }
}

fn source_bytes(source: &Bound<'_, PyAny>) -> PyResult<Vec<u8>> {
    if let Ok(s) = source.extract::<String>() {
        return Ok(s.into_bytes());
    }
    source.extract::<Vec<u8>>()
}

fn rejected(py: Python<'_>, diags: &[diag::Diagnostic]) -> PyErr {
    let first = diags.first().map(|d| d.to_string()).unwrap_or_default();
    let list: Vec<PyDiagnostic> = diags.iter().map(PyDiagnostic::from).collect();
    match list.into_pyobject(py) {
        Ok(list) => CompileError::new_err((first, list.unbind())),
        Err(e) => e,
    }
}

/// Compiles source text (str or bytes) to an image; raises `CompileError`.
#[pyfunction]
fn compile(py: Python<'_>, source: &Bound<'_, PyAny>) -> PyResult<PyImage> {
    let bytes = source_bytes(source)?;
    gustl::compile_source(&bytes).map(|inner| PyImage { inner }).map_err(|d| rejected(py, &d))
}

/// Diagnostics for source text; empty when the program is accepted.
#[pyfunction]
fn check(source: &Bound<'_, PyAny>) -> PyResult<Vec<PyDiagnostic>> {
    let bytes = source_bytes(source)?;
    Ok(match gustl::check_source(&bytes) {
        Ok(_) => Vec::new(),
        Err(diags) => diags.iter().map(PyDiagnostic::from).collect(),
    })
}

/// Runs `root` on a fabric whose store holds `programs` (name to image).
#[pyfunction]
#[pyo3(signature = (programs, root, dimension=0, seed=0, units=16, capacity=8, max_steps=10_000_000, trace=false))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    programs: std::collections::HashMap<String, PyImage>,
    root: &str,
    dimension: Word,
    seed: u64,
    units: usize,
    capacity: usize,
    max_steps: u64,
    trace: bool,
) -> PyRunReport {
    let mut store = ProgramStore::new();
    for (name, img) in programs {
        store.insert(name, img.inner);
    }
    let config = FabricConfig { seed, units, capacity, max_steps, trace, ..FabricConfig::default() };
    let root = root.to_string();
    let inner = py.detach(move || fabric::run(store, config, &root, dimension));
    PyRunReport { inner }
}

fn signed(op: word::BinaryOp, n: i32, d: i32) -> PyResult<i32> {
    word::binary(op, n as Word, d as Word)
        .map(|w| w as i32)
        .map_err(|_| PyZeroDivisionError::new_err("division by zero"))
}

/// Euclidean quotient of two signed 32-bit words, wrapping like the machine.
#[pyfunction]
fn div_euclid(n: i32, d: i32) -> PyResult<i32> {
    signed(word::BinaryOp::DivE, n, d)
}

/// Euclidean remainder, always in `0..abs(d)`.
#[pyfunction]
fn mod_euclid(n: i32, d: i32) -> PyResult<i32> {
    signed(word::BinaryOp::ModE, n, d)
}

/// `(number, mnemonic, immediates)` for every opcode.
#[pyfunction]
fn opcodes() -> Vec<(u32, &'static str, usize)> {
    bytecode::opcode_table().into_iter().map(|o| (o.number, o.name, o.immediates)).collect()
}

#[pymodule]
#[pyo3(name = "gustl")]
pub fn gustl_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyDiagnostic>()?;
    m.add_class::<PyRunReport>()?;
    m.add("CompileError", m.py().get_type::<CompileError>())?;
    m.add_function(wrap_pyfunction!(compile, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(div_euclid, m)?)?;
    m.add_function(wrap_pyfunction!(mod_euclid, m)?)?;
    m.add_function(wrap_pyfunction!(opcodes, m)?)?;
    Ok(())
}

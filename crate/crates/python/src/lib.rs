use clap::Parser;
use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use hybrid_qft::circuit::{synthesize_qft, verify_qft_equivalence};
use hybrid_qft::cli::{run, Cli};
use hybrid_qft::pulse::{compile_qft_with, verify_sequence, CompileOptions};
use hybrid_qft::qudit::{fourier_gate as core_fourier_gate, QuditDims};
use hybrid_qft::spin::{build_hamiltonian, merge_lines, SpinSystemParams, Spectrum, DEFAULT_MERGE_TOL_HZ};
use hybrid_qft::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn dims_of(v: Vec<usize>) -> PyResult<QuditDims> {
    QuditDims::new(v).map_err(to_py)
}

/// Fourier gate of dimension `d` as nested lists of complex numbers.
#[pyfunction]
fn fourier_gate(d: usize) -> PyResult<Vec<Vec<Complex64>>> {
    let u = core_fourier_gate(d).map_err(to_py)?;
    let m = u.matrix();
    Ok((0..d).map(|r| (0..d).map(|c| m[(r, c)]).collect()).collect())
}

/// `(max_error, sign)` of the synthesized QFT against the direct matrix.
#[pyfunction]
#[pyo3(signature = (dims, tol = 1e-12))]
fn verify_qft(dims: Vec<usize>, tol: f64) -> PyResult<(f64, i64)> {
    let r = verify_qft_equivalence(&dims_of(dims)?, tol).map_err(to_py)?;
    Ok((r.max_error, r.sign_used))
}

/// Circuit text of the QFT on `dims`.
#[pyfunction]
fn qft_circuit(dims: Vec<usize>) -> PyResult<String> {
    Ok(synthesize_qft(&dims_of(dims)?).to_text())
}

/// Runs a command-line invocation (without the program name) and returns the
/// JSON report.
#[pyfunction]
fn run_command(args: Vec<String>) -> PyResult<String> {
    let cli = Cli::try_parse_from(std::iter::once("hqft".to_string()).chain(args))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(run(&cli).map_err(to_py)?.to_json())
}

#[pyclass(name = "SpinSystem", frozen)]
struct PySpinSystem {
    params: SpinSystemParams,
}

#[pymethods]
impl PySpinSystem {
    #[staticmethod]
    fn ideal_emulator() -> Self {
        Self {
            params: SpinSystemParams::ideal_emulator(),
        }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            params: SpinSystemParams::from_toml_str(text).map_err(to_py)?,
        })
    }

    fn to_toml(&self) -> String {
        self.params.to_toml_string()
    }

    #[getter]
    fn kind(&self) -> String {
        self.params.kind().to_string()
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        build_hamiltonian(&self.params).energies().to_vec()
    }

    fn qqt_equivalent(&self) -> PyResult<Self> {
        Ok(Self {
            params: self.params.to_qqt_equivalent().map_err(to_py)?,
        })
    }

    /// `(frequency_hz, intensity, labels)` per line.
    #[pyo3(signature = (merge = true))]
    fn spectrum(&self, merge: bool) -> PyResult<Vec<(f64, f64, Vec<String>)>> {
        let lines = build_hamiltonian(&self.params).transitions();
        let s = if merge {
            merge_lines(&lines, DEFAULT_MERGE_TOL_HZ).map_err(to_py)?
        } else {
            Spectrum::unmerged(&lines)
        };
        Ok(s.lines.into_iter().map(|l| (l.frequency, l.intensity, l.labels)).collect())
    }

    /// Compiled QFT schedule as sequence text.
    fn compile_qft(&self) -> PyResult<String> {
        Ok(compile_qft_with(&self.params, CompileOptions::default())
            .map_err(to_py)?
            .to_text())
    }

    /// `(process_fidelity, leakage)` of the compiled schedule.
    #[pyo3(signature = (faulty_echoes = false))]
    fn pulse_fidelity(&self, faulty_echoes: bool) -> PyResult<(f64, f64)> {
        let seq = compile_qft_with(&self.params, CompileOptions { faulty_echoes }).map_err(to_py)?;
        let r = verify_sequence(&seq, &self.params, 1e-3).map_err(to_py)?;
        Ok((r.process_fidelity, r.leakage))
    }

    fn __repr__(&self) -> String {
        format!("SpinSystem(kind={})", self.params.kind())
    }
}

#[pymodule]
fn pyhqft(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(fourier_gate, m)?)?;
    m.add_function(wrap_pyfunction!(verify_qft, m)?)?;
    m.add_function(wrap_pyfunction!(qft_circuit, m)?)?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    m.add_class::<PySpinSystem>()?;
    Ok(())
}

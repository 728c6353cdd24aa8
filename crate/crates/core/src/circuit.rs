//! Hybrid-qudit QFT synthesis and its direct-definition oracle.
//!
//! Circuits apply left to right: the first listed gate acts first on kets.
//! The synthesized circuit leaves its output in digit-reversed order; the
//! explicit [`digit_reversal_permutation`] restores the readout order.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::qudit::{
    digits_of, embed_gate, fourier_gate, hybrid_controlled_phase, index_of, max_abs_diff,
    unit_phase, CMatrix, PhaseSign, QuditDims, Unitary, ONE,
};

/// Sign used by [`synthesize_qft`]; fixed by `verify_qft_equivalence`.
pub const QFT_PHASE_SIGN: PhaseSign = PhaseSign::Plus;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateDescriptor {
    /// Fourier gate on one qudit (0-based).
    Fourier(usize),
    /// Hybrid controlled phase between two qudits, stored with `j < k`.
    ControlledPhase { j: usize, k: usize, sign: PhaseSign },
}

impl GateDescriptor {
    pub fn controlled_phase(a: usize, b: usize, sign: PhaseSign) -> Self {
        GateDescriptor::ControlledPhase {
            j: a.min(b),
            k: a.max(b),
            sign,
        }
    }

    fn validate(&self, dims: &QuditDims) -> Result<()> {
        let n = dims.len();
        match *self {
            GateDescriptor::Fourier(p) if p >= n => {
                Err(domain(format!("Fourier gate on qudit {p} of {n}")))
            }
            GateDescriptor::ControlledPhase { j, k, .. } if j == k || k >= n => Err(domain(
                format!("controlled phase on qudits ({j}, {k}) invalid for {n} qudits"),
            )),
            _ => Ok(()),
        }
    }

    /// The gate embedded in the full register.
    pub fn unitary(&self, dims: &QuditDims) -> Result<Unitary> {
        self.validate(dims)?;
        match *self {
            GateDescriptor::Fourier(p) => {
                embed_gate(&fourier_gate(dims.as_slice()[p])?, &[p], dims)
            }
            GateDescriptor::ControlledPhase { j, k, sign } => {
                hybrid_controlled_phase(dims, j, k, sign)
            }
        }
    }
}

impl fmt::Display for GateDescriptor {
    /// `F 1` or `R 1 3 +1`, with 1-based qudit indices.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GateDescriptor::Fourier(p) => write!(f, "F {}", p + 1),
            GateDescriptor::ControlledPhase { j, k, sign } => {
                write!(f, "R {} {} {}", j + 1, k + 1, sign)
            }
        }
    }
}

impl FromStr for GateDescriptor {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let qudit = |t: &str| -> Result<usize> {
            match t.parse::<usize>() {
                Ok(i) if i >= 1 => Ok(i - 1),
                _ => Err(domain(format!("invalid 1-based qudit index `{t}`"))),
            }
        };
        match toks.as_slice() {
            ["F", p] => Ok(GateDescriptor::Fourier(qudit(p)?)),
            ["R", a, b, s] => {
                let (a, b) = (qudit(a)?, qudit(b)?);
                if a == b {
                    return Err(domain("controlled phase needs two distinct qudits"));
                }
                Ok(GateDescriptor::controlled_phase(a, b, s.parse()?))
            }
            _ => Err(domain(format!("unrecognized gate line `{line}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    dims: QuditDims,
    gates: Vec<GateDescriptor>,
}

impl Circuit {
    pub fn new(dims: QuditDims, gates: Vec<GateDescriptor>) -> Result<Self> {
        for g in &gates {
            g.validate(&dims)?;
        }
        Ok(Self { dims, gates })
    }

    pub fn dims(&self) -> &QuditDims {
        &self.dims
    }

    pub fn gates(&self) -> &[GateDescriptor] {
        &self.gates
    }

    /// Line-oriented text: a `DIMS` header then one gate per line.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "DIMS {}\n",
            self.dims
                .as_slice()
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        );
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut dims = None;
        let mut gates = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let wrap = |e: Error| Error::Parse {
                line: n + 1,
                message: e.to_string(),
            };
            if let Some(rest) = line.strip_prefix("DIMS") {
                let v = rest
                    .split_whitespace()
                    .map(|t| t.parse::<usize>().map_err(|_| domain(format!("bad dimension `{t}`"))))
                    .collect::<Result<Vec<_>>>()
                    .map_err(wrap)?;
                dims = Some(QuditDims::new(v).map_err(wrap)?);
            } else {
                gates.push(line.parse::<GateDescriptor>().map_err(wrap)?);
            }
        }
        let dims = dims.ok_or(Error::Parse {
            line: 0,
            message: "missing DIMS header".into(),
        })?;
        Self::new(dims, gates)
    }
}

/// `F_1 R_{1,2} … R_{1,N} F_2 … F_N` in temporal order with the given sign.
pub fn synthesize_qft_with_sign(dims: &QuditDims, sign: PhaseSign) -> Circuit {
    let n = dims.len();
    let mut gates = Vec::with_capacity(n + n * (n - 1) / 2);
    for p in 0..n {
        gates.push(GateDescriptor::Fourier(p));
        for q in p + 1..n {
            gates.push(GateDescriptor::controlled_phase(p, q, sign));
        }
    }
    Circuit {
        dims: dims.clone(),
        gates,
    }
}

pub fn synthesize_qft(dims: &QuditDims) -> Circuit {
    synthesize_qft_with_sign(dims, QFT_PHASE_SIGN)
}

/// Ordered product of the embedded gates; the first gate is the rightmost factor.
pub fn circuit_unitary(c: &Circuit) -> Result<Unitary> {
    let d = c.dims.total_dim();
    let mut acc = CMatrix::identity(d, d);
    for g in &c.gates {
        let u = g.unitary(&c.dims)?;
        acc = u.matrix() * acc;
    }
    Ok(Unitary::from_product(acc, c.dims.clone()))
}

/// The D-point DFT matrix, entry `(y, x) = exp(2πi·xy/D)/√D`.
pub fn direct_qft_matrix(dims: &QuditDims) -> Unitary {
    let d = dims.total_dim();
    let scale = 1.0 / (d as f64).sqrt();
    let m = CMatrix::from_fn(d, d, |y, x| unit_phase((x * y % d) as i64, d as u64) * scale);
    Unitary::from_product(m, dims.clone())
}

/// Maps digits `(x_0,…,x_{N-1})` over `dims` to `(x_{N-1},…,x_0)` over the
/// reversed dims. The result carries the reversed dims.
pub fn digit_reversal_permutation(dims: &QuditDims) -> Unitary {
    let d = dims.total_dim();
    let rev = dims.reversed();
    let mut m = CMatrix::zeros(d, d);
    for src in 0..d {
        let mut digits = digits_of(src, dims.as_slice());
        digits.reverse();
        m[(index_of(&digits, rev.as_slice()), src)] = ONE;
    }
    Unitary::from_product(m, rev)
}

#[derive(Clone, Debug, Serialize)]
pub struct QftReport {
    pub dims: String,
    pub max_error: f64,
    pub max_error_plus: f64,
    pub max_error_minus: f64,
    pub pass: bool,
    pub sign_used: i64,
}

/// Checks `‖P · U_circuit − U_direct‖_max ≤ tol` for both phase signs.
pub fn verify_qft_equivalence(dims: &QuditDims, tol: f64) -> Result<QftReport> {
    let p = digit_reversal_permutation(dims);
    let direct = direct_qft_matrix(dims);
    let error_for = |sign| -> Result<f64> {
        let u = circuit_unitary(&synthesize_qft_with_sign(dims, sign))?;
        Ok(max_abs_diff(&(p.matrix() * u.matrix()), direct.matrix()))
    };
    let plus = error_for(PhaseSign::Plus)?;
    let minus = error_for(PhaseSign::Minus)?;
    let (ok_plus, ok_minus) = (plus <= tol, minus <= tol);
    let sign = match (ok_plus, ok_minus) {
        (true, false) => PhaseSign::Plus,
        (false, true) => PhaseSign::Minus,
        // A single qudit has no controlled phases, so the sign is moot.
        (true, true) if dims.len() == 1 => QFT_PHASE_SIGN,
        (true, true) => {
            return Err(Error::Verification(format!(
                "both phase signs pass at tol {tol:e} (errors {plus:e}, {minus:e})"
            )))
        }
        (false, false) => {
            return Err(Error::Verification(format!(
                "no phase sign reproduces the QFT for dims {dims}: max error +1 = {plus:e}, -1 = {minus:e}"
            )))
        }
    };
    Ok(QftReport {
        dims: dims.to_string(),
        max_error: plus.min(minus),
        max_error_plus: plus,
        max_error_minus: minus,
        pass: true,
        sign_used: sign.value(),
    })
}

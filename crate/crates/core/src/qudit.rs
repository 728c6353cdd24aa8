//! Mixed-radix registers, elementary gates and dense operator algebra.
//!
//! Basis ordering: the first qudit is the most significant digit, so the
//! basis state with digits `(x_0, …, x_{N-1})` over dims `(d_0, …, d_{N-1})`
//! sits at index `Σ x_j · ∏_{p>j} d_p`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Max-abs-entry tolerance for exact-math comparisons.
pub const EXACT_TOL: f64 = 1e-12;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `exp(2πi · num / den)`, exact on multiples of a quarter turn.
pub fn unit_phase(num: i64, den: u64) -> Complex64 {
    let den_i = den as i64;
    let r = num.rem_euclid(den_i);
    if (4 * r) % den_i == 0 {
        return match 4 * r / den_i {
            0 => ONE,
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, 2.0 * PI * r as f64 / den as f64)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Ordered list of qudit dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct QuditDims(Vec<usize>);

impl QuditDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(domain("qudit register must contain at least one qudit"));
        }
        if let Some((pos, d)) = dims.iter().enumerate().find(|(_, &d)| d < 2) {
            return Err(domain(format!(
                "qudit {pos} has dimension {d}; every dimension must be at least 2"
            )));
        }
        Ok(Self(dims))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.0.iter().product()
    }

    /// Place values `w_j = ∏_{p>j} d_p`.
    pub fn weights(&self) -> Vec<usize> {
        let mut w = vec![1; self.0.len()];
        for j in (0..self.0.len().saturating_sub(1)).rev() {
            w[j] = w[j + 1] * self.0[j + 1];
        }
        w
    }

    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }

    pub fn sub(&self, positions: &[usize]) -> Result<Self> {
        let mut out = Vec::with_capacity(positions.len());
        for &p in positions {
            out.push(*self.0.get(p).ok_or_else(|| {
                domain(format!("qudit index {p} out of range for {} qudits", self.0.len()))
            })?);
        }
        Self::new(out)
    }
}

impl TryFrom<Vec<usize>> for QuditDims {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<QuditDims> for Vec<usize> {
    fn from(d: QuditDims) -> Self {
        d.0
    }
}

impl fmt::Display for QuditDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for QuditDims {
    type Err = Error;

    /// Parses `"2,2,3"`.
    fn from_str(s: &str) -> Result<Self> {
        let dims = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| domain(format!("invalid dimension `{}`", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims)
    }
}

/// Basis state label: one digit per qudit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DigitString {
    digits: Vec<usize>,
    dims: QuditDims,
}

impl DigitString {
    pub fn new(digits: Vec<usize>, dims: QuditDims) -> Result<Self> {
        if digits.len() != dims.len() {
            return Err(Error::DimensionMismatch {
                expected: dims.len(),
                actual: digits.len(),
            });
        }
        for (pos, (&x, &d)) in digits.iter().zip(dims.as_slice()).enumerate() {
            if x >= d {
                return Err(domain(format!(
                    "digit {x} at position {pos} out of range for dimension {d}"
                )));
            }
        }
        Ok(Self { digits, dims })
    }

    pub fn digits(&self) -> &[usize] {
        &self.digits
    }

    pub fn dims(&self) -> &QuditDims {
        &self.dims
    }
}

pub fn mixed_radix_encode(digits: &DigitString) -> usize {
    digits
        .digits
        .iter()
        .zip(digits.dims.as_slice())
        .fold(0, |acc, (&x, &d)| acc * d + x)
}

pub fn mixed_radix_decode(index: usize, dims: &QuditDims) -> Result<DigitString> {
    let total = dims.total_dim();
    if index >= total {
        return Err(domain(format!(
            "index {index} out of range for register of dimension {total}"
        )));
    }
    let mut rest = index;
    let mut digits = vec![0; dims.len()];
    for (slot, &d) in digits.iter_mut().zip(dims.as_slice()).rev() {
        *slot = rest % d;
        rest /= d;
    }
    Ok(DigitString {
        digits,
        dims: dims.clone(),
    })
}

/// Digits of `index` without the wrapper type; `index` must be in range.
pub(crate) fn digits_of(index: usize, dims: &[usize]) -> Vec<usize> {
    let mut rest = index;
    let mut digits = vec![0; dims.len()];
    for (slot, &d) in digits.iter_mut().zip(dims).rev() {
        *slot = rest % d;
        rest /= d;
    }
    digits
}

pub(crate) fn index_of(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Square complex matrix over a register, unitary to [`EXACT_TOL`] at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Unitary {
    matrix: CMatrix,
    dims: QuditDims,
}

impl Unitary {
    pub fn new(matrix: CMatrix, dims: QuditDims) -> Result<Self> {
        let u = Self::checked_shape(matrix, dims)?;
        let err = u.unitarity_error();
        if err > EXACT_TOL {
            return Err(domain(format!(
                "matrix is not unitary: max |UU† - I| = {err:e}"
            )));
        }
        Ok(u)
    }

    /// Accepts a product of unitaries whose rounding may exceed [`EXACT_TOL`].
    pub(crate) fn from_product(matrix: CMatrix, dims: QuditDims) -> Self {
        debug_assert_eq!(matrix.nrows(), dims.total_dim());
        Self { matrix, dims }
    }

    fn checked_shape(matrix: CMatrix, dims: QuditDims) -> Result<Self> {
        let d = dims.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { matrix, dims })
    }

    pub fn identity(dims: &QuditDims) -> Self {
        let d = dims.total_dim();
        Self {
            matrix: CMatrix::identity(d, d),
            dims: dims.clone(),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &QuditDims {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dagger(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            dims: self.dims.clone(),
        }
    }

    /// `self · other`, i.e. `other` acts first.
    pub fn then_after(&self, other: &Unitary) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
            dims: self.dims.clone(),
        })
    }

    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        max_abs_diff(
            &(&self.matrix * self.matrix.adjoint()),
            &CMatrix::identity(d, d),
        )
    }
}

/// Whether a density matrix is a normalized state or a traceless deviation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    UnitTrace,
    Deviation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    dims: QuditDims,
    normalization: Normalization,
}

impl DensityMatrix {
    /// Hermitian, unit trace, and positive semidefinite to -1e-10.
    pub fn new(matrix: CMatrix, dims: QuditDims) -> Result<Self> {
        let rho = Self::from_hermitian(matrix, dims)?;
        let min = rho.min_eigenvalue();
        if min < -1e-10 {
            return Err(domain(format!(
                "density matrix has negative eigenvalue {min:e}"
            )));
        }
        Ok(rho)
    }

    /// Hermitian with unit trace; positivity not required.
    pub fn from_hermitian(matrix: CMatrix, dims: QuditDims) -> Result<Self> {
        Self::tagged(matrix, dims, Normalization::UnitTrace)
    }

    /// Traceless Hermitian deviation operator.
    pub fn deviation_from(matrix: CMatrix, dims: QuditDims) -> Result<Self> {
        Self::tagged(matrix, dims, Normalization::Deviation)
    }

    fn tagged(matrix: CMatrix, dims: QuditDims, normalization: Normalization) -> Result<Self> {
        let d = dims.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: matrix.nrows().max(matrix.ncols()),
            });
        }
        let herm = max_abs_diff(&matrix, &matrix.adjoint());
        if herm > EXACT_TOL {
            return Err(domain(format!("matrix is not Hermitian: deviation {herm:e}")));
        }
        let tr = matrix.trace();
        let want = match normalization {
            Normalization::UnitTrace => ONE,
            Normalization::Deviation => ZERO,
        };
        if (tr - want).norm() > EXACT_TOL {
            return Err(domain(format!("trace {tr} does not match {want}")));
        }
        Ok(Self {
            matrix,
            dims,
            normalization,
        })
    }

    /// Symmetrizes `matrix` before wrapping; rounding noise is expected.
    pub(crate) fn from_parts(
        matrix: CMatrix,
        dims: QuditDims,
        normalization: Normalization,
    ) -> Self {
        let matrix = (&matrix + matrix.adjoint()).scale(0.5);
        Self {
            matrix,
            dims,
            normalization,
        }
    }

    pub fn maximally_mixed(dims: &QuditDims) -> Self {
        let d = dims.total_dim();
        Self {
            matrix: CMatrix::identity(d, d).scale(1.0 / d as f64),
            dims: dims.clone(),
            normalization: Normalization::UnitTrace,
        }
    }

    pub fn basis_state(index: usize, dims: &QuditDims) -> Result<Self> {
        let d = dims.total_dim();
        if index >= d {
            return Err(domain(format!("basis index {index} out of range for {d}")));
        }
        let mut m = CMatrix::zeros(d, d);
        m[(index, index)] = ONE;
        Ok(Self {
            matrix: m,
            dims: dims.clone(),
            normalization: Normalization::UnitTrace,
        })
    }

    /// `|ψ⟩⟨ψ|` for a vector normalized here.
    pub fn pure(state: &[Complex64], dims: &QuditDims) -> Result<Self> {
        let d = dims.total_dim();
        if state.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: state.len(),
            });
        }
        let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(domain("zero state vector"));
        }
        let v = nalgebra::DVector::from_iterator(d, state.iter().map(|z| z / norm));
        Ok(Self::from_parts(
            &v * v.adjoint(),
            dims.clone(),
            Normalization::UnitTrace,
        ))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &QuditDims {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Traceless part `ρ - Tr(ρ)/D · I`.
    pub fn deviation(&self) -> Self {
        let d = self.dim();
        let shift = self.trace() / d as f64;
        let m = &self.matrix - CMatrix::identity(d, d) * shift;
        Self {
            matrix: m,
            dims: self.dims.clone(),
            normalization: Normalization::Deviation,
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let eig = self.matrix.clone().symmetric_eigen();
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_physical(&self) -> bool {
        self.normalization == Normalization::UnitTrace && self.min_eigenvalue() >= -1e-10
    }
}

/// `U ρ U†`.
pub fn apply(u: &Unitary, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if u.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: u.dim(),
        });
    }
    let m = u.matrix() * rho.matrix() * u.matrix().adjoint();
    Ok(DensityMatrix::from_parts(
        m,
        rho.dims.clone(),
        rho.normalization,
    ))
}

/// Single-qudit Fourier gate: entry `(y, x) = exp(2πi·xy/d)/√d`.
pub fn fourier_gate(d: usize) -> Result<Unitary> {
    if d < 2 {
        return Err(domain(format!("Fourier gate needs d >= 2, got {d}")));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let m = CMatrix::from_fn(d, d, |y, x| unit_phase((x * y) as i64, d as u64) * scale);
    Unitary::new(m, QuditDims::new(vec![d])?)
}

/// Sign of the exponent in a controlled-phase gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseSign {
    Plus,
    Minus,
}

impl PhaseSign {
    pub fn value(self) -> i64 {
        match self {
            PhaseSign::Plus => 1,
            PhaseSign::Minus => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            PhaseSign::Plus => PhaseSign::Minus,
            PhaseSign::Minus => PhaseSign::Plus,
        }
    }
}

impl fmt::Display for PhaseSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseSign::Plus => "+1",
            PhaseSign::Minus => "-1",
        })
    }
}

impl FromStr for PhaseSign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+1" | "1" | "+" => Ok(PhaseSign::Plus),
            "-1" | "-" => Ok(PhaseSign::Minus),
            other => Err(domain(format!("invalid phase sign `{other}`"))),
        }
    }
}

/// The diagonal hybrid controlled-rotation between qudits `j` and `k`.
///
/// The phase on basis state `x` is `exp(sign·2πi·x_j·x_k / ∏_{p=min}^{max} d_p)`;
/// the gate is symmetric in `(j, k)`.
pub fn hybrid_controlled_phase(
    dims: &QuditDims,
    j: usize,
    k: usize,
    sign: PhaseSign,
) -> Result<Unitary> {
    let n = dims.len();
    if j == k {
        return Err(domain(format!(
            "controlled phase needs two distinct qudits, got {j} twice"
        )));
    }
    if j >= n || k >= n {
        return Err(domain(format!(
            "qudit index {} out of range for {n} qudits",
            j.max(k)
        )));
    }
    let (lo, hi) = (j.min(k), j.max(k));
    let denom: usize = dims.as_slice()[lo..=hi].iter().product();
    let d = dims.total_dim();
    let mut m = CMatrix::zeros(d, d);
    for idx in 0..d {
        let digits = digits_of(idx, dims.as_slice());
        let num = sign.value() * (digits[lo] * digits[hi]) as i64;
        m[(idx, idx)] = unit_phase(num, denom as u64);
    }
    Unitary::new(m, dims.clone())
}

/// Extends `gate` (acting on the qudits at `positions`, in that order) by the
/// identity on the remaining qudits of `dims`.
pub fn embed_gate(gate: &Unitary, positions: &[usize], dims: &QuditDims) -> Result<Unitary> {
    let mut seen = vec![false; dims.len()];
    for &p in positions {
        if p >= dims.len() {
            return Err(domain(format!(
                "position {p} out of range for {} qudits",
                dims.len()
            )));
        }
        if std::mem::replace(&mut seen[p], true) {
            return Err(domain(format!("position {p} listed twice")));
        }
    }
    let sub = dims.sub(positions)?;
    if sub.total_dim() != gate.dim() || sub.as_slice() != gate.dims().as_slice() {
        return Err(Error::DimensionMismatch {
            expected: sub.total_dim(),
            actual: gate.dim(),
        });
    }
    let full = dims.as_slice();
    let sub_dims = sub.as_slice();
    let d = dims.total_dim();
    let mut m = CMatrix::zeros(d, d);
    for col in 0..d {
        let cdig = digits_of(col, full);
        let csub: Vec<usize> = positions.iter().map(|&p| cdig[p]).collect();
        let cs = index_of(&csub, sub_dims);
        for rs in 0..gate.dim() {
            let amp = gate.matrix()[(rs, cs)];
            if amp == ZERO {
                continue;
            }
            let rsub = digits_of(rs, sub_dims);
            let mut rdig = cdig.clone();
            for (&p, &x) in positions.iter().zip(&rsub) {
                rdig[p] = x;
            }
            m[(index_of(&rdig, full), col)] = amp;
        }
    }
    Ok(Unitary::from_product(m, dims.clone()))
}

//! Spin Hamiltonians, single-quantum spectra and the qutrit-in-two-qubits embedding.
//!
//! All parameters are in Hz and Hamiltonians keep the algebraic form
//! `Σ ω m + Σ J m m` (no explicit 2π). Digit `k` of a spin of dimension `d`
//! carries `m = (d-1)/2 - k`, so qubit digit 0 is `m = +1/2` and qutrit digits
//! `0', 1', 2'` are `m = +1, 0, -1`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::qudit::{digits_of, index_of, CMatrix, DensityMatrix, Normalization, QuditDims};

/// Default tolerance for merging coincident lines.
pub const DEFAULT_MERGE_TOL_HZ: f64 = 1e-6;

/// Tolerance on the ideal coupling pattern and on redundant config fields.
const PATTERN_TOL_HZ: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SystemKind {
    /// Two qubits and one spin-1 qutrit.
    #[serde(rename = "QQT")]
    Qqt,
    /// Four qubits; qubits 3 and 4 emulate the qutrit.
    #[serde(rename = "QQQQ")]
    Qqqq,
}

impl SystemKind {
    pub fn dims(self) -> QuditDims {
        match self {
            SystemKind::Qqt => QuditDims::new(vec![2, 2, 3]),
            SystemKind::Qqqq => QuditDims::new(vec![2, 2, 2, 2]),
        }
        .expect("static dims are valid")
    }

    fn spins(self) -> usize {
        match self {
            SystemKind::Qqt => 3,
            SystemKind::Qqqq => 4,
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemKind::Qqt => "QQT",
            SystemKind::Qqqq => "QQQQ",
        })
    }
}

/// Config file layout. `larmor` holds qubit frequencies only for QQT; for QQQQ
/// it holds either all four frequencies or the first two, in which case
/// `omega3_qutrit ± dq` supplies ω₃ and ω₄.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: SystemKind,
    larmor: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega3_qutrit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dq: Option<f64>,
    j: Vec<Vec<f64>>,
    #[serde(default)]
    ideal: bool,
}

/// Validated spin-system parameters.
///
/// For `Qqt`, `larmor` = [ω₁, ω₂], `omega3_qutrit` = Ω₃, `dq` = D_Q and `j` is
/// 3×3 with `j[0][2]` = J′₁₃ and `j[1][2]` = J′₂₃. For `Qqqq`, `larmor` has all
/// four frequencies, `omega3_qutrit` = (ω₃+ω₄)/2 and `dq` = (ω₃-ω₄)/2 so that
/// ω₃,₄ = Ω₃ ± D_Q; `j` is 4×4.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinSystemParams {
    kind: SystemKind,
    larmor: Vec<f64>,
    omega3_qutrit: f64,
    dq: f64,
    j: Vec<Vec<f64>>,
    ideal: bool,
}

fn cfg_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

fn finite(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(cfg_err(field, format!("value {v} is not finite")))
    }
}

impl SpinSystemParams {
    pub fn qqt(larmor: [f64; 2], omega3: f64, dq: f64, j12: f64, j13: f64, j23: f64) -> Result<Self> {
        let j = vec![
            vec![0.0, j12, j13],
            vec![j12, 0.0, j23],
            vec![j13, j23, 0.0],
        ];
        Self::validated(RawConfig {
            kind: SystemKind::Qqt,
            larmor: larmor.to_vec(),
            omega3_qutrit: Some(omega3),
            dq: Some(dq),
            j,
            ideal: false,
        })
    }

    /// Four-qubit system from explicit frequencies and a symmetric coupling matrix.
    pub fn qqqq(larmor: [f64; 4], j: [[f64; 4]; 4], ideal: bool) -> Result<Self> {
        Self::validated(RawConfig {
            kind: SystemKind::Qqqq,
            larmor: larmor.to_vec(),
            omega3_qutrit: None,
            dq: None,
            j: j.iter().map(|r| r.to_vec()).collect(),
            ideal,
        })
    }

    /// Synthetic ideal emulator: ω₁=2000, ω₂=1000, Ω₃=300, D_Q=18, J₁₂=40,
    /// J₁₃=J₁₄=8, J₂₃=J₂₄=5, J₃₄=0.
    pub fn ideal_emulator() -> Self {
        Self::qqqq(
            [2000.0, 1000.0, 318.0, 282.0],
            [
                [0.0, 40.0, 8.0, 8.0],
                [40.0, 0.0, 5.0, 5.0],
                [8.0, 5.0, 0.0, 0.0],
                [8.0, 5.0, 0.0, 0.0],
            ],
            true,
        )
        .expect("built-in parameters are valid")
    }

    fn validated(raw: RawConfig) -> Result<Self> {
        let n = raw.kind.spins();
        for (i, &w) in raw.larmor.iter().enumerate() {
            finite(&format!("larmor[{i}]"), w)?;
        }
        let omega3 = raw.omega3_qutrit.map(|v| finite("omega3_qutrit", v)).transpose()?;
        let dq = raw.dq.map(|v| finite("dq", v)).transpose()?;

        let (larmor, omega3, dq) = match raw.kind {
            SystemKind::Qqt => {
                if raw.larmor.len() != 2 {
                    return Err(cfg_err("larmor", "QQT needs the two qubit frequencies"));
                }
                let o = omega3.ok_or_else(|| cfg_err("omega3_qutrit", "required for QQT"))?;
                let d = dq.ok_or_else(|| cfg_err("dq", "required for QQT"))?;
                (raw.larmor, o, d)
            }
            SystemKind::Qqqq => match raw.larmor.len() {
                2 => {
                    let o = omega3.ok_or_else(|| {
                        cfg_err("omega3_qutrit", "required when larmor lists two frequencies")
                    })?;
                    let d = dq.ok_or_else(|| {
                        cfg_err("dq", "required when larmor lists two frequencies")
                    })?;
                    (vec![raw.larmor[0], raw.larmor[1], o + d, o - d], o, d)
                }
                4 => {
                    let o = (raw.larmor[2] + raw.larmor[3]) / 2.0;
                    let d = (raw.larmor[2] - raw.larmor[3]) / 2.0;
                    if omega3.is_some_and(|v| (v - o).abs() > PATTERN_TOL_HZ) {
                        return Err(cfg_err("omega3_qutrit", "inconsistent with larmor[2], larmor[3]"));
                    }
                    if dq.is_some_and(|v| (v - d).abs() > PATTERN_TOL_HZ) {
                        return Err(cfg_err("dq", "inconsistent with larmor[2], larmor[3]"));
                    }
                    (raw.larmor, o, d)
                }
                k => return Err(cfg_err("larmor", format!("QQQQ needs 2 or 4 entries, got {k}"))),
            },
        };

        if raw.j.len() != n || raw.j.iter().any(|r| r.len() != n) {
            return Err(cfg_err("j", format!("expected a {n}x{n} matrix")));
        }
        // Either triangle may be left at zero; otherwise both must agree.
        let mut j = vec![vec![0.0; n]; n];
        for a in 0..n {
            finite(&format!("j[{a}][{a}]"), raw.j[a][a])?;
            if raw.j[a][a] != 0.0 {
                return Err(cfg_err(&format!("j[{a}][{a}]"), "self coupling must be zero"));
            }
            for b in a + 1..n {
                let (u, l) = (
                    finite(&format!("j[{a}][{b}]"), raw.j[a][b])?,
                    finite(&format!("j[{b}][{a}]"), raw.j[b][a])?,
                );
                let v = if l == 0.0 {
                    u
                } else if u == 0.0 || (u - l).abs() <= PATTERN_TOL_HZ {
                    l
                } else {
                    return Err(cfg_err(&format!("j[{a}][{b}]"), "coupling matrix is not symmetric"));
                };
                j[a][b] = v;
                j[b][a] = v;
            }
        }

        let p = Self {
            kind: raw.kind,
            larmor,
            omega3_qutrit: omega3,
            dq,
            j,
            ideal: raw.ideal,
        };
        if p.ideal {
            p.check_ideal_pattern()?;
        }
        Ok(p)
    }

    /// J₁₃=J₁₄, J₂₃=J₂₄, J₃₄=0 for a QQQQ system.
    pub fn check_ideal_pattern(&self) -> Result<()> {
        if self.kind != SystemKind::Qqqq {
            return Err(cfg_err("ideal", "the ideal pattern applies to QQQQ systems"));
        }
        let j = &self.j;
        let mut bad = Vec::new();
        if (j[0][2] - j[0][3]).abs() > PATTERN_TOL_HZ {
            bad.push(format!("J13 = {} differs from J14 = {}", j[0][2], j[0][3]));
        }
        if (j[1][2] - j[1][3]).abs() > PATTERN_TOL_HZ {
            bad.push(format!("J23 = {} differs from J24 = {}", j[1][2], j[1][3]));
        }
        if j[2][3].abs() > PATTERN_TOL_HZ {
            bad.push(format!("J34 = {} is not zero", j[2][3]));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(cfg_err("j", bad.join("; ")))
        }
    }

    pub fn satisfies_ideal_pattern(&self) -> bool {
        self.check_ideal_pattern().is_ok()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| cfg_err("config", e.to_string()))?;
        Self::validated(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        let raw = RawConfig {
            kind: self.kind,
            larmor: self.larmor.clone(),
            omega3_qutrit: Some(self.omega3_qutrit),
            dq: Some(self.dq),
            j: self.j.clone(),
            ideal: self.ideal,
        };
        toml::to_string(&raw).expect("config serializes")
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn dims(&self) -> QuditDims {
        self.kind.dims()
    }

    pub fn larmor(&self) -> &[f64] {
        &self.larmor
    }

    pub fn omega3_qutrit(&self) -> f64 {
        self.omega3_qutrit
    }

    pub fn dq(&self) -> f64 {
        self.dq
    }

    /// Coupling between spins `a` and `b` (0-based).
    pub fn coupling(&self, a: usize, b: usize) -> f64 {
        self.j[a][b]
    }

    pub fn couplings(&self) -> &[Vec<f64>] {
        &self.j
    }

    pub fn is_ideal(&self) -> bool {
        self.ideal
    }

    /// QQT system whose spectrum the QQQQ emulator reproduces. The qutrit
    /// lines of the QQT Hamiltonian sit at Ω₃ ± 3·D_Q, so the emulator's
    /// ω₃ - ω₄ corresponds to 6·D_Q here.
    pub fn to_qqt_equivalent(&self) -> Result<Self> {
        match self.kind {
            SystemKind::Qqt => Ok(self.clone()),
            SystemKind::Qqqq => {
                self.check_ideal_pattern()?;
                let w = &self.larmor;
                Self::qqt(
                    [w[0], w[1]],
                    (w[2] + w[3]) / 2.0,
                    (w[2] - w[3]) / 6.0,
                    self.j[0][1],
                    self.j[0][2],
                    self.j[1][2],
                )
            }
        }
    }

    /// Ideal four-qubit emulator of a QQT system: ω₃,₄ = Ω₃ ± 3·D_Q.
    pub fn to_emulator(&self) -> Result<Self> {
        match self.kind {
            SystemKind::Qqqq => Ok(self.clone()),
            SystemKind::Qqt => {
                let (j12, j13, j23) = (self.j[0][1], self.j[0][2], self.j[1][2]);
                Self::qqqq(
                    [
                        self.larmor[0],
                        self.larmor[1],
                        self.omega3_qutrit + 3.0 * self.dq,
                        self.omega3_qutrit - 3.0 * self.dq,
                    ],
                    [
                        [0.0, j12, j13, j13],
                        [j12, 0.0, j23, j23],
                        [j13, j23, 0.0, 0.0],
                        [j13, j23, 0.0, 0.0],
                    ],
                    true,
                )
            }
        }
    }
}

impl FromStr for SpinSystemParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_toml_str(s)
    }
}

/// Magnetic quantum number of digit `k` on a spin of dimension `d`.
pub fn magnetic_number(k: usize, d: usize) -> f64 {
    (d as f64 - 1.0) / 2.0 - k as f64
}

/// A Hamiltonian diagonal in the product basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    energies: Vec<f64>,
    dims: QuditDims,
}

impl Hamiltonian {
    pub fn from_energies(energies: Vec<f64>, dims: QuditDims) -> Result<Self> {
        if energies.len() != dims.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: dims.total_dim(),
                actual: energies.len(),
            });
        }
        Ok(Self { energies, dims })
    }

    /// Rejects matrices with off-diagonal or imaginary entries above 1e-12.
    pub fn from_matrix(m: &CMatrix, dims: &QuditDims) -> Result<Self> {
        let d = dims.total_dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: m.nrows().max(m.ncols()),
            });
        }
        for r in 0..d {
            for c in 0..d {
                let z = m[(r, c)];
                let bad = if r == c { z.im.abs() } else { z.norm() };
                if bad > 1e-12 {
                    return Err(domain(format!(
                        "Hamiltonian is not real diagonal: entry ({r}, {c}) = {z}"
                    )));
                }
            }
        }
        Ok(Self {
            energies: (0..d).map(|i| m[(i, i)].re).collect(),
            dims: dims.clone(),
        })
    }

    fn from_fn(dims: QuditDims, f: impl Fn(&[f64]) -> f64) -> Self {
        let ds = dims.as_slice().to_vec();
        let energies = (0..dims.total_dim())
            .map(|i| {
                let m: Vec<f64> = digits_of(i, &ds)
                    .iter()
                    .zip(&ds)
                    .map(|(&k, &d)| magnetic_number(k, d))
                    .collect();
                f(&m)
            })
            .collect();
        Self { energies, dims }
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dims(&self) -> &QuditDims {
        &self.dims
    }

    pub fn matrix(&self) -> CMatrix {
        let d = self.energies.len();
        CMatrix::from_fn(d, d, |r, c| {
            if r == c {
                self.energies[r].into()
            } else {
                0.0.into()
            }
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.energies.iter().fold(0.0, |a, e| a.max(e.abs()))
    }

    pub fn transitions(&self) -> Vec<TransitionLine> {
        transitions_of(self)
    }
}

/// `ω₁m₁ + ω₂m₂ + Ω₃m₃ + D_Q(3m₃² - 2) + J₁₂m₁m₂ + J′₂₃m₂m₃ + J′₁₃m₁m₃`.
pub fn build_qqt_hamiltonian(p: &SpinSystemParams) -> Result<Hamiltonian> {
    if p.kind != SystemKind::Qqt {
        return Err(domain(format!("expected a QQT system, got {}", p.kind)));
    }
    let (w1, w2, o3, dq) = (p.larmor[0], p.larmor[1], p.omega3_qutrit, p.dq);
    let (j12, j13, j23) = (p.j[0][1], p.j[0][2], p.j[1][2]);
    Ok(Hamiltonian::from_fn(p.dims(), |m| {
        let (m1, m2, m3) = (m[0], m[1], m[2]);
        w1 * m1 + w2 * m2 + o3 * m3 + dq * (3.0 * m3 * m3 - 2.0)
            + j12 * m1 * m2
            + j23 * m2 * m3
            + j13 * m1 * m3
    }))
}

/// `Σ ωᵢmᵢ + Σ_{i<j} Jᵢⱼmᵢmⱼ`; the ideal pattern reduces the couplings to
/// `J₁₂m₁m₂ + J′₂₃m₂(m₃+m₄) + J′₁₃m₁(m₃+m₄)`.
pub fn build_qqqq_hamiltonian(p: &SpinSystemParams) -> Result<Hamiltonian> {
    if p.kind != SystemKind::Qqqq {
        return Err(domain(format!("expected a QQQQ system, got {}", p.kind)));
    }
    Ok(Hamiltonian::from_fn(p.dims(), |m| {
        let mut e = 0.0;
        for a in 0..4 {
            e += p.larmor[a] * m[a];
            for b in a + 1..4 {
                e += p.j[a][b] * m[a] * m[b];
            }
        }
        e
    }))
}

pub fn build_hamiltonian(p: &SpinSystemParams) -> Hamiltonian {
    match p.kind {
        SystemKind::Qqt => build_qqt_hamiltonian(p),
        SystemKind::Qqqq => build_qqqq_hamiltonian(p),
    }
    .expect("kind matches builder")
}

/// A single-quantum transition. `from` is the higher-energy level; indices are
/// 0-based, level numbers (`from_level`, `to_level`) are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitionLine {
    pub from: usize,
    pub to: usize,
    pub frequency: f64,
    pub intensity: f64,
    pub spin: usize,
    pub spin_label: String,
}

impl TransitionLine {
    pub fn from_level(&self) -> usize {
        self.from + 1
    }

    pub fn to_level(&self) -> usize {
        self.to + 1
    }

    /// e.g. `Q1 1-7`, lower level number first.
    pub fn label(&self) -> String {
        let (a, b) = (self.from.min(self.to) + 1, self.from.max(self.to) + 1);
        format!("{} {a}-{b}", self.spin_label)
    }
}

/// `q1..qN` for all-qubit registers; otherwise qubits are `Q1, Q2, …` and a
/// single larger qudit is `T` (several are `T1, T2, …`).
fn spin_labels(dims: &[usize]) -> Vec<String> {
    let qudits = dims.iter().filter(|&&d| d > 2).count();
    dims.iter()
        .enumerate()
        .map(|(i, &d)| match (qudits, d) {
            (0, _) => format!("q{}", i + 1),
            (_, 2) => format!("Q{}", i + 1),
            (1, _) => "T".to_string(),
            _ => format!("T{}", i + 1),
        })
        .collect()
}

/// All level pairs differing by one step in exactly one digit.
pub fn enumerate_transitions(h: &CMatrix, dims: &QuditDims) -> Result<Vec<TransitionLine>> {
    Ok(transitions_of(&Hamiltonian::from_matrix(h, dims)?))
}

/// `(lo, hi, spin)` for every level pair whose digits differ by one step in a
/// single position, with `hi` the index whose digit is one larger.
pub fn single_quantum_pairs(dims: &[usize]) -> Vec<(usize, usize, usize)> {
    let total: usize = dims.iter().product();
    let mut out = Vec::new();
    for lo in 0..total {
        let digits = digits_of(lo, dims);
        for (s, &d) in dims.iter().enumerate() {
            if digits[s] + 1 < d {
                let mut up = digits.clone();
                up[s] += 1;
                out.push((lo, index_of(&up, dims), s));
            }
        }
    }
    out
}

fn transitions_of(h: &Hamiltonian) -> Vec<TransitionLine> {
    let ds = h.dims.as_slice();
    let labels = spin_labels(ds);
    let mut out = Vec::new();
    for (lo, hi, s) in single_quantum_pairs(ds) {
        let d = ds[s];
        let k = digits_of(lo, ds)[s];
        // Digit k+1 has m one lower; I₋ connects m → m-1.
        let spin = (d as f64 - 1.0) / 2.0;
        let m = magnetic_number(k, d);
        let intensity = spin * (spin + 1.0) - m * (m - 1.0);
        let (ea, eb) = (h.energies[lo], h.energies[hi]);
        let (from, to) = if ea > eb || (ea == eb && lo < hi) {
            (lo, hi)
        } else {
            (hi, lo)
        };
        out.push(TransitionLine {
            from,
            to,
            frequency: (ea - eb).abs(),
            intensity,
            spin: s,
            spin_label: labels[s].clone(),
        });
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralLine {
    pub frequency: f64,
    pub intensity: f64,
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Spectrum {
    pub lines: Vec<SpectralLine>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Lines without merging.
    pub fn unmerged(lines: &[TransitionLine]) -> Self {
        let mut v: Vec<SpectralLine> = lines
            .iter()
            .map(|l| SpectralLine {
                frequency: l.frequency,
                intensity: l.intensity,
                labels: vec![l.label()],
            })
            .collect();
        v.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
        Self { lines: v }
    }

    /// `frequency_hz,intensity,labels`; labels are `;`-separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frequency_hz,intensity,labels\n");
        for l in &self.lines {
            out.push_str(&format!("{},{},{}\n", l.frequency, l.intensity, l.labels.join(";")));
        }
        out
    }
}

/// Single-linkage merge of lines closer than `tol_hz`, so merged lines end up
/// more than `tol_hz` apart. Frequencies are intensity-weighted means.
pub fn merge_lines(lines: &[TransitionLine], tol_hz: f64) -> Result<Spectrum> {
    if !(tol_hz > 0.0) {
        return Err(domain(format!("merge tolerance must be positive, got {tol_hz}")));
    }
    let mut sorted: Vec<&TransitionLine> = lines.iter().collect();
    sorted.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    let mut groups: Vec<Vec<&TransitionLine>> = Vec::new();
    for l in sorted {
        match groups.last_mut() {
            Some(g) if l.frequency - g.last().unwrap().frequency <= tol_hz => g.push(l),
            _ => groups.push(vec![l]),
        }
    }
    let lines = groups
        .into_iter()
        .map(|g| {
            let intensity: f64 = g.iter().map(|l| l.intensity).sum();
            let frequency = if intensity > 0.0 {
                g.iter().map(|l| l.frequency * l.intensity).sum::<f64>() / intensity
            } else {
                g.iter().map(|l| l.frequency).sum::<f64>() / g.len() as f64
            };
            SpectralLine {
                frequency,
                intensity,
                labels: g.iter().map(|l| l.label()).collect(),
            }
        })
        .collect();
    Ok(Spectrum { lines })
}

/// Qutrit digit `t` → `(q₃, q₄)`.
pub const QUTRIT_EMBEDDING: [(usize, usize); 3] = [(0, 0), (1, 0), (1, 1)];

/// Frozen map from the 12 QQT levels to the 16 QQQQ levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelEmbedding {
    map: [usize; 12],
}

/// Qubit digits map identically; the qutrit goes through [`QUTRIT_EMBEDDING`].
pub fn qqt_level_embedding() -> LevelEmbedding {
    let mut map = [0; 12];
    for (i, slot) in map.iter_mut().enumerate() {
        let d = digits_of(i, &[2, 2, 3]);
        let (q3, q4) = QUTRIT_EMBEDDING[d[2]];
        *slot = index_of(&[d[0], d[1], q3, q4], &[2, 2, 2, 2]);
    }
    LevelEmbedding { map }
}

impl LevelEmbedding {
    /// 0-based QQQQ index of a 0-based QQT index.
    pub fn qqqq_index(&self, qqt: usize) -> usize {
        self.map[qqt]
    }

    pub fn map(&self) -> &[usize; 12] {
        &self.map
    }

    /// The embedded subspace `S`, in QQT order.
    pub fn subspace(&self) -> Vec<usize> {
        self.map.to_vec()
    }

    /// Places a 12×12 operator on `S` inside a zero 16×16 operator.
    pub fn embed_operator(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.nrows() != 12 || m.ncols() != 12 {
            return Err(Error::DimensionMismatch {
                expected: 12,
                actual: m.nrows().max(m.ncols()),
            });
        }
        let mut out = CMatrix::zeros(16, 16);
        for r in 0..12 {
            for c in 0..12 {
                out[(self.map[r], self.map[c])] = m[(r, c)];
            }
        }
        Ok(out)
    }

    /// The `S × S` block of a 16×16 operator.
    pub fn restrict_operator(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.nrows() != 16 || m.ncols() != 16 {
            return Err(Error::DimensionMismatch {
                expected: 16,
                actual: m.nrows().max(m.ncols()),
            });
        }
        Ok(CMatrix::from_fn(12, 12, |r, c| m[(self.map[r], self.map[c])]))
    }

    /// Emulator level pairs `(lower, higher)` (1-based) realizing a QQT line.
    ///
    /// A qubit flip with the qutrit in `1'` is realized with `(q₃,q₄)` = 01 or
    /// 10, both of which give `m₃+m₄ = 0`. A `0'↔1'` step is a q₃ flip and a
    /// `1'↔2'` step a q₄ flip, each with either value of the other qubit.
    pub fn emulated_transitions(&self, line: &TransitionLine) -> Result<Vec<(usize, usize)>> {
        if line.from >= 12 || line.to >= 12 {
            return Err(domain("not a QQT transition"));
        }
        let a = digits_of(line.from, &[2, 2, 3]);
        let b = digits_of(line.to, &[2, 2, 3]);
        let idx = |q1: usize, q2: usize, q3: usize, q4: usize| {
            index_of(&[q1, q2, q3, q4], &[2, 2, 2, 2]) + 1
        };
        let diff: Vec<usize> = (0..3).filter(|&s| a[s] != b[s]).collect();
        let mut pairs = match diff.as_slice() {
            [s] if *s < 2 => {
                let aliases: &[(usize, usize)] = match a[2] {
                    0 => &[(0, 0)],
                    1 => &[(0, 1), (1, 0)],
                    _ => &[(1, 1)],
                };
                aliases
                    .iter()
                    .map(|&(q3, q4)| (idx(a[0], a[1], q3, q4), idx(b[0], b[1], q3, q4)))
                    .collect::<Vec<_>>()
            }
            [2] => match (a[2].min(b[2]), a[2].max(b[2])) {
                (0, 1) => (0..2)
                    .map(|q4| (idx(a[0], a[1], 0, q4), idx(a[0], a[1], 1, q4)))
                    .collect(),
                (1, 2) => (0..2)
                    .map(|q3| (idx(a[0], a[1], q3, 0), idx(a[0], a[1], q3, 1)))
                    .collect(),
                _ => return Err(domain("qutrit transition is not single-quantum")),
            },
            _ => return Err(domain("not a single-spin transition")),
        };
        for p in pairs.iter_mut() {
            *p = (p.0.min(p.1), p.0.max(p.1));
        }
        pairs.sort_unstable();
        Ok(pairs)
    }
}

/// High-temperature state `(1/D)(I - ε·H₀/‖H₀‖_max)` with `H₀` the traceless
/// part of `H`. A zero Hamiltonian gives the maximally mixed state.
pub fn thermal_state(h: &Hamiltonian, epsilon: f64) -> Result<DensityMatrix> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(domain(format!("epsilon must be finite and nonnegative, got {epsilon}")));
    }
    let d = h.energies.len();
    let mean = h.energies.iter().sum::<f64>() / d as f64;
    let centered: Vec<f64> = h.energies.iter().map(|e| e - mean).collect();
    let scale = centered.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    if scale == 0.0 || epsilon == 0.0 {
        return Ok(DensityMatrix::maximally_mixed(&h.dims));
    }
    let m = CMatrix::from_fn(d, d, |r, c| {
        if r == c {
            ((1.0 - epsilon * centered[r] / scale) / d as f64).into()
        } else {
            0.0.into()
        }
    });
    Ok(DensityMatrix::from_parts(m, h.dims.clone(), Normalization::UnitTrace))
}

//! Partial-tomography experiments, ideal readout and least-squares reconstruction.
//!
//! A readout is the list of single-quantum coherences `ρ′[lo, hi]` after an
//! experiment's pulses, one per allowed transition. Readout pulses are
//! `(π/2)` rotations about x (`X`) or y (`Y`); primed qutrit operations act
//! on the spin-1 qutrit of the QQT system or jointly on spins 3 and 4 of the
//! emulator.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Dyn, SVD};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::pulse::PulseEvent;
use crate::qudit::{digits_of, CMatrix, DensityMatrix, Normalization, QuditDims};
use crate::spin::{qqt_level_embedding, single_quantum_pairs, SystemKind};
use crate::spinops::register_rotation;

/// The 18 single-pulse labels for the QQT system; position 3 is the qutrit.
pub const QQT_LABELS: [&str; 18] = [
    "III", "YII", "XII", "IYI", "IXI", "IIY", "IYY", "IXY", "YIY", "XIX", "XXI", "YYI", "XYI",
    "YXI", "XYY", "XXY", "YXX", "YYX",
];

/// Flip angles of the gradient-sandwich experiment.
pub const LAMBDA_FLIP: f64 = -PI / 2.0;
pub const UPSILON_FLIP: f64 = PI / 4.0;
/// Qutrit flip angle of the diagonal readout. A `π/2` readout leaves the
/// quadrupolar population pattern `(1, -2, 1)` invisible on a spin 1.
pub const QUTRIT_DIAGONAL_FLIP: f64 = PI / 4.0;

const Y_AXIS: f64 = PI / 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub label: String,
    pub events: Vec<PulseEvent>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSet {
    pub system: SystemKind,
    /// The 19 coherence experiments.
    pub experiments: Vec<Experiment>,
    /// Gradient followed by one readout rotation per spin (or qutrit).
    pub diagonal: Vec<Experiment>,
}

impl ExperimentSet {
    pub fn all(&self) -> Vec<Experiment> {
        self.experiments.iter().chain(&self.diagonal).cloned().collect()
    }
}

fn qutrit_targets(system: SystemKind) -> Vec<usize> {
    match system {
        SystemKind::Qqt => vec![2],
        SystemKind::Qqqq => vec![2, 3],
    }
}

/// `XIY` → `XIY′` or `XIYY`.
pub fn system_label(base: &str, system: SystemKind) -> String {
    let (head, last) = base.split_at(2);
    match system {
        SystemKind::Qqt => format!("{head}{last}′"),
        SystemKind::Qqqq => format!("{head}{last}{last}"),
    }
}

fn label_events(base: &str, system: SystemKind) -> Vec<PulseEvent> {
    let mut out = Vec::new();
    for (k, ch) in base.chars().enumerate() {
        let axis = match ch {
            'X' => 0.0,
            'Y' => Y_AXIS,
            _ => continue,
        };
        let targets = if k < 2 { vec![k] } else { qutrit_targets(system) };
        out.push(PulseEvent::rotation(&targets, PI / 2.0, axis));
    }
    out
}

fn experiment_set(system: SystemKind) -> ExperimentSet {
    let q = qutrit_targets(system);
    let mut experiments: Vec<Experiment> = QQT_LABELS
        .iter()
        .map(|b| Experiment {
            label: system_label(b, system),
            events: label_events(b, system),
        })
        .collect();
    let (lam, ups) = match system {
        SystemKind::Qqt => ("IIΛ′", "IIΥ′"),
        SystemKind::Qqqq => ("IIΛΛ", "IIΥΥ"),
    };
    experiments.push(Experiment {
        label: format!("{lam}-Grad-{ups}"),
        events: vec![
            PulseEvent::rotation(&q, LAMBDA_FLIP, Y_AXIS),
            PulseEvent::Gradient,
            PulseEvent::rotation(&q, UPSILON_FLIP, Y_AXIS),
        ],
    });
    let mut readouts = vec![(vec![0], PI / 2.0), (vec![1], PI / 2.0)];
    readouts.push((q, QUTRIT_DIAGONAL_FLIP));
    let diagonal = readouts
        .into_iter()
        .enumerate()
        .map(|(k, (targets, flip))| Experiment {
            label: format!("Grad-{}", ["YII", "IYI", "IIY"][k]),
            events: vec![
                PulseEvent::Gradient,
                PulseEvent::rotation(&targets, flip, Y_AXIS),
            ],
        })
        .collect();
    ExperimentSet {
        system,
        experiments,
        diagonal,
    }
}

pub fn qqt_experiment_set() -> ExperimentSet {
    experiment_set(SystemKind::Qqt)
}

pub fn qqqq_experiment_set() -> ExperimentSet {
    experiment_set(SystemKind::Qqqq)
}

enum Step {
    Unitary(CMatrix),
    Dephase,
}

fn steps(dims: &QuditDims, events: &[PulseEvent]) -> Result<Vec<Step>> {
    events
        .iter()
        .map(|e| match e {
            PulseEvent::Rotation { targets, flip, axis } => Ok(Step::Unitary(register_rotation(
                dims.as_slice(),
                targets,
                *flip,
                *axis,
            )?)),
            PulseEvent::Gradient => Ok(Step::Dephase),
            PulseEvent::Delay { .. } => Err(domain("tomography experiments contain no delays")),
        })
        .collect()
}

fn run_steps(m: &CMatrix, steps: &[Step]) -> CMatrix {
    let mut out = m.clone();
    for s in steps {
        out = match s {
            Step::Unitary(r) => r * out * r.adjoint(),
            Step::Dephase => CMatrix::from_diagonal(&out.diagonal()),
        };
    }
    out
}

/// Applies rotations and gradients to any operator over `dims`.
pub fn evolve_operator(m: &CMatrix, dims: &QuditDims, events: &[PulseEvent]) -> Result<CMatrix> {
    Ok(run_steps(m, &steps(dims, events)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Readout {
    /// `(lo, hi)` level indices, in the order of [`single_quantum_pairs`].
    pub transitions: Vec<(usize, usize)>,
    pub amplitudes: Vec<Complex64>,
}

fn readout_from(out: &CMatrix, transitions: &[(usize, usize)]) -> Readout {
    Readout {
        transitions: transitions.to_vec(),
        amplitudes: transitions.iter().map(|&(lo, hi)| out[(lo, hi)]).collect(),
    }
}

fn transitions_of(dims: &QuditDims) -> Vec<(usize, usize)> {
    single_quantum_pairs(dims.as_slice())
        .into_iter()
        .map(|(lo, hi, _)| (lo, hi))
        .collect()
}

fn readout_of(m: &CMatrix, dims: &QuditDims, e: &Experiment) -> Result<Readout> {
    let out = evolve_operator(m, dims, &e.events)?;
    Ok(readout_from(&out, &transitions_of(dims)))
}

pub fn simulate_readout(rho: &DensityMatrix, e: &Experiment, system: SystemKind) -> Result<Readout> {
    let dims = system.dims();
    if rho.dim() != dims.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: dims.total_dim(),
            actual: rho.dim(),
        });
    }
    readout_of(rho.matrix(), &dims, e)
}

/// Which matrix elements the reconstruction solves for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Support {
    /// Every element of the register.
    Full,
    /// Elements between the 12 embedded emulator levels; everything else is
    /// assumed zero and shows up in the fit residual if it is not.
    Embedded,
    /// Populations only.
    Diagonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Part {
    Diag,
    Re,
    Im,
}

#[derive(Clone, Debug, Serialize)]
pub struct RankReport {
    /// Real parameters of a unit-trace Hermitian matrix on the support.
    pub parameters: usize,
    /// Of those, determined by the readouts together with the trace condition.
    pub determined: usize,
    pub null_dim: usize,
    pub smallest_singular_value: f64,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub rho: DensityMatrix,
    /// `‖Mx - y‖₂` of the least-squares fit.
    pub residual: f64,
    pub rank: RankReport,
}

/// Linear map from real coefficients of a Hermitian matrix to stacked readouts.
#[derive(Clone, Debug)]
pub struct MeasurementMap {
    system: SystemKind,
    experiments: Vec<Experiment>,
    unknowns: Vec<(usize, usize, Part)>,
    /// Readout rows followed by one trace row.
    matrix: DMatrix<f64>,
    svd: SVD<f64, Dyn, Dyn>,
    rank: RankReport,
    support_dim: usize,
}

const RANK_TOL: f64 = 1e-9;

impl MeasurementMap {
    pub fn new(system: SystemKind, experiments: &[Experiment], support: Support) -> Result<Self> {
        let dims = system.dims();
        let d = dims.total_dim();
        let levels: Vec<usize> = match (support, system) {
            (Support::Embedded, SystemKind::Qqqq) => qqt_level_embedding().subspace(),
            (Support::Embedded, SystemKind::Qqt) => {
                return Err(domain("the embedded support applies to the emulator"))
            }
            _ => (0..d).collect(),
        };
        let mut unknowns: Vec<(usize, usize, Part)> =
            levels.iter().map(|&i| (i, i, Part::Diag)).collect();
        if support != Support::Diagonal {
            for (a, &i) in levels.iter().enumerate() {
                for &j in &levels[a + 1..] {
                    unknowns.push((i.min(j), i.max(j), Part::Re));
                    unknowns.push((i.min(j), i.max(j), Part::Im));
                }
            }
        }
        let transitions = transitions_of(&dims);
        let rows_per = 2 * transitions.len();
        let compiled = experiments
            .iter()
            .map(|e| steps(&dims, &e.events))
            .collect::<Result<Vec<_>>>()?;
        let mut matrix = DMatrix::zeros(rows_per * experiments.len() + 1, unknowns.len());
        for (col, &(i, j, part)) in unknowns.iter().enumerate() {
            let basis = basis_operator(d, i, j, part);
            for (k, st) in compiled.iter().enumerate() {
                let r = readout_from(&run_steps(&basis, st), &transitions);
                for (t, z) in r.amplitudes.iter().enumerate() {
                    matrix[(k * rows_per + 2 * t, col)] = z.re;
                    matrix[(k * rows_per + 2 * t + 1, col)] = z.im;
                }
            }
            if part == Part::Diag {
                matrix[(rows_per * experiments.len(), col)] = 1.0;
            }
        }
        let svd = matrix.clone().svd(true, true);
        let sv = &svd.singular_values;
        let max = sv.max();
        let determined = sv.iter().filter(|&&s| s > RANK_TOL * max).count().saturating_sub(1);
        let parameters = unknowns.len() - 1;
        let rank = RankReport {
            parameters,
            determined,
            null_dim: parameters - determined,
            smallest_singular_value: sv.min(),
        };
        Ok(Self {
            system,
            experiments: experiments.to_vec(),
            unknowns,
            matrix,
            svd,
            rank,
            support_dim: levels.len(),
        })
    }

    pub fn experiments(&self) -> &[Experiment] {
        &self.experiments
    }

    pub fn rank_report(&self) -> RankReport {
        self.rank.clone()
    }

    pub fn support_dim(&self) -> usize {
        self.support_dim
    }

    /// Least-squares solution with unit trace; fails on an incomplete map.
    pub fn reconstruct(&self, readouts: &[Readout]) -> Result<Reconstruction> {
        let rank = self.rank_report();
        if rank.null_dim > 0 {
            return Err(Error::InformationallyIncomplete {
                parameters: rank.parameters,
                determined: rank.determined,
                null_dim: rank.null_dim,
            });
        }
        self.solve(readouts, rank)
    }

    /// Minimum-norm solution even when some directions are undetermined; the
    /// rank report names how many.
    pub fn reconstruct_partial(&self, readouts: &[Readout]) -> Result<Reconstruction> {
        self.solve(readouts, self.rank_report())
    }

    fn solve(&self, readouts: &[Readout], rank: RankReport) -> Result<Reconstruction> {
        if readouts.len() != self.experiments.len() {
            return Err(Error::DimensionMismatch {
                expected: self.experiments.len(),
                actual: readouts.len(),
            });
        }
        let mut y = DVector::zeros(self.matrix.nrows());
        let mut row = 0;
        for r in readouts {
            if 2 * r.amplitudes.len() * self.experiments.len() + 1 != self.matrix.nrows() {
                return Err(domain("readout length does not match the system"));
            }
            for z in &r.amplitudes {
                y[row] = z.re;
                y[row + 1] = z.im;
                row += 2;
            }
        }
        y[row] = 1.0;
        let eps = RANK_TOL * self.svd.singular_values.max();
        let x = self.svd.solve(&y, eps).map_err(|e| domain(e.to_string()))?;
        let residual = (&self.matrix * &x - &y).norm();
        let d = self.system.dims().total_dim();
        let mut m = CMatrix::zeros(d, d);
        for (&(i, j, part), &v) in self.unknowns.iter().zip(x.iter()) {
            match part {
                Part::Diag => m[(i, i)] += Complex64::new(v, 0.0),
                Part::Re => {
                    m[(i, j)] += Complex64::new(v, 0.0);
                    m[(j, i)] += Complex64::new(v, 0.0);
                }
                Part::Im => {
                    m[(i, j)] += Complex64::new(0.0, v);
                    m[(j, i)] += Complex64::new(0.0, -v);
                }
            }
        }
        Ok(Reconstruction {
            rho: DensityMatrix::from_parts(m, self.system.dims(), Normalization::UnitTrace),
            residual,
            rank,
        })
    }
}

/// Hermitian basis: `E_ii`, `E_ij + E_ji` and `i(E_ij - E_ji)`, so the
/// coefficients are the diagonal and the real and imaginary parts of `ρ[i, j]`.
fn basis_operator(d: usize, i: usize, j: usize, part: Part) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    match part {
        Part::Diag => m[(i, i)] = Complex64::new(1.0, 0.0),
        Part::Re => {
            m[(i, j)] = Complex64::new(1.0, 0.0);
            m[(j, i)] = Complex64::new(1.0, 0.0);
        }
        Part::Im => {
            m[(i, j)] = Complex64::new(0.0, 1.0);
            m[(j, i)] = Complex64::new(0.0, -1.0);
        }
    }
    m
}

/// Default support: full for QQT, embedded levels for the emulator.
pub fn default_support(system: SystemKind) -> Support {
    match system {
        SystemKind::Qqt => Support::Full,
        SystemKind::Qqqq => Support::Embedded,
    }
}

/// Reconstructs from `(experiment, readout)` pairs using the default support.
pub fn reconstruct(readouts: &[(Experiment, Readout)], system: SystemKind) -> Result<DensityMatrix> {
    let experiments: Vec<Experiment> = readouts.iter().map(|(e, _)| e.clone()).collect();
    let data: Vec<Readout> = readouts.iter().map(|(_, r)| r.clone()).collect();
    let map = MeasurementMap::new(system, &experiments, default_support(system))?;
    Ok(map.reconstruct(&data)?.rho)
}

/// Runs every experiment of `set` on `rho`.
pub fn simulate_set(rho: &DensityMatrix, set: &ExperimentSet) -> Result<Vec<(Experiment, Readout)>> {
    set.all()
        .into_iter()
        .map(|e| {
            let r = simulate_readout(rho, &e, set.system)?;
            Ok((e, r))
        })
        .collect()
}

/// `Tr(A†B) / (‖A‖_F ‖B‖_F)`.
pub fn fidelity(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: b.nrows(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(domain("fidelity of a zero matrix is undefined"));
    }
    let overlap = (a.adjoint() * b).trace() / (na * nb);
    if overlap.im.abs() > 1e-12 {
        return Err(domain(format!(
            "overlap has imaginary part {:e}; inputs are not Hermitian",
            overlap.im
        )));
    }
    Ok(overlap.re)
}

/// `|00 0′⟩` style labels: qubit digits run together, larger qudits primed.
pub fn basis_labels(dims: &QuditDims) -> Vec<String> {
    let ds = dims.as_slice();
    (0..dims.total_dim())
        .map(|i| {
            let digits = digits_of(i, ds);
            let mut s = String::from("|");
            for (k, (&x, &d)) in digits.iter().zip(ds).enumerate() {
                if d > 2 {
                    if k > 0 {
                        s.push(' ');
                    }
                    let _ = write!(s, "{x}′");
                } else {
                    let _ = write!(s, "{x}");
                }
            }
            s.push('⟩');
            s
        })
        .collect()
}

/// Structured text: header with dims and basis order, then one row per line
/// of `re im` pairs.
pub fn write_matrix(m: &CMatrix, dims: &QuditDims) -> String {
    let mut out = format!("# dims {dims}\n# basis {}\n", basis_labels(dims).join(" "));
    out.push_str("# rows of real imaginary pairs\n");
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| format!("{:?} {:?}", m[(r, c)].re, m[(r, c)].im))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_matrix(text: &str) -> Result<(CMatrix, QuditDims)> {
    let mut dims = None;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("# dims") {
            dims = Some(rest.trim().parse::<QuditDims>()?);
        } else if line.is_empty() || line.starts_with('#') {
            continue;
        } else {
            let v = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line: n + 1, message: e.to_string() })?;
            rows.push(v);
        }
    }
    let dims = dims.ok_or(Error::Parse { line: 0, message: "missing dims header".into() })?;
    let d = dims.total_dim();
    if rows.len() != d || rows.iter().any(|r| r.len() != 2 * d) {
        return Err(Error::Parse {
            line: 0,
            message: format!("expected {d} rows of {} numbers", 2 * d),
        });
    }
    let m = CMatrix::from_fn(d, d, |r, c| Complex64::new(rows[r][2 * c], rows[r][2 * c + 1]));
    Ok((m, dims))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qudit::max_abs_diff;
    use crate::random::{random_density, random_unit_trace_hermitian};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn round_trip(rho: &DensityMatrix, set: &ExperimentSet, map: &MeasurementMap) -> f64 {
        let data = simulate_set(rho, set).unwrap();
        let readouts: Vec<Readout> = data.into_iter().map(|(_, r)| r).collect();
        let rec = map.reconstruct(&readouts).unwrap();
        max_abs_diff(rec.rho.matrix(), rho.matrix())
    }

    #[test]
    fn set_shapes() {
        let s = qqt_experiment_set();
        assert_eq!(s.experiments.len(), 19);
        assert_eq!(s.experiments[0].label, "III′");
        assert!(s.experiments[0].events.is_empty());
        let last = &s.experiments[18].events;
        assert_eq!(last.len(), 3);
        assert_eq!(last[1], PulseEvent::Gradient);
        assert!(matches!(last[0], PulseEvent::Rotation { flip, .. } if flip == -PI / 2.0));
        assert!(matches!(last[2], PulseEvent::Rotation { flip, .. } if flip == PI / 4.0));
        let q = qqqq_experiment_set();
        assert_eq!(q.experiments.len(), 19);
        let labels: Vec<&str> = q.experiments.iter().map(|e| e.label.as_str()).collect();
        assert_eq!(labels[5], "IIYY");
        assert_eq!(labels[9], "XIXX");
        assert_eq!(labels[17], "YYXX");
        assert!(matches!(&q.experiments[18].events[0], PulseEvent::Rotation { targets, .. } if targets == &vec![2, 3]));
    }

    #[test]
    fn variable_count() {
        let map = MeasurementMap::new(SystemKind::Qqt, &qqt_experiment_set().all(), Support::Full).unwrap();
        let r = map.rank_report();
        assert_eq!(r.parameters, 143);
        assert_eq!(r.parameters, 11 + 132);
    }

    #[test]
    fn qqt_map_is_complete() {
        let map = MeasurementMap::new(SystemKind::Qqt, &qqt_experiment_set().all(), Support::Full).unwrap();
        let r = map.rank_report();
        assert_eq!((r.determined, r.null_dim), (143, 0), "{r:?}");
    }

    #[test]
    fn coherence_experiments_alone_are_incomplete() {
        let map = MeasurementMap::new(SystemKind::Qqt, &qqt_experiment_set().experiments, Support::Full).unwrap();
        let r = map.rank_report();
        assert!(r.null_dim > 0);
        let rho = DensityMatrix::maximally_mixed(&SystemKind::Qqt.dims());
        let data: Vec<Readout> = map.experiments().iter().map(|e| simulate_readout(&rho, e, SystemKind::Qqt).unwrap()).collect();
        assert!(matches!(map.reconstruct(&data), Err(Error::InformationallyIncomplete { .. })));
    }

    #[test]
    fn half_pi_qutrit_diagonal_readout_misses_one_direction() {
        let mut exps = qqt_experiment_set().all();
        if let PulseEvent::Rotation { flip, .. } = &mut exps[21].events[1] {
            *flip = PI / 2.0;
        }
        let map = MeasurementMap::new(SystemKind::Qqt, &exps, Support::Full).unwrap();
        assert_eq!(map.rank_report().null_dim, 1);
    }

    #[test]
    fn emulator_full_support_is_incomplete_but_embedded_is_not() {
        let all = qqqq_experiment_set().all();
        let full = MeasurementMap::new(SystemKind::Qqqq, &all, Support::Full).unwrap().rank_report();
        assert!(full.null_dim > 0);
        let emb = MeasurementMap::new(SystemKind::Qqqq, &all, Support::Embedded).unwrap().rank_report();
        assert_eq!((emb.parameters, emb.null_dim), (143, 0));
    }

    #[test]
    fn maximally_mixed_examples() {
        let set = qqt_experiment_set();
        let rho = DensityMatrix::maximally_mixed(&SystemKind::Qqt.dims());
        for e in set.all() {
            let r = simulate_readout(&rho, &e, SystemKind::Qqt).unwrap();
            assert!(r.amplitudes.iter().all(|z| z.norm() < 1e-15));
        }
        let map = MeasurementMap::new(SystemKind::Qqt, &set.all(), Support::Full).unwrap();
        assert!(round_trip(&rho, &set, &map) < 1e-12);
    }

    #[test]
    fn diagonal_protocol_recovers_populations() {
        let set = qqt_experiment_set();
        let map = MeasurementMap::new(SystemKind::Qqt, &set.diagonal, Support::Diagonal).unwrap();
        assert_eq!(map.rank_report().null_dim, 0);
        for k in [0, 5, 11] {
            let rho = DensityMatrix::basis_state(k, &SystemKind::Qqt.dims()).unwrap();
            let data: Vec<Readout> = set.diagonal.iter().map(|e| simulate_readout(&rho, e, SystemKind::Qqt).unwrap()).collect();
            let rec = map.reconstruct(&data).unwrap();
            assert!(max_abs_diff(rec.rho.matrix(), rho.matrix()) < 1e-12);
        }
    }

    #[test]
    fn random_round_trips() {
        let set = qqt_experiment_set();
        let map = MeasurementMap::new(SystemKind::Qqt, &set.all(), Support::Full).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let rho = random_density(&SystemKind::Qqt.dims(), &mut rng);
            assert!(round_trip(&rho, &set, &map) <= 1e-6);
        }
        let rho = random_unit_trace_hermitian(&SystemKind::Qqt.dims(), &mut rng);
        assert!(!rho.is_physical());
        assert!(round_trip(&rho, &set, &map) <= 1e-6);
    }

    #[test]
    fn embedded_state_reconstructs_on_the_emulator() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let small = random_density(&SystemKind::Qqt.dims(), &mut rng);
        let emb = qqt_level_embedding();
        let big = DensityMatrix::new(emb.embed_operator(small.matrix()).unwrap(), SystemKind::Qqqq.dims()).unwrap();
        let set = qqqq_experiment_set();
        let data = simulate_set(&big, &set).unwrap();
        let rec = reconstruct(&data, SystemKind::Qqqq).unwrap();
        let back = emb.restrict_operator(rec.matrix()).unwrap();
        assert!(max_abs_diff(&back, small.matrix()) <= 1e-6, "{}", max_abs_diff(&back, small.matrix()));
    }

    #[test]
    fn readout_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dims = SystemKind::Qqt.dims();
        let a = random_density(&dims, &mut rng);
        let b = random_density(&dims, &mut rng);
        let sum = DensityMatrix::from_parts((a.matrix() + b.matrix()).scale(0.5), dims.clone(), Normalization::UnitTrace);
        for e in qqt_experiment_set().all() {
            let ra = simulate_readout(&a, &e, SystemKind::Qqt).unwrap();
            let rb = simulate_readout(&b, &e, SystemKind::Qqt).unwrap();
            let rs = simulate_readout(&sum, &e, SystemKind::Qqt).unwrap();
            for k in 0..rs.amplitudes.len() {
                assert!((rs.amplitudes[k] - (ra.amplitudes[k] + rb.amplitudes[k]) * 0.5).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn fidelity_examples() {
        let dims = SystemKind::Qqt.dims();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = random_density(&dims, &mut rng);
        assert!((fidelity(rho.matrix(), rho.matrix()).unwrap() - 1.0).abs() < 1e-12);
        let p0 = DensityMatrix::basis_state(0, &dims).unwrap();
        let p1 = DensityMatrix::basis_state(1, &dims).unwrap();
        assert_eq!(fidelity(p0.matrix(), p1.matrix()).unwrap(), 0.0);
        assert!(fidelity(&CMatrix::zeros(12, 12), rho.matrix()).is_err());
        let sigma = crate::random::random_traceless_hermitian(12, &mut rng);
        let mut last = 0.0;
        for eps in [1e-2, 1e-3, 1e-4, 1e-5] {
            let f = fidelity(rho.matrix(), &(rho.matrix() + sigma.scale(eps))).unwrap();
            let gap = (1.0 - f).abs();
            assert!(gap <= 10.0 * eps, "eps {eps}: {gap}");
            if last > 0.0 {
                assert!(gap < last);
            }
            last = gap;
        }
    }

    #[test]
    fn matrix_text_round_trip() {
        let dims = SystemKind::Qqt.dims();
        let rho = random_density(&dims, &mut ChaCha8Rng::seed_from_u64(1));
        let text = write_matrix(rho.matrix(), &dims);
        assert!(text.contains("|00 0′⟩") && text.contains("|11 2′⟩"));
        let (m, d) = read_matrix(&text).unwrap();
        assert_eq!(d, dims);
        assert_eq!(&m, rho.matrix());
        assert_eq!(basis_labels(&SystemKind::Qqqq.dims())[5], "|0101⟩");
    }

    proptest! {
        #[test]
        fn fidelity_is_symmetric_and_scale_invariant(seed in 0u64..300, a in 0.1f64..10.0, b in 0.1f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dims = SystemKind::Qqt.dims();
            let x = random_density(&dims, &mut rng);
            let y = random_density(&dims, &mut rng);
            let f = fidelity(x.matrix(), y.matrix()).unwrap();
            prop_assert!((f - fidelity(y.matrix(), x.matrix()).unwrap()).abs() < 1e-12);
            prop_assert!((f - fidelity(&x.matrix().scale(a), &y.matrix().scale(b)).unwrap()).abs() < 1e-12);
            prop_assert!(f > 0.0 && f <= 1.0 + 1e-12);
        }
    }
}

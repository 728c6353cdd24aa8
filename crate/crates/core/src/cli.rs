//! Command-line front end.
//!
//! Every command prints a JSON [`RunReport`] on stdout and exits with 0 when
//! all checks pass, 1 when a check fails, 2 on a usage or input error and 3 on
//! any other error. Output files are written atomically (temporary file in the
//! target directory, then rename).
//!
//! Report schema (all commands):
//!
//! ```text
//! {
//!   "command": string,              // subcommand name
//!   "inputs_digest": string,        // hex SHA-256 over command, flags and config text
//!   "pass": bool,                   // true iff every check passed
//!   "checks": [{"name": string, "pass": bool, "value": number|null, "threshold": number|null}],
//!   "metrics": {string: any},       // command-specific numbers and counts
//!   "outputs": [string],            // files written, as given on the command line
//!   "wall_time_s": number           // only with --timing
//! }
//! ```
//!
//! Circuit files use one gate per line: `F q` is the Fourier gate on qudit `q`
//! and `R j k s` the controlled phase between qudits `j < k` with sign `s`
//! (`+1` or `-1`), all 1-based, after a `DIMS d1 d2 ...` header.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::circuit::{synthesize_qft, verify_qft_equivalence};
use crate::error::{Error, Result};
use crate::pulse::verify::{framed_propagator, qft_target};
use crate::pulse::{compile_qft_with, verify_sequence, CompileOptions};
use crate::qudit::{apply, CMatrix, DensityMatrix, QuditDims, Unitary};
use crate::random::random_density;
use crate::spin::{
    build_hamiltonian, merge_lines, qqt_level_embedding, thermal_state, SpinSystemParams,
    Spectrum, SystemKind, DEFAULT_MERGE_TOL_HZ,
};
use crate::tomography::{
    default_support, fidelity, qqqq_experiment_set, qqt_experiment_set, simulate_set,
    write_matrix, MeasurementMap, Readout,
};

#[derive(Debug, Parser)]
#[command(name = "hqft", version, about = "Hybrid qubit-qutrit QFT verification pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Add wall time to the report (reports are then no longer reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize the QFT circuit and compare it with the direct matrix.
    QftVerify(QftVerifyArgs),
    /// Line list of a spin system.
    Spectrum(SpectrumArgs),
    /// Compile the QFT to an emulator pulse schedule and simulate it.
    Pulse(PulseArgs),
    /// Random states through simulated tomography and back.
    TomoRoundtrip(TomoArgs),
    /// Thermal state, compiled QFT, tomography, comparison with the ideal output.
    FullPipeline(PipelineArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct QftVerifyArgs {
    /// Register dimensions such as `2,2,3`; repeat for several registers.
    #[arg(long, value_parser = parse_dims)]
    #[serde(serialize_with = "ser_dims")]
    pub dims: Vec<QuditDims>,
    /// Every register in {2,3,4}^N with N ≤ 3 and total dimension ≤ 36.
    #[arg(long)]
    pub all: bool,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Write the synthesized circuit (first register only).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    #[serde(skip)]
    pub jobs: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    /// Spin-system TOML; the ideal emulator when absent.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// CSV destination.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// List every transition separately.
    #[arg(long)]
    pub no_merge: bool,
    /// Merge lines closer than this (Hz).
    #[arg(long, default_value_t = DEFAULT_MERGE_TOL_HZ)]
    pub tol: f64,
    /// Fail unless the spectrum has exactly this many lines.
    #[arg(long)]
    pub expect_lines: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct PulseArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Sequence file destination.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Required fidelity is `1 - tol`.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub leak_tol: f64,
    /// Negative control: misplace one refocusing pulse.
    #[arg(long)]
    pub faulty_echoes: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum SystemArg {
    Qqt,
    Qqqq,
}

impl From<SystemArg> for SystemKind {
    fn from(s: SystemArg) -> Self {
        match s {
            SystemArg::Qqt => SystemKind::Qqt,
            SystemArg::Qqqq => SystemKind::Qqqq,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TomoArgs {
    #[arg(long, value_enum, default_value_t = SystemArg::Qqt)]
    pub system: SystemArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random states.
    #[arg(long, default_value_t = 25)]
    pub states: usize,
    /// Largest allowed elementwise reconstruction error.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 1)]
    #[serde(skip)]
    pub jobs: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PipelineArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Directory for `rho_theory.txt` and `rho_expt.txt`.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Draw the input state from this seed instead of using the thermal state.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Polarization of the thermal input state.
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    /// Required deviation fidelity is `1 - tol`.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long)]
    pub faulty_echoes: bool,
}

fn parse_dims(s: &str) -> std::result::Result<QuditDims, String> {
    s.parse::<QuditDims>().map_err(|e| e.to_string())
}

fn ser_dims<S: serde::Serializer>(dims: &[QuditDims], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(dims.iter().map(|d| d.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs_digest: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, Value>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl RunReport {
    fn new(command: &str, digest: String) -> Self {
        Self {
            command: command.to_string(),
            inputs_digest: digest,
            pass: true,
            checks: Vec::new(),
            metrics: BTreeMap::new(),
            outputs: Vec::new(),
            wall_time_s: None,
        }
    }

    fn check(&mut self, name: impl Into<String>, pass: bool, value: Option<f64>, threshold: Option<f64>) {
        let name = name.into();
        assert!(
            self.checks.iter().all(|c| c.name != name),
            "check `{name}` recorded twice"
        );
        self.pass &= pass;
        self.checks.push(Check {
            name,
            pass,
            value,
            threshold,
        });
    }

    fn metric(&mut self, key: &str, v: impl Serialize) {
        self.metrics
            .insert(key.to_string(), serde_json::to_value(v).expect("metric serializes"));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// SHA-256 over the command, its flags and the text of every input file.
fn digest(command: &str, args: &impl Serialize, files: &[&str]) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(serde_json::to_vec(args).expect("args serialize"));
    for f in files {
        h.update([0]);
        h.update(f.as_bytes());
    }
    hex::encode(h.finalize())
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<(SpinSystemParams, String)> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            Ok((SpinSystemParams::from_toml_str(&text)?, text))
        }
        None => {
            let p = SpinSystemParams::ideal_emulator();
            let text = p.to_toml_string();
            Ok((p, text))
        }
    }
}

/// Order-preserving map over `items` on up to `jobs` threads.
fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

/// Registers in `{2,3,4}^N`, `N ≤ 3`, total dimension at most 36.
pub fn small_registers() -> Vec<QuditDims> {
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![vec![]];
    while let Some(v) = stack.pop() {
        if !v.is_empty() {
            out.push(QuditDims::new(v.clone()).expect("dims ≥ 2"));
        }
        if v.len() < 3 {
            for d in [2, 3, 4] {
                let mut w = v.clone();
                w.push(d);
                if w.iter().product::<usize>() <= 36 {
                    stack.push(w);
                }
            }
        }
    }
    out.sort_by(|a, b| (a.len(), a.as_slice()).cmp(&(b.len(), b.as_slice())));
    out
}

pub fn cmd_qft_verify(args: &QftVerifyArgs) -> Result<RunReport> {
    let mut registers = args.dims.clone();
    if args.all {
        registers.extend(small_registers());
    }
    if registers.is_empty() {
        return Err(Error::Config {
            field: "dims".into(),
            message: "give --dims or --all".into(),
        });
    }
    let mut report = RunReport::new("qft-verify", digest("qft-verify", args, &[]));
    let results = par_map(&registers, args.jobs, |d| verify_qft_equivalence(d, args.tol));
    let mut worst = 0.0f64;
    let mut seen = std::collections::HashSet::new();
    for (d, r) in registers.iter().zip(results) {
        if !seen.insert(d.to_string()) {
            continue;
        }
        match r {
            Ok(r) => {
                worst = worst.max(r.max_error);
                report.check(format!("qft {d}"), r.pass, Some(r.max_error), Some(args.tol));
            }
            Err(Error::Verification(_)) => report.check(format!("qft {d}"), false, None, Some(args.tol)),
            Err(e) => return Err(e),
        }
    }
    report.metric("registers", seen.len());
    report.metric("max_error", worst);
    if let Some(out) = &args.out {
        write_atomic(out, &synthesize_qft(&registers[0]).to_text())?;
        report.outputs.push(out.display().to_string());
    }
    Ok(report)
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<RunReport> {
    let (p, text) = load_config(args.config.as_deref())?;
    let mut report = RunReport::new("spectrum", digest("spectrum", args, &[&text]));
    let lines = build_hamiltonian(&p).transitions();
    let spectrum = if args.no_merge {
        Spectrum::unmerged(&lines)
    } else {
        merge_lines(&lines, args.tol)?
    };
    report.metric("system", p.kind().to_string());
    report.metric("transitions", lines.len());
    report.metric("lines", spectrum.len());
    report.metric(
        "total_intensity",
        spectrum.lines.iter().map(|l| l.intensity).sum::<f64>(),
    );
    if let Some(n) = args.expect_lines {
        report.check("line count", spectrum.len() == n, Some(spectrum.len() as f64), Some(n as f64));
    }
    if let Some(out) = &args.out {
        write_atomic(out, &spectrum.to_csv())?;
        report.outputs.push(out.display().to_string());
    }
    Ok(report)
}

pub fn cmd_pulse(args: &PulseArgs) -> Result<RunReport> {
    let (p, text) = load_config(args.config.as_deref())?;
    let mut report = RunReport::new("pulse", digest("pulse", args, &[&text]));
    let options = CompileOptions {
        faulty_echoes: args.faulty_echoes,
    };
    let seq = compile_qft_with(&p, options)?;
    let r = verify_sequence(&seq, &p, args.tol)?;
    report.check(
        "process fidelity",
        r.process_fidelity >= 1.0 - args.tol,
        Some(r.process_fidelity),
        Some(1.0 - args.tol),
    );
    report.check("subspace leakage", r.leakage <= args.leak_tol, Some(r.leakage), Some(args.leak_tol));
    report.metric("process_fidelity", r.process_fidelity);
    report.metric("fidelity_without_frames", r.fidelity_without_frames);
    report.metric("leakage", r.leakage);
    report.metric("events", r.events);
    report.metric("total_delay_s", r.total_delay_s);
    if let Some(out) = &args.out {
        write_atomic(out, &seq.to_text())?;
        report.outputs.push(out.display().to_string());
    }
    Ok(report)
}

/// Reconstructs `rho` from the full protocol of `system`; returns the
/// reconstruction and the fit residual.
fn tomography_round(map: &MeasurementMap, rho: &DensityMatrix, system: SystemKind) -> Result<(DensityMatrix, f64)> {
    let readouts: Vec<Readout> = simulate_set(rho, &experiment_set_for(system))?.into_iter().map(|(_, r)| r).collect();
    let rec = map.reconstruct(&readouts)?;
    Ok((rec.rho, rec.residual))
}

fn experiment_set_for(system: SystemKind) -> crate::tomography::ExperimentSet {
    match system {
        SystemKind::Qqt => qqt_experiment_set(),
        SystemKind::Qqqq => qqqq_experiment_set(),
    }
}

pub fn cmd_tomo_roundtrip(args: &TomoArgs) -> Result<RunReport> {
    let system: SystemKind = args.system.into();
    let mut report = RunReport::new("tomo-roundtrip", digest("tomo-roundtrip", args, &[]));
    let map = MeasurementMap::new(system, &experiment_set_for(system).all(), default_support(system))?;
    let rank = map.rank_report();
    report.check("rank", rank.null_dim == 0, Some(rank.determined as f64), Some(rank.parameters as f64));
    report.metric("rank", &rank);
    if rank.null_dim > 0 {
        return Ok(report);
    }
    // States are drawn up front so the result does not depend on --jobs.
    let small = SystemKind::Qqt.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let states: Vec<DensityMatrix> = (0..args.states).map(|_| random_density(&small, &mut rng)).collect();
    let emb = qqt_level_embedding();
    let results = par_map(&states, args.jobs, |rho| -> Result<(f64, f64)> {
        let input = match system {
            SystemKind::Qqt => rho.clone(),
            SystemKind::Qqqq => DensityMatrix::from_hermitian(emb.embed_operator(rho.matrix())?, system.dims())?,
        };
        let (rec, _) = tomography_round(&map, &input, system)?;
        let back = match system {
            SystemKind::Qqt => rec.matrix().clone(),
            SystemKind::Qqqq => emb.restrict_operator(rec.matrix())?,
        };
        Ok((
            crate::qudit::max_abs_diff(&back, rho.matrix()),
            fidelity(&back, rho.matrix())?,
        ))
    });
    let mut max_error = 0.0f64;
    let mut min_fidelity = 1.0f64;
    for r in results {
        let (e, f) = r?;
        max_error = max_error.max(e);
        min_fidelity = min_fidelity.min(f);
    }
    report.check("max reconstruction error", max_error <= args.tol, Some(max_error), Some(args.tol));
    report.check("min fidelity", min_fidelity >= 1.0 - 1e-9, Some(min_fidelity), Some(1.0 - 1e-9));
    report.metric("states", args.states);
    report.metric("max_error", max_error);
    report.metric("min_fidelity", min_fidelity);
    Ok(report)
}

/// Result of the end-to-end simulation, in the 12 QQT levels.
#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub rho_in: DensityMatrix,
    pub rho_theory: CMatrix,
    pub rho_expt: CMatrix,
    pub fidelity: f64,
    pub deviation_fidelity: f64,
    pub residual: f64,
}

fn traceless(m: &CMatrix) -> CMatrix {
    let d = m.nrows();
    m - CMatrix::identity(d, d) * (m.trace() / d as f64)
}

pub fn run_pipeline(p: &SpinSystemParams, rho_in: &DensityMatrix, options: CompileOptions) -> Result<PipelineResult> {
    let emb = qqt_level_embedding();
    let seq = compile_qft_with(p, options)?;
    let u = framed_propagator(&seq, p)?;
    let big = DensityMatrix::from_hermitian(emb.embed_operator(rho_in.matrix())?, SystemKind::Qqqq.dims())?;
    let out = apply(&u, &big)?;
    let map = MeasurementMap::new(
        SystemKind::Qqqq,
        &qqqq_experiment_set().all(),
        default_support(SystemKind::Qqqq),
    )?;
    let (rec, residual) = tomography_round(&map, &out, SystemKind::Qqqq)?;
    let rho_expt = emb.restrict_operator(rec.matrix())?;
    let target = Unitary::new(qft_target(), SystemKind::Qqt.dims())?;
    let rho_theory = apply(&target, rho_in)?.matrix().clone();
    Ok(PipelineResult {
        rho_in: rho_in.clone(),
        fidelity: fidelity(&rho_theory, &rho_expt)?,
        deviation_fidelity: fidelity(&traceless(&rho_theory), &traceless(&rho_expt))?,
        rho_theory,
        rho_expt,
        residual,
    })
}

pub fn cmd_full_pipeline(args: &PipelineArgs) -> Result<RunReport> {
    let (p, text) = load_config(args.config.as_deref())?;
    let mut report = RunReport::new("full-pipeline", digest("full-pipeline", args, &[&text]));
    let small = SystemKind::Qqt.dims();
    let rho_in = match args.seed {
        Some(seed) => random_density(&small, &mut ChaCha8Rng::seed_from_u64(seed)),
        None => thermal_state(&build_hamiltonian(&p.to_qqt_equivalent()?), args.epsilon)?,
    };
    let r = run_pipeline(
        &p,
        &rho_in,
        CompileOptions {
            faulty_echoes: args.faulty_echoes,
        },
    )?;
    report.check(
        "deviation fidelity",
        r.deviation_fidelity >= 1.0 - args.tol,
        Some(r.deviation_fidelity),
        Some(1.0 - args.tol),
    );
    report.metric("fidelity", r.fidelity);
    report.metric("deviation_fidelity", r.deviation_fidelity);
    report.metric("tomography_residual", r.residual);
    report.metric("input", if args.seed.is_some() { "random" } else { "thermal" });
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        for (name, m) in [("rho_theory.txt", &r.rho_theory), ("rho_expt.txt", &r.rho_expt)] {
            let path = dir.join(name);
            write_atomic(&path, &write_matrix(m, &small))?;
            report.outputs.push(path.display().to_string());
        }
    }
    Ok(report)
}

pub fn run(cli: &Cli) -> Result<RunReport> {
    let start = Instant::now();
    let mut report = match &cli.command {
        Command::QftVerify(a) => cmd_qft_verify(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Pulse(a) => cmd_pulse(a),
        Command::TomoRoundtrip(a) => cmd_tomo_roundtrip(a),
        Command::FullPipeline(a) => cmd_full_pipeline(a),
    }?;
    if cli.timing {
        report.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    if let Some(path) = &cli.report {
        write_atomic(path, &report.to_json())?;
    }
    Ok(report)
}

/// Exit status for an error raised before any check ran.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Parse { .. } | Error::Compile { .. } | Error::Domain(_) => 2,
        _ => 3,
    }
}

/// Prints to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(report) => {
            emit(&report.to_json());
            if report.pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            emit(&json!({ "error": e.to_string() }).to_string());
            error_exit_code(&e)
        }
    }
}

//! Comparison of simulated schedules with the ideal QFT.

use num_complex::Complex64;
use serde::Serialize;

use super::compile::{compile_qft_with, CompileOptions};
use super::sim::{frame_diagonal, simulate_sequence};
use super::{PulseSequence, ZFrame};
use crate::circuit::{digit_reversal_permutation, direct_qft_matrix};
use crate::error::{domain, Result};
use crate::qudit::{CMatrix, QuditDims, Unitary};
use crate::spin::{qqt_level_embedding, SpinSystemParams};

#[derive(Clone, Debug, Serialize)]
pub struct PulseReport {
    /// `|Tr(T†·U)|/12` on the embedded levels with the sequence frames applied.
    pub process_fidelity: f64,
    /// The same without frames.
    pub fidelity_without_frames: f64,
    /// `‖U[Sᶜ, S]‖_F / √12`: root-mean-square amplitude leaving the embedded levels.
    pub leakage: f64,
    pub tol: f64,
    pub pass: bool,
    pub events: usize,
    pub total_delay_s: f64,
}

/// `Pᵀ·F`: the circuit's output order, whose digit reversal is the DFT.
pub fn qft_target() -> CMatrix {
    let dims = QuditDims::new(vec![2, 2, 3]).expect("static dims");
    digit_reversal_permutation(&dims).matrix().transpose() * direct_qft_matrix(&dims).matrix()
}

fn restrict(u: &CMatrix) -> CMatrix {
    qqt_level_embedding()
        .restrict_operator(u)
        .expect("16-dimensional propagator")
}

fn leakage(u: &CMatrix) -> f64 {
    let s = qqt_level_embedding().subspace();
    let mut total = 0.0;
    for r in (0..16).filter(|r| !s.contains(r)) {
        for &c in &s {
            total += u[(r, c)].norm_sqr();
        }
    }
    (total / 12.0).sqrt()
}

fn fidelity(us: &CMatrix, target: &CMatrix) -> f64 {
    (target.adjoint() * us).trace().norm() / 12.0
}

/// Spin z angles `(in, out)` with `Z(out)·U·Z(in)` matching the target on the
/// embedded levels, read from the first column and row of `U_S ./ T`.
///
/// Only single-spin flips from level `0` are used: QQT indices 6, 3, 1, 2 flip
/// spin 1, spin 2, spin 3 and spins 3+4. Residual disagreement shows up in the
/// fidelity.
pub fn extract_frames(u: &Unitary) -> Result<(ZFrame, ZFrame)> {
    let us = restrict(u.matrix());
    let t = qft_target();
    let ratio = |r: usize, c: usize| us[(r, c)] / t[(r, c)];
    let base = ratio(0, 0);
    if base.norm() < 1e-6 {
        return Err(domain("propagator has no overlap with the target at level 1"));
    }
    let angles = |z: &dyn Fn(usize) -> Complex64| -> ZFrame {
        let arg = |i: usize| (z(i) / base).arg();
        let phi3 = -arg(1);
        [-arg(6), -arg(3), phi3, -arg(2) - phi3]
    };
    let out = angles(&|i| ratio(i, 0));
    let inp = angles(&|k| ratio(0, k));
    Ok((inp, out))
}

fn with_frames(u: &CMatrix, frame_in: &ZFrame, frame_out: &ZFrame) -> CMatrix {
    let fi = frame_diagonal(frame_in);
    let fo = frame_diagonal(frame_out);
    CMatrix::from_fn(16, 16, |r, c| fo[r] * u[(r, c)] * fi[c])
}

pub fn verify_sequence(seq: &PulseSequence, p: &SpinSystemParams, tol: f64) -> Result<PulseReport> {
    let u = simulate_sequence(seq, p)?;
    let target = qft_target();
    let framed = with_frames(u.matrix(), seq.frame_in(), seq.frame_out());
    let process_fidelity = fidelity(&restrict(&framed), &target);
    let leak = leakage(u.matrix());
    Ok(PulseReport {
        process_fidelity,
        fidelity_without_frames: fidelity(&restrict(u.matrix()), &target),
        leakage: leak,
        tol,
        pass: process_fidelity >= 1.0 - tol && leak <= tol,
        events: seq.events().len(),
        total_delay_s: seq.total_delay(),
    })
}

pub fn verify_pulse_qft(p: &SpinSystemParams, tol: f64) -> Result<PulseReport> {
    verify_pulse_qft_with(p, tol, CompileOptions::default())
}

pub fn verify_pulse_qft_with(
    p: &SpinSystemParams,
    tol: f64,
    options: CompileOptions,
) -> Result<PulseReport> {
    verify_sequence(&compile_qft_with(p, options)?, p, tol)
}

/// Frame-corrected propagator of a compiled sequence.
pub fn framed_propagator(seq: &PulseSequence, p: &SpinSystemParams) -> Result<Unitary> {
    let u = simulate_sequence(seq, p)?;
    Ok(Unitary::from_product(
        with_frames(u.matrix(), seq.frame_in(), seq.frame_out()),
        u.dims().clone(),
    ))
}

//! Lowering of the hybrid QFT to the emulator schedule.
//!
//! Controlled phases `exp(iα·b_j·b_k)` between qudit digits become `J I_z I_z`
//! evolution by the product-operator angle `α/2`: π/4 for J₁₂ and π/12 for
//! J₁₃ = J₁₄ in the first evolution period, and π/6 for J₂₃ = J₂₄ in the
//! second. Every event lists its refocusing pulses explicitly; z rotations are
//! carried by the sequence frames instead of being pulsed.

use std::f64::consts::PI;

use super::block::{LayerAngles, BLOCK_ANGLES};
use super::sim::{rotating_frame_offsets, simulate_sequence};
use super::verify::extract_frames;
use super::{delay_for_angle, PulseEvent, PulseSequence};
use crate::error::{Error, Result};
use crate::spin::{SpinSystemParams, SystemKind};

/// Axis of the first spin-1 pulse: π/2 + 5π/6.
pub const THETA_1: f64 = PI / 2.0 + 5.0 * PI / 6.0;
/// Axis of the spin-2 pulse: π/2 + 2π/3.
pub const THETA_2: f64 = PI / 2.0 + 2.0 * PI / 3.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CompileOptions {
    /// Negative control: the spin-1 refocusing pulse of the second evolution
    /// period is moved after both delays. Frames stay those of the nominal schedule.
    pub faulty_echoes: bool,
}

struct Builder {
    events: Vec<PulseEvent>,
}

impl Builder {
    fn rot(&mut self, targets: &[usize], flip: f64, axis: f64) {
        self.events.push(PulseEvent::rotation(targets, flip, axis));
    }

    fn pi(&mut self, targets: &[usize]) {
        self.rot(targets, PI, 0.0);
    }

    fn delay(&mut self, t: f64) {
        debug_assert!(t >= 0.0, "negative delay {t}");
        self.events.push(PulseEvent::delay(t.max(0.0)));
    }

    /// Stage 1: J₁₂ by `a12` and J₁₃ = J₁₄ by `b13` (as durations), spin-1
    /// evolution refocused by the outer pair, 3-4 offsets and the 2-3/2-4
    /// couplings by the inner echoes.
    fn first_period(&mut self, a12: f64, b13: f64) {
        let d = [0.0, -b13 / 2.0, -a12 / 2.0, -(a12 + b13) / 2.0]
            .into_iter()
            .fold(f64::MIN, f64::max);
        let (a, b, c) = (d + (a12 + b13) / 2.0, d + a12 / 2.0, d + b13 / 2.0);
        self.pi(&[0]);
        self.delay(a);
        self.pi(&[2, 3]);
        self.delay(b);
        self.pi(&[1]);
        self.delay(d);
        self.pi(&[2, 3]);
        self.delay(c);
        self.pi(&[1]);
        self.pi(&[0]);
    }

    /// Stage 2: J₂₃ = J₂₄ for `|t2|`; the spin-2 sandwich flips the sign.
    fn second_period(&mut self, t2: f64, faulty: bool) {
        let sandwich = t2 >= 0.0;
        let half = t2.abs() / 2.0;
        if sandwich {
            self.pi(&[1]);
        }
        self.delay(half);
        if faulty {
            self.delay(half);
            self.pi(&[0]);
        } else {
            self.pi(&[0]);
            self.delay(half);
        }
        self.pi(&[0]);
        if sandwich {
            self.pi(&[1]);
        }
    }

    /// Wraps `angle` into one period with the sign of `rate`, so the
    /// duration `angle / (2π·rate)` is nonnegative.
    fn duration(angle: f64, period: f64, rate: f64) -> f64 {
        let mut a = angle.rem_euclid(period);
        if rate < 0.0 && a > 0.0 {
            a -= period;
        }
        a / (2.0 * PI * rate)
    }

    /// `exp(-iφ(I_z^3 - I_z^4))` from the 3-4 offset `dq`; couplings refocused.
    fn z_unit(&mut self, phi: f64, dq: f64) {
        let q = Self::duration(phi, 2.0 * PI, dq) / 4.0;
        for _ in 0..2 {
            self.delay(q);
            self.pi(&[1]);
            self.delay(q);
            self.pi(&[1]);
            self.pi(&[0]);
        }
    }

    /// `exp(-iχ I_z^1(I_z^3 + I_z^4))` from J₁₃ = J₁₄; offsets and other couplings refocused.
    fn j_unit(&mut self, chi: f64, j13: f64) {
        let q = Self::duration(chi, 4.0 * PI, j13) / 4.0;
        for _ in 0..2 {
            self.delay(q);
            self.pi(&[1]);
            self.delay(q);
            self.pi(&[1]);
            self.pi(&[0]);
            self.pi(&[2, 3]);
        }
    }

    fn fourier_block(&mut self, layers: &[LayerAngles], dq: f64, j13: f64) {
        for &[beta, theta, phi, gamma, eta, chi] in layers {
            self.rot(&[2, 3], beta, theta);
            self.z_unit(phi, dq);
            self.rot(&[0], gamma, eta);
            self.j_unit(chi, j13);
        }
        self.rot(&[2, 3], PI / 2.0, PI / 2.0);
    }
}

fn check_compilable(p: &SpinSystemParams) -> Result<()> {
    let mut violations = Vec::new();
    if p.kind() != SystemKind::Qqqq {
        violations.push(format!("the emulator schedule needs a QQQQ system, got {}", p.kind()));
    } else {
        if let Err(Error::Config { message, .. }) = p.check_ideal_pattern() {
            violations.extend(message.split("; ").map(str::to_string));
        }
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            if p.coupling(a, b) == 0.0 {
                violations.push(format!("J{}{} is zero", a + 1, b + 1));
            }
        }
        if rotating_frame_offsets(p)[2] == 0.0 {
            violations.push("spins 3 and 4 have equal frequencies".to_string());
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::Compile { violations })
    }
}

fn events_for(p: &SpinSystemParams, options: CompileOptions) -> Result<Vec<PulseEvent>> {
    let (j12, j13, j23) = (p.coupling(0, 1), p.coupling(0, 2), p.coupling(1, 2));
    let dq = rotating_frame_offsets(p)[2];
    let mut b = Builder { events: Vec::new() };
    b.rot(&[0], PI / 2.0, THETA_1);
    b.first_period(
        delay_for_angle(PI / 4.0, j12)?,
        delay_for_angle(PI / 12.0, j13)?,
    );
    b.rot(&[1], PI / 2.0, THETA_2);
    b.second_period(delay_for_angle(PI / 6.0, j23)?, options.faulty_echoes);
    b.fourier_block(&BLOCK_ANGLES, dq, j13);
    Ok(b.events)
}

pub fn compile_qft(p: &SpinSystemParams) -> Result<PulseSequence> {
    compile_qft_with(p, CompileOptions::default())
}

/// Emits the schedule and freezes the input/output z frames of the nominal schedule.
pub fn compile_qft_with(p: &SpinSystemParams, options: CompileOptions) -> Result<PulseSequence> {
    check_compilable(p)?;
    let nominal = PulseSequence::new(events_for(p, CompileOptions::default())?, p.clone())?;
    let (frame_in, frame_out) = extract_frames(&simulate_sequence(&nominal, p)?)?;
    let seq = if options.faulty_echoes {
        PulseSequence::new(events_for(p, options)?, p.clone())?
    } else {
        nominal
    };
    Ok(seq.with_frames(frame_in, frame_out))
}

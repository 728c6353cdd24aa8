//! Pulse schedules for the four-spin emulator.
//!
//! Pulses are instantaneous rotations `exp(-iβ Σ_s (cos θ I_x^s + sin θ I_y^s))`
//! and delays evolve under the rotating-frame Hamiltonian (see [`sim`]).
//! Spins 3 and 4 are only ever pulsed together.

pub mod block;
pub mod compile;
pub mod sim;
pub mod verify;

use std::f64::consts::PI;
use std::fmt;

use crate::error::{domain, Error, Result};
use crate::spin::SpinSystemParams;

pub use compile::{compile_qft, compile_qft_with, CompileOptions};
pub use sim::{evolve_density, rotating_frame_offsets, simulate_sequence, simulate_with_offsets};
pub use verify::{verify_pulse_qft, verify_sequence, PulseReport};

/// Number of spins on the emulator.
pub const EMULATOR_SPINS: usize = 4;

/// `θ/(πJ)`: the delay that rotates a `J I_z I_z` coupling by `θ`.
pub fn delay_for_angle(theta: f64, j_hz: f64) -> Result<f64> {
    if !theta.is_finite() || theta < 0.0 {
        return Err(domain(format!("rotation angle must be finite and nonnegative, got {theta}")));
    }
    if j_hz == 0.0 || !j_hz.is_finite() {
        return Err(domain(format!(
            "coupling {j_hz} Hz cannot produce a controlled phase"
        )));
    }
    Ok(theta / (PI * j_hz))
}

/// Which pair couplings evolve during a delay, bit `k` for the `k`-th pair
/// in the order (1,2), (1,3), (1,4), (2,3), (2,4), (3,4).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CouplingMask(u32);

impl CouplingMask {
    pub const ALL: CouplingMask = CouplingMask((1 << 6) - 1);

    pub fn from_bits(bits: u32) -> Result<Self> {
        if bits >= 1 << 6 {
            return Err(domain(format!("coupling mask {bits:#b} has more than 6 bits")));
        }
        Ok(Self(bits))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn pair_index(a: usize, b: usize) -> usize {
        let (a, b) = (a.min(b), a.max(b));
        (0..a).map(|i| EMULATOR_SPINS - 1 - i).sum::<usize>() + (b - a - 1)
    }

    pub fn is_active(self, a: usize, b: usize) -> bool {
        self.0 >> Self::pair_index(a, b) & 1 == 1
    }
}

impl fmt::Display for CouplingMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..6 {
            f.write_str(if self.0 >> k & 1 == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for CouplingMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() != 6 || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(domain(format!("coupling mask `{s}` must be six 0/1 characters")));
        }
        let bits = s.bytes().enumerate().map(|(k, b)| ((b - b'0') as u32) << k).sum();
        Ok(Self(bits))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PulseEvent {
    /// Targets are 0-based spin indices, sorted and distinct.
    Rotation { targets: Vec<usize>, flip: f64, axis: f64 },
    Delay { duration: f64, mask: CouplingMask },
    /// Ideal z-gradient: removes every coherence.
    Gradient,
}

impl PulseEvent {
    pub fn rotation(targets: &[usize], flip: f64, axis: f64) -> Self {
        let mut t = targets.to_vec();
        t.sort_unstable();
        t.dedup();
        PulseEvent::Rotation { targets: t, flip, axis }
    }

    pub fn delay(duration: f64) -> Self {
        PulseEvent::Delay {
            duration,
            mask: CouplingMask::ALL,
        }
    }

    pub fn is_rotation(&self) -> bool {
        matches!(self, PulseEvent::Rotation { .. })
    }

    fn violations(&self, spins: usize) -> Vec<String> {
        let mut v = Vec::new();
        match self {
            PulseEvent::Rotation { targets, flip, axis } => {
                if targets.is_empty() {
                    v.push("rotation without targets".to_string());
                }
                if let Some(t) = targets.iter().find(|&&t| t >= spins) {
                    v.push(format!("rotation addresses spin {} of {spins}", t + 1));
                }
                if !(flip.is_finite() && *flip > -2.0 * PI && *flip <= 2.0 * PI) {
                    v.push(format!("flip angle {flip} outside (-2π, 2π]"));
                }
                if !axis.is_finite() {
                    v.push(format!("axis angle {axis} is not finite"));
                }
            }
            PulseEvent::Delay { duration, .. } => {
                if !(duration.is_finite() && *duration >= 0.0) {
                    v.push(format!("delay duration {duration} is negative or not finite"));
                }
            }
            PulseEvent::Gradient => {}
        }
        v
    }

    /// Text line: `ROT 3,4 flip axis`, `DELAY seconds mask` or `GRAD`.
    pub fn to_line(&self) -> String {
        match self {
            PulseEvent::Rotation { targets, flip, axis } => {
                let t: Vec<String> = targets.iter().map(|t| (t + 1).to_string()).collect();
                format!("ROT {} {flip:?} {axis:?}", t.join(","))
            }
            PulseEvent::Delay { duration, mask } => format!("DELAY {duration:?} {mask}"),
            PulseEvent::Gradient => "GRAD".to_string(),
        }
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let num = |t: &str| t.parse::<f64>().map_err(|_| domain(format!("bad number `{t}`")));
        match toks.as_slice() {
            ["ROT", targets, flip, axis] => {
                let t = targets
                    .split(',')
                    .map(|s| match s.parse::<usize>() {
                        Ok(i) if i >= 1 => Ok(i - 1),
                        _ => Err(domain(format!("bad spin index `{s}`"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(PulseEvent::rotation(&t, num(flip)?, num(axis)?))
            }
            ["DELAY", d, mask] => Ok(PulseEvent::Delay {
                duration: num(d)?,
                mask: mask.parse()?,
            }),
            ["DELAY", d] => Ok(PulseEvent::delay(num(d)?)),
            ["GRAD"] => Ok(PulseEvent::Gradient),
            _ => Err(domain(format!("unrecognized pulse line `{line}`"))),
        }
    }
}

/// Per-spin z angles `φ_s`, applied as `exp(-i Σ φ_s I_z^s)`. They are never
/// pulsed; they record the frame the compiled schedule leaves behind.
pub type ZFrame = [f64; EMULATOR_SPINS];

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSequence {
    events: Vec<PulseEvent>,
    params: SpinSystemParams,
    frame_in: ZFrame,
    frame_out: ZFrame,
}

impl PulseSequence {
    /// Checks the type invariants and the joint addressing of spins 3 and 4.
    pub fn new(events: Vec<PulseEvent>, params: SpinSystemParams) -> Result<Self> {
        let seq = Self {
            events,
            params,
            frame_in: [0.0; EMULATOR_SPINS],
            frame_out: [0.0; EMULATOR_SPINS],
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn with_frames(mut self, frame_in: ZFrame, frame_out: ZFrame) -> Self {
        self.frame_in = frame_in;
        self.frame_out = frame_out;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let spins = self.params.larmor().len();
        let mut violations = Vec::new();
        for (i, e) in self.events.iter().enumerate() {
            for v in e.violations(spins) {
                violations.push(format!("event {}: {v}", i + 1));
            }
            if let PulseEvent::Rotation { targets, .. } = e {
                if spins == EMULATOR_SPINS && targets.contains(&2) != targets.contains(&3) {
                    violations.push(format!(
                        "event {}: spins 3 and 4 cannot be addressed individually",
                        i + 1
                    ));
                }
            }
        }
        if self.frame_in.iter().chain(&self.frame_out).any(|x| !x.is_finite()) {
            violations.push("frame angles must be finite".to_string());
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Compile { violations })
        }
    }

    pub fn events(&self) -> &[PulseEvent] {
        &self.events
    }

    pub fn params(&self) -> &SpinSystemParams {
        &self.params
    }

    pub fn frame_in(&self) -> &ZFrame {
        &self.frame_in
    }

    pub fn frame_out(&self) -> &ZFrame {
        &self.frame_out
    }

    pub fn total_delay(&self) -> f64 {
        self.events
            .iter()
            .map(|e| match e {
                PulseEvent::Delay { duration, .. } => *duration,
                _ => 0.0,
            })
            .sum()
    }

    pub fn to_text(&self) -> String {
        let f = |v: &ZFrame| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let mut out = String::from("# flip and axis angles in rad, delays in s\n");
        out.push_str(&format!("FRAME_IN {}\n", f(&self.frame_in)));
        out.push_str(&format!("FRAME_OUT {}\n", f(&self.frame_out)));
        for e in &self.events {
            out.push_str(&e.to_line());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, params: SpinSystemParams) -> Result<Self> {
        let mut events = Vec::new();
        let mut frame_in = [0.0; EMULATOR_SPINS];
        let mut frame_out = [0.0; EMULATOR_SPINS];
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let wrap = |e: Error| Error::Parse {
                line: n + 1,
                message: e.to_string(),
            };
            let frame = |rest: &str| -> Result<ZFrame> {
                let v = rest
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|_| domain(format!("bad angle `{t}`"))))
                    .collect::<Result<Vec<_>>>()?;
                v.try_into()
                    .map_err(|_| domain("a frame lists one angle per spin"))
            };
            if let Some(rest) = line.strip_prefix("FRAME_IN") {
                frame_in = frame(rest).map_err(wrap)?;
            } else if let Some(rest) = line.strip_prefix("FRAME_OUT") {
                frame_out = frame(rest).map_err(wrap)?;
            } else {
                events.push(PulseEvent::from_line(line).map_err(wrap)?);
            }
        }
        Ok(Self::new(events, params)?.with_frames(frame_in, frame_out))
    }

    /// Same events and frames with floats compared to `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol;
        self.events.len() == other.events.len()
            && self.frame_in.iter().zip(&other.frame_in).all(|(a, b)| close(*a, *b))
            && self.frame_out.iter().zip(&other.frame_out).all(|(a, b)| close(*a, *b))
            && self.events.iter().zip(&other.events).all(|pair| match pair {
                (
                    PulseEvent::Rotation { targets: t1, flip: f1, axis: a1 },
                    PulseEvent::Rotation { targets: t2, flip: f2, axis: a2 },
                ) => t1 == t2 && close(*f1, *f2) && close(*a1, *a2),
                (
                    PulseEvent::Delay { duration: d1, mask: m1 },
                    PulseEvent::Delay { duration: d2, mask: m2 },
                ) => m1 == m2 && close(*d1, *d2),
                (PulseEvent::Gradient, PulseEvent::Gradient) => true,
                _ => false,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_examples() {
        assert!((delay_for_angle(PI / 2.0, 10.0).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(delay_for_angle(0.0, 8.0).unwrap(), 0.0);
        assert!(delay_for_angle(1.0, 0.0).is_err());
        assert!(delay_for_angle(-1.0, 5.0).is_err());
        let t = delay_for_angle(PI / 6.0, 8.0).unwrap();
        assert!((PI * 8.0 * t - PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn delay_is_linear_in_angle_and_inverse_in_coupling() {
        let base = delay_for_angle(0.4, 7.0).unwrap();
        assert!((delay_for_angle(1.2, 7.0).unwrap() - 3.0 * base).abs() < 1e-15);
        assert!((delay_for_angle(0.4, 14.0).unwrap() - base / 2.0).abs() < 1e-15);
    }

    #[test]
    fn mask_round_trip() {
        for bits in [0, 1, 0b101010, 63] {
            let m = CouplingMask::from_bits(bits).unwrap();
            assert_eq!(m.to_string().parse::<CouplingMask>().unwrap(), m);
        }
        assert!(CouplingMask::ALL.is_active(2, 3));
        assert_eq!(CouplingMask::pair_index(1, 0), 0);
        assert_eq!(CouplingMask::pair_index(2, 3), 5);
        assert_eq!(CouplingMask::pair_index(1, 2), 3);
        assert!("11".parse::<CouplingMask>().is_err());
    }

    #[test]
    fn individual_addressing_of_spins_three_and_four_is_rejected() {
        let p = SpinSystemParams::ideal_emulator();
        let bad = PulseSequence::new(vec![PulseEvent::rotation(&[2], PI, 0.0)], p.clone());
        assert!(matches!(bad, Err(Error::Compile { .. })));
        assert!(PulseSequence::new(vec![PulseEvent::rotation(&[2, 3], PI, 0.0)], p.clone()).is_ok());
        assert!(PulseSequence::new(vec![PulseEvent::delay(-1.0)], p.clone()).is_err());
        assert!(PulseSequence::new(vec![PulseEvent::rotation(&[0], 7.0, 0.0)], p).is_err());
    }

    #[test]
    fn text_round_trip() {
        let p = SpinSystemParams::ideal_emulator();
        let seq = PulseSequence::new(
            vec![
                PulseEvent::rotation(&[0], PI / 2.0, 4.0 * PI / 3.0),
                PulseEvent::delay(0.0125),
                PulseEvent::Delay { duration: 1e-3, mask: CouplingMask::from_bits(5).unwrap() },
                PulseEvent::Gradient,
                PulseEvent::rotation(&[3, 2], PI / 2.0, PI / 2.0),
            ],
            p.clone(),
        )
        .unwrap()
        .with_frames([0.1, 0.2, 0.3, 0.4], [-1.0, 0.0, 2.5, 1e-17]);
        let back = PulseSequence::from_text(&seq.to_text(), p.clone()).unwrap();
        assert_eq!(back, seq);
        assert!(back.approx_eq(&seq, 0.0));
        assert!(PulseSequence::from_text("ROT 1 x 0\n", p.clone()).is_err());
        assert!(PulseSequence::from_text("FRAME_IN 1 2\n", p).is_err());
    }
}

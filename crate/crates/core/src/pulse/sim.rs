//! Ideal-pulse propagators.
//!
//! A delay `τ` evolves under `exp(-i2πτ(Σ ν_s I_z^s + Σ J_ab I_z^a I_z^b))`
//! with rotating-frame offsets `ν`. Spins 1 and 2 are on resonance and the
//! shared carrier of spins 3 and 4 sits midway between them.

use num_complex::Complex64;

use super::{PulseEvent, PulseSequence, ZFrame, EMULATOR_SPINS};
use crate::error::{domain, Error, Result};
use crate::qudit::{CMatrix, DensityMatrix, Normalization, QuditDims, Unitary};
use crate::spin::{SpinSystemParams, SystemKind};
use crate::spinops::{iz_diagonal, register_rotation};

const DIMS: [usize; EMULATOR_SPINS] = [2, 2, 2, 2];

fn emulator_dims() -> QuditDims {
    QuditDims::new(DIMS.to_vec()).expect("static dims")
}

/// `[0, 0, +D_Q, -D_Q]` with `D_Q = (ω₃ - ω₄)/2`.
pub fn rotating_frame_offsets(p: &SpinSystemParams) -> ZFrame {
    let w = p.larmor();
    let half = (w[2] - w[3]) / 2.0;
    [0.0, 0.0, half, -half]
}

fn check_emulator(p: &SpinSystemParams) -> Result<()> {
    if p.kind() != SystemKind::Qqqq {
        return Err(domain(format!("pulse simulation needs a QQQQ system, got {}", p.kind())));
    }
    Ok(())
}

/// Diagonal of the delay propagator.
pub fn delay_diagonal(p: &SpinSystemParams, offsets: &ZFrame, event: &PulseEvent) -> Vec<Complex64> {
    let PulseEvent::Delay { duration, mask } = event else {
        panic!("delay_diagonal called on a non-delay event");
    };
    let m: Vec<Vec<f64>> = (0..EMULATOR_SPINS).map(|s| iz_diagonal(&DIMS, s)).collect();
    (0..16)
        .map(|i| {
            let mut e = 0.0;
            for a in 0..EMULATOR_SPINS {
                e += offsets[a] * m[a][i];
                for b in a + 1..EMULATOR_SPINS {
                    if mask.is_active(a, b) {
                        e += p.coupling(a, b) * m[a][i] * m[b][i];
                    }
                }
            }
            Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * duration * e)
        })
        .collect()
}

/// `exp(-i Σ φ_s I_z^s)` as a diagonal.
pub fn frame_diagonal(frame: &ZFrame) -> Vec<Complex64> {
    let m: Vec<Vec<f64>> = (0..EMULATOR_SPINS).map(|s| iz_diagonal(&DIMS, s)).collect();
    (0..16)
        .map(|i| {
            let phase: f64 = (0..EMULATOR_SPINS).map(|s| frame[s] * m[s][i]).sum();
            Complex64::from_polar(1.0, -phase)
        })
        .collect()
}

fn scale_rows(u: &mut CMatrix, diag: &[Complex64]) {
    for (r, &z) in diag.iter().enumerate() {
        for c in 0..u.ncols() {
            u[(r, c)] *= z;
        }
    }
}

/// Ordered product of the event propagators with explicit frame offsets.
/// Frames stored on the sequence are not applied.
pub fn simulate_with_offsets(
    events: &[PulseEvent],
    p: &SpinSystemParams,
    offsets: &ZFrame,
) -> Result<Unitary> {
    check_emulator(p)?;
    let mut u = CMatrix::identity(16, 16);
    for (i, e) in events.iter().enumerate() {
        match e {
            PulseEvent::Rotation { targets, flip, axis } => {
                u = register_rotation(&DIMS, targets, *flip, *axis)? * u;
            }
            PulseEvent::Delay { .. } => scale_rows(&mut u, &delay_diagonal(p, offsets, e)),
            PulseEvent::Gradient => {
                return Err(Error::Domain(format!(
                    "event {}: a gradient is not unitary; use evolve_density",
                    i + 1
                )))
            }
        }
    }
    Ok(Unitary::from_product(u, emulator_dims()))
}

/// Propagator of the sequence's events under `p` in the standard rotating frame.
pub fn simulate_sequence(seq: &PulseSequence, p: &SpinSystemParams) -> Result<Unitary> {
    simulate_with_offsets(seq.events(), p, &rotating_frame_offsets(p))
}

/// Applies the events to a state; gradients zero every off-diagonal element.
pub fn evolve_density(
    events: &[PulseEvent],
    p: &SpinSystemParams,
    rho: &DensityMatrix,
) -> Result<DensityMatrix> {
    check_emulator(p)?;
    if rho.dim() != 16 {
        return Err(Error::DimensionMismatch {
            expected: 16,
            actual: rho.dim(),
        });
    }
    let offsets = rotating_frame_offsets(p);
    let mut m = rho.matrix().clone();
    for e in events {
        match e {
            PulseEvent::Rotation { targets, flip, axis } => {
                let r = register_rotation(&DIMS, targets, *flip, *axis)?;
                m = &r * m * r.adjoint();
            }
            PulseEvent::Delay { .. } => {
                let d = delay_diagonal(p, &offsets, e);
                for r in 0..16 {
                    for c in 0..16 {
                        m[(r, c)] *= d[r] * d[c].conj();
                    }
                }
            }
            PulseEvent::Gradient => m = CMatrix::from_diagonal(&m.diagonal()),
        }
    }
    let norm: Normalization = rho.normalization();
    Ok(DensityMatrix::from_parts(m, rho.dims().clone(), norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::PulseEvent as E;
    use crate::qudit::max_abs_diff;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params() -> SpinSystemParams {
        SpinSystemParams::ideal_emulator()
    }

    #[test]
    fn empty_sequence_is_identity() {
        let u = simulate_with_offsets(&[], &params(), &[0.0; 4]).unwrap();
        assert_eq!(u.matrix(), &CMatrix::identity(16, 16));
    }

    #[test]
    fn two_pi_pulses_give_minus_identity() {
        let u = simulate_with_offsets(&[E::rotation(&[1], PI, 0.0), E::rotation(&[1], PI, 0.0)], &params(), &[0.0; 4]).unwrap();
        assert!(max_abs_diff(u.matrix(), &(-CMatrix::identity(16, 16))) < 1e-15);
    }

    #[test]
    fn gradient_is_rejected_by_the_propagator() {
        assert!(simulate_with_offsets(&[E::Gradient], &params(), &[0.0; 4]).is_err());
    }

    #[test]
    fn qqt_params_are_rejected() {
        let qqt = params().to_qqt_equivalent().unwrap();
        assert!(simulate_with_offsets(&[], &qqt, &[0.0; 4]).is_err());
    }

    #[test]
    fn delay_matches_hamiltonian_exponential() {
        let p = params();
        let h = crate::spin::build_qqqq_hamiltonian(&p).unwrap();
        let w = p.larmor();
        // Lab frame: offsets equal to the Larmor frequencies.
        let lab = [w[0], w[1], w[2], w[3]];
        let t = 1.7e-3;
        let u = simulate_with_offsets(&[E::delay(t)], &p, &lab).unwrap();
        for i in 0..16 {
            let want = Complex64::from_polar(1.0, -2.0 * PI * t * h.energies()[i]);
            assert!((u.matrix()[(i, i)] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn gradient_kills_coherences() {
        let p = params();
        let rho = crate::random::random_density(&emulator_dims(), &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(4));
        let out = evolve_density(&[E::Gradient], &p, &rho).unwrap();
        for r in 0..16 {
            for c in 0..16 {
                let want = if r == c { rho.matrix()[(r, c)] } else { 0.0.into() };
                assert_eq!(out.matrix()[(r, c)], want);
            }
        }
    }

    fn echo_params(j: [f64; 6]) -> SpinSystemParams {
        let mut m = [[0.0; 4]; 4];
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        for (k, &(a, b)) in pairs.iter().enumerate() {
            m[a][b] = j[k];
            m[b][a] = j[k];
        }
        SpinSystemParams::qqqq([0.0, 0.0, 10.0, -10.0], m, false).unwrap()
    }

    proptest! {
        #[test]
        fn rotations_and_delays_are_unitary(seed in 0u64..200) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let p = echo_params([40.0, 8.0, 8.0, 5.0, 5.0, 1.0]);
            let events: Vec<E> = (0..12).map(|_| {
                if rng.gen_bool(0.5) {
                    let t: Vec<usize> = match rng.gen_range(0..3) { 0 => vec![0], 1 => vec![1], _ => vec![2, 3] };
                    E::rotation(&t, rng.gen_range(-6.0..6.0), rng.gen_range(0.0..6.3))
                } else {
                    E::delay(rng.gen_range(0.0..0.05))
                }
            }).collect();
            let offsets = [rng.gen_range(-50.0..50.0), 0.0, 3.0, -1.0];
            let u = simulate_with_offsets(&events, &p, &offsets).unwrap();
            prop_assert!(u.unitarity_error() <= 1e-12);
        }

        #[test]
        fn echo_refocuses_any_offset(spin in 0usize..4, nu in -500.0f64..500.0, tau in 0.0f64..0.1) {
            let p = echo_params([40.0, 8.0, 6.0, 5.0, 3.0, 1.0]);
            let echo = [E::delay(tau), E::rotation(&[spin], PI, 0.0), E::delay(tau)];
            let mut with = [0.0; 4];
            with[spin] = nu;
            let a = simulate_with_offsets(&echo, &p, &with).unwrap();
            let b = simulate_with_offsets(&echo, &p, &[0.0; 4]).unwrap();
            prop_assert!(max_abs_diff(a.matrix(), b.matrix()) <= 1e-12);
        }
    }
}

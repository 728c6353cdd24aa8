//! Angular-momentum operators and ideal rotations on product registers.

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::qudit::{kron, CMatrix, ZERO};

/// `(I_x, I_y, I_z)` for a spin of dimension `d` in the digit basis
/// (digit `k` has `m = (d-1)/2 - k`).
pub fn spin_operators(d: usize) -> (CMatrix, CMatrix, CMatrix) {
    let s = (d as f64 - 1.0) / 2.0;
    let mut plus = CMatrix::zeros(d, d);
    for k in 1..d {
        // I₊ raises m: digit k → digit k-1.
        let m = s - k as f64;
        plus[(k - 1, k)] = Complex64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let minus = plus.adjoint();
    let ix = (&plus + &minus).scale(0.5);
    let iy = (&plus - &minus) * Complex64::new(0.0, -0.5);
    let iz = CMatrix::from_fn(d, d, |r, c| {
        if r == c {
            Complex64::new(s - r as f64, 0.0)
        } else {
            ZERO
        }
    });
    (ix, iy, iz)
}

/// `exp(-iβ(cos θ I_x + sin θ I_y))` on one spin of dimension `d`.
pub fn single_spin_rotation(d: usize, flip: f64, axis: f64) -> CMatrix {
    if d == 2 {
        let (c, s) = ((flip / 2.0).cos(), (flip / 2.0).sin());
        let off = Complex64::new(0.0, -s) * Complex64::from_polar(1.0, -axis);
        let off_low = Complex64::new(0.0, -s) * Complex64::from_polar(1.0, axis);
        return CMatrix::from_row_slice(2, 2, &[c.into(), off, off_low, c.into()]);
    }
    let (ix, iy, _) = spin_operators(d);
    let g = ix.scale(axis.cos()) + iy.scale(axis.sin());
    let eig = g.symmetric_eigen();
    let phases = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -flip * l)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// The same rotation applied to every spin in `targets`.
pub fn register_rotation(dims: &[usize], targets: &[usize], flip: f64, axis: f64) -> Result<CMatrix> {
    if let Some(&t) = targets.iter().find(|&&t| t >= dims.len()) {
        return Err(domain(format!("rotation target {} outside {} spins", t + 1, dims.len())));
    }
    let mut out = CMatrix::identity(1, 1);
    for (s, &d) in dims.iter().enumerate() {
        let factor = if targets.contains(&s) {
            single_spin_rotation(d, flip, axis)
        } else {
            CMatrix::identity(d, d)
        };
        out = kron(&out, &factor);
    }
    Ok(out)
}

/// Diagonal of `I_z` for spin `s` across the register.
pub fn iz_diagonal(dims: &[usize], s: usize) -> Vec<f64> {
    let total: usize = dims.iter().product();
    let stride: usize = dims[s + 1..].iter().product();
    let half = (dims[s] as f64 - 1.0) / 2.0;
    (0..total)
        .map(|i| half - ((i / stride) % dims[s]) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qudit::max_abs_diff;
    use std::f64::consts::PI;

    #[test]
    fn commutation_relations() {
        for d in 2..5 {
            let (x, y, z) = spin_operators(d);
            let comm = &x * &y - &y * &x;
            assert!(max_abs_diff(&comm, &(z.clone() * Complex64::i())) < 1e-14, "d = {d}");
            let s = (d as f64 - 1.0) / 2.0;
            let casimir = &x * &x + &y * &y + &z * &z;
            assert!(max_abs_diff(&casimir, &CMatrix::identity(d, d).scale(s * (s + 1.0))) < 1e-14);
        }
    }

    #[test]
    fn qutrit_operators_match_textbook_form() {
        let (x, _, z) = spin_operators(3);
        let r = 1.0 / 2f64.sqrt();
        assert!((x[(0, 1)].re - r).abs() < 1e-15 && (x[(1, 2)].re - r).abs() < 1e-15);
        assert_eq!(z[(0, 0)].re, 1.0);
        assert_eq!(z[(2, 2)].re, -1.0);
    }

    #[test]
    fn closed_form_matches_eigen_form() {
        let (ix, iy, _) = spin_operators(2);
        for (b, t) in [(0.3, 1.1), (PI, 0.0), (PI / 2.0, PI / 2.0), (-2.0, 4.0)] {
            let g = ix.scale(f64::cos(t)) + iy.scale(f64::sin(t));
            let e = g.symmetric_eigen();
            let u = &e.eigenvectors
                * CMatrix::from_diagonal(&e.eigenvalues.map(|l| Complex64::from_polar(1.0, -b * l)))
                * e.eigenvectors.adjoint();
            assert!(max_abs_diff(&u, &single_spin_rotation(2, b, t)) < 1e-14);
        }
    }

    #[test]
    fn pi_pulse_squares_to_minus_identity_on_spin_half() {
        let u = single_spin_rotation(2, PI, 0.0);
        assert!(max_abs_diff(&(&u * &u), &(-CMatrix::identity(2, 2))) < 1e-15);
        let v = single_spin_rotation(3, 2.0 * PI, 0.7);
        assert!(max_abs_diff(&v, &CMatrix::identity(3, 3)) < 1e-13);
    }

    #[test]
    fn iz_diagonal_examples() {
        assert_eq!(iz_diagonal(&[2, 3], 1), vec![1.0, 0.0, -1.0, 1.0, 0.0, -1.0]);
        assert_eq!(iz_diagonal(&[2, 3], 0), vec![0.5, 0.5, 0.5, -0.5, -0.5, -0.5]);
    }
}

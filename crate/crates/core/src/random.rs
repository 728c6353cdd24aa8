//! Seeded random operators.
//!
//! Every construction draws from `ChaCha8Rng::seed_from_u64(seed)`. A random
//! Hermitian matrix is built from `A` with entries `re + i·im`, both uniform on
//! `[-1, 1)`, drawn row-major with `re` before `im`; `H = (A + A†)/2` and `H₀`
//! is its traceless part. States are then
//!
//! * physical: `ρ = I/D + H₀ / (2D·‖H₀‖_F)`, so every eigenvalue is at least `1/(2D)`;
//! * unphysical (Hermitian, unit trace only): `ρ = I/D + H₀ / ‖H₀‖_F`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::qudit::{CMatrix, DensityMatrix, Normalization, QuditDims, Unitary};

pub fn random_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            let re = rng.gen_range(-1.0..1.0);
            let im = rng.gen_range(-1.0..1.0);
            m[(r, c)] = Complex64::new(re, im);
        }
    }
    m
}

pub fn random_traceless_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let a = random_matrix(d, rng);
    let h = (&a + a.adjoint()).scale(0.5);
    let shift = h.trace() / d as f64;
    h - DMatrix::identity(d, d) * shift
}

pub fn random_density<R: Rng + ?Sized>(dims: &QuditDims, rng: &mut R) -> DensityMatrix {
    let d = dims.total_dim();
    let h0 = random_traceless_hermitian(d, rng);
    let scale = 1.0 / (2.0 * d as f64 * h0.norm());
    let m = DMatrix::identity(d, d).scale(1.0 / d as f64) + h0.scale(scale);
    DensityMatrix::from_parts(m, dims.clone(), Normalization::UnitTrace)
}

pub fn random_unit_trace_hermitian<R: Rng + ?Sized>(
    dims: &QuditDims,
    rng: &mut R,
) -> DensityMatrix {
    let d = dims.total_dim();
    let h0 = random_traceless_hermitian(d, rng);
    let scale = 1.0 / h0.norm();
    let m = DMatrix::identity(d, d).scale(1.0 / d as f64) + h0.scale(scale);
    DensityMatrix::from_parts(m, dims.clone(), Normalization::UnitTrace)
}

/// Q factor of a random matrix.
pub fn random_unitary<R: Rng + ?Sized>(dims: &QuditDims, rng: &mut R) -> Unitary {
    let a = random_matrix(dims.total_dim(), rng);
    Unitary::from_product(a.qr().q(), dims.clone())
}

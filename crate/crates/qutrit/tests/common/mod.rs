#![allow(dead_code)]

use qutrit::qudit::{CMatrix, QuditOperator, C64};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn ginibre<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Haar-distributed unitary from the phase-fixed QR of a Ginibre matrix.
pub fn haar_unitary<R: Rng>(rng: &mut R, dim: usize) -> CMatrix {
    let qr = ginibre(rng, dim, dim).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        (0..dim).map(|k| {
            let z = r[(k, k)];
            if z.norm() > 0.0 { z / z.norm() } else { C64::from(1.0) }
        }),
    ));
    q * phases
}

pub fn haar_operator<R: Rng>(rng: &mut R, n: usize) -> QuditOperator {
    QuditOperator::qutrits(haar_unitary(rng, 3usize.pow(n as u32))).unwrap()
}

/// Random full-rank density matrix `GG†/Tr(GG†)`.
pub fn random_density<R: Rng>(rng: &mut R, dim: usize) -> CMatrix {
    let g = ginibre(rng, dim, dim);
    let m = &g * g.adjoint();
    let t = m.trace();
    m / t
}

pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = a - b;
    let h = (&d + d.adjoint()) * C64::from(0.5);
    h.symmetric_eigen().eigenvalues.iter().map(|l| l.abs()).sum::<f64>() / 2.0
}

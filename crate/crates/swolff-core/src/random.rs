//! Seeded random operator generators for test suites.
//!
//! All generators take an explicit RNG so every suite is reproducible from a
//! single seed. Gaussian entries come from a Box-Muller transform to avoid
//! pulling in a distributions crate for one function.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::operator::{exp_anti_hermitian, herm_part, operator_norm, CMat};

/// Standard normal real sample.
fn gauss<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; u is bounded away from zero so the log is finite.
    let u: f64 = rng.gen_range(1e-12..1.0);
    let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    (-2.0 * u.ln()).sqrt() * v.cos()
}

/// Matrix with independent complex Gaussian entries.
pub fn random_complex<R: Rng>(rng: &mut R, dim: usize) -> CMat {
    DMatrix::from_fn(dim, dim, |_, _| C64::new(gauss(rng), gauss(rng)))
}

/// Random hermitian matrix, entries of order `strength`.
pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize, strength: f64) -> CMat {
    herm_part(&random_complex(rng, dim)).scale(strength / 2.0f64.sqrt())
}

/// Random anti-hermitian matrix with operator norm exactly `norm`.
pub fn random_anti_hermitian<R: Rng>(rng: &mut R, dim: usize, norm: f64) -> CMat {
    let g = random_complex(rng, dim);
    let a = (&g - g.adjoint()).scale(0.5);
    let current = operator_norm(&a);
    if current == 0.0 {
        return a;
    }
    a.scale(norm / current)
}

/// Haar-like random unitary from the QR decomposition of a Gaussian matrix,
/// with the R-diagonal phases absorbed.
pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> CMat {
    let g = random_complex(rng, dim);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// Random rank-`rank` orthogonal projector.
pub fn random_projector<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> CMat {
    assert!(rank <= dim);
    let u = random_unitary(rng, dim);
    let mut p = CMat::zeros(dim, dim);
    for k in 0..rank {
        let col = u.column(k);
        for i in 0..dim {
            for j in 0..dim {
                p[(i, j)] += col[i] * col[j].conj();
            }
        }
    }
    p
}

/// A pair of rank-`rank` projectors with subspace distance `||P - P0||`
/// strictly below `max_distance`. The second projector is a conjugation of
/// the first by `exp(K)` with `K` rescaled until the distance bound holds.
pub fn random_projector_pair<R: Rng>(
    rng: &mut R,
    dim: usize,
    rank: usize,
    max_distance: f64,
) -> (CMat, CMat, f64) {
    let p0 = random_projector(rng, dim, rank);
    let strength = rng.gen_range(0.05..1.4);
    let mut k = random_anti_hermitian(rng, dim, strength);
    loop {
        let u = exp_anti_hermitian(&k).expect("generator is anti-hermitian by construction");
        let p = &u * &p0 * u.adjoint();
        let dist = operator_norm(&(&p - &p0));
        if dist < max_distance {
            return (p, p0, dist);
        }
        k = k.scale(0.7);
    }
}

/// Hermitian `h0` whose lowest `low` eigenvalues sit in `[0, width]` and the
/// rest at least `gap` above them, in a random eigenbasis.
pub fn random_gapped_hermitian<R: Rng>(
    rng: &mut R,
    dim: usize,
    low: usize,
    width: f64,
    gap: f64,
) -> CMat {
    assert!(low < dim);
    let u = random_unitary(rng, dim);
    let mut d = CMat::zeros(dim, dim);
    for i in 0..low {
        d[(i, i)] = C64::new(rng.gen_range(0.0..=width.max(f64::MIN_POSITIVE)), 0.0);
    }
    for i in low..dim {
        d[(i, i)] = C64::new(width + gap + rng.gen_range(0.0..2.0 * gap), 0.0);
    }
    &u * d * u.adjoint()
}

/// Identity-free diagnostic: `||P - P0||` for two projectors.
pub fn projector_distance(p: &CMat, p0: &CMat) -> f64 {
    operator_norm(&(p - p0))
}

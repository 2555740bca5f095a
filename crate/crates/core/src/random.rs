//! Seeded randomness shared by every randomized routine in the crate.
//!
//! All generators are `ChaCha8Rng`. Independent sub-streams (restarts, grid
//! points, half-rounds) are obtained with [`derive_seed`], so results do not
//! depend on execution order or thread count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::linalg::CMatrix;

pub type SeedRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeedRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives a child seed from `base` and a path of stream indices.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(base, |seed, &stream| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream.wrapping_add(1));
        rng.next_u64()
    })
}

/// Entries with real and imaginary parts i.i.d. uniform on `[-1, 1]`.
pub fn random_uniform_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let u = Uniform::new_inclusive(-1.0f64, 1.0).expect("valid interval");
    // row-major fill so the draw order matches the logical index convention
    let entries: Vec<Complex64> = (0..rows * cols)
        .map(|_| Complex64::new(u.sample(rng), u.sample(rng)))
        .collect();
    CMatrix::from_row_slice(rows, cols, &entries)
}

/// Entries i.i.d. standard complex Gaussian (`E|z|² = 1`).
pub fn random_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let entries: Vec<Complex64> = (0..rows * cols)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(s * re, s * im)
        })
        .collect();
    CMatrix::from_row_slice(rows, cols, &entries)
}

/// Random positive semi-definite `n x n` matrix of the given rank (`G G†`).
pub fn random_psd<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> CMatrix {
    let g = random_gaussian_matrix(n, rank, rng);
    &g * g.adjoint()
}

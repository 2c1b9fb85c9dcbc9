//! Seeded random draws: Haar unitaries, unitary completions and unit vectors.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::matrix::CMatrix;
use crate::network::ModeUnitary;

/// Derives the `index`-th independent sub-seed from `seed` (splitmix64).
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Uniform on the complex unit sphere in `n` dimensions.
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let v = gaussian_vector(n, rng);
        let r = norm(&v);
        if r > 1e-12 {
            return v.into_iter().map(|z| z / r).collect();
        }
    }
}

/// Gram–Schmidt: removes the components of `v` along the orthonormal `basis`.
fn orthogonalize(v: &mut [Complex64], basis: &[Vec<Complex64>]) {
    // Two passes keep the residual overlap at machine precision.
    for _ in 0..2 {
        for b in basis {
            let overlap: Complex64 = b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
            for (vk, bk) in v.iter_mut().zip(b) {
                *vk -= overlap * bk;
            }
        }
    }
}

fn complete_columns<R: Rng + ?Sized>(mut columns: Vec<Vec<Complex64>>, n: usize, rng: &mut R) -> ModeUnitary {
    while columns.len() < n {
        let mut v = gaussian_vector(n, rng);
        orthogonalize(&mut v, &columns);
        let r = norm(&v);
        if r < 1e-8 {
            continue;
        }
        columns.push(v.into_iter().map(|z| z / r).collect());
    }
    let mut m = CMatrix::zeros(n, n);
    for (c, col) in columns.iter().enumerate() {
        for (r, z) in col.iter().enumerate() {
            m[(r, c)] = *z;
        }
    }
    ModeUnitary::new(m).expect("Gram–Schmidt output is unitary")
}

/// Haar-distributed `n × n` unitary (Gram–Schmidt of a complex Gaussian matrix).
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ModeUnitary {
    complete_columns(Vec::new(), n, rng)
}

/// A random unitary whose first column is exactly `first` (which must have unit norm).
///
/// Zero entries of `first` stay exactly zero, so the selected output mode is
/// disconnected from the corresponding inputs without rounding dust.
pub fn unitary_with_first_column<R: Rng + ?Sized>(first: &[Complex64], rng: &mut R) -> ModeUnitary {
    let n = first.len();
    assert!((norm(first) - 1.0).abs() < 1e-12, "first column must be a unit vector");
    complete_columns(vec![first.to_vec()], n, rng)
}

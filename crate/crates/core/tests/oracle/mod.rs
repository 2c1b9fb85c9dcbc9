//! Reference computations that share no code with the library: two-photon
//! amplitudes from 2×2 permanents and explicit Bell-state tables.

#![allow(dead_code)]

use bellscope::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

/// Square matrix as rows, `m[input][output]`.
pub type Mat = Vec<Vec<Complex64>>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Two-photon input written as `Σ amp · in†_i in†_j |0⟩` over pairs `i ≤ j`.
pub type TwoPhotonInput = Vec<((usize, usize), Complex64)>;

/// Bell states by label index, as creation-operator pairs on modes
/// `a1 = 0, a2 = 1, b1 = 2, b2 = 3`.
pub fn bell_pairs(index: usize) -> TwoPhotonInput {
    let h = FRAC_1_SQRT_2;
    match index {
        0 => vec![((0, 3), c(h)), ((1, 2), c(-h))],
        1 => vec![((0, 3), c(h)), ((1, 2), c(h))],
        2 => vec![((0, 2), c(h)), ((1, 3), c(-h))],
        3 => vec![((0, 2), c(h)), ((1, 3), c(h))],
        _ => unreachable!(),
    }
}

/// Output probabilities keyed by the sorted pair of occupied output modes.
///
/// With `in†_i = Σ_k U[i][k] out†_k`, the pair `(k, l)`, `k < l`, picks up
/// `U_ik U_jl + U_il U_jk` (the permanent), and `(k, k)` picks up
/// `U_ik U_jk` times `√2` from `(out†_k)²|0⟩ = √2 |2⟩`.
pub fn two_photon_output(u: &Mat, input: &TwoPhotonInput) -> Vec<((usize, usize), f64)> {
    let d = u.len();
    let mut out = Vec::new();
    for k in 0..d {
        for l in k..d {
            let mut amp = Complex64::default();
            for &((i, j), a) in input {
                let perm = if k == l {
                    u[i][k] * u[j][k] * 2f64.sqrt()
                } else {
                    u[i][k] * u[j][l] + u[i][l] * u[j][k]
                };
                amp += a * perm;
            }
            let p = amp.norm_sqr();
            if p > 1e-15 {
                out.push(((k, l), p));
            }
        }
    }
    out
}

/// Strict unambiguous success fraction from four outcome tables.
pub fn success_fraction(tables: &[Vec<((usize, usize), f64)>; 4], epsilon: f64) -> f64 {
    let lookup = |t: &Vec<((usize, usize), f64)>, key: (usize, usize)| {
        t.iter().find(|(k, _)| *k == key).map_or(0.0, |(_, p)| *p)
    };
    let mut keys: Vec<(usize, usize)> = tables.iter().flatten().map(|(k, _)| *k).collect();
    keys.sort();
    keys.dedup();
    let mut s = 0.0;
    for key in keys {
        let probs: Vec<f64> = tables.iter().map(|t| lookup(t, key)).collect();
        let above: Vec<usize> = (0..4).filter(|&i| probs[i] > epsilon).collect();
        if above.len() == 1 {
            s += probs[above[0]];
        }
    }
    s / 4.0
}

/// The Innsbruck analyzer written out by hand: 50/50 splitters on `(a1, b1)`
/// and `(a2, b2)` with block `[[1, 1], [−1, 1]]/√2`.
pub fn innsbruck_matrix() -> Mat {
    let h = FRAC_1_SQRT_2;
    let z = c(0.0);
    vec![
        vec![c(h), z, c(h), z],
        vec![z, c(h), z, c(h)],
        vec![c(-h), z, c(h), z],
        vec![z, c(-h), z, c(h)],
    ]
}

pub fn to_mat(u: &bellscope::network::ModeUnitary) -> Mat {
    (0..u.dim()).map(|r| (0..u.dim()).map(|k| u.entry(r, k)).collect()).collect()
}

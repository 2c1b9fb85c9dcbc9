//! Numerical certification of the impossibility argument for a never-failing
//! linear-optical Bell analyzer.
//!
//! The argument looks at the first counted output mode `d` of a network `U`
//! and runs in four steps, each checked here against the simulator:
//!
//! 1. Auxiliary photons factor out of the overlaps of the conditional states
//!    at the maximal count in `d` ([`factorization_check`]).
//! 2. Two photons in `d` never single out one Bell state: the `μ` coefficients
//!    of `M̃₁₁ = v₁ᵀ M v₁` can't have exactly one nonzero entry
//!    ([`m11_coefficients`], [`vanishing_pattern_analysis`]).
//! 3. Avoiding two-photon events forces `v₁ = (a, b, 0, 0, …)` (or the mirror
//!    case); the one-photon conditional states then have the closed-form
//!    overlaps of [`six_overlaps`].
//! 4. Requiring all six overlaps to vanish forces `|c_R|² = |d_R|² = 0`, which
//!    no unitary allows ([`orthogonality_contradiction`]).
//!
//! # Weight ordering
//!
//! The coefficient formulas are indexed in the order of the symmetric matrix
//! `M(μ)` used by the argument, where `μ₁…μ₄` multiply the patterns
//! `a₁b₁ + a₂b₂`, `a₁b₁ − a₂b₂`, `a₁b₂ + a₂b₁`, `a₁b₂ − a₂b₁`. That is the
//! reverse of [`BellLabel`] order; [`PROOF_ORDER`] maps between the two.
//! [`BellCoefficientMatrix`] itself is indexed by [`BellLabel`], consistent
//! with [`weighted_bell`](crate::bell::weighted_bell).

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{bell_state, BellLabel, BELL_MODES};
use crate::error::{Error, Result};
use crate::fock::{ModePolynomial, Occupation, PhotonNumber};
use crate::matrix::CMatrix;
use crate::measurement::project_mode;
use crate::network::ModeUnitary;
use crate::sampling::{random_unit_vector, sub_seed, unitary_with_first_column};

/// Bell label carried by weight `μ_{k+1}` of the argument.
pub const PROOF_ORDER: [BellLabel; 4] = [BellLabel::Psi4, BellLabel::Psi3, BellLabel::Psi2, BellLabel::Psi1];

/// The six unordered pairs of conditional states, in reporting order.
pub const OVERLAP_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Coefficient at or below which an overlap or amplitude counts as zero.
pub const ZERO_TOLERANCE: f64 = 1e-10;

/// Two-photon scan thresholds: a single coefficient "present" above
/// [`COEFF_PRESENT`] with the rest "absent" below [`COEFF_ABSENT`].
pub const COEFF_PRESENT: f64 = 1e-9;
pub const COEFF_ABSENT: f64 = 1e-12;

/// Real symmetric matrices `M⁽ⁱ⁾` with `Σᵢ μᵢΨᵢ = vᵀ(Σᵢ μᵢM⁽ⁱ⁾)v |0⟩`,
/// `v` the vector of creation operators.
#[derive(Clone, Debug, PartialEq)]
pub struct BellCoefficientMatrix {
    matrices: [CMatrix; 4],
}

impl BellCoefficientMatrix {
    /// The four Bell matrices embedded in `dim ≥ 4` modes.
    pub fn new(dim: usize) -> Result<Self> {
        if dim < BELL_MODES {
            return Err(Error::Dimension(format!("Bell matrices need at least 4 modes, got {dim}")));
        }
        // vᵀMv counts each off-diagonal pair twice, hence 1/(2√2) for a 1/√2 amplitude.
        let h = FRAC_1_SQRT_2 / 2.0;
        let make = |label: BellLabel| {
            let (first, second, sign) = match label {
                BellLabel::Psi1 => ((0, 3), (1, 2), -1.0),
                BellLabel::Psi2 => ((0, 3), (1, 2), 1.0),
                BellLabel::Psi3 => ((0, 2), (1, 3), -1.0),
                BellLabel::Psi4 => ((0, 2), (1, 3), 1.0),
            };
            let mut m = CMatrix::zeros(dim, dim);
            for ((r, c), v) in [(first, h), (second, sign * h)] {
                m[(r, c)] = Complex64::new(v, 0.0);
                m[(c, r)] = Complex64::new(v, 0.0);
            }
            m
        };
        Ok(BellCoefficientMatrix {
            matrices: BellLabel::ALL.map(make),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].rows()
    }

    pub fn matrix(&self, label: BellLabel) -> &CMatrix {
        &self.matrices[label.index()]
    }

    /// `M(μ) = Σᵢ μᵢ M⁽ⁱ⁾` with `μ` in [`BellLabel`] order.
    pub fn combined(&self, mu: [Complex64; 4]) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for (m, w) in self.matrices.iter().zip(mu) {
            for r in 0..d {
                for c in 0..d {
                    out[(r, c)] += w * m[(r, c)];
                }
            }
        }
        out
    }
}

/// `M⁽ⁱ⁾ ↦ UᵀM⁽ⁱ⁾U` for every Bell label.
pub fn transform_matrix(m: &BellCoefficientMatrix, u: &ModeUnitary) -> Result<BellCoefficientMatrix> {
    if m.dim() != u.dim() {
        return Err(Error::Dimension(format!(
            "{}-mode coefficient matrices with a {}-mode network",
            m.dim(),
            u.dim()
        )));
    }
    let ut = u.matrix().transpose();
    Ok(BellCoefficientMatrix {
        matrices: m.matrices.clone().map(|mi| ut.matmul(&mi).matmul(u.matrix())),
    })
}

/// The two-photon polynomial `wᵀ·M·w |0⟩` of a symmetric matrix.
pub fn quadratic_form_polynomial(m: &CMatrix) -> Result<ModePolynomial> {
    if !m.is_symmetric(1e-12) {
        return Err(Error::Precondition("quadratic form needs a symmetric matrix".into()));
    }
    let d = m.rows();
    let mut terms = Vec::new();
    for r in 0..d {
        for c in r..d {
            let mut occ = vec![0; d];
            occ[r] += 1;
            occ[c] += 1;
            let coeff = if r == c { m[(r, c)] } else { m[(r, c)] * 2.0 };
            terms.push((Occupation::new(occ), coeff));
        }
    }
    ModePolynomial::from_terms(d, terms)
}

/// First column `v₁ = (a, b, c, d, …)` of a network matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstColumn(Vec<Complex64>);

impl FirstColumn {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() < BELL_MODES {
            return Err(Error::Dimension(format!(
                "first column needs at least 4 entries, got {}",
                entries.len()
            )));
        }
        let norm_sqr: f64 = entries.iter().map(|z| z.norm_sqr()).sum();
        if norm_sqr > 1.0 + 1e-12 {
            return Err(Error::Precondition(format!(
                "a unitary column has norm ≤ 1, got norm² {norm_sqr}"
            )));
        }
        Ok(FirstColumn(entries))
    }

    pub fn of(u: &ModeUnitary) -> Self {
        FirstColumn(u.matrix().column(0))
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }
}

/// Coefficients of `μ₁…μ₄` in `M̃₁₁`, in [`PROOF_ORDER`]:
/// `(ac+bd)/√2, (ac−bd)/√2, (ad+bc)/√2, (ad−bc)/√2`.
pub fn m11_coefficients(v1: &FirstColumn) -> [Complex64; 4] {
    let [a, b, c, d] = [v1.0[0], v1.0[1], v1.0[2], v1.0[3]];
    let s = FRAC_1_SQRT_2;
    [(a * c + b * d) * s, (a * c - b * d) * s, (a * d + b * c) * s, (a * d - b * c) * s]
}

/// True when the coefficients would let a two-photon count in `d` name a single Bell state.
pub fn single_coefficient_survives(coeffs: &[Complex64; 4]) -> bool {
    let present = coeffs.iter().filter(|z| z.norm() > COEFF_PRESENT).count();
    let absent = coeffs.iter().filter(|z| z.norm() < COEFF_ABSENT).count();
    present == 1 && absent == 3
}

/// Result of forcing a subset of `(a, b, c, d)` to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VanishingPattern {
    /// Which of `a, b, c, d` are zero.
    pub zero: [bool; 4],
    /// Number of coefficients that are nonzero for generic values of the rest.
    pub nonzero_coefficients: usize,
}

/// Enumerates all 16 zero patterns of `(a, b, c, d)` with random nonzero
/// values elsewhere; no pattern leaves exactly one coefficient.
pub fn vanishing_pattern_analysis(seed: u64) -> Vec<VanishingPattern> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..16u8)
        .map(|mask| {
            let zero = [0, 1, 2, 3].map(|k| mask & (1 << k) != 0);
            let entries: Vec<Complex64> = zero
                .iter()
                .map(|&z| {
                    if z {
                        Complex64::default()
                    } else {
                        Complex64::from_polar(rng.random_range(0.2..0.5), rng.random_range(0.0..std::f64::consts::TAU))
                    }
                })
                .collect();
            let coeffs = m11_coefficients(&FirstColumn(entries));
            VanishingPattern {
                zero,
                nonzero_coefficients: coeffs.iter().filter(|z| z.norm() > COEFF_PRESENT).count(),
            }
        })
        .collect()
}

/// Rows of `U` with the first column removed: `a_R, b_R, c_R, d_R`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedRows {
    pub a_r: Vec<Complex64>,
    pub b_r: Vec<Complex64>,
    pub c_r: Vec<Complex64>,
    pub d_r: Vec<Complex64>,
}

impl ReducedRows {
    pub fn of(u: &ModeUnitary) -> Result<Self> {
        if u.dim() < BELL_MODES {
            return Err(Error::Dimension(format!("need at least 4 modes, got {}", u.dim())));
        }
        let row = |r: usize| u.matrix().row(r)[1..].to_vec();
        Ok(ReducedRows {
            a_r: row(0),
            b_r: row(1),
            c_r: row(2),
            d_r: row(3),
        })
    }

    /// Rows given directly; only `c_R` and `d_R` enter the single-photon analysis.
    pub fn from_cd(c_r: Vec<Complex64>, d_r: Vec<Complex64>) -> Result<Self> {
        if c_r.len() != d_r.len() || c_r.is_empty() {
            return Err(Error::Dimension(format!(
                "c_R and d_R must share a positive length, got {} and {}",
                c_r.len(),
                d_r.len()
            )));
        }
        let zeros = vec![Complex64::default(); c_r.len()];
        Ok(ReducedRows {
            a_r: zeros.clone(),
            b_r: zeros,
            c_r,
            d_r,
        })
    }

    pub fn width(&self) -> usize {
        self.c_r.len()
    }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn linear_state(coeffs: Vec<Complex64>) -> ModePolynomial {
    let modes = coeffs.len();
    ModePolynomial::from_terms(
        modes,
        coeffs
            .into_iter()
            .enumerate()
            .map(|(k, z)| (Occupation::unit(modes, k), z)),
    )
    .expect("unit occupations match the mode count")
}

/// One-photon conditional states of the remaining modes for `v₁ = (a, b, 0, 0, …)`,
/// unnormalized and in [`PROOF_ORDER`]:
/// `(a·c_R + b·d_R)·e†`, `(a·c_R − b·d_R)·e†`, `(a·d_R + b·c_R)·e†`, `(a·d_R − b·c_R)·e†`.
pub fn single_photon_conditionals(a: Complex64, b: Complex64, rows: &ReducedRows) -> [ModePolynomial; 4] {
    let combo = |x: &[Complex64], sx: Complex64, y: &[Complex64], sy: Complex64| -> ModePolynomial {
        linear_state(x.iter().zip(y).map(|(p, q)| sx * p + sy * q).collect())
    };
    let (c, d) = (&rows.c_r, &rows.d_r);
    [
        combo(c, a, d, b),
        combo(c, a, d, -b),
        combo(d, a, c, b),
        combo(d, a, c, -b),
    ]
}

/// Closed-form overlaps of the one-photon conditional states, in [`OVERLAP_PAIRS`] order.
///
/// Valid when `c_R ⊥ d_R`, which holds for rows of a unitary whose first column
/// vanishes on them.
pub fn six_overlaps(a: Complex64, b: Complex64, rows: &ReducedRows) -> [Complex64; 6] {
    let cc = norm_sqr(&rows.c_r);
    let dd = norm_sqr(&rows.d_r);
    let aa = a.norm_sqr();
    let bb = b.norm_sqr();
    let ab = a.conj() * b;
    let ba = b.conj() * a;
    [
        Complex64::new(aa * cc - bb * dd, 0.0),
        ab * cc + ba * dd,
        ba * dd - ab * cc,
        ab * cc - ba * dd,
        -ab * cc - ba * dd,
        Complex64::new(aa * dd - bb * cc, 0.0),
    ]
}

/// Overlaps of the given conditional states computed with the Fock inner product.
pub fn simulated_overlaps(states: &[ModePolynomial; 4]) -> Result<[Complex64; 6]> {
    let mut out = [Complex64::default(); 6];
    for (slot, &(i, j)) in out.iter_mut().zip(OVERLAP_PAIRS.iter()) {
        *slot = states[i].inner_product(&states[j])?;
    }
    Ok(out)
}

/// Equations of the reduced orthogonality system in `x = |c_R|²`, `y = |d_R|²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReducedEquation {
    /// `x = y`
    Balance,
    /// `2(|a|² − |b|²)·x = 0`
    Imbalance,
    /// `b*a·x = 0`
    Coherence,
}

/// Why no unitary satisfies all six orthogonality conditions for a given `(a, b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContradictionCertificate {
    pub a: [f64; 2],
    pub b: [f64; 2],
    /// Coefficients of `(x, y)` in the four vanishing-overlap conditions
    /// `(|a|²−|b|²)(x+y)`, `(|a|²+|b|²)(x−y)`, `a*b·x`, `b*a·y`.
    pub system: [[[f64; 2]; 2]; 4],
    /// Rank of the 4×2 homogeneous system.
    pub rank: usize,
    /// Rows of the best-conditioned 2×2 subsystem and its |determinant|.
    pub pivot_rows: (usize, usize),
    pub pivot_minor: f64,
    /// The solved `(|c_R|², |d_R|²)`.
    pub solution: (f64, f64),
    /// Reduced equations that each force `|c_R|² = 0` on their own.
    pub c_r_forced_by: Vec<ReducedEquation>,
    /// The equation that then forces `|d_R|² = 0`.
    pub d_r_forced_by: ReducedEquation,
    /// Zero rows `c` and `d` cost a unitary this much rank.
    pub rank_deficiency: usize,
}

impl ContradictionCertificate {
    pub fn solution_norm(&self) -> f64 {
        self.solution.0 + self.solution.1
    }
}

/// Solves the orthogonality system for `(|c_R|², |d_R|²)` and certifies that
/// the only solution is zero.
pub fn orthogonality_contradiction(a: Complex64, b: Complex64) -> Result<ContradictionCertificate> {
    let aa = a.norm_sqr();
    let bb = b.norm_sqr();
    if aa + bb <= 0.0 {
        return Err(Error::Precondition("first column (a, b) is zero".into()));
    }
    let ab = a.conj() * b;
    let ba = b.conj() * a;
    let zero = Complex64::default();
    let rows: [[Complex64; 2]; 4] = [
        [Complex64::new(aa - bb, 0.0), Complex64::new(aa - bb, 0.0)],
        [Complex64::new(aa + bb, 0.0), Complex64::new(-(aa + bb), 0.0)],
        [ab, zero],
        [zero, ba],
    ];

    let mut pivot_rows = (0, 1);
    let mut pivot_minor = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            let det = (rows[i][0] * rows[j][1] - rows[i][1] * rows[j][0]).norm();
            if det > pivot_minor {
                pivot_minor = det;
                pivot_rows = (i, j);
            }
        }
    }
    let scale = rows.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let rank = if pivot_minor > 1e-12 * scale * scale {
        2
    } else if scale > 0.0 {
        1
    } else {
        0
    };
    if rank < 2 {
        return Err(Error::Precondition(format!(
            "orthogonality system for a = {a}, b = {b} is rank deficient"
        )));
    }

    // Cramer's rule on the pivot subsystem with zero right-hand side.
    let (i, j) = pivot_rows;
    let det = rows[i][0] * rows[j][1] - rows[i][1] * rows[j][0];
    let rhs = [zero, zero];
    let x = (rhs[0] * rows[j][1] - rows[i][1] * rhs[1]) / det;
    let y = (rows[i][0] * rhs[1] - rhs[0] * rows[j][0]) / det;

    let mut c_r_forced_by = Vec::new();
    if (2.0 * (aa - bb)).abs() > ZERO_TOLERANCE {
        c_r_forced_by.push(ReducedEquation::Imbalance);
    }
    if ba.norm() > ZERO_TOLERANCE {
        c_r_forced_by.push(ReducedEquation::Coherence);
    }

    let split = |z: Complex64| [z.re, z.im];
    Ok(ContradictionCertificate {
        a: split(a),
        b: split(b),
        system: rows.map(|r| r.map(split)),
        rank,
        pivot_rows,
        pivot_minor,
        solution: (x.norm(), y.norm()),
        c_r_forced_by,
        d_r_forced_by: ReducedEquation::Balance,
        rank_deficiency: 2,
    })
}

/// Smallest achievable `max |overlap|` over `c_R ⊥ d_R` with `|c_R|² + |d_R|² = 1`,
/// from Fock inner products of the conditional states (no closed forms).
///
/// `c_R = cos χ·u`, `d_R = sin χ·w` with random orthonormal `u, w` in
/// `dim − 1` modes; `χ` is scanned on a grid and refined by golden section.
pub fn min_max_overlap<R: Rng + ?Sized>(a: Complex64, b: Complex64, dim: usize, rng: &mut R) -> Result<f64> {
    if dim < BELL_MODES + 1 {
        return Err(Error::Dimension(format!("oracle needs at least 5 modes, got {dim}")));
    }
    let width = dim - 1;
    let u = random_unit_vector(width, rng);
    let mut w = random_unit_vector(width, rng);
    let overlap: Complex64 = u.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
    w.iter_mut().zip(&u).for_each(|(wk, uk)| *wk -= overlap * uk);
    let wn = norm_sqr(&w).sqrt();
    w.iter_mut().for_each(|z| *z /= wn);

    let objective = |chi: f64| -> Result<f64> {
        let (s, c) = chi.sin_cos();
        let rows = ReducedRows::from_cd(u.iter().map(|z| z * c).collect(), w.iter().map(|z| z * s).collect())?;
        let states = single_photon_conditionals(a, b, &rows);
        Ok(simulated_overlaps(&states)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
    };

    const GRID: usize = 64;
    let step = FRAC_PI_2 / GRID as f64;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=GRID {
        let chi = k as f64 * step;
        let v = objective(chi)?;
        if v < best.0 {
            best = (v, chi);
        }
    }
    let (mut lo, mut hi) = ((best.1 - step).max(0.0), (best.1 + step).min(FRAC_PI_2));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..40 {
        let m1 = hi - ratio * (hi - lo);
        let m2 = lo + ratio * (hi - lo);
        if objective(m1)? < objective(m2)? {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    Ok(best.0.min(objective(0.5 * (lo + hi))?))
}

/// Both sides of the auxiliary-photon factorization for one Bell pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactorizationCheck {
    /// Overlap of the total conditional states at the maximal count in mode `d`.
    pub lhs: Complex64,
    /// `⟨Q̃_aux|Q̃_aux⟩·⟨Q̃_Ψi|Q̃_Ψj⟩`.
    pub rhs: Complex64,
    pub n_aux: u32,
    pub n_bell: u32,
    /// Whether `Q̃_aux` still carries photons (the nontrivial case).
    pub aux_residual_photons: bool,
}

impl FactorizationCheck {
    pub fn deviation(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }
}

/// Shared work for all Bell pairs of one `(aux, U)` draw, with output mode 0 as `d`.
pub struct FactorizationContext {
    n_aux: u32,
    n_bell: u32,
    aux_norm: f64,
    aux_residual_photons: bool,
    bell_conditionals: [ModePolynomial; 4],
    total_conditionals: [ModePolynomial; 4],
}

impl FactorizationContext {
    pub fn new(aux: &ModePolynomial, u: &ModeUnitary) -> Result<Self> {
        let aux_photons = match aux.total_photon_number() {
            Ok(PhotonNumber::Definite(n)) => n,
            Ok(PhotonNumber::Inhomogeneous) => {
                return Err(Error::Precondition("auxiliary input has no definite photon number".into()))
            }
            Err(_) => return Err(Error::Precondition("auxiliary input is zero".into())),
        };
        let dim = BELL_MODES + aux.modes();
        if u.dim() != dim {
            return Err(Error::Dimension(format!(
                "{}-mode network for 4 Bell + {} auxiliary modes",
                u.dim(),
                aux.modes()
            )));
        }
        let aux_out = u.apply(&ModePolynomial::vacuum(BELL_MODES).tensor(aux))?;
        let n_aux = aux_out.max_power(0).unwrap_or(0);
        let q_aux = project_mode(&aux_out, 0, n_aux)?.conditional;

        let aux_vacuum = ModePolynomial::vacuum(aux.modes());
        let bell_out: Vec<ModePolynomial> = BellLabel::ALL
            .iter()
            .map(|&l| u.apply(&bell_state(l).tensor(&aux_vacuum)))
            .collect::<Result<_>>()?;
        let n_bell = bell_out.iter().filter_map(|p| p.max_power(0)).max().unwrap_or(0);
        let bell_conditionals = bell_out
            .iter()
            .map(|p| project_mode(p, 0, n_bell).map(|pr| pr.conditional))
            .collect::<Result<Vec<_>>>()?;

        let n = n_aux + n_bell;
        let total_conditionals = BellLabel::ALL
            .iter()
            .map(|&l| {
                let total = u.apply(&bell_state(l).tensor(aux))?;
                project_mode(&total, 0, n).map(|pr| pr.conditional)
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(FactorizationContext {
            n_aux,
            n_bell,
            aux_norm: q_aux.norm_sqr(),
            aux_residual_photons: aux_photons > n_aux,
            bell_conditionals: bell_conditionals.try_into().expect("four Bell labels"),
            total_conditionals: total_conditionals.try_into().expect("four Bell labels"),
        })
    }

    pub fn check(&self, i: BellLabel, j: BellLabel) -> Result<FactorizationCheck> {
        let lhs = self.total_conditionals[i.index()].inner_product(&self.total_conditionals[j.index()])?;
        let bell = self.bell_conditionals[i.index()].inner_product(&self.bell_conditionals[j.index()])?;
        Ok(FactorizationCheck {
            lhs,
            rhs: bell * self.aux_norm,
            n_aux: self.n_aux,
            n_bell: self.n_bell,
            aux_residual_photons: self.aux_residual_photons,
        })
    }
}

/// Compares the overlap of total conditional states (Bell ⊗ aux through `U`,
/// conditioned on `N_aux + N_Bell` photons in mode 0) with the factored product.
pub fn factorization_check(aux: &ModePolynomial, i: BellLabel, j: BellLabel, u: &ModeUnitary) -> Result<FactorizationCheck> {
    FactorizationContext::new(aux, u)?.check(i, j)
}

/// Random scan settings for [`verify`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub two_photon_samples: usize,
    pub factorization_samples: usize,
    pub overlap_samples: usize,
    pub contradiction_samples: usize,
    /// Agreement tolerance for factorization and overlap comparisons.
    pub tolerance: f64,
}

impl VerifyConfig {
    /// The factorization scan is the expensive one; it runs on 1% of `samples` (at least one).
    pub fn from_samples(samples: usize, seed: u64) -> Self {
        VerifyConfig {
            seed,
            two_photon_samples: samples,
            factorization_samples: (samples / 100).max(1),
            overlap_samples: samples,
            contradiction_samples: samples,
            tolerance: ZERO_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPhotonScan {
    pub samples: usize,
    pub violations: usize,
    /// Largest coefficient magnitude over both displayed solution families.
    pub solution_family_max: f64,
    /// Zero patterns of `(a, b, c, d)` leaving exactly one coefficient (expected none).
    pub single_coefficient_patterns: usize,
    pub first_violation: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizationScan {
    pub samples: usize,
    pub pairs_checked: usize,
    /// Draws where auxiliary photons remain in the conditional state.
    pub nontrivial_samples: usize,
    pub max_abs_diff: f64,
    pub violations: usize,
    pub first_violation: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapScan {
    pub samples: usize,
    /// Closed form vs Fock inner products.
    pub max_abs_diff: f64,
    pub classification_mismatches: usize,
    /// Conditional-state formulas vs `project_mode` on the simulated network.
    pub simulator_max_deviation: f64,
    pub violations: usize,
    pub first_violation: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContradictionScan {
    pub samples: usize,
    pub max_solution_norm: f64,
    pub min_pivot_minor: f64,
    pub min_max_overlap: f64,
    pub overlap_floor: f64,
    pub violations: usize,
    pub first_violation: Option<u64>,
}

/// Report of the full verification battery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NogoReport {
    pub two_photon_scan: TwoPhotonScan,
    pub factorization: FactorizationScan,
    pub overlap_oracle: OverlapScan,
    pub contradiction: ContradictionScan,
    pub seed: u64,
}

impl NogoReport {
    pub fn passed(&self) -> bool {
        self.two_photon_scan.violations == 0
            && self.factorization.violations == 0
            && self.overlap_oracle.violations == 0
            && self.contradiction.violations == 0
    }
}

/// `max |overlap|` must stay above this in the minimization oracle.
pub const OVERLAP_FLOOR: f64 = 0.05;

fn random_phase_entry<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(rng.random_range(0.05..1.0), rng.random_range(0.0..std::f64::consts::TAU))
}

/// A unit vector of length `dim` with a random subset of entries exactly zero
/// (never all of them).
fn sparse_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim)
            .map(|_| {
                if rng.random_bool(0.5) {
                    Complex64::default()
                } else {
                    random_phase_entry(rng)
                }
            })
            .collect();
        let n = norm_sqr(&v).sqrt();
        if n > 0.0 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

pub fn two_photon_scan(samples: usize, seed: u64) -> TwoPhotonScan {
    let results: Vec<(usize, Option<Vec<[f64; 2]>>)> = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, k));
            let dim = rng.random_range(4..=8);
            // Half the draws are generic, half have exact zeros in (a, b, c, d, …).
            let v = if k % 2 == 0 {
                random_unit_vector(dim, &mut rng)
            } else {
                sparse_unit_vector(dim, &mut rng)
            };
            let coeffs = m11_coefficients(&FirstColumn(v.clone()));
            if single_coefficient_survives(&coeffs) {
                (1, Some(v.iter().map(|z| [z.re, z.im]).collect()))
            } else {
                (0, None)
            }
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, u64::MAX));
    let mut family_max: f64 = 0.0;
    for _ in 0..64 {
        let (p, q) = (random_phase_entry(&mut rng), random_phase_entry(&mut rng));
        let zero = Complex64::default();
        for v in [vec![zero, zero, p, q], vec![p, q, zero, zero]] {
            let n = norm_sqr(&v).sqrt();
            let v = v.into_iter().map(|z| z / n).collect();
            for z in m11_coefficients(&FirstColumn(v)) {
                family_max = family_max.max(z.norm());
            }
        }
    }
    let single_coefficient_patterns = vanishing_pattern_analysis(seed)
        .iter()
        .filter(|p| p.nonzero_coefficients == 1)
        .count();

    let violations = results.iter().map(|r| r.0).sum::<usize>()
        + usize::from(family_max >= 1e-14)
        + single_coefficient_patterns;
    TwoPhotonScan {
        samples,
        violations,
        solution_family_max: family_max,
        single_coefficient_patterns,
        first_violation: results.into_iter().find_map(|r| r.1),
    }
}

/// A random auxiliary state of `photons` photons over `modes` modes; a
/// superposition of up to three Fock monomials (possibly entangled).
fn random_aux<R: Rng + ?Sized>(modes: usize, photons: u32, rng: &mut R) -> ModePolynomial {
    if modes == 0 {
        return ModePolynomial::vacuum(0);
    }
    let terms = rng.random_range(1..=3);
    let mut poly = ModePolynomial::zero(modes);
    while poly.is_zero() {
        let entries: Vec<(Occupation, Complex64)> = (0..terms)
            .map(|_| {
                let mut counts = vec![0u32; modes];
                for _ in 0..photons {
                    counts[rng.random_range(0..modes)] += 1;
                }
                (Occupation::new(counts), random_phase_entry(rng))
            })
            .collect();
        poly = ModePolynomial::from_terms(modes, entries).expect("consistent lengths");
    }
    poly
}

pub fn factorization_scan(samples: usize, seed: u64, tolerance: f64) -> Result<FactorizationScan> {
    let per_sample: Vec<(f64, bool, usize)> = (0..samples as u64)
        .into_par_iter()
        .map(|k| -> Result<(f64, bool, usize)> {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, k));
            let photons: u32 = rng.random_range(0..=2);
            let dim = if photons == 0 {
                rng.random_range(4..=8)
            } else {
                rng.random_range(5..=8)
            };
            let aux = random_aux(dim - BELL_MODES, photons, &mut rng);
            let first = sparse_unit_vector(dim, &mut rng);
            let u = unitary_with_first_column(&first, &mut rng);
            let ctx = FactorizationContext::new(&aux, &u)?;
            let mut worst: f64 = 0.0;
            let mut pairs = 0;
            for (i, j) in OVERLAP_PAIRS {
                let check = ctx.check(BellLabel::ALL[i], BellLabel::ALL[j])?;
                worst = worst.max(check.deviation());
                pairs += 1;
            }
            Ok((worst, ctx.aux_residual_photons, pairs))
        })
        .collect::<Result<_>>()?;
    let first_violation = per_sample.iter().position(|r| !(r.0 < tolerance)).map(|k| k as u64);
    Ok(FactorizationScan {
        samples,
        pairs_checked: per_sample.iter().map(|r| r.2).sum(),
        nontrivial_samples: per_sample.iter().filter(|r| r.1).count(),
        max_abs_diff: per_sample.iter().map(|r| r.0).fold(0.0, f64::max),
        violations: per_sample.iter().filter(|r| !(r.0 < tolerance)).count(),
        first_violation,
    })
}

/// Agreement of one overlap draw: closed form vs simulator.
struct OverlapSample {
    closed_vs_fock: f64,
    mismatches: usize,
    simulator_deviation: f64,
}

fn overlap_sample(k: u64, seed: u64) -> Result<OverlapSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, k));
    let dim = rng.random_range(4..=8);
    let ab = if k % 4 == 1 {
        // Exact special cases exercise the zero/nonzero classification.
        match rng.random_range(0..3) {
            0 => vec![Complex64::new(1.0, 0.0), Complex64::default()],
            1 => vec![Complex64::default(), Complex64::new(1.0, 0.0)],
            _ => vec![Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0)],
        }
    } else {
        random_unit_vector(2, &mut rng)
    };
    let (a, b) = (ab[0], ab[1]);
    let mut first = vec![a, b];
    first.resize(dim, Complex64::default());
    let u = unitary_with_first_column(&first, &mut rng);
    let rows = ReducedRows::of(&u)?;

    let closed = six_overlaps(a, b, &rows);
    let states = single_photon_conditionals(a, b, &rows);
    let simulated = simulated_overlaps(&states)?;
    let mut closed_vs_fock: f64 = 0.0;
    let mut mismatches = 0;
    for (x, y) in closed.iter().zip(&simulated) {
        closed_vs_fock = closed_vs_fock.max((x - y).norm());
        if (x.norm() > ZERO_TOLERANCE) != (y.norm() > ZERO_TOLERANCE) {
            mismatches += 1;
        }
    }

    // The simulator's one-photon conditional for Bell label PROOF_ORDER[k]
    // is exactly states[k]/√2.
    let mut simulator_deviation: f64 = 0.0;
    let aux_vacuum = ModePolynomial::vacuum(dim - BELL_MODES);
    for (state, &label) in states.iter().zip(PROOF_ORDER.iter()) {
        let out = u.apply(&bell_state(label).tensor(&aux_vacuum))?;
        let cond = project_mode(&out, 0, 1)?.conditional;
        let expected = state.scale(Complex64::new(FRAC_1_SQRT_2, 0.0));
        simulator_deviation = simulator_deviation.max(cond.max_abs_diff(&expected)?);
    }
    Ok(OverlapSample {
        closed_vs_fock,
        mismatches,
        simulator_deviation,
    })
}

pub fn overlap_scan(samples: usize, seed: u64, tolerance: f64) -> Result<OverlapScan> {
    let results: Vec<OverlapSample> = (0..samples as u64)
        .into_par_iter()
        .map(|k| overlap_sample(k, seed))
        .collect::<Result<_>>()?;
    let bad = |s: &OverlapSample| {
        !(s.closed_vs_fock < tolerance) || s.mismatches > 0 || !(s.simulator_deviation < tolerance)
    };
    Ok(OverlapScan {
        samples,
        max_abs_diff: results.iter().map(|s| s.closed_vs_fock).fold(0.0, f64::max),
        classification_mismatches: results.iter().map(|s| s.mismatches).sum(),
        simulator_max_deviation: results.iter().map(|s| s.simulator_deviation).fold(0.0, f64::max),
        violations: results.iter().filter(|s| bad(s)).count(),
        first_violation: results.iter().position(bad).map(|k| k as u64),
    })
}

/// Mode count used by the minimization oracle.
pub const ORACLE_MODES: usize = 5;

pub fn contradiction_scan(samples: usize, seed: u64) -> Result<ContradictionScan> {
    let results: Vec<(f64, f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|k| -> Result<(f64, f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, k));
            let ab = random_unit_vector(2, &mut rng);
            let cert = orthogonality_contradiction(ab[0], ab[1])?;
            let oracle = min_max_overlap(ab[0], ab[1], ORACLE_MODES, &mut rng)?;
            Ok((cert.solution_norm(), cert.pivot_minor, oracle))
        })
        .collect::<Result<_>>()?;
    let bad = |r: &(f64, f64, f64)| !(r.0 < 1e-10) || !(r.2 > OVERLAP_FLOOR);
    Ok(ContradictionScan {
        samples,
        max_solution_norm: results.iter().map(|r| r.0).fold(0.0, f64::max),
        min_pivot_minor: results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
        min_max_overlap: results.iter().map(|r| r.2).fold(f64::INFINITY, f64::min),
        overlap_floor: OVERLAP_FLOOR,
        violations: results.iter().filter(|r| bad(r)).count(),
        first_violation: results.iter().position(bad).map(|k| k as u64),
    })
}

/// Runs all four scans. Each scan uses its own sub-seed of `config.seed`.
pub fn verify(config: &VerifyConfig) -> Result<NogoReport> {
    if !(config.tolerance > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {}", config.tolerance)));
    }
    Ok(NogoReport {
        two_photon_scan: two_photon_scan(config.two_photon_samples, sub_seed(config.seed, 1)),
        factorization: factorization_scan(config.factorization_samples, sub_seed(config.seed, 2), config.tolerance)?,
        overlap_oracle: overlap_scan(config.overlap_samples, sub_seed(config.seed, 3), config.tolerance)?,
        contradiction: contradiction_scan(config.contradiction_samples, sub_seed(config.seed, 4))?,
        seed: config.seed,
    })
}

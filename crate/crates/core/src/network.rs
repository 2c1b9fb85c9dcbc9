//! Passive linear mode networks.
//!
//! A [`ModeUnitary`] `U` acts on creation operators by substitution:
//!
//! ```text
//! in†_i  ↦  Σ_j U[i][j] · out†_j
//! ```
//!
//! With this convention a two-photon state `vᵀ·M·v |0⟩` written in the input
//! operators becomes `wᵀ·(UᵀMU)·w |0⟩` in the output operators, and applying
//! `U₁` then `U₂` equals applying the product `U₁·U₂` once.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ModePolynomial, Occupation};
use crate::matrix::CMatrix;

/// Maximum tolerated `‖U·U† − 1‖_max`.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ModeUnitary {
    matrix: CMatrix,
}

impl ModeUnitary {
    /// Validates squareness and unitarity. Inputs are never re-orthonormalized.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!(
                "network matrix is {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let residual = matrix.unitarity_residual();
        if !(residual <= UNITARITY_TOLERANCE) {
            return Err(Error::NotUnitary {
                residual,
                tolerance: UNITARITY_TOLERANCE,
            });
        }
        Ok(ModeUnitary { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        ModeUnitary {
            matrix: CMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn unitarity_residual(&self) -> f64 {
        self.matrix.unitarity_residual()
    }

    /// The network that applies `self` first and `next` afterwards, i.e. `self·next`.
    pub fn then(&self, next: &ModeUnitary) -> Result<ModeUnitary> {
        if self.dim() != next.dim() {
            return Err(Error::Dimension(format!(
                "cannot chain {}-mode and {}-mode networks",
                self.dim(),
                next.dim()
            )));
        }
        Ok(ModeUnitary {
            matrix: self.matrix.matmul(&next.matrix),
        })
    }

    /// Substitutes every input creation operator and expands.
    pub fn apply(&self, poly: &ModePolynomial) -> Result<ModePolynomial> {
        let d = self.dim();
        if poly.modes() != d {
            return Err(Error::Dimension(format!(
                "{d}-mode network applied to a {}-mode state",
                poly.modes()
            )));
        }
        let rows: Vec<Vec<(usize, Complex64)>> = (0..d)
            .map(|i| {
                self.matrix
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| z.norm() > 0.0)
                    .map(|(j, z)| (j, *z))
                    .collect()
            })
            .collect();

        let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, amp) in poly.terms() {
            // Ordered maps fix the summation order, so results repeat bit for bit.
            let mut partial: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
            partial.insert(vec![0; d], *amp);
            for (i, &power) in occ.iter().enumerate() {
                for _ in 0..power {
                    let mut next: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
                    for (counts, a) in &partial {
                        for &(j, u) in &rows[i] {
                            let mut c = counts.clone();
                            c[j] += 1;
                            *next.entry(c).or_default() += a * u;
                        }
                    }
                    partial = next;
                }
            }
            for (counts, a) in partial {
                *out.entry(Occupation::new(counts)).or_default() += a;
            }
        }
        Ok(ModePolynomial::from_map(d, out))
    }

    /// Places `self` on `positions` of a `dim`-mode network, identity elsewhere.
    pub fn embed(&self, positions: &[usize], dim: usize) -> Result<ModeUnitary> {
        if positions.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "{} positions given for a {}-mode network",
                positions.len(),
                self.dim()
            )));
        }
        let mut seen = vec![false; dim];
        for &p in positions {
            if p >= dim {
                return Err(Error::Dimension(format!("position {p} outside {dim} modes")));
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::Dimension(format!("position {p} used twice")));
            }
        }
        let mut m = CMatrix::identity(dim);
        for (a, &pa) in positions.iter().enumerate() {
            for (b, &pb) in positions.iter().enumerate() {
                m[(pa, pb)] = self.matrix[(a, b)];
            }
        }
        Ok(ModeUnitary { matrix: m })
    }

    /// Relabels output modes: output `k` of the result is output `perm[k]` of `self`.
    pub fn permute_outputs(&self, perm: &[usize]) -> Result<ModeUnitary> {
        let d = self.dim();
        let mut sorted = perm.to_vec();
        sorted.sort_unstable();
        if sorted != (0..d).collect::<Vec<_>>() {
            return Err(Error::Dimension(format!("{perm:?} is not a permutation of {d} modes")));
        }
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            for (k, &src) in perm.iter().enumerate() {
                m[(i, k)] = self.matrix[(i, src)];
            }
        }
        Ok(ModeUnitary { matrix: m })
    }
}

/// A beam splitter or phase shifter. Angles are in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum NetworkElement {
    #[serde(rename = "bs")]
    BeamSplitter {
        i: usize,
        j: usize,
        theta: f64,
        phi: f64,
    },
    #[serde(rename = "ps")]
    PhaseShifter { i: usize, phi: f64 },
}

impl NetworkElement {
    /// Largest mode index touched.
    pub fn max_mode(&self) -> usize {
        match *self {
            NetworkElement::BeamSplitter { i, j, .. } => i.max(j),
            NetworkElement::PhaseShifter { i, .. } => i,
        }
    }

    /// The `dim`-mode unitary of this element.
    ///
    /// Beam splitter block on `(i, j)`:
    /// `[[cos θ, e^{iφ} sin θ], [−e^{−iφ} sin θ, cos θ]]`; phase shifter entry `e^{iφ}`.
    pub fn unitary(&self, dim: usize) -> Result<ModeUnitary> {
        let mut m = CMatrix::identity(dim);
        match *self {
            NetworkElement::BeamSplitter { i, j, theta, phi } => {
                if i >= dim || j >= dim {
                    return Err(Error::Dimension(format!(
                        "beam splitter on ({i}, {j}) outside {dim} modes"
                    )));
                }
                if i == j {
                    return Err(Error::Dimension(format!("beam splitter joins mode {i} to itself")));
                }
                let (s, c) = theta.sin_cos();
                m[(i, i)] = Complex64::new(c, 0.0);
                m[(j, j)] = Complex64::new(c, 0.0);
                m[(i, j)] = Complex64::from_polar(s, phi);
                m[(j, i)] = -Complex64::from_polar(s, -phi);
            }
            NetworkElement::PhaseShifter { i, phi } => {
                if i >= dim {
                    return Err(Error::Dimension(format!("phase shifter on {i} outside {dim} modes")));
                }
                m[(i, i)] = Complex64::from_polar(1.0, phi);
            }
        }
        Ok(ModeUnitary { matrix: m })
    }
}

/// Composes elements in application order: the first element acts first.
pub fn compose(elements: &[NetworkElement], dim: usize) -> Result<ModeUnitary> {
    let mut acc = ModeUnitary::identity(dim);
    for e in elements {
        acc = acc.then(&e.unitary(dim)?)?;
    }
    Ok(acc)
}

/// Mode pairs of the triangular mesh, in application order.
///
/// Column `c` of the target is cleared from the bottom row upwards with
/// nearest-neighbour splitters `(r − 1, r)`, giving `dim·(dim − 1)/2` splitters.
pub fn reck_layout(dim: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(dim * dim.saturating_sub(1) / 2);
    for c in 0..dim.saturating_sub(1) {
        for r in (c + 1..dim).rev() {
            pairs.push((r - 1, r));
        }
    }
    pairs
}

fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi % (2.0 * PI);
    if p <= -PI {
        p += 2.0 * PI;
    } else if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Triangular (Reck) decomposition.
///
/// Returns one beam splitter per [`reck_layout`] pair, in layout order, with
/// `θ ∈ [0, π/2]`, followed by one phase shifter per mode. Composing the
/// result with [`compose`] reproduces `u`.
pub fn reck_decompose(u: &ModeUnitary) -> Result<Vec<NetworkElement>> {
    let residual = u.unitarity_residual();
    if !(residual <= UNITARITY_TOLERANCE) {
        return Err(Error::NotUnitary {
            residual,
            tolerance: UNITARITY_TOLERANCE,
        });
    }
    let d = u.dim();
    let mut work = u.matrix.clone();
    let mut elements = Vec::with_capacity(d * d.saturating_sub(1) / 2 + d);
    let mut column = 0;
    let mut remaining_in_column = d.saturating_sub(1);
    for (i, j) in reck_layout(d) {
        let xi = work[(i, column)];
        let xj = work[(j, column)];
        let (theta, phi) = if xj.norm() == 0.0 {
            (0.0, 0.0)
        } else if xi.norm() == 0.0 {
            (PI / 2.0, 0.0)
        } else {
            (xj.norm().atan2(xi.norm()), xi.arg() - xj.arg())
        };
        let (s, c) = theta.sin_cos();
        let e_plus = Complex64::from_polar(s, phi);
        let e_minus = Complex64::from_polar(s, -phi);
        for k in 0..d {
            let ri = work[(i, k)];
            let rj = work[(j, k)];
            work[(i, k)] = ri * c + e_plus * rj;
            work[(j, k)] = -e_minus * ri + rj * c;
        }
        // The inverse of B(θ, φ) is B(θ, φ + π).
        elements.push(NetworkElement::BeamSplitter {
            i,
            j,
            theta,
            phi: wrap_phase(phi + PI),
        });
        remaining_in_column -= 1;
        if remaining_in_column == 0 {
            column += 1;
            remaining_in_column = d - 1 - column;
        }
    }
    for k in 0..d {
        elements.push(NetworkElement::PhaseShifter {
            i: k,
            phi: work[(k, k)].arg(),
        });
    }
    Ok(elements)
}

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    d: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for ModeUnitary {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let part = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..d).map(|r| self.matrix.row(r).iter().map(f).collect()).collect()
        };
        MatrixWire {
            d,
            re: part(|z| z.re),
            im: part(|z| z.im),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ModeUnitary {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = MatrixWire::deserialize(deserializer)?;
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == wire.d && rows.iter().all(|r| r.len() == wire.d);
        if !shape_ok(&wire.re) || !shape_ok(&wire.im) {
            return Err(D::Error::custom(format!("matrix is not {0}x{0}", wire.d)));
        }
        let rows: Vec<Vec<Complex64>> = wire
            .re
            .iter()
            .zip(&wire.im)
            .map(|(r, i)| r.iter().zip(i).map(|(&a, &b)| Complex64::new(a, b)).collect())
            .collect();
        let matrix = CMatrix::from_rows(&rows).ok_or_else(|| D::Error::custom("ragged matrix"))?;
        ModeUnitary::new(matrix).map_err(D::Error::custom)
    }
}

/// A circuit file: either an element list or an explicit matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Circuit {
    Elements(Vec<NetworkElement>),
    Matrix(ModeUnitary),
}

impl Circuit {
    /// Resolves to a unitary on `dim` modes. Element lists adopt `dim`;
    /// matrices must already match it.
    pub fn to_unitary(&self, dim: usize) -> Result<ModeUnitary> {
        match self {
            Circuit::Elements(elements) => compose(elements, dim),
            Circuit::Matrix(u) if u.dim() == dim => Ok(u.clone()),
            Circuit::Matrix(u) => Err(Error::Dimension(format!(
                "circuit matrix is {0}x{0} but the input has {dim} modes",
                u.dim()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::haar_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn hadamard_splitter() -> ModeUnitary {
        ModeUnitary::new(
            CMatrix::from_real_rows(&[
                vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2],
                vec![FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
            ])
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn identity_leaves_state_unchanged() {
        let p = ModePolynomial::monomial(3, vec![1, 2, 0], c(0.3)).unwrap();
        assert_eq!(ModeUnitary::identity(3).apply(&p).unwrap(), p);
    }

    #[test]
    fn single_photon_substitution() {
        let p = ModePolynomial::monomial(2, vec![1, 0], c(1.0)).unwrap();
        let out = hadamard_splitter().apply(&p).unwrap();
        assert_eq!(out.len(), 2);
        assert!((out.amplitude(&[1, 0]) - c(FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((out.amplitude(&[0, 1]) - c(FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn hong_ou_mandel_by_hand() {
        // (d1 + d2)(d1 − d2)/2 = (d1² − d2²)/2; the cross terms cancel.
        let p = ModePolynomial::monomial(2, vec![1, 1], c(1.0)).unwrap();
        let out = hadamard_splitter().apply(&p).unwrap();
        assert_eq!(out.amplitude(&[1, 1]), c(0.0));
        assert!((out.amplitude(&[2, 0]) - c(0.5)).norm() < 1e-15);
        assert!((out.amplitude(&[0, 2]) - c(-0.5)).norm() < 1e-15);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn element_examples() {
        let bs = NetworkElement::BeamSplitter {
            i: 0,
            j: 1,
            theta: FRAC_PI_4,
            phi: 0.0,
        }
        .unitary(2)
        .unwrap();
        let expected = CMatrix::from_real_rows(&[
            vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            vec![-FRAC_1_SQRT_2, FRAC_1_SQRT_2],
        ])
        .unwrap();
        assert!(bs.matrix().max_abs_diff(&expected) < 1e-15);

        let ps = NetworkElement::PhaseShifter { i: 0, phi: PI }.unitary(2).unwrap();
        let diag = CMatrix::from_real_rows(&[vec![-1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(ps.matrix().max_abs_diff(&diag) < 1e-15);

        for d in 2..6 {
            let transparent = NetworkElement::BeamSplitter {
                i: 0,
                j: 1,
                theta: 0.0,
                phi: 1.3,
            }
            .unitary(d)
            .unwrap();
            assert_eq!(transparent, ModeUnitary::identity(d));
        }
    }

    #[test]
    fn element_index_errors() {
        let bad = NetworkElement::BeamSplitter {
            i: 0,
            j: 4,
            theta: 0.1,
            phi: 0.0,
        };
        assert!(matches!(bad.unitary(4), Err(Error::Dimension(_))));
        let same = NetworkElement::BeamSplitter {
            i: 2,
            j: 2,
            theta: 0.1,
            phi: 0.0,
        };
        assert!(same.unitary(4).is_err());
        assert!(NetworkElement::PhaseShifter { i: 3, phi: 0.0 }.unitary(3).is_err());
    }

    #[test]
    fn non_unitary_rejected() {
        let m = CMatrix::from_real_rows(&[vec![1.0, 0.1], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(ModeUnitary::new(m), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn reck_identity_is_trivial() {
        for d in 1..6 {
            let elements = reck_decompose(&ModeUnitary::identity(d)).unwrap();
            assert_eq!(elements.len(), d * (d - 1) / 2 + d);
            for e in elements {
                match e {
                    NetworkElement::BeamSplitter { theta, .. } => assert_eq!(theta, 0.0),
                    NetworkElement::PhaseShifter { phi, .. } => assert_eq!(phi, 0.0),
                }
            }
        }
    }

    #[test]
    fn reck_of_fifty_fifty_is_one_quarter_turn_splitter() {
        let elements = reck_decompose(&hadamard_splitter()).unwrap();
        let splitters: Vec<_> = elements
            .iter()
            .filter_map(|e| match e {
                NetworkElement::BeamSplitter { theta, .. } => Some(*theta),
                _ => None,
            })
            .collect();
        assert_eq!(splitters.len(), 1);
        assert!((splitters[0] - FRAC_PI_4).abs() < 1e-15);
        let back = compose(&elements, 2).unwrap();
        assert!(back.matrix().max_abs_diff(hadamard_splitter().matrix()) < 1e-15);
    }

    #[test]
    fn reck_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 1..=8 {
            for _ in 0..5 {
                let u = haar_unitary(d, &mut rng);
                let back = compose(&reck_decompose(&u).unwrap(), d).unwrap();
                assert!(back.matrix().max_abs_diff(u.matrix()) < 1e-10);
            }
        }
    }

    #[test]
    fn embed_examples() {
        let id = ModeUnitary::identity(2).embed(&[0, 1], 4).unwrap();
        assert_eq!(id, ModeUnitary::identity(4));

        let e = hadamard_splitter().embed(&[0, 2], 3).unwrap();
        assert_eq!(e.entry(1, 1), c(1.0));
        for k in [0, 2] {
            assert_eq!(e.entry(1, k), c(0.0));
            assert_eq!(e.entry(k, 1), c(0.0));
        }
        assert_eq!(e.entry(2, 2), c(-FRAC_1_SQRT_2));
        assert!(e.unitarity_residual() < 1e-15);

        assert!(hadamard_splitter().embed(&[1, 1], 3).is_err());
        assert!(hadamard_splitter().embed(&[0, 3], 3).is_err());
    }

    #[test]
    fn composition_order_matches_sequential_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u1 = haar_unitary(3, &mut rng);
        let u2 = haar_unitary(3, &mut rng);
        let p = ModePolynomial::monomial(3, vec![1, 1, 0], c(1.0)).unwrap();
        let sequential = u2.apply(&u1.apply(&p).unwrap()).unwrap();
        let once = u1.then(&u2).unwrap().apply(&p).unwrap();
        assert!(sequential.max_abs_diff(&once).unwrap() < 1e-12);
    }

    #[test]
    fn json_formats() {
        let u = hadamard_splitter();
        let json = serde_json::to_string(&u).unwrap();
        let back: ModeUnitary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, u);

        let elems: Circuit =
            serde_json::from_str(r#"[{"type":"bs","i":0,"j":1,"theta":0.5,"phi":0.0},{"type":"ps","i":0,"phi":1.0}]"#)
                .unwrap();
        assert!(matches!(elems, Circuit::Elements(ref v) if v.len() == 2));
        assert_eq!(elems.to_unitary(3).unwrap().dim(), 3);

        let not_unitary = r#"{"d":2,"re":[[1,1],[0,1]],"im":[[0,0],[0,0]]}"#;
        assert!(serde_json::from_str::<ModeUnitary>(not_unitary).is_err());
    }
}

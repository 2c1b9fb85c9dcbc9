//! Creation-operator polynomials acting on the multimode vacuum.
//!
//! A [`ModePolynomial`] stores the coefficients of monomials
//! `Π_m (op†_m)^{n_m}` applied to `|0⟩`. Coefficients are *monomial*
//! coefficients, not Fock amplitudes: the state `(a†)²|0⟩` has coefficient 1
//! but norm² 2. The bosonic factorials only appear in [`ModePolynomial::inner_product`].

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Deref;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitudes with magnitude below this are dropped after every operation.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Photons per mode; one entry per mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Occupation(Vec<u32>);

impl Occupation {
    pub fn new(counts: Vec<u32>) -> Self {
        Occupation(counts)
    }

    pub fn vacuum(modes: usize) -> Self {
        Occupation(vec![0; modes])
    }

    /// A single photon in `mode`.
    pub fn unit(modes: usize, mode: usize) -> Self {
        let mut counts = vec![0; modes];
        counts[mode] = 1;
        Occupation(counts)
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `Π_m n_m!`, the norm² of the unit-coefficient monomial.
    pub fn factorial_weight(&self) -> f64 {
        self.0.iter().map(|&n| factorial(n)).product()
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    /// Copy with `mode` removed.
    pub fn without(&self, mode: usize) -> Occupation {
        let mut counts = self.0.clone();
        counts.remove(mode);
        Occupation(counts)
    }

    /// Copy with `count` inserted at position `mode`.
    pub fn with_inserted(&self, mode: usize, count: u32) -> Occupation {
        let mut counts = self.0.clone();
        counts.insert(mode, count);
        Occupation(counts)
    }

    pub fn concat(&self, other: &Occupation) -> Occupation {
        let mut counts = self.0.clone();
        counts.extend_from_slice(&other.0);
        Occupation(counts)
    }
}

impl Deref for Occupation {
    type Target = [u32];

    fn deref(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for Occupation {
    fn from(counts: Vec<u32>) -> Self {
        Occupation(counts)
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, n) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Result of [`ModePolynomial::total_photon_number`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhotonNumber {
    Definite(u32),
    Inhomogeneous,
}

/// A polynomial in the creation operators of `modes` bosonic modes, applied to vacuum.
///
/// The empty term map is the zero vector; the vacuum is the single term with
/// all-zero occupation.
#[derive(Clone, Debug, PartialEq)]
pub struct ModePolynomial {
    modes: usize,
    terms: BTreeMap<Occupation, Complex64>,
}

impl ModePolynomial {
    pub fn zero(modes: usize) -> Self {
        ModePolynomial {
            modes,
            terms: BTreeMap::new(),
        }
    }

    pub fn vacuum(modes: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Occupation::vacuum(modes), Complex64::new(1.0, 0.0));
        ModePolynomial { modes, terms }
    }

    pub fn monomial(modes: usize, occ: impl Into<Occupation>, amp: Complex64) -> Result<Self> {
        let occ = occ.into();
        if occ.len() != modes {
            return Err(Error::Dimension(format!(
                "occupation {occ} has {} entries, expected {modes}",
                occ.len()
            )));
        }
        let mut poly = ModePolynomial::zero(modes);
        if amp.norm() >= PRUNE_THRESHOLD {
            poly.terms.insert(occ, amp);
        }
        Ok(poly)
    }

    /// The normalized Fock state `|n_1, …, n_D⟩`, i.e. `Π (op†)^n / √(n!) |0⟩`.
    pub fn fock_state(occ: impl Into<Occupation>) -> Self {
        let occ = occ.into();
        let amp = 1.0 / occ.factorial_weight().sqrt();
        let modes = occ.len();
        let mut terms = BTreeMap::new();
        terms.insert(occ, Complex64::new(amp, 0.0));
        ModePolynomial { modes, terms }
    }

    /// Sums duplicate occupations and prunes.
    pub fn from_terms<I>(modes: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Occupation, Complex64)>,
    {
        let mut acc: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, amp) in terms {
            if occ.len() != modes {
                return Err(Error::Dimension(format!(
                    "occupation {occ} has {} entries, expected {modes}",
                    occ.len()
                )));
            }
            *acc.entry(occ).or_default() += amp;
        }
        Ok(ModePolynomial::from_map(modes, acc))
    }

    /// Crate-internal constructor for maps already known to have consistent keys.
    pub(crate) fn from_map(modes: usize, mut terms: BTreeMap<Occupation, Complex64>) -> Self {
        terms.retain(|_, amp| amp.norm() >= PRUNE_THRESHOLD);
        ModePolynomial { modes, terms }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Number of nonzero terms; see [`is_zero`](Self::is_zero) for emptiness.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical (lexicographic) occupation order.
    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, occ: &[u32]) -> Complex64 {
        self.terms
            .get(&Occupation(occ.to_vec()))
            .copied()
            .unwrap_or_default()
    }

    fn check_same_modes(&self, other: &ModePolynomial) -> Result<()> {
        if self.modes != other.modes {
            return Err(Error::Dimension(format!(
                "polynomials over {} and {} modes",
                self.modes, other.modes
            )));
        }
        Ok(())
    }

    /// `⟨self|other⟩ = Σ_n conj(self[n])·other[n]·Π n_m!`.
    pub fn inner_product(&self, other: &ModePolynomial) -> Result<Complex64> {
        self.check_same_modes(other)?;
        let (small, large, flip) = if self.len() <= other.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut sum = Complex64::new(0.0, 0.0);
        for (occ, amp) in &small.terms {
            if let Some(other_amp) = large.terms.get(occ) {
                let term = if flip {
                    other_amp.conj() * amp
                } else {
                    amp.conj() * other_amp
                };
                sum += term * occ.factorial_weight();
            }
        }
        Ok(sum)
    }

    /// `⟨self|self⟩`.
    pub fn norm_sqr(&self) -> f64 {
        self.terms
            .iter()
            .map(|(occ, amp)| amp.norm_sqr() * occ.factorial_weight())
            .sum()
    }

    /// Product of polynomials over disjoint mode sets: `self` occupies the
    /// first `self.modes()` modes of the result.
    pub fn tensor(&self, other: &ModePolynomial) -> ModePolynomial {
        let modes = self.modes + other.modes;
        let mut terms = BTreeMap::new();
        for (p, pa) in &self.terms {
            for (q, qa) in &other.terms {
                terms.insert(p.concat(q), pa * qa);
            }
        }
        ModePolynomial::from_map(modes, terms)
    }

    /// Product of two polynomials over the same modes (creation operators commute).
    pub fn mul(&self, other: &ModePolynomial) -> Result<ModePolynomial> {
        self.check_same_modes(other)?;
        let mut terms: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (p, pa) in &self.terms {
            for (q, qa) in &other.terms {
                let occ: Vec<u32> = p.iter().zip(q.iter()).map(|(x, y)| x + y).collect();
                *terms.entry(Occupation(occ)).or_default() += pa * qa;
            }
        }
        Ok(ModePolynomial::from_map(self.modes, terms))
    }

    pub fn total_photon_number(&self) -> Result<PhotonNumber> {
        let mut totals = self.terms.keys().map(Occupation::total);
        let first = totals.next().ok_or(Error::ZeroPolynomial)?;
        if totals.all(|t| t == first) {
            Ok(PhotonNumber::Definite(first))
        } else {
            Ok(PhotonNumber::Inhomogeneous)
        }
    }

    /// Highest power of `op†_mode` appearing in any term; `None` for the zero polynomial.
    pub fn max_power(&self, mode: usize) -> Option<u32> {
        self.terms.keys().map(|occ| occ[mode]).max()
    }

    pub fn scale(&self, factor: Complex64) -> ModePolynomial {
        let terms = self
            .terms
            .iter()
            .map(|(occ, amp)| (occ.clone(), amp * factor))
            .collect();
        ModePolynomial::from_map(self.modes, terms)
    }

    pub fn add(&self, other: &ModePolynomial) -> Result<ModePolynomial> {
        self.check_same_modes(other)?;
        let mut terms = self.terms.clone();
        for (occ, amp) in &other.terms {
            *terms.entry(occ.clone()).or_default() += amp;
        }
        Ok(ModePolynomial::from_map(self.modes, terms))
    }

    pub fn sub(&self, other: &ModePolynomial) -> Result<ModePolynomial> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn normalize(&self) -> Result<ModePolynomial> {
        let norm_sqr = self.norm_sqr();
        if norm_sqr <= 0.0 {
            return Err(Error::Degenerate("cannot normalize the zero polynomial".into()));
        }
        Ok(self.scale(Complex64::new(1.0 / norm_sqr.sqrt(), 0.0)))
    }

    /// Largest coefficient difference between two polynomials over the same modes.
    pub fn max_abs_diff(&self, other: &ModePolynomial) -> Result<f64> {
        self.check_same_modes(other)?;
        let mut worst: f64 = 0.0;
        for (occ, amp) in &self.terms {
            let theirs = other.terms.get(occ).copied().unwrap_or_default();
            worst = worst.max((amp - theirs).norm());
        }
        for (occ, amp) in &other.terms {
            if !self.terms.contains_key(occ) {
                worst = worst.max(amp.norm());
            }
        }
        Ok(worst)
    }
}

#[derive(Serialize, Deserialize)]
struct TermWire {
    occ: Vec<u32>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct PolynomialWire {
    modes: usize,
    terms: Vec<TermWire>,
}

impl Serialize for ModePolynomial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialWire {
            modes: self.modes,
            terms: self
                .terms
                .iter()
                .map(|(occ, amp)| TermWire {
                    occ: occ.0.clone(),
                    re: amp.re,
                    im: amp.im,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ModePolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = PolynomialWire::deserialize(deserializer)?;
        let terms = wire
            .terms
            .into_iter()
            .map(|t| (Occupation(t.occ), Complex64::new(t.re, t.im)));
        ModePolynomial::from_terms(wire.modes, terms).map_err(serde::de::Error::custom)
    }
}

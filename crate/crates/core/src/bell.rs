//! Bell states on four modes, the Innsbruck analyzer, and unambiguous
//! outcome classification.
//!
//! Mode order throughout is `(a₁, a₂, b₁, b₂)`: spatial input `a`/`b`,
//! polarization `1`/`2`. Auxiliary modes, when present, follow at index 4.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ModePolynomial, Occupation};
use crate::measurement::{outcome_distribution, run_strategy, ConditionalStrategy, DetectorModel, Distribution, PROBABILITY_FLOOR};
use crate::network::{ModeUnitary, NetworkElement};

/// Default attribution threshold: probabilities at or below it count as zero.
pub const DEFAULT_EPSILON: f64 = 1e-10;

pub const BELL_MODES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BellLabel {
    Psi1,
    Psi2,
    Psi3,
    Psi4,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [BellLabel::Psi1, BellLabel::Psi2, BellLabel::Psi3, BellLabel::Psi4];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<BellLabel> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            BellLabel::Psi1 => "Psi1",
            BellLabel::Psi2 => "Psi2",
            BellLabel::Psi3 => "Psi3",
            BellLabel::Psi4 => "Psi4",
        }
    }

    pub fn parse(s: &str) -> Option<BellLabel> {
        Self::ALL.into_iter().find(|l| l.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// ```text
/// Ψ₁ = (a₁†b₂† − a₂†b₁†)/√2     Ψ₂ = (a₁†b₂† + a₂†b₁†)/√2
/// Ψ₃ = (a₁†b₁† − a₂†b₂†)/√2     Ψ₄ = (a₁†b₁† + a₂†b₂†)/√2
/// ```
pub fn bell_state(label: BellLabel) -> ModePolynomial {
    let (first, second, sign) = match label {
        BellLabel::Psi1 => ([1, 0, 0, 1], [0, 1, 1, 0], -1.0),
        BellLabel::Psi2 => ([1, 0, 0, 1], [0, 1, 1, 0], 1.0),
        BellLabel::Psi3 => ([1, 0, 1, 0], [0, 1, 0, 1], -1.0),
        BellLabel::Psi4 => ([1, 0, 1, 0], [0, 1, 0, 1], 1.0),
    };
    ModePolynomial::from_terms(
        BELL_MODES,
        [
            (Occupation::new(first.to_vec()), Complex64::new(FRAC_1_SQRT_2, 0.0)),
            (Occupation::new(second.to_vec()), Complex64::new(sign * FRAC_1_SQRT_2, 0.0)),
        ],
    )
    .expect("Bell monomials have four entries")
}

/// `Σᵢ μᵢ·Ψᵢ`.
pub fn weighted_bell(mu: [Complex64; 4]) -> ModePolynomial {
    BellLabel::ALL
        .iter()
        .zip(mu)
        .fold(ModePolynomial::zero(BELL_MODES), |acc, (&label, w)| {
            acc.add(&bell_state(label).scale(w))
                .expect("all Bell states share four modes")
        })
}

/// 50/50 splitters on `(a₁, b₁)` and `(a₂, b₂)`.
///
/// Output modes are read directly as detectors 1–4: `(0, 1)` are the two
/// polarizations leaving the first splitter port, `(2, 3)` those leaving the
/// second. The polarizing splitters only route, so they add no matrix.
pub fn innsbruck_network() -> ModeUnitary {
    let splitter = |i, j| NetworkElement::BeamSplitter {
        i,
        j,
        theta: FRAC_PI_4,
        phi: 0.0,
    };
    crate::network::compose(&[splitter(0, 2), splitter(1, 3)], BELL_MODES)
        .expect("static Innsbruck layout is valid")
}

/// What is measured: a fixed network with simultaneous detection on every
/// output mode, or an adaptive strategy tree.
#[derive(Clone, Debug)]
pub enum AnalyzerSpec {
    Network {
        network: ModeUnitary,
        /// Input for modes `4..D`; zero modes when there is no auxiliary input.
        aux: ModePolynomial,
        detector: DetectorModel,
    },
    Strategy(ConditionalStrategy),
}

impl AnalyzerSpec {
    pub fn fixed(network: ModeUnitary, detector: DetectorModel) -> Self {
        AnalyzerSpec::Network {
            network,
            aux: ModePolynomial::vacuum(0),
            detector,
        }
    }

    pub fn innsbruck(detector: DetectorModel) -> Self {
        AnalyzerSpec::fixed(innsbruck_network(), detector)
    }
}

/// Per-Bell-input outcome distributions, indexed by [`BellLabel::index`].
///
/// Strategy outcomes are keyed by their measurement path.
pub fn bell_distributions(spec: &AnalyzerSpec) -> Result<[Distribution; 4]> {
    let per_label = |label: BellLabel| -> Result<Distribution> {
        match spec {
            AnalyzerSpec::Network { network, aux, detector } => {
                let aux = if aux.modes() == 0 { aux.clone() } else { aux.normalize()? };
                let input = bell_state(label).tensor(&aux);
                if network.dim() != input.modes() {
                    return Err(Error::Dimension(format!(
                        "{}-mode network for a {}-mode input (4 Bell + {} auxiliary)",
                        network.dim(),
                        input.modes(),
                        aux.modes()
                    )));
                }
                outcome_distribution(&network.apply(&input)?, *detector)
            }
            AnalyzerSpec::Strategy(strategy) => {
                let mut probs: BTreeMap<Occupation, f64> = BTreeMap::new();
                for path in run_strategy(strategy, &bell_state(label))? {
                    *probs.entry(Occupation::new(path.path)).or_default() += path.probability;
                }
                Ok(Distribution::from_map(probs))
            }
        }
    };
    Ok([
        per_label(BellLabel::Psi1)?,
        per_label(BellLabel::Psi2)?,
        per_label(BellLabel::Psi3)?,
        per_label(BellLabel::Psi4)?,
    ])
}

/// One detection event and the Bell inputs that can trigger it.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeRow {
    pub counts: Vec<u32>,
    pub probs: [f64; 4],
    /// The single Bell state that can produce this outcome, if there is one.
    pub attribution: Option<BellLabel>,
}

impl OutcomeRow {
    /// Bell inputs with probability above `epsilon`.
    pub fn triggered_by(&self, epsilon: f64) -> Vec<BellLabel> {
        BellLabel::ALL
            .into_iter()
            .filter(|l| self.probs[l.index()] > epsilon)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminationReport {
    /// `(1/4)·Σᵢ Σ_{outcomes unambiguous for i} p(outcome|Ψᵢ)`.
    pub success_fraction: f64,
    /// Every outcome with some probability at or above the report floor.
    pub outcomes: Vec<OutcomeRow>,
    pub epsilon: f64,
}

impl DiscriminationReport {
    /// Rows: input Bell state. Columns: attributed Ψ₁…Ψ₄, then "ambiguous".
    pub fn confusion(&self) -> [[f64; 5]; 4] {
        let mut m = [[0.0; 5]; 4];
        for row in &self.outcomes {
            let col = row.attribution.map_or(4, BellLabel::index);
            for (i, p) in row.probs.iter().enumerate() {
                m[i][col] += p;
            }
        }
        m
    }
}

/// Labels an outcome unambiguous for `Ψᵢ` iff `p(·|Ψᵢ) > ε` and `p(·|Ψⱼ) ≤ ε` for all `j ≠ i`.
pub fn classify(distributions: &[Distribution; 4], epsilon: f64) -> Result<DiscriminationReport> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("attribution threshold must be positive, got {epsilon}")));
    }
    let lens: BTreeSet<usize> = distributions.iter().filter_map(Distribution::outcome_len).collect();
    if lens.len() > 1 {
        return Err(Error::Comparison(format!("outcomes of differing lengths {lens:?}")));
    }
    let mut all: BTreeSet<&Occupation> = BTreeSet::new();
    for d in distributions {
        all.extend(d.iter().map(|(o, _)| o));
    }

    let mut success = 0.0;
    let mut outcomes = Vec::new();
    for occ in all {
        let probs: [f64; 4] = std::array::from_fn(|i| distributions[i].probability(occ));
        let above: Vec<usize> = (0..4).filter(|&i| probs[i] > epsilon).collect();
        let attribution = match above.as_slice() {
            [only] => BellLabel::from_index(*only),
            _ => None,
        };
        if let Some(label) = attribution {
            success += probs[label.index()];
        }
        if probs.iter().any(|&p| p >= PROBABILITY_FLOOR) {
            outcomes.push(OutcomeRow {
                counts: occ.to_vec(),
                probs,
                attribution,
            });
        }
    }
    Ok(DiscriminationReport {
        success_fraction: success / 4.0,
        outcomes,
        epsilon,
    })
}

/// Simulates all four Bell inputs through `spec` and classifies the outcomes.
pub fn analyze(spec: &AnalyzerSpec, epsilon: f64) -> Result<DiscriminationReport> {
    classify(&bell_distributions(spec)?, epsilon)
}

#[derive(Serialize, Deserialize)]
struct RowWire {
    counts: Vec<u32>,
    probs: [f64; 4],
    attribution: String,
}

#[derive(Serialize, Deserialize)]
struct ReportWire {
    success_fraction: f64,
    outcomes: Vec<RowWire>,
}

impl Serialize for DiscriminationReport {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ReportWire {
            success_fraction: self.success_fraction,
            outcomes: self
                .outcomes
                .iter()
                .map(|r| RowWire {
                    counts: r.counts.clone(),
                    probs: r.probs,
                    attribution: r.attribution.map_or("ambiguous".into(), |l| l.name().into()),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DiscriminationReport {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = ReportWire::deserialize(deserializer)?;
        let outcomes = wire
            .outcomes
            .into_iter()
            .map(|r| {
                let attribution = match r.attribution.as_str() {
                    "ambiguous" => None,
                    other => Some(
                        BellLabel::parse(other)
                            .ok_or_else(|| D::Error::custom(format!("unknown attribution {other:?}")))?,
                    ),
                };
                Ok(OutcomeRow {
                    counts: r.counts,
                    probs: r.probs,
                    attribution,
                })
            })
            .collect::<std::result::Result<Vec<_>, D::Error>>()?;
        Ok(DiscriminationReport {
            success_fraction: wire.success_fraction,
            outcomes,
            epsilon: DEFAULT_EPSILON,
        })
    }
}

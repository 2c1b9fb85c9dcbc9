//! Photon counting: single-mode projections, joint outcome distributions and
//! adaptive multi-stage strategies.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{factorial, ModePolynomial, Occupation};
use crate::network::Circuit;

/// Inputs whose norm² deviates from 1 by more than this are rejected.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// Outcomes below this probability are left out of reports (but not out of sums).
pub const PROBABILITY_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorModel {
    /// Projects onto each Fock state `|k⟩⟨k|` of the mode.
    #[default]
    NumberResolving,
    /// Only distinguishes `|0⟩⟨0|` from `Σ_{k≥1} |k⟩⟨k|`.
    Threshold,
}

impl DetectorModel {
    pub fn reading(self, photons: u32) -> u32 {
        match self {
            DetectorModel::NumberResolving => photons,
            DetectorModel::Threshold => photons.min(1),
        }
    }
}

/// Outcome of detecting `n` photons in one mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    /// Probability of the count, relative to the input norm.
    pub weight: f64,
    /// Coefficient polynomial of `(op†_mode)^n`, over the remaining modes. Unnormalized.
    pub conditional: ModePolynomial,
}

/// Conditions on `n` photons in `mode`.
///
/// The conditional state is the coefficient of `(op†_mode)^n` with the mode
/// deleted; the weight is `n!·⟨cond|cond⟩ / ⟨P|P⟩`.
pub fn project_mode(poly: &ModePolynomial, mode: usize, n: u32) -> Result<Projection> {
    if mode >= poly.modes() {
        return Err(Error::Dimension(format!(
            "mode {mode} outside a {}-mode state",
            poly.modes()
        )));
    }
    let total = poly.norm_sqr();
    if total <= 0.0 {
        return Err(Error::Degenerate("cannot measure the zero polynomial".into()));
    }
    let terms = poly
        .terms()
        .filter(|(occ, _)| occ[mode] == n)
        .map(|(occ, amp)| (occ.without(mode), *amp));
    let conditional = ModePolynomial::from_terms(poly.modes() - 1, terms)?;
    let weight = factorial(n) * conditional.norm_sqr() / total;
    Ok(Projection { weight, conditional })
}

/// Joint photon-count probabilities over all modes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Distribution {
    probs: BTreeMap<Occupation, f64>,
}

impl Distribution {
    pub fn from_map(probs: BTreeMap<Occupation, f64>) -> Self {
        Distribution { probs }
    }

    pub fn probability(&self, counts: &[u32]) -> f64 {
        self.probs
            .get(&Occupation::new(counts.to_vec()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Occupation, f64)> {
        self.probs.iter().map(|(o, p)| (o, *p))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    /// Number of entries per outcome, if all outcomes agree.
    pub fn outcome_len(&self) -> Option<usize> {
        let mut lens = self.probs.keys().map(|o| o.len());
        let first = lens.next()?;
        lens.all(|l| l == first).then_some(first)
    }

    /// Outcomes at or above [`PROBABILITY_FLOOR`].
    pub fn reportable(&self) -> impl Iterator<Item = (&Occupation, f64)> {
        self.iter().filter(|(_, p)| *p >= PROBABILITY_FLOOR)
    }

    /// Re-reads every count through `detector`.
    pub fn coarse_grain(&self, detector: DetectorModel) -> Distribution {
        let mut probs: BTreeMap<Occupation, f64> = BTreeMap::new();
        for (occ, p) in &self.probs {
            let read: Vec<u32> = occ.iter().map(|&n| detector.reading(n)).collect();
            *probs.entry(Occupation::new(read)).or_default() += p;
        }
        Distribution { probs }
    }

    /// Count distribution of one mode.
    pub fn marginal(&self, mode: usize) -> BTreeMap<u32, f64> {
        let mut out = BTreeMap::new();
        for (occ, p) in &self.probs {
            *out.entry(occ[mode]).or_default() += p;
        }
        out
    }
}

/// `p(n) = |c_n|²·Π n_m!` for every monomial of a normalized state, read through `detector`.
pub fn outcome_distribution(poly: &ModePolynomial, detector: DetectorModel) -> Result<Distribution> {
    let norm_sqr = poly.norm_sqr();
    if (norm_sqr - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized(norm_sqr));
    }
    let probs = poly
        .terms()
        .map(|(occ, amp)| (occ.clone(), amp.norm_sqr() * occ.factorial_weight()))
        .collect();
    Ok(Distribution { probs }.coarse_grain(detector))
}

/// Classification attached to a strategy leaf.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub String);

impl Label {
    pub const INCONCLUSIVE: &'static str = "inconclusive";

    pub fn new(s: impl Into<String>) -> Self {
        Label(s.into())
    }

    pub fn inconclusive() -> Self {
        Label(Self::INCONCLUSIVE.into())
    }

    pub fn is_inconclusive(&self) -> bool {
        self.0 == Self::INCONCLUSIVE
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// What happens after a count: another stage or a final label.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Branch {
    Leaf(Label),
    Stage(Box<StrategyNode>),
}

/// One stage: append `aux` modes, mix everything with `network`, count one mode.
///
/// Counts without an entry in `on` end in the inconclusive label.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrategyNode {
    pub network: Circuit,
    #[serde(default = "no_aux")]
    pub aux: ModePolynomial,
    pub measure: usize,
    #[serde(default, with = "count_keys")]
    pub on: BTreeMap<u32, Branch>,
}

/// JSON object keys are strings; counts are parsed from them explicitly so the
/// map also works inside untagged branches.
mod count_keys {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Branch;

    pub fn serialize<S: Serializer>(on: &BTreeMap<u32, Branch>, s: S) -> Result<S::Ok, S::Error> {
        on.iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect::<BTreeMap<String, &Branch>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, Branch>, D::Error> {
        BTreeMap::<String, Branch>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| {
                k.parse::<u32>()
                    .map(|n| (n, v))
                    .map_err(|_| D::Error::custom(format!("count key {k:?} is not a non-negative integer")))
            })
            .collect()
    }
}

fn no_aux() -> ModePolynomial {
    ModePolynomial::vacuum(0)
}

/// A finite tree of measurement stages; each stage consumes exactly one mode.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConditionalStrategy {
    pub root: StrategyNode,
}

impl ConditionalStrategy {
    pub fn new(root: StrategyNode) -> Self {
        ConditionalStrategy { root }
    }

    /// A single stage: fixed network, one counted mode, leaves given per count.
    pub fn single_stage(network: Circuit, measure: usize, leaves: BTreeMap<u32, Label>) -> Self {
        ConditionalStrategy {
            root: StrategyNode {
                network,
                aux: no_aux(),
                measure,
                on: leaves.into_iter().map(|(n, l)| (n, Branch::Leaf(l))).collect(),
            },
        }
    }

    /// Checks mode bookkeeping for an input of `input_modes` modes.
    pub fn validate(&self, input_modes: usize) -> Result<()> {
        validate_node(&self.root, input_modes, &mut Vec::new())
    }
}

fn validate_node(node: &StrategyNode, modes: usize, path: &mut Vec<u32>) -> Result<()> {
    let here = |msg: String| Error::Strategy(format!("at path {path:?}: {msg}"));
    if node.aux.is_zero() {
        return Err(here("auxiliary input is the zero polynomial".into()));
    }
    let dim = modes + node.aux.modes();
    node.network
        .to_unitary(dim)
        .map_err(|e| here(format!("network: {e}")))?;
    if node.measure >= dim {
        return Err(here(format!("measured mode {} outside {dim} modes", node.measure)));
    }
    if dim == 0 {
        return Err(here("no mode left to measure".into()));
    }
    for (n, branch) in &node.on {
        if let Branch::Stage(child) = branch {
            path.push(*n);
            validate_node(child, dim - 1, path)?;
            path.pop();
        }
    }
    Ok(())
}

/// One fully measured path through a strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub path: Vec<u32>,
    pub label: Label,
    pub probability: f64,
}

/// Enumerates every measurement path with its exact probability, sorted by path.
pub fn run_strategy(strategy: &ConditionalStrategy, input: &ModePolynomial) -> Result<Vec<PathOutcome>> {
    strategy.validate(input.modes())?;
    let state = input.normalize()?;
    let mut out = Vec::new();
    run_node(&strategy.root, &state, 1.0, &mut Vec::new(), &mut out)?;
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

fn run_node(
    node: &StrategyNode,
    state: &ModePolynomial,
    prob: f64,
    path: &mut Vec<u32>,
    out: &mut Vec<PathOutcome>,
) -> Result<()> {
    let joined = state.tensor(&node.aux.normalize()?);
    let network = node.network.to_unitary(joined.modes())?;
    let evolved = network.apply(&joined)?;
    let max_count = evolved.max_power(node.measure).unwrap_or(0);
    for n in 0..=max_count {
        let projection = project_mode(&evolved, node.measure, n)?;
        if projection.conditional.is_zero() {
            continue;
        }
        let p = prob * projection.weight;
        path.push(n);
        match node.on.get(&n) {
            Some(Branch::Stage(child)) => {
                let next = projection
                    .conditional
                    .scale(Complex64::new(1.0 / projection.conditional.norm_sqr().sqrt(), 0.0));
                run_node(child, &next, p, path, out)?;
            }
            Some(Branch::Leaf(label)) => out.push(PathOutcome {
                path: path.clone(),
                label: label.clone(),
                probability: p,
            }),
            None => out.push(PathOutcome {
                path: path.clone(),
                label: Label::inconclusive(),
                probability: p,
            }),
        }
        path.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkElement;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn psi1() -> ModePolynomial {
        ModePolynomial::from_terms(
            4,
            [
                (Occupation::new(vec![1, 0, 0, 1]), c(FRAC_1_SQRT_2)),
                (Occupation::new(vec![0, 1, 1, 0]), c(-FRAC_1_SQRT_2)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn hong_ou_mandel_projection() {
        let p = ModePolynomial::from_terms(
            2,
            [
                (Occupation::new(vec![2, 0]), c(0.5)),
                (Occupation::new(vec![0, 2]), c(-0.5)),
            ],
        )
        .unwrap();
        let proj = project_mode(&p, 0, 2).unwrap();
        assert!((proj.weight - 0.5).abs() < 1e-15);
        assert_eq!(proj.conditional.len(), 1);
        assert!(proj.conditional.total_photon_number().unwrap() == crate::fock::PhotonNumber::Definite(0));
    }

    #[test]
    fn bell_projection_filters_terms() {
        let proj = project_mode(&psi1(), 0, 0).unwrap();
        assert!((proj.weight - 0.5).abs() < 1e-15);
        assert_eq!(proj.conditional.modes(), 3);
        assert_eq!(proj.conditional.len(), 1);
        assert_eq!(proj.conditional.amplitude(&[1, 1, 0]), c(-FRAC_1_SQRT_2));
    }

    #[test]
    fn count_beyond_photon_number_has_zero_weight() {
        let proj = project_mode(&psi1(), 2, 3).unwrap();
        assert_eq!(proj.weight, 0.0);
        assert!(proj.conditional.is_zero());
    }

    #[test]
    fn distribution_requires_normalization() {
        let p = psi1().scale(c(2.0));
        assert!(matches!(
            outcome_distribution(&p, DetectorModel::NumberResolving),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn identity_network_distribution() {
        let dist = outcome_distribution(&psi1(), DetectorModel::NumberResolving).unwrap();
        assert_eq!(dist.len(), 2);
        assert!((dist.probability(&[1, 0, 0, 1]) - 0.5).abs() < 1e-15);
        assert!((dist.probability(&[0, 1, 1, 0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn threshold_is_coarse_graining() {
        let p = ModePolynomial::from_terms(
            2,
            [
                (Occupation::new(vec![2, 0]), c(0.5)),
                (Occupation::new(vec![0, 2]), c(-0.5)),
            ],
        )
        .unwrap();
        let dist = outcome_distribution(&p, DetectorModel::Threshold).unwrap();
        assert!((dist.probability(&[1, 0]) - 0.5).abs() < 1e-15);
        assert!((dist.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_stage_strategy_on_bell_state() {
        let strategy = ConditionalStrategy::single_stage(
            Circuit::Elements(vec![]),
            0,
            BTreeMap::from([(0, Label::new("zero")), (1, Label::new("one"))]),
        );
        let paths = run_strategy(&strategy, &psi1()).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].path, vec![0]);
        assert!((paths[0].probability - 0.5).abs() < 1e-15);
        assert_eq!(paths[1].path, vec![1]);
        assert!((paths[1].probability - 0.5).abs() < 1e-15);
    }

    #[test]
    fn strategy_on_vacuum_has_single_path() {
        let strategy = ConditionalStrategy::single_stage(
            Circuit::Elements(vec![NetworkElement::BeamSplitter {
                i: 0,
                j: 1,
                theta: 0.4,
                phi: 0.1,
            }]),
            1,
            BTreeMap::new(),
        );
        let paths = run_strategy(&strategy, &ModePolynomial::vacuum(3)).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].path, vec![0]);
        assert!(paths[0].label.is_inconclusive());
        assert!((paths[0].probability - 1.0).abs() < 1e-15);
    }

    /// ↑← , ↑→ , ↓↑ , ↓↓ with photon A in modes (0, 1) and photon B in (2, 3).
    /// Count mode 0 first, then rotate photon B's basis only when A was ↑.
    #[test]
    fn conditional_strategy_separates_mixed_basis_products() {
        let h = FRAC_1_SQRT_2;
        let states = [
            ("up_left", vec![(vec![1, 0, 1, 0], h), (vec![1, 0, 0, 1], h)]),
            ("up_right", vec![(vec![1, 0, 1, 0], h), (vec![1, 0, 0, 1], -h)]),
            ("down_up", vec![(vec![0, 1, 1, 0], 1.0)]),
            ("down_down", vec![(vec![0, 1, 0, 1], 1.0)]),
        ];
        // After mode 0 is gone, modes are (a2, b1, b2); b1/b2 are indices 1 and 2.
        let rotate = StrategyNode {
            network: Circuit::Elements(vec![
                NetworkElement::BeamSplitter {
                    i: 1,
                    j: 2,
                    theta: FRAC_PI_4,
                    phi: 0.0,
                },
            ]),
            aux: ModePolynomial::vacuum(0),
            measure: 1,
            on: BTreeMap::from([
                (0, Branch::Leaf(Label::new("up_left"))),
                (1, Branch::Leaf(Label::new("up_right"))),
            ]),
        };
        let direct = StrategyNode {
            network: Circuit::Elements(vec![]),
            aux: ModePolynomial::vacuum(0),
            measure: 1,
            on: BTreeMap::from([
                (1, Branch::Leaf(Label::new("down_up"))),
                (0, Branch::Leaf(Label::new("down_down"))),
            ]),
        };
        let strategy = ConditionalStrategy::new(StrategyNode {
            network: Circuit::Elements(vec![]),
            aux: ModePolynomial::vacuum(0),
            measure: 0,
            on: BTreeMap::from([
                (1, Branch::Stage(Box::new(rotate))),
                (0, Branch::Stage(Box::new(direct))),
            ]),
        });

        for (name, terms) in states {
            let input = ModePolynomial::from_terms(
                4,
                terms.into_iter().map(|(o, a)| (Occupation::new(o), c(a))),
            )
            .unwrap();
            let paths = run_strategy(&strategy, &input).unwrap();
            let correct: f64 = paths
                .iter()
                .filter(|p| p.label.0 == name)
                .map(|p| p.probability)
                .sum();
            assert!((correct - 1.0).abs() < 1e-12, "{name}: {paths:?}");
        }
    }

    #[test]
    fn inconsistent_strategy_rejected() {
        let bad = ConditionalStrategy::single_stage(
            Circuit::Elements(vec![]),
            5,
            BTreeMap::new(),
        );
        assert!(matches!(run_strategy(&bad, &psi1()), Err(Error::Strategy(_))));

        let wrong_matrix = ConditionalStrategy::single_stage(
            Circuit::Matrix(crate::network::ModeUnitary::identity(3)),
            0,
            BTreeMap::new(),
        );
        assert!(matches!(wrong_matrix.validate(4), Err(Error::Strategy(_))));
    }

    #[test]
    fn strategy_json_shape() {
        let json = r#"{
            "network": [],
            "aux": {"modes": 1, "terms": [{"occ": [0], "re": 1.0, "im": 0.0}]},
            "measure": 0,
            "on": {
                "0": "Psi1",
                "1": {"network": [{"type": "ps", "i": 0, "phi": 0.5}], "measure": 0, "on": {"1": "Psi2"}}
            }
        }"#;
        let s: ConditionalStrategy = serde_json::from_str(json).unwrap();
        s.validate(4).unwrap();
        assert!(matches!(s.root.on.get(&0), Some(Branch::Leaf(l)) if l.0 == "Psi1"));
        assert!(matches!(s.root.on.get(&1), Some(Branch::Stage(_))));
    }
}

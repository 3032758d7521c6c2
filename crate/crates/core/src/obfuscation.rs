//! Function sharing: every agent sends a random polynomial to each
//! neighbour, then adds what it received and subtracts what it sent.
//! The network-wide sum of objectives is unchanged.

use std::collections::BTreeMap;
use std::ops::Index;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, Topology};
use crate::optimizer::FeasibleSet;
use crate::polynomial::Polynomial;

/// One polynomial per agent, indexed by agent id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectiveVector(pub Vec<Polynomial>);

impl ObjectiveVector {
    pub fn new(functions: Vec<Polynomial>) -> Self {
        Self(functions)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Polynomial> {
        self.0.iter()
    }

    pub fn max_degree(&self) -> usize {
        self.0.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    /// `f(x) = sum_i f_i(x)`.
    pub fn aggregate(&self) -> Polynomial {
        self.0.iter().sum()
    }
}

impl Index<usize> for ObjectiveVector {
    type Output = Polynomial;

    fn index(&self, i: usize) -> &Polynomial {
        &self.0[i]
    }
}

impl From<Vec<Polynomial>> for ObjectiveVector {
    fn from(v: Vec<Polynomial>) -> Self {
        Self(v)
    }
}

#[derive(Serialize, Deserialize)]
struct ShareJson {
    from: usize,
    to: usize,
    coeffs: Polynomial,
}

#[derive(Serialize, Deserialize)]
struct SharesJson {
    shares: Vec<ShareJson>,
}

/// Map from directed link `(sender, receiver)` to the polynomial sent on it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "SharesJson", into = "SharesJson")]
pub struct ShareAssignment {
    shares: BTreeMap<DirectedEdge, Polynomial>,
}

impl From<SharesJson> for ShareAssignment {
    fn from(raw: SharesJson) -> Self {
        Self { shares: raw.shares.into_iter().map(|s| ((s.from, s.to), s.coeffs)).collect() }
    }
}

impl From<ShareAssignment> for SharesJson {
    fn from(a: ShareAssignment) -> Self {
        SharesJson {
            shares: a
                .shares
                .into_iter()
                .map(|((from, to), coeffs)| ShareJson { from, to, coeffs })
                .collect(),
        }
    }
}

impl FromIterator<(DirectedEdge, Polynomial)> for ShareAssignment {
    fn from_iter<I: IntoIterator<Item = (DirectedEdge, Polynomial)>>(iter: I) -> Self {
        Self { shares: iter.into_iter().collect() }
    }
}

impl ShareAssignment {
    /// Zero polynomial on every directed link: plain distributed descent.
    pub fn zero(topology: &Topology) -> Self {
        topology.directed_edges().into_iter().map(|e| (e, Polynomial::zero())).collect()
    }

    pub fn get(&self, from: usize, to: usize) -> Option<&Polynomial> {
        self.shares.get(&(from, to))
    }

    pub fn insert(&mut self, edge: DirectedEdge, share: Polynomial) -> Option<Polynomial> {
        self.shares.insert(edge, share)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DirectedEdge, &Polynomial)> {
        self.shares.iter()
    }

    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.shares.values().map(Polynomial::degree).max().unwrap_or(0)
    }

    /// The domain must be exactly the topology's directed links.
    pub fn check_domain(&self, topology: &Topology) -> Result<()> {
        let expected = topology.directed_edges();
        if expected.len() != self.shares.len() || expected.iter().any(|e| !self.shares.contains_key(e)) {
            let missing: Vec<_> = expected.iter().filter(|e| !self.shares.contains_key(e)).collect();
            let extra: Vec<_> = self.shares.keys().filter(|e| !expected.contains(e)).collect();
            return Err(Error::InvalidScenario(vec![format!(
                "share assignment does not match the directed edge set (missing {missing:?}, unexpected {extra:?})"
            )]));
        }
        Ok(())
    }

    /// Shares laid out in incidence-column order.
    pub fn to_columns(&self, topology: &Topology) -> Vec<Polynomial> {
        topology
            .directed_edges()
            .iter()
            .map(|e| self.shares.get(e).cloned().unwrap_or_default())
            .collect()
    }
}

/// Independent random share (zero constant term) for every directed link.
pub fn generate_shares<R: Rng + ?Sized>(
    topology: &Topology,
    degree: usize,
    coeff_bound: f64,
    rng: &mut R,
) -> ShareAssignment {
    topology
        .directed_edges()
        .into_iter()
        .map(|e| (e, Polynomial::random(degree, coeff_bound, true, rng)))
        .collect()
}

/// `f_hat_i = f_i + sum_K R_{K,i} - sum_J R_{i,J}`.
pub fn obfuscate(f: &ObjectiveVector, shares: &ShareAssignment, topology: &Topology) -> ObjectiveVector {
    let zero = Polynomial::zero();
    (0..topology.node_count())
        .map(|i| {
            let mut out = f[i].clone();
            for &k in topology.neighbors(i) {
                out += shares.get(k, i).unwrap_or(&zero);
            }
            for &j in topology.neighbors(i) {
                out -= shares.get(i, j).unwrap_or(&zero);
            }
            out
        })
        .collect::<Vec<_>>()
        .into()
}

/// Matrix form `f_hat = f + B R`.
pub fn obfuscate_matrix(
    f: &ObjectiveVector,
    shares: &ShareAssignment,
    topology: &Topology,
) -> ObjectiveVector {
    let b = topology.incidence_matrix();
    let br = b.apply(&shares.to_columns(topology));
    f.iter().zip(br).map(|(fi, d)| fi + d).collect::<Vec<_>>().into()
}

/// Exact equality of the aggregates.
pub fn check_invariant(f: &ObjectiveVector, f_hat: &ObjectiveVector) -> bool {
    f.len() == f_hat.len() && f.aggregate() == f_hat.aggregate()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentBounds {
    pub agent: usize,
    /// `max |f_h'|` over the feasible set.
    pub gradient_bound: f64,
    /// `max |f_h''|` over the feasible set.
    pub lipschitz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub agents: Vec<AgentBounds>,
    pub aggregate_convex: bool,
    pub warnings: Vec<String>,
}

const ASSUMPTION_SAMPLES: usize = 10_001;

/// Gradient bounds, gradient Lipschitz constants and aggregate convexity on
/// the feasible interval, by dense sampling (endpoints included).
pub fn validate_assumptions(f_hat: &ObjectiveVector, set: &FeasibleSet) -> AssumptionReport {
    let xs: Vec<f64> = (0..ASSUMPTION_SAMPLES)
        .map(|i| set.lower + (set.upper - set.lower) * i as f64 / (ASSUMPTION_SAMPLES - 1) as f64)
        .collect();
    let max_abs = |p: &Polynomial| xs.iter().fold(0.0f64, |m, &x| m.max(p.evaluate(x).abs()));

    let agents = f_hat
        .iter()
        .enumerate()
        .map(|(agent, fh)| {
            let g = fh.derivative();
            AgentBounds { agent, gradient_bound: max_abs(&g), lipschitz: max_abs(&g.derivative()) }
        })
        .collect();
    let curvature = f_hat.aggregate().derivative().derivative();
    let aggregate_convex = xs.iter().all(|&x| curvature.evaluate(x) >= 0.0);
    let mut warnings = Vec::new();
    if !aggregate_convex {
        warnings.push(format!(
            "aggregate is not convex on [{}, {}]; convergence to the optimum is not guaranteed",
            set.lower, set.upper
        ));
    }
    AssumptionReport { agents, aggregate_convex, warnings }
}

//! Round-synchronous distributed projected gradient descent.
//!
//! Each round every agent fuses its neighbours' iterates with one row of a
//! doubly stochastic matrix and then takes a projected gradient step on its
//! (obfuscated) objective. All agents read the same snapshot of the previous
//! round, so the result does not depend on the order agents are visited in.

use std::collections::BTreeSet;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{MixingMatrix, Topology};
use crate::obfuscation::{generate_shares, obfuscate, ObjectiveVector, ShareAssignment};
use crate::polynomial::Polynomial;

/// Closed interval `[lower, upper]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet {
    pub lower: f64,
    pub upper: f64,
}

impl FeasibleSet {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        let set = Self { lower, upper };
        set.check().map_err(|m| Error::InvalidScenario(vec![m]))?;
        Ok(set)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(format!(
                "feasible set [{}, {}] must be a non-empty bounded interval",
                self.lower, self.upper
            ));
        }
        Ok(())
    }

    /// Euclidean projection (a clamp in one dimension).
    pub fn project(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lower..=self.upper).contains(&x)
    }

    pub fn on_boundary(&self, x: f64, tol: f64) -> bool {
        (x - self.lower).abs() <= tol || (x - self.upper).abs() <= tol
    }
}

impl Default for FeasibleSet {
    fn default() -> Self {
        Self { lower: -2.0, upper: 2.0 }
    }
}

/// `alpha_k = numerator / (k + offset)` for `k = 1, 2, ...`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub numerator: f64,
    pub offset: f64,
}

impl StepSchedule {
    pub fn new(numerator: f64, offset: f64) -> Result<Self> {
        let s = Self { numerator, offset };
        s.check().map_err(|m| Error::InvalidScenario(vec![m]))?;
        Ok(s)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if !(self.numerator.is_finite() && self.numerator > 0.0) {
            return Err(format!("step numerator must be positive, got {}", self.numerator));
        }
        if !(self.offset.is_finite() && self.offset >= 0.0) {
            return Err(format!("step offset must be nonnegative, got {}", self.offset));
        }
        Ok(())
    }

    pub fn alpha(&self, k: usize) -> f64 {
        self.numerator / (k as f64 + self.offset)
    }
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self { numerator: 1.0, offset: 1e-4 }
    }
}

/// Where the shared random functions come from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShareSource {
    /// All shares zero: unobfuscated distributed descent.
    #[default]
    None,
    Explicit(ShareAssignment),
    /// Draw from the scenario seed. `degree` defaults to the largest
    /// objective degree.
    Generate {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        degree: Option<usize>,
        coeff_bound: f64,
    },
}

pub const DEFAULT_ITERATIONS: usize = 500;

// Independent RNG streams derived from one scenario seed.
pub(crate) const STREAM_INITIAL: u64 = 1;
pub(crate) const STREAM_SHARES: u64 = 2;
pub(crate) const STREAM_VERIFIER: u64 = 3;

pub(crate) fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// On-disk scenario document. Optional fields fall back to documented defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub name: String,
    pub topology: Topology,
    pub objectives: ObjectiveVector,
    #[serde(default)]
    pub shares: ShareSource,
    #[serde(default)]
    pub feasible_set: FeasibleSet,
    /// Explicit fusion matrix; Metropolis-Hastings weights when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub step_schedule: StepSchedule,
    /// Starting iterates; uniform in the feasible set when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub coalition: BTreeSet<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Degree the adversary assumes for gradients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_degree: Option<usize>,
}

fn default_iterations() -> usize {
    DEFAULT_ITERATIONS
}

/// A fully resolved, validated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub topology: Topology,
    pub objectives: ObjectiveVector,
    pub shares: ShareSource,
    pub feasible_set: FeasibleSet,
    pub mixing: MixingMatrix,
    pub step_schedule: StepSchedule,
    pub initial: Vec<f64>,
    pub iterations: usize,
    pub coalition: BTreeSet<usize>,
    pub seed: u64,
    pub gradient_degree: Option<usize>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ScenarioSpec = serde_json::from_str(text)
            .map_err(|e| Error::InvalidScenario(vec![format!("malformed scenario JSON: {e}")]))?;
        Self::from_spec(spec)
    }

    /// Resolves defaults and checks every precondition, reporting all
    /// violations together.
    pub fn from_spec(spec: ScenarioSpec) -> Result<Self> {
        let mut problems = Vec::new();
        let n = spec.topology.node_count();

        if let Err(m) = spec.feasible_set.check() {
            problems.push(m);
        }
        let mixing = match &spec.mixing {
            Some(m) => MixingMatrix::new(m.clone(), &spec.topology),
            None => MixingMatrix::metropolis(&spec.topology),
        };
        let mixing = match mixing {
            Ok(m) => Some(m),
            Err(e) => {
                problems.push(e.to_string());
                None
            }
        };
        let initial = match spec.initial.clone() {
            Some(v) => v,
            None if problems.is_empty() => {
                let mut rng = seeded_stream(spec.seed, STREAM_INITIAL);
                let set = spec.feasible_set;
                (0..n).map(|_| rng.gen_range(set.lower..=set.upper)).collect()
            }
            None => vec![0.0; n],
        };
        let Some(mixing) = mixing else {
            return Err(Error::InvalidScenario(problems));
        };
        let scenario = Scenario {
            name: spec.name,
            topology: spec.topology,
            objectives: spec.objectives,
            shares: spec.shares,
            feasible_set: spec.feasible_set,
            mixing,
            step_schedule: spec.step_schedule,
            initial,
            iterations: spec.iterations,
            coalition: spec.coalition,
            seed: spec.seed,
            gradient_degree: spec.gradient_degree,
        };
        problems.extend(scenario.violations());
        if problems.is_empty() {
            Ok(scenario)
        } else {
            Err(Error::InvalidScenario(problems))
        }
    }

    /// Document with every default written out.
    pub fn to_spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            name: self.name.clone(),
            topology: self.topology.clone(),
            objectives: self.objectives.clone(),
            shares: self.shares.clone(),
            feasible_set: self.feasible_set,
            mixing: Some(self.mixing.entries().to_vec()),
            step_schedule: self.step_schedule,
            initial: Some(self.initial.clone()),
            iterations: self.iterations,
            coalition: self.coalition.clone(),
            seed: self.seed,
            gradient_degree: self.gradient_degree,
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.topology.node_count();
        if n == 0 {
            out.push("topology has no agents".into());
        }
        if !self.topology.is_connected() {
            out.push("topology is not connected".into());
        }
        if self.objectives.len() != n {
            out.push(format!("{} objectives for {n} agents", self.objectives.len()));
        }
        if self.objectives.iter().any(|p| p.coeffs().iter().any(|c| !c.is_finite())) {
            out.push("objective coefficients must be finite".into());
        }
        if let Err(m) = self.feasible_set.check() {
            out.push(m);
        }
        if let Err(m) = self.step_schedule.check() {
            out.push(m);
        }
        if let Err(e) = MixingMatrix::new(self.mixing.entries().to_vec(), &self.topology) {
            out.push(e.to_string());
        }
        if self.initial.len() != n {
            out.push(format!("{} initial iterates for {n} agents", self.initial.len()));
        }
        for (j, &x) in self.initial.iter().enumerate() {
            if !self.feasible_set.contains(x) {
                out.push(format!("initial iterate of agent {j} ({x}) lies outside the feasible set"));
            }
        }
        if self.iterations == 0 {
            out.push("iterations must be at least 1".into());
        }
        if let Some(&bad) = self.coalition.iter().find(|&&a| a >= n) {
            out.push(format!("coalition member {bad} is not an agent"));
        }
        match &self.shares {
            ShareSource::Explicit(a) => {
                if let Err(Error::InvalidScenario(m)) = a.check_domain(&self.topology) {
                    out.extend(m);
                }
            }
            ShareSource::Generate { coeff_bound, .. } if !(coeff_bound.is_finite() && *coeff_bound > 0.0) => {
                out.push(format!("share coeff_bound must be positive, got {coeff_bound}"));
            }
            _ => {}
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(v))
        }
    }

    /// The same scenario with zero shares.
    pub fn without_obfuscation(&self) -> Self {
        Self { shares: ShareSource::None, ..self.clone() }
    }

    /// Shares this scenario uses, drawing them from the seed when asked to.
    pub fn resolve_shares(&self) -> ShareAssignment {
        match &self.shares {
            ShareSource::None => ShareAssignment::zero(&self.topology),
            ShareSource::Explicit(a) => a.clone(),
            ShareSource::Generate { degree, coeff_bound } => {
                let degree = degree.unwrap_or_else(|| self.objectives.max_degree()).max(1);
                let mut rng = seeded_stream(self.seed, STREAM_SHARES);
                generate_shares(&self.topology, degree, *coeff_bound, &mut rng)
            }
        }
    }

    /// Gradient degree the adversary fits by default.
    pub fn attack_degree(&self) -> usize {
        self.gradient_degree
            .unwrap_or_else(|| self.objectives.max_degree().saturating_sub(1))
    }
}

/// One synchronous round `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    pub k: usize,
    pub alpha: f64,
    pub mixing: Arc<MixingMatrix>,
    /// Fused estimates `v^J_k`.
    pub v: Vec<f64>,
    /// Iterates `x^J_{k+1}` produced by the round.
    pub x_next: Vec<f64>,
}

/// Everything an observer of the network sees: every iterate and fused
/// estimate of every agent, with the public protocol parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ExecutionTrace {
    pub feasible_set: FeasibleSet,
    pub step_schedule: StepSchedule,
    pub initial: Vec<f64>,
    pub rounds: Vec<Round>,
}

impl ExecutionTrace {
    pub fn node_count(&self) -> usize {
        self.initial.len()
    }

    /// Iterates after the last round.
    pub fn final_state(&self) -> &[f64] {
        self.rounds.last().map_or(&self.initial, |r| &r.x_next)
    }

    /// Iterates entering round `k` (1-based); `states_before(1)` is the start.
    pub fn states_before(&self, k: usize) -> &[f64] {
        if k <= 1 {
            &self.initial
        } else {
            &self.rounds[k - 2].x_next
        }
    }

    /// Row 0 describes the initial iterates, row `k` the iterates after round `k`.
    pub fn metrics(&self, aggregate: &Polynomial) -> Vec<MetricsRow> {
        std::iter::once((0, self.initial.as_slice()))
            .chain(self.rounds.iter().map(|r| (r.k, r.x_next.as_slice())))
            .map(|(iteration, xs)| MetricsRow::from_states(iteration, xs, aggregate))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,agent,v,x_next,alpha")?;
        for r in &self.rounds {
            for (j, (v, x)) in r.v.iter().zip(&r.x_next).enumerate() {
                writeln!(out, "{},{},{},{},{}", r.k, j, v, x, r.alpha)?;
            }
        }
        Ok(())
    }

    /// Bitwise equality of every recorded state, the observer's notion of
    /// "the same execution".
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        fn same(a: &[f64], b: &[f64]) -> bool {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        }
        same(&self.initial, &other.initial)
            && self.rounds.len() == other.rounds.len()
            && self.rounds.iter().zip(&other.rounds).all(|(a, b)| {
                a.k == b.k
                    && a.alpha.to_bits() == b.alpha.to_bits()
                    && a.mixing == b.mixing
                    && same(&a.v, &b.v)
                    && same(&a.x_next, &b.x_next)
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: usize,
    /// Iterate average.
    pub mean: f64,
    /// `max_J |x^J - mean|`.
    pub max_dev: f64,
    /// `sum_J (x^J - mean)^2`.
    pub rms_sq: f64,
    pub f_of_mean: f64,
}

impl MetricsRow {
    pub fn from_states(iteration: usize, xs: &[f64], aggregate: &Polynomial) -> Self {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let max_dev = xs.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
        let rms_sq = xs.iter().map(|x| (x - mean).powi(2)).sum();
        Self { iteration, mean, max_dev, rms_sq, f_of_mean: aggregate.evaluate(mean) }
    }
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "iteration,mean,max_dev,rms_sq,f_of_mean")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.iteration, r.mean, r.max_dev, r.rms_sq, r.f_of_mean)?;
    }
    Ok(())
}

/// `v^J = sum_I B[J][I] x^I`.
pub fn fuse(states: &[f64], mixing: &MixingMatrix, agent: usize) -> f64 {
    mixing.row(agent).iter().zip(states).map(|(w, x)| w * x).sum()
}

pub fn project(x: f64, set: &FeasibleSet) -> f64 {
    set.project(x)
}

/// `P_X[v - alpha * f'(v)]`.
pub fn step(v: f64, objective: &Polynomial, alpha: f64, set: &FeasibleSet) -> f64 {
    step_with_gradient(v, &objective.derivative(), alpha, set)
}

fn step_with_gradient(v: f64, gradient: &Polynomial, alpha: f64, set: &FeasibleSet) -> f64 {
    set.project(v - alpha * gradient.evaluate(v))
}

/// Runs the iterative phase on the given (already obfuscated) objectives.
pub fn iterate(
    objectives: &ObjectiveVector,
    mixing: &MixingMatrix,
    schedule: StepSchedule,
    set: FeasibleSet,
    initial: &[f64],
    iterations: usize,
) -> ExecutionTrace {
    let gradients: Vec<Polynomial> = objectives.iter().map(Polynomial::derivative).collect();
    let mixing = Arc::new(mixing.clone());
    let mut states = initial.to_vec();
    let mut rounds = Vec::with_capacity(iterations);
    for k in 1..=iterations {
        let alpha = schedule.alpha(k);
        let v: Vec<f64> = (0..states.len()).map(|j| fuse(&states, &mixing, j)).collect();
        let x_next: Vec<f64> = v
            .iter()
            .zip(&gradients)
            .map(|(&vj, g)| step_with_gradient(vj, g, alpha, &set))
            .collect();
        states.clone_from(&x_next);
        rounds.push(Round { k, alpha, mixing: Arc::clone(&mixing), v, x_next });
    }
    ExecutionTrace { feasible_set: set, step_schedule: schedule, initial: initial.to_vec(), rounds }
}

/// Result of running the full protocol: the public trace plus the private
/// material that produced it.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trace: ExecutionTrace,
    pub shares: ShareAssignment,
    pub obfuscated: ObjectiveVector,
}

/// Share exchange, obfuscation, then `iterations` rounds of fusion and
/// projected gradient steps.
pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    scenario.validate()?;
    let shares = scenario.resolve_shares();
    let obfuscated = obfuscate(&scenario.objectives, &shares, &scenario.topology);
    let trace = iterate(
        &obfuscated,
        &scenario.mixing,
        scenario.step_schedule,
        scenario.feasible_set,
        &scenario.initial,
        scenario.iterations,
    );
    Ok(RunOutput { trace, shares, obfuscated })
}

//! Passive-curious coalition: it follows the protocol, sees every iterate of
//! every agent, knows the topology, mixing weights and step sizes, and tries
//! to reconstruct the objectives of good agents.
//!
//! The attack inverts each projected gradient step on rounds where the
//! projection was inactive, fits a polynomial to the resulting
//! `(v, gradient)` pairs and integrates it. Without obfuscation this yields
//! the private objective up to a constant; with function sharing it only
//! yields the obfuscated objective.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::obfuscation::{ObjectiveVector, ShareAssignment};
use crate::optimizer::{fuse, ExecutionTrace, RunOutput, Scenario};
use crate::polynomial::Polynomial;

/// Rounds whose new iterate is this close to a bound are treated as clipped.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Per-coefficient tolerance (constant term ignored) for calling a recovery a match.
pub const RECOVERY_TOL: f64 = 1e-2;

/// What the coalition can see.
#[derive(Clone, Debug)]
pub struct AdversaryView {
    pub trace: ExecutionTrace,
    pub topology: Topology,
    pub coalition: BTreeSet<usize>,
    /// The coalition's own private objectives.
    pub own_objectives: BTreeMap<usize, Polynomial>,
    /// Shares on links into or out of a coalition member, and nothing else.
    pub observed_shares: ShareAssignment,
}

impl AdversaryView {
    /// The view of `scenario.coalition` on a finished run.
    pub fn observe(scenario: &Scenario, output: &RunOutput) -> Self {
        Self::observe_as(scenario, output, &scenario.coalition)
    }

    pub fn observe_as(scenario: &Scenario, output: &RunOutput, coalition: &BTreeSet<usize>) -> Self {
        let own_objectives = coalition
            .iter()
            .map(|&a| (a, scenario.objectives[a].clone()))
            .collect();
        let observed_shares = output
            .shares
            .iter()
            .filter(|((i, j), _)| coalition.contains(i) || coalition.contains(j))
            .map(|(&e, r)| (e, r.clone()))
            .collect();
        Self {
            trace: output.trace.clone(),
            topology: scenario.topology.clone(),
            coalition: coalition.clone(),
            own_objectives,
            observed_shares,
        }
    }

    pub fn good_agents(&self) -> Vec<usize> {
        self.topology.good_nodes(&self.coalition)
    }

    /// Obfuscated objective of a coalition member, rebuilt from its own
    /// objective and the shares it sent and received.
    pub fn own_obfuscated(&self, member: usize) -> Polynomial {
        let zero = Polynomial::zero();
        let mut out = self.own_objectives[&member].clone();
        for &k in self.topology.neighbors(member) {
            out += self.observed_shares.get(k, member).unwrap_or(&zero);
            out -= self.observed_shares.get(member, k).unwrap_or(&zero);
        }
        out
    }
}

/// `(v^target_k, gradient at v^target_k)` for every round the projection
/// left untouched.
pub fn estimate_gradient_samples(view: &AdversaryView, target: usize) -> Result<Vec<(f64, f64)>> {
    if view.coalition.contains(&target) {
        return Err(Error::CoalitionMember(target));
    }
    let set = view.trace.feasible_set;
    let samples: Vec<(f64, f64)> = view
        .trace
        .rounds
        .iter()
        .filter(|r| !set.on_boundary(r.x_next[target], BOUNDARY_TOL))
        .map(|r| {
            let v = fuse(view.trace.states_before(r.k), &r.mixing, target);
            (v, (v - r.x_next[target]) / r.alpha)
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::NoInteriorSamples(target));
    }
    Ok(samples)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveredFunction {
    pub agent: usize,
    pub gradient: Polynomial,
    /// Antiderivative of `gradient` with zero constant term.
    pub objective: Polynomial,
    pub samples: usize,
    /// Root-mean-square fit residual.
    pub residual: f64,
}

/// Fit the gradient, then integrate it.
pub fn recover_objective(agent: usize, samples: &[(f64, f64)], degree: usize) -> Result<RecoveredFunction> {
    let gradient = Polynomial::least_squares_fit(samples, degree)?;
    let sq: f64 = samples.iter().map(|&(x, y)| (gradient.evaluate(x) - y).powi(2)).sum();
    let residual = (sq / samples.len() as f64).sqrt();
    Ok(RecoveredFunction {
        agent,
        objective: gradient.antiderivative(),
        gradient,
        samples: samples.len(),
        residual,
    })
}

#[derive(Clone, Debug, Default)]
pub struct AttackOutcome {
    pub degree: usize,
    pub recovered: BTreeMap<usize, RecoveredFunction>,
    /// Good agents whose recovery failed, with the reason.
    pub failures: BTreeMap<usize, String>,
}

/// Attempts recovery for every good agent; failures are recorded, not fatal.
pub fn attack(view: &AdversaryView, gradient_degree: usize) -> AttackOutcome {
    let mut outcome = AttackOutcome { degree: gradient_degree, ..Default::default() };
    for agent in view.good_agents() {
        match estimate_gradient_samples(view, agent)
            .and_then(|s| recover_objective(agent, &s, gradient_degree))
        {
            Ok(r) => {
                outcome.recovered.insert(agent, r);
            }
            Err(e) => {
                outcome.failures.insert(agent, e.to_string());
            }
        }
    }
    outcome
}

/// Estimates of the network aggregate `f` and of the good agents' sum
/// `f - sum_{a in coalition} f_a`, both with the constant term dropped.
pub fn recover_aggregate(
    view: &AdversaryView,
    recovered: &BTreeMap<usize, RecoveredFunction>,
) -> Result<(Polynomial, Polynomial)> {
    let good = view.good_agents();
    if let Some(&missing) = good.iter().find(|a| !recovered.contains_key(a)) {
        return Err(Error::NoInteriorSamples(missing));
    }
    let good_sum: Polynomial = good.iter().map(|a| &recovered[a].objective).sum();
    let own_obf: Polynomial = view.coalition.iter().map(|&a| view.own_obfuscated(a)).sum();
    let own: Polynomial = view.own_objectives.values().sum();
    let total = (good_sum + own_obf).without_constant();
    let good_only = (&total - &own).without_constant();
    Ok((total, good_only))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    RecoveredOriginal,
    RecoveredObfuscatedOnly,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentAttackReport {
    pub agent: usize,
    pub verdict: Verdict,
    pub gradient: Option<Polynomial>,
    pub objective: Option<Polynomial>,
    pub residual: Option<f64>,
    pub samples: usize,
    /// Largest non-constant coefficient distance to the private objective.
    pub distance_to_original: Option<f64>,
    /// Same, to the obfuscated objective.
    pub distance_to_obfuscated: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub coalition: Vec<usize>,
    pub gradient_degree: usize,
    pub tolerance: f64,
    pub agents: Vec<AgentAttackReport>,
}

impl AttackReport {
    /// Scores an attack against ground truth the adversary never sees.
    pub fn judge(
        view: &AdversaryView,
        outcome: &AttackOutcome,
        truth: &ObjectiveVector,
        obfuscated: &ObjectiveVector,
    ) -> Self {
        let agents = view
            .good_agents()
            .into_iter()
            .map(|agent| match outcome.recovered.get(&agent) {
                Some(r) => {
                    let d_orig = r.objective.max_coeff_distance_up_to_constant(&truth[agent]);
                    let d_obf = r.objective.max_coeff_distance_up_to_constant(&obfuscated[agent]);
                    let verdict = if d_orig <= RECOVERY_TOL {
                        Verdict::RecoveredOriginal
                    } else if d_obf <= RECOVERY_TOL {
                        Verdict::RecoveredObfuscatedOnly
                    } else {
                        Verdict::Failed
                    };
                    AgentAttackReport {
                        agent,
                        verdict,
                        gradient: Some(r.gradient.clone()),
                        objective: Some(r.objective.clone()),
                        residual: Some(r.residual),
                        samples: r.samples,
                        distance_to_original: Some(d_orig),
                        distance_to_obfuscated: Some(d_obf),
                        error: None,
                    }
                }
                None => AgentAttackReport {
                    agent,
                    verdict: Verdict::Failed,
                    gradient: None,
                    objective: None,
                    residual: None,
                    samples: 0,
                    distance_to_original: None,
                    distance_to_obfuscated: None,
                    error: outcome.failures.get(&agent).cloned(),
                },
            })
            .collect();
        Self {
            coalition: view.coalition.iter().copied().collect(),
            gradient_degree: outcome.degree,
            tolerance: RECOVERY_TOL,
            agents,
        }
    }

    pub fn verdict_of(&self, agent: usize) -> Option<Verdict> {
        self.agents.iter().find(|a| a.agent == agent).map(|a| a.verdict)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{run, FeasibleSet, ShareSource};
    use crate::scenarios;

    fn p(c: &[f64]) -> Polynomial {
        Polynomial::new(c.to_vec())
    }

    fn view_of(s: &Scenario) -> (AdversaryView, RunOutput) {
        let out = run(s).unwrap();
        (AdversaryView::observe(s, &out), out)
    }

    #[test]
    fn view_hides_good_to_good_shares() {
        let s = scenarios::sec6();
        let (view, _) = view_of(&s);
        assert_eq!(view.observed_shares.len(), 4);
        assert!(view.observed_shares.get(1, 2).is_none());
        assert!(view.observed_shares.get(2, 1).is_none());
    }

    #[test]
    fn inversion_is_exact_without_clipping() {
        let g = Topology::path(2);
        let mut s = scenarios::sec6();
        s.topology = g.clone();
        s.objectives = vec![p(&[0., 0., 1.]), p(&[0., 0., 1.])].into();
        s.shares = ShareSource::None;
        s.mixing = crate::graph::MixingMatrix::metropolis(&g).unwrap();
        s.initial = vec![0.3, -0.4];
        s.feasible_set = FeasibleSet::new(-10.0, 10.0).unwrap();
        s.coalition = [0].into();
        let (view, _) = view_of(&s);
        let samples = estimate_gradient_samples(&view, 1).unwrap();
        assert_eq!(samples.len(), s.iterations);
        for (v, g) in samples {
            assert!((g - 2.0 * v).abs() < 1e-9);
        }
    }

    #[test]
    fn inversion_matches_obfuscated_gradient() {
        let s = scenarios::sec6();
        let (view, out) = view_of(&s);
        for agent in [1, 2] {
            let grad = out.obfuscated[agent].derivative();
            for (v, g) in estimate_gradient_samples(&view, agent).unwrap() {
                assert!((g - grad.evaluate(v)).abs() < 1e-9, "agent {agent} at {v}");
            }
        }
    }

    #[test]
    fn clipped_rounds_are_discarded() {
        let mut s = scenarios::sec6();
        s.shares = ShareSource::None;
        // agent 2 is pulled hard towards +inf by a steep linear term
        s.objectives.0[2] = p(&[0., -1000.]);
        let (view, _) = view_of(&s);
        let pinned = view.trace.rounds.iter().filter(|r| r.x_next[2] == 2.0).count();
        assert!(pinned > 0);
        match estimate_gradient_samples(&view, 2) {
            Ok(samples) => assert_eq!(samples.len(), s.iterations - pinned),
            Err(e) => assert!(matches!(e, Error::NoInteriorSamples(2))),
        }
    }

    #[test]
    fn fully_pinned_agent_has_no_samples() {
        let mut s = scenarios::sec6();
        s.shares = ShareSource::None;
        s.objectives = vec![p(&[0., -1000.]); 3].into();
        s.initial = vec![2.0; 3];
        let (view, _) = view_of(&s);
        assert!(matches!(estimate_gradient_samples(&view, 1), Err(Error::NoInteriorSamples(1))));
        let outcome = attack(&view, 1);
        assert!(outcome.recovered.is_empty());
        assert_eq!(outcome.failures.len(), 2);
    }

    #[test]
    fn coalition_members_are_not_targets() {
        let s = scenarios::sec6();
        let (view, _) = view_of(&s);
        assert!(matches!(estimate_gradient_samples(&view, 0), Err(Error::CoalitionMember(0))));
        let outcome = attack(&view, 3);
        assert!(!outcome.recovered.contains_key(&0));
    }

    #[test]
    fn recover_objective_examples() {
        let g2 = p(&[-36., 50., -24., 4.]);
        let pts: Vec<_> = (0..40).map(|i| 0.5 + i as f64 * 0.1).map(|x| (x, g2.evaluate(x))).collect();
        let r = recover_objective(1, &pts, 3).unwrap();
        assert!(r.objective.approx_eq(&p(&[0., -36., 25., -8., 1.]), 1e-8));
        assert_eq!(r.objective.derivative(), r.gradient);

        let g3 = p(&[-108., 108., -36., 4.]);
        let pts: Vec<_> = (0..40).map(|i| 1.8 + i as f64 * 0.05).map(|x| (x, g3.evaluate(x))).collect();
        let r = recover_objective(2, &pts, 3).unwrap();
        assert!(r.objective.approx_eq(&p(&[0., -108., 54., -12., 1.]), 1e-6));

        let flat: Vec<_> = (0..10).map(|i| (i as f64, 0.0)).collect();
        assert!(recover_objective(0, &flat, 3).unwrap().objective.approx_eq(&Polynomial::zero(), 1e-12));
    }

    #[test]
    fn aggregate_recovery_on_obfuscated_run() {
        let s = scenarios::sec6();
        let (view, _) = view_of(&s);
        let outcome = attack(&view, 3);
        let (total, good) = recover_aggregate(&view, &outcome.recovered).unwrap();
        assert!(total.approx_eq(&p(&[0., 0., 2., 0., 2.]), 1e-2), "{total}");
        assert!(good.approx_eq(&p(&[0., 0., 1., 0., 2.]), 1e-2), "{good}");
    }

    #[test]
    fn aggregate_recovery_with_full_coalition() {
        let s = scenarios::sec6();
        let out = run(&s).unwrap();
        let view = AdversaryView::observe_as(&s, &out, &[0, 1, 2].into());
        let outcome = attack(&view, 3);
        assert!(outcome.recovered.is_empty());
        let (total, good) = recover_aggregate(&view, &outcome.recovered).unwrap();
        assert_eq!(total, p(&[0., 0., 2., 0., 2.]));
        assert_eq!(good, Polynomial::zero());
    }

    #[test]
    fn report_serializes_verdicts() {
        let s = scenarios::example1();
        let (view, out) = view_of(&s);
        let outcome = attack(&view, s.attack_degree());
        let report = AttackReport::judge(&view, &outcome, &s.objectives, &out.obfuscated);
        let v = serde_json::to_value(&report).unwrap();
        assert_eq!(v["agents"][0]["verdict"], "recovered_original");
        assert_eq!(v["agents"][0]["agent"], 1);
    }
}

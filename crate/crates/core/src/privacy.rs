//! Constructive indistinguishability check.
//!
//! Given the real objectives `f` with shares `R`, and any alternative `f_alt`
//! that agrees with `f` on the coalition and has the same sum, build shares
//! `G` with `f + B R = f_alt + B G` while `G` equals `R` on every link the
//! coalition can see. Both problems then produce the same execution, so the
//! coalition cannot tell them apart.
//!
//! Construction:
//! 1. pin `G` to `R` on links into or out of the coalition;
//! 2. take a BFS spanning tree over the good agents (coalition edges
//!    removed) and draw random shares for every other good-to-good link;
//! 3. solve `B_ST G_ST = [f_hat - f_alt]_eff - B_EE G_EE` for the tree links.
//!
//! Polynomial addition is coefficient-wise, so step 3 splits into one real
//! least-squares problem per monomial degree. A tree's incidence matrix has
//! full column rank, so each problem has a unique solution whenever the
//! right-hand side is consistent.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, Topology};
use crate::obfuscation::{obfuscate, ObjectiveVector, ShareAssignment};
use crate::optimizer::{run, Scenario, ShareSource};
use crate::polynomial::{snap_to_lattice, Polynomial};

/// Per-coefficient tolerance on the tree solve and on obfuscated-function agreement.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Random alternative objectives: coalition functions kept, good agents
/// perturbed by polynomials that sum to zero.
///
/// With fewer than two good agents the zero-sum constraint forces the
/// perturbation to vanish and `f` is returned unchanged.
pub fn sample_alternative_objectives<R: Rng + ?Sized>(
    f: &ObjectiveVector,
    coalition: &BTreeSet<usize>,
    rng: &mut R,
    degree: usize,
) -> ObjectiveVector {
    let good: Vec<usize> = (0..f.len()).filter(|i| !coalition.contains(i)).collect();
    let mut out = f.clone();
    let Some((&last, rest)) = good.split_last() else {
        return out;
    };
    if rest.is_empty() {
        return out;
    }
    let bound = f.iter().map(Polynomial::max_abs_coeff).fold(1.0, f64::max);
    let mut total = Polynomial::zero();
    for &i in rest {
        let q = loop {
            let q = Polynomial::random(degree, bound, false, rng);
            if !q.is_zero() {
                break q;
            }
        };
        total += &q;
        out.0[i] += &q;
    }
    out.0[last] -= &total;
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionResult {
    /// Alternative shares `G` on every directed link.
    pub shares: ShareAssignment,
    /// Largest absolute residual of the tree solve over all coefficients.
    pub residual: f64,
    /// Smallest singular value of the tree incidence matrix (good-agent rows).
    pub min_singular_value: Option<f64>,
    /// Links whose shares were solved for, as `(parent, child)`.
    pub tree_links: Vec<DirectedEdge>,
    /// Good-to-good links given random shares.
    pub free_links: Vec<DirectedEdge>,
}

pub fn construct_alternative_shares<R: Rng + ?Sized>(
    f: &ObjectiveVector,
    shares: &ShareAssignment,
    f_alt: &ObjectiveVector,
    topology: &Topology,
    coalition: &BTreeSet<usize>,
    rng: &mut R,
) -> Result<ConstructionResult> {
    let n = topology.node_count();
    let touches = |(i, j): DirectedEdge| coalition.contains(&i) || coalition.contains(&j);

    // step 1
    let mut g: ShareAssignment = topology
        .directed_edges()
        .into_iter()
        .filter(|&e| touches(e))
        .map(|e| (e, shares.get(e.0, e.1).cloned().unwrap_or_default()))
        .collect();

    // step 2
    let good = topology.good_nodes(coalition);
    let tree_links = topology
        .delete_adversary_edges(coalition)
        .spanning_tree(&good)
        .map_err(|_| Error::NotAdmissible)?;
    let tree_set: BTreeSet<DirectedEdge> = tree_links.iter().copied().collect();
    let free_links: Vec<DirectedEdge> = topology
        .directed_edges()
        .into_iter()
        .filter(|&e| !touches(e) && !tree_set.contains(&e))
        .collect();
    let degree = f
        .max_degree()
        .max(f_alt.max_degree())
        .max(shares.max_degree())
        .max(1);
    let bound = shares.iter().map(|(_, r)| r.max_abs_coeff()).fold(1.0, f64::max);
    for &e in &free_links {
        g.insert(e, Polynomial::random(degree, bound, true, rng));
    }

    // step 3: effective right-hand side
    let f_hat = obfuscate(f, shares, topology);
    let mut eff: Vec<Polynomial> = (0..n).map(|i| &f_hat[i] - &f_alt[i]).collect();
    for (&(from, to), share) in g.iter() {
        eff[to] -= share;
        eff[from] += share;
    }
    let coalition_row_error = coalition
        .iter()
        .map(|&a| eff[a].max_abs_coeff())
        .fold(0.0, f64::max);
    if coalition_row_error > RESIDUAL_TOL {
        return Err(Error::InconsistentAlternative(coalition_row_error));
    }

    let degree = eff.iter().map(Polynomial::degree).max().unwrap_or(0);
    let row_of: Vec<Option<usize>> = {
        let mut v = vec![None; n];
        for (r, &node) in good.iter().enumerate() {
            v[node] = Some(r);
        }
        v
    };
    let b_st = DMatrix::from_fn(good.len(), tree_links.len(), |r, c| {
        let (from, to) = tree_links[c];
        let node = good[r];
        if node == to {
            1.0
        } else if node == from {
            -1.0
        } else {
            0.0
        }
    });

    let (solution, min_singular_value) = solve_per_degree(&b_st, &good, &eff, degree)?;
    let mut tree_polys: Vec<Polynomial> = solution;

    let residual_of = |polys: &[Polynomial]| -> f64 {
        let mut rows: Vec<Polynomial> = good.iter().map(|&i| eff[i].clone()).collect();
        for (&(from, to), p) in tree_links.iter().zip(polys) {
            if let Some(r) = row_of[to] {
                rows[r] -= p;
            }
            if let Some(r) = row_of[from] {
                rows[r] += p;
            }
        }
        rows.iter().map(Polynomial::max_abs_coeff).fold(coalition_row_error, f64::max)
    };
    let mut residual = residual_of(&tree_polys);

    // Tree incidence matrices are totally unimodular: inputs on the
    // coefficient lattice have a solution on the lattice.
    let snapped: Vec<Polynomial> = tree_polys
        .iter()
        .map(|p| Polynomial::new(p.coeffs().iter().map(|&c| snap_to_lattice(c)).collect()))
        .collect();
    let snapped_residual = residual_of(&snapped);
    if snapped_residual <= residual {
        tree_polys = snapped;
        residual = snapped_residual;
    }

    if residual > RESIDUAL_TOL {
        return Err(Error::InconsistentAlternative(residual));
    }
    for (&e, p) in tree_links.iter().zip(tree_polys) {
        g.insert(e, p);
    }
    Ok(ConstructionResult { shares: g, residual, min_singular_value, tree_links, free_links })
}

/// Least-squares solve of `b_st * x = rhs_d`, one right-hand side per monomial degree `d`.
fn solve_per_degree(
    b_st: &DMatrix<f64>,
    good: &[usize],
    eff: &[Polynomial],
    degree: usize,
) -> Result<(Vec<Polynomial>, Option<f64>)> {
    let cols = b_st.ncols();
    if cols == 0 {
        return Ok((Vec::new(), None));
    }
    let svd = b_st.clone().svd(true, true);
    let min_sv = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let rhs = DMatrix::from_fn(good.len(), degree + 1, |r, d| eff[good[r]].coeff(d));
    let x = svd.solve(&rhs, 1e-12).map_err(|_| Error::InconsistentAlternative(f64::NAN))?;
    let coeffs: Vec<Vec<f64>> = x.row_iter().map(|row| row.iter().copied().collect()).collect();
    Ok((coeffs.into_iter().map(Polynomial::new).collect(), Some(min_sv)))
}

/// One observable the coalition can compare between two executions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow {
    pub observable: String,
    pub max_abs_difference: f64,
    pub matches: bool,
}

/// Compares every coalition observable of `(f, R)` against `(f_alt, G)`:
/// obfuscated functions of all agents (within [`RESIDUAL_TOL`]), shares on
/// coalition links and the coalition's own objectives (exactly).
pub fn compare_observables(
    f: &ObjectiveVector,
    shares: &ShareAssignment,
    f_alt: &ObjectiveVector,
    alt_shares: &ShareAssignment,
    topology: &Topology,
    coalition: &BTreeSet<usize>,
) -> Vec<ObservableRow> {
    let mut rows = Vec::new();
    let a = obfuscate(f, shares, topology);
    let b = obfuscate(f_alt, alt_shares, topology);
    for i in 0..topology.node_count() {
        let d = a[i].max_coeff_distance(&b[i]);
        rows.push(ObservableRow {
            observable: format!("obfuscated[{i}]"),
            max_abs_difference: d,
            matches: d <= RESIDUAL_TOL,
        });
    }
    for (i, j) in topology.directed_edges() {
        if !(coalition.contains(&i) || coalition.contains(&j)) {
            continue;
        }
        let r = shares.get(i, j).cloned().unwrap_or_default();
        let g = alt_shares.get(i, j).cloned().unwrap_or_default();
        rows.push(ObservableRow {
            observable: format!("share({i},{j})"),
            max_abs_difference: r.max_coeff_distance(&g),
            matches: r == g,
        });
    }
    for &m in coalition {
        rows.push(ObservableRow {
            observable: format!("objective[{m}]"),
            max_abs_difference: f[m].max_coeff_distance(&f_alt[m]),
            matches: f[m] == f_alt[m],
        });
    }
    rows
}

pub fn verify_indistinguishable(
    f: &ObjectiveVector,
    shares: &ShareAssignment,
    f_alt: &ObjectiveVector,
    alt_shares: &ShareAssignment,
    topology: &Topology,
    coalition: &BTreeSet<usize>,
) -> bool {
    f.len() == topology.node_count()
        && f_alt.len() == topology.node_count()
        && compare_observables(f, shares, f_alt, alt_shares, topology, coalition)
            .iter()
            .all(|r| r.matches)
}

/// Runs both scenarios and reports whether every recorded iterate and fused
/// estimate is bitwise identical.
pub fn end_to_end_indistinguishability(a: &Scenario, b: &Scenario) -> Result<bool> {
    let mut problems = Vec::new();
    if a.topology != b.topology {
        problems.push("topologies differ".to_string());
    }
    if a.mixing != b.mixing {
        problems.push("mixing matrices differ".to_string());
    }
    if a.step_schedule != b.step_schedule {
        problems.push("step schedules differ".to_string());
    }
    if a.feasible_set != b.feasible_set {
        problems.push("feasible sets differ".to_string());
    }
    if a.initial != b.initial {
        problems.push("initial iterates differ".to_string());
    }
    if a.iterations != b.iterations {
        problems.push("iteration counts differ".to_string());
    }
    if !problems.is_empty() {
        return Err(Error::InvalidScenario(problems));
    }
    Ok(run(a)?.trace.bitwise_eq(&run(b)?.trace))
}

/// `base` with its objectives and shares replaced.
pub fn with_problem(base: &Scenario, objectives: ObjectiveVector, shares: ShareAssignment) -> Scenario {
    Scenario { objectives, shares: ShareSource::Explicit(shares), ..base.clone() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub verified: bool,
    pub residual: Option<f64>,
    pub min_singular_value: Option<f64>,
    pub alternative_objectives: ObjectiveVector,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shares: Option<ShareAssignment>,
    pub observables: Vec<ObservableRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifierReport {
    pub verdict: bool,
    /// Worst residual over all trials.
    pub residual: f64,
    pub coalition: Vec<usize>,
    pub trials: Vec<TrialReport>,
}

/// Samples `trials` alternatives for the scenario's run and checks that each
/// admits indistinguishable shares.
pub fn verify_scenario<R: Rng + ?Sized>(
    scenario: &Scenario,
    shares: &ShareAssignment,
    trials: usize,
    rng: &mut R,
) -> VerifierReport {
    let f = &scenario.objectives;
    let coalition = &scenario.coalition;
    let degree = f.max_degree().max(1);
    let mut reports = Vec::with_capacity(trials);
    for trial in 0..trials {
        let f_alt = sample_alternative_objectives(f, coalition, rng, degree);
        let report = match construct_alternative_shares(f, shares, &f_alt, &scenario.topology, coalition, rng) {
            Ok(c) => {
                let observables =
                    compare_observables(f, shares, &f_alt, &c.shares, &scenario.topology, coalition);
                TrialReport {
                    trial,
                    verified: observables.iter().all(|r| r.matches),
                    residual: Some(c.residual),
                    min_singular_value: c.min_singular_value,
                    alternative_objectives: f_alt,
                    shares: Some(c.shares),
                    observables,
                    error: None,
                }
            }
            Err(e) => TrialReport {
                trial,
                verified: false,
                residual: None,
                min_singular_value: None,
                alternative_objectives: f_alt,
                shares: None,
                observables: Vec::new(),
                error: Some(e.to_string()),
            },
        };
        reports.push(report);
    }
    VerifierReport {
        verdict: reports.iter().all(|t| t.verified),
        residual: reports.iter().filter_map(|t| t.residual).fold(0.0, f64::max),
        coalition: coalition.iter().copied().collect(),
        trials: reports,
    }
}

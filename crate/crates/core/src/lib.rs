//! Privacy-preserving distributed optimization by function sharing.
//!
//! Agents on an undirected graph jointly minimize `Σ fᵢ(x)` over an
//! interval. Before optimizing, neighbours exchange random polynomials and
//! each agent descends on `f̂ᵢ = fᵢ + Σ received − Σ sent`, which leaves the
//! sum unchanged while hiding `fᵢ` from a passive coalition, provided the
//! graph's vertex connectivity exceeds the coalition size.
//!
//! | module | contents |
//! |---|---|
//! | [`polynomial`] | dense real polynomials, least-squares fitting |
//! | [`graph`] | topologies, connectivity, incidence and mixing matrices |
//! | [`obfuscation`] | share generation and function sharing |
//! | [`optimizer`] | scenarios and projected distributed gradient descent |
//! | [`adversary`] | gradient-inversion attack by a passive coalition |
//! | [`privacy`] | constructive indistinguishability verifier |
//! | [`scenarios`] | shipped scenario documents |
//! | [`cli`] | the `privshare` command line |
//!
//! The `examples/` directory has one runnable program per capability.

pub mod adversary;
pub mod cli;
pub mod error;
pub mod graph;
pub mod obfuscation;
pub mod optimizer;
pub mod polynomial;
pub mod privacy;
pub mod scenarios;

pub use error::{Error, Result};
pub use graph::{MixingMatrix, Topology};
pub use obfuscation::{obfuscate, ObjectiveVector, ShareAssignment};
pub use optimizer::{run, ExecutionTrace, FeasibleSet, Scenario, StepSchedule};
pub use polynomial::Polynomial;

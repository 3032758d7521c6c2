//! Scenario documents shipped with the crate, compiled in so the demos and
//! tests do not depend on the working directory.
//!
//! `sec6` is the three-agent obfuscated run (objectives x², x²+x⁴, x⁴ with
//! the first problem's shares), `table2_problem2` the alternative problem
//! that produces the same obfuscated functions, `example1` the unobfuscated
//! run the gradient attack succeeds on. `fig3a` is a 7-node topology with
//! vertex connectivity 3 (a stand-in for the drawing, whose edge set is not
//! fully specified), `fig4a` and `fig4b` are the two privacy-loss topologies.

use crate::graph::Topology;
use crate::obfuscation::{ObjectiveVector, ShareAssignment};
use crate::optimizer::{Scenario, ShareSource};

pub const SEC6: &str = include_str!("../scenarios/sec6.json");
pub const TABLE2_PROBLEM2: &str = include_str!("../scenarios/table2_problem2.json");
pub const EXAMPLE1: &str = include_str!("../scenarios/example1.json");
pub const FIG3A: &str = include_str!("../scenarios/fig3a.json");
pub const FIG4A: &str = include_str!("../scenarios/fig4a.json");
pub const FIG4B: &str = include_str!("../scenarios/fig4b.json");

/// Shipped scenario text by name.
pub fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "sec6" | "table2_problem1" => SEC6,
        "table2_problem2" => TABLE2_PROBLEM2,
        "example1" => EXAMPLE1,
        "fig3a" => FIG3A,
        "fig4a" => FIG4A,
        "fig4b" => FIG4B,
        _ => return None,
    })
}

pub fn load(name: &str) -> Option<Scenario> {
    source(name).map(|text| Scenario::from_json(text).expect("shipped scenario is valid"))
}

pub fn sec6() -> Scenario {
    load("sec6").unwrap()
}

pub fn example1() -> Scenario {
    load("example1").unwrap()
}

pub fn fig3a() -> Scenario {
    load("fig3a").unwrap()
}

pub fn fig4a() -> Scenario {
    load("fig4a").unwrap()
}

pub fn fig4b() -> Scenario {
    load("fig4b").unwrap()
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub objectives: ObjectiveVector,
    pub shares: ShareAssignment,
}

/// Two problems on the triangle with different objectives and shares but
/// identical obfuscated functions.
#[derive(Clone, Debug)]
pub struct Table2 {
    pub topology: Topology,
    pub problem1: Problem,
    pub problem2: Problem,
}

fn problem(s: Scenario) -> Problem {
    let ShareSource::Explicit(shares) = s.shares else {
        unreachable!("table scenarios carry explicit shares")
    };
    Problem { objectives: s.objectives, shares }
}

pub fn table2() -> Table2 {
    let p1 = sec6();
    let topology = p1.topology.clone();
    Table2 { topology, problem1: problem(p1), problem2: problem(load("table2_problem2").unwrap()) }
}

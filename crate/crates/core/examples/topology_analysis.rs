//! Connectivity, admissibility and privacy-loss findings for the shipped graphs.

use std::collections::BTreeSet;

use privshare::{scenarios, Topology};

fn describe(name: &str, g: &Topology, coalition: &BTreeSet<usize>) {
    let kappa = g.vertex_connectivity().ok();
    let lambda = g.edge_connectivity().ok();
    println!("{name}: {} nodes, {} edges", g.node_count(), g.edges().len());
    println!("  kappa {kappa:?}, lambda {lambda:?}, delta {}", g.min_degree());
    let f = coalition.len();
    println!("  {f}-admissible: {}", g.is_f_admissible(f).unwrap_or(false));
    let report = g.detect_privacy_failures(coalition);
    if report.is_empty() {
        println!("  coalition {coalition:?} exposes nobody");
    } else {
        println!("  coalition {coalition:?}: individual {:?}, groups {:?}", report.individual, report.groups);
    }
}

fn main() {
    describe("triangle", &Topology::complete(3), &BTreeSet::from([0]));
    for s in [scenarios::fig3a(), scenarios::fig4a(), scenarios::fig4b()] {
        describe(&s.name, &s.topology, &s.coalition);
    }
    let g = scenarios::fig3a().topology;
    let good = g.good_nodes(&BTreeSet::from([5, 6]));
    let tree = g.delete_adversary_edges(&BTreeSet::from([5, 6])).spanning_tree(&good);
    println!("fig3a good-agent spanning tree: {tree:?}");
}

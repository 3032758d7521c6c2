//! Two different problems, one execution: every recorded iterate matches bit for bit.

use privshare::privacy::{end_to_end_indistinguishability, with_problem};
use privshare::{run, scenarios};

fn main() -> privshare::Result<()> {
    let t = scenarios::table2();
    let base = scenarios::sec6();
    let a = with_problem(&base, t.problem1.objectives.clone(), t.problem1.shares.clone());
    let b = with_problem(&base, t.problem2.objectives.clone(), t.problem2.shares.clone());
    for i in 0..3 {
        println!("agent {}: {:<10} vs {}", i + 1, a.objectives[i], b.objectives[i]);
    }
    println!("identical executions: {}", end_to_end_indistinguishability(&a, &b)?);
    let x = run(&a)?.trace;
    println!("final iterates: {:?}", x.final_state());
    Ok(())
}

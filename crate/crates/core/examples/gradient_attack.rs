//! A passive agent inverts its neighbours' gradient steps.
//! Without obfuscation it learns their objectives; with it, only the obfuscated ones.

use privshare::adversary::{attack, AdversaryView, AttackReport};
use privshare::{run, scenarios, Scenario};

fn report(s: &Scenario) -> privshare::Result<()> {
    let output = run(s)?;
    let view = AdversaryView::observe(s, &output);
    let outcome = attack(&view, s.attack_degree());
    let report = AttackReport::judge(&view, &outcome, &s.objectives, &output.obfuscated);
    println!("{} (coalition {:?}):", s.name, report.coalition);
    for a in &report.agents {
        let recovered = a.objective.as_ref().map(|p| p.to_string()).unwrap_or_default();
        println!("  agent {}: {:?}", a.agent, a.verdict);
        println!("    recovered  {recovered}");
        println!("    private    {}", s.objectives[a.agent]);
    }
    Ok(())
}

fn main() -> privshare::Result<()> {
    report(&scenarios::example1())?;
    report(&scenarios::sec6())
}

//! Obfuscated and plain distributed projected gradient descent on the three-agent problem.

use privshare::{run, scenarios};

fn main() -> privshare::Result<()> {
    let s = scenarios::sec6();
    let aggregate = s.objectives.aggregate();
    let obfuscated = run(&s)?.trace.metrics(&aggregate);
    let plain = run(&s.without_obfuscation())?.trace.metrics(&aggregate);
    println!("{:>5} {:>12} {:>12} {:>12} {:>12}", "k", "mean", "max dev", "eta^2", "plain mean");
    for k in [0, 1, 10, 50, 100, 200, 300, 400, 500] {
        let (m, p) = (&obfuscated[k], &plain[k]);
        println!("{k:>5} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}", m.mean, m.max_dev, m.rms_sq, p.mean);
    }
    Ok(())
}

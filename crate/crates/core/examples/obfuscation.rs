//! Function sharing on the triangle: every agent's function changes, the sum does not.

use privshare::obfuscation::{check_invariant, generate_shares, obfuscate_matrix};
use privshare::{obfuscate, scenarios, Topology};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let t = scenarios::table2();
    let f = &t.problem1.objectives;
    let f_hat = obfuscate(f, &t.problem1.shares, &t.topology);
    for (i, (a, b)) in f.iter().zip(f_hat.iter()).enumerate() {
        println!("agent {}: f = {a:<16} f_hat = {b}", i + 1);
    }
    println!("sum f     = {}", f.aggregate());
    println!("sum f_hat = {}", f_hat.aggregate());
    println!("invariant holds: {}", check_invariant(f, &f_hat));
    println!("matrix form agrees: {}", obfuscate_matrix(f, &t.problem1.shares, &t.topology) == f_hat);

    let g = Topology::complete(4);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let shares = generate_shares(&g, 3, 5.0, &mut rng);
    println!("K4 with random cubic shares: {} directed links", shares.len());
}

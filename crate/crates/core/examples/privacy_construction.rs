//! Builds shares under which a different split of the same aggregate looks identical to the coalition.

use privshare::privacy::{construct_alternative_shares, sample_alternative_objectives, verify_indistinguishable};
use privshare::scenarios;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> privshare::Result<()> {
    let s = scenarios::fig3a();
    let shares = s.resolve_shares();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let alt = sample_alternative_objectives(&s.objectives, &s.coalition, &mut rng, 2);
    for (i, (a, b)) in s.objectives.iter().zip(alt.iter()).enumerate() {
        println!("agent {i}: real {a:<20} alternative {b}");
    }
    let c = construct_alternative_shares(&s.objectives, &shares, &alt, &s.topology, &s.coalition, &mut rng)?;
    println!("tree links solved: {:?}", c.tree_links);
    println!("free links drawn: {}", c.free_links.len());
    println!("residual {:.1e}, smallest singular value {:?}", c.residual, c.min_singular_value);
    let ok = verify_indistinguishable(&s.objectives, &shares, &alt, &c.shares, &s.topology, &s.coalition);
    println!("coalition observations identical: {ok}");

    let bad = scenarios::fig4b();
    let alt = sample_alternative_objectives(&bad.objectives, &bad.coalition, &mut rng, 2);
    let err = construct_alternative_shares(
        &bad.objectives,
        &bad.resolve_shares(),
        &alt,
        &bad.topology,
        &bad.coalition,
        &mut rng,
    )
    .unwrap_err();
    println!("fig4b: {err}");
    Ok(())
}

//! Polynomial arithmetic, calculus and least-squares fitting.

use privshare::Polynomial;

fn main() -> privshare::Result<()> {
    let f = Polynomial::new(vec![4.0, -4.0, 1.0]); // (x - 2)^2
    let g = Polynomial::new(vec![0.0, 1.0, 0.0, 1.0]);
    println!("f = {f}");
    println!("g = {g}");
    println!("f + g = {}", &f + &g);
    println!("f - g = {}", &f - &g);
    println!("f'(x) = {}", f.derivative());
    println!("antiderivative of f' = {}", f.derivative().antiderivative());
    println!("f(3) = {}", f.evaluate(3.0));

    // Recover (x - 2)^2 + (x - 2)^4 from noiseless samples.
    let h = Polynomial::new(vec![20.0, -36.0, 25.0, -8.0, 1.0]);
    let samples: Vec<(f64, f64)> = (0..25)
        .map(|i| {
            let x = -3.0 + 0.25 * i as f64;
            (x, h.evaluate(x))
        })
        .collect();
    let fit = Polynomial::least_squares_fit(&samples, 4)?;
    println!("fit of degree 4: {fit}");
    println!("max coefficient error: {:.2e}", fit.max_coeff_distance(&h));
    Ok(())
}

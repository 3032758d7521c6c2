//! Dense univariate polynomials with real coefficients.
//!
//! Bounded-degree polynomials under addition form the admissible function
//! family: private objectives, obfuscated objectives and the shared random
//! functions all live here. Coefficients are stored lowest degree first and
//! trailing zeros are always stripped, so the zero polynomial is the empty
//! vector and structural equality is exact coefficient equality.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spacing of the grid that randomly drawn coefficients are snapped to.
///
/// Sums and differences of grid values with magnitude below ~2^20 are exact
/// in `f64`, which keeps aggregate invariance bit-exact.
pub const COEFF_LATTICE: f64 = 1.0 / 4_294_967_296.0;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for Polynomial {
    fn from(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `c * x^power`.
    pub fn monomial(c: f64, power: usize) -> Self {
        let mut coeffs = vec![0.0; power + 1];
        coeffs[power] = c;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^i`, zero beyond the stored range.
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the polynomial; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Horner evaluation.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    /// Formal antiderivative with the integration constant fixed to zero.
    pub fn antiderivative(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(0.0);
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| c / (i + 1) as f64),
        );
        Self::new(coeffs)
    }

    /// The same polynomial with its constant term dropped.
    pub fn without_constant(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        if let Some(c0) = coeffs.first_mut() {
            *c0 = 0.0;
        }
        Self::new(coeffs)
    }

    /// Largest absolute coefficient difference.
    pub fn max_coeff_distance(&self, other: &Self) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|i| (self.coeff(i) - other.coeff(i)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest coefficient difference ignoring the constant term.
    pub fn max_coeff_distance_up_to_constant(&self, other: &Self) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (1..n)
            .map(|i| (self.coeff(i) - other.coeff(i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_coeff_distance(other) <= tol
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    /// Least-squares polynomial of at most `degree` through `points`.
    ///
    /// Solves the Vandermonde system with a Householder QR factorization.
    /// Fails with [`Error::DegenerateFit`] when there are fewer points than
    /// unknowns or the triangular factor is numerically singular.
    pub fn least_squares_fit(points: &[(f64, f64)], degree: usize) -> Result<Self> {
        let cols = degree + 1;
        if points.len() < cols {
            return Err(Error::DegenerateFit(format!(
                "{} points cannot determine a degree-{degree} polynomial",
                points.len()
            )));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::DegenerateFit("non-finite sample".into()));
        }
        let vandermonde = DMatrix::from_fn(points.len(), cols, |r, c| points[r].0.powi(c as i32));
        let rhs = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));

        let qr = vandermonde.qr();
        let r = qr.r();
        let diag_max = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        let diag_min = (0..cols).map(|i| r[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        if diag_max == 0.0 || diag_min <= diag_max * 1e-12 {
            return Err(Error::DegenerateFit(format!(
                "rank-deficient Vandermonde system (|R_ii| range {diag_min:e}..{diag_max:e})"
            )));
        }
        let qt_b = qr.q().transpose() * rhs;
        let solution = r
            .solve_upper_triangular(&qt_b)
            .ok_or_else(|| Error::DegenerateFit("singular triangular factor".into()))?;
        Ok(Self::new(solution.iter().copied().collect()))
    }

    /// Random polynomial with coefficients uniform in `[-coeff_bound, coeff_bound]`,
    /// snapped to [`COEFF_LATTICE`].
    pub fn random<R: Rng + ?Sized>(
        degree: usize,
        coeff_bound: f64,
        zero_constant: bool,
        rng: &mut R,
    ) -> Self {
        assert!(coeff_bound > 0.0, "coeff_bound must be positive");
        let coeffs = (0..=degree)
            .map(|i| {
                let c = rng.gen_range(-coeff_bound..=coeff_bound);
                if i == 0 && zero_constant {
                    0.0
                } else {
                    snap_to_lattice(c)
                }
            })
            .collect();
        Self::new(coeffs)
    }
}

pub fn snap_to_lattice(c: f64) -> f64 {
    (c / COEFF_LATTICE).round() * COEFF_LATTICE
}

impl Add<&Polynomial> for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub<&Polynomial> for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul<f64> for &Polynomial {
    type Output = Polynomial;

    fn mul(self, k: f64) -> Polynomial {
        self.scale(k)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: &Polynomial) -> Polynomial {
                (&self).$m(rhs)
            }
        }
        impl $tr<Polynomial> for &Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);

impl Neg for Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        -&self
    }
}

impl AddAssign<&Polynomial> for Polynomial {
    fn add_assign(&mut self, rhs: &Polynomial) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&Polynomial> for Polynomial {
    fn sub_assign(&mut self, rhs: &Polynomial) {
        *self = &*self - rhs;
    }
}

impl Sum for Polynomial {
    fn sum<I: Iterator<Item = Polynomial>>(iter: I) -> Self {
        iter.fold(Polynomial::zero(), |acc, p| acc + p)
    }
}

impl<'a> Sum<&'a Polynomial> for Polynomial {
    fn sum<I: Iterator<Item = &'a Polynomial>>(iter: I) -> Self {
        iter.fold(Polynomial::zero(), |acc, p| acc + p)
    }
}

impl fmt::Display for Polynomial {
    /// Coefficients are shown to four decimals; terms that round to zero are dropped.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            let magnitude = trim_float(c.abs());
            if magnitude == "0" {
                continue;
            }
            match (out.is_empty(), c < 0.0) {
                (true, true) => out.push('-'),
                (true, false) => {}
                (false, true) => out.push_str(" - "),
                (false, false) => out.push_str(" + "),
            }
            if i == 0 || magnitude != "1" {
                out.push_str(&magnitude);
            }
            match i {
                0 => {}
                1 => out.push('x'),
                _ => out.push_str(&format!("x^{i}")),
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        f.pad(&out)
    }
}

fn trim_float(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(c: &[f64]) -> Polynomial {
        Polynomial::new(c.to_vec())
    }

    #[test]
    fn add_examples() {
        assert_eq!(
            p(&[0., 0., 1.]) + p(&[0., 0., 1., 0., 1.]),
            p(&[0., 0., 2., 0., 1.])
        );
        let q = p(&[3., -1., 2.]);
        assert_eq!(&q + &Polynomial::zero(), q);
        let f2 = p(&[20., -36., 25., -8., 1.]);
        let f3 = p(&[81., -108., 54., -12., 1.]);
        assert_eq!(f2 + f3, p(&[101., -144., 79., -20., 2.]));
    }

    #[test]
    fn trailing_zeros_are_stripped() {
        let q = p(&[1., 2., 0., 0.]);
        assert_eq!(q.coeffs(), &[1., 2.]);
        assert_eq!(q.degree(), 1);
        assert_eq!(p(&[0., 0.]), Polynomial::zero());
        assert_eq!(Polynomial::zero().degree(), 0);
        // x^4 cancels leaving a cubic
        assert_eq!((p(&[0., 0., 0., 1., 1.]) - p(&[0., 0., 0., 0., 1.])).degree(), 3);
    }

    #[test]
    fn negate_examples() {
        assert_eq!(-p(&[0., 0., 1.]), p(&[0., 0., -1.]));
        assert_eq!(-Polynomial::zero(), Polynomial::zero());
        assert_eq!(-p(&[0., 3., 9., 1., 2.]), p(&[0., -3., -9., -1., -2.]));
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(p(&[1., -2., 1.]).evaluate(1.0), 0.0);
        assert_eq!(p(&[7., 3., -2.]).evaluate(0.0), 7.0);
        assert_eq!(p(&[0., 0., 2., 0., 2.]).evaluate(1.0), 4.0);
        assert_eq!(Polynomial::zero().evaluate(3.5), 0.0);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(p(&[0., 0., 1., 0., 1.]).derivative(), p(&[0., 2., 0., 4.]));
        assert_eq!(Polynomial::constant(5.0).derivative(), Polynomial::zero());
        assert_eq!(
            p(&[81., -108., 54., -12., 1.]).derivative(),
            p(&[-108., 108., -36., 4.])
        );
    }

    #[test]
    fn antiderivative_examples() {
        assert_eq!(
            p(&[-108., 108., -36., 4.]).antiderivative(),
            p(&[0., -108., 54., -12., 1.])
        );
        assert_eq!(Polynomial::zero().antiderivative(), Polynomial::zero());
    }

    #[test]
    fn fit_exact_samples() {
        let g = p(&[0., 2., 0., 4.]);
        let pts: Vec<_> = [-1.0, -0.5, 0.2, 0.9, 1.7]
            .iter()
            .map(|&x| (x, g.evaluate(x)))
            .collect();
        let fit = Polynomial::least_squares_fit(&pts, 3).unwrap();
        assert!(fit.approx_eq(&g, 1e-9), "{fit:?}");
    }

    #[test]
    fn fit_zero_data() {
        let pts: Vec<_> = (0..6).map(|i| (i as f64, 0.0)).collect();
        let fit = Polynomial::least_squares_fit(&pts, 4).unwrap();
        assert!(fit.approx_eq(&Polynomial::zero(), 1e-12));
    }

    #[test]
    fn fit_noisy_gradient() {
        // gradient of x^4 - 8x^3 + 25x^2 - 36x + 20
        let g = p(&[-36., 50., -24., 4.]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<_> = (0..60)
            .map(|i| {
                let x = 0.5 + 3.5 * i as f64 / 59.0;
                (x, g.evaluate(x) + rng.gen_range(-1e-6..=1e-6))
            })
            .collect();
        let fit = Polynomial::least_squares_fit(&pts, 3).unwrap();
        assert!(fit.approx_eq(&g, 1e-3), "{fit:?}");
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        let same_x = vec![(1.0, 2.0), (1.0, 3.0), (1.0, 4.0)];
        assert!(matches!(
            Polynomial::least_squares_fit(&same_x, 2),
            Err(Error::DegenerateFit(_))
        ));
        assert!(matches!(
            Polynomial::least_squares_fit(&[(0.0, 1.0)], 1),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn random_is_deterministic_and_respects_flags() {
        let a = Polynomial::random(4, 10.0, true, &mut ChaCha8Rng::seed_from_u64(3));
        let b = Polynomial::random(4, 10.0, true, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert_eq!(a.evaluate(0.0), 0.0);
        assert!(a.degree() <= 4);
        assert!(a.coeffs().iter().all(|c| c.abs() <= 10.0));
    }

    #[test]
    fn random_draws_are_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws: Vec<_> = (0..100)
            .map(|_| Polynomial::random(4, 5.0, false, &mut rng))
            .collect();
        for i in 0..draws.len() {
            for j in i + 1..draws.len() {
                assert_ne!(draws[i], draws[j]);
            }
        }
    }

    #[test]
    fn json_is_coefficient_array() {
        let f2 = p(&[0., 0., 1., 0., 1.]);
        assert_eq!(serde_json::to_string(&f2).unwrap(), "[0.0,0.0,1.0,0.0,1.0]");
        let back: Polynomial = serde_json::from_str("[0,0,1,0,1,0]").unwrap();
        assert_eq!(back, f2);
    }

    #[test]
    fn display_is_readable() {
        assert_eq!(p(&[101., -144., 79., -20., 2.]).to_string(), "2x^4 - 20x^3 + 79x^2 - 144x + 101");
        assert_eq!(p(&[0., -1.]).to_string(), "-x");
        assert_eq!(Polynomial::zero().to_string(), "0");
    }

    fn arb_poly() -> impl Strategy<Value = Polynomial> {
        (any::<u64>(), 0usize..=6).prop_map(|(seed, deg)| {
            Polynomial::random(deg, 100.0, false, &mut ChaCha8Rng::seed_from_u64(seed))
        })
    }

    proptest! {
        #[test]
        fn derivative_is_linear(a in arb_poly(), b in arb_poly()) {
            let lhs = (&a + &b).derivative();
            let rhs = a.derivative() + b.derivative();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn antiderivative_inverts_derivative(a in arb_poly()) {
            prop_assert!(a.antiderivative().derivative().approx_eq(&a, 1e-9));
            prop_assert!(a.derivative().antiderivative().approx_eq(&a.without_constant(), 1e-9));
        }

        #[test]
        fn fit_reproduces_source(a in arb_poly(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let deg = a.degree();
            let mut xs: Vec<f64> = (0..deg + 4).map(|i| -1.0 + 2.0 * i as f64 / (deg + 3) as f64).collect();
            for x in &mut xs {
                *x += rng.gen_range(-0.01..0.01);
            }
            let pts: Vec<_> = xs.iter().map(|&x| (x, a.evaluate(x))).collect();
            let fit = Polynomial::least_squares_fit(&pts, deg).unwrap();
            prop_assert!(fit.approx_eq(&a, 1e-9), "{:?} vs {:?}", fit, a);
        }
    }
}

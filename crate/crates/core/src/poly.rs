//! Dense univariate polynomials over the rationals: interpolation, evaluation
//! and division.

use num_traits::{One, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    /// Coefficients from the constant term up; no trailing zeros.
    coeffs: Vec<Rational>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x + c)
    }

    /// The unique polynomial of degree `< points.len()` through `points`
    /// (Newton divided differences). Abscissae must be distinct.
    pub fn interpolate(points: &[(Rational, Rational)]) -> Self {
        let n = points.len();
        let xs: Vec<&Rational> = points.iter().map(|(x, _)| x).collect();
        let mut dd: Vec<Rational> = points.iter().map(|(_, y)| y.clone()).collect();
        for level in 1..n {
            for i in (level..n).rev() {
                dd[i] = (&dd[i] - &dd[i - 1]) / (xs[i] - xs[i - level]);
            }
        }
        // Horner-style expansion of Σ dd[i] ∏_{j<i} (x − x_j).
        let mut acc = Poly::zero();
        for i in (0..n).rev() {
            acc = acc.mul_linear(xs[i]);
            acc = acc.add_constant(&dd[i]);
        }
        acc
    }

    /// `self · (x − root)`.
    fn mul_linear(&self, root: &Rational) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i + 1] += c;
            out[i] -= c * root;
        }
        Self::new(out)
    }

    fn add_constant(&self, c: &Rational) -> Self {
        let mut coeffs = self.coeffs.clone();
        if coeffs.is_empty() {
            coeffs.push(Rational::zero());
        }
        coeffs[0] += c;
        Self::new(coeffs)
    }

    /// `(quotient, remainder)`. Panics on division by zero.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let d = divisor.degree().expect("division by the zero polynomial");
        let lead = &divisor.coeffs[d];
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Rational::zero(); self.coeffs.len().saturating_sub(d)];
        while rem.len() > d && !rem.is_empty() {
            let shift = rem.len() - 1 - d;
            let factor = rem.last().unwrap() / lead;
            for (i, c) in divisor.coeffs.iter().enumerate() {
                rem[shift + i] -= &factor * c;
            }
            quot[shift] = factor;
            rem.pop();
            while rem.last().is_some_and(Zero::is_zero) {
                rem.pop();
            }
        }
        (Self::new(quot), Self::new(rem))
    }

    pub fn divides(&self, other: &Self) -> bool {
        !self.is_zero() && other.div_rem(self).1.is_zero()
    }

    pub fn one() -> Self {
        Self::new(vec![Rational::one()])
    }
}

/// Result of fitting samples of a function along a line by a polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolynomialFit {
    pub poly: Poly,
    /// Whether the fit reproduces every held-out sample exactly.
    pub confirmed: bool,
}

/// Interpolates on all but the last `holdout` points and checks the rest.
pub fn fit_polynomial(points: &[(Rational, Rational)], holdout: usize) -> PolynomialFit {
    let split = points.len().saturating_sub(holdout);
    let poly = Poly::interpolate(&points[..split]);
    let confirmed = points[split..].iter().all(|(x, y)| &poly.eval(x) == y);
    PolynomialFit { poly, confirmed }
}

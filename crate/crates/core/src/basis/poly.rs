//! Exact polynomial algebra in barycentric coordinates.
//!
//! Polynomials are stored as maps from exponent vectors over the barycentric
//! variables to coefficients.  The point of this representation is the closed
//! integration formula for monomials over a simplex,
//!
//! ```text
//! integral over S of  l_0^a0 * ... * l_n^an  =  n! * |S| * (a0! * ... * an!) / (|a| + n)!
//! ```
//!
//! which makes mass matrices and integral checks exact up to rounding, with
//! no quadrature involved.

use std::collections::BTreeMap;

/// A polynomial in `nvars` barycentric variables.
#[derive(Clone, Debug, PartialEq)]
pub struct BaryPoly {
    pub nvars: usize,
    /// Exponent vector (length `nvars`) to coefficient.
    pub terms: BTreeMap<Vec<usize>, f64>,
}

impl BaryPoly {
    pub fn zero(nvars: usize) -> Self {
        BaryPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut poly = Self::zero(nvars);
        if c != 0.0 {
            poly.terms.insert(vec![0; nvars], c);
        }
        poly
    }

    /// The variable `l_i` as a polynomial.
    pub fn variable(nvars: usize, i: usize) -> Self {
        let mut exp = vec![0; nvars];
        exp[i] = 1;
        let mut poly = Self::zero(nvars);
        poly.terms.insert(exp, 1.0);
        poly
    }

    pub fn scale(mut self, c: f64) -> Self {
        for coeff in self.terms.values_mut() {
            *coeff *= c;
        }
        self
    }

    pub fn add(mut self, other: &BaryPoly) -> Self {
        for (exp, c) in &other.terms {
            *self.terms.entry(exp.clone()).or_insert(0.0) += c;
        }
        self
    }

    pub fn mul(&self, other: &BaryPoly) -> Self {
        let mut result = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exp: Vec<usize> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *result.terms.entry(exp).or_insert(0.0) += ca * cb;
            }
        }
        result
    }

    /// Partial derivative with respect to the barycentric variable `var`.
    pub fn derivative(&self, var: usize) -> Self {
        let mut result = Self::zero(self.nvars);
        for (exp, c) in &self.terms {
            if exp[var] == 0 {
                continue;
            }
            let mut lower = exp.clone();
            lower[var] -= 1;
            *result.terms.entry(lower).or_insert(0.0) += c * exp[var] as f64;
        }
        result
    }

    pub fn eval(&self, lambda: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(exp, c)| {
                c * exp
                    .iter()
                    .zip(lambda)
                    .map(|(&e, &l)| l.powi(e as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// Total degree of the polynomial.
    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|exp| exp.iter().sum())
            .max()
            .unwrap_or(0)
    }

    /// Exact integral over an `n`-simplex of the given measure, where
    /// `n = nvars - 1`, by the factorial formula for barycentric monomials.
    pub fn integral(&self, measure: f64) -> f64 {
        let n = self.nvars - 1;
        self.terms
            .iter()
            .map(|(exp, c)| {
                let total: usize = exp.iter().sum();
                let num: f64 = exp.iter().map(|&e| factorial(e)).product();
                c * factorial(n) * measure * num / factorial(total + n)
            })
            .sum()
    }

    /// Expands the Lagrange basis polynomial for multi-index `alpha` with
    /// `|alpha| = p`:
    ///
    /// ```text
    /// L_alpha(l) = prod over i, r < alpha_i of (p*l_i - r) / (alpha_i - r)
    /// ```
    pub fn lagrange(alpha: &[usize], p: usize) -> Self {
        let nvars = alpha.len();
        let mut poly = Self::constant(nvars, 1.0);
        for (i, &ai) in alpha.iter().enumerate() {
            for r in 0..ai {
                let factor = Self::variable(nvars, i)
                    .scale(p as f64)
                    .add(&Self::constant(nvars, -(r as f64)))
                    .scale(1.0 / (ai - r) as f64);
                poly = poly.mul(&factor);
            }
        }
        poly
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

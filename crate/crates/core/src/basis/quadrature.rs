//! Quadrature on simplices of any dimension.
//!
//! Rules are built from 1-D Gauss-Legendre nodes through the collapsed-cube
//! (Duffy) map onto the simplex.  In direction `j` (1-based) the transformed
//! integrand of a degree `D` polynomial has degree at most `D + n - j`, so a
//! single Gauss order `m >= (D + n) / 2` in every direction gives a rule that
//! is polynomial-exact of degree `D`.  Points are stored in barycentric
//! coordinates and weights are normalized to sum to one, so an integral over
//! a simplex `S` is `measure(S) * sum of w_q * f(point_q)`.

use serde::Serialize;

/// Gauss-Legendre nodes and weights on `[0, 1]`, weights summing to one.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (x + 1.0);
        weights[i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial `P_m` at `x`.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A quadrature rule on the reference `n`-simplex in barycentric form.
#[derive(Clone, Debug, Serialize)]
pub struct QuadratureRule {
    /// Simplex dimension.
    pub n: usize,
    /// Guaranteed polynomial exactness degree.
    pub degree: usize,
    /// Barycentric coordinates, `n + 1` entries each.
    pub points: Vec<Vec<f64>>,
    /// Weights summing to one.
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Builds a rule of polynomial exactness `degree` on the `n`-simplex.
    pub fn on_simplex(n: usize, degree: usize) -> Self {
        assert!(n >= 1, "quadrature needs a positive-dimensional simplex");
        let m = ((degree + n) as f64 / 2.0).ceil() as usize;
        let m = m.max(1);
        let (nodes, wts) = gauss_legendre(m);

        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut index = vec![0usize; n];
        loop {
            let mut lambda = vec![0.0; n + 1];
            let mut weight = 1.0;
            let mut remaining = 1.0;
            for (j, &ij) in index.iter().enumerate() {
                let u = nodes[ij];
                lambda[j + 1] = u * remaining;
                weight *= wts[ij] * (1.0 - u).powi((n - j - 1) as i32);
                remaining *= 1.0 - u;
            }
            lambda[0] = remaining;
            points.push(lambda);
            weights.push(weight);

            let mut j = 0;
            loop {
                if j == n {
                    let factorial_n: f64 = (1..=n).map(|k| k as f64).product();
                    let total: f64 = weights.iter().sum();
                    for w in &mut weights {
                        *w /= total;
                    }
                    debug_assert!((total * factorial_n - 1.0).abs() < 1e-9);
                    return QuadratureRule {
                        n,
                        degree,
                        points,
                        weights,
                    };
                }
                index[j] += 1;
                if index[j] < m {
                    break;
                }
                index[j] = 0;
                j += 1;
            }
        }
    }

    /// Integrates `f` given in barycentric coordinates over a simplex of the
    /// given measure.
    pub fn integrate(&self, measure: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        measure
            * self
                .points
                .iter()
                .zip(&self.weights)
                .map(|(lambda, w)| w * f(lambda))
                .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::multi_indices;
    use crate::basis::poly::BaryPoly;

    #[test]
    fn gauss_nodes_integrate_univariate_monomials() {
        for m in 1..=8usize {
            let (nodes, weights) = gauss_legendre(m);
            for k in 0..=(2 * m - 1) {
                let integral: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(x, w)| w * x.powi(k as i32))
                    .sum();
                let exact = 1.0 / (k as f64 + 1.0);
                assert!(
                    (integral - exact).abs() < 1e-13,
                    "m={m} k={k}: {integral} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn simplex_rules_are_polynomial_exact() {
        for n in 1..=3usize {
            for degree in [1usize, 3, 5, 7, 9] {
                let rule = QuadratureRule::on_simplex(n, degree);
                assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for alpha in monomials_up_to(n + 1, degree) {
                    let poly = monomial(&alpha);
                    let by_rule = rule.integrate(1.0, |lambda| poly.eval(lambda));
                    let exact = poly.integral(1.0);
                    assert!(
                        (by_rule - exact).abs() < 1e-12 * exact.abs().max(1.0),
                        "n={n} degree={degree} alpha={alpha:?}: {by_rule} vs {exact}"
                    );
                }
            }
        }
    }

    fn monomials_up_to(nvars: usize, degree: usize) -> Vec<Vec<usize>> {
        (0..=degree)
            .flat_map(|d| multi_indices(nvars, d))
            .collect()
    }

    fn monomial(alpha: &[usize]) -> BaryPoly {
        let mut poly = BaryPoly::constant(alpha.len(), 1.0);
        for (i, &e) in alpha.iter().enumerate() {
            for _ in 0..e {
                poly = poly.mul(&BaryPoly::variable(alpha.len(), i));
            }
        }
        poly
    }
}

//! Mass matrices and dual Lagrange polynomials on physical simplices.
//!
//! The dual polynomial of a node `x` on a simplex `S` is the polynomial
//! `psi` of degree `p` on `S` with
//!
//! ```text
//! integral over S of psi * P  =  P(x)   for every polynomial P of degree <= p,
//! ```
//!
//! obtained by solving the local mass system for the node's unit vector.
//! Integrating a dual polynomial against a general function extracts a
//! quasi-nodal value that is exact on polynomials, which is the building
//! block of every coefficient functional in this crate.

use thiserror::Error;

use crate::basis::poly::BaryPoly;
use crate::basis::quadrature::QuadratureRule;
use crate::basis::{lagrange_value, multi_indices, point_from_barycentric};
use crate::mesh::Mesh;

/// Local mass matrix `M_ab = integral of L_a * L_b` over the simplex spanned
/// by `vertices`, entries by the exact barycentric-monomial formula.
pub fn simplex_mass_matrix(mesh: &Mesh, vertices: &[usize], p: usize) -> Vec<Vec<f64>> {
    let measure = mesh.simplex_measure(vertices);
    let alphas = multi_indices(vertices.len(), p);
    let polys: Vec<BaryPoly> = alphas.iter().map(|a| BaryPoly::lagrange(a, p)).collect();
    let mut m = vec![vec![0.0; polys.len()]; polys.len()];
    for a in 0..polys.len() {
        for b in a..polys.len() {
            let entry = polys[a].mul(&polys[b]).integral(measure);
            m[a][b] = entry;
            m[b][a] = entry;
        }
    }
    m
}

/// A dual Lagrange polynomial on a physical simplex, stored by its nodal
/// values in the local lattice ordering.
#[derive(Clone, Debug)]
pub struct DualPolynomial {
    /// Sorted vertex ids of the simplex the dual lives on.
    pub simplex: Vec<usize>,
    pub p: usize,
    /// Coefficients against the Lagrange basis of the simplex.
    pub coeffs: Vec<f64>,
}

impl DualPolynomial {
    /// Evaluates the dual polynomial at a barycentric point of its simplex.
    pub fn eval(&self, lambda: &[f64]) -> f64 {
        multi_indices(self.simplex.len(), self.p)
            .iter()
            .zip(&self.coeffs)
            .map(|(alpha, c)| c * lagrange_value(alpha, self.p, lambda))
            .sum()
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum DualError {
    #[error("the node with multi-index {0:?} is not a lattice node of the simplex")]
    NodeNotOnSimplex(Vec<usize>),
    #[error("mass matrix of simplex {0:?} is singular")]
    SingularMass(Vec<usize>),
}

/// Computes the dual polynomial of the lattice node `alpha` on the simplex
/// spanned by `vertices` by solving the local mass system.
pub fn dual_polynomial(
    mesh: &Mesh,
    vertices: &[usize],
    alpha: &[usize],
    p: usize,
) -> Result<DualPolynomial, DualError> {
    let alphas = multi_indices(vertices.len(), p);
    let index = alphas
        .iter()
        .position(|a| a == alpha)
        .ok_or_else(|| DualError::NodeNotOnSimplex(alpha.to_vec()))?;
    let m = simplex_mass_matrix(mesh, vertices, p);
    let mut rhs = vec![0.0; alphas.len()];
    rhs[index] = 1.0;
    let coeffs =
        solve_dense(m, rhs).ok_or_else(|| DualError::SingularMass(vertices.to_vec()))?;
    Ok(DualPolynomial {
        simplex: vertices.to_vec(),
        p,
        coeffs,
    })
}

/// Integrates `dual * f` over the dual's simplex with the given rule.  The
/// callback receives physical coordinates.
pub fn integrate_dual_against(
    mesh: &Mesh,
    dual: &DualPolynomial,
    rule: &QuadratureRule,
    mut f: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let measure = mesh.simplex_measure(&dual.simplex);
    rule.integrate(measure, |lambda| {
        let x = point_from_barycentric(mesh, &dual.simplex, lambda);
        dual.eval(lambda) * f(&x)
    })
}

/// Solves a dense system by Gaussian elimination with partial pivoting.
/// Returns `None` on a zero pivot.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(pivot, col);
        b.swap(pivot, col);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut sum = b[col];
        for k in col + 1..n {
            sum -= a[col][k] * b[k];
        }
        b[col] = sum / a[col][col];
    }
    Some(b)
}

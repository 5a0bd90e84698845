//! Broken Sobolev norms, errors against reference fields, and rate tables.
//!
//! All norms are broken: integrals run element by element, so functions may
//! jump across the crack without affecting the definition.  Discrete norms
//! come in two independent routes, direct quadrature and exact local
//! matrices, which cross-check each other.

use thiserror::Error;

use crate::basis::poly::BaryPoly;
use crate::basis::quadrature::QuadratureRule;
use crate::basis::{multi_indices, point_from_barycentric, simplex_mass_matrix, AffineMap};
use crate::crack::CrackMesh;
use crate::interpolant::{two_sided_trace, DiscreteFunction, DofTable, SideAwareFunction};
use crate::mesh::{Mesh, MeshTopology};

/// A reference field with an element-contextual value and gradient, so
/// fields may jump across the crack.
pub trait ExactField {
    fn value(&self, x: &[f64], elem: usize) -> f64;
    fn gradient(&self, x: &[f64], elem: usize) -> Vec<f64>;
}

/// Views an exact field as a plain side-aware function.
pub fn field_function<F: ExactField>(f: &F) -> impl Fn(&[f64], usize) -> f64 + '_ {
    move |x, elem| f.value(x, elem)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrokenNorms {
    pub l2: f64,
    pub h1_semi: f64,
}

impl BrokenNorms {
    pub fn h1(&self) -> f64 {
        self.l2.hypot(self.h1_semi)
    }
}

fn accumulate(
    mesh: &Mesh,
    rule: &QuadratureRule,
    mut eval: impl FnMut(usize, &[f64], &[f64]) -> (f64, Vec<f64>),
) -> BrokenNorms {
    let mut l2_sq = 0.0;
    let mut h1_sq = 0.0;
    for (elem, simplex) in mesh.elements.iter().enumerate() {
        let measure = mesh.simplex_measure(&simplex.vertices);
        for (lambda, w) in rule.points.iter().zip(&rule.weights) {
            let x = point_from_barycentric(mesh, &simplex.vertices, lambda);
            let (v, g) = eval(elem, lambda, &x);
            l2_sq += measure * w * v * v;
            h1_sq += measure * w * g.iter().map(|c| c * c).sum::<f64>();
        }
    }
    BrokenNorms {
        l2: l2_sq.sqrt(),
        h1_semi: h1_sq.sqrt(),
    }
}

/// Broken norms of a discrete function by direct quadrature.
pub fn discrete_norms(
    mesh: &Mesh,
    table: &DofTable,
    maps: &[AffineMap],
    u: &DiscreteFunction,
    rule: &QuadratureRule,
) -> BrokenNorms {
    accumulate(mesh, rule, |elem, lambda, _| {
        (
            u.eval_on_element(table, elem, lambda),
            u.grad_on_element(table, &maps[elem], elem, lambda),
        )
    })
}

/// Broken norms of a reference field by quadrature.
pub fn field_norms(mesh: &Mesh, f: &impl ExactField, rule: &QuadratureRule) -> BrokenNorms {
    accumulate(mesh, rule, |elem, _, x| {
        (f.value(x, elem), f.gradient(x, elem))
    })
}

/// Broken errors between a discrete function and a reference field.
pub fn broken_error(
    mesh: &Mesh,
    table: &DofTable,
    maps: &[AffineMap],
    u: &DiscreteFunction,
    f: &impl ExactField,
    rule: &QuadratureRule,
) -> BrokenNorms {
    accumulate(mesh, rule, |elem, lambda, x| {
        let dv = u.eval_on_element(table, elem, lambda) - f.value(x, elem);
        let mut dg = u.grad_on_element(table, &maps[elem], elem, lambda);
        for (a, b) in dg.iter_mut().zip(f.gradient(x, elem)) {
            *a -= b;
        }
        (dv, dg)
    })
}

/// Exact local mass matrix of the degree-`p` basis on one element.
pub fn element_mass_matrix(mesh: &Mesh, elem: usize, p: usize) -> Vec<Vec<f64>> {
    simplex_mass_matrix(mesh, &mesh.elements[elem].vertices, p)
}

/// Exact local stiffness matrix of the degree-`p` basis on one element,
/// computed from barycentric derivatives and the element's gradient metric.
pub fn element_stiffness_matrix(mesh: &Mesh, elem: usize, p: usize) -> Vec<Vec<f64>> {
    let vertices = &mesh.elements[elem].vertices;
    let measure = mesh.simplex_measure(vertices);
    let map = AffineMap::new(mesh, elem);
    let nv = vertices.len();
    let metric: Vec<Vec<f64>> = (0..nv)
        .map(|i| {
            (0..nv)
                .map(|j| {
                    map.grad_lambda[i]
                        .iter()
                        .zip(&map.grad_lambda[j])
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect()
        })
        .collect();

    let alphas = multi_indices(nv, p);
    let partials: Vec<Vec<BaryPoly>> = alphas
        .iter()
        .map(|alpha| {
            let poly = BaryPoly::lagrange(alpha, p);
            (0..nv).map(|i| poly.derivative(i)).collect()
        })
        .collect();

    let mut matrix = vec![vec![0.0; alphas.len()]; alphas.len()];
    for a in 0..alphas.len() {
        for b in a..alphas.len() {
            let mut entry = 0.0;
            for i in 0..nv {
                for j in 0..nv {
                    if metric[i][j] == 0.0 {
                        continue;
                    }
                    entry += metric[i][j] * partials[a][i].mul(&partials[b][j]).integral(measure);
                }
            }
            matrix[a][b] = entry;
            matrix[b][a] = entry;
        }
    }
    matrix
}

/// Broken norms of a discrete function through exact local matrices.
pub fn quadratic_form_norms(mesh: &Mesh, table: &DofTable, u: &DiscreteFunction) -> BrokenNorms {
    let mut l2_sq = 0.0;
    let mut h1_sq = 0.0;
    for elem in 0..mesh.elements.len() {
        let dofs = &table.element_dofs[elem];
        let local: Vec<f64> = dofs.iter().map(|&d| u.coeffs[d]).collect();
        let mass = element_mass_matrix(mesh, elem, table.p);
        let stiff = element_stiffness_matrix(mesh, elem, table.p);
        for (a, &ca) in local.iter().enumerate() {
            for (b, &cb) in local.iter().enumerate() {
                l2_sq += ca * cb * mass[a][b];
                h1_sq += ca * cb * stiff[a][b];
            }
        }
    }
    BrokenNorms {
        l2: l2_sq.max(0.0).sqrt(),
        h1_semi: h1_sq.max(0.0).sqrt(),
    }
}

/// The L2 distance between the crack jumps of two side-aware functions.
pub fn face_l2_jump_error(
    mesh: &Mesh,
    topo: &MeshTopology,
    crack: &CrackMesh,
    rule: &QuadratureRule,
    a: &impl SideAwareFunction,
    b: &impl SideAwareFunction,
) -> f64 {
    let ta = two_sided_trace(mesh, topo, crack, rule, a);
    let tb = two_sided_trace(mesh, topo, crack, rule, b);
    let mut total = 0.0;
    for (fa, fb) in ta.iter().zip(&tb) {
        for ((ja, jb), w) in fa.jumps().iter().zip(fb.jumps()).zip(&fa.weights) {
            let d = ja - jb;
            total += w * d * d;
        }
    }
    total.sqrt()
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum RateError {
    #[error("rate extraction needs at least two levels, got {0}")]
    InsufficientLevels(usize),
    #[error("rate extraction needs positive mesh sizes and errors")]
    NonPositiveData,
}

/// Observed convergence orders of an error sequence against mesh size.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTable {
    pub hs: Vec<f64>,
    pub errors: Vec<f64>,
    /// Pairwise orders between consecutive levels, length one less.
    pub rates: Vec<f64>,
    /// Least-squares slope of log error against log h.
    pub slope: f64,
}

pub fn convergence_rates(hs: &[f64], errors: &[f64]) -> Result<RateTable, RateError> {
    if hs.len() != errors.len() || hs.len() < 2 {
        return Err(RateError::InsufficientLevels(hs.len().min(errors.len())));
    }
    if hs.iter().chain(errors).any(|&v| !(v > 0.0)) {
        return Err(RateError::NonPositiveData);
    }
    let rates = hs
        .windows(2)
        .zip(errors.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect();
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    Ok(RateTable {
        hs: hs.to_vec(),
        errors: errors.to_vec(),
        rates,
        slope: sxy / sxx,
    })
}

//! Galerkin solver for the Laplace-type problem with a prescribed crack jump.
//!
//! The discrete problem looks for `u_h` in the side-split space with
//! `u_h - lift` conforming and zero on the outer boundary, where `lift`
//! carries the prescribed jump (typically the interpolant of the jump data).
//! Since the correction is conforming, the jump of `u_h` equals the jump of
//! the lift exactly.  The reduced system is solved matrix-free by conjugate
//! gradients on the restriction of the split stiffness matrix.

use thiserror::Error;

use crate::basis::lagrange_gradient;
use crate::basis::quadrature::QuadratureRule;
use crate::basis::{point_from_barycentric, AffineMap};
use crate::interpolant::{
    apply_interpolant, DiscreteFunction, DofTable, InterpolantOperator, SideAwareFunction,
};
use crate::mesh::Mesh;

/// A symmetric positive definite diffusion matrix, evaluated pointwise with
/// element context so it may jump across the crack.
pub trait CoefficientField {
    fn matrix(&self, x: &[f64], elem: usize) -> Vec<Vec<f64>>;
}

/// The identity diffusion coefficient.
pub struct IdentityCoefficient;

impl CoefficientField for IdentityCoefficient {
    fn matrix(&self, x: &[f64], _: usize) -> Vec<Vec<f64>> {
        let d = x.len();
        (0..d)
            .map(|i| (0..d).map(|j| ((i == j) as usize) as f64).collect())
            .collect()
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("diffusion coefficient is not symmetric positive definite on element {0}")]
    NonSpdCoefficient(usize),
    #[error("conjugate gradients stalled after {iterations} iterations, residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from unsorted triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols: Vec<usize> = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut prev = None;
        for (r, c, v) in triplets {
            if prev == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                prev = Some((r, c));
            }
            row_ptr[r + 1] = cols.len();
        }
        for r in 0..n {
            row_ptr[r + 1] = row_ptr[r + 1].max(row_ptr[r]);
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut acc = 0.0;
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[idx] * x[self.cols[idx]];
            }
            y[r] = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// The bilinear form value `u^T A v`.
    pub fn energy_product(&self, u: &[f64], v: &[f64]) -> f64 {
        self.apply(v).iter().zip(u).map(|(av, w)| av * w).sum()
    }
}

fn check_spd(a: &[Vec<f64>], elem: usize) -> Result<(), SolveError> {
    let d = a.len();
    for i in 0..d {
        for j in (i + 1)..d {
            if (a[i][j] - a[j][i]).abs() > 1e-12 {
                return Err(SolveError::NonSpdCoefficient(elem));
            }
        }
    }
    // Leading principal minors, d <= 3.
    let det1 = a[0][0];
    if !(det1 > 0.0) {
        return Err(SolveError::NonSpdCoefficient(elem));
    }
    if d >= 2 {
        let det2 = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if !(det2 > 0.0) {
            return Err(SolveError::NonSpdCoefficient(elem));
        }
        if d >= 3 {
            let det3 = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
            if !(det3 > 0.0) {
                return Err(SolveError::NonSpdCoefficient(elem));
            }
        }
    }
    Ok(())
}

/// Assembles the stiffness matrix of the split space.
pub fn assemble_stiffness(
    mesh: &Mesh,
    table: &DofTable,
    maps: &[AffineMap],
    coeff: &impl CoefficientField,
    rule: &QuadratureRule,
) -> Result<CsrMatrix, SolveError> {
    let nloc = table.nodes.local_indices.len();
    let dim = mesh.dim;
    let mut triplets = Vec::with_capacity(mesh.elements.len() * nloc * nloc);
    for (elem, simplex) in mesh.elements.iter().enumerate() {
        let measure = mesh.simplex_measure(&simplex.vertices);
        let map = &maps[elem];
        let mut local = vec![vec![0.0; nloc]; nloc];
        let mut checked = false;
        for (lambda, w) in rule.points.iter().zip(&rule.weights) {
            let x = point_from_barycentric(mesh, &simplex.vertices, lambda);
            let a = coeff.matrix(&x, elem);
            if !checked {
                check_spd(&a, elem)?;
                checked = true;
            }
            // Physical gradients of the local basis at this point.
            let grads: Vec<Vec<f64>> = table
                .nodes
                .local_indices
                .iter()
                .map(|alpha| {
                    let partials = lagrange_gradient(alpha, table.p, lambda);
                    let mut g = vec![0.0; dim];
                    for (dl, gl) in partials.iter().zip(&map.grad_lambda) {
                        for (gc, lc) in g.iter_mut().zip(gl) {
                            *gc += dl * lc;
                        }
                    }
                    g
                })
                .collect();
            let flux: Vec<Vec<f64>> = grads
                .iter()
                .map(|g| {
                    (0..dim)
                        .map(|i| (0..dim).map(|j| a[i][j] * g[j]).sum())
                        .collect()
                })
                .collect();
            for b in 0..nloc {
                for c in b..nloc {
                    let v: f64 = flux[b].iter().zip(&grads[c]).map(|(f, g)| f * g).sum();
                    let contrib = measure * w * v;
                    local[b][c] += contrib;
                    if c != b {
                        local[c][b] += contrib;
                    }
                }
            }
        }
        let dofs = &table.element_dofs[elem];
        for b in 0..nloc {
            for c in 0..nloc {
                triplets.push((dofs[b], dofs[c], local[b][c]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(table.ndofs(), triplets))
}

/// Restriction onto the conforming subspace with zero boundary values: one
/// unknown per node off the outer boundary, shared by all its sides.
pub struct ConformingMap {
    /// Reduced index of each node, `None` on the boundary.
    pub node_to_reduced: Vec<Option<usize>>,
    pub reduced_len: usize,
}

pub fn conforming_zero_boundary_map(table: &DofTable) -> ConformingMap {
    let mut node_to_reduced = Vec::with_capacity(table.nodes.nodes.len());
    let mut next = 0usize;
    for node in 0..table.nodes.nodes.len() {
        if table.on_boundary[node] {
            node_to_reduced.push(None);
        } else {
            node_to_reduced.push(Some(next));
            next += 1;
        }
    }
    ConformingMap {
        node_to_reduced,
        reduced_len: next,
    }
}

impl ConformingMap {
    /// Prolongates reduced coefficients to the full split space.
    pub fn expand(&self, table: &DofTable, w: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; table.ndofs()];
        for (dof, &(node, _)) in table.dof_node_side.iter().enumerate() {
            if let Some(r) = self.node_to_reduced[node] {
                full[dof] = w[r];
            }
        }
        full
    }

    /// Restricts a full residual onto the reduced space (transpose of
    /// `expand`).
    pub fn reduce(&self, table: &DofTable, full: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.reduced_len];
        for (dof, &(node, _)) in table.dof_node_side.iter().enumerate() {
            if let Some(r) = self.node_to_reduced[node] {
                w[r] += full[dof];
            }
        }
        w
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final residual of the reduced system relative to the load norm.
    pub residual: f64,
    /// Energy `u^T A u` of the returned solution.
    pub energy: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients on the reduced operator.
fn pcg(
    apply: &impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    diag: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize, f64), SolveError> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let precond = |r: &[f64]| -> Vec<f64> { r.iter().zip(diag).map(|(v, d)| v / d).collect() };
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for iter in 0..max_iter {
        let rel = norm(&r) / bnorm;
        if rel <= tol {
            return Ok((x, iter, rel));
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(SolveError::NoConvergence {
                iterations: iter,
                residual: rel,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = precond(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm(&r) / bnorm;
    if rel <= tol {
        Ok((x, max_iter, rel))
    } else {
        Err(SolveError::NoConvergence {
            iterations: max_iter,
            residual: rel,
        })
    }
}

/// Solves for `u = lift + correction` with the correction conforming and
/// zero on the boundary, so that `a(u, v) = 0` for all such test functions.
pub fn solve_with_lift(
    table: &DofTable,
    matrix: &CsrMatrix,
    lift: &DiscreteFunction,
    tol: f64,
    max_iter: usize,
) -> Result<(DiscreteFunction, SolveReport), SolveError> {
    let map = conforming_zero_boundary_map(table);
    let b_full: Vec<f64> = matrix.apply(&lift.coeffs).iter().map(|v| -v).collect();
    let b = map.reduce(table, &b_full);

    // Exact diagonal of the reduced operator.
    let mut diag = vec![0.0; map.reduced_len];
    for (dof, &(node, _)) in table.dof_node_side.iter().enumerate() {
        let Some(r) = map.node_to_reduced[node] else {
            continue;
        };
        for idx in matrix.row_ptr[dof]..matrix.row_ptr[dof + 1] {
            let (cnode, _) = table.dof_node_side[matrix.cols[idx]];
            if map.node_to_reduced[cnode] == Some(r) {
                diag[r] += matrix.vals[idx];
            }
        }
    }

    let apply = |w: &[f64]| -> Vec<f64> {
        let full = map.expand(table, w);
        map.reduce(table, &matrix.apply(&full))
    };
    let (w, iterations, residual) = pcg(&apply, &b, &diag, tol, max_iter)?;

    let correction = map.expand(table, &w);
    let coeffs: Vec<f64> = lift
        .coeffs
        .iter()
        .zip(&correction)
        .map(|(a, b)| a + b)
        .collect();
    let energy = matrix.energy_product(&coeffs, &coeffs);
    Ok((
        DiscreteFunction { coeffs },
        SolveReport {
            iterations,
            residual,
            energy,
        },
    ))
}

/// Interpolates the jump data and solves the prescribed-jump problem.
pub fn solve_prescribed_jump(
    mesh: &Mesh,
    op: &InterpolantOperator,
    maps: &[AffineMap],
    g: &impl SideAwareFunction,
    coeff: &impl CoefficientField,
    tol: f64,
    max_iter: usize,
) -> Result<(DiscreteFunction, SolveReport), SolveError> {
    let rule = QuadratureRule::on_simplex(mesh.dim, 2 * op.table.p + 1);
    let matrix = assemble_stiffness(mesh, &op.table, maps, coeff, &rule)?;
    let lift = apply_interpolant(op, g);
    solve_with_lift(&op.table, &matrix, &lift, tol, max_iter)
}

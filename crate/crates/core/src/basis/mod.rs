//! Lagrange bases on simplices: node enumeration, basis evaluation, exact
//! polynomial algebra, quadrature, mass matrices and dual polynomials.

pub mod dual;
pub mod poly;
pub mod quadrature;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::mesh::{Mesh, Point};

pub use dual::{dual_polynomial, integrate_dual_against, simplex_mass_matrix, DualPolynomial};
pub use poly::BaryPoly;
pub use quadrature::QuadratureRule;

/// Barycentric multi-indices over `nvars` variables summing to `total`,
/// enumerated in decreasing lexicographic order.
///
/// For degree `p` on an `n`-simplex this enumerates the principal lattice:
/// the node of multi-index `alpha` sits at `sum of (alpha_i / p) * vertex_i`.
pub fn multi_indices(nvars: usize, total: usize) -> Vec<Vec<usize>> {
    if nvars == 1 {
        return vec![vec![total]];
    }
    let mut result = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in multi_indices(nvars - 1, total - first) {
            let mut alpha = Vec::with_capacity(nvars);
            alpha.push(first);
            alpha.append(&mut rest);
            result.push(alpha);
        }
    }
    result
}

/// Value of the Lagrange basis polynomial for `alpha` (`|alpha| = p`) at the
/// barycentric point `lambda`.
pub fn lagrange_value(alpha: &[usize], p: usize, lambda: &[f64]) -> f64 {
    let mut value = 1.0;
    for (i, &ai) in alpha.iter().enumerate() {
        for r in 0..ai {
            value *= (p as f64 * lambda[i] - r as f64) / (ai - r) as f64;
        }
    }
    value
}

/// Partial derivatives of the Lagrange basis polynomial with respect to each
/// barycentric coordinate.
pub fn lagrange_gradient(alpha: &[usize], p: usize, lambda: &[f64]) -> Vec<f64> {
    let groups: Vec<f64> = alpha
        .iter()
        .enumerate()
        .map(|(i, &ai)| {
            (0..ai)
                .map(|r| (p as f64 * lambda[i] - r as f64) / (ai - r) as f64)
                .product()
        })
        .collect();
    alpha
        .iter()
        .enumerate()
        .map(|(i, &ai)| {
            let others: f64 = groups
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, g)| g)
                .product();
            let mut own_derivative = 0.0;
            for s in 0..ai {
                let mut term = p as f64 / (ai - s) as f64;
                for r in 0..ai {
                    if r != s {
                        term *= (p as f64 * lambda[i] - r as f64) / (ai - r) as f64;
                    }
                }
                own_derivative += term;
            }
            others * own_derivative
        })
        .collect()
}

/// A global Lagrange node, identified by its carrier subsimplex and the
/// multi-index weights on it.
///
/// Two elements sharing the carrier produce the same key, so node identity is
/// purely combinatorial and never compares floating-point positions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LagrangeNode {
    /// Sorted vertex ids with positive weight.
    pub carrier: Vec<usize>,
    /// Multi-index entries matching `carrier`, each positive, summing to `p`.
    pub weights: Vec<usize>,
    /// Physical position, `sum of (weights_i / p) * vertex_i`.
    pub position: Point,
}

/// All Lagrange nodes of degree `p` on a mesh with the element-to-node map.
#[derive(Clone, Debug)]
pub struct NodeTable {
    pub p: usize,
    pub nodes: Vec<LagrangeNode>,
    /// Global node id per element and local lattice index.
    pub element_nodes: Vec<Vec<usize>>,
    /// The shared local lattice, `multi_indices(dim + 1, p)`.
    pub local_indices: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum BasisError {
    #[error("polynomial degree {0} is outside the supported range 1..=3")]
    UnsupportedDegree(usize),
}

/// Enumerates the degree-`p` Lagrange nodes of every element, deduplicating
/// shared nodes through their carrier keys.
pub fn lagrange_nodes(mesh: &Mesh, p: usize) -> Result<NodeTable, BasisError> {
    if !(1..=3).contains(&p) {
        return Err(BasisError::UnsupportedDegree(p));
    }
    let local_indices = multi_indices(mesh.dim + 1, p);
    let mut key_to_id: BTreeMap<(Vec<usize>, Vec<usize>), usize> = BTreeMap::new();
    let mut nodes: Vec<LagrangeNode> = Vec::new();
    let mut element_nodes = Vec::with_capacity(mesh.elements.len());
    for el in &mesh.elements {
        let mut ids = Vec::with_capacity(local_indices.len());
        for alpha in &local_indices {
            let mut carrier = Vec::new();
            let mut weights = Vec::new();
            for (i, &a) in alpha.iter().enumerate() {
                if a > 0 {
                    carrier.push(el.vertices[i]);
                    weights.push(a);
                }
            }
            let key = (carrier, weights);
            let id = match key_to_id.get(&key) {
                Some(&id) => id,
                None => {
                    let id = nodes.len();
                    let mut position = vec![0.0; mesh.dim];
                    for (&v, &w) in key.0.iter().zip(&key.1) {
                        for (x, c) in position.iter_mut().zip(mesh.vertex(v)) {
                            *x += w as f64 / p as f64 * c;
                        }
                    }
                    nodes.push(LagrangeNode {
                        carrier: key.0.clone(),
                        weights: key.1.clone(),
                        position,
                    });
                    key_to_id.insert(key, id);
                    id
                }
            };
            ids.push(id);
        }
        element_nodes.push(ids);
    }
    Ok(NodeTable {
        p,
        nodes,
        element_nodes,
        local_indices,
    })
}

impl NodeTable {
    /// The node's multi-index over the sorted vertex list of a simplex
    /// containing its carrier, or `None` if the carrier is not contained.
    pub fn barycentric_on(&self, node: usize, simplex: &[usize]) -> Option<Vec<usize>> {
        let lag = &self.nodes[node];
        let mut alpha = vec![0usize; simplex.len()];
        for (&v, &w) in lag.carrier.iter().zip(&lag.weights) {
            let pos = simplex.binary_search(&v).ok()?;
            alpha[pos] = w;
        }
        Some(alpha)
    }
}

/// Affine geometry of one element: barycentric coordinates of physical
/// points and the constant gradients of the barycentric functions.
#[derive(Clone, Debug)]
pub struct AffineMap {
    v0: Point,
    /// Row `i` maps `x - v0` to `lambda_{i+1}`.
    jac_inv: Vec<Vec<f64>>,
    /// Gradient of each barycentric coordinate, `dim + 1` vectors.
    pub grad_lambda: Vec<Vec<f64>>,
}

impl AffineMap {
    pub fn new(mesh: &Mesh, elem: usize) -> Self {
        let vs = &mesh.elements[elem].vertices;
        let d = mesh.dim;
        let v0 = mesh.vertex(vs[0]).to_vec();
        let mut jac = vec![vec![0.0; d]; d];
        for (col, &v) in vs[1..].iter().enumerate() {
            for row in 0..d {
                jac[row][col] = mesh.vertex(v)[row] - v0[row];
            }
        }
        let jac_inv = invert_small(&jac)
            .unwrap_or_else(|| panic!("element {elem} is degenerate, no barycentric map"));
        let mut grad0 = vec![0.0; d];
        for row in &jac_inv {
            for (g, r) in grad0.iter_mut().zip(row) {
                *g -= r;
            }
        }
        let mut grad_lambda = vec![grad0];
        grad_lambda.extend(jac_inv.iter().cloned());
        AffineMap {
            v0,
            jac_inv,
            grad_lambda,
        }
    }

    /// Barycentric coordinates of a physical point, `dim + 1` entries.
    pub fn barycentric(&self, x: &[f64]) -> Vec<f64> {
        let d = self.v0.len();
        let diff: Vec<f64> = x.iter().zip(&self.v0).map(|(a, b)| a - b).collect();
        let mut lambda = vec![0.0; d + 1];
        let mut rest = 0.0;
        for (i, row) in self.jac_inv.iter().enumerate() {
            let li: f64 = row.iter().zip(&diff).map(|(a, b)| a * b).sum();
            lambda[i + 1] = li;
            rest += li;
        }
        lambda[0] = 1.0 - rest;
        lambda
    }
}

/// Inverts a small matrix by Gauss-Jordan elimination with partial pivoting.
fn invert_small(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(pivot, col);
        inv.swap(pivot, col);
        let diag = a[col][col];
        for k in 0..n {
            a[col][k] /= diag;
            inv[col][k] /= diag;
        }
        for row in 0..n {
            if row != col {
                let f = a[row][col];
                if f != 0.0 {
                    for k in 0..n {
                        a[row][k] -= f * a[col][k];
                        inv[row][k] -= f * inv[col][k];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Physical coordinates of a barycentric point on the simplex spanned by
/// `vertices`.
pub fn point_from_barycentric(mesh: &Mesh, vertices: &[usize], lambda: &[f64]) -> Point {
    let mut x = vec![0.0; mesh.dim];
    for (&v, &l) in vertices.iter().zip(lambda) {
        for (xi, c) in x.iter_mut().zip(mesh.vertex(v)) {
            *xi += l * c;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::geometry::structured_unit_square;
    use crate::mesh::Simplex;

    fn single_triangle() -> Mesh {
        Mesh {
            dim: 2,
            vertices: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            elements: vec![Simplex::new(vec![0, 1, 2])],
        }
    }

    fn two_triangle_square() -> Mesh {
        Mesh {
            dim: 2,
            vertices: vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
            ],
            elements: vec![Simplex::new(vec![0, 1, 3]), Simplex::new(vec![0, 3, 2])],
        }
    }

    #[test]
    fn node_counts() {
        assert_eq!(lagrange_nodes(&single_triangle(), 1).unwrap().nodes.len(), 3);
        assert_eq!(lagrange_nodes(&single_triangle(), 2).unwrap().nodes.len(), 6);
        assert_eq!(
            lagrange_nodes(&two_triangle_square(), 3).unwrap().nodes.len(),
            16
        );
        assert!(matches!(
            lagrange_nodes(&single_triangle(), 4),
            Err(BasisError::UnsupportedDegree(4))
        ));
    }

    #[test]
    fn shared_edge_nodes_are_deduplicated() {
        let table = lagrange_nodes(&two_triangle_square(), 3).unwrap();
        let shared: Vec<usize> = table
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.carrier == vec![0, 3] || n.carrier == vec![0] || n.carrier == vec![3])
            .map(|(i, _)| i)
            .collect();
        for id in shared {
            let in_first = table.element_nodes[0].contains(&id);
            let in_second = table.element_nodes[1].contains(&id);
            assert!(in_first && in_second, "node {id} should be shared");
        }
    }

    #[test]
    fn carriers_identify_subsimplices() {
        let table = lagrange_nodes(&single_triangle(), 2).unwrap();
        let carrier_sizes: Vec<usize> = table.nodes.iter().map(|n| n.carrier.len()).collect();
        assert_eq!(carrier_sizes.iter().filter(|&&c| c == 1).count(), 3);
        assert_eq!(carrier_sizes.iter().filter(|&&c| c == 2).count(), 3);
        let p3 = lagrange_nodes(&single_triangle(), 3).unwrap();
        assert_eq!(
            p3.nodes.iter().filter(|n| n.carrier.len() == 3).count(),
            1,
            "degree three has one interior node per triangle"
        );
    }

    #[test]
    fn node_positions_match_lattice() {
        let table = lagrange_nodes(&single_triangle(), 2).unwrap();
        for node in &table.nodes {
            if node.carrier == vec![0, 1] {
                assert_eq!(node.position, vec![0.5, 0.0]);
            }
        }
    }

    #[test]
    fn barycentric_on_face_places_weights() {
        let table = lagrange_nodes(&two_triangle_square(), 2).unwrap();
        let edge_node = table
            .nodes
            .iter()
            .position(|n| n.carrier == vec![0, 3])
            .unwrap();
        assert_eq!(
            table.barycentric_on(edge_node, &[0, 3]),
            Some(vec![1, 1])
        );
        assert_eq!(
            table.barycentric_on(edge_node, &[0, 1, 3]),
            Some(vec![1, 0, 1])
        );
        assert_eq!(table.barycentric_on(edge_node, &[0, 1, 2]), None);
    }

    #[test]
    fn affine_map_round_trips() {
        let mesh = structured_unit_square(3);
        for (k, el) in mesh.elements.iter().enumerate() {
            let map = AffineMap::new(&mesh, k);
            let lambda = [0.2, 0.5, 0.3];
            let x = point_from_barycentric(&mesh, &el.vertices, &lambda);
            let back = map.barycentric(&x);
            for (a, b) in lambda.iter().zip(&back) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn barycentric_gradients_sum_to_zero() {
        let mesh = structured_unit_square(2);
        let map = AffineMap::new(&mesh, 3);
        for k in 0..mesh.dim {
            let total: f64 = map.grad_lambda.iter().map(|g| g[k]).sum();
            assert!(total.abs() < 1e-13);
        }
    }

    #[test]
    fn lagrange_gradient_matches_finite_differences() {
        let lambda = [0.25, 0.35, 0.4];
        let eps = 1e-6;
        for p in 1..=3usize {
            for alpha in multi_indices(3, p) {
                let grad = lagrange_gradient(&alpha, p, &lambda);
                for i in 0..3 {
                    let mut plus = lambda.to_vec();
                    let mut minus = lambda.to_vec();
                    plus[i] += eps;
                    minus[i] -= eps;
                    let fd = (lagrange_value(&alpha, p, &plus)
                        - lagrange_value(&alpha, p, &minus))
                        / (2.0 * eps);
                    assert!(
                        (grad[i] - fd).abs() < 1e-7,
                        "p={p} alpha={alpha:?} partial {i}: {} vs {fd}",
                        grad[i]
                    );
                }
            }
        }
    }

    #[test]
    fn multi_index_enumeration_order() {
        assert_eq!(
            multi_indices(3, 1),
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]
        );
        assert_eq!(multi_indices(3, 2).len(), 6);
        assert_eq!(multi_indices(4, 3).len(), 20);
        assert_eq!(multi_indices(3, 2)[0], vec![2, 0, 0]);
    }
}

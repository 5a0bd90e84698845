//! Degrees of freedom and evaluation for crack-aware Lagrange spaces.
//!
//! Each Lagrange node owns one degree of freedom per side of its star, so a
//! function in the space carries independent values on each side of the crack
//! while staying a single-valued Lagrange function inside every element.
//! Nodes away from the crack have exactly one side and behave classically.

pub mod functional;
pub mod operator;

use serde::Serialize;
use thiserror::Error;

use crate::basis::dual::DualError;
use crate::basis::{lagrange_gradient, lagrange_value, AffineMap, BasisError, NodeTable};
use crate::crack::{side_decomposition, BridgeError, CrackMesh, SideDecomposition, StarError};
use crate::mesh::{FaceKey, Mesh, MeshTopology};

pub use functional::{
    build_bridge_functionals, build_single_functional, solve_bridge_coefficients, spanning_tree,
    Functional, FunctionalTerm,
};
pub use operator::{
    apply_interpolant, assemble_interpolant, discrete_jump_lift, is_h1_broken_valid,
    is_h1_conforming, max_side_disagreement, two_sided_trace, FaceTrace, InterpolantOperator,
    NodeBridgeData, NodeFunctionals,
};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum InterpolantError {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Star(#[from] StarError),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error("no crack face contains carrier {carrier:?} on side {side}")]
    MissingCrackFace { carrier: Vec<usize>, side: usize },
    #[error("the spanning-tree bridge system of carrier {0:?} is singular")]
    SingularTreeSystem(Vec<usize>),
}

/// The side-split degree-of-freedom table of a crack-aware Lagrange space.
///
/// Degrees of freedom are ordered node-major, side-minor: the dofs of node
/// `i` occupy the contiguous range `offsets[i]..offsets[i+1]`, one per side
/// of the node's star in side order.
#[derive(Clone, Debug)]
pub struct DofTable {
    pub p: usize,
    pub nodes: NodeTable,
    /// Side decomposition of each node's carrier.
    pub decompositions: Vec<SideDecomposition>,
    /// Prefix sums of side counts; `offsets[nodes.len()]` is the dof count.
    pub offsets: Vec<usize>,
    /// Reverse map from dof id to `(node, side)`.
    pub dof_node_side: Vec<(usize, usize)>,
    /// Whether each node's carrier lies on the crack.
    pub on_crack: Vec<bool>,
    /// Whether each node's carrier lies on the outer boundary.
    pub on_boundary: Vec<bool>,
    /// Per element, the dof of each local lattice node.
    pub element_dofs: Vec<Vec<usize>>,
}

impl DofTable {
    pub fn ndofs(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Number of sides node `i` sees.
    pub fn q(&self, node: usize) -> usize {
        self.decompositions[node].q()
    }

    pub fn dof_index(&self, node: usize, side: usize) -> usize {
        debug_assert!(side < self.q(node));
        self.offsets[node] + side
    }
}

/// Builds the dof table: one decomposition per node, one dof per side.
pub fn build_dof_table(
    mesh: &Mesh,
    topo: &MeshTopology,
    crack: &CrackMesh,
    p: usize,
) -> Result<DofTable, InterpolantError> {
    let nodes = crate::basis::lagrange_nodes(mesh, p)?;

    let mut boundary_faces_by_vertex: std::collections::BTreeMap<usize, Vec<&FaceKey>> =
        std::collections::BTreeMap::new();
    for face in &topo.boundary_faces {
        for &v in face.vertices() {
            boundary_faces_by_vertex.entry(v).or_default().push(face);
        }
    }

    let mut decompositions = Vec::with_capacity(nodes.nodes.len());
    let mut offsets = vec![0usize];
    let mut dof_node_side = Vec::new();
    let mut on_crack = Vec::with_capacity(nodes.nodes.len());
    let mut on_boundary = Vec::with_capacity(nodes.nodes.len());
    for (i, node) in nodes.nodes.iter().enumerate() {
        let decomp = side_decomposition(topo, crack, &node.carrier)?;
        for side in 0..decomp.q() {
            dof_node_side.push((i, side));
        }
        offsets.push(dof_node_side.len());
        on_crack.push(crack.contains_carrier(&node.carrier));
        on_boundary.push(
            boundary_faces_by_vertex
                .get(&node.carrier[0])
                .is_some_and(|faces| faces.iter().any(|f| f.contains_all(&node.carrier))),
        );
        decompositions.push(decomp);
    }

    let mut element_dofs = Vec::with_capacity(mesh.elements.len());
    for (k, ids) in nodes.element_nodes.iter().enumerate() {
        let mut dofs = Vec::with_capacity(ids.len());
        for &node in ids {
            let side = decompositions[node]
                .side_of(k)
                .expect("an element is always inside the star of its own nodes");
            dofs.push(offsets[node] + side);
        }
        element_dofs.push(dofs);
    }

    Ok(DofTable {
        p,
        nodes,
        decompositions,
        offsets,
        dof_node_side,
        on_crack,
        on_boundary,
        element_dofs,
    })
}

/// Coefficients of a function in the side-split space, indexed by dof.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteFunction {
    pub coeffs: Vec<f64>,
}

impl DiscreteFunction {
    pub fn zeros(table: &DofTable) -> Self {
        DiscreteFunction {
            coeffs: vec![0.0; table.ndofs()],
        }
    }

    /// Value at a barycentric point of an element.
    pub fn eval_on_element(&self, table: &DofTable, elem: usize, lambda: &[f64]) -> f64 {
        table
            .nodes
            .local_indices
            .iter()
            .zip(&table.element_dofs[elem])
            .map(|(alpha, &dof)| self.coeffs[dof] * lagrange_value(alpha, table.p, lambda))
            .sum()
    }

    /// Physical gradient at a barycentric point of an element; `map` must be
    /// the affine map of that element.
    pub fn grad_on_element(
        &self,
        table: &DofTable,
        map: &AffineMap,
        elem: usize,
        lambda: &[f64],
    ) -> Vec<f64> {
        let dim = map.grad_lambda[0].len();
        let mut grad = vec![0.0; dim];
        for (alpha, &dof) in table
            .nodes
            .local_indices
            .iter()
            .zip(&table.element_dofs[elem])
        {
            let c = self.coeffs[dof];
            if c == 0.0 {
                continue;
            }
            let partials = lagrange_gradient(alpha, table.p, lambda);
            for (dl, gl) in partials.iter().zip(&map.grad_lambda) {
                for (g, gc) in grad.iter_mut().zip(gl) {
                    *g += c * dl * gc;
                }
            }
        }
        grad
    }
}

/// A function that may jump across the crack.  The element argument selects
/// the side when the point lies on a crack face.
pub trait SideAwareFunction {
    fn eval(&self, x: &[f64], elem: usize) -> f64;
}

impl<F: Fn(&[f64], usize) -> f64> SideAwareFunction for F {
    fn eval(&self, x: &[f64], elem: usize) -> f64 {
        self(x, elem)
    }
}

/// A discrete function viewed as a side-aware function on its mesh.
pub struct DiscreteLift<'a> {
    pub mesh: &'a Mesh,
    pub table: &'a DofTable,
    pub maps: &'a [AffineMap],
    pub u: &'a DiscreteFunction,
}

impl SideAwareFunction for DiscreteLift<'_> {
    fn eval(&self, x: &[f64], elem: usize) -> f64 {
        let lambda = self.maps[elem].barycentric(x);
        self.u.eval_on_element(self.table, elem, &lambda)
    }
}

/// Builds the affine maps of every element once.
pub fn element_affine_maps(mesh: &Mesh) -> Vec<AffineMap> {
    (0..mesh.elements.len())
        .map(|k| AffineMap::new(mesh, k))
        .collect()
}

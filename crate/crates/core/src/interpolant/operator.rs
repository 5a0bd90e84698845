//! Assembly and application of the crack-aware interpolation operator.
//!
//! The operator carries one merged functional per degree of freedom.  For a
//! crack node with `q` sides the merged functionals combine the node average
//! with spanning-tree bridge functionals so that applying them to a function
//! of the space returns its own coefficients, and applying them to a
//! function that is continuous across the crack yields matching side values.

use num_rational::Rational64;

use crate::basis::quadrature::QuadratureRule;
use crate::basis::point_from_barycentric;
use crate::crack::{enumerate_bridges, Bridge, CrackMesh};
use crate::mesh::{FaceKey, Mesh, MeshTopology, Point};

use super::functional::{
    build_bridge_functionals, build_single_functional, solve_bridge_coefficients, spanning_tree,
    Functional,
};
use super::{build_dof_table, DiscreteFunction, DofTable, InterpolantError, SideAwareFunction};

/// Bridge bookkeeping of one crack node.
#[derive(Clone, Debug)]
pub struct NodeBridgeData {
    /// Every bridge of the node's star, sorted by side pair.
    pub bridges: Vec<Bridge>,
    /// Indices into `bridges` forming the spanning tree, in discovery order.
    pub tree: Vec<usize>,
    /// Exact combination weights, one row per split side, one column per
    /// tree edge.
    pub lambdas: Vec<Vec<Rational64>>,
}

/// Per-node pieces of the coefficient functionals: the side-averaging part
/// and, for crack nodes, one bridge combination per split side.
#[derive(Clone, Debug)]
pub struct NodeFunctionals {
    pub single: Functional,
    pub combos: Vec<Functional>,
}

pub struct InterpolantOperator {
    pub table: DofTable,
    /// Merged coefficient functional of each dof.
    pub functionals: Vec<Functional>,
    /// Per-node functional parts.
    pub node_functionals: Vec<NodeFunctionals>,
    /// Bridge data of crack nodes with more than one side.
    pub node_bridges: Vec<Option<NodeBridgeData>>,
}

impl InterpolantOperator {
    pub fn ndofs(&self) -> usize {
        self.table.ndofs()
    }

    /// Largest number of integral terms over all coefficient functionals.
    pub fn max_terms_per_dof(&self) -> usize {
        self.functionals
            .iter()
            .map(|f| f.terms.len())
            .max()
            .unwrap_or(0)
    }
}

/// Builds the interpolation operator of degree `p` on a cracked mesh.
pub fn assemble_interpolant(
    mesh: &Mesh,
    topo: &MeshTopology,
    crack: &CrackMesh,
    p: usize,
) -> Result<InterpolantOperator, InterpolantError> {
    let table = build_dof_table(mesh, topo, crack, p)?;
    let degree = 2 * p + 3;
    let face_rule = QuadratureRule::on_simplex(mesh.dim - 1, degree);
    let elem_rule = QuadratureRule::on_simplex(mesh.dim, degree);

    let nnodes = table.nodes.nodes.len();
    let mut functionals = Vec::with_capacity(table.ndofs());
    let mut node_functionals = Vec::with_capacity(nnodes);
    let mut node_bridges = Vec::with_capacity(nnodes);

    for node in 0..nnodes {
        let decomp = &table.decompositions[node];
        let q = decomp.q();
        let single = build_single_functional(
            mesh,
            topo,
            crack,
            &table.nodes,
            decomp,
            node,
            table.on_crack[node],
            table.on_boundary[node],
            &face_rule,
            &elem_rule,
        )?;

        if q == 1 {
            functionals.push(single.clone());
            node_functionals.push(NodeFunctionals {
                single,
                combos: Vec::new(),
            });
            node_bridges.push(None);
            continue;
        }

        let bridges = enumerate_bridges(topo, crack, decomp)?;
        let tree = spanning_tree(q, &bridges)
            .expect("bridge enumeration already certified connectivity");
        let tree_sides: Vec<(usize, usize)> = tree.iter().map(|&t| bridges[t].sides).collect();
        let lambdas = solve_bridge_coefficients(q, &tree_sides)
            .ok_or_else(|| InterpolantError::SingularTreeSystem(decomp.carrier.clone()))?;
        let raw: Vec<Functional> = {
            let tree_bridges: Vec<Bridge> = tree.iter().map(|&t| bridges[t].clone()).collect();
            build_bridge_functionals(mesh, &table.nodes, node, &tree_bridges, &face_rule)?
        };

        let mut combos = Vec::with_capacity(q - 1);
        for lam in &lambdas {
            let parts: Vec<(f64, &Functional)> = lam
                .iter()
                .zip(&raw)
                .map(|(l, b)| ((*l.numer() as f64) / (*l.denom() as f64), b))
                .collect();
            let empty = Functional {
                node,
                terms: Vec::new(),
            };
            combos.push(empty.combined(&parts));
        }

        for side in 0..q {
            let parts: Vec<(f64, &Functional)> = if side < q - 1 {
                vec![(1.0, &combos[side])]
            } else {
                combos.iter().map(|c| (-1.0, c)).collect()
            };
            functionals.push(single.combined(&parts));
        }
        node_functionals.push(NodeFunctionals { single, combos });
        node_bridges.push(Some(NodeBridgeData {
            bridges,
            tree,
            lambdas,
        }));
    }

    Ok(InterpolantOperator {
        table,
        functionals,
        node_functionals,
        node_bridges,
    })
}

/// Applies the operator: one functional evaluation per coefficient.
pub fn apply_interpolant(
    op: &InterpolantOperator,
    u: &impl SideAwareFunction,
) -> DiscreteFunction {
    DiscreteFunction {
        coeffs: op.functionals.iter().map(|f| f.apply(u)).collect(),
    }
}

/// Lifts prescribed jump data into the space.
///
/// `u` may be any side-aware function whose jump across the crack equals the
/// prescribed data; when that jump is the trace of a function of the space,
/// the result reproduces it exactly while staying bounded in energy.
pub fn discrete_jump_lift(
    op: &InterpolantOperator,
    u: &impl SideAwareFunction,
) -> DiscreteFunction {
    apply_interpolant(op, u)
}

/// Whether all sides of every node agree, making the function single valued.
pub fn is_h1_conforming(table: &DofTable, u: &DiscreteFunction, tol: f64) -> bool {
    max_side_disagreement(table, u) <= tol
}

/// Whether a coefficient vector represents a valid broken function.
///
/// Membership in the broken space is built into the representation: any
/// finite coefficient assignment is polynomial on each element and single
/// valued across every face away from the crack, because such faces share
/// their degrees of freedom.  Only non-finite coefficients are rejected.
pub fn is_h1_broken_valid(table: &DofTable, u: &DiscreteFunction) -> bool {
    u.coeffs.len() == table.ndofs() && u.coeffs.iter().all(|c| c.is_finite())
}

/// Largest coefficient spread over the sides of any node.
pub fn max_side_disagreement(table: &DofTable, u: &DiscreteFunction) -> f64 {
    let mut worst = 0.0f64;
    for node in 0..table.nodes.nodes.len() {
        let dofs = &u.coeffs[table.offsets[node]..table.offsets[node + 1]];
        let lo = dofs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = dofs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(hi - lo);
    }
    worst
}

/// Sampled two-sided traces on one crack face.  The plus side is the
/// incident element with the smaller id.
#[derive(Clone, Debug)]
pub struct FaceTrace {
    pub face: FaceKey,
    pub elem_plus: usize,
    pub elem_minus: usize,
    /// Physical quadrature points on the face.
    pub points: Vec<Point>,
    /// Quadrature weights scaled by the face measure.
    pub weights: Vec<f64>,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

impl FaceTrace {
    pub fn jumps(&self) -> Vec<f64> {
        self.plus
            .iter()
            .zip(&self.minus)
            .map(|(a, b)| a - b)
            .collect()
    }
}

/// Samples the two element traces of `u` on every crack face.
pub fn two_sided_trace(
    mesh: &Mesh,
    topo: &MeshTopology,
    crack: &CrackMesh,
    rule: &QuadratureRule,
    u: &impl SideAwareFunction,
) -> Vec<FaceTrace> {
    crack
        .faces
        .iter()
        .map(|face| {
            let elems = &topo.face_elements[face];
            let (elem_plus, elem_minus) = (elems[0], elems[1]);
            let measure = mesh.simplex_measure(face.vertices());
            let mut points = Vec::with_capacity(rule.points.len());
            let mut weights = Vec::with_capacity(rule.points.len());
            let mut plus = Vec::with_capacity(rule.points.len());
            let mut minus = Vec::with_capacity(rule.points.len());
            for (lambda, w) in rule.points.iter().zip(&rule.weights) {
                let x = point_from_barycentric(mesh, face.vertices(), lambda);
                plus.push(u.eval(&x, elem_plus));
                minus.push(u.eval(&x, elem_minus));
                points.push(x);
                weights.push(measure * w);
            }
            FaceTrace {
                face: face.clone(),
                elem_plus,
                elem_minus,
                points,
                weights,
                plus,
                minus,
            }
        })
        .collect()
}

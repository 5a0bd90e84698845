//! Coefficient functionals of the crack-aware interpolant.
//!
//! Every coefficient is a weighted sum of dual-basis integrals over control
//! simplices (faces or elements), each evaluated through the trace of a fixed
//! context element.  Crack nodes additionally combine bridge functionals,
//! integrals of a dual polynomial against the difference of two element
//! traces on a shared crack face, with exact rational weights obtained from a
//! spanning tree of the side graph.

use num_rational::Rational64;

use crate::basis::dual::dual_polynomial;
use crate::basis::quadrature::QuadratureRule;
use crate::basis::{point_from_barycentric, NodeTable};
use crate::crack::{Bridge, CrackMesh, SideDecomposition};
use crate::mesh::{FaceKey, Mesh, MeshTopology, Point};

use super::{InterpolantError, SideAwareFunction};

/// One control-simplex integral, fully discretized: the rule points are
/// stored in physical coordinates and the dual polynomial, quadrature weight,
/// simplex measure and functional weight are folded into one factor per
/// point.
#[derive(Clone, Debug)]
pub struct FunctionalTerm {
    /// Vertex ids of the simplex the integral runs over.
    pub simplex: Vec<usize>,
    /// Element whose trace supplies the integrand values.
    pub context: usize,
    /// Scalar weight of the whole term.
    pub weight: f64,
    /// Physical quadrature points paired with folded coefficients.
    pub samples: Vec<(Point, f64)>,
}

impl FunctionalTerm {
    fn scaled(&self, factor: f64) -> FunctionalTerm {
        FunctionalTerm {
            simplex: self.simplex.clone(),
            context: self.context,
            weight: factor * self.weight,
            samples: self
                .samples
                .iter()
                .map(|(x, c)| (x.clone(), factor * c))
                .collect(),
        }
    }

    fn apply(&self, u: &impl SideAwareFunction) -> f64 {
        self.samples
            .iter()
            .map(|(x, c)| c * u.eval(x, self.context))
            .sum()
    }
}

/// A linear functional on side-aware functions.
#[derive(Clone, Debug)]
pub struct Functional {
    /// Node whose coefficient this functional produces.
    pub node: usize,
    pub terms: Vec<FunctionalTerm>,
}

impl Functional {
    pub fn apply(&self, u: &impl SideAwareFunction) -> f64 {
        self.terms.iter().map(|t| t.apply(u)).sum()
    }

    /// Sum of this functional and scaled others, keeping term order.
    pub fn combined(&self, parts: &[(f64, &Functional)]) -> Functional {
        let mut terms = self.terms.clone();
        for (factor, part) in parts {
            for term in &part.terms {
                terms.push(term.scaled(*factor));
            }
        }
        Functional {
            node: self.node,
            terms,
        }
    }
}

/// Discretizes one dual-basis integral over `simplex` through `context`.
fn make_term(
    mesh: &Mesh,
    nodes: &NodeTable,
    node: usize,
    simplex: &[usize],
    context: usize,
    weight: f64,
    rule: &QuadratureRule,
) -> Result<FunctionalTerm, InterpolantError> {
    let alpha = nodes
        .barycentric_on(node, simplex)
        .expect("control simplices carry the node");
    let dual = dual_polynomial(mesh, simplex, &alpha, nodes.p)?;
    let measure = mesh.simplex_measure(simplex);
    let samples = rule
        .points
        .iter()
        .zip(&rule.weights)
        .map(|(lambda, w)| {
            let x = point_from_barycentric(mesh, simplex, lambda);
            (x, weight * measure * w * dual.eval(lambda))
        })
        .collect();
    Ok(FunctionalTerm {
        simplex: simplex.to_vec(),
        context,
        weight,
        samples,
    })
}

/// Builds the single-node functional.
///
/// Control-simplex selection, in order: crack nodes average one crack-face
/// integral per side (weight `1/q`, context the smallest element of the side
/// owning such a face); interior lattice nodes integrate over their element;
/// boundary nodes use their smallest boundary face; all remaining nodes use
/// their smallest incident face with the smaller neighbour as context.
pub fn build_single_functional(
    mesh: &Mesh,
    topo: &MeshTopology,
    crack: &CrackMesh,
    nodes: &NodeTable,
    decomp: &SideDecomposition,
    node: usize,
    on_crack: bool,
    on_boundary: bool,
    face_rule: &QuadratureRule,
    elem_rule: &QuadratureRule,
) -> Result<Functional, InterpolantError> {
    let carrier = &nodes.nodes[node].carrier;
    let mut terms = Vec::new();

    if on_crack {
        let q = decomp.q();
        let weight = 1.0 / q as f64;
        for (side_idx, side) in decomp.sides.iter().enumerate() {
            let mut found: Option<(usize, FaceKey)> = None;
            'outer: for &k in side {
                let mut faces: Vec<&FaceKey> = topo.element_faces[k]
                    .iter()
                    .filter(|f| crack.contains(f) && f.contains_all(carrier))
                    .collect();
                faces.sort();
                if let Some(face) = faces.first() {
                    found = Some((k, (*face).clone()));
                    break 'outer;
                }
            }
            let (context, face) = found.ok_or_else(|| InterpolantError::MissingCrackFace {
                carrier: carrier.clone(),
                side: side_idx,
            })?;
            terms.push(make_term(
                mesh,
                nodes,
                node,
                face.vertices(),
                context,
                weight,
                face_rule,
            )?);
        }
    } else if carrier.len() == mesh.dim + 1 {
        let elem = decomp.star[0];
        terms.push(make_term(
            mesh, nodes, node, carrier, elem, 1.0, elem_rule,
        )?);
    } else if on_boundary {
        let face = topo
            .boundary_faces
            .iter()
            .find(|f| f.contains_all(carrier))
            .expect("boundary nodes lie on a boundary face");
        let context = topo.face_elements[face][0];
        terms.push(make_term(
            mesh,
            nodes,
            node,
            face.vertices(),
            context,
            1.0,
            face_rule,
        )?);
    } else {
        let mut faces: std::collections::BTreeSet<FaceKey> = std::collections::BTreeSet::new();
        for &k in &decomp.star {
            for f in &topo.element_faces[k] {
                if f.contains_all(carrier) {
                    faces.insert(f.clone());
                }
            }
        }
        let face = faces.into_iter().next().expect("every carrier lies on a face");
        let context = topo.face_elements[&face][0];
        terms.push(make_term(
            mesh,
            nodes,
            node,
            face.vertices(),
            context,
            1.0,
            face_rule,
        )?);
    }

    Ok(Functional { node, terms })
}

/// Builds the raw bridge functionals of a crack node, one per bridge, as the
/// difference of the two element traces on the bridge face.
pub fn build_bridge_functionals(
    mesh: &Mesh,
    nodes: &NodeTable,
    node: usize,
    bridges: &[Bridge],
    face_rule: &QuadratureRule,
) -> Result<Vec<Functional>, InterpolantError> {
    bridges
        .iter()
        .map(|bridge| {
            let plus = make_term(
                mesh,
                nodes,
                node,
                bridge.face.vertices(),
                bridge.elements.0,
                1.0,
                face_rule,
            )?;
            let minus = make_term(
                mesh,
                nodes,
                node,
                bridge.face.vertices(),
                bridge.elements.1,
                -1.0,
                face_rule,
            )?;
            Ok(Functional {
                node,
                terms: vec![plus, minus],
            })
        })
        .collect()
}

/// Picks a spanning tree of the side graph by breadth-first search from side
/// zero, walking bridges in their listed order.  Returns indices into
/// `bridges`, or `None` if the graph does not reach every side.
pub fn spanning_tree(q: usize, bridges: &[Bridge]) -> Option<Vec<usize>> {
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); q];
    for (idx, bridge) in bridges.iter().enumerate() {
        let (a, b) = bridge.sides;
        adjacency[a].push((b, idx));
        adjacency[b].push((a, idx));
    }
    let mut visited = vec![false; q];
    visited[0] = true;
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut tree = Vec::new();
    while let Some(side) = queue.pop_front() {
        for &(other, idx) in &adjacency[side] {
            if !visited[other] {
                visited[other] = true;
                tree.push(idx);
                queue.push_back(other);
            }
        }
    }
    if visited.iter().all(|&v| v) {
        Some(tree)
    } else {
        None
    }
}

/// Solves for the rational weights that make the bridge combinations dual to
/// the side-split basis functions.
///
/// Side `q-1` is the reference side; the split basis function of side `j`
/// takes value `1` on side `j`, `-1` on the reference side and `0`
/// elsewhere.  Entry `(j', t)` of the system matrix is the value of the
/// bridge functional of tree edge `t` on the split function of side `j'`,
/// and column `j` of the returned matrix solves that system against the
/// `j`-th unit vector.  Returns `None` if the system is singular.
pub fn solve_bridge_coefficients(
    q: usize,
    tree_sides: &[(usize, usize)],
) -> Option<Vec<Vec<Rational64>>> {
    let m = q - 1;
    assert_eq!(tree_sides.len(), m, "a spanning tree has q-1 edges");
    let split_value = |j: usize, side: usize| -> i64 {
        (side == j) as i64 - (side == q - 1) as i64
    };
    let mut a = vec![vec![Rational64::from_integer(0); m]; m];
    for (t, &(k, l)) in tree_sides.iter().enumerate() {
        for (jp, row) in a.iter_mut().enumerate() {
            row[t] = Rational64::from_integer(split_value(jp, k) - split_value(jp, l));
        }
    }
    let mut rhs = vec![vec![Rational64::from_integer(0); m]; m];
    for (j, row) in rhs.iter_mut().enumerate() {
        row[j] = Rational64::from_integer(1);
    }

    for col in 0..m {
        let pivot_row = (col..m).find(|&r| a[r][col] != Rational64::from_integer(0))?;
        a.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        let pivot = a[col][col];
        for r in 0..m {
            if r == col {
                continue;
            }
            let factor = a[r][col] / pivot;
            if factor == Rational64::from_integer(0) {
                continue;
            }
            for c in 0..m {
                let delta = factor * a[col][c];
                a[r][c] -= delta;
                let delta = factor * rhs[col][c];
                rhs[r][c] -= delta;
            }
        }
    }
    let mut lambdas = vec![vec![Rational64::from_integer(0); m]; m];
    for j in 0..m {
        for (t, lam) in lambdas[j].iter_mut().enumerate() {
            *lam = rhs[t][j] / a[t][t];
        }
    }
    Some(lambdas)
}

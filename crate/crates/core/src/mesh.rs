//! Simplicial meshes with exact combinatorial topology.
//!
//! A mesh stores vertex coordinates and elements given as sorted vertex index
//! lists.  Every topological query (face incidence, boundary detection,
//! conformity checking) is an integer set operation on those lists, so no
//! geometric predicate with a tolerance enters anywhere.  Coordinates are only
//! used for measures, shape quality and quadrature.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coordinates of a mesh vertex, `dim` entries.
pub type Point = Vec<f64>;

/// Euclidean distance between two points.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// An `n`-simplex given by strictly increasing vertex indices.
///
/// The sorted order makes the index list a canonical identifier, so two
/// simplices are equal exactly when their vertex sets are equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Simplex {
    pub vertices: Vec<usize>,
}

impl Simplex {
    /// Builds a simplex, sorting the vertex list into canonical order.
    pub fn new(mut vertices: Vec<usize>) -> Self {
        vertices.sort_unstable();
        Simplex { vertices }
    }

    /// Topological dimension, one less than the vertex count.
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// The `n+1` facets obtained by dropping one vertex each.
    pub fn faces(&self) -> Vec<FaceKey> {
        (0..self.vertices.len())
            .map(|skip| {
                FaceKey(
                    self.vertices
                        .iter()
                        .enumerate()
                        .filter(|(pos, _)| *pos != skip)
                        .map(|(_, v)| *v)
                        .collect(),
                )
            })
            .collect()
    }

    pub fn contains_vertex(&self, v: usize) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }
}

/// Canonical key of a subsimplex: its sorted vertex index list.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FaceKey(pub Vec<usize>);

impl FaceKey {
    /// Builds a key, sorting the vertex list into canonical order.
    pub fn new(mut vertices: Vec<usize>) -> Self {
        vertices.sort_unstable();
        FaceKey(vertices)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn contains_vertex(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// True when every vertex of `sub` is a vertex of this face.
    pub fn contains_all(&self, sub: &[usize]) -> bool {
        sub.iter().all(|v| self.contains_vertex(*v))
    }
}

/// A conforming simplicial mesh in `dim` dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub dim: usize,
    pub vertices: Vec<Point>,
    pub elements: Vec<Simplex>,
}

impl Mesh {
    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i]
    }

    /// `n`-dimensional measure of the simplex spanned by `vertices`.
    ///
    /// Computed as `sqrt(det G)/n!` where `G` is the Gram matrix of the edge
    /// vectors from the first vertex, which works for simplices of any
    /// dimension embedded in any ambient dimension.
    pub fn simplex_measure(&self, vertices: &[usize]) -> f64 {
        let n = vertices.len() - 1;
        if n == 0 {
            return 1.0;
        }
        let v0 = self.vertex(vertices[0]);
        let edge = |i: usize| -> Vec<f64> {
            self.vertex(vertices[i + 1])
                .iter()
                .zip(v0)
                .map(|(a, b)| a - b)
                .collect()
        };
        let edges: Vec<Vec<f64>> = (0..n).map(edge).collect();
        let mut gram = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                gram[i][j] = edges[i].iter().zip(&edges[j]).map(|(a, b)| a * b).sum();
            }
        }
        let det = det_small(&mut gram);
        det.max(0.0).sqrt() / factorial(n)
    }

    /// Largest pairwise vertex distance of the simplex spanned by `vertices`.
    pub fn simplex_diameter(&self, vertices: &[usize]) -> f64 {
        let mut h: f64 = 0.0;
        for (pos, &a) in vertices.iter().enumerate() {
            for &b in &vertices[pos + 1..] {
                h = h.max(dist(self.vertex(a), self.vertex(b)));
            }
        }
        h
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Determinant by Gaussian elimination with partial pivoting; destroys `m`.
fn det_small(m: &mut [Vec<f64>]) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    det
}

/// Why a mesh fails the conformity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NonConformity {
    /// A facet is shared by more than two elements.
    FaceOveruse { face: FaceKey, count: usize },
    /// Two elements have identical vertex sets.
    DuplicateElement { first: usize, second: usize },
    /// Two vertex indices carry bitwise identical coordinates.
    DuplicateVertex { first: usize, second: usize },
}

impl std::fmt::Display for NonConformity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NonConformity::FaceOveruse { face, count } => {
                write!(f, "face {:?} is shared by {} elements", face.0, count)
            }
            NonConformity::DuplicateElement { first, second } => {
                write!(f, "elements {first} and {second} have the same vertex set")
            }
            NonConformity::DuplicateVertex { first, second } => {
                write!(f, "vertices {first} and {second} have the same coordinates")
            }
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("non-conforming mesh: {0}")]
    NonConforming(NonConformity),
    #[error("vertex {0} belongs to no element")]
    DanglingVertex(usize),
}

/// Face incidence and adjacency data for a mesh.
#[derive(Clone, Debug)]
pub struct MeshTopology {
    /// Incident element ids per facet, sorted, length 1 (boundary) or 2.
    pub face_elements: BTreeMap<FaceKey, Vec<usize>>,
    /// The `dim+1` facets of each element.
    pub element_faces: Vec<Vec<FaceKey>>,
    /// Facets with exactly one incident element.
    pub boundary_faces: BTreeSet<FaceKey>,
    /// Vertices lying on some boundary facet.
    pub boundary_vertices: BTreeSet<usize>,
    /// Incident element ids per vertex, sorted.
    pub vertex_elements: Vec<Vec<usize>>,
}

impl MeshTopology {
    /// The element on the other side of `face` from `elem`, if any.
    pub fn neighbor(&self, elem: usize, face: &FaceKey) -> Option<usize> {
        self.face_elements
            .get(face)?
            .iter()
            .copied()
            .find(|&e| e != elem)
    }

    pub fn is_boundary_face(&self, face: &FaceKey) -> bool {
        self.boundary_faces.contains(face)
    }

    /// True when the face is shared by exactly two elements.
    pub fn is_interior_face(&self, face: &FaceKey) -> bool {
        self.face_elements.get(face).map(Vec::len) == Some(2)
    }
}

/// Builds face incidence maps and runs the combinatorial conformity checks.
pub fn build_topology(mesh: &Mesh) -> Result<MeshTopology, TopologyError> {
    let mut seen_coords: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
    for (i, v) in mesh.vertices.iter().enumerate() {
        let bits: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
        if let Some(&first) = seen_coords.get(&bits) {
            return Err(TopologyError::NonConforming(
                NonConformity::DuplicateVertex { first, second: i },
            ));
        }
        seen_coords.insert(bits, i);
    }

    let mut seen_elements: BTreeMap<&[usize], usize> = BTreeMap::new();
    for (k, el) in mesh.elements.iter().enumerate() {
        if let Some(&first) = seen_elements.get(el.vertices.as_slice()) {
            return Err(TopologyError::NonConforming(
                NonConformity::DuplicateElement { first, second: k },
            ));
        }
        seen_elements.insert(&el.vertices, k);
    }

    let mut face_elements: BTreeMap<FaceKey, Vec<usize>> = BTreeMap::new();
    let mut element_faces = Vec::with_capacity(mesh.elements.len());
    let mut vertex_elements = vec![Vec::new(); mesh.vertices.len()];
    for (k, el) in mesh.elements.iter().enumerate() {
        let faces = el.faces();
        for face in &faces {
            face_elements.entry(face.clone()).or_default().push(k);
        }
        element_faces.push(faces);
        for &v in &el.vertices {
            vertex_elements[v].push(k);
        }
    }

    for (face, elems) in &face_elements {
        if elems.len() > 2 {
            return Err(TopologyError::NonConforming(NonConformity::FaceOveruse {
                face: face.clone(),
                count: elems.len(),
            }));
        }
    }
    if let Some(v) = vertex_elements.iter().position(Vec::is_empty) {
        return Err(TopologyError::DanglingVertex(v));
    }

    let boundary_faces: BTreeSet<FaceKey> = face_elements
        .iter()
        .filter(|(_, elems)| elems.len() == 1)
        .map(|(face, _)| face.clone())
        .collect();
    let boundary_vertices: BTreeSet<usize> = boundary_faces
        .iter()
        .flat_map(|f| f.vertices().iter().copied())
        .collect();

    Ok(MeshTopology {
        face_elements,
        element_faces,
        boundary_faces,
        boundary_vertices,
        vertex_elements,
    })
}

/// Shape quality of one element.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ElementShape {
    /// Largest pairwise vertex distance.
    pub diameter: f64,
    /// Radius of the inscribed ball, `n * volume / facet measure sum`.
    pub inradius: f64,
    /// `diameter / inradius`.
    pub ratio: f64,
}

/// Shape regularity report for a whole mesh.
#[derive(Clone, Debug, Serialize)]
pub struct ShapeReport {
    pub per_element: Vec<ElementShape>,
    /// Largest diameter-to-inradius ratio over all elements.
    pub gamma: f64,
    /// Largest element diameter.
    pub h_max: f64,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ShapeError {
    #[error("element {0} has zero volume")]
    DegenerateSimplex(usize),
}

/// Computes exact diameters and inradii for every element.
pub fn shape_regularity(mesh: &Mesh) -> Result<ShapeReport, ShapeError> {
    let mut per_element = Vec::with_capacity(mesh.elements.len());
    let mut gamma: f64 = 0.0;
    let mut h_max: f64 = 0.0;
    for (k, el) in mesh.elements.iter().enumerate() {
        let volume = mesh.simplex_measure(&el.vertices);
        let surface: f64 = el
            .faces()
            .iter()
            .map(|f| mesh.simplex_measure(f.vertices()))
            .sum();
        let diameter = mesh.simplex_diameter(&el.vertices);
        let inradius = mesh.dim as f64 * volume / surface;
        let ratio = diameter / inradius;
        if !(volume > 0.0) || !ratio.is_finite() {
            return Err(ShapeError::DegenerateSimplex(k));
        }
        gamma = gamma.max(ratio);
        h_max = h_max.max(diameter);
        per_element.push(ElementShape {
            diameter,
            inradius,
            ratio,
        });
    }
    Ok(ShapeReport {
        per_element,
        gamma,
        h_max,
    })
}

/// Volume of the unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * std::f64::consts::PI / n as f64,
    }
}

/// Vertex star sizes checked against the shape-regularity bound
/// `d * gamma^d * omega_d / omega_{d-1}`.
#[derive(Clone, Debug, Serialize)]
pub struct SolidAngleReport {
    pub max_star_size: usize,
    pub bound: f64,
    pub star_sizes: Vec<usize>,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SolidAngleError {
    #[error("vertex {vertex} has {star_size} incident elements, exceeding the bound {bound}")]
    BoundViolated {
        vertex: usize,
        star_size: usize,
        bound: f64,
    },
}

/// Verifies that every vertex star is within the solid-angle bound implied by
/// the mesh's shape regularity.
pub fn solid_angle_check(
    mesh: &Mesh,
    topo: &MeshTopology,
    shape: &ShapeReport,
) -> Result<SolidAngleReport, SolidAngleError> {
    let d = mesh.dim;
    let bound =
        d as f64 * shape.gamma.powi(d as i32) * unit_ball_volume(d) / unit_ball_volume(d - 1);
    let star_sizes: Vec<usize> = topo.vertex_elements.iter().map(Vec::len).collect();
    let mut max_star_size = 0;
    for (vertex, &star_size) in star_sizes.iter().enumerate() {
        if (star_size as f64) > bound {
            return Err(SolidAngleError::BoundViolated {
                vertex,
                star_size,
                bound,
            });
        }
        max_star_size = max_star_size.max(star_size);
    }
    Ok(SolidAngleReport {
        max_star_size,
        bound,
        star_sizes,
    })
}

/// Result of one uniform refinement sweep.
#[derive(Clone, Debug)]
pub struct Refinement {
    pub mesh: Mesh,
    /// Crack faces of the refined mesh (children of the input crack faces).
    pub crack_faces: BTreeSet<FaceKey>,
    /// Child element ids per parent element.
    pub children: Vec<Vec<usize>>,
    /// New vertex id introduced on each parent edge.
    pub edge_midpoints: BTreeMap<(usize, usize), usize>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum RefineError {
    #[error("uniform refinement is implemented for dimensions 2 and 3, not {0}")]
    UnsupportedDimension(usize),
    #[error("crack face {0:?} is not a face of any element")]
    UnknownCrackFace(Vec<usize>),
}

/// Splits every element into `2^dim` children through its edge midpoints.
///
/// Children of one parent are geometrically similar to the parent in 2-D, so
/// the shape-regularity constant is preserved exactly.  Crack faces descend to
/// their child faces, keeping the crack resolved on the refined mesh.
pub fn uniform_refine(mesh: &Mesh, crack: &BTreeSet<FaceKey>) -> Result<Refinement, RefineError> {
    if mesh.dim != 2 && mesh.dim != 3 {
        return Err(RefineError::UnsupportedDimension(mesh.dim));
    }

    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for el in &mesh.elements {
        let vs = &el.vertices;
        for (pos, &a) in vs.iter().enumerate() {
            for &b in &vs[pos + 1..] {
                edges.insert((a, b));
            }
        }
    }

    let mut vertices = mesh.vertices.clone();
    let mut edge_midpoints = BTreeMap::new();
    for &(a, b) in &edges {
        let mid: Point = mesh
            .vertex(a)
            .iter()
            .zip(mesh.vertex(b))
            .map(|(x, y)| 0.5 * (x + y))
            .collect();
        edge_midpoints.insert((a, b), vertices.len());
        vertices.push(mid);
    }
    let mid = |a: usize, b: usize| edge_midpoints[&(a.min(b), a.max(b))];

    let mut elements = Vec::with_capacity(mesh.elements.len() << mesh.dim);
    let mut children = Vec::with_capacity(mesh.elements.len());
    for el in &mesh.elements {
        let first = elements.len();
        let v = &el.vertices;
        match mesh.dim {
            2 => {
                let (a, b, c) = (v[0], v[1], v[2]);
                let (mab, mac, mbc) = (mid(a, b), mid(a, c), mid(b, c));
                elements.push(Simplex::new(vec![a, mab, mac]));
                elements.push(Simplex::new(vec![b, mab, mbc]));
                elements.push(Simplex::new(vec![c, mac, mbc]));
                elements.push(Simplex::new(vec![mab, mac, mbc]));
            }
            3 => {
                let (a, b, c, d) = (v[0], v[1], v[2], v[3]);
                let (mab, mac, mad) = (mid(a, b), mid(a, c), mid(a, d));
                let (mbc, mbd, mcd) = (mid(b, c), mid(b, d), mid(c, d));
                elements.push(Simplex::new(vec![a, mab, mac, mad]));
                elements.push(Simplex::new(vec![b, mab, mbc, mbd]));
                elements.push(Simplex::new(vec![c, mac, mbc, mcd]));
                elements.push(Simplex::new(vec![d, mad, mbd, mcd]));
                elements.push(Simplex::new(vec![mab, mac, mad, mbd]));
                elements.push(Simplex::new(vec![mab, mac, mbc, mbd]));
                elements.push(Simplex::new(vec![mac, mad, mbd, mcd]));
                elements.push(Simplex::new(vec![mac, mbc, mbd, mcd]));
            }
            _ => unreachable!(),
        }
        children.push((first..elements.len()).collect());
    }

    let mut crack_faces = BTreeSet::new();
    for face in crack {
        let v = face.vertices();
        let all_edges_known = {
            let mut ok = true;
            for (pos, &a) in v.iter().enumerate() {
                for &b in &v[pos + 1..] {
                    ok &= edge_midpoints.contains_key(&(a, b));
                }
            }
            ok
        };
        if !all_edges_known {
            return Err(RefineError::UnknownCrackFace(v.to_vec()));
        }
        match mesh.dim {
            2 => {
                let (a, b) = (v[0], v[1]);
                let m = mid(a, b);
                crack_faces.insert(FaceKey::new(vec![a, m]));
                crack_faces.insert(FaceKey::new(vec![m, b]));
            }
            3 => {
                let (a, b, c) = (v[0], v[1], v[2]);
                let (mab, mac, mbc) = (mid(a, b), mid(a, c), mid(b, c));
                crack_faces.insert(FaceKey::new(vec![a, mab, mac]));
                crack_faces.insert(FaceKey::new(vec![b, mab, mbc]));
                crack_faces.insert(FaceKey::new(vec![c, mac, mbc]));
                crack_faces.insert(FaceKey::new(vec![mab, mac, mbc]));
            }
            _ => unreachable!(),
        }
    }

    Ok(Refinement {
        mesh: Mesh {
            dim: mesh.dim,
            vertices,
            elements,
        },
        crack_faces,
        children,
        edge_midpoints,
    })
}

/// A mesh together with the crack faces read from or written to disk.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshFile {
    pub mesh: Mesh,
    pub crack_faces: BTreeSet<FaceKey>,
}

#[derive(Debug, Error)]
pub enum MeshFileError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported dimension {0}, expected 2 or 3")]
    Dimension(usize),
    #[error("vertex {index} has {got} coordinates, expected {expected}")]
    VertexArity {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("vertex {0} has a non-finite coordinate")]
    NonFiniteCoordinate(usize),
    #[error("{kind} {index} has {got} vertices, expected {expected}")]
    SimplexArity {
        kind: &'static str,
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("{kind} {index} repeats vertex {vertex}")]
    RepeatedVertex {
        kind: &'static str,
        index: usize,
        vertex: usize,
    },
    #[error("{kind} {index} references vertex {vertex}, but the mesh has {count} vertices")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        vertex: usize,
        count: usize,
    },
}

#[derive(Debug, Deserialize, Serialize)]
struct RawMeshFile {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    elements: Vec<Vec<usize>>,
    #[serde(default)]
    gamma_faces: Vec<Vec<usize>>,
}

fn check_simplex(
    kind: &'static str,
    index: usize,
    raw: &[usize],
    expected: usize,
    vertex_count: usize,
) -> Result<Vec<usize>, MeshFileError> {
    if raw.len() != expected {
        return Err(MeshFileError::SimplexArity {
            kind,
            index,
            got: raw.len(),
            expected,
        });
    }
    for &v in raw {
        if v >= vertex_count {
            return Err(MeshFileError::IndexOutOfRange {
                kind,
                index,
                vertex: v,
                count: vertex_count,
            });
        }
    }
    let mut sorted = raw.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(MeshFileError::RepeatedVertex {
            kind,
            index,
            vertex: w[0],
        });
    }
    Ok(sorted)
}

/// Parses the JSON mesh format and canonicalizes vertex order inside
/// simplices.  Index validity is checked here so later passes can trust it.
pub fn parse_mesh(text: &str) -> Result<MeshFile, MeshFileError> {
    let raw: RawMeshFile = serde_json::from_str(text)?;
    if raw.dim != 2 && raw.dim != 3 {
        return Err(MeshFileError::Dimension(raw.dim));
    }
    for (index, v) in raw.vertices.iter().enumerate() {
        if v.len() != raw.dim {
            return Err(MeshFileError::VertexArity {
                index,
                got: v.len(),
                expected: raw.dim,
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(MeshFileError::NonFiniteCoordinate(index));
        }
    }
    let nv = raw.vertices.len();
    let mut elements = Vec::with_capacity(raw.elements.len());
    for (index, el) in raw.elements.iter().enumerate() {
        elements.push(Simplex {
            vertices: check_simplex("element", index, el, raw.dim + 1, nv)?,
        });
    }
    let mut crack_faces = BTreeSet::new();
    for (index, f) in raw.gamma_faces.iter().enumerate() {
        crack_faces.insert(FaceKey(check_simplex("crack face", index, f, raw.dim, nv)?));
    }
    Ok(MeshFile {
        mesh: Mesh {
            dim: raw.dim,
            vertices: raw.vertices,
            elements,
        },
        crack_faces,
    })
}

/// Serializes a mesh in canonical form: vertex lists sorted inside every
/// simplex and crack faces listed in sorted order.
pub fn serialize_mesh(mesh: &Mesh, crack: &BTreeSet<FaceKey>) -> String {
    let raw = RawMeshFile {
        dim: mesh.dim,
        vertices: mesh.vertices.clone(),
        elements: mesh.elements.iter().map(|e| e.vertices.clone()).collect(),
        gamma_faces: crack.iter().map(|f| f.0.clone()).collect(),
    };
    let mut out = serde_json::to_string_pretty(&raw).expect("mesh serialization cannot fail");
    out.push('\n');
    out
}

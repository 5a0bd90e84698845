//! Crack topology on top of a conforming mesh.
//!
//! The crack is a set of interior mesh faces.  It may be non-manifold: three
//! or more crack faces can meet at a junction, and open ends (slit tips) are
//! allowed.  Everything here is exact integer combinatorics.
//!
//! The central notion is the side decomposition of a node's element star.
//! Two elements of the star are connected when they share a face that is not
//! a crack face; the connected components are the sides the node sees.  A
//! function that jumps only across the crack has one well-defined value per
//! side, which is why sides are the unit of degree-of-freedom splitting.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::mesh::{FaceKey, Mesh, MeshTopology};

/// Disjoint-set forest with path halving, used for side and region grouping.
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// The crack: a set of interior mesh faces, with a vertex incidence index.
#[derive(Clone, Debug)]
pub struct CrackMesh {
    pub faces: BTreeSet<FaceKey>,
    /// Vertices lying on some crack face.
    pub vertices: BTreeSet<usize>,
    /// Crack faces incident to each crack vertex.
    vertex_faces: BTreeMap<usize, Vec<FaceKey>>,
}

impl CrackMesh {
    pub fn new(faces: BTreeSet<FaceKey>) -> Self {
        let mut vertex_faces: BTreeMap<usize, Vec<FaceKey>> = BTreeMap::new();
        for face in &faces {
            for &v in face.vertices() {
                vertex_faces.entry(v).or_default().push(face.clone());
            }
        }
        let vertices = vertex_faces.keys().copied().collect();
        CrackMesh {
            faces,
            vertices,
            vertex_faces,
        }
    }

    pub fn contains(&self, face: &FaceKey) -> bool {
        self.faces.contains(face)
    }

    /// Crack faces containing every vertex of `carrier`, in sorted order.
    pub fn faces_containing(&self, carrier: &[usize]) -> Vec<&FaceKey> {
        let Some(candidates) = self.vertex_faces.get(&carrier[0]) else {
            return Vec::new();
        };
        candidates
            .iter()
            .filter(|f| f.contains_all(carrier))
            .collect()
    }

    /// True when a node with the given carrier subsimplex lies on the crack.
    pub fn contains_carrier(&self, carrier: &[usize]) -> bool {
        !self.faces_containing(carrier).is_empty()
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CrackError {
    #[error("crack face {0:?} is not an interior face of the mesh")]
    NotResolved(Vec<usize>),
    #[error("element {0} touches both the outer boundary and the crack")]
    NotStrictlyEnclosed(usize),
}

/// Checks that the mesh resolves the crack and strictly encloses it.
///
/// Resolved means every crack face is an interior mesh face.  Strictly
/// enclosed means no element shares vertices with both the outer boundary and
/// the crack, which keeps boundary and crack behavior decoupled node by node.
pub fn validate_crack(
    mesh: &Mesh,
    topo: &MeshTopology,
    crack: &CrackMesh,
) -> Result<(), CrackError> {
    for face in &crack.faces {
        if !topo.is_interior_face(face) {
            return Err(CrackError::NotResolved(face.vertices().to_vec()));
        }
    }
    for (k, el) in mesh.elements.iter().enumerate() {
        let touches_boundary = el
            .vertices
            .iter()
            .any(|v| topo.boundary_vertices.contains(v));
        if touches_boundary {
            let touches_crack = el.vertices.iter().any(|v| crack.vertices.contains(v));
            if touches_crack {
                return Err(CrackError::NotStrictlyEnclosed(k));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum StarError {
    #[error("carrier {0:?} is contained in no element")]
    OrphanNode(Vec<usize>),
}

/// Elements whose vertex set contains the whole carrier, in sorted order.
///
/// This is the star of any Lagrange node carried by that subsimplex; node
/// incidence is decided purely combinatorially.
pub fn star(topo: &MeshTopology, carrier: &[usize]) -> Result<Vec<usize>, StarError> {
    let mut result = topo.vertex_elements[carrier[0]].clone();
    for &v in &carrier[1..] {
        let other = &topo.vertex_elements[v];
        result.retain(|e| other.binary_search(e).is_ok());
    }
    if result.is_empty() {
        return Err(StarError::OrphanNode(carrier.to_vec()));
    }
    Ok(result)
}

/// The star of a carrier split into sides by the crack.
///
/// Sides are listed by their smallest element id, so the decomposition is a
/// deterministic function of the mesh and the crack.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SideDecomposition {
    pub carrier: Vec<usize>,
    pub star: Vec<usize>,
    pub sides: Vec<Vec<usize>>,
}

impl SideDecomposition {
    /// Number of sides the carrier sees.
    pub fn q(&self) -> usize {
        self.sides.len()
    }

    /// Index of the side containing `elem`, if it is in the star.
    pub fn side_of(&self, elem: usize) -> Option<usize> {
        self.sides
            .iter()
            .position(|side| side.binary_search(&elem).is_ok())
    }
}

/// Groups the star of `carrier` into connected components, where two star
/// elements are adjacent when they share a non-crack face.
pub fn side_decomposition(
    topo: &MeshTopology,
    crack: &CrackMesh,
    carrier: &[usize],
) -> Result<SideDecomposition, StarError> {
    let star = star(topo, carrier)?;
    let index_of = |elem: usize| star.binary_search(&elem).ok();
    let mut uf = UnionFind::new(star.len());
    for (pos, &k) in star.iter().enumerate() {
        for face in &topo.element_faces[k] {
            if crack.contains(face) {
                continue;
            }
            if let Some(other) = topo.neighbor(k, face) {
                if let Some(other_pos) = index_of(other) {
                    uf.union(pos, other_pos);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (pos, &k) in star.iter().enumerate() {
        groups.entry(uf.find(pos)).or_default().push(k);
    }
    let sides: Vec<Vec<usize>> = groups.into_values().collect();
    Ok(SideDecomposition {
        carrier: carrier.to_vec(),
        star,
        sides,
    })
}

/// A crack face witnessing that two sides of a carrier are adjacent across
/// the crack.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Bridge {
    /// Side indices into the decomposition, `sides.0 < sides.1`.
    pub sides: (usize, usize),
    /// The witnessing crack face.
    pub face: FaceKey,
    /// Incident elements: `elements.0` on side `sides.0`, `elements.1` on
    /// side `sides.1`.
    pub elements: (usize, usize),
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum BridgeError {
    #[error("the bridge graph of carrier {0:?} is disconnected")]
    DisconnectedBridgeGraph(Vec<usize>),
    #[error("crack face {0:?} has fewer than two incident elements")]
    HalfOpenCrackFace(Vec<usize>),
}

/// Enumerates one bridge per adjacent side pair of the decomposition, picking
/// the smallest witnessing face, and checks that bridges connect all sides.
pub fn enumerate_bridges(
    topo: &MeshTopology,
    crack: &CrackMesh,
    decomp: &SideDecomposition,
) -> Result<Vec<Bridge>, BridgeError> {
    let mut witnesses: BTreeMap<(usize, usize), (FaceKey, (usize, usize))> = BTreeMap::new();
    for face in crack.faces_containing(&decomp.carrier) {
        let Some(elems) = topo.face_elements.get(face) else {
            return Err(BridgeError::HalfOpenCrackFace(face.vertices().to_vec()));
        };
        if elems.len() != 2 {
            return Err(BridgeError::HalfOpenCrackFace(face.vertices().to_vec()));
        }
        let (ka, kb) = (elems[0], elems[1]);
        let (sa, sb) = match (decomp.side_of(ka), decomp.side_of(kb)) {
            (Some(sa), Some(sb)) => (sa, sb),
            _ => continue,
        };
        if sa == sb {
            continue;
        }
        let key = (sa.min(sb), sa.max(sb));
        let oriented = if sa < sb { (ka, kb) } else { (kb, ka) };
        let candidate = (face.clone(), oriented);
        match witnesses.get(&key) {
            Some(existing) if *existing <= candidate => {}
            _ => {
                witnesses.insert(key, candidate);
            }
        }
    }

    let mut uf = UnionFind::new(decomp.q());
    for &(a, b) in witnesses.keys() {
        uf.union(a, b);
    }
    let root = uf.find(0);
    if (0..decomp.q()).any(|s| uf.find(s) != root) {
        return Err(BridgeError::DisconnectedBridgeGraph(decomp.carrier.clone()));
    }

    Ok(witnesses
        .into_iter()
        .map(|(sides, (face, elements))| Bridge {
            sides,
            face,
            elements,
        })
        .collect())
}

/// Element labels for the connected components of the domain minus the crack.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegionLabeling {
    /// Region id per element, numbered by first appearance.
    pub labels: Vec<usize>,
    pub count: usize,
}

impl RegionLabeling {
    pub fn region_of(&self, elem: usize) -> usize {
        self.labels[elem]
    }
}

/// Labels the connected components cut out by the crack: elements sharing an
/// interior non-crack face get the same label.
pub fn region_labels(mesh: &Mesh, topo: &MeshTopology, crack: &CrackMesh) -> RegionLabeling {
    let mut uf = UnionFind::new(mesh.elements.len());
    for (face, elems) in &topo.face_elements {
        if elems.len() == 2 && !crack.contains(face) {
            uf.union(elems[0], elems[1]);
        }
    }
    let mut labels = vec![usize::MAX; mesh.elements.len()];
    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    for k in 0..mesh.elements.len() {
        let root = uf.find(k);
        let next = remap.len();
        let label = *remap.entry(root).or_insert(next);
        labels[k] = label;
    }
    RegionLabeling {
        labels,
        count: remap.len(),
    }
}

/// True when the star of the carrier is connected through shared faces,
/// crack faces included.  Shape-regular conforming meshes always satisfy
/// this; it is exposed as a diagnostic.
pub fn star_face_connected(topo: &MeshTopology, carrier: &[usize]) -> Result<bool, StarError> {
    let star = star(topo, carrier)?;
    let mut uf = UnionFind::new(star.len());
    for (pos, &k) in star.iter().enumerate() {
        for face in &topo.element_faces[k] {
            if let Some(other) = topo.neighbor(k, face) {
                if let Ok(other_pos) = star.binary_search(&other) {
                    uf.union(pos, other_pos);
                }
            }
        }
    }
    let root = uf.find(0);
    Ok((0..star.len()).all(|pos| uf.find(pos) == root))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::geometry::{generate, GeometryKind, GeometrySpec};
    use crate::mesh::build_topology;

    fn setup(kind: GeometryKind, n: usize, margin: usize) -> (Mesh, MeshTopology, CrackMesh) {
        let geo = generate(GeometrySpec { kind, n, margin }).unwrap();
        let topo = build_topology(&geo.mesh).unwrap();
        let crack = CrackMesh::new(geo.crack_faces);
        (geo.mesh, topo, crack)
    }

    #[test]
    fn generated_geometries_validate() {
        for kind in [GeometryKind::Loop, GeometryKind::Theta, GeometryKind::Slit] {
            let (mesh, topo, crack) = setup(kind, 8, 1);
            validate_crack(&mesh, &topo, &crack).unwrap();
        }
    }

    #[test]
    fn region_counts_per_geometry() {
        for (kind, expected) in [
            (GeometryKind::Loop, 2),
            (GeometryKind::Theta, 3),
            (GeometryKind::Slit, 1),
        ] {
            let (mesh, topo, crack) = setup(kind, 8, 1);
            let regions = region_labels(&mesh, &topo, &crack);
            assert_eq!(regions.count, expected, "{kind}");
            assert_eq!(regions.labels[0], 0);
        }
    }

    #[test]
    fn theta_has_exactly_two_triple_junctions() {
        let (_, topo, crack) = setup(GeometryKind::Theta, 8, 1);
        let mut q_counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &v in &crack.vertices {
            let decomp = side_decomposition(&topo, &crack, &[v]).unwrap();
            *q_counts.entry(decomp.q()).or_insert(0) += 1;
        }
        assert_eq!(q_counts.get(&3), Some(&2));
        assert_eq!(q_counts.get(&1), None);
        let total: usize = q_counts.values().sum();
        assert_eq!(total, crack.vertices.len());
    }

    #[test]
    fn slit_tips_have_connected_stars() {
        let (_, topo, crack) = setup(GeometryKind::Slit, 8, 1);
        let mut qs: Vec<usize> = Vec::new();
        for &v in &crack.vertices {
            qs.push(side_decomposition(&topo, &crack, &[v]).unwrap().q());
        }
        qs.sort_unstable();
        let ones = qs.iter().filter(|&&q| q == 1).count();
        let twos = qs.iter().filter(|&&q| q == 2).count();
        assert_eq!(ones, 2, "the two tips keep one-sided stars");
        assert_eq!(ones + twos, qs.len());
    }

    #[test]
    fn vertices_away_from_the_crack_are_single_sided() {
        let (mesh, topo, crack) = setup(GeometryKind::Theta, 8, 1);
        for v in 0..mesh.vertices.len() {
            if !crack.vertices.contains(&v) {
                let decomp = side_decomposition(&topo, &crack, &[v]).unwrap();
                assert_eq!(decomp.q(), 1);
            }
        }
    }

    #[test]
    fn interior_vertex_star_has_six_elements() {
        let (_, topo, _) = setup(GeometryKind::Loop, 8, 1);
        let center = 4 * 9 + 4;
        assert_eq!(star(&topo, &[center]).unwrap().len(), 6);
    }

    #[test]
    fn edge_carrier_star_has_two_elements() {
        let (_, topo, crack) = setup(GeometryKind::Loop, 8, 1);
        let face = crack.faces.iter().next().unwrap().clone();
        let star_elems = star(&topo, face.vertices()).unwrap();
        assert_eq!(star_elems.len(), 2);
        let decomp = side_decomposition(&topo, &crack, face.vertices()).unwrap();
        assert_eq!(decomp.q(), 2);
        for side in &decomp.sides {
            assert_eq!(side.len(), 1);
        }
    }

    #[test]
    fn disjoint_carrier_is_orphan() {
        let (_, topo, _) = setup(GeometryKind::Loop, 8, 1);
        assert_eq!(
            star(&topo, &[0, 80]).err(),
            Some(StarError::OrphanNode(vec![0, 80]))
        );
    }

    #[test]
    fn junction_bridges_connect_all_sides() {
        let (_, topo, crack) = setup(GeometryKind::Theta, 8, 1);
        let mut seen_triple = 0;
        for &v in &crack.vertices {
            let decomp = side_decomposition(&topo, &crack, &[v]).unwrap();
            let bridges = enumerate_bridges(&topo, &crack, &decomp).unwrap();
            if decomp.q() == 3 {
                seen_triple += 1;
                assert_eq!(bridges.len(), 3, "triple junction has all three pairs");
            }
            if decomp.q() == 2 {
                assert_eq!(bridges.len(), 1);
            }
            for bridge in &bridges {
                assert!(bridge.sides.0 < bridge.sides.1);
                assert_eq!(decomp.side_of(bridge.elements.0), Some(bridge.sides.0));
                assert_eq!(decomp.side_of(bridge.elements.1), Some(bridge.sides.1));
                assert!(crack.contains(&bridge.face));
            }
        }
        assert_eq!(seen_triple, 2);
    }

    #[test]
    fn boundary_crack_face_is_not_resolved() {
        let (mesh, topo, _) = setup(GeometryKind::Loop, 8, 1);
        let boundary_face = topo.boundary_faces.iter().next().unwrap().clone();
        let crack = CrackMesh::new([boundary_face.clone()].into_iter().collect());
        assert_eq!(
            validate_crack(&mesh, &topo, &crack).err(),
            Some(CrackError::NotResolved(boundary_face.vertices().to_vec()))
        );
    }

    #[test]
    fn zero_margin_breaks_strict_enclosure() {
        let (mesh, topo, crack) = setup(GeometryKind::Loop, 8, 0);
        assert!(matches!(
            validate_crack(&mesh, &topo, &crack),
            Err(CrackError::NotStrictlyEnclosed(_))
        ));
    }

    #[test]
    fn stars_are_face_connected_on_generated_meshes() {
        for kind in [GeometryKind::Loop, GeometryKind::Theta, GeometryKind::Slit] {
            let (mesh, topo, _) = setup(kind, 8, 1);
            for v in 0..mesh.vertices.len() {
                assert!(star_face_connected(&topo, &[v]).unwrap());
            }
        }
    }

    #[test]
    fn region_labels_are_constant_between_non_crack_neighbors() {
        let (mesh, topo, crack) = setup(GeometryKind::Theta, 8, 1);
        let regions = region_labels(&mesh, &topo, &crack);
        for (face, elems) in &topo.face_elements {
            if elems.len() == 2 {
                let same = regions.labels[elems[0]] == regions.labels[elems[1]];
                if crack.contains(face) {
                    assert!(!same, "crack face {face:?} should separate regions");
                } else {
                    assert!(same);
                }
            }
        }
    }
}

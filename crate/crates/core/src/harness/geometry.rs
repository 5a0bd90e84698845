//! Structured test geometries on the unit square.
//!
//! All three geometries live on the same n-by-n grid triangulation, two
//! triangles per cell with the diagonal from the lower-left corner.  Crack
//! faces always run along axis-aligned grid edges:
//!
//! * `loop`: the closed perimeter of an inner square, cutting the domain into
//!   an inside and an outside region.
//! * `theta`: the loop plus a horizontal wall through its middle, giving three
//!   regions and two junction vertices where three crack edges meet.
//! * `slit`: a single open horizontal segment whose tip vertices keep the
//!   domain connected.

use std::collections::BTreeSet;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::mesh::{FaceKey, Mesh, Point, Simplex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GeometryKind {
    Loop,
    Theta,
    Slit,
}

impl FromStr for GeometryKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "loop" => Ok(GeometryKind::Loop),
            "theta" => Ok(GeometryKind::Theta),
            "slit" => Ok(GeometryKind::Slit),
            other => Err(format!(
                "unknown geometry {other:?}, expected loop, theta or slit"
            )),
        }
    }
}

impl std::fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            GeometryKind::Loop => "loop",
            GeometryKind::Theta => "theta",
            GeometryKind::Slit => "slit",
        };
        f.write_str(name)
    }
}

/// Parameters of a generated geometry.
///
/// `n` is the grid resolution.  `margin` counts the full cell layers strictly
/// separating the crack from the outer boundary; the crack sits on grid line
/// `margin + 1`, so elements touching the boundary (vertices on grid lines 0
/// and 1) share no vertex with the crack whenever `margin >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GeometrySpec {
    pub kind: GeometryKind,
    pub n: usize,
    pub margin: usize,
}

/// A generated mesh with its crack faces and the grid lines carrying them.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub spec: GeometrySpec,
    pub mesh: Mesh,
    pub crack_faces: BTreeSet<FaceKey>,
    /// Grid line indices of vertical crack segments (x = index / n).
    pub crack_lines_x: Vec<usize>,
    /// Grid line indices of horizontal crack segments (y = index / n).
    pub crack_lines_y: Vec<usize>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("n = {n} is too small for margin = {margin}; need n >= 4*margin and n >= 2*margin + 4")]
    TooSmall { n: usize, margin: usize },
    #[error("n = {0} must be even")]
    OddResolution(usize),
}

/// Structured triangulation of the unit square: `(n+1)^2` vertices at
/// `(i/n, j/n)` and `2 n^2` triangles.  Vertex `(i, j)` has index `j*(n+1)+i`.
pub fn structured_unit_square(n: usize) -> Mesh {
    let nv = n + 1;
    let mut vertices: Vec<Point> = Vec::with_capacity(nv * nv);
    for j in 0..nv {
        for i in 0..nv {
            vertices.push(vec![i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let id = |i: usize, j: usize| j * nv + i;
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            elements.push(Simplex::new(vec![a, b, d]));
            elements.push(Simplex::new(vec![a, d, c]));
        }
    }
    Mesh {
        dim: 2,
        vertices,
        elements,
    }
}

/// Generates one of the named geometries.
pub fn generate(spec: GeometrySpec) -> Result<Geometry, GeometryError> {
    let GeometrySpec { kind, n, margin } = spec;
    if n % 2 != 0 {
        return Err(GeometryError::OddResolution(n));
    }
    if n < 4 * margin || n < 2 * margin + 4 {
        return Err(GeometryError::TooSmall { n, margin });
    }

    let mesh = structured_unit_square(n);
    let nv = n + 1;
    let id = |i: usize, j: usize| j * nv + i;
    let offset = margin + 1;
    let (lo, hi, mid) = (offset, n - offset, n / 2);

    let mut crack_faces = BTreeSet::new();
    let vertical = |x: usize, set: &mut BTreeSet<FaceKey>| {
        for y in lo..hi {
            set.insert(FaceKey::new(vec![id(x, y), id(x, y + 1)]));
        }
    };
    let horizontal = |y: usize, x0: usize, x1: usize, set: &mut BTreeSet<FaceKey>| {
        for x in x0..x1 {
            set.insert(FaceKey::new(vec![id(x, y), id(x + 1, y)]));
        }
    };

    let (mut crack_lines_x, mut crack_lines_y) = (Vec::new(), Vec::new());
    match kind {
        GeometryKind::Loop => {
            vertical(lo, &mut crack_faces);
            vertical(hi, &mut crack_faces);
            horizontal(lo, lo, hi, &mut crack_faces);
            horizontal(hi, lo, hi, &mut crack_faces);
            crack_lines_x.extend([lo, hi]);
            crack_lines_y.extend([lo, hi]);
        }
        GeometryKind::Theta => {
            vertical(lo, &mut crack_faces);
            vertical(hi, &mut crack_faces);
            horizontal(lo, lo, hi, &mut crack_faces);
            horizontal(hi, lo, hi, &mut crack_faces);
            horizontal(mid, lo, hi, &mut crack_faces);
            crack_lines_x.extend([lo, hi]);
            crack_lines_y.extend([lo, mid, hi]);
        }
        GeometryKind::Slit => {
            horizontal(mid, lo, hi, &mut crack_faces);
            crack_lines_y.push(mid);
        }
    }

    Ok(Geometry {
        spec,
        mesh,
        crack_faces,
        crack_lines_x,
        crack_lines_y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_topology;

    #[test]
    fn generated_meshes_are_conforming_with_interior_cracks() {
        for kind in [GeometryKind::Loop, GeometryKind::Theta, GeometryKind::Slit] {
            let geo = generate(GeometrySpec {
                kind,
                n: 8,
                margin: 1,
            })
            .unwrap();
            assert_eq!(geo.mesh.elements.len(), 2 * 8 * 8);
            let topo = build_topology(&geo.mesh).unwrap();
            for face in &geo.crack_faces {
                assert!(topo.is_interior_face(face), "{kind} face {face:?}");
            }
        }
    }

    #[test]
    fn crack_edge_counts() {
        let span = 8 - 2 * 2;
        let count = |kind| {
            generate(GeometrySpec {
                kind,
                n: 8,
                margin: 1,
            })
            .unwrap()
            .crack_faces
            .len()
        };
        assert_eq!(count(GeometryKind::Loop), 4 * span);
        assert_eq!(count(GeometryKind::Theta), 5 * span);
        assert_eq!(count(GeometryKind::Slit), span);
    }

    #[test]
    fn spec_guards() {
        assert_eq!(
            generate(GeometrySpec {
                kind: GeometryKind::Loop,
                n: 7,
                margin: 1,
            })
            .err(),
            Some(GeometryError::OddResolution(7))
        );
        assert_eq!(
            generate(GeometrySpec {
                kind: GeometryKind::Theta,
                n: 8,
                margin: 3,
            })
            .err(),
            Some(GeometryError::TooSmall { n: 8, margin: 3 })
        );
    }
}

//! Analytic test fields with exact gradients.
//!
//! Fields come in three flavours: globally smooth, vanishing on the crack
//! and the outer boundary, and piecewise smooth with a jump across the
//! crack.  Piecewise fields carry per-element region tags classified from
//! element centroids against the physical crack layout, so the same field
//! has the same meaning on every refinement of a geometry.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::harness::geometry::{Geometry, GeometryKind};
use crate::mesh::Mesh;
use crate::norms::ExactField;

pub const SMOOTH_FIELD_COUNT: usize = 10;
pub const VANISHING_FIELD_COUNT: usize = 5;

/// Physical position of the crack of a generated geometry, independent of
/// the mesh resolution.
#[derive(Clone, Debug)]
pub struct CrackLayout {
    pub kind: GeometryKind,
    /// Lower edge of the cracked box.
    pub lo: f64,
    /// Upper edge of the cracked box.
    pub hi: f64,
    /// Height of the horizontal mid line.
    pub mid: f64,
    /// Vertical crack lines, as x coordinates.
    pub lines_x: Vec<f64>,
    /// Horizontal crack lines, as y coordinates.
    pub lines_y: Vec<f64>,
}

pub fn crack_layout(geo: &Geometry) -> CrackLayout {
    let n = geo.spec.n as f64;
    let offset = (geo.spec.margin + 1) as f64;
    CrackLayout {
        kind: geo.spec.kind,
        lo: offset / n,
        hi: (geo.spec.n - geo.spec.margin - 1) as f64 / n,
        mid: (geo.spec.n / 2) as f64 / n,
        lines_x: geo.crack_lines_x.iter().map(|&i| i as f64 / n).collect(),
        lines_y: geo.crack_lines_y.iter().map(|&i| i as f64 / n).collect(),
    }
}

impl CrackLayout {
    /// Number of connected components the crack cuts the square into.
    pub fn region_count(&self) -> usize {
        match self.kind {
            GeometryKind::Loop => 2,
            GeometryKind::Theta => 3,
            GeometryKind::Slit => 1,
        }
    }

    /// Region tag of a point assumed to lie off the crack: 0 outside the
    /// cracked box, then enclosed components in order.
    pub fn region_of_point(&self, x: &[f64]) -> usize {
        let inside =
            self.lo < x[0] && x[0] < self.hi && self.lo < x[1] && x[1] < self.hi;
        match self.kind {
            GeometryKind::Loop => inside as usize,
            GeometryKind::Theta => {
                if !inside {
                    0
                } else if x[1] > self.mid {
                    1
                } else {
                    2
                }
            }
            GeometryKind::Slit => 0,
        }
    }
}

/// Centroid-classified region tag of every element.
pub fn region_ids(layout: &CrackLayout, mesh: &Mesh) -> Vec<usize> {
    mesh.elements
        .iter()
        .map(|el| {
            let mut c = vec![0.0; mesh.dim];
            for &v in &el.vertices {
                for (ci, xi) in c.iter_mut().zip(mesh.vertex(v)) {
                    *ci += xi / el.vertices.len() as f64;
                }
            }
            layout.region_of_point(&c)
        })
        .collect()
}

/// A named analytic field from the library.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldSpec {
    /// Globally smooth, indexed `0..SMOOTH_FIELD_COUNT`.
    Smooth(usize),
    /// Zero on the crack and the outer boundary, indexed
    /// `0..VANISHING_FIELD_COUNT`.
    Vanishing(usize),
    /// `sin(pi x) sin(pi y)` plus a region-dependent affine offset.
    JumpySine,
    /// Boundary bubble times a region-dependent affine factor.
    JumpyBubble,
    /// 1 on the enclosed regions, 0 outside the cracked box.
    RegionIndicator,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum FieldParseError {
    #[error("unknown field name {0:?}")]
    UnknownField(String),
    #[error("field index {index} out of range for family {family:?} (size {size})")]
    IndexOutOfRange {
        family: String,
        index: usize,
        size: usize,
    },
}

impl FromStr for FieldSpec {
    type Err = FieldParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jumpy-sine" => return Ok(FieldSpec::JumpySine),
            "jumpy-bubble" => return Ok(FieldSpec::JumpyBubble),
            "region-indicator" => return Ok(FieldSpec::RegionIndicator),
            _ => {}
        }
        for (prefix, size, make) in [
            ("smooth-", SMOOTH_FIELD_COUNT, FieldSpec::Smooth as fn(usize) -> FieldSpec),
            ("vanishing-", VANISHING_FIELD_COUNT, FieldSpec::Vanishing),
        ] {
            if let Some(rest) = s.strip_prefix(prefix) {
                let index: usize = rest
                    .parse()
                    .map_err(|_| FieldParseError::UnknownField(s.to_string()))?;
                if index >= size {
                    return Err(FieldParseError::IndexOutOfRange {
                        family: prefix.trim_end_matches('-').to_string(),
                        index,
                        size,
                    });
                }
                return Ok(make(index));
            }
        }
        Err(FieldParseError::UnknownField(s.to_string()))
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Smooth(k) => write!(f, "smooth-{k}"),
            FieldSpec::Vanishing(k) => write!(f, "vanishing-{k}"),
            FieldSpec::JumpySine => write!(f, "jumpy-sine"),
            FieldSpec::JumpyBubble => write!(f, "jumpy-bubble"),
            FieldSpec::RegionIndicator => write!(f, "region-indicator"),
        }
    }
}

/// A field instantiated on a mesh, with per-element region tags baked in.
#[derive(Clone, Debug)]
pub struct Field {
    spec: FieldSpec,
    regions: Vec<usize>,
    lines_x: Vec<f64>,
    lines_y: Vec<f64>,
}

pub fn make_field(spec: FieldSpec, layout: &CrackLayout, mesh: &Mesh) -> Field {
    Field {
        spec,
        regions: region_ids(layout, mesh),
        lines_x: layout.lines_x.clone(),
        lines_y: layout.lines_y.clone(),
    }
}

fn smooth_value(k: usize, x: f64, y: f64) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 1.0,
        1 => x,
        2 => y,
        3 => x * y,
        4 => x * x - y * y,
        5 => (PI * x).sin() * (PI * y).sin(),
        6 => (2.0 * PI * x).cos() * (PI * y).cos(),
        7 => x.exp() * y.cos(),
        8 => 1.0 / (1.0 + x * x + y * y),
        _ => (x - 0.3).powi(3) + (y - 0.7) * (y - 0.7),
    }
}

fn smooth_gradient(k: usize, x: f64, y: f64) -> (f64, f64) {
    use std::f64::consts::PI;
    match k {
        0 => (0.0, 0.0),
        1 => (1.0, 0.0),
        2 => (0.0, 1.0),
        3 => (y, x),
        4 => (2.0 * x, -2.0 * y),
        5 => (
            PI * (PI * x).cos() * (PI * y).sin(),
            PI * (PI * x).sin() * (PI * y).cos(),
        ),
        6 => (
            -2.0 * PI * (2.0 * PI * x).sin() * (PI * y).cos(),
            -PI * (2.0 * PI * x).cos() * (PI * y).sin(),
        ),
        7 => (x.exp() * y.cos(), -x.exp() * y.sin()),
        8 => {
            let d = 1.0 + x * x + y * y;
            (-2.0 * x / (d * d), -2.0 * y / (d * d))
        }
        _ => (3.0 * (x - 0.3) * (x - 0.3), 2.0 * (y - 0.7)),
    }
}

/// Extra factor multiplied onto the bubble-times-lines product.
fn vanishing_factor(k: usize, x: f64, y: f64) -> (f64, f64, f64) {
    match k {
        0 => (1.0, 0.0, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (y, 0.0, 1.0),
        3 => (1.0 + x + y * y, 1.0, 2.0 * y),
        _ => ((x + y).sin(), (x + y).cos(), (x + y).cos()),
    }
}

/// Affine offset coefficients per region for the jumping families.
fn jump_offset(spec: FieldSpec, region: usize) -> (f64, f64, f64) {
    match spec {
        FieldSpec::JumpySine => match region {
            0 => (0.0, 0.0, 0.0),
            1 => (1.0, 0.5, -0.25),
            _ => (-0.5, -0.75, 0.5),
        },
        _ => match region {
            0 => (1.0, 0.0, 0.0),
            1 => (2.0, 1.0, -1.0),
            _ => (-1.0, 0.5, 2.0),
        },
    }
}

/// Product of `(x - a)` over the vertical lines and `(y - b)` over the
/// horizontal lines, with its gradient via leave-one-out products.
fn line_product(lines_x: &[f64], lines_y: &[f64], x: f64, y: f64) -> (f64, f64, f64) {
    let px: f64 = lines_x.iter().map(|a| x - a).product();
    let py: f64 = lines_y.iter().map(|b| y - b).product();
    let dx: f64 = (0..lines_x.len())
        .map(|i| {
            lines_x
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, a)| x - a)
                .product::<f64>()
        })
        .sum();
    let dy: f64 = (0..lines_y.len())
        .map(|i| {
            lines_y
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| y - b)
                .product::<f64>()
        })
        .sum();
    (px * py, dx * py, px * dy)
}

impl Field {
    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn region_of(&self, elem: usize) -> usize {
        self.regions[elem]
    }
}

impl ExactField for Field {
    fn value(&self, x: &[f64], elem: usize) -> f64 {
        use std::f64::consts::PI;
        let (xv, yv) = (x[0], x[1]);
        match self.spec {
            FieldSpec::Smooth(k) => smooth_value(k, xv, yv),
            FieldSpec::Vanishing(k) => {
                let bubble = xv * (1.0 - xv) * yv * (1.0 - yv);
                let (lines, _, _) = line_product(&self.lines_x, &self.lines_y, xv, yv);
                let (m, _, _) = vanishing_factor(k, xv, yv);
                bubble * lines * m
            }
            FieldSpec::JumpySine => {
                let (a, b, c) = jump_offset(self.spec, self.regions[elem]);
                (PI * xv).sin() * (PI * yv).sin() + a + b * xv + c * yv
            }
            FieldSpec::JumpyBubble => {
                let (a, b, c) = jump_offset(self.spec, self.regions[elem]);
                xv * (1.0 - xv) * yv * (1.0 - yv) * (a + b * xv + c * yv)
            }
            FieldSpec::RegionIndicator => (self.regions[elem] != 0) as usize as f64,
        }
    }

    fn gradient(&self, x: &[f64], elem: usize) -> Vec<f64> {
        use std::f64::consts::PI;
        let (xv, yv) = (x[0], x[1]);
        match self.spec {
            FieldSpec::Smooth(k) => {
                let (gx, gy) = smooth_gradient(k, xv, yv);
                vec![gx, gy]
            }
            FieldSpec::Vanishing(k) => {
                let bubble = xv * (1.0 - xv) * yv * (1.0 - yv);
                let bubble_dx = (1.0 - 2.0 * xv) * yv * (1.0 - yv);
                let bubble_dy = xv * (1.0 - xv) * (1.0 - 2.0 * yv);
                let (lines, lines_dx, lines_dy) =
                    line_product(&self.lines_x, &self.lines_y, xv, yv);
                let (m, m_dx, m_dy) = vanishing_factor(k, xv, yv);
                vec![
                    (bubble_dx * lines + bubble * lines_dx) * m + bubble * lines * m_dx,
                    (bubble_dy * lines + bubble * lines_dy) * m + bubble * lines * m_dy,
                ]
            }
            FieldSpec::JumpySine => {
                let (_, b, c) = jump_offset(self.spec, self.regions[elem]);
                vec![
                    PI * (PI * xv).cos() * (PI * yv).sin() + b,
                    PI * (PI * xv).sin() * (PI * yv).cos() + c,
                ]
            }
            FieldSpec::JumpyBubble => {
                let (a, b, c) = jump_offset(self.spec, self.regions[elem]);
                let affine = a + b * xv + c * yv;
                vec![
                    (1.0 - 2.0 * xv) * yv * (1.0 - yv) * affine
                        + xv * (1.0 - xv) * yv * (1.0 - yv) * b,
                    xv * (1.0 - xv) * (1.0 - 2.0 * yv) * affine
                        + xv * (1.0 - xv) * yv * (1.0 - yv) * c,
                ]
            }
            FieldSpec::RegionIndicator => vec![0.0, 0.0],
        }
    }
}

//! Experiment harness: structured crack geometries, analytic field library,
//! study drivers and report serialization for the command-line tool.

pub mod fields;
pub mod geometry;
pub mod report;
pub mod study;

pub use fields::{crack_layout, make_field, region_ids, CrackLayout, Field, FieldSpec};
pub use geometry::{generate, Geometry, GeometryError, GeometryKind, GeometrySpec};

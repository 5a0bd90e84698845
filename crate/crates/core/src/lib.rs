//! Piecewise-polynomial interpolation on simplicial meshes that contain an
//! embedded, possibly non-manifold crack hypersurface.
//!
//! The crate builds an interpolation operator that acts on functions which may
//! jump across a prescribed set of mesh faces (the crack) while remaining
//! continuous elsewhere.  Around each Lagrange node the incident elements are
//! grouped into sides separated by the crack; every side carries its own copy
//! of the nodal basis function and its own coefficient functional.  The
//! resulting operator reproduces discrete functions, maps continuous inputs to
//! continuous outputs, and preserves zero traces on the crack and the outer
//! boundary.
//!
//! Module layout:
//! * [`mesh`]: simplicial meshes, face topology, shape regularity, uniform
//!   refinement, JSON serialization.
//! * [`crack`]: crack validation, node stars, side decompositions, bridges
//!   between sides, region labeling.
//! * [`basis`]: Lagrange nodes, barycentric polynomial algebra, simplex
//!   quadrature, mass matrices and dual polynomials.
//! * [`interpolant`]: side-split degree-of-freedom tables, coefficient
//!   functionals, the interpolation operator, trace and jump utilities.
//! * [`norms`]: broken Sobolev error measures and convergence-rate reports.
//! * [`solver`]: Galerkin solver for elliptic problems with a prescribed jump
//!   across the crack.
//! * [`harness`]: structured test geometries, analytic field library, study
//!   drivers and CSV/JSON reporting used by the command-line tool.

pub mod basis;
pub mod crack;
pub mod harness;
pub mod interpolant;
pub mod mesh;
pub mod norms;
pub mod solver;

//! Refinement studies: interpolation error decay, stability of the
//! interpolant, and prescribed-jump solves against exact or fine-mesh
//! reference solutions.
//!
//! All studies run on a chain of uniform refinements of one generated
//! geometry, so the physical crack is identical on every level and coarse
//! solutions can be carried to finer meshes exactly.

use thiserror::Error;

use crate::basis::quadrature::QuadratureRule;
use crate::basis::AffineMap;
use crate::crack::{CrackError, CrackMesh};
use crate::harness::fields::{crack_layout, make_field, FieldSpec};
use crate::harness::geometry::{generate, Geometry, GeometryError, GeometrySpec};
use crate::interpolant::{
    apply_interpolant, assemble_interpolant, element_affine_maps, DiscreteFunction, DofTable,
    InterpolantError, InterpolantOperator,
};
use crate::mesh::{
    build_topology, uniform_refine, FaceKey, Mesh, MeshTopology, RefineError, TopologyError,
};
use crate::norms::{
    broken_error, convergence_rates, discrete_norms, field_function, field_norms,
    quadratic_form_norms, RateError,
};
use crate::solver::{solve_prescribed_jump, IdentityCoefficient, SolveError};

use std::collections::BTreeSet;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Crack(#[from] CrackError),
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error(transparent)]
    Interpolant(#[from] InterpolantError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error("a study needs at least one level, got {0}")]
    NoLevels(usize),
}

/// One mesh of a refinement chain with its crack topology.
pub struct StudyLevel {
    pub mesh: Mesh,
    pub topo: MeshTopology,
    pub crack: CrackMesh,
    pub crack_faces: BTreeSet<FaceKey>,
    /// Child elements per parent element of the previous level; `None` on
    /// the base level.
    pub children: Option<Vec<Vec<usize>>>,
}

/// Builds `levels` meshes by uniformly refining a generated geometry.
pub fn refinement_chain(geo: &Geometry, levels: usize) -> Result<Vec<StudyLevel>, StudyError> {
    if levels == 0 {
        return Err(StudyError::NoLevels(0));
    }
    let mut chain = Vec::with_capacity(levels);
    let mut mesh = geo.mesh.clone();
    let mut crack_faces = geo.crack_faces.clone();
    let mut children = None;
    for level in 0..levels {
        let next = if level + 1 < levels {
            Some(uniform_refine(&mesh, &crack_faces)?)
        } else {
            None
        };
        let topo = build_topology(&mesh)?;
        let crack = CrackMesh::new(crack_faces.clone());
        chain.push(StudyLevel {
            mesh,
            topo,
            crack,
            crack_faces,
            children,
        });
        match next {
            Some(refined) => {
                mesh = refined.mesh;
                crack_faces = refined.crack_faces;
                children = Some(refined.children);
            }
            None => break,
        }
    }
    Ok(chain)
}

/// Largest element diameter.
pub fn mesh_h_max(mesh: &Mesh) -> f64 {
    mesh.elements
        .iter()
        .map(|el| mesh.simplex_diameter(&el.vertices))
        .fold(0.0, f64::max)
}

/// Re-expresses a coarse function in the refined space.  The refined space
/// contains the coarse one, so the result represents the same broken
/// function exactly: each fine coefficient is the value of the coarse
/// function at the fine node, taken from an element of the matching side.
pub fn prolong(
    coarse_table: &DofTable,
    coarse_maps: &[AffineMap],
    u: &DiscreteFunction,
    children: &[Vec<usize>],
    fine_table: &DofTable,
) -> DiscreteFunction {
    let fine_count = children.iter().map(Vec::len).sum();
    let mut parent = vec![0usize; fine_count];
    for (p, kids) in children.iter().enumerate() {
        for &k in kids {
            parent[k] = p;
        }
    }
    let coeffs = fine_table
        .dof_node_side
        .iter()
        .map(|&(node, side)| {
            let fine_elem = *fine_table.decompositions[node].sides[side]
                .iter()
                .min()
                .expect("side decompositions never have empty sides");
            let coarse_elem = parent[fine_elem];
            let position = &fine_table.nodes.nodes[node].position;
            let lambda = coarse_maps[coarse_elem].barycentric(position);
            u.eval_on_element(coarse_table, coarse_elem, &lambda)
        })
        .collect();
    DiscreteFunction { coeffs }
}

#[derive(Clone, Copy, Debug)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub l2_error: f64,
    pub h1_error: f64,
    /// Order against the previous level, absent on the first row.
    pub l2_rate: Option<f64>,
    pub h1_rate: Option<f64>,
    /// Broken H1 norm of the interpolant over that of the field.
    pub stability_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slopes of log error against log h, absent when an
    /// error vanishes identically.
    pub l2_slope: Option<f64>,
    pub h1_slope: Option<f64>,
}

fn pair_rate(h0: f64, e0: f64, h1: f64, e1: f64) -> Option<f64> {
    if e0 > 0.0 && e1 > 0.0 {
        Some((e0 / e1).ln() / (h0 / h1).ln())
    } else {
        None
    }
}

/// Interpolates a field on every level of a refinement chain and records
/// broken errors, observed orders, and stability ratios.
pub fn interpolation_study(
    spec: GeometrySpec,
    p: usize,
    levels: usize,
    field_spec: FieldSpec,
) -> Result<ConvergenceStudy, StudyError> {
    let geo = generate(spec)?;
    let layout = crack_layout(&geo);
    let chain = refinement_chain(&geo, levels)?;
    let rule = QuadratureRule::on_simplex(geo.mesh.dim, 2 * p + 3);

    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    for (level, stage) in chain.iter().enumerate() {
        let op = assemble_interpolant(&stage.mesh, &stage.topo, &stage.crack, p)?;
        let maps = element_affine_maps(&stage.mesh);
        let field = make_field(field_spec, &layout, &stage.mesh);
        let f = field_function(&field);
        let u = apply_interpolant(&op, &f);
        let err = broken_error(&stage.mesh, &op.table, &maps, &u, &field, &rule);
        let stability = discrete_norms(&stage.mesh, &op.table, &maps, &u, &rule).h1()
            / field_norms(&stage.mesh, &field, &rule).h1();
        let h = mesh_h_max(&stage.mesh);
        let (l2_rate, h1_rate) = match rows.last() {
            Some(prev) => (
                pair_rate(prev.h, prev.l2_error, h, err.l2),
                pair_rate(prev.h, prev.h1_error, h, err.h1()),
            ),
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            level,
            h,
            l2_error: err.l2,
            h1_error: err.h1(),
            l2_rate,
            h1_rate,
            stability_ratio: stability,
        });
    }

    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let slope = |errs: Vec<f64>| {
        if errs.iter().all(|&e| e > 0.0) && errs.len() >= 2 {
            convergence_rates(&hs, &errs).ok().map(|t| t.slope)
        } else {
            None
        }
    };
    let l2_slope = slope(rows.iter().map(|r| r.l2_error).collect());
    let h1_slope = slope(rows.iter().map(|r| r.h1_error).collect());
    Ok(ConvergenceStudy {
        rows,
        l2_slope,
        h1_slope,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct SolveRow {
    pub level: usize,
    pub h: f64,
    /// Broken H1 error against the exact field or the fine reference.
    pub h1_error: f64,
    pub h1_rate: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct SolveStudy {
    pub rows: Vec<SolveRow>,
    pub h1_slope: Option<f64>,
    /// Energy of the fine reference solve, when one was needed.
    pub reference_energy: Option<f64>,
}

/// Solves the prescribed-jump problem on every level of a chain.
///
/// For the region indicator the exact solution is the indicator itself, so
/// errors are measured against it directly.  For other jump data the study
/// appends two extra refinements, solves there, and measures each level
/// against that reference after carrying its solution up the chain.
pub fn solve_study(
    spec: GeometrySpec,
    p: usize,
    levels: usize,
    field_spec: FieldSpec,
    tol: f64,
) -> Result<SolveStudy, StudyError> {
    if levels == 0 {
        return Err(StudyError::NoLevels(0));
    }
    let exact_reference = field_spec == FieldSpec::RegionIndicator;
    let chain_len = if exact_reference { levels } else { levels + 2 };
    let geo = generate(spec)?;
    let layout = crack_layout(&geo);
    let chain = refinement_chain(&geo, chain_len)?;
    let rule = QuadratureRule::on_simplex(geo.mesh.dim, 2 * p + 3);
    let max_iter = 50_000;

    let mut ops: Vec<InterpolantOperator> = Vec::with_capacity(chain_len);
    let mut maps: Vec<Vec<AffineMap>> = Vec::with_capacity(chain_len);
    for stage in &chain {
        ops.push(assemble_interpolant(
            &stage.mesh,
            &stage.topo,
            &stage.crack,
            p,
        )?);
        maps.push(element_affine_maps(&stage.mesh));
    }

    let solve_at = |level: usize| -> Result<(DiscreteFunction, crate::solver::SolveReport), SolveError> {
        let field = make_field(field_spec, &layout, &chain[level].mesh);
        let f = field_function(&field);
        solve_prescribed_jump(
            &chain[level].mesh,
            &ops[level],
            &maps[level],
            &f,
            &IdentityCoefficient,
            tol,
            max_iter,
        )
    };

    let reference = if exact_reference {
        None
    } else {
        Some(solve_at(chain_len - 1)?)
    };

    let mut rows: Vec<SolveRow> = Vec::with_capacity(levels);
    for level in 0..levels {
        let (u, report) = solve_at(level)?;
        let h = mesh_h_max(&chain[level].mesh);
        let h1_error = match &reference {
            None => {
                let field = make_field(field_spec, &layout, &chain[level].mesh);
                broken_error(
                    &chain[level].mesh,
                    &ops[level].table,
                    &maps[level],
                    &u,
                    &field,
                    &rule,
                )
                .h1()
            }
            Some((u_ref, _)) => {
                let mut carried = u;
                for step in level..chain_len - 1 {
                    let children = chain[step + 1]
                        .children
                        .as_ref()
                        .expect("refined levels always record their parentage");
                    carried = prolong(
                        &ops[step].table,
                        &maps[step],
                        &carried,
                        children,
                        &ops[step + 1].table,
                    );
                }
                let diff = DiscreteFunction {
                    coeffs: carried
                        .coeffs
                        .iter()
                        .zip(&u_ref.coeffs)
                        .map(|(a, b)| a - b)
                        .collect(),
                };
                quadratic_form_norms(&chain[chain_len - 1].mesh, &ops[chain_len - 1].table, &diff)
                    .h1()
            }
        };
        let h1_rate = rows
            .last()
            .and_then(|prev| pair_rate(prev.h, prev.h1_error, h, h1_error));
        rows.push(SolveRow {
            level,
            h,
            h1_error,
            h1_rate,
            iterations: report.iterations,
            residual: report.residual,
            energy: report.energy,
        });
    }

    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.h1_error).collect();
    let h1_slope = if errs.iter().all(|&e| e > 0.0) && errs.len() >= 2 {
        convergence_rates(&hs, &errs).ok().map(|t| t.slope)
    } else {
        None
    };
    Ok(SolveStudy {
        rows,
        h1_slope,
        reference_energy: reference.map(|(_, r)| r.energy),
    })
}

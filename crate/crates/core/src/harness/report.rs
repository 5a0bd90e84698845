//! Deterministic CSV tables and JSON dumps for the command-line tool.

use serde::Serialize;

use crate::harness::study::{ConvergenceStudy, SolveStudy};
use crate::interpolant::InterpolantOperator;

fn float_cell(v: f64) -> String {
    format!("{v:.12e}")
}

fn rate_cell(rate: Option<f64>) -> String {
    rate.map(float_cell).unwrap_or_default()
}

/// Renders an interpolation study with one row per refinement level.
pub fn convergence_csv(study: &ConvergenceStudy) -> String {
    let mut out = String::from("level,h,L2_error,H1_error,L2_rate,H1_rate,stability_ratio\n");
    for row in &study.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.level,
            float_cell(row.h),
            float_cell(row.l2_error),
            float_cell(row.h1_error),
            rate_cell(row.l2_rate),
            rate_cell(row.h1_rate),
            float_cell(row.stability_ratio),
        ));
    }
    out
}

/// Renders a solve study with one row per refinement level.
pub fn solve_csv(study: &SolveStudy) -> String {
    let mut out = String::from("level,h,H1_error,H1_rate,iterations,residual,energy\n");
    for row in &study.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.level,
            float_cell(row.h),
            float_cell(row.h1_error),
            rate_cell(row.h1_rate),
            row.iterations,
            float_cell(row.residual),
            float_cell(row.energy),
        ));
    }
    out
}

/// One integral term of a coefficient functional.
#[derive(Clone, Debug, Serialize)]
pub struct TermProvenance {
    /// Vertex ids of the simplex the term integrates over.
    pub simplex: Vec<usize>,
    /// Element providing the evaluation side.
    pub context: usize,
    pub weight: f64,
    pub sample_count: usize,
}

/// Where the coefficient of one degree of freedom comes from.
#[derive(Clone, Debug, Serialize)]
pub struct DofProvenance {
    pub dof: usize,
    pub node: usize,
    pub side: usize,
    pub position: Vec<f64>,
    pub on_crack: bool,
    pub on_boundary: bool,
    /// Weights applied to the spanning-tree bridge functionals, empty for
    /// unsplit nodes.
    pub bridge_weights: Vec<f64>,
    pub terms: Vec<TermProvenance>,
}

pub fn dof_provenance(op: &InterpolantOperator) -> Vec<DofProvenance> {
    let table = &op.table;
    (0..table.ndofs())
        .map(|dof| {
            let (node, side) = table.dof_node_side[dof];
            let q = table.q(node);
            let bridge_weights = match &op.node_bridges[node] {
                None => Vec::new(),
                Some(data) => {
                    let ncols = data.tree.len();
                    let as_f64 = |r: &num_rational::Rational64| {
                        *r.numer() as f64 / *r.denom() as f64
                    };
                    if side + 1 < q {
                        data.lambdas[side].iter().map(as_f64).collect()
                    } else {
                        (0..ncols)
                            .map(|t| -data.lambdas.iter().map(|row| as_f64(&row[t])).sum::<f64>())
                            .collect()
                    }
                }
            };
            let terms = op.functionals[dof]
                .terms
                .iter()
                .map(|t| TermProvenance {
                    simplex: t.simplex.clone(),
                    context: t.context,
                    weight: t.weight,
                    sample_count: t.samples.len(),
                })
                .collect();
            DofProvenance {
                dof,
                node,
                side,
                position: table.nodes.nodes[node].position.clone(),
                on_crack: table.on_crack[node],
                on_boundary: table.on_boundary[node],
                bridge_weights,
                terms,
            }
        })
        .collect()
}

/// Crack-side bookkeeping of one split node.
#[derive(Clone, Debug, Serialize)]
pub struct CrackNodeDiagnostic {
    pub node: usize,
    pub position: Vec<f64>,
    pub side_count: usize,
    pub side_sizes: Vec<usize>,
    /// Bridges as (side pair, face vertices, element pair).
    pub bridges: Vec<BridgeDiagnostic>,
    /// Indices into `bridges` forming the spanning tree.
    pub tree: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BridgeDiagnostic {
    pub sides: (usize, usize),
    pub face: Vec<usize>,
    pub elements: (usize, usize),
}

pub fn crack_node_diagnostics(op: &InterpolantOperator) -> Vec<CrackNodeDiagnostic> {
    let table = &op.table;
    (0..table.nodes.nodes.len())
        .filter(|&node| table.on_crack[node])
        .map(|node| {
            let decomp = &table.decompositions[node];
            let (bridges, tree) = match &op.node_bridges[node] {
                None => (Vec::new(), Vec::new()),
                Some(data) => (
                    data.bridges
                        .iter()
                        .map(|b| BridgeDiagnostic {
                            sides: b.sides,
                            face: b.face.vertices().to_vec(),
                            elements: b.elements,
                        })
                        .collect(),
                    data.tree.clone(),
                ),
            };
            CrackNodeDiagnostic {
                node,
                position: table.nodes.nodes[node].position.clone(),
                side_count: decomp.q(),
                side_sizes: decomp.sides.iter().map(Vec::len).collect(),
                bridges,
                tree,
            }
        })
        .collect()
}

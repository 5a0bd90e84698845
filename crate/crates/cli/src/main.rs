//! Command-line harness around the crack-aware interpolation library:
//! geometry generation, mesh validation, single interpolation runs, and
//! refinement studies with CSV reports.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use crackmesh::basis::quadrature::QuadratureRule;
use crackmesh::crack::{region_labels, validate_crack, CrackError, CrackMesh};
use crackmesh::harness::geometry::{generate, GeometryError, GeometryKind, GeometrySpec};
use crackmesh::harness::report::{
    convergence_csv, crack_node_diagnostics, dof_provenance, solve_csv,
};
use crackmesh::harness::study::{interpolation_study, solve_study, StudyError};
use crackmesh::harness::{crack_layout, make_field, FieldSpec};
use crackmesh::interpolant::{
    apply_interpolant, assemble_interpolant, element_affine_maps, max_side_disagreement,
    DiscreteLift, InterpolantError,
};
use crackmesh::mesh::{
    build_topology, parse_mesh, serialize_mesh, shape_regularity, solid_angle_check,
    MeshFileError, ShapeError, SolidAngleError, TopologyError,
};
use crackmesh::norms::{broken_error, discrete_norms, face_l2_jump_error, field_norms};

#[derive(Parser)]
#[command(
    name = "crackmesh",
    about = "Interpolation and Galerkin solves on meshes with an embedded crack",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, clap::Args)]
struct GeometryArgs {
    /// Crack layout: loop, theta, or slit.
    #[arg(long, value_parser = parse_geometry_kind, default_value = "theta")]
    geometry: GeometryKind,
    /// Grid resolution of the base mesh (cells per side).
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Cells between the crack box and the outer boundary, minus one.
    #[arg(long, default_value_t = 1)]
    margin: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a structured cracked mesh and write it as JSON.
    Generate {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a mesh file, reporting topology and crack checks.
    Validate {
        /// Mesh JSON file to check.
        #[arg(long)]
        input: PathBuf,
    },
    /// Interpolate one field and report errors and conformity measures.
    Interpolate {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// Polynomial degree of the interpolation space.
        #[arg(long, default_value_t = 1)]
        p: usize,
        /// Field name, for example jumpy-sine or smooth-3.
        #[arg(long, default_value = "jumpy-sine")]
        function: String,
        /// Write per-dof provenance and crack diagnostics to this JSON file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interpolation errors over a chain of uniform refinements, as CSV.
    Convergence {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long, default_value_t = 1)]
        p: usize,
        /// Number of refinement levels.
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value = "jumpy-sine")]
        function: String,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve prescribed-jump problems over a refinement chain, as CSV.
    Solve {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Jump data field; region-indicator is checked against the exact
        /// solution, other fields against a fine-mesh reference.
        #[arg(long, default_value = "region-indicator")]
        function: String,
        /// Relative conjugate-gradient tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_geometry_kind(s: &str) -> Result<GeometryKind, String> {
    match s {
        "loop" => Ok(GeometryKind::Loop),
        "theta" => Ok(GeometryKind::Theta),
        "slit" => Ok(GeometryKind::Slit),
        other => Err(format!(
            "unknown geometry {other:?}, expected loop, theta, or slit"
        )),
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    MeshFile(#[from] MeshFileError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    SolidAngle(#[from] SolidAngleError),
    #[error(transparent)]
    Crack(#[from] CrackError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Interpolant(#[from] InterpolantError),
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error("unknown field {0:?}")]
    Field(String),
}

impl CliError {
    /// Validation failures of input data exit with 2, everything else 1.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::MeshFile(_)
            | CliError::Topology(_)
            | CliError::Shape(_)
            | CliError::SolidAngle(_)
            | CliError::Crack(_) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Read { .. } => "read",
            CliError::Write { .. } => "write",
            CliError::MeshFile(_) => "mesh-file",
            CliError::Topology(_) => "topology",
            CliError::Shape(_) => "shape",
            CliError::SolidAngle(_) => "solid-angle",
            CliError::Crack(_) => "crack",
            CliError::Geometry(_) => "geometry",
            CliError::Interpolant(_) => "interpolant",
            CliError::Study(_) => "study",
            CliError::Field(_) => "field",
        }
    }
}

fn parse_field(name: &str) -> Result<FieldSpec, CliError> {
    name.parse()
        .map_err(|_| CliError::Field(name.to_string()))
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content).map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn spec_of(args: GeometryArgs) -> GeometrySpec {
    GeometrySpec {
        kind: args.geometry,
        n: args.n,
        margin: args.margin,
    }
}

fn run_generate(args: GeometryArgs, out: Option<PathBuf>) -> Result<(), CliError> {
    let geo = generate(spec_of(args))?;
    let text = serialize_mesh(&geo.mesh, &geo.crack_faces);
    emit(&out, &text)
}

fn run_validate(input: PathBuf) -> Result<(), CliError> {
    let text = fs::read_to_string(&input).map_err(|source| CliError::Read {
        path: input.display().to_string(),
        source,
    })?;
    let file = parse_mesh(&text)?;
    let topo = build_topology(&file.mesh)?;
    let shape = shape_regularity(&file.mesh)?;
    let angles = solid_angle_check(&file.mesh, &topo, &shape)?;
    let crack = CrackMesh::new(file.crack_faces.clone());
    validate_crack(&file.mesh, &topo, &crack)?;
    let regions = region_labels(&file.mesh, &topo, &crack);
    let report = json!({
        "ok": true,
        "dim": file.mesh.dim,
        "vertices": file.mesh.vertices.len(),
        "elements": file.mesh.elements.len(),
        "boundary_faces": topo.boundary_faces.len(),
        "crack_faces": crack.faces.len(),
        "regions": regions.count,
        "shape": { "gamma": shape.gamma, "h_max": shape.h_max },
        "solid_angle": {
            "max_star_size": angles.max_star_size,
            "bound": angles.bound,
        },
    });
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(())
}

fn run_interpolate(
    args: GeometryArgs,
    p: usize,
    function: &str,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let field_spec = parse_field(function)?;
    let geo = generate(spec_of(args))?;
    let layout = crack_layout(&geo);
    let topo = build_topology(&geo.mesh)?;
    let crack = CrackMesh::new(geo.crack_faces.clone());
    let op = assemble_interpolant(&geo.mesh, &topo, &crack, p)?;
    let maps = element_affine_maps(&geo.mesh);
    let field = make_field(field_spec, &layout, &geo.mesh);
    let f = crackmesh::norms::field_function(&field);
    let u = apply_interpolant(&op, &f);

    let rule = QuadratureRule::on_simplex(geo.mesh.dim, 2 * p + 3);
    let face_rule = QuadratureRule::on_simplex(geo.mesh.dim - 1, 2 * p + 3);
    let err = broken_error(&geo.mesh, &op.table, &maps, &u, &field, &rule);
    let stability = discrete_norms(&geo.mesh, &op.table, &maps, &u, &rule).h1()
        / field_norms(&geo.mesh, &field, &rule).h1();
    let lift = DiscreteLift {
        mesh: &geo.mesh,
        table: &op.table,
        maps: &maps,
        u: &u,
    };
    let jump_error = face_l2_jump_error(&geo.mesh, &topo, &crack, &face_rule, &lift, &f);

    let report = json!({
        "geometry": format!("{:?}", args.geometry).to_lowercase(),
        "n": args.n,
        "p": p,
        "function": function,
        "ndofs": op.ndofs(),
        "max_terms_per_dof": op.max_terms_per_dof(),
        "side_disagreement": max_side_disagreement(&op.table, &u),
        "l2_error": err.l2,
        "h1_error": err.h1(),
        "jump_error": jump_error,
        "stability_ratio": stability,
    });
    println!("{}", serde_json::to_string_pretty(&report).unwrap());

    if out.is_some() {
        let dump = json!({
            "dofs": dof_provenance(&op),
            "crack_nodes": crack_node_diagnostics(&op),
        });
        emit(&out, &serde_json::to_string_pretty(&dump).unwrap())?;
    }
    Ok(())
}

fn run_convergence(
    args: GeometryArgs,
    p: usize,
    levels: usize,
    function: &str,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let field_spec = parse_field(function)?;
    let study = interpolation_study(spec_of(args), p, levels, field_spec)?;
    emit(&out, &convergence_csv(&study))
}

fn run_solve(
    args: GeometryArgs,
    p: usize,
    levels: usize,
    function: &str,
    tol: f64,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let field_spec = parse_field(function)?;
    let study = solve_study(spec_of(args), p, levels, field_spec, tol)?;
    emit(&out, &solve_csv(&study))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { geometry, out } => run_generate(geometry, out),
        Command::Validate { input } => run_validate(input),
        Command::Interpolate {
            geometry,
            p,
            function,
            out,
        } => run_interpolate(geometry, p, &function, out),
        Command::Convergence {
            geometry,
            p,
            levels,
            function,
            out,
        } => run_convergence(geometry, p, levels, &function, out),
        Command::Solve {
            geometry,
            p,
            levels,
            function,
            tol,
            out,
        } => run_solve(geometry, p, levels, &function, tol, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let diag = json!({
                "ok": false,
                "error": { "kind": err.kind(), "message": err.to_string() },
            });
            println!("{}", serde_json::to_string_pretty(&diag).unwrap());
            ExitCode::from(err.exit_code())
        }
    }
}

//! wasm-bindgen bindings for the static demo page in `www/`. Every call
//! returns a JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use dfstokes::assembly::{Scheme, SchemeConfig};
use dfstokes::cases::case_2d;
use dfstokes::divfree::{build_divfree_basis_2d, build_divfree_basis_3d, rt0_divergence_matrix};
use dfstokes::driver::solve_level;
use dfstokes::mesh::CellGeometry;
use dfstokes::quadrature::QuadratureRule;
use dfstokes::SimplicialMesh;

const MAX_N: usize = 64;

#[derive(Serialize)]
struct SolveReport {
    scheme: String,
    k: usize,
    delta: i32,
    n: usize,
    h: f64,
    ndofs: usize,
    nnz: usize,
    l2_velocity_error: f64,
    l2_pressure_error: f64,
    h1_pressure_error: f64,
    div_norm: f64,
    grad_ct_norm: f64,
    solve_seconds: f64,
}

#[derive(Serialize)]
struct BasisReport {
    dim: usize,
    n: usize,
    cells: usize,
    facets: usize,
    interior_facets: usize,
    columns: usize,
    max_abs_bs: f64,
}

/// Mesh and per-cell data for drawing.
#[derive(Serialize)]
struct FieldReport {
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    speed: Vec<f64>,
    error: Vec<f64>,
    l2_velocity_error: f64,
}

fn check_n(n: usize) -> Result<(), String> {
    if n == 0 || n > MAX_N {
        return Err(format!("n must be between 1 and {MAX_N}"));
    }
    Ok(())
}

fn config(scheme: &str, k: usize, delta: i32, nu: f64) -> Result<SchemeConfig, String> {
    let scheme: Scheme = scheme.parse().map_err(|e: dfstokes::Error| e.to_string())?;
    let mut cfg = SchemeConfig::new(2, k, delta, scheme);
    cfg.nu = nu;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

pub fn solve_report(
    scheme: &str,
    k: usize,
    delta: i32,
    n: usize,
    nu: f64,
) -> Result<String, String> {
    check_n(n)?;
    let cfg = config(scheme, k, delta, nu)?;
    let mesh = SimplicialMesh::structured_unit(2, n).map_err(|e| e.to_string())?;
    let sol = solve_level(&mesh, &cfg, &case_2d(nu)).map_err(|e| e.to_string())?;
    let report = SolveReport {
        scheme: cfg.scheme.to_string(),
        k,
        delta,
        n,
        h: mesh.h(),
        ndofs: sol.system.ndofs(),
        nnz: sol.system.nnz(),
        l2_velocity_error: sol.l2_velocity_error,
        l2_pressure_error: sol.l2_pressure_error,
        h1_pressure_error: sol.h1_pressure_error,
        div_norm: sol.div_norm,
        grad_ct_norm: sol.grad_ct_norm,
        solve_seconds: sol.solve_seconds,
    };
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

pub fn basis_report(dim: usize, n: usize) -> Result<String, String> {
    check_n(n)?;
    if dim == 3 && n > 8 {
        return Err("3D meshes are limited to n <= 8".into());
    }
    let mesh = SimplicialMesh::structured_unit(dim, n).map_err(|e| e.to_string())?;
    let basis = if dim == 2 {
        build_divfree_basis_2d(&mesh)
    } else {
        build_divfree_basis_3d(&mesh, true)
    }
    .map_err(|e| e.to_string())?;
    let bs = rt0_divergence_matrix(&mesh)
        .matmul(&basis.s)
        .map_err(|e| e.to_string())?;
    let report = BasisReport {
        dim,
        n,
        cells: mesh.num_cells(),
        facets: mesh.num_facets(),
        interior_facets: mesh.num_interior_facets(),
        columns: basis.len(),
        max_abs_bs: bs.max_abs(),
    };
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

pub fn field_report(scheme: &str, k: usize, delta: i32, n: usize) -> Result<String, String> {
    check_n(n)?;
    let cfg = config(scheme, k, delta, 1.0)?;
    let case = case_2d(1.0);
    let mesh = SimplicialMesh::structured_unit(2, n).map_err(|e| e.to_string())?;
    let sol = solve_level(&mesh, &cfg, &case).map_err(|e| e.to_string())?;
    let vs = &sol.space;
    let rule = QuadratureRule::simplex(2, 2 * k + 4);
    let tab = vs.element.tabulate(&rule);
    let area: f64 = rule.weights.iter().sum();
    let mut speed = Vec::with_capacity(mesh.num_cells());
    let mut error = Vec::with_capacity(mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(&mesh, c);
        let vals = vs.eval_cell(&mesh, c, &geo, &sol.velocity, &tab);
        let (mut s, mut e) = (0.0, 0.0);
        for (q, (x, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let u = case.u(&geo.map(x));
            let uh = vals.u[q];
            s += w * uh[0].hypot(uh[1]);
            e += w * ((u[0] - uh[0]).powi(2) + (u[1] - uh[1]).powi(2));
        }
        speed.push(s / area);
        error.push((e / area).sqrt());
    }
    let report = FieldReport {
        vertices: mesh.vertices().iter().map(|p| [p[0], p[1]]).collect(),
        cells: (0..mesh.num_cells())
            .map(|c| {
                let v = mesh.cell(c);
                [v[0], v[1], v[2]]
            })
            .collect(),
        speed,
        error,
        l2_velocity_error: sol.l2_velocity_error,
    };
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

/// Solves the unit-square case and reports errors and system sizes.
#[wasm_bindgen]
pub fn solve(scheme: &str, k: usize, delta: i32, n: usize, nu: f64) -> Result<String, JsError> {
    solve_report(scheme, k, delta, n, nu).map_err(|e| JsError::new(&e))
}

/// Size of the divergence-free RT0 basis on the structured unit mesh.
#[wasm_bindgen]
pub fn divfree_basis(dim: usize, n: usize) -> Result<String, JsError> {
    basis_report(dim, n).map_err(|e| JsError::new(&e))
}

/// Cellwise mean speed and velocity error of a 2D solution.
#[wasm_bindgen]
pub fn velocity_field(scheme: &str, k: usize, delta: i32, n: usize) -> Result<String, JsError> {
    field_report(scheme, k, delta, n).map_err(|e| JsError::new(&e))
}

//! Refinement studies: mesh hierarchy, assembly, boundary lift, solve,
//! pressure and error evaluation per level, and the CSV and plot-data
//! outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;
#[cfg(target_arch = "wasm32")]
use web_time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_rhs, assemble_velocity_operator, compose_dfb_system, compose_full_system,
    compose_reduced_system, AssembledSystem, Operators, Scheme, SchemeConfig,
};
use crate::boundary::{build_lift, BoundaryLift};
use crate::cases::{case_for, ManufacturedCase};
use crate::divfree::{build_divfree_basis_2d, build_divfree_basis_3d};
use crate::error::{Error, Result};
use crate::fespace::VelocitySpace;
use crate::localops::{build_operator_r, build_operator_rperp};
use crate::mesh::SimplicialMesh;
use crate::norms::{eoc, pressure_errors, velocity_l2_error};
use crate::pressure::{eval_discontinuous, reconstruct_pressure, ReconstructedPressure};

/// Column order of the results CSV.
pub const CSV_HEADER: &str = "scheme,d,k,delta,level,h,ndofs,nnz,l2_velocity_error,eoc_velocity,\
l2_pressure_error,eoc_pressure,h1_pressure_error,div_norm,assembly_seconds,solve_seconds,\
bc_seconds,pressure_seconds";

/// One line of the results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scheme: String,
    pub d: usize,
    pub k: usize,
    pub delta: i32,
    pub level: usize,
    pub h: f64,
    pub ndofs: usize,
    pub nnz: usize,
    pub l2_velocity_error: f64,
    pub eoc_velocity: Option<f64>,
    pub l2_pressure_error: f64,
    pub eoc_pressure: Option<f64>,
    pub h1_pressure_error: f64,
    pub div_norm: f64,
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
    pub bc_seconds: f64,
    pub pressure_seconds: f64,
}

/// Configuration of a refinement study.
#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub scheme: SchemeConfig,
    pub levels: usize,
    /// Subdivisions per direction of the coarsest structured mesh.
    pub base_n: usize,
    /// Coarsest mesh read from a file; refined uniformly.
    pub mesh: Option<SimplicialMesh>,
    /// Directory for Matrix Market exports of every system matrix.
    pub export_matrices: Option<PathBuf>,
    /// Write zero timings so that repeated runs give identical output.
    pub record_timings: bool,
}

impl StudyConfig {
    pub fn new(scheme: SchemeConfig, levels: usize) -> Self {
        let base_n = if scheme.dim == 2 { 3 } else { 2 };
        Self {
            scheme,
            levels,
            base_n,
            mesh: None,
            export_matrices: None,
            record_timings: true,
        }
    }

    /// Mesh of level `l` (0 is the coarsest).
    pub fn mesh(&self, level: usize) -> Result<SimplicialMesh> {
        match &self.mesh {
            Some(m) => {
                let mut m = m.clone();
                for _ in 0..level {
                    m = m.refine();
                }
                Ok(m)
            }
            None => SimplicialMesh::structured_unit(self.scheme.dim, self.base_n << level),
        }
    }
}

/// A discrete pressure as produced by the scheme.
#[derive(Clone, Debug)]
pub enum PressureField {
    Reconstructed(ReconstructedPressure),
    /// Cellwise monomials with `np` coefficients per cell.
    Discontinuous {
        coeffs: Vec<f64>,
        np: usize,
    },
}

/// Everything computed on one level.
#[derive(Clone, Debug)]
pub struct LevelSolution {
    pub mesh: SimplicialMesh,
    pub space: VelocitySpace,
    pub system: AssembledSystem,
    pub lift: BoundaryLift,
    /// Composite velocity coefficients.
    pub velocity: Vec<f64>,
    pub pressure: PressureField,
    pub l2_velocity_error: f64,
    pub l2_pressure_error: f64,
    pub h1_pressure_error: f64,
    pub div_norm: f64,
    pub grad_ct_norm: f64,
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
    pub bc_seconds: f64,
    pub pressure_seconds: f64,
}

/// Assembles and solves the configured scheme for a manufactured case.
pub fn solve_level(
    mesh: &SimplicialMesh,
    cfg: &SchemeConfig,
    case: &ManufacturedCase,
) -> Result<LevelSolution> {
    cfg.validate()?;
    if mesh.dim() != cfg.dim || case.dim != cfg.dim {
        return Err(Error::Shape(
            "mesh, case and configuration dimensions differ".into(),
        ));
    }
    let t0 = Instant::now();
    let vs = VelocitySpace::new(mesh, cfg.k)?;
    let a = assemble_velocity_operator(mesh, &vs, cfg)?;
    let b = assemble_rhs(mesh, &vs, cfg.rhs_degree, |x| case.f(x));
    let r = build_operator_r(mesh, &vs)?;
    let rperp = if cfg.scheme == Scheme::Red && cfg.k >= cfg.dim {
        Some(build_operator_rperp(mesh, &vs)?)
    } else {
        None
    };
    let ops = Operators { a, b, r };
    let mut assembly_seconds = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let lift = build_lift(mesh, &vs, &ops.r, rperp.as_ref(), cfg, |x| case.g(x))?;
    let bc_seconds = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let system = match cfg.scheme {
        Scheme::Dfb => {
            let s = if cfg.dim == 2 {
                build_divfree_basis_2d(mesh)?.s
            } else {
                build_divfree_basis_3d(mesh, true)?.s
            };
            compose_dfb_system(&vs, &ops, &s, &lift.composite, cfg)?
        }
        Scheme::Full => compose_full_system(mesh, &vs, &ops, &lift.composite, cfg)?,
        Scheme::Red => compose_reduced_system(mesh, &vs, &ops, rperp.as_ref(), &lift.composite)?,
    };
    assembly_seconds += t2.elapsed().as_secs_f64();

    let t3 = Instant::now();
    let (x, _) = system.solve()?;
    let solve_seconds = t3.elapsed().as_secs_f64();
    let velocity = system.velocity(&x)?;

    let t4 = Instant::now();
    let pressure = match cfg.scheme {
        Scheme::Dfb => PressureField::Reconstructed(reconstruct_pressure(
            mesh,
            &vs,
            &velocity,
            |x| case.f(x),
            cfg.nu,
            cfg.pressure_degree,
            cfg.rhs_degree,
        )?),
        _ => PressureField::Discontinuous {
            coeffs: system.pressure(&x).to_vec(),
            np: system.pressure_per_cell,
        },
    };
    let pressure_seconds = t4.elapsed().as_secs_f64();

    let qdeg = 2 * cfg.k + 4;
    let l2_velocity_error = velocity_l2_error(mesh, &vs, &velocity, qdeg, |x| case.u(x));
    let (l2_pressure_error, h1_pressure_error) = match &pressure {
        PressureField::Reconstructed(p) => pressure_errors(
            mesh,
            qdeg,
            |c, g, x| p.eval(c, g, x),
            |x| case.p(x),
            |x| case.grad_p(x),
        ),
        PressureField::Discontinuous { coeffs, np } => pressure_errors(
            mesh,
            qdeg,
            |c, g, x| eval_discontinuous(&vs, coeffs, *np, c, g, x),
            |x| case.p(x),
            |x| case.grad_p(x),
        ),
    };
    let (div_norm, grad_ct_norm) = vs.divergence_norms(mesh, &velocity);
    Ok(LevelSolution {
        mesh: mesh.clone(),
        space: vs,
        system,
        lift,
        velocity,
        pressure,
        l2_velocity_error,
        l2_pressure_error,
        h1_pressure_error,
        div_norm,
        grad_ct_norm,
        assembly_seconds,
        solve_seconds,
        bc_seconds,
        pressure_seconds,
    })
}

/// Runs all levels of a study on the manufactured case of the configured
/// dimension and viscosity.
pub fn run_study(study: &StudyConfig) -> Result<Vec<RunRecord>> {
    let case = case_for(study.scheme.dim, study.scheme.nu);
    run_study_with(study, &case, |_, _| Ok(()))
}

/// Like [`run_study`] for a given case, calling `inspect` on every level.
pub fn run_study_with<F>(
    study: &StudyConfig,
    case: &ManufacturedCase,
    mut inspect: F,
) -> Result<Vec<RunRecord>>
where
    F: FnMut(usize, &LevelSolution) -> Result<()>,
{
    let cfg = &study.scheme;
    let mut records: Vec<RunRecord> = Vec::with_capacity(study.levels);
    for level in 0..study.levels {
        let mesh = study.mesh(level)?;
        let sol = solve_level(&mesh, cfg, case).map_err(|e| context(e, cfg, level))?;
        if let Some(dir) = &study.export_matrices {
            fs::create_dir_all(dir)?;
            let name = format!(
                "{}_d{}_k{}_delta{:+}_level{}.mtx",
                cfg.scheme, cfg.dim, cfg.k, cfg.delta, level
            );
            fs::write(dir.join(name), sol.system.matrix.to_matrix_market())?;
        }
        let t = |s: f64| if study.record_timings { s } else { 0.0 };
        records.push(RunRecord {
            scheme: cfg.scheme.to_string(),
            d: cfg.dim,
            k: cfg.k,
            delta: cfg.delta,
            level,
            h: mesh.h(),
            ndofs: sol.system.ndofs(),
            nnz: sol.system.nnz(),
            l2_velocity_error: sol.l2_velocity_error,
            eoc_velocity: None,
            l2_pressure_error: sol.l2_pressure_error,
            eoc_pressure: None,
            h1_pressure_error: sol.h1_pressure_error,
            div_norm: sol.div_norm,
            assembly_seconds: t(sol.assembly_seconds),
            solve_seconds: t(sol.solve_seconds),
            bc_seconds: t(sol.bc_seconds),
            pressure_seconds: t(sol.pressure_seconds),
        });
        inspect(level, &sol)?;
    }
    fill_eoc(&mut records);
    Ok(records)
}

fn context(e: Error, cfg: &SchemeConfig, level: usize) -> Error {
    let tag = format!(
        "{} d={} k={} delta={:+} level {level}",
        cfg.scheme, cfg.dim, cfg.k, cfg.delta
    );
    match e {
        Error::Incompatible(m) => Error::Incompatible(format!("{tag}: {m}")),
        Error::Factorization(m) => Error::Factorization(format!("{tag}: {m}")),
        Error::Unsupported(m) => Error::Unsupported(format!("{tag}: {m}")),
        other => other,
    }
}

/// Recomputes the EOC columns from the error columns.
pub fn fill_eoc(records: &mut [RunRecord]) {
    let hs: Vec<f64> = records.iter().map(|r| r.h).collect();
    let ev = eoc(
        &records
            .iter()
            .map(|r| r.l2_velocity_error)
            .collect::<Vec<_>>(),
        &hs,
    );
    let ep = eoc(
        &records
            .iter()
            .map(|r| r.l2_pressure_error)
            .collect::<Vec<_>>(),
        &hs,
    );
    for ((r, v), p) in records.iter_mut().zip(ev).zip(ep) {
        r.eoc_velocity = v;
        r.eoc_pressure = p;
    }
}

pub fn write_csv<W: std::io::Write>(records: &[RunRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(r: R) -> Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

pub fn emit_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Shape("no records to write".into()));
    }
    write_csv(records, fs::File::create(path)?)
}

/// Plot data in gnuplot's block format: for every scheme the `(h, error)`
/// pairs of the velocity and pressure errors, followed by the reference
/// line `h^{k+1}` through the first velocity error.
pub fn plotdata(records: &[RunRecord]) -> String {
    let mut s = String::new();
    let mut groups: Vec<(String, usize, usize, i32)> = Vec::new();
    for r in records {
        let key = (r.scheme.clone(), r.d, r.k, r.delta);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    for (scheme, d, k, delta) in groups {
        let rs: Vec<&RunRecord> = records
            .iter()
            .filter(|r| r.scheme == scheme && r.d == d && r.k == k && r.delta == delta)
            .collect();
        let tag = format!("{scheme} d={d} k={k} delta={delta:+}");
        let _ = writeln!(s, "# {tag} l2_velocity_error");
        for r in &rs {
            let _ = writeln!(s, "{:e} {:e}", r.h, r.l2_velocity_error);
        }
        let _ = writeln!(s, "\n\n# {tag} l2_pressure_error");
        for r in &rs {
            let _ = writeln!(s, "{:e} {:e}", r.h, r.l2_pressure_error);
        }
        let _ = writeln!(s, "\n\n# {tag} reference h^{}", k + 1);
        if let Some(first) = rs.first() {
            let c = first.l2_velocity_error / first.h.powi(k as i32 + 1);
            for r in &rs {
                let _ = writeln!(s, "{:e} {:e}", r.h, c * r.h.powi(k as i32 + 1));
            }
        }
        s.push_str("\n\n");
    }
    s
}

pub fn emit_plotdata(records: &[RunRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Shape("no records to write".into()));
    }
    fs::write(path, plotdata(records))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(level: usize, h: f64, e: f64) -> RunRecord {
        RunRecord {
            scheme: "dfb".into(),
            d: 2,
            k: 2,
            delta: -1,
            level,
            h,
            ndofs: 10,
            nnz: 100,
            l2_velocity_error: e,
            eoc_velocity: None,
            l2_pressure_error: e * 10.0,
            eoc_pressure: None,
            h1_pressure_error: 0.1,
            div_norm: 1e-15,
            assembly_seconds: 0.0,
            solve_seconds: 0.0,
            bc_seconds: 0.0,
            pressure_seconds: 0.0,
        }
    }

    #[test]
    fn csv_header_and_round_trip() {
        let mut recs = vec![
            record(0, 0.5, 0.1),
            record(1, 0.25, 0.0125),
            record(2, 0.125, 1.0 / 3.0 * 1e-3),
        ];
        fill_eoc(&mut recs);
        assert!(recs[0].eoc_velocity.is_none());
        assert!((recs[1].eoc_velocity.unwrap() - 3.0).abs() < 1e-12);
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        // missing EOC values are empty fields
        assert!(text.lines().nth(1).unwrap().contains(",,"));
        assert_eq!(read_csv(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn reference_slope() {
        let recs = vec![record(0, 0.5, 0.1), record(1, 0.25, 0.02)];
        let text = plotdata(&recs);
        let block = text.split("reference h^3").nth(1).unwrap();
        let pts: Vec<(f64, f64)> = block
            .lines()
            .filter_map(|l| {
                let mut it = l.split_whitespace().map(|x| x.parse::<f64>());
                Some((it.next()?.ok()?, it.next()?.ok()?))
            })
            .collect();
        let slope = (pts[0].1 / pts[1].1).ln() / (pts[0].0 / pts[1].0).ln();
        assert!((slope - 3.0).abs() < 1e-12);
        assert!(emit_csv(&[], Path::new("/nonexistent/x.csv")).is_err());
    }

    #[test]
    fn small_study_converges() {
        let cfg = SchemeConfig::new(2, 2, -1, Scheme::Dfb);
        let mut study = StudyConfig::new(cfg, 2);
        study.base_n = 2;
        let recs = run_study(&study).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs[1].l2_velocity_error < recs[0].l2_velocity_error);
        assert!(recs[1].eoc_velocity.is_some());
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use dfstokes::assembly::{
    default_alpha, default_alpha0, BcStrategy, Enrichment, Scheme, SchemeConfig,
};
use dfstokes::driver::{emit_csv, emit_plotdata, run_study, RunRecord, StudyConfig};
use dfstokes::{Error, SimplicialMesh};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Dfb,
    Red,
    Full,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BcArg {
    Stream,
    DarcyGlobal,
    DarcyPatch,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EnrichmentArg {
    Modified,
    Original,
}

/// Refinement studies for Stokes discretisations on simplicial meshes.
#[derive(Debug, Parser)]
#[command(name = "dfstokes", version)]
struct Args {
    /// Space dimension.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
    dim: u8,
    /// Polynomial degree of the continuous velocity.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=4))]
    order: u8,
    /// -1 for the symmetric, +1 for the skew-symmetric variant.
    #[arg(long, default_value = "-1", allow_hyphen_values = true, value_parser = parse_delta)]
    delta: i32,
    #[arg(long, value_enum, default_value = "dfb")]
    scheme: SchemeArg,
    /// Number of refinement levels.
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Viscosity.
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// Bubble stabilisation (default 100 in 2D, 200 in 3D, 300 for k = d = 3).
    #[arg(long)]
    alpha: Option<f64>,
    /// RT0 stabilisation.
    #[arg(long)]
    alpha0: Option<f64>,
    /// Construction of the divergence-free boundary lift (default stream in
    /// 2D, darcy-patch in 3D).
    #[arg(long, value_enum)]
    bc: Option<BcArg>,
    /// Degree of the reconstructed pressure (default: the velocity degree).
    #[arg(long)]
    pressure_degree: Option<usize>,
    /// Coarsest mesh in the ASCII format; refined uniformly per level.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Subdivisions per direction of the coarsest structured mesh.
    #[arg(long)]
    base_n: Option<usize>,
    /// Velocity enrichment of the full scheme for k >= d.
    #[arg(long, value_enum, default_value = "modified")]
    full_enrichment: EnrichmentArg,
    /// Output directory for results.csv and plotdata.dat.
    #[arg(long, default_value = "dfstokes-out")]
    out: PathBuf,
    /// Write every system matrix in Matrix Market format to OUT/matrices.
    #[arg(long)]
    export_matrices: bool,
    /// Write zero timings for reproducible output.
    #[arg(long)]
    no_timings: bool,
}

fn parse_delta(s: &str) -> Result<i32, String> {
    match s {
        "-1" => Ok(-1),
        "1" | "+1" => Ok(1),
        _ => Err(format!("delta must be +1 or -1, got '{s}'")),
    }
}

fn config(args: &Args) -> Result<StudyConfig, Error> {
    let (dim, k) = (args.dim as usize, args.order as usize);
    let scheme = match args.scheme {
        SchemeArg::Dfb => Scheme::Dfb,
        SchemeArg::Red => Scheme::Red,
        SchemeArg::Full => Scheme::Full,
    };
    let mut cfg = SchemeConfig::new(dim, k, args.delta, scheme);
    cfg.nu = args.nu;
    cfg.alpha = args.alpha.unwrap_or(default_alpha(dim, k));
    cfg.alpha0 = args.alpha0.unwrap_or(default_alpha0(dim, k, args.delta));
    if let Some(bc) = args.bc {
        cfg.bc = match bc {
            BcArg::Stream => BcStrategy::Stream,
            BcArg::DarcyGlobal => BcStrategy::DarcyGlobal,
            BcArg::DarcyPatch => BcStrategy::DarcyPatch,
        };
    }
    if let Some(l) = args.pressure_degree {
        cfg.pressure_degree = l;
    }
    cfg.enrichment = match args.full_enrichment {
        EnrichmentArg::Modified => Enrichment::Modified,
        EnrichmentArg::Original => Enrichment::Original,
    };
    cfg.validate()?;
    let mut study = StudyConfig::new(cfg, args.levels);
    if let Some(n) = args.base_n {
        study.base_n = n;
    }
    if let Some(path) = &args.mesh {
        let mesh = SimplicialMesh::read_ascii(&std::fs::read_to_string(path)?)?;
        if mesh.dim() != dim {
            return Err(Error::Parse(format!(
                "mesh is {}D but --dim is {dim}",
                mesh.dim()
            )));
        }
        study.mesh = Some(mesh);
    }
    if args.export_matrices {
        study.export_matrices = Some(args.out.join("matrices"));
    }
    study.record_timings = !args.no_timings;
    Ok(study)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

fn print_table(records: &[RunRecord]) {
    println!(
        "{:>5} {:>10} {:>9} {:>10} {:>11} {:>6} {:>11} {:>6} {:>13} {:>9}",
        "level", "h", "ndofs", "nnz", "|u-uh|", "eoc", "|p-ph|", "eoc", "|grad(p-ph)|", "solve[s]"
    );
    for r in records {
        println!(
            "{:>5} {:>10.4e} {:>9} {:>10} {:>11.4e} {:>6} {:>11.4e} {:>6} {:>13.4e} {:>9.3}",
            r.level,
            r.h,
            r.ndofs,
            r.nnz,
            r.l2_velocity_error,
            fmt_opt(r.eoc_velocity),
            r.l2_pressure_error,
            fmt_opt(r.eoc_pressure),
            r.h1_pressure_error,
            r.solve_seconds
        );
    }
}

fn run(args: &Args) -> Result<(), Error> {
    let study = config(args)?;
    let records = run_study(&study)?;
    std::fs::create_dir_all(&args.out)?;
    emit_csv(&records, &args.out.join("results.csv"))?;
    emit_plotdata(&records, &args.out.join("plotdata.dat"))?;
    print_table(&records);
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            // usage errors exit with 1; code 2 is reserved for incompatible data
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

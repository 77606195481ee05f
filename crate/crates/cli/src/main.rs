//! `numrad` command line: compute the numerical radius of a Matrix Market
//! input by the level-set, cutting-plane, or hybrid solver (or the grid
//! oracle), generate gallery matrices, simulate cut convergence rates, print
//! the disk cost table, and calibrate the hybrid's cost model.
//!
//! Exit codes: 0 on convergence, 2 on non-convergence (the report is still
//! emitted), 1 on input errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use numrad::cutting::{algorithm2, CutOpts};
use numrad::fov::Evaluator;
use numrad::gallery;
use numrad::hybrid::{calibrate, hybrid_solve, CostModel, HybridOpts};
use numrad::levelset::{algorithm1, LevelSetOpts};
use numrad::report::{cut_log_csv, level_trace_csv, SolveReport};
use numrad::theory;
use numrad::{read_matrix_market, write_matrix_market, Error};

/// Environment variable holding a default cost-model path for `compute
/// --method hybrid`.
const COST_MODEL_ENV: &str = "NUMRAD_COST_MODEL";

#[derive(Parser)]
#[command(name = "numrad", version, about = "Numerical radius of complex matrices")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute r(A) for a Matrix Market file.
    Compute(ComputeArgs),
    /// Generate a gallery matrix and write it in Matrix Market format.
    Gallery(GalleryArgs),
    /// Simulate the cut-angle recursions and report Q-linear rates as CSV.
    Rates(RatesArgs),
    /// Supporting-hyperplane counts needed for disk matrices.
    DiskCost(DiskCostArgs),
    /// Time the eigenvalue kernels and emit a cost model as JSON.
    Calibrate(CalibrateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Levelset,
    Cutting,
    Hybrid,
    Oracle,
}

#[derive(Args)]
struct ComputeArgs {
    /// Matrix Market input file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "hybrid")]
    method: Method,
    /// Relative tolerance in (0, 1).
    #[arg(long, default_value_t = 1e-14)]
    tol: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cut budget for the cutting/hybrid methods (default 10 n + 10000).
    #[arg(long)]
    max_cuts: Option<usize>,
    /// Insert only the lambda_max support per eigen-solve.
    #[arg(long)]
    no_dual_cuts: bool,
    /// Level-set method without local optimization (midpoints only).
    #[arg(long)]
    bbbs_only: bool,
    /// Cost model JSON for the hybrid switch (default: $NUMRAD_COST_MODEL,
    /// else calibrate on the fly).
    #[arg(long)]
    cost_model: Option<PathBuf>,
    /// Write the per-iteration trace (cut log or level-set history) as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Crabb,
    DiskModel,
    NearlyDisk,
    TMu,
    Grcar,
    Gear,
    RandomComplex,
    JordanEdge,
}

#[derive(Args)]
struct GalleryArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    n: usize,
    /// Shift of the disk model.
    #[arg(long)]
    s: Option<f64>,
    /// Disk radius of the disk model.
    #[arg(long)]
    r_tilde: Option<f64>,
    /// Normalized curvature for nearly_disk / t_mu.
    #[arg(long)]
    mu: Option<f64>,
    /// Rotation for nearly_disk.
    #[arg(long)]
    phase: Option<f64>,
    /// Gear corner entries (defaults n and -n).
    #[arg(long)]
    i: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    j: Option<i64>,
    /// Seed for the randomized families (required there).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
    phi0: f64,
    #[arg(long, default_value_t = 40)]
    steps: usize,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiskCostArgs {
    /// Relative tolerances; defaults to 1e-4, 1e-8, 1e-12, machine epsilon.
    #[arg(long)]
    tol: Vec<f64>,
    /// Additional "starting with G_j" column.
    #[arg(long)]
    start_j: Option<u64>,
    /// Emit CSV instead of an aligned table.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    samples: usize,
    /// Write the cost model JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage and parse problems are input errors; --help/--version are
            // not.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Compute(args) => compute(args),
        Cmd::Gallery(args) => gallery_cmd(args),
        Cmd::Rates(args) => rates_cmd(args),
        Cmd::DiskCost(args) => disk_cost_cmd(args),
        Cmd::Calibrate(args) => calibrate_cmd(args),
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn compute(args: ComputeArgs) -> Result<ExitCode, Error> {
    if !(args.tol > 0.0 && args.tol < 1.0) {
        return Err(Error::input("tol must lie in (0, 1)"));
    }
    let a = read_matrix_market(&args.input)?;
    let n = a.n();
    let started = Instant::now();

    let method_name = match args.method {
        Method::Levelset => "levelset",
        Method::Cutting => "cutting",
        Method::Hybrid => "hybrid",
        Method::Oracle => "oracle",
    };

    if n == 1 {
        let report = SolveReport::scalar(method_name, a.get(0, 0).norm(), args.tol);
        emit(&report.to_json(), &args.out)?;
        return Ok(ExitCode::from(0));
    }

    let mut trace_csv: Option<String> = None;
    let report = match args.method {
        Method::Levelset => {
            let opts = LevelSetOpts {
                bbbs_only: args.bbbs_only,
                ..LevelSetOpts::new(args.tol)
            };
            let res = algorithm1(&a, &opts)?;
            trace_csv = Some(level_trace_csv(&res.history));
            SolveReport::from_levelset(&res, args.tol, started.elapsed().as_secs_f64())
        }
        Method::Cutting => {
            let mut opts = CutOpts::new(args.tol, n);
            if let Some(m) = args.max_cuts {
                opts.max_cuts = m;
            }
            opts.dual_cuts = !args.no_dual_cuts;
            let res = algorithm2(&a, &opts)?;
            trace_csv = Some(cut_log_csv(&res.log));
            SolveReport::from_cutting(&res, args.tol, started.elapsed().as_secs_f64())
        }
        Method::Hybrid => {
            let mut opts = HybridOpts::new(args.tol, n);
            if let Some(m) = args.max_cuts {
                opts.cut.max_cuts = m;
            }
            opts.cut.dual_cuts = !args.no_dual_cuts;
            opts.model = load_cost_model(&args.cost_model)?;
            let res = hybrid_solve(&a, &opts)?;
            trace_csv = Some(cut_log_csv(&res.cut_log));
            SolveReport::from_hybrid(&res, args.tol, started.elapsed().as_secs_f64())
        }
        Method::Oracle => {
            let ev = Evaluator::new(&a);
            let res = theory::grid_oracle_with(&ev, 720, 60)?;
            SolveReport::from_oracle(
                &res,
                ev.counters.eig_h_count(),
                args.tol,
                started.elapsed().as_secs_f64(),
            )
        }
    };

    if let (Some(path), Some(csv)) = (&args.trace, &trace_csv) {
        std::fs::write(path, csv)?;
    }
    emit(&report.to_json(), &args.out)?;
    Ok(ExitCode::from(if report.converged { 0 } else { 2 }))
}

fn load_cost_model(flag: &Option<PathBuf>) -> Result<Option<CostModel>, Error> {
    if let Some(path) = flag {
        return Ok(Some(CostModel::load(path)?));
    }
    if let Ok(path) = std::env::var(COST_MODEL_ENV) {
        if !path.is_empty() {
            return Ok(Some(CostModel::load(&path)?));
        }
    }
    Ok(None)
}

fn gallery_cmd(args: GalleryArgs) -> Result<ExitCode, Error> {
    let n = args.n;
    let a = match args.family {
        FamilyArg::Crabb => gallery::crabb(n)?,
        FamilyArg::DiskModel => {
            gallery::disk_model(n, args.s.unwrap_or(0.3), args.r_tilde.unwrap_or(0.7))?
        }
        FamilyArg::NearlyDisk => {
            let mu = args
                .mu
                .ok_or_else(|| Error::input("nearly_disk requires --mu"))?;
            gallery::nearly_disk(n, mu, args.phase.unwrap_or(std::f64::consts::FRAC_PI_4))?
        }
        FamilyArg::TMu => {
            let mu = args.mu.ok_or_else(|| Error::input("t_mu requires --mu"))?;
            let seed = args
                .seed
                .ok_or_else(|| Error::input("t_mu requires --seed"))?;
            gallery::t_mu(n, mu, seed)?
        }
        FamilyArg::Grcar => gallery::grcar(n)?,
        FamilyArg::Gear => gallery::gear(
            n,
            args.i.unwrap_or(n as i64),
            args.j.unwrap_or(-(n as i64)),
        )?,
        FamilyArg::RandomComplex => {
            let seed = args
                .seed
                .ok_or_else(|| Error::input("random_complex requires --seed"))?;
            gallery::random_complex(n, seed)?
        }
        FamilyArg::JordanEdge => gallery::jordan_edge()?,
    };
    write_matrix_market(&a, &args.out)?;
    Ok(ExitCode::from(0))
}

fn rates_cmd(args: RatesArgs) -> Result<ExitCode, Error> {
    if !(args.mu > 0.0 && args.mu < 1.0) {
        return Err(Error::input("rates requires mu in (0, 1)"));
    }
    let rates = theory::rates(args.mu)?;
    let uhlig = theory::simulate_uhlig_recursion(args.mu, args.phi0, args.steps)?;
    // Normalized geometry r = 1: shift 1 - mu, disk radius mu.
    let phi0_opt = args.phi0.min(std::f64::consts::FRAC_PI_2 * 0.99);
    let optimal = theory::simulate_optimal_recursion(1.0 - args.mu, args.mu, phi0_opt, args.steps)?;

    let mut csv = String::from(
        "step,phi_uhlig,ratio_uhlig,phi_optimal,ratio_optimal,uhlig_angle_rate,uhlig_modulus_rate,optimal_angle_rate\n",
    );
    for k in 0..uhlig.len() {
        let ratio_u = if k == 0 {
            String::new()
        } else {
            (uhlig[k] / uhlig[k - 1]).to_string()
        };
        let ratio_o = if k == 0 {
            String::new()
        } else {
            (optimal[k] / optimal[k - 1]).to_string()
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            k,
            uhlig[k],
            ratio_u,
            optimal[k],
            ratio_o,
            rates.uhlig_angle_rate,
            rates.uhlig_modulus_rate,
            rates.optimal_angle_rate
        ));
    }
    emit(csv.trim_end(), &args.out)?;
    Ok(ExitCode::from(0))
}

fn disk_cost_cmd(args: DiskCostArgs) -> Result<ExitCode, Error> {
    let tols = if args.tol.is_empty() {
        vec![1e-4, 1e-8, 1e-12, f64::EPSILON]
    } else {
        args.tol.clone()
    };
    // A start polygon that already meets the tolerance needs no refinement.
    let refined = |j: u64, tau: f64| -> Result<u64, Error> {
        if tau >= theory::disk_rel_error(j)? {
            Ok(j)
        } else {
            theory::disk_refined_planes(j, tau)
        }
    };
    let mut rows = Vec::new();
    for &tau in &tols {
        let min = theory::disk_min_planes(tau)?;
        let g3 = refined(3, tau)?;
        let g4 = refined(4, tau)?;
        let extra = match args.start_j {
            Some(j) => Some(refined(j, tau)?),
            None => None,
        };
        rows.push((tau, min, g3, g4, extra));
    }
    let mut out = String::new();
    if args.csv {
        out.push_str("tol,minimum,from_g3,from_g4");
        if args.start_j.is_some() {
            out.push_str(",from_gj");
        }
        out.push('\n');
        for (tau, min, g3, g4, extra) in rows {
            out.push_str(&format!("{tau},{min},{g3},{g4}"));
            if let Some(e) = extra {
                out.push_str(&format!(",{e}"));
            }
            out.push('\n');
        }
    } else {
        out.push_str(&format!(
            "{:>12}  {:>12}  {:>12}  {:>12}",
            "tol", "minimum", "from_g3", "from_g4"
        ));
        if let Some(j) = args.start_j {
            out.push_str(&format!("  {:>12}", format!("from_g{j}")));
        }
        out.push('\n');
        for (tau, min, g3, g4, extra) in rows {
            out.push_str(&format!("{tau:>12.3e}  {min:>12}  {g3:>12}  {g4:>12}"));
            if let Some(e) = extra {
                out.push_str(&format!("  {e:>12}"));
            }
            out.push('\n');
        }
    }
    print!("{out}");
    Ok(ExitCode::from(0))
}

fn calibrate_cmd(args: CalibrateArgs) -> Result<ExitCode, Error> {
    let model = calibrate(args.n, args.samples)?;
    let json = serde_json::to_string_pretty(&model)
        .map_err(|e| Error::input(format!("serialization: {e}")))?;
    emit(&json, &args.out)?;
    Ok(ExitCode::from(0))
}

//! `epl`: experiment front end for the elliptic positivity laboratory.
//!
//! Subcommands: verify-positivity, sweep-alpha, check-inequality,
//! counterexample, hardy, green-bounds. Every run prints a JSON summary to
//! stdout and optionally writes CSV tables to `--out`. Exit codes: 0 success,
//! 2 contract violation (a finding), 1 internal error, 64 usage.

mod config;

use clap::{Parser, Subcommand};
use config::ConfigMap;
use epl_core::error::Error as CoreError;
use epl_core::fundsol::{sphere_measure, WeightEvaluator};
use epl_core::grid::{build_domain, DomainShape, GridDomain};
use epl_core::inequalities::{
    counterexample_suite, generate_test_function, green_sandwich_check, hardy_chain_ratio,
    hardy_ratio, run_inequality_trials, CounterexampleConfig, CutoffSpec, InequalityCase,
    RatioReport, TestFunctionKind, TestFunctionSpec,
};
use epl_core::operators::{OperatorSpec, ScalarDivForm, SolveConfig};
use epl_core::parallel::{default_threads, parallel_map};
use epl_core::positivity::{alpha_threshold_search, min_rayleigh, PunctureSpec};
use epl_core::report::{fmt_f64, trial_seed, CsvTable, ExperimentReport, JsonValue};
use std::path::PathBuf;
use std::sync::Arc;

const EXIT_OK: i32 = 0;
const EXIT_INTERNAL: i32 = 1;
const EXIT_CONTRACT: i32 = 2;
const EXIT_USAGE: i32 = 64;

/// Classification threshold for "nonnegative" minimum eigenvalues.
const SIGN_THRESHOLD: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "epl", version, about = "Weighted positivity and pointwise inequality experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimum eigenvalue of a weighted form at one parameter point.
    VerifyPositivity(VerifyPositivityArgs),
    /// Bisection search for the Lame positivity window in alpha.
    SweepAlpha(SweepAlphaArgs),
    /// Seeded inequality-ratio trials for the three inequality families.
    CheckInequality(CheckInequalityArgs),
    /// Critical-exponent refinement study.
    Counterexample(CounterexampleArgs),
    /// Single or chained Hardy-inequality ratios on random bumps.
    Hardy(HardyArgs),
    /// Empirical two-sided kernel bounds for a discrete Green function.
    GreenBounds(GreenBoundsArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Flat `key = value` config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct VerifyPositivityArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Operator: lame or laplace.
    #[arg(long)]
    op: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Puncture radius in cells.
    #[arg(long)]
    puncture: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    /// Expected sign: nonneg or neg; exit 2 on mismatch.
    #[arg(long)]
    expect: Option<String>,
}

#[derive(clap::Args)]
struct SweepAlphaArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Grid resolution; repeat for a refinement sequence.
    #[arg(long = "grid")]
    grid: Vec<usize>,
    #[arg(long)]
    shape: Option<String>,
    /// Lower bracket "a,b" straddling the lower threshold.
    #[arg(long, allow_hyphen_values = true)]
    bracket_lo: Option<String>,
    /// Upper bracket "a,b" straddling the upper threshold.
    #[arg(long, allow_hyphen_values = true)]
    bracket_hi: Option<String>,
    #[arg(long)]
    tol_alpha: Option<f64>,
    #[arg(long)]
    puncture: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
}

#[derive(clap::Args)]
struct CheckInequalityArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Case: thm1, lame, or higher.
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    /// Coefficient field for thm1: laplace, sin-x1, or scaled.
    #[arg(long)]
    op: Option<String>,
    /// Constant coefficient for --op scaled.
    #[arg(long)]
    coeff: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated shape list: ball,cube,lshape,slitcube.
    #[arg(long, value_delimiter = ',')]
    shapes: Vec<String>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Pass allowance: max ratio must stay below 1 + allowance.
    #[arg(long)]
    allowance: Option<f64>,
}

#[derive(clap::Args)]
struct CounterexampleArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    base_nodes: Option<usize>,
    #[arg(long)]
    plateau: Option<f64>,
    #[arg(long)]
    support: Option<f64>,
}

#[derive(clap::Args)]
struct HardyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// Chain length; 1 runs the single Hardy ratio.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    allowance: Option<f64>,
}

#[derive(clap::Args)]
struct GreenBoundsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Coefficient field: laplace, sin-x1, or scaled.
    #[arg(long)]
    op: Option<String>,
    #[arg(long)]
    coeff: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
}

/// Failure carrying its exit code; messages go to stderr.
enum Failure {
    Usage(String),
    Contract(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Contract(_) => EXIT_CONTRACT,
            Failure::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Contract(m) | Failure::Internal(m) => m,
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Compute-phase core errors: straddle failures are findings, the rest are
/// internal.
fn compute_error(e: CoreError) -> Failure {
    match e {
        CoreError::BracketDoesNotStraddle { .. } => Failure::Contract(e.to_string()),
        other => Failure::Internal(other.to_string()),
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap prints its own help/usage text
            let _ = err.print();
            return if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::VerifyPositivity(args) => cmd_verify_positivity(args),
        Command::SweepAlpha(args) => cmd_sweep_alpha(args),
        Command::CheckInequality(args) => cmd_check_inequality(args),
        Command::Counterexample(args) => cmd_counterexample(args),
        Command::Hardy(args) => cmd_hardy(args),
        Command::GreenBounds(args) => cmd_green_bounds(args),
    };
    match outcome {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("epl: {}", failure.message());
            failure.code()
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<ConfigMap, Failure> {
    match &common.config {
        Some(path) => ConfigMap::load(path).map_err(usage),
        None => Ok(ConfigMap::empty()),
    }
}

fn make_shape(name: &str) -> Result<DomainShape, Failure> {
    match name {
        "ball" => Ok(DomainShape::Ball { radius: 1.0 }),
        "cube" => Ok(DomainShape::Cube { side: 2.0 }),
        "lshape" => Ok(DomainShape::LShape { side: 2.0, notch: 0.5 }),
        "slitcube" => Ok(DomainShape::SlitCube { side: 2.0, slit_width: 0.1 }),
        other => Err(usage(format!(
            "unknown shape {:?} (expected ball, cube, lshape, slitcube)",
            other
        ))),
    }
}

fn check_grid(grid: usize) -> Result<(), Failure> {
    if grid < 5 {
        return Err(usage(format!("grid must have at least 5 nodes per axis, got {}", grid)));
    }
    Ok(())
}

/// Scalar coefficient fields selectable on the command line.
fn scalar_op_factory(
    op_name: &str,
    coeff: f64,
) -> Result<Box<dyn Fn(&Arc<GridDomain>) -> epl_core::Result<OperatorSpec> + Sync>, Failure> {
    match op_name {
        "laplace" => Ok(Box::new(|_| Ok(OperatorSpec::laplacian()))),
        "sin-x1" => Ok(Box::new(|dom| {
            Ok(OperatorSpec::ScalarDivForm(ScalarDivForm::isotropic(
                dom,
                |x| 1.0 + 0.5 * x[0].sin(),
                0.5,
                1.5,
            )?))
        })),
        "scaled" => {
            if !(coeff > 0.0) {
                return Err(usage(format!("--coeff must be positive, got {}", coeff)));
            }
            Ok(Box::new(move |dom| {
                Ok(OperatorSpec::ScalarDivForm(ScalarDivForm::isotropic(
                    dom,
                    move |_| coeff,
                    coeff,
                    coeff,
                )?))
            }))
        }
        other => Err(usage(format!(
            "unknown operator {:?} (expected laplace, sin-x1, scaled)",
            other
        ))),
    }
}

fn write_csv(path: &Option<PathBuf>, table: &CsvTable) -> Result<(), Failure> {
    if let Some(path) = path {
        std::fs::write(path, table.to_csv())
            .map_err(|e| Failure::Internal(format!("cannot write {}: {}", path.display(), e)))?;
    }
    Ok(())
}

fn emit(report: &ExperimentReport) {
    println!("{}", report.to_json());
}

fn cmd_verify_positivity(mut args: VerifyPositivityArgs) -> Result<i32, Failure> {
    let mut cfg = load_config(&args.common)?;
    cfg.fill("op", &mut args.op).map_err(usage)?;
    cfg.fill("alpha", &mut args.alpha).map_err(usage)?;
    cfg.fill("grid", &mut args.grid).map_err(usage)?;
    cfg.fill("shape", &mut args.shape).map_err(usage)?;
    cfg.fill("dim", &mut args.dim).map_err(usage)?;
    cfg.fill("puncture", &mut args.puncture).map_err(usage)?;
    cfg.fill("iters", &mut args.iters).map_err(usage)?;
    cfg.fill("expect", &mut args.expect).map_err(usage)?;
    cfg.finish().map_err(usage)?;

    let op_name = args.op.clone().unwrap_or_else(|| "lame".to_string());
    let grid = args.grid.unwrap_or(17);
    let shape_name = args.shape.clone().unwrap_or_else(|| "ball".to_string());
    let dim = args.dim.unwrap_or(3);
    let puncture = args.puncture.unwrap_or(2);
    let iters = args.iters.unwrap_or(400);

    check_grid(grid)?;
    let shape = make_shape(&shape_name)?;
    if !(3..=7).contains(&dim) {
        return Err(usage(format!("dim must lie in 3..=7, got {}", dim)));
    }
    if puncture == 0 || 2 * puncture + 3 > grid {
        return Err(usage(format!(
            "--puncture must be >= 1 cell and fit a {}-node grid",
            grid
        )));
    }
    if iters == 0 {
        return Err(usage("--iters must be >= 1".to_string()));
    }
    let expect = match args.expect.as_deref() {
        None => None,
        Some("nonneg") => Some(true),
        Some("neg") => Some(false),
        Some(other) => return Err(usage(format!("--expect must be nonneg or neg, got {:?}", other))),
    };
    let (op, weight) = match op_name.as_str() {
        "lame" => {
            if dim != 3 {
                return Err(usage("the Lame system requires --dim 3".to_string()));
            }
            let alpha = args
                .alpha
                .ok_or_else(|| usage("--alpha is required for --op lame".to_string()))?;
            if !(alpha > -1.0) {
                return Err(usage(format!("alpha must exceed -1, got {}", alpha)));
            }
            (
                OperatorSpec::lame(alpha).map_err(|e| usage(e.to_string()))?,
                WeightEvaluator::lame(alpha).map_err(|e| usage(e.to_string()))?,
            )
        }
        "laplace" => (
            OperatorSpec::laplacian(),
            WeightEvaluator::laplace(dim).map_err(|e| usage(e.to_string()))?,
        ),
        other => return Err(usage(format!("unknown operator {:?} (expected lame, laplace)", other))),
    };

    // computation starts here
    let dom = build_domain(&shape, grid, dim).map_err(compute_error)?;
    let punct = PunctureSpec::new(dom.deepest_interior_node(), puncture);
    punct.validate(&dom).map_err(|e| usage(e.to_string()))?;
    let result = min_rayleigh(&op, &weight, &dom, &punct, iters).map_err(compute_error)?;

    let nonneg = result.min_eigenvalue >= -SIGN_THRESHOLD;
    let pass = expect.map_or(true, |e| e == nonneg);

    let mut report = ExperimentReport::new("verify-positivity");
    report.pass = pass;
    report.push("op", JsonValue::Str(op_name.clone()));
    if let Some(alpha) = args.alpha {
        report.push("alpha", JsonValue::Num(alpha));
    }
    report.push("grid", JsonValue::Int(grid as i64));
    report.push("shape", JsonValue::Str(shape_name));
    report.push("puncture", JsonValue::Int(puncture as i64));
    report.push("min_eigenvalue", JsonValue::Num(result.min_eigenvalue));
    report.push("iterations", JsonValue::Int(result.iterations as i64));
    report.push("residual", JsonValue::Num(result.residual));
    report.push(
        "sign",
        JsonValue::Str(if nonneg { "nonneg" } else { "neg" }.into()),
    );
    if let Some(e) = expect {
        report.push(
            "expected",
            JsonValue::Str(if e { "nonneg" } else { "neg" }.into()),
        );
    }
    emit(&report);

    let mut table = CsvTable::new(&["alpha", "min_eig", "grid", "puncture", "iters", "residual"]);
    table.push_row(vec![
        args.alpha.map(fmt_f64).unwrap_or_default(),
        fmt_f64(result.min_eigenvalue),
        grid.to_string(),
        puncture.to_string(),
        result.iterations.to_string(),
        fmt_f64(result.residual),
    ]);
    write_csv(&args.common.out, &table)?;

    Ok(if pass { EXIT_OK } else { EXIT_CONTRACT })
}

fn parse_bracket(text: &str, name: &str) -> Result<(f64, f64), Failure> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(usage(format!("{} must be two comma-separated numbers, got {:?}", name, text)));
    }
    let a: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| usage(format!("{}: unparsable number {:?}", name, parts[0])))?;
    let b: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| usage(format!("{}: unparsable number {:?}", name, parts[1])))?;
    if !(b > a) {
        return Err(usage(format!("{} must be increasing, got ({}, {})", name, a, b)));
    }
    Ok((a, b))
}

fn cmd_sweep_alpha(mut args: SweepAlphaArgs) -> Result<i32, Failure> {
    let mut cfg = load_config(&args.common)?;
    cfg.fill_list("grid", &mut args.grid).map_err(usage)?;
    cfg.fill("shape", &mut args.shape).map_err(usage)?;
    cfg.fill("bracket-lo", &mut args.bracket_lo).map_err(usage)?;
    cfg.fill("bracket-hi", &mut args.bracket_hi).map_err(usage)?;
    cfg.fill("tol-alpha", &mut args.tol_alpha).map_err(usage)?;
    cfg.fill("puncture", &mut args.puncture).map_err(usage)?;
    cfg.fill("iters", &mut args.iters).map_err(usage)?;
    cfg.finish().map_err(usage)?;

    let grids = if args.grid.is_empty() { vec![17] } else { args.grid.clone() };
    let shape_name = args.shape.clone().unwrap_or_else(|| "ball".to_string());
    let bracket_lo = parse_bracket(
        args.bracket_lo.as_deref().unwrap_or("-0.9,0"),
        "--bracket-lo",
    )?;
    let bracket_hi = parse_bracket(args.bracket_hi.as_deref().unwrap_or("1,5"), "--bracket-hi")?;
    let tol_alpha = args.tol_alpha.unwrap_or(0.05);
    let puncture = args.puncture.unwrap_or(2);
    let iters = args.iters.unwrap_or(400);

    for &g in &grids {
        check_grid(g)?;
    }
    let shape = make_shape(&shape_name)?;
    if !(tol_alpha > 0.0) {
        return Err(usage(format!("--tol-alpha must be positive, got {}", tol_alpha)));
    }
    if bracket_lo.0 <= -1.0 || bracket_hi.0 <= -1.0 {
        return Err(usage("brackets must stay above alpha = -1".to_string()));
    }
    if iters == 0 {
        return Err(usage("--iters must be >= 1".to_string()));
    }
    if puncture == 0 || grids.iter().any(|&g| 2 * puncture + 3 > g) {
        return Err(usage("--puncture must be >= 1 cell and fit every grid".to_string()));
    }

    let searches = parallel_map(grids.clone(), default_threads(), |grid| {
        let dom = build_domain(&shape, grid, 3)?;
        let punct = PunctureSpec::new(dom.deepest_interior_node(), puncture);
        punct.validate(&dom)?;
        alpha_threshold_search(&dom, bracket_lo, bracket_hi, tol_alpha, &punct, iters)
    });

    let mut table = CsvTable::new(&["alpha", "min_eig", "grid", "puncture", "iters", "residual"]);
    let mut summary = Vec::new();
    for (grid, search) in grids.iter().zip(searches) {
        let search = search.map_err(compute_error)?;
        for point in &search.evaluations {
            table.push_row(vec![
                fmt_f64(point.alpha),
                fmt_f64(point.min_eig),
                grid.to_string(),
                puncture.to_string(),
                point.iterations.to_string(),
                fmt_f64(point.residual),
            ]);
        }
        let mut obj = JsonValue::obj();
        obj.push("grid", JsonValue::Int(*grid as i64));
        obj.push("alpha_minus", JsonValue::Num(search.alpha_minus));
        obj.push("alpha_plus", JsonValue::Num(search.alpha_plus));
        summary.push(obj);
    }

    let mut report = ExperimentReport::new("sweep-alpha");
    report.push("shape", JsonValue::Str(shape_name));
    report.push("puncture", JsonValue::Int(puncture as i64));
    report.push("tol_alpha", JsonValue::Num(tol_alpha));
    report.push("estimates", JsonValue::Arr(summary));
    emit(&report);
    write_csv(&args.common.out, &table)?;
    Ok(EXIT_OK)
}

fn cmd_check_inequality(mut args: CheckInequalityArgs) -> Result<i32, Failure> {
    let mut cfg = load_config(&args.common)?;
    cfg.fill("case", &mut args.case).map_err(usage)?;
    cfg.fill("n", &mut args.n).map_err(usage)?;
    cfg.fill("s", &mut args.s).map_err(usage)?;
    cfg.fill("q", &mut args.q).map_err(usage)?;
    cfg.fill("alpha", &mut args.alpha).map_err(usage)?;
    cfg.fill("m", &mut args.m).map_err(usage)?;
    cfg.fill("op", &mut args.op).map_err(usage)?;
    cfg.fill("coeff", &mut args.coeff).map_err(usage)?;
    cfg.fill("trials", &mut args.trials).map_err(usage)?;
    cfg.fill_list("shapes", &mut args.shapes).map_err(usage)?;
    cfg.fill("grid", &mut args.grid).map_err(usage)?;
    cfg.fill("seed", &mut args.seed).map_err(usage)?;
    cfg.fill("allowance", &mut args.allowance).map_err(usage)?;
    cfg.finish().map_err(usage)?;

    let case_name = args
        .case
        .clone()
        .ok_or_else(|| usage("--case is required (thm1, lame, higher)".to_string()))?;
    let case = match case_name.as_str() {
        "thm1" => {
            let n = args.n.ok_or_else(|| usage("--n is required for thm1".to_string()))?;
            let s = args.s.ok_or_else(|| usage("--s is required for thm1".to_string()))?;
            InequalityCase::Thm1 { n, s }
        }
        "lame" => {
            let alpha = args
                .alpha
                .ok_or_else(|| usage("--alpha is required for lame".to_string()))?;
            let q = args.q.ok_or_else(|| usage("--q is required for lame".to_string()))?;
            InequalityCase::Lame { alpha, q }
        }
        "higher" => {
            let m = args.m.ok_or_else(|| usage("--m is required for higher".to_string()))?;
            let n = args.n.ok_or_else(|| usage("--n is required for higher".to_string()))?;
            let q = args.q.ok_or_else(|| usage("--q is required for higher".to_string()))?;
            InequalityCase::Higher { m, n, q }
        }
        other => {
            return Err(usage(format!(
                "unknown case {:?} (expected thm1, lame, higher)",
                other
            )))
        }
    };
    // Exponent constraints are usage errors; echo the specific constraint.
    case.validate().map_err(|e| usage(e.to_string()))?;

    let grid = args.grid.unwrap_or(33);
    check_grid(grid)?;
    let trials = args.trials.unwrap_or(50);
    if trials == 0 {
        return Err(usage("--trials must be >= 1".to_string()));
    }
    let seed = args.seed.unwrap_or(0);
    let allowance = args
        .allowance
        .unwrap_or(if case.dim() >= 5 { 0.10 } else { 0.05 });
    let shape_names: Vec<String> = if args.shapes.is_empty() {
        vec!["ball".to_string()]
    } else {
        args.shapes.clone()
    };
    let shapes: Vec<DomainShape> = shape_names
        .iter()
        .map(|s| make_shape(s))
        .collect::<Result<_, _>>()?;

    let op_name = args.op.clone().unwrap_or_else(|| "laplace".to_string());
    let factory: Box<dyn Fn(&Arc<GridDomain>) -> epl_core::Result<OperatorSpec> + Sync> =
        match case {
            InequalityCase::Thm1 { .. } => scalar_op_factory(&op_name, args.coeff.unwrap_or(2.0))?,
            InequalityCase::Lame { alpha, .. } => Box::new(move |_| OperatorSpec::lame(alpha)),
            InequalityCase::Higher { m, .. } => Box::new(move |_| OperatorSpec::polyharmonic(m)),
        };

    let reports = run_inequality_trials(
        &case,
        factory.as_ref(),
        &shapes,
        grid,
        trials,
        seed,
        default_threads(),
    )
    .map_err(compute_error)?;

    let worst = reports
        .iter()
        .max_by(|a, b| a.normalized_ratio.total_cmp(&b.normalized_ratio))
        .expect("at least one trial");
    let max_ratio = worst.normalized_ratio;
    let pass = max_ratio <= 1.0 + allowance;

    let mut table = CsvTable::new(&RatioReport::CSV_HEADER);
    for r in &reports {
        table.push_row(r.csv_row(&case));
    }
    write_csv(&args.common.out, &table)?;

    let mut report = ExperimentReport::new("check-inequality");
    report.pass = pass;
    report.push("case", JsonValue::Str(case_name));
    report.push("op", JsonValue::Str(op_name));
    report.push("grid", JsonValue::Int(grid as i64));
    report.push("trials", JsonValue::Int(trials as i64));
    report.push("seed", JsonValue::Int(seed as i64));
    report.push(
        "shapes",
        JsonValue::Arr(
            shape_names
                .iter()
                .map(|s| JsonValue::Str(s.clone()))
                .collect(),
        ),
    );
    report.push("constant", JsonValue::Num(reports[0].constant));
    report.push("max_normalized_ratio", JsonValue::Num(max_ratio));
    report.push("allowance", JsonValue::Num(allowance));
    report.push("worst_trial", worst.to_json(&case));
    emit(&report);

    Ok(if pass { EXIT_OK } else { EXIT_CONTRACT })
}

fn cmd_counterexample(mut args: CounterexampleArgs) -> Result<i32, Failure> {
    let mut cfg = load_config(&args.common)?;
    cfg.fill("levels", &mut args.levels).map_err(usage)?;
    cfg.fill("base-nodes", &mut args.base_nodes).map_err(usage)?;
    cfg.fill("plateau", &mut args.plateau).map_err(usage)?;
    cfg.fill("support", &mut args.support).map_err(usage)?;
    cfg.finish().map_err(usage)?;

    let suite_cfg = CounterexampleConfig {
        levels: args.levels.unwrap_or(4),
        cutoff: CutoffSpec {
            plateau: args.plateau.unwrap_or(0.5),
            support: args.support.unwrap_or(1.0),
        },
        base_nodes: args.base_nodes.unwrap_or(41),
        ..CounterexampleConfig::default()
    };
    if suite_cfg.levels < 3 {
        return Err(usage(format!(
            "--levels must be >= 3 to exhibit the trend, got {}",
            suite_cfg.levels
        )));
    }
    suite_cfg.cutoff.validate().map_err(|e| usage(e.to_string()))?;

    let report = counterexample_suite(&suite_cfg).map_err(compute_error)?;
    write_csv(&args.common.out, &report.to_csv())?;

    let mut summary = ExperimentReport::new("counterexample");
    summary.pass = report.pass;
    summary.push("levels", JsonValue::Int(report.levels.len() as i64));
    summary.push("critical_monotone", JsonValue::Bool(report.critical_monotone));
    summary.push("critical_growth", JsonValue::Num(report.critical_growth));
    summary.push("du_diffs_shrink", JsonValue::Bool(report.du_diffs_shrink));
    summary.push("lap_diffs_shrink", JsonValue::Bool(report.lap_diffs_shrink));
    summary.push("subcritical_max", JsonValue::Num(report.subcritical_max));
    summary.push("pointwise_bounded", JsonValue::Bool(report.pointwise_bounded));
    summary.push(
        "critical_ratios",
        JsonValue::Arr(
            report
                .levels
                .iter()
                .map(|l| JsonValue::Num(l.critical_ratio))
                .collect(),
        ),
    );
    emit(&summary);
    Ok(if report.pass { EXIT_OK } else { EXIT_CONTRACT })
}

fn cmd_hardy(mut args: HardyArgs) -> Result<i32, Failure> {
    let mut cfg = load_config(&args.common)?;
    cfg.fill("q", &mut args.q).map_err(usage)?;
    cfg.fill("n", &mut args.n).map_err(usage)?;
    cfg.fill("k", &mut args.k).map_err(usage)?;
    cfg.fill("grid", &mut args.grid).map_err(usage)?;
    cfg.fill("shape", &mut args.shape).map_err(usage)?;
    cfg.fill("trials", &mut args.trials).map_err(usage)?;
    cfg.fill("seed", &mut args.seed).map_err(usage)?;
    cfg.fill("allowance", &mut args.allowance).map_err(usage)?;
    cfg.finish().map_err(usage)?;

    let q = args.q.ok_or_else(|| usage("--q is required".to_string()))?;
    let n = args.n.unwrap_or(3);
    let k = args.k.unwrap_or(1);
    let grid = args.grid.unwrap_or(33);
    let shape_name = args.shape.clone().unwrap_or_else(|| "ball".to_string());
    let trials = args.trials.unwrap_or(50);
    let seed = args.seed.unwrap_or(0);
    let allowance = args.allowance.unwrap_or(0.05);

    check_grid(grid)?;
    if !(3..=7).contains(&n) {
        return Err(usage(format!("n must lie in 3..=7, got {}", n)));
    }
    if k == 0 || k > 4 {
        return Err(usage(format!("k must lie in 1..=4, got {}", k)));
    }
    if !(q >= 1.0) || k as f64 * q >= n as f64 {
        return Err(usage(format!(
            "Hardy exponents need 1 <= q and k q < n, got q = {}, k = {}, n = {}",
            q, k, n
        )));
    }
    if trials == 0 {
        return Err(usage("--trials must be >= 1".to_string()));
    }
    let shape = make_shape(&shape_name)?;

    let dom = build_domain(&shape, grid, n).map_err(compute_error)?;
    let center = dom.deepest_interior_node();
    let seeds: Vec<u64> = (0..trials).map(|t| trial_seed(seed, t as u64)).collect();
    let ratios = parallel_map(seeds.clone(), default_threads(), |trial| {
        let u = generate_test_function(
            &dom,
            &TestFunctionSpec {
                kind: TestFunctionKind::SumOfBumps,
                seed: trial,
                count: 3,
                components: 1,
                smoothness: if k > 1 { 2 + k } else { 3 },
            },
        )?;
        if k == 1 {
            hardy_ratio(&u, center, q)
        } else {
            hardy_chain_ratio(&u, center, q, k)
        }
    });

    let mut table = CsvTable::new(&["kind", "n", "q", "k", "grid", "shape", "seed", "ratio"]);
    let mut max_ratio = 0.0f64;
    for (trial, ratio) in seeds.iter().zip(ratios) {
        let ratio = ratio.map_err(compute_error)?;
        max_ratio = max_ratio.max(ratio);
        table.push_row(vec![
            if k == 1 { "hardy" } else { "hardy-chain" }.to_string(),
            n.to_string(),
            fmt_f64(q),
            k.to_string(),
            grid.to_string(),
            shape_name.clone(),
            trial.to_string(),
            fmt_f64(ratio),
        ]);
    }
    write_csv(&args.common.out, &table)?;

    let pass = max_ratio <= 1.0 + allowance;
    let mut report = ExperimentReport::new("hardy");
    report.pass = pass;
    report.push("n", JsonValue::Int(n as i64));
    report.push("q", JsonValue::Num(q));
    report.push("k", JsonValue::Int(k as i64));
    report.push("grid", JsonValue::Int(grid as i64));
    report.push("shape", JsonValue::Str(shape_name));
    report.push("trials", JsonValue::Int(trials as i64));
    report.push("seed", JsonValue::Int(seed as i64));
    report.push("max_ratio", JsonValue::Num(max_ratio));
    report.push("allowance", JsonValue::Num(allowance));
    emit(&report);
    Ok(if pass { EXIT_OK } else { EXIT_CONTRACT })
}

fn cmd_green_bounds(mut args: GreenBoundsArgs) -> Result<i32, Failure> {
    let mut cfg = load_config(&args.common)?;
    cfg.fill("op", &mut args.op).map_err(usage)?;
    cfg.fill("coeff", &mut args.coeff).map_err(usage)?;
    cfg.fill("grid", &mut args.grid).map_err(usage)?;
    cfg.fill("shape", &mut args.shape).map_err(usage)?;
    cfg.fill("dim", &mut args.dim).map_err(usage)?;
    cfg.finish().map_err(usage)?;

    let op_name = args.op.clone().unwrap_or_else(|| "laplace".to_string());
    let grid = args.grid.unwrap_or(33);
    let shape_name = args.shape.clone().unwrap_or_else(|| "ball".to_string());
    let dim = args.dim.unwrap_or(3);

    check_grid(grid)?;
    if !(3..=7).contains(&dim) {
        return Err(usage(format!("dim must lie in 3..=7, got {}", dim)));
    }
    let shape = make_shape(&shape_name)?;
    let factory = scalar_op_factory(&op_name, args.coeff.unwrap_or(2.0))?;

    let dom = build_domain(&shape, grid, dim).map_err(compute_error)?;
    let op = factory(&dom).map_err(compute_error)?;
    let y0 = dom.deepest_interior_node();
    let (c1, c2) =
        green_sandwich_check(&op, &dom, y0, &SolveConfig::default()).map_err(compute_error)?;

    // For the plain Laplacian the discrete kernel must stay under the
    // free-space amplitude with 10% headroom.
    let free_space = 1.0 / ((dim as f64 - 2.0) * sphere_measure(dim));
    let upper_bound = if op_name == "laplace" {
        Some(1.1 * free_space)
    } else {
        None
    };
    let pass = c1 > 0.0 && upper_bound.map_or(true, |b| c2 <= b);

    let mut report = ExperimentReport::new("green-bounds");
    report.pass = pass;
    report.push("op", JsonValue::Str(op_name));
    report.push("grid", JsonValue::Int(grid as i64));
    report.push("shape", JsonValue::Str(shape_name.clone()));
    report.push("dim", JsonValue::Int(dim as i64));
    report.push("c1_emp", JsonValue::Num(c1));
    report.push("c2_emp", JsonValue::Num(c2));
    report.push("free_space_amplitude", JsonValue::Num(free_space));
    if let Some(b) = upper_bound {
        report.push("upper_bound", JsonValue::Num(b));
    }
    emit(&report);

    let mut table = CsvTable::new(&["grid", "shape", "dim", "c1_emp", "c2_emp"]);
    table.push_row(vec![
        grid.to_string(),
        shape_name,
        dim.to_string(),
        fmt_f64(c1),
        fmt_f64(c2),
    ]);
    write_csv(&args.common.out, &table)?;

    Ok(if pass { EXIT_OK } else { EXIT_CONTRACT })
}

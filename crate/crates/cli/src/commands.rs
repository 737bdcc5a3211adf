use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dp_core::instance::random_instance;
use dp_core::verify::uniform_grid;
use dp_core::{
    analyze, closed_form_report, cross_verify, curve_by_sweep, curve_by_vertices, estimator_at, tv_distance,
    wasserstein1, CurveReport, DpError, Distribution, Form, GroundMetric, Matrix, Problem, SweepOptions,
    Tolerances, VerifyOptions,
};
use serde_json::{json, Value};

use crate::json::{self as jsonfmt, sig17};
use crate::problem_file::{InputError, ProblemFile};
use crate::render;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Input = 1,
    Solver = 2,
    Budget = 3,
    Verification = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
    /// Report to print on standard output despite the failure.
    pub stdout: String,
}

impl CliError {
    fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), stdout: String::new() }
    }

    fn input(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Input, message)
    }
}

fn exit_code_of(e: &DpError) -> ExitCode {
    match e {
        DpError::Lp(_) | DpError::Internal(_) | DpError::NoFeasibleGridPoint(_) => ExitCode::Solver,
        DpError::BudgetExceeded(_) => ExitCode::Budget,
        _ => ExitCode::Input,
    }
}

impl From<DpError> for CliError {
    fn from(e: DpError) -> Self {
        Self::new(exit_code_of(&e), e.to_string())
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        let code = match &e {
            InputError::Problem(inner) => exit_code_of(inner),
            _ => ExitCode::Input,
        };
        Self::new(code, e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "dp",
    version,
    about = "Distortion-perception curves of finite-alphabet channels",
    after_help = "Problem files are JSON objects with row-major 2-D arrays: `p_xy` (joint pmf, \
                  rows indexed by x, columns by y), optional `distortion` (n_x x n_x, default \
                  Hamming), optional `metric` (n_x x n_x ground metric in [0, 1], default \
                  Hamming), and optional `name` and `seed` metadata.\n\n\
                  Exit codes: 0 ok, 1 input error, 2 solver error, 3 budget exceeded, \
                  4 verification failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the program at a single perception level.
    Solve(SolveArgs),
    /// Compute the whole curve D(P).
    Curve(CurveArgs),
    /// Closed-form analysis of a binary-source instance.
    Binary(BinaryArgs),
    /// Write a reproducible random problem file.
    Gen(GenArgs),
    /// Cross-check all applicable methods against each other.
    Verify(VerifyArgs),
    /// Wasserstein-1 distance between two pmfs.
    W1(W1Args),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Problem file.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Acceptance tolerance for reported checks (duality gap, curve
    /// continuity, cross-method agreement).
    #[arg(long, value_name = "FLOAT", default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, value_name = "PATH")]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Ot,
    Tv,
}

impl From<FormArg> for Form {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Ot => Form::Ot,
            FormArg::Tv => Form::Tv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Vertex,
    Sweep,
    ClosedForm,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Perception level.
    #[arg(long = "P", value_name = "FLOAT")]
    pub p: f64,
    #[arg(long, value_enum, default_value = "ot")]
    pub form: FormArg,
    /// Estimator matrix q(x_hat | y) as CSV.
    #[arg(long, value_name = "PATH")]
    pub out_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "sweep")]
    pub method: MethodArg,
    /// Program form used by the sweep.
    #[arg(long, value_enum, default_value = "ot")]
    pub form: FormArg,
    /// Extra uniform probe levels for the sweep.
    #[arg(long, value_name = "N")]
    pub grid: Option<usize>,
    /// 201-point sample of D(P) on [0, 1].
    #[arg(long, value_name = "PATH")]
    pub out_csv: Option<PathBuf>,
    /// Plot of D(P) with breakpoints marked.
    #[arg(long, value_name = "PATH")]
    pub out_svg: Option<PathBuf>,
    /// Scatter of the projected dual points with their convex hull.
    #[arg(long, value_name = "PATH")]
    pub out_s2_svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BinaryArgs {
    #[command(flatten)]
    pub common: Common,
    /// Also report the estimator at this level.
    #[arg(long = "P", value_name = "FLOAT")]
    pub p: Option<f64>,
    #[arg(long, value_name = "PATH")]
    pub out_csv: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out_svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "N")]
    pub nx: usize,
    #[arg(long, value_name = "N")]
    pub ny: usize,
    /// Draw a uniform random distortion matrix instead of Hamming.
    #[arg(long)]
    pub random_distortion: bool,
    /// Destination; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of uniformly spaced perception levels in [0, 1].
    #[arg(long, value_name = "N", default_value_t = 11)]
    pub grid: usize,
    /// Steps per axis of the brute-force grid oracle; 0 disables it.
    #[arg(long, value_name = "N", default_value_t = 200)]
    pub grid_steps: usize,
    /// Perturb the sweep values to exercise the failure path.
    #[arg(long)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct W1Args {
    /// First pmf, comma separated.
    #[arg(long, value_name = "LIST", value_delimiter = ',', required = true)]
    pub p: Vec<f64>,
    /// Second pmf, comma separated.
    #[arg(long, value_name = "LIST", value_delimiter = ',', required = true)]
    pub q: Vec<f64>,
    /// Take the ground metric from this problem file instead of Hamming.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "FLOAT", default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, value_name = "PATH")]
    pub out_json: Option<PathBuf>,
}

/// Runs one command, returning what to print on standard output.
pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Solve(a) => solve(&a),
        Command::Curve(a) => curve(&a),
        Command::Binary(a) => binary(&a),
        Command::Gen(a) => gen(&a),
        Command::Verify(a) => verify(&a),
        Command::W1(a) => w1(&a),
    }
}

fn check_tol(tol: f64) -> CliResult<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(CliError::input(format!("--tol must be a positive number, got {tol}")))
    }
}

fn load(common: &Common) -> CliResult<(ProblemFile, Problem)> {
    check_tol(common.tol)?;
    let file = ProblemFile::load(&common.input)?;
    let problem = file.problem()?;
    Ok((file, problem))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn tolerances_json(t: &Tolerances, tol: f64) -> Value {
    json!({
        "validation": t.validation,
        "stochastic": t.stochastic,
        "equality": t.equality,
        "tol": tol,
    })
}

fn tolerances_line(t: &Tolerances, tol: f64) -> String {
    format!(
        "tolerances: validation={:e} stochastic={:e} equality={:e} tol={:e}\n",
        t.validation, t.stochastic, t.equality, tol
    )
}

fn rows(m: &Matrix) -> Value {
    json!(m.to_rows())
}

fn matrix_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(|&v| sig17(v)).collect();
        writeln!(out, "{}", line.join(",")).unwrap();
    }
    out
}

fn solve(a: &SolveArgs) -> CliResult<String> {
    let (file, problem) = load(&a.common)?;
    let rep = dp_core::solve_dp_at(&problem, a.p, a.form.into())?;
    let perception = problem.perception(&rep.estimator)?;
    if rep.gap > a.common.tol {
        return Err(CliError::new(
            ExitCode::Solver,
            format!("duality gap {} exceeds --tol {}", sig17(rep.gap), a.common.tol),
        ));
    }
    let tol = problem.tolerances();
    let mut out = String::new();
    writeln!(out, "instance: {}", file.label()).unwrap();
    writeln!(out, "P = {}", sig17(a.p)).unwrap();
    writeln!(out, "D(P) = {}", sig17(rep.value)).unwrap();
    writeln!(out, "duality gap = {}", sig17(rep.gap)).unwrap();
    writeln!(out, "estimator perception = {}", sig17(perception)).unwrap();
    writeln!(out, "D* = {}", sig17(problem.d_star())).unwrap();
    writeln!(out, "form = {:?}", rep.form).unwrap();
    out.push_str(&tolerances_line(tol, a.common.tol));
    if let Some(path) = &a.common.out_json {
        let doc = json!({
            "instance": file.label(),
            "P": a.p,
            "value": rep.value,
            "gap": rep.gap,
            "form": rep.form,
            "iterations": rep.iterations,
            "d_star": problem.d_star(),
            "estimator": rows(rep.estimator.matrix()),
            "estimator_perception": perception,
            "coupling": rows(rep.coupling.matrix()),
            "dual": {
                "w": rep.dual.w,
                "r": rep.dual.r,
                "nu": rep.dual.nu,
                "l": rep.dual.l,
                "objective": rep.dual.objective,
            },
            "tolerances": tolerances_json(tol, a.common.tol),
        });
        write_file(path, &jsonfmt::to_string(&doc))?;
    }
    if let Some(path) = &a.out_csv {
        write_file(path, &matrix_csv(rep.estimator.matrix()))?;
    }
    Ok(out)
}

fn estimators_json(report: &CurveReport) -> Value {
    Value::Array(
        report
            .estimators
            .iter()
            .map(|e| {
                json!({
                    "P": e.p_level,
                    "deterministic": e.estimator.is_deterministic(),
                    "q": rows(e.estimator.matrix()),
                })
            })
            .collect(),
    )
}

fn curve_json(file: &ProblemFile, problem: &Problem, report: &CurveReport, tol: f64) -> Value {
    let c = &report.curve;
    let check = c.check();
    json!({
        "instance": file.label(),
        "method": report.method,
        "breakpoints": c.breakpoints(),
        "slopes": c.slopes(),
        "p_star": c.p_star(),
        "d_star": c.d_star(),
        "segments": c.segments().iter().map(|s| json!({"intercept": s.intercept, "slope": s.slope})).collect::<Vec<_>>(),
        "estimators": estimators_json(report),
        "s2_points": report.s2_points.iter().map(|p| [p.p0, p.p1]).collect::<Vec<_>>(),
        "hull_extremes": report.hull_extremes,
        "solves": report.solves,
        "check": {
            "slopes_nonpositive": check.slopes_nonpositive,
            "slopes_nondecreasing": check.slopes_nondecreasing,
            "breakpoints_increasing": check.breakpoints_increasing,
            "max_continuity_gap": check.max_continuity_gap,
            "plateau_is_d_star": check.plateau_is_d_star,
            "p_star_in_unit_interval": check.p_star_in_unit_interval,
        },
        "tolerances": tolerances_json(problem.tolerances(), tol),
    })
}

fn curve_summary(file: &ProblemFile, problem: &Problem, report: &CurveReport, tol: f64) -> String {
    let c = &report.curve;
    let mut out = String::new();
    writeln!(out, "instance: {}", file.label()).unwrap();
    writeln!(out, "method = {:?}, LP solves = {}", report.method, report.solves).unwrap();
    writeln!(out, "D(0) = {}", sig17(c.value(0.0))).unwrap();
    writeln!(out, "D* = {} reached at P* = {}", sig17(c.d_star()), sig17(c.p_star())).unwrap();
    writeln!(out, "breakpoints ({}):", c.breakpoints().len()).unwrap();
    for (i, b) in c.breakpoints().iter().enumerate() {
        writeln!(out, "  P = {}  slope to the left = {}", sig17(*b), sig17(c.segments()[i].slope)).unwrap();
    }
    out.push_str(&tolerances_line(problem.tolerances(), tol));
    out
}

fn write_curve_outputs(
    file: &ProblemFile,
    problem: &Problem,
    report: &CurveReport,
    tol: f64,
    out_json: Option<&Path>,
    out_csv: Option<&Path>,
    out_svg: Option<&Path>,
) -> CliResult<()> {
    if let Some(path) = out_json {
        write_file(path, &jsonfmt::to_string(&curve_json(file, problem, report, tol)))?;
    }
    if let Some(path) = out_csv {
        write_file(path, &render::curve_csv(&report.curve))?;
    }
    if let Some(path) = out_svg {
        write_file(path, &render::curve_svg(&report.curve, &format!("D(P): {}", file.label())))?;
    }
    Ok(())
}

fn curve(a: &CurveArgs) -> CliResult<String> {
    let (file, problem) = load(&a.common)?;
    let report = match a.method {
        MethodArg::Vertex => curve_by_vertices(&problem).map_err(|e| match e {
            DpError::BudgetExceeded(msg) => {
                CliError::new(ExitCode::Budget, format!("budget exceeded: {msg}; rerun with --method sweep"))
            }
            other => other.into(),
        })?,
        MethodArg::Sweep => {
            let opts = SweepOptions {
                grid: a.grid.map(uniform_grid).unwrap_or_default(),
                form: a.form.into(),
                ..Default::default()
            };
            curve_by_sweep(&problem, &opts)?
        }
        MethodArg::ClosedForm => closed_form_report(&problem)?,
    };
    let check = report.curve.check();
    if !check.ok(a.common.tol) {
        return Err(CliError::new(ExitCode::Solver, format!("curve failed its structural check: {check:?}")));
    }
    write_curve_outputs(
        &file,
        &problem,
        &report,
        a.common.tol,
        a.common.out_json.as_deref(),
        a.out_csv.as_deref(),
        a.out_svg.as_deref(),
    )?;
    if let Some(path) = &a.out_s2_svg {
        if report.s2_points.is_empty() {
            return Err(CliError::input("no projected dual points to plot"));
        }
        write_file(path, &render::s2_svg(&report, &format!("projected dual points: {}", file.label())))?;
    }
    Ok(curve_summary(&file, &problem, &report, a.common.tol))
}

fn binary(a: &BinaryArgs) -> CliResult<String> {
    let (file, problem) = load(&a.common)?;
    let analysis = analyze(&problem)?;
    let report = closed_form_report(&problem)?;
    let mut out = curve_summary(&file, &problem, &report, a.common.tol);
    writeln!(out, "case = {:?}", analysis.case).unwrap();
    let u: Vec<String> = analysis.u.iter().map(|&v| sig17(v)).collect();
    writeln!(out, "u = [{}]", u.join(", ")).unwrap();
    let at = match a.p {
        Some(p) => {
            let q = estimator_at(&problem, &analysis, p)?;
            let value = problem.expected_distortion(&q)?;
            writeln!(out, "estimator at P = {}: D = {}", sig17(p), sig17(value)).unwrap();
            for r in 0..q.n_x() {
                let row: Vec<String> = q.matrix().row(r).iter().map(|&v| sig17(v)).collect();
                writeln!(out, "  [{}]", row.join(", ")).unwrap();
            }
            Some((p, q, value))
        }
        None => None,
    };
    if let Some(path) = &a.common.out_json {
        let mut doc = curve_json(&file, &problem, &report, a.common.tol);
        doc["case"] = json!(analysis.case);
        doc["u"] = json!(analysis.u);
        doc["order"] = json!(analysis.order);
        if let Some((p, q, value)) = &at {
            doc["estimator_at"] = json!({ "P": p, "value": value, "q": rows(q.matrix()) });
        }
        write_file(path, &jsonfmt::to_string(&doc))?;
    }
    write_curve_outputs(&file, &problem, &report, a.common.tol, None, a.out_csv.as_deref(), a.out_svg.as_deref())?;
    Ok(out)
}

fn gen(a: &GenArgs) -> CliResult<String> {
    let instance = random_instance(a.seed, a.nx, a.ny, a.random_distortion)?;
    let file = ProblemFile::from_instance(&instance, a.seed);
    file.problem().map_err(|e| CliError::new(ExitCode::Solver, format!("generated instance is invalid: {e}")))?;
    let text = file.to_json();
    match &a.out_json {
        Some(path) => {
            write_file(path, &text)?;
            Ok(format!("wrote {} to {}\n", file.label(), path.display()))
        }
        None => Ok(text),
    }
}

fn verify(a: &VerifyArgs) -> CliResult<String> {
    let (file, problem) = load(&a.common)?;
    if a.grid < 2 {
        return Err(CliError::input("--grid needs at least 2 levels"));
    }
    let opts = VerifyOptions {
        exact_tol: a.common.tol,
        grid_steps: (a.grid_steps > 0).then_some(a.grid_steps),
        inject_fault: a.inject_fault,
        ..Default::default()
    };
    let mut report = cross_verify(&problem, &uniform_grid(a.grid), &opts)?;
    report.instance = file.label();
    let mut out = String::new();
    writeln!(out, "instance: {}", report.instance).unwrap();
    writeln!(out, "methods: {}", report.methods.join(", ")).unwrap();
    for s in &report.skipped {
        writeln!(out, "skipped: {s}").unwrap();
    }
    writeln!(out, "{:>8} {:>22} {:>12} {:>6}", "P", "D(P)", "discrepancy", "").unwrap();
    for r in &report.rows {
        writeln!(
            out,
            "{:>8.4} {:>22} {:>12.3e} {:>6}",
            r.p,
            sig17(r.lp),
            r.discrepancy,
            if r.pass { "ok" } else { "FAIL" }
        )
        .unwrap();
    }
    for f in &report.failures {
        writeln!(out, "failure: {f}").unwrap();
    }
    writeln!(out, "max discrepancy = {:e} (tolerance {:e})", report.max_discrepancy, report.tolerance).unwrap();
    out.push_str(&tolerances_line(problem.tolerances(), a.common.tol));
    writeln!(out, "{}", if report.pass { "PASS" } else { "FAIL" }).unwrap();
    if let Some(path) = &a.common.out_json {
        let mut doc = serde_json::to_value(&report).map_err(|e| CliError::new(ExitCode::Solver, e.to_string()))?;
        doc["tolerances"] = tolerances_json(problem.tolerances(), a.common.tol);
        write_file(path, &jsonfmt::to_string(&doc))?;
    }
    if report.pass {
        Ok(out)
    } else {
        let failing = report.rows.iter().filter(|r| !r.pass).count();
        let message = format!("verification failed at {failing} of {} levels", report.rows.len());
        Err(CliError { code: ExitCode::Verification, message, stdout: out })
    }
}

fn w1(a: &W1Args) -> CliResult<String> {
    check_tol(a.tol)?;
    let tol = Tolerances::default();
    let p = Distribution::with_tolerances(a.p.clone(), &tol).map_err(|e| CliError::input(format!("--p: {e}")))?;
    let q = Distribution::with_tolerances(a.q.clone(), &tol).map_err(|e| CliError::input(format!("--q: {e}")))?;
    if p.len() != q.len() {
        return Err(CliError::input(format!("--p has {} entries but --q has {}", p.len(), q.len())));
    }
    let metric = match &a.input {
        Some(path) => ProblemFile::load(path)?.problem()?.metric().clone(),
        None => GroundMetric::hamming(p.len()),
    };
    if metric.n() != p.len() {
        return Err(CliError::input(format!(
            "metric is {0}x{0} but the pmfs have {1} entries",
            metric.n(),
            p.len()
        )));
    }
    let (value, coupling) = wasserstein1(&p, &q, &metric)?;
    let tv = metric.is_hamming().then(|| tv_distance(&p, &q)).transpose()?;
    let mut out = format!("W1 = {}\n", sig17(value));
    if let Some(tv) = tv {
        writeln!(out, "TV = {}", sig17(tv)).unwrap();
        if (tv - value).abs() > a.tol {
            return Err(CliError { code: ExitCode::Verification, message: "W1 and TV differ by more than --tol".into(), stdout: out });
        }
    }
    out.push_str(&tolerances_line(&tol, a.tol));
    if let Some(path) = &a.out_json {
        let doc = json!({
            "w1": value,
            "tv": tv,
            "coupling": rows(coupling.matrix()),
            "tolerances": tolerances_json(&tol, a.tol),
        });
        write_file(path, &jsonfmt::to_string(&doc))?;
    }
    Ok(out)
}

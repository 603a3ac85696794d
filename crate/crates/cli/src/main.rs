//! `luxloc`: existence certificates, solves and figure data from JSON
//! problem files.
//!
//! Exit codes:
//!
//! | code | meaning                                                            |
//! |------|--------------------------------------------------------------------|
//! | 0    | success: certified / converged and verified / strict inclusion     |
//! | 1    | a hypothesis, condition or verification verdict failed             |
//! | 2    | unreadable input, schema violation or invalid parameters           |
//! | 3    | `solve` did not converge within `--max-iter`                       |
//! | 4    | numerical failure while evaluating the operator                    |

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use luxloc::existence::{self, AnnulusReport};
use luxloc::expr::Expression;
use luxloc::greens::ConeConstants;
use luxloc::nonlocal::{self, WitnessParams};
use luxloc::problem::{parse_problem, Problem};
use luxloc::report::{canonical_value, to_canonical};
use luxloc::solver;
use luxloc::vexp::{luxemburg_norm, modular, ExponentField, GridFunction};

const OK: u8 = 0;
const VERDICT: u8 = 1;
const INPUT: u8 = 2;
const NO_CONVERGENCE: u8 = 3;
const NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "luxloc", version, about = "Luxemburg-norm existence certificates for nonlocal Kirchhoff-type BVPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Override the problem's q.
    #[arg(long)]
    q: Option<f64>,
    /// Override the number of grid nodes.
    #[arg(long)]
    grid_nodes: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check hypotheses and both conditions; print the annulus report.
    Check {
        problem: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Luxemburg-norm tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Also evaluate this many log-spaced q values.
        #[arg(long)]
        sweep: Option<usize>,
        /// Write the report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find a fixed point numerically and verify it against the certificate.
    Solve {
        problem: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Fixed-point residual tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 5000)]
        max_iter: usize,
        /// Write the solution here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solution file as JSON (nodes, values, diagnostics).
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        /// Solution file as CSV (t, u); the default.
        #[arg(long)]
        csv: bool,
    },
    /// Luxemburg norm of sampled data in a given exponent.
    Norm {
        /// CSV with columns t, u (header optional).
        samples: PathBuf,
        /// Exponent expression in t, or a file containing one.
        exponent: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Height, radius and threshold comparison rows for the figures.
    Figures {
        problem: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        #[arg(long)]
        csv: bool,
    },
    /// Build the strict-inclusion witness and report both cone verdicts.
    Witness {
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long = "c0", default_value_t = 0.5)]
        c0: f64,
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        /// Support measure; defaults to the middle of the admissible range.
        #[arg(long)]
        m: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        xi0: f64,
        #[arg(long, default_value_t = 0.01)]
        ramp_width: f64,
        /// Plateau constant of the cone used for the verdicts.
        #[arg(long, default_value_t = 1.0)]
        eta0: f64,
        #[arg(long)]
        grid_nodes: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl std::fmt::Display) -> Self {
        Failure { code: INPUT, message: message.to_string() }
    }

    fn numerical(message: impl std::fmt::Display) -> Self {
        Failure { code: NUMERICAL, message: message.to_string() }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { problem, overrides, tol, sweep, out } => cmd_check(&problem, &overrides, tol, sweep, out.as_deref()),
        Command::Solve { problem, overrides, tol, max_iter, out, json, csv: _ } => {
            cmd_solve(&problem, &overrides, tol, max_iter, out.as_deref(), json)
        }
        Command::Norm { samples, exponent, tol, json } => cmd_norm(&samples, &exponent, tol, json),
        Command::Figures { problem, overrides, out, json, csv: _ } => cmd_figures(&problem, &overrides, out.as_deref(), json),
        Command::Witness { p, c0, alpha, beta, m, xi0, ramp_width, eta0, grid_nodes, out } => {
            let m = m.unwrap_or_else(|| WitnessParams::centred_m(p, c0, alpha, beta));
            let wp = WitnessParams { p_const: p, c0, alpha, beta, m, xi0, ramp_width };
            cmd_witness(&wp, eta0, grid_nodes, out.as_deref())
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("luxloc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() {
    let Ok(v) = std::env::var("LUXLOC_THREADS") else { return };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("luxloc: LUXLOC_THREADS ignored: {e}");
            }
        }
        _ => eprintln!("luxloc: LUXLOC_THREADS = {v:?} is not a positive integer; ignored"),
    }
}

fn load(path: &Path, overrides: &Overrides) -> Result<Problem, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let mut problem = parse_problem(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    if let Some(q) = overrides.q {
        problem.spec.q = q;
    }
    if let Some(n) = overrides.grid_nodes {
        problem.spec.grid_nodes = n;
    }
    problem.spec.validate().map_err(Failure::input)?;
    Ok(problem)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    print!("{text}");
    if let Some(path) = out {
        fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn json_of<T: serde::Serialize>(v: &T) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(Failure::numerical)
}

fn check_report(problem: &Problem) -> Result<AnnulusReport, Failure> {
    existence::check(&problem.spec).map_err(Failure::numerical)
}

fn report_failures(report: &AnnulusReport) {
    for item in report.hypotheses.failures() {
        eprintln!("luxloc: hypothesis {} fails: {}", item.id, item.detail);
    }
    for (name, c) in [("(1)", &report.cond1), ("(2)", &report.cond2)] {
        if let Some(c) = c {
            if !c.pass {
                eprintln!("luxloc: condition {name} fails: lhs {:?}, rhs {}", c.lhs, c.rhs);
            }
        }
    }
}

fn cmd_check(path: &Path, overrides: &Overrides, tol: Option<f64>, sweep: Option<usize>, out: Option<&Path>) -> Outcome {
    let mut problem = load(path, overrides)?;
    if let Some(t) = tol {
        problem.spec.tolerances.norm = t;
        problem.spec.validate().map_err(Failure::input)?;
    }
    let report = check_report(&problem)?;
    let mut value = json_of(&report)?;
    if let Some(n) = sweep.or(problem.sweep) {
        if n == 0 {
            return Err(Failure::input("--sweep needs at least one value"));
        }
        let s = existence::q_sweep(&problem.spec, n).map_err(Failure::numerical)?;
        value["q_sweep"] = json_of(&s)?;
    }
    emit(&canonical_value(&value), out)?;
    if report.certified {
        Ok(OK)
    } else {
        report_failures(&report);
        Ok(VERDICT)
    }
}

fn cmd_solve(path: &Path, overrides: &Overrides, tol: Option<f64>, max_iter: usize, out: Option<&Path>, json: bool) -> Outcome {
    let problem = load(path, overrides)?;
    let spec = &problem.spec;
    let tol = tol.unwrap_or(spec.tolerances.solve);
    if tol.is_nan() || tol <= 0.0 {
        return Err(Failure::input(format!("--tol = {tol} must be positive")));
    }
    let report = check_report(&problem)?;
    let (u, diag) = solver::solve(spec, None, tol, max_iter).map_err(Failure::numerical)?;
    let verification = if diag.converged {
        Some(solver::verify_solution(&u, spec, &report).map_err(Failure::numerical)?)
    } else {
        None
    };
    let record = solver::SolutionRecord {
        nodes: u.nodes(),
        values: u.values(),
        diagnostics: &diag,
        verification: verification.as_ref(),
    };
    if let Some(path) = out {
        let text = if json { to_canonical(&record).map_err(Failure::numerical)? } else { solver::solution_csv(&u) };
        fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    }
    let summary = json!({
        "certified": report.certified,
        "diagnostics": json_of(&diag)?,
        "verification": json_of(&verification)?,
    });
    print!("{}", canonical_value(&summary));
    if !diag.converged {
        eprintln!(
            "luxloc: no convergence after {} iterations; residual history: {:?}",
            diag.iterations, diag.residual_history
        );
        return Ok(NO_CONVERGENCE);
    }
    let v = verification.expect("verified when converged");
    if v.pass {
        Ok(OK)
    } else {
        for (name, c) in [
            ("(a) Phi range", &v.phi_in_range),
            ("(b) cone", &v.cone_check),
            ("(c) annulus", &v.norm_in_annulus),
            ("(d) residual", &v.residual_check),
            ("(e) boundary", &v.boundary_check),
        ] {
            if !c.pass {
                eprintln!("luxloc: verification {name} fails: {}", c.detail);
            }
        }
        Ok(VERDICT)
    }
}

fn read_samples(path: &Path) -> Result<GridFunction, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let (mut nodes, mut values) = (Vec::new(), Vec::new());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        if rec.len() != 2 {
            return Err(Failure::input(format!("{}: row {} has {} columns, expected 2", path.display(), i + 1, rec.len())));
        }
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => {
                nodes.push(v[0]);
                values.push(v[1]);
            }
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Failure::input(format!("{}: row {}: {e}", path.display(), i + 1))),
        }
    }
    GridFunction::new(nodes, values).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn cmd_norm(samples: &Path, exponent: &str, tol: f64, json: bool) -> Outcome {
    let u = read_samples(samples)?;
    let source = if Path::new(exponent).is_file() {
        fs::read_to_string(exponent).map_err(|e| Failure::input(format!("{exponent}: {e}")))?
    } else {
        exponent.to_string()
    };
    let expr = Expression::parse(source.trim()).map_err(Failure::input)?;
    let p = ExponentField::from_expr(&expr, None).map_err(Failure::input)?;
    let norm = luxemburg_norm(&u, &p, tol).map_err(Failure::input)?;
    if json {
        let rho = modular(&u, &p).map_err(Failure::numerical)?;
        let v = json!({
            "norm": norm,
            "modular": rho,
            "exponent": expr.source(),
            "nodes": u.nodes().len(),
        });
        print!("{}", canonical_value(&v));
    } else {
        println!("{norm:.16e}");
    }
    Ok(OK)
}

fn cmd_figures(path: &Path, overrides: &Overrides, out: Option<&Path>, json: bool) -> Outcome {
    let problem = load(path, overrides)?;
    let report = check_report(&problem)?;
    let Some(cmp) = &report.comparison else {
        report_failures(&report);
        return Err(Failure { code: VERDICT, message: "no comparison data: the hypotheses fail".into() });
    };
    let text = if json {
        to_canonical(&cmp.figures).map_err(Failure::numerical)?
    } else {
        let mut s = String::from("figure,quantity,old,new,improvement_percent\n");
        for r in &cmp.figures {
            s.push_str(&format!("{},{},{},{},{}\n", r.figure, r.quantity, r.old, r.new, r.improvement_percent));
        }
        s
    };
    emit(&text, out)?;
    Ok(OK)
}

fn cmd_witness(wp: &WitnessParams, eta0: f64, grid_nodes: Option<usize>, out: Option<&Path>) -> Outcome {
    let shape = nonlocal::witness_shape(wp).map_err(Failure::input)?;
    let w = match grid_nodes {
        Some(n) => nonlocal::build_witness_on(wp, n),
        None => nonlocal::build_witness(wp),
    }
    .map_err(Failure::input)?;
    let cc = ConeConstants::new(wp.alpha, wp.beta, eta0, wp.c0).map_err(Failure::input)?;
    let p = ExponentField::constant(wp.p_const).map_err(Failure::input)?;
    let hybrid = nonlocal::in_hybrid_cone(&w, &cc, &p).map_err(Failure::numerical)?;
    let sup = nonlocal::in_sup_cone(&w, &cc);
    let strict = hybrid.member && !sup.member;
    let v = json!({
        "params": json_of(wp)?,
        "cone_constants": json_of(&cc)?,
        "shape": json_of(&shape)?,
        "hybrid": json_of(&hybrid)?,
        "sup": json_of(&sup)?,
        "sup_coercivity_over_xi0": sup.coercivity / wp.xi0,
        "strict_inclusion": strict,
    });
    emit(&canonical_value(&v), out)?;
    Ok(if strict { OK } else { VERDICT })
}

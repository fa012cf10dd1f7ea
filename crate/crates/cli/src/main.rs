//! `delab`: batch driver for solves, exponent estimates, gamma tables,
//! oracle dumps and small-delta families. Every run writes its outputs plus a
//! `manifest.json` naming them with their SHA-256 digests.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use delab_core::grid::{make_grid, Grid, ScalarField};
use delab_core::operators::{DegeneracySpec, EllipticityParams, OperatorSpec, ScalarFn};
use delab_core::oracle::{self, ExactSolution};
use delab_core::regularity::{dyadic_decay, exponent_vs_gamma_table, table_to_csv};
use delab_core::solver::{
    interior_c1_distance, sc_limit_family, solve_dirichlet, ProblemSpec, SolveConfig,
};
use delab_core::Error;

#[derive(Parser, Debug)]
#[command(name = "delab", version, about = "Degenerate elliptic solver and regularity lab")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Directory receiving all output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Seed for randomized checks; recorded in the manifest.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Residual sup-norm target (default 1e-6 in 1D, 1e-5 in 2D).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Smallest regularization; the default schedule is cut to end here.
    #[arg(long, global = true)]
    eps_min: Option<f64>,
    /// Sweep budget per regularization stage.
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Solver settings as `key=value` lines; flags override the file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a Dirichlet problem and write solution.csv.
    Solve(SolveArgs),
    /// Measure the dyadic decay exponent of a field and write decay.json.
    Estimate(EstimateArgs),
    /// Exponent against gamma for the radial problem; writes table.csv.
    Table(TableArgs),
    /// Dump a closed-form solution to field.csv.
    Oracle(OracleArgs),
    /// Solve the small-delta family and write sclimit.csv.
    Sclimit(SclimitArgs),
}

#[derive(Args, Debug, Clone)]
struct SolveArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    gamma: f64,
    /// trace | pucci-minus | pucci-plus
    #[arg(long, default_value = "trace")]
    op: String,
    /// Pucci ellipticity constants.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    big_lambda: f64,
    /// Right-hand side, `const:<v>`.
    #[arg(long, default_value = "const:1")]
    f: String,
    /// Boundary data, `oracle:<name>` or `const:<v>`.
    #[arg(long, default_value = "oracle:radial")]
    bc: String,
    /// Exponent for the p-radial oracle.
    #[arg(long, default_value_t = 3.0)]
    p: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 65)]
    n: usize,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    lo: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    hi: f64,
}

#[derive(Args, Debug, Clone)]
struct EstimateArgs {
    /// Field CSV to analyse.
    #[arg(long = "in")]
    input: PathBuf,
    /// Comma-separated center; defaults to the grid center.
    #[arg(long, allow_hyphen_values = true)]
    center: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    rho0: f64,
    /// Number of dyadic levels after the first.
    #[arg(long = "K", default_value_t = 6)]
    k: usize,
}

#[derive(Args, Debug, Clone)]
struct TableArgs {
    /// Comma-separated gamma list.
    #[arg(long, default_value = "0.5,1,2,3")]
    gammas: String,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 129)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    rho0: f64,
    /// Levels; by default the finest ball keeps a radius of at least 2h.
    #[arg(long = "K")]
    k: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct OracleArgs {
    /// ode | radial | aronsson | p-radial | radial_plus_smooth
    #[arg(long)]
    name: String,
    #[arg(long, default_value_t = 129)]
    n: usize,
    /// Dimension; aronsson is always 2D and ode always 1D.
    #[arg(long = "d", alias = "dim")]
    d: Option<usize>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    gamma: f64,
    #[arg(long, default_value_t = 3.0)]
    p: f64,
    /// Also report the residual of the defining equation on the grid.
    #[arg(long)]
    check: bool,
}

#[derive(Args, Debug, Clone)]
struct SclimitArgs {
    /// Strictly decreasing comma-separated deltas.
    #[arg(long, default_value = "0.4,0.2,0.1,0.05")]
    deltas: String,
    /// Right-hand side `g`, `const:<v>`.
    #[arg(long, default_value = "const:1")]
    g: String,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 65)]
    n: usize,
    /// Radius of the interior ball for the C1 distance.
    #[arg(long, default_value_t = 0.8)]
    radius: f64,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ConvergenceFailure(d) => Failure::Numerical(format!(
                "no convergence after {} sweeps (residual {:.3e}); diagnostics: {}",
                d.total_iterations(),
                d.final_residual,
                serde_json::to_string(&*d).unwrap_or_default()
            )),
            e @ (Error::NumericalBlowup { .. } | Error::Shooting(_)) => Failure::Numerical(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Usage(msg.into()))
}

fn parse_const(spec: &str, what: &str) -> Outcome<f64> {
    match spec.split_once(':') {
        Some(("const", v)) => v
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map_or_else(|| usage(format!("{what}: bad constant '{v}'")), Ok),
        _ => usage(format!("{what}: expected const:<value>, got '{spec}'")),
    }
}

fn parse_list(s: &str, what: &str) -> Outcome<Vec<f64>> {
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    let mut out = Vec::with_capacity(items.len());
    for t in items {
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ => return usage(format!("{what}: bad number '{t}'")),
        }
    }
    Ok(out)
}

fn oracle_for(name: &str, gamma: f64, dim: usize, p: f64) -> Outcome<ExactSolution> {
    let o = oracle::by_name(name, gamma, dim, p)?;
    if o.dim != dim {
        return usage(format!("oracle '{name}' is {}-dimensional, grid is {dim}-dimensional", o.dim));
    }
    Ok(o)
}

fn boundary_source(spec: &str, gamma: f64, dim: usize, p: f64) -> Outcome<ScalarFn> {
    match spec.split_once(':') {
        Some(("oracle", name)) => {
            let o = oracle_for(name, gamma, dim, p)?;
            Ok(Arc::new(move |x: &[f64]| o.eval(x)))
        }
        Some(("const", _)) => {
            let c = parse_const(spec, "--bc")?;
            Ok(Arc::new(move |_: &[f64]| c))
        }
        _ => usage(format!("--bc: expected oracle:<name> or const:<value>, got '{spec}'")),
    }
}

fn solver_config(global: &Global, dim: usize) -> Outcome<SolveConfig> {
    let mut cfg = SolveConfig::default_for_dim(dim);
    if let Some(path) = &global.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        cfg = SolveConfig::from_kv_str(&text, cfg)?;
    }
    if let Some(t) = global.tol {
        cfg.tol = t;
    }
    if let Some(m) = global.max_iters {
        cfg.max_iters = m;
    }
    if let Some(e) = global.eps_min {
        if !(e > 0.0) {
            return usage(format!("--eps-min must be positive, got {e}"));
        }
        cfg = cfg.with_eps_min(e);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn grid(dim: usize, n: usize, lo: f64, hi: f64) -> Outcome<Grid> {
    Ok(make_grid(dim, n, lo, hi)?)
}

/// Largest `K` with `rho0^K >= 2h`.
fn default_levels(g: &Grid, rho0: f64) -> usize {
    let mut k = 0;
    while rho0.powi(k as i32 + 1) >= 2.0 * g.h() * (1.0 - 1e-12) {
        k += 1;
    }
    k
}

struct Run {
    command: &'static str,
    out_dir: PathBuf,
    seed: u64,
    params: Value,
    outputs: Vec<Value>,
    start: Instant,
}

impl Run {
    fn new(command: &'static str, global: &Global, params: Value) -> Outcome<Self> {
        fs::create_dir_all(&global.out_dir).map_err(|e| {
            Failure::Usage(format!("cannot create {}: {e}", global.out_dir.display()))
        })?;
        Ok(Self {
            command,
            out_dir: global.out_dir.clone(),
            seed: global.seed,
            params,
            outputs: Vec::new(),
            start: Instant::now(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Outcome<()> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(json!({
            "file": name,
            "sha256": hex::encode(Sha256::digest(contents.as_bytes())),
        }));
        Ok(())
    }

    /// The determinism hash covers everything except the wall-clock time.
    fn finish(self, status: &str, diagnostics: Value) -> Outcome<()> {
        let stable = json!({
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "outputs": self.outputs,
            "status": status,
            "diagnostics": diagnostics,
        });
        let digest = hex::encode(Sha256::digest(stable.to_string().as_bytes()));
        let mut manifest = stable;
        manifest["determinism_hash"] = json!(digest);
        manifest["wall_clock_seconds"] = json!(self.start.elapsed().as_secs_f64());
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = self.out_dir.join("manifest.json");
        fs::write(&path, text + "\n")
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
    }
}

fn config_json(cfg: &SolveConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn cmd_solve(global: &Global, a: &SolveArgs) -> Outcome<()> {
    if !(a.gamma >= 0.0) {
        return usage(format!("--gamma must be >= 0, got {}", a.gamma));
    }
    let g = grid(a.dim, a.n, a.lo, a.hi)?;
    let operator = match a.op.as_str() {
        "trace" => OperatorSpec::Trace,
        "pucci-minus" | "pucci-plus" => {
            eprintln!("note: Pucci solves use a non-monotone stencil and are experimental");
            let p = EllipticityParams::new(a.lambda, a.big_lambda)?;
            if a.op == "pucci-minus" {
                OperatorSpec::PucciMinus(p)
            } else {
                OperatorSpec::PucciPlus(p)
            }
        }
        other => return usage(format!("--op: unknown operator '{other}'")),
    };
    let f = parse_const(&a.f, "--f")?;
    let problem = ProblemSpec {
        operator,
        degeneracy: DegeneracySpec::pure_power(a.gamma)?,
        rhs: Arc::new(move |_: &[f64]| f),
        boundary: boundary_source(&a.bc, a.gamma, a.dim, a.p)?,
        domain: g,
    };
    let cfg = solver_config(global, a.dim)?;
    let params = json!({
        "gamma": a.gamma, "op": a.op, "lambda": a.lambda, "big_lambda": a.big_lambda,
        "f": a.f, "bc": a.bc, "p": a.p, "dim": a.dim, "n": a.n, "lo": a.lo, "hi": a.hi,
        "solver": config_json(&cfg),
    });
    let mut run = Run::new("solve", global, params)?;
    match solve_dirichlet(&problem, &cfg) {
        Ok((u, diag)) => {
            run.write("solution.csv", &u.to_csv_string())?;
            println!(
                "converged: residual {:.3e} after {} sweeps",
                diag.final_residual,
                diag.total_iterations()
            );
            run.finish("ok", serde_json::to_value(&diag).expect("diagnostics serialize"))
        }
        Err(Error::ConvergenceFailure(diag)) => {
            let d = serde_json::to_value(&*diag).expect("diagnostics serialize");
            run.finish("convergence_failure", d)?;
            Err(Error::ConvergenceFailure(diag).into())
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_estimate(global: &Global, a: &EstimateArgs) -> Outcome<()> {
    let text = fs::read_to_string(&a.input)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", a.input.display())))?;
    let u = ScalarField::from_csv_str(&text)?;
    let center = match &a.center {
        Some(c) => parse_list(c, "--center")?,
        None => u.grid().center().to_vec(),
    };
    let report = dyadic_decay(&u, &center, a.rho0, a.k)?;
    let params = json!({
        "input": a.input.display().to_string(),
        "input_sha256": hex::encode(Sha256::digest(text.as_bytes())),
        "center": center, "rho0": a.rho0, "K": a.k,
    });
    let mut run = Run::new("estimate", global, params)?;
    run.write("decay.json", &(report.to_json() + "\n"))?;
    match report.alpha_hat {
        Some(alpha) => println!("alpha_hat = {alpha:.6}"),
        None => println!("saturated: field is affine to round-off"),
    }
    run.finish("ok", json!({ "flags": report.flags }))
}

fn cmd_table(global: &Global, a: &TableArgs) -> Outcome<()> {
    let gammas = parse_list(&a.gammas, "--gammas")?;
    if gammas.is_empty() {
        return usage("--gammas: the list is empty");
    }
    if let Some(bad) = gammas.iter().find(|g| **g < 0.0) {
        return usage(format!("--gammas: gamma must be >= 0, got {bad}"));
    }
    let g = grid(a.dim, a.n, -1.0, 1.0)?;
    let k = a.k.unwrap_or_else(|| default_levels(&g, a.rho0));
    let cfg = solver_config(global, a.dim)?;
    let rows = exponent_vs_gamma_table(&gammas, &cfg, g, a.rho0, k)?;
    let params = json!({
        "gammas": gammas, "dim": a.dim, "n": a.n, "rho0": a.rho0, "K": k,
        "solver": config_json(&cfg),
    });
    let mut run = Run::new("table", global, params)?;
    run.write("table.csv", &table_to_csv(&rows))?;
    let ok = rows.iter().filter(|r| r.alpha_hat.is_some()).count();
    for r in &rows {
        match (r.alpha_hat, &r.error) {
            (Some(al), _) => println!("gamma {:<6} alpha_hat {al:.4} theory {:.4}", r.gamma, r.alpha_theory),
            (None, e) => println!("gamma {:<6} failed: {}", r.gamma, e.as_deref().unwrap_or("unknown")),
        }
    }
    let status = if ok > 0 { "ok" } else { "all_rows_failed" };
    run.finish(status, json!({ "rows_ok": ok, "rows": rows.len() }))?;
    if ok == 0 {
        return Err(Failure::Numerical("every row failed".into()));
    }
    Ok(())
}

fn cmd_oracle(global: &Global, a: &OracleArgs) -> Outcome<()> {
    let dim = match (a.name.as_str(), a.d) {
        ("aronsson", None) => 2,
        ("ode", None) => 1,
        (_, Some(d)) => d,
        (_, None) => 2,
    };
    let o = oracle_for(&a.name, a.gamma, dim, a.p)?;
    let g = grid(dim, a.n, -1.0, 1.0)?;
    let field = o.sample(&g)?;
    let mut diagnostics = json!({});
    if a.check {
        if !o.has_equation() {
            return usage(format!("oracle '{}' has no residual to check", a.name));
        }
        // stay two cells away from the singular set, where jets blow up
        let mut worst = 0.0_f64;
        let mut count = 0usize;
        for i in 0..g.len() {
            let x = g.coord(i);
            if o.singular.distance(&x) <= 2.0 * g.h() {
                continue;
            }
            if let Some(r) = o.residual(&x) {
                worst = worst.max(r.abs());
                count += 1;
            }
        }
        println!("max residual {worst:.3e} over {count} grid points");
        diagnostics = json!({ "max_residual": worst, "points": count });
        if !(worst <= 1e-10) {
            let params = json!({ "name": a.name, "n": a.n, "d": dim, "gamma": a.gamma, "p": a.p, "check": a.check });
            Run::new("oracle", global, params)?.finish("residual_check_failed", diagnostics)?;
            return Err(Failure::Numerical(format!("residual {worst:.3e} exceeds 1e-10")));
        }
    }
    let params = json!({ "name": a.name, "n": a.n, "d": dim, "gamma": a.gamma, "p": a.p, "check": a.check });
    let mut run = Run::new("oracle", global, params)?;
    run.write("field.csv", &field.to_csv_string())?;
    run.finish("ok", diagnostics)
}

fn cmd_sclimit(global: &Global, a: &SclimitArgs) -> Outcome<()> {
    let deltas = parse_list(&a.deltas, "--deltas")?;
    if deltas.is_empty() {
        return usage("--deltas: the list is empty");
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) || deltas.iter().any(|d| *d < 0.0) {
        return usage(format!("--deltas must be nonnegative and strictly decreasing, got {deltas:?}"));
    }
    let gval = parse_const(&a.g, "--g")?;
    let gr = grid(a.dim, a.n, -1.0, 1.0)?;
    let exact = oracle::radial_profile(0.0, a.dim)?;
    let boundary: ScalarFn = Arc::new(move |x: &[f64]| exact.eval(x));
    let cfg = solver_config(global, a.dim)?;
    let members = sc_limit_family(
        &OperatorSpec::Trace,
        Arc::new(move |_: &[f64]| gval),
        &deltas,
        gr,
        boundary,
        &cfg,
    )?;
    let center = gr.center();
    let mut csv = String::from("delta,c1_distance,solver_residual,error\n");
    let mut prev: Option<&ScalarField> = None;
    let mut ok = 0;
    for m in &members {
        match &m.result {
            Ok((u, diag)) => {
                ok += 1;
                let dist = match prev {
                    Some(p) => format!("{:.16e}", interior_c1_distance(p, u, &center, a.radius)?),
                    None => String::new(),
                };
                csv.push_str(&format!("{:.16e},{dist},{:.16e},\n", m.delta, diag.final_residual));
                prev = Some(u);
            }
            Err(e) => {
                csv.push_str(&format!("{:.16e},,,{}\n", m.delta, e.to_string().replace([',', '\n'], ";")));
                prev = None;
            }
        }
    }
    let params = json!({
        "deltas": deltas, "g": a.g, "dim": a.dim, "n": a.n, "radius": a.radius,
        "boundary": "oracle:radial (gamma = 0)", "solver": config_json(&cfg),
    });
    let mut run = Run::new("sclimit", global, params)?;
    run.write("sclimit.csv", &csv)?;
    print!("{csv}");
    run.finish(if ok > 0 { "ok" } else { "all_members_failed" }, json!({ "members_ok": ok }))?;
    if ok == 0 {
        return Err(Failure::Numerical("every member failed".into()));
    }
    Ok(())
}

fn run(cli: &Cli) -> Outcome<()> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(&cli.global, a),
        Command::Estimate(a) => cmd_estimate(&cli.global, a),
        Command::Table(a) => cmd_table(&cli.global, a),
        Command::Oracle(a) => cmd_oracle(&cli.global, a),
        Command::Sclimit(a) => cmd_sclimit(&cli.global, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}

//! Command-line front end.
//!
//! Every subcommand accepts `--config FILE` with `key=value` lines whose keys
//! are long flag names; flags given on the command line win. Tables are
//! written as CSV (17 significant digits, LF endings) or as aligned text.
//!
//! Exit codes: 0 success, 2 usage error, 3 solver failure, 4 verification
//! failure, 5 simulation z-score above 4 in absolute value.

use crate::constants::{c1, c2, KernelConstants};
use crate::error::Error;
use crate::functional::{Coefficients, ModelParams};
use crate::optimizer::{self, Active, Solution};
use crate::oracle::{verify_theorem21, Thresholds};
use crate::quad::QuadratureConfig;
use crate::sim::{simulate_pair, SimConfig};
use crate::special::HurstIndex;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;
pub const EXIT_SIM: i32 = 5;

/// Largest |z| accepted by `simulate`.
pub const Z_LIMIT: f64 = 4.0;

#[derive(Parser, Debug)]
#[command(name = "rosenblatt", version, about = "Minimax approximation of the Rosenblatt sheet")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Class {
    Full,
    K1only,
    K2only,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Common {
    /// File of key=value defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write the table here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Rect {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon_t: f64,
    #[arg(long = "S", default_value_t = 1.0)]
    pub horizon_s: f64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate C₁ and C₂ over a range of indices.
    Constants {
        /// start:stop:step, a comma list, or a single value.
        #[arg(long)]
        alpha: String,
        /// Optional second axis; adds the products C₁C₁ and C₂C₂.
        #[arg(long)]
        beta: Option<String>,
        /// Quadrature tolerance for C₂.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Data behind the constant plots: 1 = C₁, 2 = C₁(α)C₁(β), 3 = C₂, 4 = C₂(α)C₂(β).
    Figure {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        which: u8,
        #[arg(long, default_value = "0.55:0.95:0.05")]
        alpha: String,
        #[arg(long, default_value = "0.55:0.95:0.05")]
        beta: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Minimax coefficients for one rectangle.
    Solve {
        #[command(flatten)]
        rect: Rect,
        #[arg(long, value_enum, default_value = "full")]
        class: Class,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Recompute every covariance in f by quadrature and compare.
    Verify {
        #[command(flatten)]
        rect: Rect,
        /// Defaults to the minimax k₁.
        #[arg(long)]
        k1: Option<f64>,
        /// Defaults to the minimax k₂.
        #[arg(long)]
        k2: Option<f64>,
        /// Pass threshold for the overlap and assembled checks.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Pass threshold for the elementary checks.
        #[arg(long, default_value_t = 1e-8)]
        elementary_tol: f64,
        /// Quadrature tolerance; defaults to the smaller threshold over 100, at least 1e-12.
        #[arg(long)]
        quad_tol: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo estimate of the error on a discretised noise sheet.
    Simulate {
        #[command(flatten)]
        rect: Rect,
        #[arg(long, default_value_t = 0.0)]
        k1: f64,
        #[arg(long, default_value_t = 0.0)]
        k2: f64,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Comma list of t:s pairs; defaults to (T,S), (T/2,S/2), (T,S/2).
        #[arg(long)]
        points: Option<String>,
        /// Mesh edges are T(i/n)^grading.
        #[arg(long, default_value_t = 4.0)]
        grading: f64,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Constants { common, .. }
            | Command::Figure { common, .. }
            | Command::Solve { common, .. }
            | Command::Verify { common, .. }
            | Command::Simulate { common, .. } => common,
        }
    }
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) => EXIT_USAGE,
            _ => EXIT_SOLVER,
        };
        Self { code, message: e.to_string() }
    }
}

/// Parses `start:stop:step`, `a,b,c` or a single number. The stop value is
/// included when it is within 1e-12 of a grid point.
pub fn parse_range(spec: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("not a number: {s:?}"));
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range must be start:stop:step, got {spec:?}"));
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || stop < start || !start.is_finite() || !stop.is_finite() {
            return Err(format!("invalid range {spec:?}"));
        }
        let steps = ((stop - start) / step + 1e-12).floor() as usize;
        let mut v: Vec<f64> = (0..=steps).map(|i| start + i as f64 * step).collect();
        if let Some(last) = v.last_mut() {
            if (*last - stop).abs() <= 1e-12 {
                *last = stop;
            }
        }
        Ok(v)
    } else {
        spec.split(',').map(num).collect()
    }
}

fn parse_points(spec: &str) -> Result<Vec<(f64, f64)>, String> {
    spec.split(',')
        .map(|pair| {
            let (t, s) = pair.split_once(':').ok_or_else(|| format!("point must be t:s, got {pair:?}"))?;
            let t = t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}"))?;
            let s = s.trim().parse::<f64>().map_err(|_| format!("not a number: {s:?}"))?;
            Ok((t, s))
        })
        .collect()
}

/// Reads `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value", n + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Inserts config-file values ahead of the user's flags so that the latter
/// override them. Keys unknown to the subcommand are rejected.
fn expand_config(args: Vec<String>) -> Result<Vec<String>, Failure> {
    let pos = args.iter().position(|a| a == "--config");
    let inline = args.iter().position(|a| a.starts_with("--config="));
    let path = match (pos, inline) {
        (Some(i), _) => args.get(i + 1).cloned().ok_or_else(|| Failure::usage("--config needs a path"))?,
        (None, Some(i)) => args[i]["--config=".len()..].to_string(),
        (None, None) => return Ok(args),
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::usage(format!("cannot read {path}: {e}")))?;
    let pairs = parse_config(&text).map_err(|e| Failure::usage(format!("{path}: {e}")))?;
    let sub = args.get(1).cloned().unwrap_or_default();
    let cmd = Cli::command();
    let known: Vec<String> = cmd
        .find_subcommand(&sub)
        .map(|c| c.get_arguments().filter_map(|a| a.get_long().map(str::to_string)).collect())
        .unwrap_or_default();
    let mut injected = Vec::new();
    for (k, v) in pairs {
        if k == "config" || !known.contains(&k) {
            return Err(Failure::usage(format!("{path}: unknown key {k:?} for {sub}")));
        }
        injected.push(format!("--{k}"));
        injected.push(v);
    }
    let mut out = args[..2.min(args.len())].to_vec();
    out.extend(injected);
    out.extend(args.into_iter().skip(2));
    Ok(out)
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column-aligned rendering of a CSV table.
fn as_text(csv: &str) -> String {
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let width: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r.iter().enumerate().map(|(i, s)| format!("{s:>w$}", w = width[i])).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn hurst(v: f64) -> Result<HurstIndex, Failure> {
    HurstIndex::new(v).map_err(Failure::from)
}

fn quad(tol: f64) -> Result<QuadratureConfig, Failure> {
    QuadratureConfig::default().with_tol(tol).map_err(Failure::from)
}

fn constants_table(alphas: &[f64], cfg: &QuadratureConfig) -> Result<Vec<(f64, f64, f64)>, Failure> {
    alphas
        .par_iter()
        .map(|&a| {
            let h = hurst(a)?;
            Ok((a, c1(h)?, c2(h, cfg)?))
        })
        .collect()
}

fn constants_csv(alpha: &str, beta: Option<&str>, tol: f64) -> Result<String, Failure> {
    let cfg = quad(tol)?;
    let alphas = parse_range(alpha).map_err(Failure::usage)?;
    let ta = constants_table(&alphas, &cfg)?;
    let mut out = String::new();
    match beta {
        None => {
            out.push_str("alpha,c1,c2\n");
            for (a, x, y) in ta {
                let _ = writeln!(out, "{},{},{}", sci(a), sci(x), sci(y));
            }
        }
        Some(b) => {
            let betas = parse_range(b).map_err(Failure::usage)?;
            let tb = constants_table(&betas, &cfg)?;
            out.push_str("alpha,beta,c1_alpha,c2_alpha,c1_beta,c2_beta,c1c1,c2c2\n");
            for &(a, c1a, c2a) in &ta {
                for &(b, c1b, c2b) in &tb {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        sci(a),
                        sci(b),
                        sci(c1a),
                        sci(c2a),
                        sci(c1b),
                        sci(c2b),
                        sci(c1a * c1b),
                        sci(c2a * c2b)
                    );
                }
            }
        }
    }
    Ok(out)
}

fn figure_csv(which: u8, alpha: &str, beta: &str, tol: f64) -> Result<String, Failure> {
    let cfg = quad(tol)?;
    let alphas = parse_range(alpha).map_err(Failure::usage)?;
    let ta = constants_table(&alphas, &cfg)?;
    let mut out = String::new();
    match which {
        1 | 3 => {
            out.push_str(if which == 1 { "alpha,c1\n" } else { "alpha,c2\n" });
            for (a, x, y) in ta {
                let v = if which == 1 { x } else { y };
                let _ = writeln!(out, "{},{}", sci(a), sci(v));
            }
        }
        _ => {
            let betas = parse_range(beta).map_err(Failure::usage)?;
            let tb = constants_table(&betas, &cfg)?;
            out.push_str(if which == 2 { "alpha,beta,c1c1\n" } else { "alpha,beta,c2c2\n" });
            for &(a, c1a, c2a) in &ta {
                for &(b, c1b, c2b) in &tb {
                    let v = if which == 2 { c1a * c1b } else { c2a * c2b };
                    let _ = writeln!(out, "{},{},{}", sci(a), sci(b), sci(v));
                }
            }
        }
    }
    Ok(out)
}

fn setup(rect: &Rect, tol: f64) -> Result<(ModelParams, KernelConstants), Failure> {
    let p = ModelParams::new(rect.alpha, rect.beta, rect.horizon_t, rect.horizon_s)?;
    let kc = KernelConstants::new(p.alpha, p.beta, &quad(tol)?)?;
    Ok((p, kc))
}

fn solve_class(p: &ModelParams, kc: &KernelConstants, class: Class) -> Result<Solution, Failure> {
    let r = match class {
        Class::Full => optimizer::solve(p, kc),
        Class::K1only => optimizer::solve_special_k1_only(p, kc),
        Class::K2only => optimizer::solve_special_k2_only(p, kc),
    };
    r.map_err(|e| Failure { code: EXIT_SOLVER, message: format!("solver failed: {e}") })
}

fn active_str(a: Active) -> &'static str {
    match a {
        Active::Corner => "corner",
        Active::EdgeT => "edge-t",
        Active::EdgeS => "edge-s",
    }
}

fn solve_csv(p: &ModelParams, sol: &Solution, class: Class) -> String {
    let d = &sol.diagnostics;
    let opt = |x: Option<f64>| x.map(sci).unwrap_or_default();
    let mut out = String::from(
        "alpha,beta,T,S,class,case,k1,k2,value,closed_k1,closed_k2,delta_closed,delta_final,active,edge_point,k1_prime,h_residual,bisection_iters\n",
    );
    let class = match class {
        Class::Full => "full",
        Class::K1only => "k1only",
        Class::K2only => "k2only",
    };
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        sci(p.alpha.value()),
        sci(p.beta.value()),
        sci(p.horizon_t),
        sci(p.horizon_s),
        class,
        sol.case.as_str(),
        sci(sol.coefficients.k1),
        sci(sol.coefficients.k2),
        sci(sol.value),
        sci(d.closed_form.0),
        sci(d.closed_form.1),
        sci(d.delta_closed_form),
        sci(d.delta_final),
        active_str(d.active),
        opt(d.edge_point),
        opt(d.k1_prime.map(|k| k.k1)),
        opt(d.k1_prime.map(|k| k.residual)),
        d.k1_prime.map(|k| k.iterations.to_string()).unwrap_or_default(),
    );
    out
}

fn simulate_csv(
    p: &ModelParams,
    c: &Coefficients,
    cfg: &SimConfig,
    kc: &KernelConstants,
) -> Result<(String, bool), Failure> {
    let est = simulate_pair(p, c, kc, cfg)?;
    let mut out =
        String::from("t,s,k1,k2,mean_sq,std_err,f_closed,z_score,grid_n,reps,seed,f_discrete,captured_mass,coarse\n");
    let mut ok = true;
    for e in &est {
        let z = e.z_score();
        ok &= z.abs() <= Z_LIMIT;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            sci(e.t),
            sci(e.s),
            sci(c.k1),
            sci(c.k2),
            sci(e.mean_sq),
            sci(e.std_err),
            sci(e.f_closed),
            sci(z),
            cfg.grid_n,
            cfg.reps,
            cfg.seed,
            sci(e.f_discrete),
            sci(e.captured_mass),
            e.coarse
        );
    }
    Ok((out, ok))
}

/// Runs one command and returns (table, exit code).
fn dispatch(cmd: &Command) -> Result<(String, i32), Failure> {
    match cmd {
        Command::Constants { alpha, beta, tol, .. } => Ok((constants_csv(alpha, beta.as_deref(), *tol)?, EXIT_OK)),
        Command::Figure { which, alpha, beta, tol, .. } => Ok((figure_csv(*which, alpha, beta, *tol)?, EXIT_OK)),
        Command::Solve { rect, class, tol, .. } => {
            let (p, kc) = setup(rect, *tol)?;
            let sol = solve_class(&p, &kc, *class)?;
            Ok((solve_csv(&p, &sol, *class), EXIT_OK))
        }
        Command::Verify { rect, k1, k2, tol, elementary_tol, quad_tol, .. } => {
            let (p, kc) = setup(rect, 1e-10)?;
            let c = match (k1, k2) {
                (Some(a), Some(b)) => Coefficients::new(*a, *b)?,
                _ => {
                    let sol = solve_class(&p, &kc, Class::Full)?;
                    Coefficients::new(k1.unwrap_or(sol.coefficients.k1), k2.unwrap_or(sol.coefficients.k2))?
                }
            };
            let qt = quad_tol.unwrap_or((tol.min(*elementary_tol) / 100.0).clamp(1e-12, 1e-2));
            let th = Thresholds { singular: *tol, elementary: *elementary_tol };
            let report = verify_theorem21(&p, &c, &kc, &quad(qt)?, th)?;
            let code = if report.all_pass() { EXIT_OK } else { EXIT_VERIFY };
            let mut out = report.to_csv();
            out.push('\n');
            out.push_str(&report.to_key_value());
            Ok((out, code))
        }
        Command::Simulate { rect, k1, k2, grid, reps, seed, points, grading, .. } => {
            let (p, kc) = setup(rect, 1e-10)?;
            let c = Coefficients::new(*k1, *k2)?;
            let pts = match points {
                Some(s) => parse_points(s).map_err(Failure::usage)?,
                None => SimConfig::default_points(&p),
            };
            let mut cfg = SimConfig::new(*grid, *reps, *seed, pts)?;
            cfg.mesh_grading = *grading;
            cfg.validate()?;
            let (out, ok) = simulate_csv(&p, &c, &cfg, &kc)?;
            Ok((out, if ok { EXIT_OK } else { EXIT_SIM }))
        }
    }
}

/// Entry point shared by the binary and the tests.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            return f.code;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let msg = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{msg}") } else { write!(stdout, "{msg}") };
            return code;
        }
    };
    let common = cli.command.common().clone();
    let (table, code) = match dispatch(&cli.command) {
        Ok(r) => r,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            return f.code;
        }
    };
    let body = match (common.format, &cli.command) {
        (Format::Text, Command::Verify { .. }) => {
            let kv = table.split("\n\n").nth(1).unwrap_or_default().to_string();
            kv
        }
        (Format::Text, _) => as_text(&table),
        (Format::Csv, _) => table,
    };
    let written = match &common.output {
        Some(path) => std::fs::write(path, body.as_bytes()).map_err(|e| e.to_string()),
        None => stdout.write_all(body.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: cannot write output: {e}");
        return EXIT_USAGE;
    }
    if code == EXIT_SIM {
        let _ = writeln!(stderr, "warning: a z-score exceeds {Z_LIMIT}");
    }
    code
}

/// Sizes the global thread pool from `ROSENBLATT_THREADS`, if set.
pub fn init_threads() {
    if let Some(n) = std::env::var("ROSENBLATT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

//! Command-line front end.
//!
//! Exit codes: `0` when validation and every tier-1 identity pass, `1` on an
//! identity or validation failure, `2` on a parse, schema or usage error.

mod report;
mod spec;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::acs::DShift;
use crate::calculus::Form;
use crate::error::Error;
use crate::expr::{ComplexNum, Evaluator};
use crate::nijenhuis::{n_squared, Squares};
use crate::verify::{random, run_suite, SuiteConfig};
use crate::calculus::VecField;

pub use report::{format_f64, to_json, ReportDocument, Timing, Validation, TOOL};
pub use spec::{builtin, builtins, Built, Conjugate, JSpec, StructureSpec};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("line {line}, column {column}: {msg}")]
    Json { line: usize, column: usize, msg: String },
    #[error("schema: {0}")]
    Schema(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Engine(_) => EXIT_FAIL,
            _ => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nijenhuis", version, about = "Nijenhuis tensor squares and bidegree components of d on a chart")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate J and run the identity suite; writes a JSON report.
    Verify(VerifyArgs),
    /// Evaluate one quantity at a point.
    Eval(EvalArgs),
    /// List the built-in structures.
    Builtins(BuiltinsArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Structure file (JSON) or the name of a built-in structure.
    pub spec: String,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Total degree of the random polynomial test fields and forms.
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Suppress the per-identity summary on stderr.
    #[arg(long)]
    pub quiet: bool,
    /// Record wall-clock time in the report (makes it non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    #[value(name = "N")]
    N,
    #[value(name = "N2")]
    N2,
    #[value(name = "S")]
    S,
    #[value(name = "T")]
    T,
    #[value(name = "hbar")]
    Hbar,
    #[value(name = "rho")]
    Rho,
    #[value(name = "rhobar")]
    Rhobar,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Structure file (JSON) or the name of a built-in structure.
    pub spec: String,
    #[arg(long, value_enum)]
    pub what: Quantity,
    /// Comma-separated coordinates of the point.
    #[arg(long, allow_hyphen_values = true)]
    pub at: String,
    /// 1-based coordinate index.
    #[arg(long)]
    pub i: Option<usize>,
    /// 1-based coordinate index.
    #[arg(long)]
    pub k: Option<usize>,
    /// 1-based coordinate index.
    #[arg(long)]
    pub j: Option<usize>,
    /// 1-form for rho/rhobar: a name from the structure's "forms" or dx1..dxn.
    #[arg(long)]
    pub form: Option<String>,
}

#[derive(Debug, Args)]
pub struct BuiltinsArgs {
    /// Print the definitions as a JSON array.
    #[arg(long)]
    pub json: bool,
}

/// Runs a parsed command line and returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Verify(a) => cmd_verify(&a, out, err),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Builtins(a) => cmd_builtins(&a, out).map(|_| EXIT_PASS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// A path to a structure file, or a built-in name.
pub fn load_spec(arg: &str) -> Result<StructureSpec, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: arg.into(), msg: e.to_string() })?;
        return StructureSpec::from_json(&text).map_err(|e| match e {
            CliError::Json { line, column, msg } => CliError::Json { line, column, msg: format!("{arg}: {msg}") },
            other => other,
        });
    }
    builtin(arg).ok_or_else(|| CliError::Usage(format!("'{arg}' is neither a readable file nor a built-in structure")))
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), msg: e.to_string() }
}

/// Validation points are drawn without rejection so a bad `J` is seen.
fn validate(built: &Built, cfg: &SuiteConfig) -> Validation {
    let s = &built.structure;
    let mut rng = random::rng_for(cfg.seed, random::stable_hash("validation"));
    let pts: Vec<Vec<f64>> = (0..cfg.points).map(|_| random::point_in_box(&mut rng, &s.chart)).collect();
    match s.acs.validate(&pts, cfg.tol) {
        Ok(r) => Validation {
            samples: r.samples,
            max_square_residual: r.max_square_residual,
            max_trace: r.max_trace,
            tol: r.tol,
            pass: r.pass,
            note: None,
        },
        Err(e) => Validation {
            samples: pts.len(),
            max_square_residual: f64::NAN,
            max_trace: f64::NAN,
            tol: cfg.tol,
            pass: false,
            note: Some(e.to_string()),
        },
    }
}

/// Builds the report for `verify` without writing it.
pub fn verify_report(spec: StructureSpec, cfg: &SuiteConfig) -> Result<ReportDocument, CliError> {
    cfg.check()?;
    let built = spec.build()?;
    let validation = validate(&built, cfg);
    let (suite, error) = match run_suite(&built.structure, cfg) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let pass = validation.pass && suite.as_ref().is_some_and(|s| s.pass);
    Ok(ReportDocument {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        structure: spec,
        config: cfg.clone(),
        validation,
        suite,
        error,
        pass,
        timing: None,
    })
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let start = Instant::now();
    let spec = load_spec(&a.spec)?;
    let cfg = SuiteConfig { seed: a.seed, points: a.points, field_degree: a.degree, tol: a.tol };
    cfg.check().map_err(|e| CliError::Usage(e.to_string()))?;
    let mut doc = verify_report(spec, &cfg)?;
    if a.timing {
        doc.timing = Some(Timing { total_seconds: start.elapsed().as_secs_f64() });
    }
    let text = to_json(&doc);
    match &a.json {
        Some(path) => std::fs::write(path, &text).map_err(|e| io_err(path, e))?,
        None => out.write_all(text.as_bytes()).map_err(|e| io_err(Path::new("<stdout>"), e))?,
    }
    if !a.quiet {
        let _ = write_summary(&doc, err);
    }
    Ok(if doc.pass { EXIT_PASS } else { EXIT_FAIL })
}

fn write_summary(doc: &ReportDocument, w: &mut dyn Write) -> std::io::Result<()> {
    let v = &doc.validation;
    writeln!(
        w,
        "{}: validation {} (|J^2+I| {:.3e}, |tr J| {:.3e})",
        doc.structure.name,
        verdict(v.pass),
        v.max_square_residual,
        v.max_trace
    )?;
    if let Some(s) = &doc.suite {
        for r in &s.identities {
            let tier = match r.tier {
                crate::verify::Tier::DerivedChain => "tier-1",
                crate::verify::Tier::AsStated => "tier-2",
            };
            writeln!(w, "  {:<22} {tier} {} max_rel {:.3e}", r.id, verdict(r.pass), r.max_rel)?;
        }
    }
    if let Some(e) = &doc.error {
        writeln!(w, "  error: {e}")?;
    }
    writeln!(w, "overall: {}", verdict(doc.pass))
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn parse_point(at: &str, built: &Built) -> Result<Vec<f64>, CliError> {
    let p: Vec<f64> = at
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| CliError::Usage(format!("--at: '{}': {e}", s.trim()))))
        .collect::<Result<_, _>>()?;
    let chart = &built.structure.chart;
    if p.len() != chart.dim() {
        return Err(CliError::Usage(format!("--at: expected {} coordinates, got {}", chart.dim(), p.len())));
    }
    if !chart.contains(&p) {
        return Err(CliError::Usage(format!("--at: point {p:?} lies outside the box {:?}", chart.bounds())));
    }
    Ok(p)
}

fn index(name: &str, v: Option<usize>, n: usize) -> Result<Option<usize>, CliError> {
    match v {
        None => Ok(None),
        Some(i) if (1..=n).contains(&i) => Ok(Some(i - 1)),
        Some(i) => Err(CliError::Usage(format!("--{name} {i} out of range 1..={n}"))),
    }
}

fn required(name: &str, v: Option<usize>, what: &str) -> Result<usize, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--what {what} needs --{name}")))
}

/// 15 significant digits per part.
fn fmt_c(z: ComplexNum) -> String {
    format!("{:.14e} {:+.14e}i", z.re, z.im)
}

fn eval_form_arg(name: &str, built: &Built) -> Result<Form, CliError> {
    let n = built.structure.dim();
    if let Some(f) = built.forms.get(name) {
        return Ok(f.clone());
    }
    if let Some(k) = name.strip_prefix("dx").and_then(|s| s.parse::<usize>().ok()) {
        if (1..=n).contains(&k) {
            return Ok(Form::dx(n, k - 1));
        }
    }
    Err(CliError::Usage(format!("--form '{name}' is neither a spec form nor dx1..dx{n}")))
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let built = load_spec(&a.spec)?.build()?;
    let p = parse_point(&a.at, &built)?;
    let n = built.structure.dim();
    let (i, k, jj) = (index("i", a.i, n)?, index("k", a.k, n)?, index("j", a.j, n)?);
    let acs = &built.structure.acs;
    let sq = Squares::new(acs);
    let mut ev = Evaluator::new(&p);
    let mut lines: Vec<(String, ComplexNum)> = Vec::new();
    match a.what {
        Quantity::N => {
            let nc = sq.components();
            let pairs: Vec<(usize, usize)> = match (i, k) {
                (Some(i), Some(k)) => vec![(i, k)],
                (None, None) => (0..n).flat_map(|i| (i + 1..n).map(move |k| (i, k))).collect(),
                _ => return Err(CliError::Usage("--what N takes both --i and --k, or neither".into())),
            };
            for (i, k) in pairs {
                for r in 0..n {
                    lines.push((format!("N({},{})[{}]", i + 1, k + 1, r + 1), ev.eval(nc.get(i, k, r)).map_err(Error::from)?));
                }
            }
        }
        Quantity::N2 => {
            let (i, k, jj) = (required("i", i, "N2")?, required("k", k, "N2")?, required("j", jj, "N2")?);
            let d = |a| VecField::coordinate(n, a);
            let v = n_squared(acs, &d(i), &d(k), &d(jj))?.eval(&mut ev)?;
            for (r, z) in v.into_iter().enumerate() {
                lines.push((format!("N2({},{};{})[{}]", i + 1, k + 1, jj + 1, r + 1), z));
            }
        }
        Quantity::S => {
            let w = sq.weak_squares_at(&p)?;
            for (i, z) in w.s_i.iter().enumerate() {
                lines.push((format!("S_{}", i + 1), *z));
            }
            lines.push(("S".into(), w.s));
        }
        Quantity::T => lines.push(("T".into(), ev.eval(&sq.t()?).map_err(Error::from)?)),
        Quantity::Hbar => {
            let pairs: Vec<(usize, usize)> = match (i, k) {
                (Some(i), Some(k)) => vec![(i, k)],
                (None, None) => (0..n).flat_map(|i| (0..n).map(move |k| (i, k))).collect(),
                _ => return Err(CliError::Usage("--what hbar takes both --i and --k, or neither".into())),
            };
            for (i, k) in pairs {
                lines.push((format!("hbar({},{})", i + 1, k + 1), ev.eval(&sq.hbar(i, k)?).map_err(Error::from)?));
            }
        }
        Quantity::Rho | Quantity::Rhobar => {
            let name = a.form.as_deref().ok_or_else(|| CliError::Usage("--what rho/rhobar needs --form".into()))?;
            let form = eval_form_arg(name, &built)?;
            let (shift, label) = if a.what == Quantity::Rho { (DShift::Rho, "rho") } else { (DShift::RhoBar, "rhobar") };
            let r = acs.comp_d(&form, shift)?;
            for key in random::increasing_tuples(n, r.degree()) {
                let z = ev.eval(&r.coeff(&key)).map_err(Error::from)?;
                let idx: Vec<String> = key.iter().map(|x| (x + 1).to_string()).collect();
                lines.push((format!("{label}({name})[{}]", idx.join(",")), z));
            }
        }
    }
    for (label, z) in lines {
        writeln!(out, "{label} = {}", fmt_c(z)).map_err(|e| io_err(Path::new("<stdout>"), e))?;
    }
    Ok(EXIT_PASS)
}

pub fn cmd_builtins(a: &BuiltinsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let list = builtins();
    let text = if a.json {
        to_json(&list)
    } else {
        let mut s = String::new();
        for b in &list {
            let j = serde_json::to_string(&b.j).expect("static data serializes");
            s.push_str(&format!("{:<10} dim={} integrable={} J={j}\n", b.name, b.dim, b.integrable));
        }
        s
    };
    out.write_all(text.as_bytes()).map_err(|e| io_err(Path::new("<stdout>"), e))
}

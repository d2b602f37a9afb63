//! Command-line front end: `list`, `verify <case…|all>`, `flow <case>`.
//!
//! Exit codes: 0 when everything passes, 1 on a verification failure, 2 on
//! usage or configuration errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::catalog::{self, SolutionSpec};
use crate::flow::{self, FlowError};
use crate::verify::{self, CheckStatus, ToleranceConfig, VerificationReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "hessric",
    version,
    about = "Verify solutions of Hess f = -f Ric on explicit charts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Number of sample points per case.
    #[arg(long, global = true, default_value_t = 200)]
    pub samples: usize,
    /// Identity tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    /// Jet order (3 or 4).
    #[arg(long = "jet-order", global = true, default_value_t = 3, value_parser = clap::value_parser!(u8).range(3..=4))]
    pub jet_order: u8,
    /// Seed of the sample plan.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Flow step size.
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub h: f64,
    /// Flow time span.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub span: f64,
    /// Output format (default: text for `list`, json otherwise).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output path (default: standard output). For `flow`, receives the trace CSV.
    #[arg(short = 'o', long = "output", global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List catalog cases.
    List,
    /// Run the verification suite on one or more cases, or `all`.
    Verify {
        #[arg(required = true)]
        cases: Vec<String>,
    },
    /// Integrate the normalized gradient flow and check its profile.
    Flow { case: String },
}

/// Fully validated settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub cases: Vec<String>,
    pub tolerance: ToleranceConfig,
    pub h: f64,
    pub span: f64,
    pub format: Format,
    pub output: Option<PathBuf>,
}

#[derive(Debug)]
struct Usage(String);

fn resolve_cases(names: &[String]) -> Result<Vec<String>, Usage> {
    let mut out = Vec::new();
    for n in names {
        if n == "all" {
            out.extend(catalog::CASE_NAMES.iter().map(|s| s.to_string()));
        } else if catalog::is_known(n) {
            out.push(n.clone());
        } else {
            return Err(Usage(format!("unknown case '{n}' (see `hessric list`)")));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

impl RunConfig {
    fn from_cli(cli: &Cli) -> Result<Self, Usage> {
        let cases = match &cli.command {
            Command::List => vec![],
            Command::Verify { cases } => resolve_cases(cases)?,
            Command::Flow { case } => resolve_cases(std::slice::from_ref(case))?,
        };
        let tolerance = ToleranceConfig {
            tol_identity: cli.tol,
            samples: cli.samples,
            seed: cli.seed,
            jet_order: cli.jet_order as usize,
            ..ToleranceConfig::default()
        };
        tolerance.validate().map_err(|e| Usage(e.to_string()))?;
        if !(cli.h > 0.0 && cli.span > 0.0 && cli.h.is_finite() && cli.span.is_finite() && cli.span / cli.h <= 1e7) {
            return Err(Usage(format!(
                "--h {} and --span {} must be positive with span/h <= 1e7",
                cli.h, cli.span
            )));
        }
        let default_format = if matches!(cli.command, Command::List) {
            Format::Text
        } else {
            Format::Json
        };
        Ok(RunConfig {
            cases,
            tolerance,
            h: cli.h,
            span: cli.span,
            format: cli.format.unwrap_or(default_format),
            output: cli.output.clone(),
        })
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing to `stdout`/`stderr`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let config = match RunConfig::from_cli(&cli) {
        Ok(c) => c,
        Err(Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let outcome = match cli.command {
        Command::List => cmd_list(&config),
        Command::Verify { .. } => cmd_verify(&config),
        Command::Flow { .. } => cmd_flow(&config),
    };
    match outcome {
        Ok(out) => {
            if let Err(e) = emit(&config, out.primary, stdout, out.to_path) {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_USAGE;
            }
            if let Some(extra) = out.stdout_extra {
                let _ = stdout.write_all(extra.as_bytes());
            }
            out.code
        }
        Err(Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
    }
}

struct Output {
    primary: String,
    /// Whether `primary` goes to `-o` (when given) rather than stdout.
    to_path: bool,
    stdout_extra: Option<String>,
    code: i32,
}

fn emit(config: &RunConfig, text: String, stdout: &mut dyn Write, to_path: bool) -> std::io::Result<()> {
    match (&config.output, to_path) {
        (Some(path), true) => std::fs::write(path, text),
        _ => stdout.write_all(text.as_bytes()),
    }
}

/// One row of `list`.
#[derive(Debug, Clone, Serialize)]
pub struct CaseDescriptor {
    pub name: String,
    pub dim: usize,
    pub epsilon: Option<String>,
    pub scalar_curvature: Option<f64>,
    pub mu: Option<f64>,
    pub has_killing_field: bool,
    pub checks: Vec<&'static str>,
}

/// Checks that apply to a spec (others report `not_applicable`).
pub fn applicable_checks(spec: &SolutionSpec) -> Vec<&'static str> {
    use verify::ids::*;
    let mut out = vec![CURVATURE_SELF_TEST, LAPLACE_IDENTITY, MU, RESIDUAL_MAIN, RIC_GRAD];
    if spec.expected_s.is_some() {
        out.extend([CURVATURE_SCALAR, GEODESIC_NU]);
    }
    if spec.expected_range.is_some_and(|r| r.contains(0.0, 0.0)) {
        out.extend([LEVEL_SET_GAUSS, LEVEL_SET_SHAPE]);
    }
    if spec.eta.is_some() && spec.epsilon.is_some() {
        out.extend([
            KILLING_A, KILLING_B, KILLING_C, KILLING_D, KILLING_E, KILLING_F, KILLING_G, KILLING_H,
        ]);
        if spec.dim() >= 3 && spec.expected_s.is_some_and(|s| s != 0.0) {
            out.extend([RICCI_EIGENVALUES, RICCI_NABLA_NU, RICCI_RIC2_ETA]);
        }
    }
    if spec.radial.is_some() {
        out.push(RADIAL_POISSON);
    }
    out.sort();
    out
}

pub fn describe(spec: &SolutionSpec) -> CaseDescriptor {
    CaseDescriptor {
        name: spec.name.clone(),
        dim: spec.dim(),
        epsilon: spec.epsilon.map(|e| e.symbol().to_string()),
        scalar_curvature: spec.expected_s,
        mu: spec.expected_mu,
        has_killing_field: spec.eta.is_some(),
        checks: applicable_checks(spec),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x}"))
}

fn cmd_list(config: &RunConfig) -> Result<Output, Usage> {
    let rows: Vec<CaseDescriptor> = catalog::all_cases().iter().map(describe).collect();
    let primary = match config.format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut s = String::from("name,dim,epsilon,S,mu,killing_field,checks\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.name,
                    r.dim,
                    r.epsilon.as_deref().unwrap_or("-"),
                    opt(r.scalar_curvature),
                    opt(r.mu),
                    r.has_killing_field,
                    r.checks.join(";")
                ));
            }
            s
        }
        Format::Text => {
            let mut s = format!(
                "{:<22} {:>3} {:>4} {:>4} {:>4}  checks\n",
                "case", "n", "eps", "S", "mu"
            );
            for r in &rows {
                s.push_str(&format!(
                    "{:<22} {:>3} {:>4} {:>4} {:>4}  {}\n",
                    r.name,
                    r.dim,
                    r.epsilon.as_deref().unwrap_or("-"),
                    opt(r.scalar_curvature),
                    opt(r.mu),
                    r.checks.join(", ")
                ));
            }
            s
        }
    };
    Ok(Output {
        primary,
        to_path: true,
        stdout_extra: None,
        code: EXIT_PASS,
    })
}

fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report values serialize");
    s.push('\n');
    s
}

/// Runs the suite on every configured case, in parallel, ordered by name.
pub fn verify_cases(config: &RunConfig) -> Vec<VerificationReport> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .cases
            .iter()
            .map(|name| scope.spawn(move || verify::run_suite(name, &config.tolerance)))
            .collect();
        handles
            .into_iter()
            .zip(&config.cases)
            .map(|(h, name)| match h.join() {
                Ok(Ok(r)) => r,
                Ok(Err(e)) => failed_report(name, &config.tolerance, &e.to_string()),
                Err(_) => failed_report(name, &config.tolerance, "internal panic"),
            })
            .collect()
    })
}

fn failed_report(name: &str, tol: &ToleranceConfig, reason: &str) -> VerificationReport {
    VerificationReport {
        case: name.to_string(),
        checks: vec![verify::CheckRecord {
            id: "suite".into(),
            points: 0,
            max_residual: None,
            mean_residual: None,
            tolerance: tol.tol_identity,
            pass: false,
            status: CheckStatus::Error,
            value: None,
            detail: Some(reason.to_string()),
        }],
        pass: false,
        config: *tol,
        meta: verify::ReportMeta {
            timestamp: String::new(),
            duration_ms: 0,
        },
    }
}

fn fmt_opt_sci(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.3e}"))
}

pub fn render_reports(reports: &[VerificationReport], format: Format) -> String {
    match format {
        Format::Json if reports.len() == 1 => to_json(&reports[0]),
        Format::Json => to_json(reports),
        Format::Csv => {
            let mut s = String::from("case,check,status,points,max_residual,mean_residual,tolerance,pass\n");
            for r in reports {
                for c in &r.checks {
                    s.push_str(&format!(
                        "{},{},{},{},{},{},{:e},{}\n",
                        r.case,
                        c.id,
                        status_name(c.status),
                        c.points,
                        c.max_residual.map_or(String::new(), |v| format!("{v:e}")),
                        c.mean_residual.map_or(String::new(), |v| format!("{v:e}")),
                        c.tolerance,
                        c.pass
                    ));
                }
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for r in reports {
                s.push_str(&format!("{} {}\n", r.case, if r.pass { "PASS" } else { "FAIL" }));
                for c in &r.checks {
                    s.push_str(&format!(
                        "  {:<26} {:<14} max {:>10}  tol {:.1e}{}\n",
                        c.id,
                        status_name(c.status),
                        fmt_opt_sci(c.max_residual),
                        c.tolerance,
                        c.detail.as_ref().map_or(String::new(), |d| format!("  ({d})"))
                    ));
                }
            }
            s
        }
    }
}

fn status_name(s: CheckStatus) -> &'static str {
    match s {
        CheckStatus::Pass => "pass",
        CheckStatus::Fail => "fail",
        CheckStatus::NotApplicable => "not_applicable",
        CheckStatus::Error => "error",
    }
}

fn cmd_verify(config: &RunConfig) -> Result<Output, Usage> {
    let reports = verify_cases(config);
    let code = if reports.iter().all(|r| r.pass) {
        EXIT_PASS
    } else {
        EXIT_FAIL
    };
    Ok(Output {
        primary: render_reports(&reports, config.format),
        to_path: true,
        stdout_extra: None,
        code,
    })
}

fn cmd_flow(config: &RunConfig) -> Result<Output, Usage> {
    let name = &config.cases[0];
    let spec = catalog::by_name(name).map_err(|e| Usage(e.to_string()))?;
    if !spec.has_constant_scalar() {
        return Err(Usage(FlowError::NonConstantScalar.to_string()));
    }
    match flow::run_flow(&spec, config.span, config.h, config.tolerance.tol_ode_limited) {
        Ok((trace, summary)) => {
            let code = if summary.pass { EXIT_PASS } else { EXIT_FAIL };
            let summary_json = to_json(&summary);
            let out = match (config.format, &config.output) {
                // trace to the file, summary to stdout
                (_, Some(_)) => Output {
                    primary: trace.to_csv(),
                    to_path: true,
                    stdout_extra: Some(summary_json),
                    code,
                },
                (Format::Csv, None) => Output {
                    primary: trace.to_csv(),
                    to_path: false,
                    stdout_extra: None,
                    code,
                },
                (Format::Text, None) => Output {
                    primary: format!(
                        "{} {} family={} rms={:.3e} range_ok={} extremum={} samples={} termination={:?}\n",
                        summary.case,
                        if summary.pass { "PASS" } else { "FAIL" },
                        summary.family.name(),
                        summary.rms,
                        summary.range_ok,
                        fmt_opt_sci(summary.extremum),
                        summary.samples,
                        summary.termination
                    ),
                    to_path: false,
                    stdout_extra: None,
                    code,
                },
                (Format::Json, None) => Output {
                    primary: summary_json,
                    to_path: false,
                    stdout_extra: None,
                    code,
                },
            };
            Ok(out)
        }
        Err(e @ (FlowError::NonConstantScalar | FlowError::BadStep { .. })) => Err(Usage(e.to_string())),
        Err(e) => Ok(Output {
            primary: to_json(&serde_json::json!({ "case": name, "pass": false, "error": e.to_string() })),
            to_path: false,
            stdout_extra: None,
            code: EXIT_FAIL,
        }),
    }
}

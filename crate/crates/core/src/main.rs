use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use exmat::constructors::{construct_block, BlockSpec};
use exmat::exceptionality::{
    check_exceptional, orthogonality_defect, positivity_check, reduce_canonical, Status,
};
use exmat::extremal::{extremal_search, SearchBudget};
use exmat::matrix::{singular_data, spectrum};
use exmat::suite::{positivity_samples, run_suite, SuiteConfig};
use exmat::{ComplexMatrix, Error, Tolerances};

const EXIT_EXCEPTIONAL: u8 = 0;
const EXIT_CERTIFIED: u8 = 1;
const EXIT_NOT_APPLICABLE: u8 = 2;
const EXIT_SUITE_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_SOFTWARE: u8 = 70;

#[derive(Parser, Debug)]
#[command(name = "exmat", version, about = "Construct, check, reduce and search exceptional matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    flags: Flags,
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Radial grid nodes per zero.
    #[arg(long, global = true)]
    budget_grid: Option<usize>,

    /// Random multistarts per degree.
    #[arg(long, global = true)]
    budget_starts: Option<usize>,

    /// Objective evaluations per local refinement.
    #[arg(long, global = true)]
    budget_iters: Option<usize>,

    /// Highest Blaschke degree searched (clamped to N - 1).
    #[arg(long, global = true)]
    degree_max: Option<usize>,

    /// Seed for all stochastic choices.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override one tolerance, e.g. `certMargin=1e-6`. Repeatable.
    #[arg(long = "tol-override", value_name = "KEY=VAL", global = true)]
    tol_override: Vec<String>,

    /// Also write the report to this file.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide exceptionality of a matrix up to the search budget.
    Check { matrix: PathBuf },
    /// Build a bordered matrix from a block spec.
    Construct {
        spec: PathBuf,
        /// Run the exceptionality checker on the constructed matrix.
        #[arg(long)]
        check: bool,
    },
    /// Reduce a matrix to the canonical bordered form.
    Reduce { matrix: PathBuf },
    /// Maximize `||b(E)||` over Blaschke products.
    Extremal { matrix: PathBuf },
    /// Orthogonality, positivity and singular-value diagnostics.
    Diagnose {
        matrix: PathBuf,
        /// Number of seeded positivity samples.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Run the property suites and report a pass/fail table.
    Suite {
        /// Multiplier on every population size.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::Construct { .. } => "construct",
            Command::Reduce { .. } => "reduce",
            Command::Extremal { .. } => "extremal",
            Command::Diagnose { .. } => "diagnose",
            Command::Suite { .. } => "suite",
        }
    }
}

/// Layered configuration file referenced by `EXMAT_CONFIG`.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    tolerances: Option<Tolerances>,
    budget: Option<SearchBudget>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
struct Resolved {
    tolerances: Tolerances,
    budget: SearchBudget,
    #[serde(skip_serializing_if = "Option::is_none")]
    suite: Option<SuiteConfig>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct RunReport {
    command: String,
    input_digest: Option<String>,
    config: Option<Resolved>,
    result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<Value>,
    wall_time_ms: u64,
    tool_version: &'static str,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
    detail: Option<Value>,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, kind: "usage", message: message.into(), detail: None }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let (code, kind, detail) = match &err {
            Error::NumericalFailure(_) => (EXIT_SOFTWARE, "numericalFailure", None),
            Error::InvalidInput(_) => (EXIT_DATA, "invalidInput", None),
            Error::InvalidParameter(_) => (EXIT_DATA, "invalidParameter", None),
            Error::PreconditionViolation(_) => (EXIT_DATA, "preconditionViolation", None),
            Error::HypothesisViolation(_) => (EXIT_DATA, "hypothesisViolation", None),
            Error::NotSupported(_) => (EXIT_DATA, "notSupported", None),
            Error::PatternViolation { residual, tolerance } => (
                EXIT_DATA,
                "patternViolation",
                Some(json!({ "residual": residual, "tolerance": tolerance })),
            ),
            Error::GenerationFailure(_) => (EXIT_SOFTWARE, "generationFailure", None),
        };
        Self { code, kind, message: err.to_string(), detail }
    }
}

struct Outcome {
    digest: Option<String>,
    result: Value,
    code: u8,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(bytes: &[u8], path: &Path) -> Result<T, Failure> {
    serde_json::from_slice(bytes).map_err(|e| Failure::usage(format!("cannot parse {}: {e}", path.display())))
}

fn load_matrix(path: &Path) -> Result<(ComplexMatrix, String), Failure> {
    let bytes = read_input(path)?;
    let m: ComplexMatrix = parse_json(&bytes, path)?;
    Ok((m, digest(&bytes)))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn resolve(flags: &Flags) -> Result<Resolved, Failure> {
    let mut file = ConfigFile::default();
    if let Some(path) = std::env::var_os("EXMAT_CONFIG") {
        let path = PathBuf::from(path);
        file = parse_json(&read_input(&path)?, &path)?;
    }
    let mut tolerances = file.tolerances.unwrap_or_default();
    let mut budget = file.budget.unwrap_or_default();
    for kv in &flags.tol_override {
        let (key, val) = kv
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("--tol-override expects KEY=VAL, got {kv:?}")))?;
        let val: f64 = val
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("--tol-override value for {key} is not a number: {val:?}")))?;
        tolerances.set(key.trim(), val).map_err(|e| Failure::usage(e.to_string()))?;
    }
    if let Some(v) = flags.budget_grid {
        budget.grid_resolution = v;
    }
    if let Some(v) = flags.budget_starts {
        budget.multistarts = v;
    }
    if let Some(v) = flags.budget_iters {
        budget.local_iters = v;
    }
    if let Some(v) = flags.degree_max {
        let lo = budget.degree_range.map_or(0, |r| r.0);
        budget.degree_range = Some((lo.min(v), v));
    }
    if let Some(v) = flags.seed {
        budget.seed = v;
    }
    Ok(Resolved { tolerances, budget, suite: None })
}

/// Clamps the degree range to `[0, N - 1]` for an `N x N` input.
fn budget_for(budget: &SearchBudget, e: &ComplexMatrix) -> SearchBudget {
    let top = e.rows().saturating_sub(1);
    let mut b = budget.clone();
    if let Some((lo, hi)) = b.degree_range {
        let hi = hi.min(top);
        b.degree_range = Some((lo.min(hi), hi));
    }
    b
}

fn verdict_code(status: Status) -> u8 {
    match status {
        Status::ExceptionalUpToBudget => EXIT_EXCEPTIONAL,
        Status::CertifiedNotExceptional => EXIT_CERTIFIED,
        Status::NotApplicable => EXIT_NOT_APPLICABLE,
    }
}

fn run(command: &Command, cfg: &mut Resolved) -> Result<Outcome, Failure> {
    let tol = cfg.tolerances;
    match command {
        Command::Check { matrix } => {
            let (e, d) = load_matrix(matrix)?;
            let v = check_exceptional(&e, &budget_for(&cfg.budget, &e), &tol)?;
            Ok(Outcome { digest: Some(d), result: to_value(&v), code: verdict_code(v.status) })
        }
        Command::Construct { spec, check } => {
            let bytes = read_input(spec)?;
            let s: BlockSpec = parse_json(&bytes, spec)?;
            let e = construct_block(&s)?;
            let mut result = json!({ "matrix": to_value(&e), "dimension": e.rows(), "a": s.a });
            let mut code = 0;
            if *check {
                let v = check_exceptional(&e, &budget_for(&cfg.budget, &e), &tol)?;
                code = verdict_code(v.status);
                result["verdict"] = to_value(&v);
            }
            Ok(Outcome { digest: Some(digest(&bytes)), result, code })
        }
        Command::Reduce { matrix } => {
            let (e, d) = load_matrix(matrix)?;
            let c = reduce_canonical(&e, &tol)?;
            Ok(Outcome { digest: Some(d), result: to_value(&c), code: 0 })
        }
        Command::Extremal { matrix } => {
            let (e, d) = load_matrix(matrix)?;
            let r = extremal_search(&e, &budget_for(&cfg.budget, &e), &tol)?;
            Ok(Outcome { digest: Some(d), result: to_value(&r), code: 0 })
        }
        Command::Diagnose { matrix, samples } => {
            let (e, d) = load_matrix(matrix)?;
            Ok(Outcome { digest: Some(d), result: diagnose(&e, *samples, cfg.budget.seed, &tol)?, code: 0 })
        }
        Command::Suite { scale } => {
            if !(scale.is_finite() && *scale > 0.0) {
                return Err(Failure::usage(format!("--scale must be positive, got {scale}")));
            }
            let suite = SuiteConfig { seed: cfg.budget.seed, scale: *scale, ..SuiteConfig::default() };
            let report = run_suite(&suite, &cfg.budget, &tol)?;
            for c in &report.criteria {
                eprintln!(
                    "{:>2} {} {:<64} cases {:>5} failures {:>3}",
                    c.id,
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.cases,
                    c.failures
                );
            }
            let d = digest(serde_json::to_string(&suite).expect("suite config serializes").as_bytes());
            cfg.suite = Some(suite);
            let code = if report.passed { 0 } else { EXIT_SUITE_FAILED };
            Ok(Outcome { digest: Some(d), result: to_value(&report), code })
        }
    }
}

fn diagnose(e: &ComplexMatrix, samples: usize, seed: u64, tol: &Tolerances) -> Result<Value, Failure> {
    e.require_finite()?;
    let sd = singular_data(e, tol.cluster_tol)?;
    let rho = spectrum(e)?.spectral_radius;
    let mut out = json!({
        "dimension": e.rows(),
        "operatorNorm": sd.norm(),
        "spectralRadius": rho,
        "singularValues": sd.values,
        "topClusterDim": sd.top_cluster_dim,
        "trace": [e.trace().re, e.trace().im],
        "orthogonalityDefect": orthogonality_defect(e, tol)?,
    });
    out["positivity"] = if rho < tol.max_spectral_radius() && samples > 0 {
        let s = positivity_samples(seed, samples, tol)?;
        to_value(&positivity_check(e, &s, tol)?)
    } else {
        Value::Null
    };
    out["canonical"] = match reduce_canonical(e, tol) {
        Ok(c) => to_value(&c),
        Err(err) => json!({ "error": Failure::from(err).message }),
    };
    Ok(out)
}

fn emit(report: &RunReport, output: Option<&Path>) -> Result<(), String> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    if let Some(path) = output {
        std::fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(format!("cannot write report: {e}")),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if !err.use_stderr() => {
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            eprintln!("{err}");
            let report = RunReport {
                command: "unknown".into(),
                input_digest: None,
                config: None,
                result: Value::Null,
                error: Some(json!({ "code": EXIT_USAGE, "kind": "usage", "message": err.to_string() })),
                wall_time_ms: started.elapsed().as_millis() as u64,
                tool_version: env!("CARGO_PKG_VERSION"),
            };
            let _ = emit(&report, None);
            return ExitCode::from(EXIT_USAGE);
        }
    };

    let level = match cli.flags.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();

    let mut config = None;
    let outcome = resolve(&cli.flags).and_then(|mut cfg| {
        let r = run(&cli.command, &mut cfg);
        config = Some(cfg);
        r
    });
    let (report, code) = match outcome {
        Ok(o) => (
            RunReport {
                command: cli.command.name().into(),
                input_digest: o.digest,
                config,
                result: o.result,
                error: None,
                wall_time_ms: started.elapsed().as_millis() as u64,
                tool_version: env!("CARGO_PKG_VERSION"),
            },
            o.code,
        ),
        Err(f) => {
            log::error!("{}", f.message);
            let mut error = json!({ "code": f.code, "kind": f.kind, "message": f.message });
            if let Some(d) = f.detail {
                error["detail"] = d;
            }
            (
                RunReport {
                    command: cli.command.name().into(),
                    input_digest: None,
                    config,
                    result: Value::Null,
                    error: Some(error),
                    wall_time_ms: started.elapsed().as_millis() as u64,
                    tool_version: env!("CARGO_PKG_VERSION"),
                },
                f.code,
            )
        }
    };
    match emit(&report, cli.flags.output.as_deref()) {
        Ok(()) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

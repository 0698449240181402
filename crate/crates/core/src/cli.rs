//! Command-line front end: problem files in, CSV or JSON tables out.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error,
//! 3 transform breakdown, 4 oracle failure.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::catalog::FamilySpec;
use crate::divisor::{DivisorSpec, Normalization};
use crate::error::Error;
use crate::expansion::{evaluate_partial_sum, fourier_coefficients, parseval_residual};
use crate::linear::{
    conserved_residuals, kappa_sequence, resolve_normalization, transformed_recurrence, ConnectionCoefficients,
};
use crate::measure::MeasureSpec;
use crate::oracle::{direct_connection_table, max_orthogonality_defect, orthogonality_defects};
use crate::quadratic::{
    general_quadratic_sequence, quadratic_residuals, symmetric_lambda_sequence, symmetric_transformed_recurrence,
};
use crate::quadrature::AdaptiveOptions;
use crate::recurrence::RecurrenceCoefficients;
use crate::scalar::{relative_difference, Backend, Scalar, DEFAULT_PRECISION};

const DISPLAY_DIGITS: usize = 15;
const DEFAULT_N: usize = 10;
const DEFAULT_TOL: f64 = 1e-8;
const MAX_CHECK_DEGREE: usize = 20;

#[derive(Parser, Debug)]
#[command(name = "orthomod", version, about = "Orthogonal polynomials under C/P(x) measure modifications")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Args, Debug, Clone)]
pub struct Flags {
    /// Number of indices to compute (overrides the problem file).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Tolerance for `verify` and for adaptive quadrature.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Working precision in bits for the float backend.
    #[arg(long, global = true)]
    pub precision: Option<u32>,
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendChoice>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Connection coefficients and the new recurrence.
    Transform { input: PathBuf },
    /// Orthogonality, conserved quantities and oracle agreement.
    Verify { input: PathBuf },
    /// Fourier coefficients of C/(x+D), partial sums and Parseval sums.
    Expand {
        input: PathBuf,
        /// Comma-separated evaluation points.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        points: Vec<String>,
    },
    /// Connection coefficients from the Gram system, for any divisor degree.
    Oracle {
        input: PathBuf,
        /// Number of lower terms (defaults to the divisor degree).
        #[arg(long)]
        r: Option<usize>,
    },
}

#[derive(ValueEnum, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    Rational,
    Float,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Failure of a CLI command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Compute(Error),
    Verification(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Input(_) => 2,
            CliError::Compute(e) => match e {
                Error::InvalidNumber(_) | Error::InvalidFamily(_) | Error::BackendUnsupported(_) => 2,
                Error::OracleSingular(_) => 4,
                _ => 3,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Compute(e) => write!(f, "{e}"),
            CliError::Verification(failed) => write!(f, "verification failed: {}", failed.join(", ")),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Compute(e)
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    family: Option<FamilyInput>,
    recurrence: Option<RecurrenceInput>,
    divisor: DivisorInput,
    n: Option<usize>,
    precision_bits: Option<u32>,
    backend: Option<BackendChoice>,
    tol: Option<f64>,
    points: Option<Vec<Value>>,
    r: Option<usize>,
}

#[derive(Deserialize, Debug)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
enum FamilyInput {
    Jacobi { alpha: Value, gamma: Value },
    Legendre,
    #[serde(alias = "chebyshev-u")]
    ChebyshevU,
    Charlier { lambda: Value },
    Semicircle,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RecurrenceInput {
    beta: Vec<Value>,
    beta_hat: Vec<Value>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct DivisorInput {
    kind: String,
    #[serde(rename = "C")]
    c: Option<Value>,
    #[serde(rename = "D")]
    d: Option<Value>,
    #[serde(rename = "E")]
    e: Option<Value>,
    /// Lower coefficients of a monic divisor, constant term first.
    coefficients: Option<Vec<Value>>,
    preset: Option<String>,
    rho: Option<Value>,
    y: Option<Value>,
}

fn number(v: &Value, what: &str) -> CliResult<Scalar> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => return Err(CliError::Input(format!("{what}: expected a number, got {v}"))),
    };
    Backend::Rational
        .parse(&text)
        .map_err(|_| CliError::Input(format!("{what}: `{text}` is not a number")))
}

fn required(v: &Option<Value>, what: &str) -> CliResult<Scalar> {
    match v {
        Some(v) => number(v, what),
        None => Err(CliError::Input(format!("divisor needs `{what}`"))),
    }
}

/// A parsed problem with command-line overrides applied.
pub struct Problem {
    pub family: Option<FamilySpec>,
    pub recurrence: RecurrenceCoefficients,
    pub measure: MeasureSpec,
    pub divisor: DivisorSpec,
    pub n: usize,
    pub tol: f64,
    pub precision: u32,
    pub backend: Backend,
    pub points: Vec<Scalar>,
    pub r: Option<usize>,
}

impl Problem {
    fn options(&self) -> AdaptiveOptions {
        let floor = 2f64.powi(8 - self.precision as i32);
        AdaptiveOptions::new((self.tol * 1e-4).max(floor), self.precision)
    }
}

fn parse_divisor(input: &DivisorInput) -> CliResult<DivisorSpec> {
    let kind = input.kind.to_ascii_lowercase();
    let preset = input.preset.as_deref().map(str::to_ascii_lowercase);
    if kind == "kesten-mckay" || preset.as_deref() == Some("kesten-mckay") {
        let rho = required(&input.rho, "rho")?;
        let y = required(&input.y, "y")?;
        return Ok(DivisorSpec::kesten_mckay(&rho, &y)?);
    }
    if let Some(p) = preset {
        return Err(CliError::Input(format!("unknown divisor preset `{p}`")));
    }
    let normalization = match &input.c {
        None => Normalization::Auto,
        Some(Value::String(s)) if s.eq_ignore_ascii_case("auto") => Normalization::Auto,
        Some(v) => Normalization::Given(number(v, "C")?),
    };
    match kind.as_str() {
        "linear" => Ok(DivisorSpec::linear(normalization, required(&input.d, "D")?)),
        "quadratic" => Ok(DivisorSpec::quadratic(
            normalization,
            required(&input.d, "D")?,
            required(&input.e, "E")?,
        )),
        "monic" => {
            let lower = input
                .coefficients
                .as_ref()
                .ok_or_else(|| CliError::Input("monic divisor needs `coefficients`".into()))?
                .iter()
                .map(|v| number(v, "coefficient"))
                .collect::<CliResult<Vec<_>>>()?;
            if lower.is_empty() {
                return Err(CliError::Input("monic divisor needs at least one coefficient".into()));
            }
            Ok(DivisorSpec::monic(normalization, lower))
        }
        other => Err(CliError::Input(format!("unknown divisor kind `{other}`"))),
    }
}

fn parse_family(input: &FamilyInput) -> CliResult<FamilySpec> {
    let family = match input {
        FamilyInput::Jacobi { alpha, gamma } => FamilySpec::jacobi(number(alpha, "alpha")?, number(gamma, "gamma")?),
        FamilyInput::Legendre => FamilySpec::Legendre,
        FamilyInput::ChebyshevU => FamilySpec::ChebyshevU,
        FamilyInput::Charlier { lambda } => FamilySpec::Charlier {
            lambda: number(lambda, "lambda")?,
        },
        FamilyInput::Semicircle => FamilySpec::Semicircle,
    };
    family.validate()?;
    Ok(family)
}

/// Reads and validates a problem file, applying the command-line flags.
pub fn load_problem(path: &Path, flags: &Flags, points: &[String], r: Option<usize>) -> CliResult<Problem> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let file: ProblemFile =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let precision = flags.precision.or(file.precision_bits).unwrap_or(DEFAULT_PRECISION);
    if precision < 32 {
        return Err(CliError::Input(format!("precision {precision} is below 32 bits")));
    }
    let backend = match flags.backend.or(file.backend).unwrap_or(BackendChoice::Float) {
        BackendChoice::Rational => Backend::Rational,
        BackendChoice::Float => Backend::float(precision),
    };
    let float = Backend::float(precision);
    let (family, recurrence, measure) = match (&file.family, &file.recurrence) {
        (Some(f), None) => {
            let family = parse_family(f)?;
            let rc = family.recurrence(backend)?;
            let measure = family.measure(float)?;
            (Some(family), rc, measure)
        }
        (None, Some(r)) => {
            let convert = |v: &[Value], what: &str| -> CliResult<Vec<Scalar>> {
                v.iter()
                    .map(|x| Ok(number(x, what)?.to_backend(backend)?))
                    .collect()
            };
            let rc = RecurrenceCoefficients::from_tables(convert(&r.beta, "beta")?, convert(&r.beta_hat, "beta_hat")?)?;
            let measure = MeasureSpec::from_recurrence(rc.with_backend(float)?, "tabulated recurrence");
            (None, rc, measure)
        }
        _ => {
            return Err(CliError::Input(
                "give exactly one of `family` and `recurrence`".into(),
            ))
        }
    };
    let divisor = parse_divisor(&file.divisor)?;
    let n = flags.n.or(file.n).unwrap_or(DEFAULT_N);
    let tol = flags.tol.or(file.tol).unwrap_or(DEFAULT_TOL);
    if !(tol >= 0.0) {
        return Err(CliError::Input(format!("tolerance {tol} must be non-negative")));
    }
    let points = if points.is_empty() {
        file.points
            .unwrap_or_default()
            .iter()
            .map(|v| number(v, "point"))
            .collect::<CliResult<Vec<_>>>()?
    } else {
        points
            .iter()
            .map(|p| number(&Value::String(p.clone()), "point"))
            .collect::<CliResult<Vec<_>>>()?
    };
    Ok(Problem {
        family,
        recurrence,
        measure,
        divisor,
        n,
        tol,
        precision,
        backend,
        points,
        r: r.or(file.r),
    })
}

/// Fills in `C`: the catalog closed form when there is one, otherwise quadrature.
pub fn resolve_divisor(problem: &Problem) -> CliResult<DivisorSpec> {
    let div = &problem.divisor;
    if let (Normalization::Auto, Some(family)) = (&div.normalization, &problem.family) {
        if let Ok(c) = family.reference_normalization(div, problem.backend) {
            let resolved = div.with_c(c);
            problem.measure.check_divisor(&resolved, problem.precision)?;
            return Ok(resolved);
        }
    }
    Ok(resolve_normalization(&problem.measure, div, &problem.options())?)
}

/// Output of [`run_transform`].
pub struct Transform {
    pub divisor: DivisorSpec,
    pub connection: ConnectionCoefficients,
    pub recurrence: RecurrenceCoefficients,
    pub method: &'static str,
}

fn is_symmetric(rc: &RecurrenceCoefficients, n: usize) -> crate::error::Result<bool> {
    for k in 0..n {
        if !rc.beta(k)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn run_transform(problem: &Problem) -> CliResult<Transform> {
    if problem.n == 0 {
        return Err(CliError::Input("n must be at least 1".into()));
    }
    let divisor = resolve_divisor(problem)?;
    let rc = &problem.recurrence;
    let n = problem.n;
    match divisor.degree() {
        1 => {
            let cc = kappa_sequence(rc, &divisor, n)?;
            let target = transformed_recurrence(rc, &cc)?;
            Ok(Transform {
                divisor,
                connection: cc,
                recurrence: target,
                method: "linear",
            })
        }
        2 => {
            let (d, e) = divisor.quadratic_coefficients()?;
            if d.is_zero() && is_symmetric(rc, n + 1)? {
                let cc = symmetric_lambda_sequence(rc, divisor.c()?, e, n + 1)?;
                let target = symmetric_transformed_recurrence(rc, &cc)?;
                Ok(Transform {
                    connection: cc.truncated(n),
                    divisor,
                    recurrence: target,
                    method: "symmetric",
                })
            } else {
                let (cc, target) = general_quadratic_sequence(rc, &problem.measure, &divisor, n, &problem.options())?;
                Ok(Transform {
                    divisor,
                    connection: cc,
                    recurrence: target,
                    method: "forward",
                })
            }
        }
        d => Err(CliError::Input(format!(
            "no recursion exists for divisors of degree {d}; use the `oracle` command"
        ))),
    }
}

fn cell(v: &Scalar) -> [String; 2] {
    [v.to_string(), v.display_rounded(DISPLAY_DIGITS)]
}

fn push_csv_row(out: &mut String, cells: &[String]) {
    let _ = writeln!(out, "{}", cells.join(","));
}

fn value_pair(v: &Scalar) -> Value {
    json!({ "value": v.to_string(), "approx": v.display_rounded(DISPLAY_DIGITS) })
}

fn transform_report(problem: &Problem, t: &Transform, format: Format) -> CliResult<String> {
    let quadratic = t.connection.order() == 2;
    let c = t.divisor.c()?.clone();
    let n = problem.n;
    let mut rows = Vec::with_capacity(n);
    for m in 1..=n {
        let mut row = vec![("kappa", t.connection.kappa(m)?.clone())];
        if quadratic {
            row.push(("lambda", t.connection.lambda(m)?));
        }
        row.push(("alpha", t.recurrence.beta(m - 1)?));
        if let Ok(ah) = t.recurrence.beta_hat(m - 1) {
            row.push(("alpha_hat", ah));
        }
        rows.push(row);
    }
    Ok(match format {
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    let mut obj = serde_json::Map::new();
                    obj.insert("n".into(), json!(i + 1));
                    for (name, v) in row {
                        obj.insert((*name).into(), value_pair(v));
                    }
                    Value::Object(obj)
                })
                .collect();
            let report = json!({
                "method": t.method,
                "C": value_pair(&c),
                "divisor_degree": t.divisor.degree(),
                "rows": rows,
            });
            serde_json::to_string_pretty(&report).expect("json values serialize") + "\n"
        }
        Format::Csv => {
            log::info!("method {}, C = {}", t.method, c.display_rounded(DISPLAY_DIGITS));
            let mut out = String::new();
            let mut header = vec!["n".to_string()];
            let mut names = vec!["kappa"];
            if quadratic {
                names.push("lambda");
            }
            names.extend(["alpha", "alpha_hat"]);
            for name in &names {
                header.push(name.to_string());
                header.push(format!("{name}_approx"));
            }
            push_csv_row(&mut out, &header);
            for (i, row) in rows.iter().enumerate() {
                let mut cells = vec![(i + 1).to_string()];
                for name in &names {
                    match row.iter().find(|(k, _)| k == name) {
                        Some((_, v)) => cells.extend(cell(v)),
                        None => cells.extend([String::new(), String::new()]),
                    }
                }
                push_csv_row(&mut out, &cells);
            }
            out
        }
    })
}

/// One line of the `verify` report.
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub passed: bool,
}

pub fn run_verify(problem: &Problem) -> CliResult<(Transform, Vec<Check>)> {
    let t = run_transform(problem)?;
    let opts = problem.options();
    let tol = problem.tol;
    let rc = &problem.recurrence;
    let m = problem.n.min(MAX_CHECK_DEGREE);
    let mut checks = Vec::new();

    let defects = orthogonality_defects(rc, &t.connection, &problem.measure, &t.divisor, m, &opts)?;
    let worst = max_orthogonality_defect(&defects);
    checks.push(Check {
        name: "orthogonality",
        value: worst,
        passed: worst <= tol,
    });

    let min_alpha_hat = t
        .recurrence
        .beta_hats(t.recurrence.stored_lengths().map_or(0, |(_, h)| h))?
        .iter()
        .map(Scalar::to_f64)
        .fold(f64::INFINITY, f64::min);
    checks.push(Check {
        name: "alpha_hat_positive",
        value: min_alpha_hat,
        passed: min_alpha_hat > 0.0,
    });

    let invariant = if t.connection.order() == 1 {
        let d = t.divisor.linear_shift()?;
        conserved_residuals(rc, &t.connection, d)?
            .iter()
            .map(Scalar::to_f64)
            .fold(0.0, f64::max)
    } else {
        quadratic_residuals(rc, &t.connection, &t.recurrence)?.max()
    };
    checks.push(Check {
        name: "invariant_residual",
        value: invariant,
        passed: invariant <= tol,
    });

    let order = t.connection.order();
    let table = direct_connection_table(rc, &problem.measure, &t.divisor, order, m, &opts)?;
    let floor = Backend::float(problem.precision).from_f64(1e-6)?;
    let mut oracle = 0.0f64;
    for (i, row) in table.iter().enumerate() {
        let n = i + 1;
        oracle = oracle.max(relative_difference(&row[0], t.connection.kappa(n)?, &floor).to_f64());
        if order == 2 && n >= 2 {
            oracle = oracle.max(relative_difference(&row[1], &t.connection.lambda(n)?, &floor).to_f64());
        }
    }
    checks.push(Check {
        name: "oracle_agreement",
        value: oracle,
        passed: oracle <= tol,
    });
    Ok((t, checks))
}

fn verify_report(problem: &Problem, checks: &[Check], format: Format) -> String {
    match format {
        Format::Json => {
            let rows: Vec<Value> = checks
                .iter()
                .map(|c| json!({ "check": c.name, "value": format!("{:e}", c.value), "passed": c.passed }))
                .collect();
            serde_json::to_string_pretty(&json!({ "tolerance": problem.tol, "checks": rows })).expect("json") + "\n"
        }
        Format::Csv => {
            let mut out = String::from("check,value,tolerance,status\n");
            for c in checks {
                let _ = writeln!(
                    out,
                    "{},{:e},{:e},{}",
                    c.name,
                    c.value,
                    problem.tol,
                    if c.passed { "pass" } else { "FAIL" }
                );
            }
            out
        }
    }
}

fn expand_report(problem: &Problem, format: Format) -> CliResult<String> {
    if problem.divisor.degree() != 1 {
        return Err(CliError::Input("expansions are available for linear divisors only".into()));
    }
    let n = problem.n;
    let rc = &problem.recurrence;
    let (divisor, cc) = if n == 0 {
        (resolve_divisor(problem)?, ConnectionCoefficients::linear(Vec::new()))
    } else {
        let t = run_transform(problem)?;
        (t.divisor, t.connection)
    };
    let f = fourier_coefficients(&cc, rc, n)?;
    let sums = problem
        .points
        .iter()
        .map(|x| Ok((x.clone(), evaluate_partial_sum(rc, &f, n, x)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let (parseval, warning) = match parseval_residual(rc, &cc, &divisor, &problem.measure, n, &problem.options()) {
        Ok(report) => (Some(report), None),
        Err(Error::QuadratureDivergent(msg)) => (None, Some(format!("Parseval column omitted: {msg}"))),
        Err(e) => return Err(e.into()),
    };
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok(match format {
        Format::Json => {
            let coefficients: Vec<Value> = f
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let mut row = json!({ "n": i, "f": value_pair(v) });
                    if let Some(p) = &parseval {
                        row["parseval_partial"] = value_pair(&p.partial_sums[i]);
                    }
                    row
                })
                .collect();
            let partial: Vec<Value> = sums
                .iter()
                .map(|(x, s)| json!({ "x": x.to_string(), "partial_sum": value_pair(s) }))
                .collect();
            let parseval_json = parseval.as_ref().map(|p| {
                json!({
                    "rhs": value_pair(&p.rhs),
                    "residual": value_pair(&p.residual),
                    "log_weighted_sum_appears_convergent": p.summability.appears_convergent,
                })
            });
            let report = json!({
                "C": value_pair(divisor.c()?),
                "coefficients": coefficients,
                "partial_sums": partial,
                "parseval": parseval_json,
                "warning": warning,
            });
            serde_json::to_string_pretty(&report).expect("json") + "\n"
        }
        Format::Csv => {
            let mut out = String::new();
            if let Some(w) = &warning {
                let _ = writeln!(out, "# warning: {w}");
            }
            let mut header = vec!["n", "f_n", "f_n_approx"];
            if parseval.is_some() {
                header.extend(["parseval_partial", "parseval_partial_approx"]);
            }
            push_csv_row(&mut out, &header.iter().map(|s| s.to_string()).collect::<Vec<_>>());
            for (i, v) in f.iter().enumerate() {
                let mut cells = vec![i.to_string()];
                cells.extend(cell(v));
                if let Some(p) = &parseval {
                    cells.extend(cell(&p.partial_sums[i]));
                }
                push_csv_row(&mut out, &cells);
            }
            if let Some(p) = &parseval {
                let _ = writeln!(out, "# parseval_rhs = {}", p.rhs);
            }
            if !sums.is_empty() {
                out.push('\n');
                push_csv_row(&mut out, &["x".into(), "partial_sum".into(), "partial_sum_approx".into()]);
                for (x, s) in &sums {
                    let mut cells = vec![x.to_string()];
                    cells.extend(cell(s));
                    push_csv_row(&mut out, &cells);
                }
            }
            out
        }
    })
}

fn oracle_report(problem: &Problem, format: Format) -> CliResult<String> {
    if problem.n == 0 {
        return Err(CliError::Input("n must be at least 1".into()));
    }
    let r = problem.r.unwrap_or(problem.divisor.degree());
    if r == 0 {
        return Err(CliError::Input("r must be at least 1".into()));
    }
    let divisor = resolve_divisor(problem)?;
    let table = direct_connection_table(
        &problem.recurrence,
        &problem.measure,
        &divisor,
        r,
        problem.n,
        &problem.options(),
    )?;
    Ok(match format {
        Format::Json => {
            let rows: Vec<Value> = table
                .iter()
                .enumerate()
                .map(|(i, row)| json!({ "n": i + 1, "c": row.iter().map(value_pair).collect::<Vec<_>>() }))
                .collect();
            serde_json::to_string_pretty(&json!({ "r": r, "C": value_pair(divisor.c()?), "rows": rows })).expect("json")
                + "\n"
        }
        Format::Csv => {
            let mut out = String::new();
            let mut header = vec!["n".to_string()];
            for j in 1..=r {
                header.push(format!("c{j}"));
                header.push(format!("c{j}_approx"));
            }
            push_csv_row(&mut out, &header);
            for (i, row) in table.iter().enumerate() {
                let mut cells = vec![(i + 1).to_string()];
                for j in 0..r {
                    match row.get(j) {
                        Some(v) => cells.extend(cell(v)),
                        None => cells.extend([String::new(), String::new()]),
                    }
                }
                push_csv_row(&mut out, &cells);
            }
            out
        }
    })
}

fn emit(text: &str, output: &Option<PathBuf>) -> CliResult<()> {
    match output {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Input(format!("stdout: {e}")))
        }
    }
}

/// Runs one command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> CliResult<()> {
    let flags = &cli.flags;
    match &cli.command {
        Command::Transform { input } => {
            let problem = load_problem(input, flags, &[], None)?;
            let t = run_transform(&problem)?;
            emit(&transform_report(&problem, &t, flags.format)?, &flags.output)
        }
        Command::Verify { input } => {
            let problem = load_problem(input, flags, &[], None)?;
            let (_, checks) = run_verify(&problem)?;
            emit(&verify_report(&problem, &checks, flags.format), &flags.output)?;
            let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.name.to_string()).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Verification(failed))
            }
        }
        Command::Expand { input, points } => {
            let problem = load_problem(input, flags, points, None)?;
            emit(&expand_report(&problem, flags.format)?, &flags.output)
        }
        Command::Oracle { input, r } => {
            let problem = load_problem(input, flags, &[], *r)?;
            emit(&oracle_report(&problem, flags.format)?, &flags.output)
        }
    }
}

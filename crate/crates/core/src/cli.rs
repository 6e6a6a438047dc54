//! Command-line front end. Every subcommand renders either CSV (a bare value
//! for scalar results) or a JSON object `{meta, rows}`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::Serialize;
use serde_json::json;

use crate::dickman::{xi, RhoGrid, DEFAULT_STEP, MAX_U};
use crate::error::{domain, Error, Result};
use crate::primes::{PrimeTable, DEFAULT_MAX_LIMIT};
use crate::psi_exact::{
    psi_buchstab, psi_enumerate, psi_sieve, BoundaryRule, BuchstabOptions, EnumerateOptions, PsiResult, XForm,
    XValue, DEFAULT_MAX_COUNT, DEFAULT_MAX_SIEVE,
};
use crate::report::{csv_err, fmt_real};
use crate::saddle::solve_alpha;
use crate::theorem::{
    feasible_x_ladder, geometric_grid, oscillation_scan, regime_scan, write_oscillation_csv, write_regime_csv, y_of,
    RegimeContext,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

/// Largest power of ten tried by `compare --x auto`.
const AUTO_MAX_EXPONENT: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Enum,
    Sieve,
    Buchstab,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryArg {
    Include,
    Exclude,
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "friabilis", version, about = "Friable integer counts, Dickman's rho and saddle-point diagnostics")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    #[serde(skip)]
    output: Option<PathBuf>,
    /// Refuse enumerations whose estimated count exceeds this.
    #[arg(long, default_value_t = DEFAULT_MAX_COUNT, global = true)]
    max_count: f64,
    /// Largest x accepted by the sieve.
    #[arg(long, default_value_t = DEFAULT_MAX_SIEVE, global = true)]
    max_sieve: u64,
    /// Disable internal parallelism. Results are identical either way.
    #[arg(long, global = true)]
    #[serde(skip)]
    serial: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// π(limit); with --t, remainder samples ψ, π, li, Π, R, Q.
    Primes(PrimesArgs),
    /// ρ(u).
    Rho(RhoArgs),
    /// Tabulated log ρ on the marching grid.
    RhoGrid(RhoGridArgs),
    /// ξ(u), the nonzero root of e^ξ = 1 + uξ.
    Xi(XiArgs),
    /// The saddle point α(x, y).
    Alpha(AlphaArgs),
    /// Exact Ψ(x, y).
    Psi(PsiArgs),
    /// Ψ(x, y) against x·ρ(u) along y = (log x)^c.
    Compare(CompareArgs),
    /// S(α, y) − I((1 − α) log y) over a geometric y-grid.
    Oscillate(OscillateArgs),
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct XArgs {
    /// x as a decimal integer or in scientific notation such as 1e18.
    #[arg(long, conflicts_with = "log_x", required_unless_present = "log_x")]
    x: Option<String>,
    /// x given through its natural logarithm.
    #[arg(long)]
    log_x: Option<f64>,
}

impl XArgs {
    fn value(&self) -> Result<XValue> {
        match (&self.x, self.log_x) {
            (Some(s), _) => s.parse(),
            (None, Some(l)) if l.is_finite() && l >= 0.0 => Ok(XValue::from_log(l)),
            (None, Some(l)) => domain(format!("--log-x must be finite and >= 0, got {l}")),
            (None, None) => domain("either --x or --log-x is required"),
        }
    }
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct PrimesArgs {
    #[arg(long)]
    limit: u64,
    /// Abscissae for remainder samples; repeatable.
    #[arg(long)]
    t: Vec<f64>,
    /// Also write the binary prime cache to this path.
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct RhoArgs {
    #[arg(long)]
    u: f64,
    /// Grid step.
    #[arg(long, default_value_t = DEFAULT_STEP)]
    h: f64,
    /// Print log ρ(u) instead of ρ(u).
    #[arg(long)]
    log: bool,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct RhoGridArgs {
    #[arg(long)]
    u_max: f64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    h: f64,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct XiArgs {
    #[arg(long)]
    u: f64,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct AlphaArgs {
    #[command(flatten)]
    x: XArgs,
    #[arg(long)]
    y: f64,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct PsiArgs {
    #[command(flatten)]
    x: XArgs,
    #[arg(long)]
    y: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Enum)]
    method: MethodArg,
    /// How to count guard-band points when x is known only through log x.
    #[arg(long, value_enum, default_value_t = BoundaryArg::Exclude)]
    boundary: BoundaryArg,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct CompareArgs {
    #[arg(long)]
    c: f64,
    /// Values of x, space separated or repeated; `auto` picks the largest feasible power of ten.
    #[arg(long, required = true, num_args = 1..)]
    x: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct OscillateArgs {
    #[arg(long)]
    c: f64,
    #[arg(long, default_value_t = 100.0)]
    y_min: f64,
    #[arg(long, default_value_t = 1e6)]
    y_max: f64,
    #[arg(long, default_value_t = 5)]
    y_steps: usize,
}

/// Result of a subcommand before rendering.
struct Rendered {
    /// The CSV rendering, or the bare value for scalar results.
    csv: Vec<u8>,
    rows: serde_json::Value,
    x_form: Option<XForm>,
}

fn scalar(text: String, rows: serde_json::Value, x_form: Option<XForm>) -> Rendered {
    let mut csv = text.into_bytes();
    csv.push(b'\n');
    Rendered { csv, rows, x_form }
}

fn to_json<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Error::Format(e.to_string()))
}

/// Shortest decimal that reads back as the same double.
fn fmt_scalar(v: f64) -> String {
    format!("{v:?}")
}

fn table_for(bound: f64) -> Result<PrimeTable> {
    let limit = if bound.is_finite() { bound.floor().max(2.0) } else { f64::INFINITY };
    if limit > DEFAULT_MAX_LIMIT as f64 {
        return Err(Error::Resource {
            message: format!("a prime table up to {limit:.3e} exceeds the cap {DEFAULT_MAX_LIMIT}"),
            estimate: Some(limit),
        });
    }
    PrimeTable::sieve(limit as u64)
}

fn grid_for(u: f64, h: f64) -> Result<RhoGrid> {
    RhoGrid::build(u.max(1.0).ceil().min(MAX_U).max(u), h)
}

fn cmd_primes(a: &PrimesArgs) -> Result<Rendered> {
    let table = PrimeTable::sieve(a.limit)?;
    if let Some(path) = &a.save {
        table.save(path)?;
    }
    if a.t.is_empty() {
        let n = table.len();
        return Ok(scalar(n.to_string(), json!([{ "limit": a.limit, "pi": n }]), None));
    }
    let samples = a.t.iter().map(|&t| table.remainder_sample(t)).collect::<Result<Vec<_>>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "psi_t", "pi_t", "li_t", "big_pi_t", "r_t", "q_t"]).map_err(csv_err)?;
    for s in &samples {
        w.write_record([
            fmt_real(s.t),
            fmt_real(s.psi_t),
            s.pi_t.to_string(),
            fmt_real(s.li_t),
            fmt_real(s.big_pi_t),
            fmt_real(s.r_t),
            fmt_real(s.q_t),
        ])
        .map_err(csv_err)?;
    }
    let csv = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    Ok(Rendered { csv, rows: to_json(&samples)?, x_form: None })
}

fn cmd_rho(a: &RhoArgs) -> Result<Rendered> {
    if !(a.u >= 0.0) {
        return domain(format!("rho requires u >= 0, got {}", a.u));
    }
    let grid = grid_for(a.u, a.h)?;
    let log_rho = grid.log_rho(a.u)?;
    let rho = log_rho.exp();
    let shown = if a.log { log_rho } else { rho };
    Ok(scalar(fmt_scalar(shown), json!([{ "u": a.u, "rho": rho, "log_rho": log_rho }]), None))
}

fn cmd_rho_grid(a: &RhoGridArgs) -> Result<Rendered> {
    let grid = RhoGrid::build(a.u_max, a.h)?;
    let mut csv = Vec::new();
    grid.write_csv(&mut csv)?;
    let rows: Vec<_> = grid
        .log_rho_nodes()
        .iter()
        .enumerate()
        .map(|(i, &l)| (grid.node_u(i), l))
        .take_while(|&(u, _)| u <= grid.u_max())
        .map(|(u, l)| json!({ "u": u, "log_rho": l }))
        .collect();
    Ok(Rendered { csv, rows: serde_json::Value::Array(rows), x_form: None })
}

fn cmd_xi(a: &XiArgs) -> Result<Rendered> {
    let v = xi(a.u)?;
    Ok(scalar(fmt_scalar(v.xi), to_json(&[v])?, None))
}

fn cmd_alpha(a: &AlphaArgs) -> Result<Rendered> {
    let x = a.x.value()?;
    if !(a.y >= 2.0) {
        return domain(format!("y must be >= 2, got {}", a.y));
    }
    let table = table_for(a.y)?;
    let state = solve_alpha(x.log_x(), &table, a.y)?;
    Ok(scalar(fmt_scalar(state.alpha), to_json(&[state])?, Some(x.form())))
}

fn run_method(method: MethodArg, x: &XValue, y: f64, cli: &Cli, table: &PrimeTable, rule: BoundaryRule) -> Result<PsiResult> {
    let exact_u64 = || {
        x.as_u64().ok_or_else(|| Error::Resource {
            message: "this method needs an exact x below 2^64".into(),
            estimate: None,
        })
    };
    match method {
        MethodArg::Enum => psi_enumerate(
            x,
            table,
            y,
            &EnumerateOptions {
                max_count: cli.max_count,
                boundary_rule: rule,
                parallel: !cli.serial,
                ..Default::default()
            },
        ),
        MethodArg::Sieve => psi_sieve(exact_u64()?, y, cli.max_sieve),
        MethodArg::Buchstab => psi_buchstab(exact_u64()?, table, y, &BuchstabOptions::default()),
        MethodArg::All => unreachable!("expanded by the caller"),
    }
}

fn cmd_psi(a: &PsiArgs, cli: &Cli) -> Result<Rendered> {
    let x = a.x.value()?;
    if !(a.y >= 2.0) {
        return domain(format!("y must be >= 2, got {}", a.y));
    }
    let x_bound = x.log_x().exp();
    if a.y >= x_bound && x_bound > cli.max_count {
        return Err(Error::Resource {
            message: format!("Ψ(x, y) = ⌊x⌋ ≈ {x_bound:.3e} exceeds the count cap {:.3e}", cli.max_count),
            estimate: Some(x_bound),
        });
    }
    let table = table_for(a.y.min(x_bound * (1.0 + 1e-12) + 1.0))?;
    let rule = match a.boundary {
        BoundaryArg::Include => BoundaryRule::Include,
        BoundaryArg::Exclude => BoundaryRule::Exclude,
    };
    let methods: &[MethodArg] = match a.method {
        MethodArg::All => &[MethodArg::Enum, MethodArg::Sieve, MethodArg::Buchstab],
        m => std::slice::from_ref(match m {
            MethodArg::Enum => &MethodArg::Enum,
            MethodArg::Sieve => &MethodArg::Sieve,
            _ => &MethodArg::Buchstab,
        }),
    };
    let results = methods
        .iter()
        .map(|&m| run_method(m, &x, a.y, cli, &table, rule))
        .collect::<Result<Vec<_>>>()?;
    let first: &BigUint = &results[0].count;
    if let Some(bad) = results.iter().find(|r| &r.count != first) {
        return Err(Error::Numeric(format!(
            "methods disagree: {} gives {}, {} gives {}",
            results[0].method, first, bad.method, bad.count
        )));
    }
    Ok(scalar(first.to_string(), to_json(&results)?, Some(x.form())))
}

fn cmd_compare(a: &CompareArgs, cli: &Cli) -> Result<Rendered> {
    crate::theorem::Regime::of(a.c)?;
    let mut xs = Vec::with_capacity(a.x.len());
    for s in &a.x {
        if s == "auto" {
            let probe = table_for(y_of(10f64.ln() * AUTO_MAX_EXPONENT as f64, a.c))?;
            let ladder = feasible_x_ladder(a.c, &probe, cli.max_count, AUTO_MAX_EXPONENT)?;
            match ladder.last() {
                Some(x) => xs.push(x.clone()),
                None => return domain(format!("no feasible x for c = {}", a.c)),
            }
        } else {
            xs.push(s.parse::<XValue>()?);
        }
    }
    let ys: Vec<f64> = xs.iter().map(|x| y_of(x.log_x(), a.c)).collect();
    let y_max = ys.iter().cloned().fold(2.0, f64::max);
    let u_max = xs
        .iter()
        .zip(&ys)
        .map(|(x, &y)| if y > 1.0 { x.log_x() / y.ln() } else { f64::INFINITY })
        .fold(1.0, f64::max);
    let table = table_for(y_max)?;
    let grid = grid_for(u_max + 1.0, DEFAULT_STEP)?;
    let ctx = RegimeContext {
        table: &table,
        grid: &grid,
        enumerate: EnumerateOptions {
            max_count: cli.max_count,
            parallel: !cli.serial,
            ..Default::default()
        },
    };
    let rows = regime_scan(&xs, a.c, &ctx)?;
    let mut csv = Vec::new();
    write_regime_csv(&rows, &mut csv)?;
    let form = xs.first().map(XValue::form);
    Ok(Rendered { csv, rows: to_json(&rows)?, x_form: form })
}

fn cmd_oscillate(a: &OscillateArgs, cli: &Cli) -> Result<Rendered> {
    let ys = geometric_grid(a.y_min, a.y_max, a.y_steps)?;
    let table = table_for(a.y_max)?;
    let rows = oscillation_scan(a.c, &ys, &table, !cli.serial)?;
    let mut csv = Vec::new();
    write_oscillation_csv(&rows, &mut csv)?;
    Ok(Rendered { csv, rows: to_json(&rows)?, x_form: None })
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Primes(_) => "primes",
        Command::Rho(_) => "rho",
        Command::RhoGrid(_) => "rho-grid",
        Command::Xi(_) => "xi",
        Command::Alpha(_) => "alpha",
        Command::Psi(_) => "psi",
        Command::Compare(_) => "compare",
        Command::Oscillate(_) => "oscillate",
    }
}

fn execute(cli: &Cli) -> Result<Vec<u8>> {
    if !(cli.max_count > 0.0) {
        return domain(format!("--max-count must be positive, got {}", cli.max_count));
    }
    let out = match &cli.command {
        Command::Primes(a) => cmd_primes(a)?,
        Command::Rho(a) => cmd_rho(a)?,
        Command::RhoGrid(a) => cmd_rho_grid(a)?,
        Command::Xi(a) => cmd_xi(a)?,
        Command::Alpha(a) => cmd_alpha(a)?,
        Command::Psi(a) => cmd_psi(a, cli)?,
        Command::Compare(a) => cmd_compare(a, cli)?,
        Command::Oscillate(a) => cmd_oscillate(a, cli)?,
    };
    match cli.format {
        Format::Csv => Ok(out.csv),
        Format::Json => {
            let doc = json!({
                "meta": {
                    "version": env!("CARGO_PKG_VERSION"),
                    "subcommand": subcommand_name(&cli.command),
                    "config": cli,
                    "x_form": out.x_form,
                },
                "rows": out.rows,
            });
            let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| Error::Format(e.to_string()))?;
            bytes.push(b'\n');
            Ok(bytes)
        }
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::Range(_) => EXIT_DOMAIN,
        Error::Resource { .. } => EXIT_RESOURCE,
        _ => EXIT_FAILURE,
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Results go to `--output` or standard output, errors to
/// standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let written = execute(&cli).and_then(|bytes| match &cli.output {
        Some(path) => std::fs::write(path, &bytes).map_err(Error::from),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&bytes)?;
            stdout.flush().map_err(Error::from)
        }
    });
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("friabilis: {e}");
            exit_code(&e)
        }
    }
}

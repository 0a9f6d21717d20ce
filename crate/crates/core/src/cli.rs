//! Command-line front end. [`run`] is what the `gsrdp` binary calls; it is
//! public so the whole surface can be driven in-process.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::accountant::{
    self, bounded_order_limit, c_constant, compose, epsilon, rdp_to_dp_composed, AccountantError,
    BoundSummary, Mode, PrivacyParams,
};
use crate::dataset::{self, Dataset, DatasetError, NeighborSign};
use crate::mechanism::{self, GeneratorConfig, MechanismError};
use crate::oracle::{self, OracleError, SearchReport, SearchSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONDITION: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const SEED_ENV: &str = "GSRDP_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid --{flag}: {reason}")]
    Usage { flag: &'static str, reason: String },
    #[error("{0}")]
    Condition(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } => EXIT_USAGE,
            CliError::Condition(_) => EXIT_CONDITION,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

fn usage(flag: &'static str, reason: impl Into<String>) -> CliError {
    CliError::Usage {
        flag,
        reason: reason.into(),
    }
}

impl From<AccountantError> for CliError {
    fn from(e: AccountantError) -> Self {
        match e {
            AccountantError::InvalidParameter { name, reason } => usage(name, reason),
            AccountantError::EmptyGrid => usage("alpha", "empty order grid"),
            AccountantError::ConditionViolated(r) => {
                CliError::Condition(format!("the privacy bound does not apply: {r}"))
            }
            AccountantError::AllInfeasible => {
                CliError::Condition("no order in the grid satisfies the conditions".into())
            }
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<MechanismError> for CliError {
    fn from(e: MechanismError) -> Self {
        match e {
            MechanismError::Covariance(m) => {
                CliError::Condition(format!("covariance cannot be sampled from: {m}"))
            }
            MechanismError::Dataset(d) => d.into(),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::InvalidInput(s) => usage("alpha", s),
            OracleError::Dataset(d) => d.into(),
            other => CliError::Condition(other.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "gsrdp",
    version,
    about = "Rényi-DP accounting for a mean/covariance Gaussian synthetic data generator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the (α, ε)-RDP bound for one configuration
    Bound(BoundArgs),
    /// Sweep ε over α for one or more dataset sizes
    Curve(CurveArgs),
    /// Reproduce the reference tables
    Tables(TablesArgs),
    /// Generate synthetic records from a CSV file
    Generate(GenerateArgs),
    /// Convert (α, ε)-RDP to (ε, δ)-DP
    Convert(ConvertArgs),
    /// Search for neighbor pairs that beat the unbounded bound
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Unbounded,
    Bounded,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Unbounded => Mode::Unbounded,
            ModeArg::Bounded => Mode::Bounded,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Record dimension
    #[arg(long)]
    pub d: usize,
    /// Eigenvalue floor of the input covariance
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value = "unbounded")]
    pub mode: ModeArg,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    /// Rényi order, > 1
    #[arg(long)]
    pub alpha: f64,
    /// Input dataset size
    #[arg(long)]
    pub n: u64,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of output records to compose over: an integer, or `n`
    #[arg(long, default_value = "1")]
    pub compose: String,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[arg(long, default_value_t = 1.01)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 30.0)]
    pub alpha_max: f64,
    /// Number of α values per curve
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    /// Dataset sizes (comma-separated)
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Compose over n output records
    #[arg(long)]
    pub composed: bool,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct TablesArgs {
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    /// Map each column's observed range onto [-1, 1]
    Minmax,
    /// Use values as given; they must already lie in [-1, 1]
    None,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Number of synthetic records (default: input size)
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Columns to use (comma-separated; default: all)
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    #[arg(long)]
    pub sigma: f64,
    /// Order at which the guarantee is reported
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "minmax")]
    pub scale: Scale,
    /// Sidecar JSON path (default: OUTPUT with `.json` appended)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write the unclipped draws here, with a flag column per field
    #[arg(long)]
    pub emit_preclip: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Add,
    Remove,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub alpha: f64,
    /// Random candidates per base dataset
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Number of random base datasets
    #[arg(long, default_value_t = 1)]
    pub bases: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub sign: SignArg,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: &Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Bound(a) => cmd_bound(a, out),
        Command::Curve(a) => cmd_curve(a, out),
        Command::Tables(a) => cmd_tables(a, out),
        Command::Generate(a) => cmd_generate(a, out),
        Command::Convert(a) => cmd_convert(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    }
}

fn write_out(out: &mut dyn Write, s: &str) -> Result<(), CliError> {
    out.write_all(s.as_bytes())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(usage("alpha", format!("must exceed 1, got {alpha}")))
    }
}

fn check_sigma(sigma: f64) -> Result<(), CliError> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(usage("sigma", format!("must be positive, got {sigma}")))
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage("seed", format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

/// ε printed to four decimals, or in scientific notation when that would
/// hide it.
pub fn fmt_eps(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:.4e}")
    } else {
        format!("{v:.4}")
    }
}

fn parse_compose(s: &str, n: u64) -> Result<u64, CliError> {
    if s == "n" {
        return Ok(n);
    }
    match s.parse::<u64>() {
        Ok(k) if k >= 1 => Ok(k),
        _ => Err(usage("compose", format!("expected `n` or a positive integer, got {s:?}"))),
    }
}

fn cmd_bound(a: &BoundArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    check_alpha(a.alpha)?;
    check_sigma(a.model.sigma)?;
    let k = parse_compose(&a.compose, a.n)?;
    let params = PrivacyParams::new(a.model.d, a.n, a.model.sigma, a.alpha, a.model.mode.into())?;
    let result = epsilon(&params)?;
    let summary = BoundSummary::new(&params, &result, k);
    match a.format {
        Format::Json => write_out(out, &to_json(&summary))?,
        Format::Csv => {
            let mut s = String::from("mode,alpha,n,d,sigma,composed_over,epsilon_single,epsilon\n");
            s += &format!(
                "{},{},{},{},{},{},{:e},{}\n",
                summary.mode,
                summary.alpha,
                summary.n,
                summary.d,
                summary.sigma,
                summary.composed_over,
                summary.epsilon_single,
                summary.epsilon_composed
            );
            write_out(out, &s)?;
        }
        Format::Table => {
            let mut s = format!(
                "mode         {}\nalpha        {}\nn            {}\nd            {}\nsigma        {}\ntau          {}\nbranch       {}\n",
                summary.mode, summary.alpha, summary.n, summary.d, summary.sigma, summary.tau, summary.branch
            );
            if let (Some(e1), Some(e2)) = (summary.eps_alpha1, summary.eps_alpha2) {
                s += &format!("eps_alpha1   {e1:.6e}\neps_alpha2   {e2:.6e}\n");
            }
            if let (Some(p), Some(c)) = (summary.p_opt, summary.c) {
                s += &format!("c            {c:.4}\np_opt        {p:.6}\n");
            }
            s += &format!("epsilon/rec  {:.6e}\n", summary.epsilon_single);
            s += &format!("composed     {}\n", summary.composed_over);
            s += &format!("epsilon      {}\n", fmt_eps(summary.epsilon_composed));
            write_out(out, &s)?;
        }
    }
    Ok(EXIT_OK)
}

/// Largest admissible order for a size-`n` input: `c` for unbounded
/// neighbors, `c²/(2c−1)` for bounded ones.
pub fn order_limit(n: u64, d: usize, sigma: f64, mode: Mode) -> f64 {
    let c = c_constant(n as f64, accountant::tau(d, sigma));
    match mode {
        Mode::Unbounded => c,
        Mode::Bounded => bounded_order_limit(c),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: u64,
    pub alpha: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub n: u64,
    pub mode: Mode,
    pub points: Vec<CurvePoint>,
    /// The order limit, when it falls inside the requested range.
    pub cutoff: Option<f64>,
}

/// ε on an evenly spaced α grid, stopping at the first infeasible order.
pub fn alpha_curve(
    n: u64,
    base: &ModelArgs,
    alpha_min: f64,
    alpha_max: f64,
    steps: usize,
    composed: bool,
) -> Result<Curve, CliError> {
    let mode: Mode = base.mode.into();
    let limit = order_limit(n, base.d, base.sigma, mode);
    let mut points = Vec::new();
    let mut cutoff = None;
    for i in 0..steps {
        let alpha = if steps == 1 {
            alpha_min
        } else {
            alpha_min + (alpha_max - alpha_min) * i as f64 / (steps - 1) as f64
        };
        let params = PrivacyParams::new(base.d, n, base.sigma, alpha, mode)?;
        match epsilon(&params) {
            Ok(r) => points.push(CurvePoint {
                n,
                alpha,
                epsilon: if composed { compose(r.epsilon, n) } else { r.epsilon },
            }),
            Err(AccountantError::ConditionViolated(_)) => {
                cutoff = Some(limit);
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Curve {
        n,
        mode,
        points,
        cutoff,
    })
}

fn cmd_curve(a: &CurveArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    check_alpha(a.alpha_min)?;
    check_sigma(a.model.sigma)?;
    if !(a.alpha_max >= a.alpha_min && a.alpha_max.is_finite()) {
        return Err(usage("alpha-max", "must be at least --alpha-min"));
    }
    if a.steps == 0 {
        return Err(usage("steps", "must be positive"));
    }
    let curves = a
        .n
        .iter()
        .map(|&n| alpha_curve(n, &a.model, a.alpha_min, a.alpha_max, a.steps, a.composed))
        .collect::<Result<Vec<_>, _>>()?;
    if curves.iter().all(|c| c.points.is_empty()) {
        return Err(CliError::Condition(format!(
            "no feasible order in [{}, {}] for any n",
            a.alpha_min, a.alpha_max
        )));
    }
    match a.format {
        Format::Json => write_out(out, &to_json(&curves))?,
        Format::Csv | Format::Table => {
            let mut s = String::from("n,alpha,epsilon,note\n");
            for c in &curves {
                for p in &c.points {
                    s += &format!("{},{},{:e},\n", p.n, p.alpha, p.epsilon);
                }
                if let Some(limit) = c.cutoff {
                    s += &format!("{},{},,cutoff\n", c.n, limit);
                }
            }
            write_out(out, &s)?;
        }
    }
    Ok(EXIT_OK)
}

pub const TABLE_ALPHA: f64 = 4.0;
pub const TABLE_D: usize = 6;
pub const TABLE_SIGMA: f64 = 0.01;
pub const RDP_TABLE_SIZES: [u64; 4] = [10_000, 100_000, 1_000_000, 10_000_000];
pub const DP_TABLE_SIZES: [u64; 2] = [1_000_000, 10_000_000];
pub const DP_TABLE_ALPHAS: [f64; 6] = [2.0, 4.0, 7.0, 10.0, 20.0, 30.0];
pub const DP_TABLE_DELTAS: [f64; 5] = [1e-2, 1e-5, 1e-10, 1e-15, 1e-20];

/// ε composed over `n` outputs, or `None` when the conditions fail.
pub fn composed_epsilon(alpha: f64, n: u64, mode: Mode) -> Result<Option<f64>, CliError> {
    let params = PrivacyParams::new(TABLE_D, n, TABLE_SIGMA, alpha, mode)?;
    match epsilon(&params) {
        Ok(r) => Ok(Some(compose(r.epsilon, n))),
        Err(AccountantError::ConditionViolated(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdpTableRow {
    pub mode: Mode,
    pub n: u64,
    pub epsilon: Option<f64>,
}

/// ε at α = 4, d = 6, σ = 0.01 composed over `n` outputs.
pub fn rdp_table() -> Result<Vec<RdpTableRow>, CliError> {
    let mut rows = Vec::new();
    for mode in [Mode::Unbounded, Mode::Bounded] {
        for n in RDP_TABLE_SIZES {
            rows.push(RdpTableRow {
                mode,
                n,
                epsilon: composed_epsilon(TABLE_ALPHA, n, mode)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpTableCell {
    pub mode: Mode,
    pub n: u64,
    pub alpha: f64,
    pub delta: f64,
    pub epsilon_dp: Option<f64>,
    /// Smallest in its `(mode, n, delta)` column.
    pub column_min: bool,
}

/// (ε, δ)-DP values for each `(mode, n, α, δ)`, composed over `n`.
pub fn dp_table() -> Result<Vec<DpTableCell>, CliError> {
    let mut cells = Vec::new();
    for n in DP_TABLE_SIZES {
        for mode in [Mode::Unbounded, Mode::Bounded] {
            let start = cells.len();
            for alpha in DP_TABLE_ALPHAS {
                let eps = composed_epsilon(alpha, n, mode)?;
                for delta in DP_TABLE_DELTAS {
                    let epsilon_dp = match eps {
                        Some(e) => Some(rdp_to_dp_composed(alpha, e, delta, n)?.epsilon_dp),
                        None => None,
                    };
                    cells.push(DpTableCell {
                        mode,
                        n,
                        alpha,
                        delta,
                        epsilon_dp,
                        column_min: false,
                    });
                }
            }
            for delta in DP_TABLE_DELTAS {
                let best = cells[start..]
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.delta == delta)
                    .filter_map(|(i, c)| c.epsilon_dp.map(|e| (i, e)))
                    .min_by(|x, y| x.1.total_cmp(&y.1));
                if let Some((i, _)) = best {
                    cells[start + i].column_min = true;
                }
            }
        }
    }
    Ok(cells)
}

fn opt_fixed(v: Option<f64>, places: usize) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.places$}"))
}

fn cmd_tables(a: &TablesArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let one = rdp_table()?;
    let two = dp_table()?;
    match a.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Tables {
                rdp_table: Vec<RdpTableRow>,
                dp_table: Vec<DpTableCell>,
            }
            write_out(
                out,
                &to_json(&Tables {
                    rdp_table: one,
                    dp_table: two,
                }),
            )?;
        }
        Format::Csv => {
            let mut s = String::from("table,mode,n,alpha,delta,epsilon\n");
            for r in &one {
                s += &format!("1,{},{},{},,{}\n", r.mode, r.n, TABLE_ALPHA, opt_fixed(r.epsilon, 4));
            }
            for c in &two {
                s += &format!(
                    "2,{},{},{},{:e},{}\n",
                    c.mode,
                    c.n,
                    c.alpha,
                    c.delta,
                    opt_fixed(c.epsilon_dp, 3)
                );
            }
            write_out(out, &s)?;
        }
        Format::Table => {
            let mut s = format!(
                "RDP epsilon composed over n (alpha={TABLE_ALPHA}, d={TABLE_D}, sigma={TABLE_SIGMA})\n"
            );
            s += &format!("{:<10}", "n");
            for n in RDP_TABLE_SIZES {
                s += &format!("{n:>14}");
            }
            s.push('\n');
            for mode in [Mode::Unbounded, Mode::Bounded] {
                s += &format!("{:<10}", mode.to_string());
                for r in one.iter().filter(|r| r.mode == mode) {
                    s += &format!("{:>14}", opt_fixed(r.epsilon, 4));
                }
                s.push('\n');
            }
            s += &format!(
                "\n(epsilon, delta)-DP composed over n (d={TABLE_D}, sigma={TABLE_SIGMA}); * marks the column minimum\n"
            );
            for n in DP_TABLE_SIZES {
                for mode in [Mode::Unbounded, Mode::Bounded] {
                    s += &format!("\nn={n} {mode}\n{:<10}", "delta");
                    for d in DP_TABLE_DELTAS {
                        s += &format!("{:>11}", format!("{d:e}"));
                    }
                    s.push('\n');
                    for alpha in DP_TABLE_ALPHAS {
                        s += &format!("{:<10}", format!("alpha={alpha}"));
                        for c in two
                            .iter()
                            .filter(|c| c.n == n && c.mode == mode && c.alpha == alpha)
                        {
                            let mark = if c.column_min { "*" } else { " " };
                            s += &format!("{:>10}{mark}", opt_fixed(c.epsilon_dp, 3));
                        }
                        s.push('\n');
                    }
                }
            }
            write_out(out, &s)?;
        }
    }
    Ok(EXIT_OK)
}

/// Guarantee for one neighbor notion in the generate sidecar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeGuarantee {
    pub mode: Mode,
    pub bound: Option<BoundSummary>,
    /// Why the bound does not apply, when it does not.
    pub infeasible: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerateReport {
    pub input: String,
    pub output: String,
    pub n: usize,
    pub d: usize,
    pub output_count: usize,
    pub seed: u64,
    pub sigma: f64,
    pub min_eigenvalue: f64,
    pub alpha: f64,
    pub columns: Vec<String>,
    pub scaling: Option<dataset::Provenance>,
    pub clipped_cells: usize,
    pub guarantees: Vec<ModeGuarantee>,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(path, e))
}

fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    check_alpha(a.alpha)?;
    check_sigma(a.sigma)?;
    let seed = resolve_seed(a.seed)?;
    let table = dataset::load_csv(&a.input, &a.columns)?;
    let data = match a.scale {
        Scale::Minmax => dataset::normalize(&table)?,
        Scale::None => {
            let d = table.columns.len();
            Dataset::new(d, table.rows.clone())?
        }
    };
    let floor = data.in_sigma_floor(a.sigma)?;
    if !floor.member {
        return Err(CliError::Condition(format!(
            "dataset is outside D_sigma: minimum covariance eigenvalue {:.6} < sigma = {}; the guarantee would not apply",
            floor.min_eigenvalue, a.sigma
        )));
    }
    let count = a.count.unwrap_or(data.len());
    let generated = mechanism::generate_with_preclip(
        &data,
        GeneratorConfig {
            seed,
            output_count: count,
        },
    )?;

    let to_raw = |r: &Vec<f64>| match data.provenance() {
        Some(p) => p.inverse_transform(r),
        None => r.clone(),
    };
    let columns = table.columns.clone();
    let rows: Vec<Vec<f64>> = generated.records.records().iter().map(to_raw).collect();
    let mut w = create(&a.output)?;
    dataset::write_csv(&mut w, &columns, &rows)?;
    w.flush().map_err(|e| io_error(&a.output, e))?;

    if let Some(path) = &a.emit_preclip {
        let mut header = columns.clone();
        header.extend(columns.iter().map(|c| format!("{c}_clipped")));
        let mut w = csv::Writer::from_writer(create(path)?);
        let csv_err = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        w.write_record(&header).map_err(csv_err)?;
        for y in &generated.preclip {
            let mut rec: Vec<String> = to_raw(y).iter().map(|v| v.to_string()).collect();
            rec.extend(y.iter().map(|v| if v.abs() > 1.0 { "1" } else { "0" }.to_owned()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| io_error(path, e))?;
    }

    let mut guarantees = Vec::new();
    for mode in [Mode::Unbounded, Mode::Bounded] {
        let params = PrivacyParams::new(data.dim(), data.len() as u64, a.sigma, a.alpha, mode)?;
        guarantees.push(match epsilon(&params) {
            Ok(r) => ModeGuarantee {
                mode,
                bound: Some(BoundSummary::new(&params, &r, count as u64)),
                infeasible: None,
            },
            Err(AccountantError::ConditionViolated(rep)) => ModeGuarantee {
                mode,
                bound: None,
                infeasible: Some(rep.to_string()),
            },
            Err(e) => return Err(e.into()),
        });
    }
    let report = GenerateReport {
        input: a.input.display().to_string(),
        output: a.output.display().to_string(),
        n: data.len(),
        d: data.dim(),
        output_count: count,
        seed,
        sigma: a.sigma,
        min_eigenvalue: floor.min_eigenvalue,
        alpha: a.alpha,
        columns,
        scaling: data.provenance().cloned(),
        clipped_cells: generated.clipped_cells().len(),
        guarantees,
    };
    let report_path = a.report.clone().unwrap_or_else(|| {
        let mut p = a.output.clone().into_os_string();
        p.push(".json");
        PathBuf::from(p)
    });
    let mut w = create(&report_path)?;
    w.write_all(to_json(&report).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| io_error(&report_path, e))?;

    let mut s = format!(
        "wrote {} records to {}\nreport {}\n",
        count,
        a.output.display(),
        report_path.display()
    );
    for g in &report.guarantees {
        match &g.bound {
            Some(b) => {
                s += &format!(
                    "{:<10} alpha={} epsilon={} over {} outputs\n",
                    g.mode.to_string(),
                    a.alpha,
                    fmt_eps(b.epsilon_composed),
                    count
                )
            }
            None => s += &format!("{:<10} infeasible\n", g.mode.to_string()),
        }
    }
    write_out(out, &s)?;
    Ok(EXIT_OK)
}

fn cmd_convert(a: &ConvertArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    check_alpha(a.alpha)?;
    let g = accountant::rdp_to_dp(a.alpha, a.eps, a.delta)?;
    match a.format {
        Format::Json => write_out(out, &to_json(&g))?,
        Format::Csv => write_out(
            out,
            &format!(
                "alpha,eps,delta,epsilon_dp\n{},{},{:e},{}\n",
                a.alpha, a.eps, a.delta, g.epsilon_dp
            ),
        )?,
        Format::Table => write_out(out, &format!("{:.3}\n", g.epsilon_dp))?,
    }
    Ok(EXIT_OK)
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    check_alpha(a.alpha)?;
    check_sigma(a.sigma)?;
    if a.d == 0 {
        return Err(usage("d", "must be positive"));
    }
    if a.n < 2 {
        return Err(usage("n", "must be at least 2"));
    }
    if a.bases == 0 {
        return Err(usage("bases", "must be positive"));
    }
    let seed = resolve_seed(a.seed)?;
    let signs: &[NeighborSign] = match a.sign {
        SignArg::Add => &[NeighborSign::Add],
        SignArg::Remove => &[NeighborSign::Remove],
        SignArg::Both => &[NeighborSign::Add, NeighborSign::Remove],
    };
    let mut reports: Vec<SearchReport> = Vec::new();
    for b in 0..a.bases as u64 {
        for &sign in signs {
            reports.push(oracle::worst_case_search(&SearchSpec {
                d: a.d,
                n: a.n,
                sigma: a.sigma,
                alpha: a.alpha,
                sign,
                trials: a.trials,
                seed: seed.wrapping_add(b),
            })?);
        }
    }
    write_out(out, &to_json(&reports))?;
    Ok(if reports.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_CONDITION
    })
}

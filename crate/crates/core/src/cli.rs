//! Command-line front end. `run` returns the process exit code:
//! 0 pass, 1 verification failure, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::Value;

use crate::analytic;
use crate::constraints::{derive, DerivationReport, DEFAULT_TOL};
use crate::error::{LabError, Result};
use crate::fock::FockDims;
use crate::harness::{
    compare_grid, grid, residual_suite, scaling_suite, CompareConfig, Quantity, QuantityComparison, ResidualReport,
    ScalingReport, ScalingStatus, ThetaBranch, Verdict, DEFAULT_MIN_R2, VERSION,
};
use crate::modemap::BssnParams;
use crate::residual::BlockSet;

pub const OUT_DIR_ENV: &str = "BSSN_LAB_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "bssn-lab", version, about = "Numerical checks for a beam splitter with second-order nonlinearity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Residual norms of the output map and their scaling with κ.
    Verify(Invocation<VerifyArgs>),
    /// Rebuild the coupling family from the constraint nullspace.
    Family(Invocation<FamilyArgs>),
    /// Tabulate a closed-form prediction over a parameter range.
    Sweep(Invocation<SweepArgs>),
    /// Compare a closed-form prediction against the Fock-space oracle.
    Compare(Invocation<CompareArgs>),
}

#[derive(Debug, Args)]
struct Invocation<T: Args> {
    #[command(flatten)]
    args: T,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// JSON object whose keys override the command's flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for report files (default: $BSSN_LAB_OUT_DIR).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Print the JSON report on stdout instead of the summary.
    #[arg(long, conflicts_with = "quiet")]
    json: bool,
    /// Print nothing on stdout.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    /// JSON report plus a CSV table.
    Csv,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    /// Single coupling strength.
    #[arg(long, conflicts_with = "kappa_grid")]
    pub kappa: Option<f64>,
    /// Geometric κ-grid `lo:hi:count` or a list `k1,k2,…`.
    #[arg(long)]
    pub kappa_grid: Option<String>,
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub theta_bs: f64,
    /// Cutoffs `a,b,A,B`.
    #[arg(long, default_value = "6,6,4,4")]
    pub dims: String,
    #[arg(long, default_value_t = 2)]
    pub margin: usize,
    #[arg(long, default_value_t = 1.7)]
    pub slope_min: f64,
    #[arg(long, default_value_t = 2.3)]
    pub slope_max: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_R2)]
    pub min_r2: f64,
    /// Leave out the energy residual.
    #[arg(long)]
    pub drop_energy: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyArgs {
    #[arg(long, default_value_t = 0.7, allow_negative_numbers = true)]
    pub theta_bs: f64,
    #[arg(long, default_value = "5,5,4,4")]
    pub dims: String,
    #[arg(long, default_value_t = 2)]
    pub margin: usize,
    /// Relative singular-value threshold.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub drop_energy: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    pub quantity: Quantity,
    /// κ value or linear range `lo:hi:count`.
    #[arg(long, default_value = "0:0.3:31")]
    pub kappa: String,
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub theta_bs: f64,
    /// Local-oscillator phase for eq14 (default: η + ϑ/2).
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub x: f64,
    #[arg(long, default_value_t = 1.0)]
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchChoice {
    Both,
    Stated,
    Shifted,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareArgs {
    #[arg(long)]
    pub quantity: Quantity,
    /// Geometric κ-grid `lo:hi:count`, a list `k1,k2,…`, or a single value.
    #[arg(long, default_value = "1e-3:3e-2:5")]
    pub kappa_grid: String,
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub theta_bs: f64,
    #[arg(long, default_value_t = 1.0)]
    pub x: f64,
    #[arg(long, default_value_t = 1.0)]
    pub y: f64,
    /// Oracle cutoffs `a,b,A,B` (default: chosen from the amplitudes).
    #[arg(long)]
    pub dims: Option<String>,
    /// θ-branch of the fundamental squeezing witness.
    #[arg(long, value_enum, default_value_t = BranchChoice::Both)]
    pub branch: BranchChoice,
    /// Same as `--branch both`.
    #[arg(long)]
    pub both_theta_branches: bool,
    #[arg(long)]
    pub no_truncation_check: bool,
}

/// Report envelope written to disk.
#[derive(Debug, Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a C,
    result: R,
}

/// Parsed `lo:hi:count`, a comma-separated list, or a single number.
pub fn parse_range(s: &str, geometric: bool) -> Result<Vec<f64>> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| LabError::Parse(format!("bad number `{t}` in `{s}`")));
    if s.contains(',') {
        let values: Vec<f64> = s.split(',').map(num).collect::<Result<_>>()?;
        for v in &values {
            crate::error::finite("value", *v)?;
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Parse(format!("list `{s}` must be strictly increasing")));
        }
        return Ok(values);
    }
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(vec![crate::error::finite("value", num(v)?)?]),
        [lo, hi, count] => {
            let count = count.trim().parse::<usize>().map_err(|_| LabError::Parse(format!("bad count in `{s}`")))?;
            grid(num(lo)?, num(hi)?, count, geometric)
        }
        _ => Err(LabError::Parse(format!("expected `value` or `lo:hi:count`, got `{s}`"))),
    }
}

pub fn parse_dims(s: &str) -> Result<FockDims> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| LabError::Parse(format!("bad cutoff `{t}` in `{s}`"))))
        .collect::<Result<_>>()?;
    let arr: [usize; 4] = parts
        .try_into()
        .map_err(|_| LabError::Parse(format!("expected four cutoffs `a,b,A,B`, got `{s}`")))?;
    FockDims::new(arr)
}

fn is_usage(e: &LabError) -> bool {
    matches!(
        e,
        LabError::Parse(_) | LabError::InvalidParameter { .. } | LabError::NonFinite { .. } | LabError::InvalidCutoffs(_)
    )
}

/// Overlay the keys of a JSON config file onto the flag values.
fn apply_config<T: Serialize + DeserializeOwned>(args: T, path: Option<&Path>) -> Result<T> {
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(path).map_err(|e| LabError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let overlay: Value =
        serde_json::from_str(&text).map_err(|e| LabError::Parse(format!("{}: {e}", path.display())))?;
    let Value::Object(overlay) = overlay else {
        return Err(LabError::Parse(format!("{}: config must be a JSON object", path.display())));
    };
    let mut base = serde_json::to_value(&args).map_err(|e| LabError::Parse(e.to_string()))?;
    let obj = base.as_object_mut().expect("argument structs serialize to objects");
    for (k, v) in overlay {
        obj.insert(k, v);
    }
    serde_json::from_value(base).map_err(|e| LabError::Parse(format!("{}: {e}", path.display())))
}

struct Output {
    dir: Option<PathBuf>,
    format: Format,
    json: bool,
    quiet: bool,
}

impl Output {
    fn new(args: &OutputArgs) -> Self {
        let dir = args.out_dir.clone().or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from));
        Self { dir, format: args.format, json: args.json, quiet: args.quiet }
    }

    fn emit<C: Serialize, R: Serialize>(
        &self,
        command: &'static str,
        config: &C,
        result: R,
        summary: &str,
        csv: Option<CsvTable>,
    ) -> Result<()> {
        let envelope = Envelope { tool: "bssn-lab", version: VERSION, command, config, result };
        let mut json = serde_json::to_string_pretty(&envelope).map_err(|e| LabError::Io(e.to_string()))?;
        json.push('\n');
        let mut out: Box<dyn std::io::Write> =
            if self.quiet { Box::new(std::io::sink()) } else { Box::new(std::io::stdout().lock()) };
        if self.json {
            out.write_all(json.as_bytes())?;
        } else {
            out.write_all(summary.as_bytes())?;
        }
        if let Some(dir) = &self.dir {
            fs::create_dir_all(dir)?;
            let path = dir.join(format!("{command}.json"));
            fs::write(&path, &json)?;
            if !self.json {
                writeln!(out, "wrote {}", path.display())?;
            }
            if self.format == Format::Csv {
                if let Some(table) = csv {
                    let path = dir.join(format!("{command}.csv"));
                    fs::write(&path, table.render(config)?)?;
                    if !self.json {
                        writeln!(out, "wrote {}", path.display())?;
                    }
                }
            }
        }
        Ok(())
    }
}

struct CsvTable {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn render<C: Serialize>(&self, config: &C) -> Result<String> {
        let cfg = serde_json::to_string(config).map_err(|e| LabError::Io(e.to_string()))?;
        let mut text = format!("# bssn-lab {VERSION}\n# config: {cfg}\n");
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| LabError::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| LabError::Io(e.to_string()))?;
        text.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        Ok(text)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Parse arguments, run one command and return its exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Verify(inv) => with_config(inv, cmd_verify),
        Command::Family(inv) => with_config(inv, cmd_family),
        Command::Sweep(inv) => with_config(inv, cmd_sweep),
        Command::Compare(inv) => with_config(inv, cmd_compare),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            if is_usage(&e) {
                2
            } else {
                1
            }
        }
    }
}

fn with_config<T>(inv: Invocation<T>, f: fn(&T, &Output) -> Result<bool>) -> Result<bool>
where
    T: Args + Serialize + DeserializeOwned,
{
    let args = apply_config(inv.args, inv.output.config.as_deref())?;
    f(&args, &Output::new(&inv.output))
}

#[derive(Serialize)]
#[serde(untagged)]
enum VerifyResult {
    Single(ResidualReport),
    Scaling(ScalingReport),
}

fn cmd_verify_report(args: &VerifyArgs) -> Result<(bool, String, serde_json::Value, Vec<Vec<String>>)> {
    let dims = parse_dims(&args.dims)?;
    let blocks = if args.drop_energy { BlockSet::without_energy() } else { BlockSet::ALL };
    let mut summary = String::new();
    let mut rows = Vec::new();
    let (pass, result) = match (args.kappa, &args.kappa_grid) {
        (Some(k), None) => {
            let params = BssnParams::new(k, args.eta, args.theta_bs)?;
            let rep = residual_suite(&params, dims, args.margin, blocks)?;
            summary.push_str(&format!("residuals at kappa={k}, dims {dims}, margin {}\n", args.margin));
            for e in &rep.entries {
                let flag = if e.truncation_flag { "  TRUNCATION" } else { "" };
                summary.push_str(&format!("  {:<12} {:.3e}{flag}\n", e.kind.label(), e.norm));
                rows.push(vec![e.kind.label(), k.to_string(), e.norm.to_string(), e.norm_grown.to_string(), e.truncation_flag.to_string()]);
            }
            let flags = rep.truncation_flags();
            (flags.is_empty(), VerifyResult::Single(rep))
        }
        (None, grid_spec) => {
            let kappas = parse_range(grid_spec.as_deref().unwrap_or("1e-3:1e-1:7"), true)?;
            let rep = scaling_suite(
                args.eta,
                args.theta_bs,
                &kappas,
                dims,
                args.margin,
                blocks,
                (args.slope_min, args.slope_max),
                args.min_r2,
            )?;
            summary.push_str(&format!(
                "residual scaling over {} kappas, dims {dims}, margin {}\n",
                kappas.len(),
                args.margin
            ));
            for e in &rep.entries {
                let status = match e.status {
                    ScalingStatus::InBand => "ok",
                    ScalingStatus::Exact => "exact zero",
                    ScalingStatus::OutOfBand => "OUT OF BAND",
                };
                if e.status == ScalingStatus::Exact {
                    summary.push_str(&format!("  {:<12} max {:.1e}  {status}\n", e.kind.label(), max_abs(&e.fit.values)));
                } else {
                    summary.push_str(&format!(
                        "  {:<12} slope {:>7.4}  R^2 {:.5}  {status}\n",
                        e.kind.label(),
                        e.fit.slope,
                        e.fit.r_squared
                    ));
                }
                for (k, v) in e.fit.kappas.iter().zip(&e.fit.values) {
                    rows.push(vec![e.kind.label(), k.to_string(), v.to_string(), String::new(), String::new()]);
                }
            }
            for f in &rep.truncation_flags {
                summary.push_str(&format!("  truncation: {f}\n"));
            }
            (rep.pass, VerifyResult::Scaling(rep))
        }
        (Some(_), Some(_)) => {
            return Err(LabError::Parse("--kappa and --kappa-grid are mutually exclusive".into()));
        }
    };
    summary.push_str(if pass { "PASS\n" } else { "FAIL\n" });
    let value = serde_json::to_value(&result).map_err(|e| LabError::Io(e.to_string()))?;
    Ok((pass, summary, value, rows))
}

fn cmd_verify(args: &VerifyArgs, out: &Output) -> Result<bool> {
    let (pass, summary, value, rows) = cmd_verify_report(args)?;
    let table = CsvTable { header: vec!["residual", "kappa", "norm", "norm_grown", "truncation_flag"], rows };
    out.emit("verify", args, value, &summary, Some(table))?;
    Ok(pass)
}

fn family_summary(rep: &DerivationReport) -> String {
    let ns = &rep.nullspace;
    let fit = &rep.family_fit;
    let mut s = format!(
        "constraint matrix {} x 14 at theta_bs={}, dims {}, margin {}\n",
        rep.constraint_rows, rep.theta_bs, rep.dims, rep.margin
    );
    s.push_str("singular values:");
    for v in &ns.singular_values {
        s.push_str(&format!(" {v:.3e}"));
    }
    s.push('\n');
    let gap = ns.gap_ratio.map_or("n/a".to_string(), |g| format!("{g:.3e}"));
    s.push_str(&format!("nullspace dimension {} (gap ratio {gap})\n", ns.dimension));
    s.push_str(&format!(
        "family in nullspace: {:.3e}; nullspace in family span: {:.3e}\n",
        fit.family_in_nullspace, fit.nullspace_in_family
    ));
    if let Some(d) = &fit.discrepancy {
        s.push_str(&format!("discrepancy: {d}\n"));
    }
    for (i, extra) in fit.extra_directions.iter().enumerate() {
        let im = &extra.intermediates;
        s.push_str(&format!(
            "extra direction {i}: R0={:+.6} M={:+.6} X12={:+.6} X34={:+.6}\n",
            im.r0, im.m, im.x12, im.x34
        ));
    }
    let im = &rep.family_sample;
    s.push_str("intermediates of the family at kappa=0.1, eta=0.3:\n");
    for (j, z) in im.big_z.iter().enumerate() {
        s.push_str(&format!("  Z{} = {:+.6} {:+.6}i\n", j + 1, z[0], z[1]));
    }
    s.push_str(&format!(
        "  R0={:+.6} phi={:+.6} X0={:+.6} Y0={:+.6} Y={:+.6} X12={:+.6} X34={:+.6} M={:+.6}\n",
        im.r0, im.phi, im.x0, im.y0, im.y, im.x12, im.x34, im.m
    ));
    s
}

fn cmd_family(args: &FamilyArgs, out: &Output) -> Result<bool> {
    let dims = parse_dims(&args.dims)?;
    let blocks = if args.drop_energy { BlockSet::without_energy() } else { BlockSet::ALL };
    let rep = derive(args.theta_bs, dims, args.margin, args.tol, blocks)?;
    let mut summary = family_summary(&rep);
    let pass = !rep.nullspace.gap_flagged;
    if !pass {
        summary.push_str("FAIL: no clear spectral gap\n");
    }
    let rows = rep
        .nullspace
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), v.to_string(), (i >= rep.nullspace.rank).to_string()])
        .collect();
    let table = CsvTable { header: vec!["index", "singular_value", "in_nullspace"], rows };
    out.emit("family", args, &rep, &summary, Some(table))?;
    Ok(pass)
}

#[derive(Debug, Serialize)]
struct SweepRow {
    kappa: f64,
    theta: Option<f64>,
    kappa_sum: f64,
    value: Option<f64>,
    singular: bool,
}

#[derive(Debug, Serialize)]
struct SweepResult {
    quantity: Quantity,
    predicates: Vec<analytic::Predicates>,
    rows: Vec<SweepRow>,
}

fn cmd_sweep(args: &SweepArgs, out: &Output) -> Result<bool> {
    let analytic::InputAmplitudes { x, y } = analytic::InputAmplitudes::new(args.x, args.y)?;
    let kappas = parse_range(&args.kappa, false)?;
    let mut rows = Vec::new();
    let mut predicates = Vec::new();
    for &k in &kappas {
        let p = BssnParams::new(k, args.eta, args.theta_bs)?;
        let theta = match args.quantity {
            Quantity::Eq14 => Some(args.theta.unwrap_or(ThetaBranch::Stated.theta(p.eta, p.theta_bs))),
            Quantity::Eq17 => Some(analytic::s_sh_theta(p.theta_bs)),
            _ => None,
        };
        let value = match args.quantity {
            Quantity::Eq14 => Some(analytic::s_fund(k, p.eta, p.theta_bs, theta.unwrap(), x, y)),
            Quantity::Eq15 => Some(analytic::q_fund(k, x, y)),
            Quantity::Eq16 => analytic::q_sh(k, p.eta, x, y).ok(),
            Quantity::Eq17 => Some(analytic::s_sh(k, p.eta, x, y)),
        };
        predicates.push(analytic::predicates(k, p.eta, x, y));
        rows.push(SweepRow { kappa: k, theta, kappa_sum: k * (x + y), value, singular: value.is_none() });
    }
    let mut summary = format!("{} ({}) over {} kappas\n", args.quantity, args.quantity.description(), rows.len());
    let crossing = rows.windows(2).find_map(|w| match (w[0].value, w[1].value) {
        (Some(a), Some(b)) if a.signum() != b.signum() || a == 0.0 => Some(if a == 0.0 { w[0].kappa } else { w[1].kappa }),
        _ => None,
    });
    if let Some(k) = crossing {
        summary.push_str(&format!("sign change at kappa ~ {k}\n"));
    }
    let singular = rows.iter().filter(|r| r.singular).count();
    if singular > 0 {
        summary.push_str(&format!("{singular} singular point(s)\n"));
    }
    let csv_rows = rows
        .iter()
        .map(|r| {
            vec![
                args.quantity.to_string(),
                r.kappa.to_string(),
                args.eta.to_string(),
                args.theta_bs.to_string(),
                opt(r.theta),
                x.to_string(),
                y.to_string(),
                r.kappa_sum.to_string(),
                opt(r.value),
                r.singular.to_string(),
            ]
        })
        .collect();
    let table = CsvTable {
        header: vec!["quantity", "kappa", "eta", "theta_bs", "theta", "x", "y", "kappa_sum", "value", "singular"],
        rows: csv_rows,
    };
    let result = SweepResult { quantity: args.quantity, predicates, rows };
    out.emit("sweep", args, &result, &summary, Some(table))?;
    Ok(true)
}

pub fn compare_config(args: &CompareArgs) -> Result<CompareConfig> {
    let branch = if args.both_theta_branches {
        None
    } else {
        match args.branch {
            BranchChoice::Both => None,
            BranchChoice::Stated => Some(ThetaBranch::Stated),
            BranchChoice::Shifted => Some(ThetaBranch::Shifted),
        }
    };
    Ok(CompareConfig {
        quantity: args.quantity,
        kappas: parse_range(&args.kappa_grid, true)?,
        eta: args.eta,
        theta_bs: args.theta_bs,
        x: args.x,
        y: args.y,
        dims: args.dims.as_deref().map(parse_dims).transpose()?,
        branch,
        truncation_check: !args.no_truncation_check,
    })
}

fn compare_summary(results: &[QuantityComparison]) -> String {
    let mut s = String::new();
    for c in results {
        let branch = c.branch.map(|b| format!(" [{}]", if b == ThetaBranch::Stated { "stated" } else { "shifted" }));
        s.push_str(&format!(
            "{}{} ({}): {} - {}{}\n",
            c.quantity,
            branch.unwrap_or_default(),
            c.description,
            c.verdict,
            c.reason,
            if c.truncation_ok { "" } else { " (TRUNCATION)" }
        ));
    }
    s
}

fn cmd_compare(args: &CompareArgs, out: &Output) -> Result<bool> {
    let cfg = compare_config(args)?;
    let results = compare_grid(&cfg)?;
    let pass = results.iter().all(|c| c.verdict != Verdict::Inconclusive && c.truncation_ok);
    let summary = compare_summary(&results);
    let rows = results
        .iter()
        .flat_map(|c| {
            c.records.iter().map(move |r| {
                vec![
                    c.quantity.to_string(),
                    c.branch.map(|b| format!("{b:?}").to_lowercase()).unwrap_or_default(),
                    r.kappa.to_string(),
                    r.eta.to_string(),
                    r.theta_bs.to_string(),
                    opt(r.theta),
                    r.x.to_string(),
                    r.y.to_string(),
                    opt(r.analytic),
                    opt(r.oracle),
                    opt(r.abs_diff),
                    opt(r.rel_diff),
                    r.singular.to_string(),
                    opt(r.oracle_grown),
                    opt(r.truncation_change),
                    c.verdict.to_string(),
                ]
            })
        })
        .collect();
    let table = CsvTable {
        header: vec![
            "quantity",
            "branch",
            "kappa",
            "eta",
            "theta_bs",
            "theta",
            "x",
            "y",
            "analytic",
            "oracle",
            "abs_diff",
            "rel_diff",
            "singular",
            "oracle_grown",
            "truncation_change",
            "verdict",
        ],
        rows,
    };
    out.emit("compare", args, &results, &summary, Some(table))?;
    Ok(pass)
}

//! Verification runs: residual scaling suites, oracle-versus-closed-form
//! comparisons, and cutoff convergence studies.
//!
//! Everything here is deterministic. Grid points are evaluated in parallel but
//! collected in input order, and no timing information enters a report.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::error::{finite, LabError, Result};
use crate::fock::{poisson_tail, FockDims, QState, ZERO};
use crate::modemap::{bssn_outputs, family_coefficients, BssnParams, ModeOps, Port};
use crate::observables::Moments;
use crate::residual::{residual_operators, BlockSet, ResidualKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Norms at or below this are treated as exact zeros.
pub const EXACT_ZERO: f64 = 1e-13;
/// Relative change (cutoffs + 2) above which a residual is truncation-dominated.
pub const RESIDUAL_TRUNCATION_TOL: f64 = 0.1;
/// Relative change (cutoffs + 2) above which an oracle value is unconverged.
pub const ORACLE_TRUNCATION_TOL: f64 = 1e-8;
/// Poisson mass allowed beyond the fundamental cutoff when choosing oracle dims.
pub const ORACLE_LEAKAGE: f64 = 1e-13;
pub const ORACLE_SH_CUTOFF: usize = 5;
pub const DEFAULT_SLOPE_BAND: (f64, f64) = (1.7, 2.3);
pub const DEFAULT_MIN_R2: f64 = 0.99;

/// `count` points from `lo` to `hi`, geometric when `geometric` is set.
pub fn grid(lo: f64, hi: f64, count: usize, geometric: bool) -> Result<Vec<f64>> {
    finite("lo", lo)?;
    finite("hi", hi)?;
    let bad = |reason: String| Err(LabError::InvalidParameter { name: "grid", reason });
    if count == 0 {
        return bad("count must be positive".into());
    }
    if count == 1 {
        return if lo == hi { Ok(vec![lo]) } else { bad(format!("one point cannot span {lo}..{hi}")) };
    }
    if hi <= lo {
        return bad(format!("need lo < hi, got {lo}..{hi}"));
    }
    if geometric && lo <= 0.0 {
        return bad(format!("geometric grid needs lo > 0, got {lo}"));
    }
    let steps = (count - 1) as f64;
    Ok((0..count)
        .map(|k| {
            let t = k as f64 / steps;
            if k + 1 == count {
                hi
            } else if geometric {
                lo * (hi / lo).powf(t)
            } else {
                lo + (hi - lo) * t
            }
        })
        .collect())
}

/// Least-squares fit of `ln v = slope · ln κ + intercept` over the points
/// with `κ > 0` and `v > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub kappas: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Root-mean-square residual of the fit in `ln v`.
    pub rms_log_residual: f64,
    /// Every value is at or below [`EXACT_ZERO`].
    pub exact_zero: bool,
    pub points_used: usize,
}

impl ScalingFit {
    pub fn new(kappas: &[f64], values: &[f64]) -> Self {
        let exact_zero = values.iter().all(|v| v.abs() <= EXACT_ZERO);
        let pts: Vec<(f64, f64)> = kappas
            .iter()
            .zip(values)
            .filter(|(k, v)| **k > 0.0 && v.abs() > 0.0 && v.is_finite())
            .map(|(k, v)| (k.ln(), v.abs().ln()))
            .collect();
        let n = pts.len() as f64;
        let (slope, intercept, r_squared, rms_log_residual) = if pts.len() < 2 {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        } else {
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let slope = sxy / sxx;
            let intercept = my - slope * mx;
            let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
            let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
            let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
            (slope, intercept, r2, (ss_res / n).sqrt())
        };
        Self {
            kappas: kappas.to_vec(),
            values: values.to_vec(),
            slope,
            intercept,
            r_squared,
            rms_log_residual,
            exact_zero,
            points_used: pts.len(),
        }
    }

    /// A power law describes the data: R² clears `min_r2`, or the data are
    /// nearly flat and the log residual is within [`FLAT_FIT_RMS`]. R² alone
    /// cannot judge a slope-zero fit.
    pub fn well_fit(&self, min_r2: f64) -> bool {
        self.r_squared >= min_r2 || self.rms_log_residual <= FLAT_FIT_RMS
    }

    /// Leading coefficient `C` in `|v| ≈ C κ^slope`.
    pub fn coefficient(&self) -> f64 {
        self.intercept.exp()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualEntry {
    pub kind: ResidualKind,
    pub norm: f64,
    /// Same residual at cutoffs + 2 and margin + 2.
    pub norm_grown: f64,
    pub truncation_flag: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub params: BssnParams,
    pub dims: FockDims,
    pub margin: usize,
    pub entries: Vec<ResidualEntry>,
}

impl ResidualReport {
    pub fn truncation_flags(&self) -> Vec<String> {
        self.entries.iter().filter(|e| e.truncation_flag).map(|e| e.kind.label()).collect()
    }
}

fn residual_norms(params: &BssnParams, dims: FockDims, margin: usize, blocks: BlockSet) -> Vec<(ResidualKind, f64)> {
    let inputs = ModeOps::ladders(dims);
    let outputs = ModeOps::from_ops(bssn_outputs(params, &inputs));
    let reversal = family_coefficients(params);
    residual_operators(&outputs, &inputs, &reversal, blocks)
        .into_iter()
        .map(|(kind, op)| (kind, op.interior_norm(margin)))
        .collect()
}

/// Interior norms of every residual of the reduced family, with a
/// truncation check at larger cutoffs over the same interior subspace.
pub fn residual_suite(params: &BssnParams, dims: FockDims, margin: usize, blocks: BlockSet) -> Result<ResidualReport> {
    if margin < 2 {
        return Err(LabError::InvalidParameter { name: "margin", reason: format!("must be >= 2, got {margin}") });
    }
    if dims.interior_indices(margin).is_empty() {
        return Err(LabError::InvalidParameter {
            name: "dims",
            reason: format!("interior of {dims} at margin {margin} is empty"),
        });
    }
    let (base, grown) = rayon::join(
        || residual_norms(params, dims, margin, blocks),
        || residual_norms(params, dims.grown(2), margin + 2, blocks),
    );
    let entries = base
        .into_iter()
        .zip(grown)
        .map(|((kind, norm), (_, norm_grown))| {
            let scale = norm.max(norm_grown);
            let truncation_flag = scale > EXACT_ZERO && (norm - norm_grown).abs() > RESIDUAL_TRUNCATION_TOL * scale;
            ResidualEntry { kind, norm, norm_grown, truncation_flag }
        })
        .collect();
    Ok(ResidualReport { params: *params, dims, margin, entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingStatus {
    /// Slope inside the band with adequate R².
    InBand,
    /// Identically zero at every κ.
    Exact,
    OutOfBand,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingEntry {
    pub kind: ResidualKind,
    pub fit: ScalingFit,
    pub status: ScalingStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub eta: f64,
    pub theta_bs: f64,
    pub dims: FockDims,
    pub margin: usize,
    pub band: (f64, f64),
    pub min_r_squared: f64,
    pub entries: Vec<ScalingEntry>,
    pub truncation_flags: Vec<String>,
    pub pass: bool,
}

/// Residual norms over a κ-grid with log-log slope fits.
#[allow(clippy::too_many_arguments)]
pub fn scaling_suite(
    eta: f64,
    theta_bs: f64,
    kappas: &[f64],
    dims: FockDims,
    margin: usize,
    blocks: BlockSet,
    band: (f64, f64),
    min_r_squared: f64,
) -> Result<ScalingReport> {
    let params: Vec<BssnParams> =
        kappas.iter().map(|&k| BssnParams::new(k, eta, theta_bs)).collect::<Result<_>>()?;
    let reports: Vec<ResidualReport> =
        params.par_iter().map(|p| residual_suite(p, dims, margin, blocks)).collect::<Result<_>>()?;

    let kinds = blocks.kinds();
    let entries: Vec<ScalingEntry> = kinds
        .iter()
        .enumerate()
        .map(|(i, kind)| {
            let values: Vec<f64> = reports.iter().map(|r| r.entries[i].norm).collect();
            let fit = ScalingFit::new(kappas, &values);
            let status = if fit.exact_zero {
                ScalingStatus::Exact
            } else if fit.slope >= band.0 && fit.slope <= band.1 && fit.r_squared >= min_r_squared {
                ScalingStatus::InBand
            } else {
                ScalingStatus::OutOfBand
            };
            ScalingEntry { kind: *kind, fit, status }
        })
        .collect();
    let mut truncation_flags = Vec::new();
    for (k, r) in kappas.iter().zip(&reports) {
        truncation_flags.extend(r.truncation_flags().into_iter().map(|l| format!("{l} at kappa={k}")));
    }
    let pass = truncation_flags.is_empty() && entries.iter().all(|e| e.status != ScalingStatus::OutOfBand);
    Ok(ScalingReport {
        eta,
        theta_bs,
        dims,
        margin,
        band,
        min_r_squared,
        entries,
        truncation_flags,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Eq14,
    Eq15,
    Eq16,
    Eq17,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [Quantity::Eq14, Quantity::Eq15, Quantity::Eq16, Quantity::Eq17];

    pub fn label(self) -> &'static str {
        match self {
            Quantity::Eq14 => "eq14",
            Quantity::Eq15 => "eq15",
            Quantity::Eq16 => "eq16",
            Quantity::Eq17 => "eq17",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Quantity::Eq14 => "squeezing witness, port c",
            Quantity::Eq15 => "Mandel Q, port c",
            Quantity::Eq16 => "Mandel Q, port C",
            Quantity::Eq17 => "squeezing witness, port C",
        }
    }

    pub fn port(self) -> Port {
        match self {
            Quantity::Eq14 | Quantity::Eq15 => Port::FundC,
            Quantity::Eq16 | Quantity::Eq17 => Port::HarmC,
        }
    }

    pub fn branches(self) -> Vec<Option<ThetaBranch>> {
        match self {
            Quantity::Eq14 => vec![Some(ThetaBranch::Stated), Some(ThetaBranch::Shifted)],
            _ => vec![None],
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Quantity {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.label() == s)
            .ok_or_else(|| LabError::Parse(format!("unknown quantity `{s}` (expected eq14..eq17)")))
    }
}

/// Local-oscillator phase choice for the fundamental squeezing witness:
/// `θ = η + ϑ/2` as stated, or shifted by π.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaBranch {
    Stated,
    Shifted,
}

impl ThetaBranch {
    pub fn theta(self, eta: f64, theta_bs: f64) -> f64 {
        let base = eta + 0.5 * theta_bs;
        match self {
            ThetaBranch::Stated => base,
            ThetaBranch::Shifted => base + PI,
        }
    }
}

/// Smallest fundamental cutoffs whose coherent leakage is below
/// [`ORACLE_LEAKAGE`], with [`ORACLE_SH_CUTOFF`] for the harmonics.
pub fn oracle_dims(x: f64, y: f64) -> FockDims {
    let cutoff = |amp: f64| (4..).find(|&n| poisson_tail(amp * amp, n) < ORACLE_LEAKAGE).expect("tail vanishes");
    FockDims::new([cutoff(x), cutoff(y), ORACLE_SH_CUTOFF, ORACLE_SH_CUTOFF]).expect("cutoffs >= 4")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareConfig {
    pub quantity: Quantity,
    pub kappas: Vec<f64>,
    pub eta: f64,
    pub theta_bs: f64,
    pub x: f64,
    pub y: f64,
    /// `None` picks [`oracle_dims`].
    pub dims: Option<FockDims>,
    /// Restrict the fundamental squeezing witness to one branch.
    pub branch: Option<ThetaBranch>,
    /// Re-evaluate every oracle value at cutoffs + 2.
    pub truncation_check: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRecord {
    pub kappa: f64,
    pub eta: f64,
    pub theta_bs: f64,
    pub theta: Option<f64>,
    pub x: f64,
    pub y: f64,
    pub analytic: Option<f64>,
    pub oracle: Option<f64>,
    pub abs_diff: Option<f64>,
    pub rel_diff: Option<f64>,
    pub singular: bool,
    pub oracle_grown: Option<f64>,
    pub truncation_change: Option<f64>,
    pub truncation_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Match,
    Mismatch,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Match => "MATCH",
            Verdict::Mismatch => "MISMATCH",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Verdict thresholds on fitted orders.
pub const MATCH_ORDER_GAIN: f64 = 0.75;
pub const MISMATCH_ORDER_GAIN: f64 = 0.25;
pub const VERDICT_MIN_R2: f64 = 0.98;
pub const AGREEMENT_TOL: f64 = 1e-12;
/// Largest RMS log residual accepted in place of R².
pub const FLAT_FIT_RMS: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct QuantityComparison {
    pub quantity: Quantity,
    pub description: &'static str,
    pub branch: Option<ThetaBranch>,
    pub dims: FockDims,
    pub records: Vec<ComparisonRecord>,
    /// Fitted order of the closed form, rounded.
    pub claimed_order: Option<f64>,
    pub analytic_fit: ScalingFit,
    pub oracle_fit: ScalingFit,
    pub diff_fit: ScalingFit,
    pub verdict: Verdict,
    pub reason: String,
    pub truncation_ok: bool,
}

fn oracle_moments(params: &BssnParams, port: Port, x: f64, y: f64, dims: FockDims) -> Result<Moments> {
    let inputs = ModeOps::ladders(dims);
    let outputs = bssn_outputs(params, &inputs);
    let (state, _) = QState::coherent_product(dims, [Complex64::new(x, 0.0), Complex64::new(y, 0.0), ZERO, ZERO])?;
    Moments::of(&state, &outputs[port.index()])
}

fn oracle_value(q: Quantity, theta: Option<f64>, m: &Moments) -> Option<f64> {
    match q {
        Quantity::Eq14 | Quantity::Eq17 => Some(m.squeeze_witness(theta.expect("squeezing needs θ"))),
        Quantity::Eq15 | Quantity::Eq16 => m.mandel_q().ok(),
    }
}

fn analytic_value(q: Quantity, p: &BssnParams, theta: Option<f64>, x: f64, y: f64) -> Option<f64> {
    let BssnParams { kappa, eta, theta_bs } = *p;
    match q {
        Quantity::Eq14 => Some(analytic::s_fund(kappa, eta, theta_bs, theta.expect("θ"), x, y)),
        Quantity::Eq15 => Some(analytic::q_fund(kappa, x, y)),
        Quantity::Eq16 => analytic::q_sh(kappa, eta, x, y).ok(),
        Quantity::Eq17 => Some(analytic::s_sh(kappa, eta, x, y)),
    }
}

fn theta_for(q: Quantity, branch: Option<ThetaBranch>, eta: f64, theta_bs: f64) -> Option<f64> {
    match q {
        Quantity::Eq14 => Some(branch.unwrap_or(ThetaBranch::Stated).theta(eta, theta_bs)),
        Quantity::Eq17 => Some(analytic::s_sh_theta(theta_bs)),
        _ => None,
    }
}

/// Oracle expectation values against the closed forms over a κ-grid, with
/// an order-of-vanishing verdict per θ-branch.
pub fn compare_grid(cfg: &CompareConfig) -> Result<Vec<QuantityComparison>> {
    let analytic::InputAmplitudes { x, y } = analytic::InputAmplitudes::new(cfg.x, cfg.y)?;
    if cfg.kappas.is_empty() {
        return Err(LabError::InvalidParameter { name: "kappas", reason: "empty grid".into() });
    }
    let params: Vec<BssnParams> =
        cfg.kappas.iter().map(|&k| BssnParams::new(k, cfg.eta, cfg.theta_bs)).collect::<Result<_>>()?;
    let dims = cfg.dims.unwrap_or_else(|| oracle_dims(x, y));
    let port = cfg.quantity.port();

    let moments: Vec<(Moments, Option<Moments>)> = params
        .par_iter()
        .map(|p| {
            let base = oracle_moments(p, port, x, y, dims)?;
            let grown = if cfg.truncation_check { Some(oracle_moments(p, port, x, y, dims.grown(2))?) } else { None };
            Ok((base, grown))
        })
        .collect::<Result<_>>()?;

    let branches = match cfg.branch {
        Some(b) if cfg.quantity == Quantity::Eq14 => vec![Some(b)],
        _ => cfg.quantity.branches(),
    };
    Ok(branches
        .into_iter()
        .map(|branch| {
            let records: Vec<ComparisonRecord> = params
                .iter()
                .zip(&moments)
                .map(|(p, (m, grown))| {
                    let theta = theta_for(cfg.quantity, branch, p.eta, p.theta_bs);
                    let analytic = analytic_value(cfg.quantity, p, theta, x, y);
                    let oracle = oracle_value(cfg.quantity, theta, m);
                    let oracle_grown = grown.as_ref().and_then(|g| oracle_value(cfg.quantity, theta, g));
                    let truncation_change = oracle.zip(oracle_grown).map(|(a, b)| (a - b).abs());
                    let truncation_ok = match (oracle, truncation_change) {
                        (Some(v), Some(d)) => d < ORACLE_TRUNCATION_TOL * (1.0 + v.abs()),
                        _ => oracle_grown.is_none() == oracle.is_none(),
                    };
                    let abs_diff = analytic.zip(oracle).map(|(a, o)| (o - a).abs());
                    let rel_diff = analytic.zip(abs_diff).map(|(a, d)| d / a.abs().max(f64::MIN_POSITIVE));
                    ComparisonRecord {
                        kappa: p.kappa,
                        eta: p.eta,
                        theta_bs: p.theta_bs,
                        theta,
                        x,
                        y,
                        analytic,
                        oracle,
                        abs_diff,
                        rel_diff,
                        singular: analytic.is_none() || oracle.is_none(),
                        oracle_grown,
                        truncation_change,
                        truncation_ok,
                    }
                })
                .collect();
            summarize(cfg.quantity, branch, dims, records)
        })
        .collect())
}

fn summarize(
    quantity: Quantity,
    branch: Option<ThetaBranch>,
    dims: FockDims,
    records: Vec<ComparisonRecord>,
) -> QuantityComparison {
    let usable: Vec<&ComparisonRecord> = records.iter().filter(|r| !r.singular && r.kappa > 0.0).collect();
    let kappas: Vec<f64> = usable.iter().map(|r| r.kappa).collect();
    let analytic: Vec<f64> = usable.iter().map(|r| r.analytic.unwrap()).collect();
    let oracle: Vec<f64> = usable.iter().map(|r| r.oracle.unwrap()).collect();
    let diffs: Vec<f64> = usable.iter().map(|r| r.abs_diff.unwrap()).collect();
    let analytic_fit = ScalingFit::new(&kappas, &analytic);
    let oracle_fit = ScalingFit::new(&kappas, &oracle);
    let diff_fit = ScalingFit::new(&kappas, &diffs);
    let claimed_order = analytic_fit.slope.is_finite().then(|| analytic_fit.slope.round() + 0.0);

    let agree = !usable.is_empty() && diffs.iter().zip(&analytic).all(|(d, a)| *d <= AGREEMENT_TOL * (1.0 + a.abs()));
    let (verdict, reason) = if usable.len() < 3 {
        (Verdict::Inconclusive, format!("only {} usable grid points", usable.len()))
    } else if agree {
        (Verdict::Match, format!("closed form agrees with the oracle to {AGREEMENT_TOL:e} at every point"))
    } else if !diff_fit.well_fit(VERDICT_MIN_R2) {
        (
            Verdict::Inconclusive,
            format!(
                "difference is not a power law (R^2 {:.4}, rms log residual {:.3})",
                diff_fit.r_squared, diff_fit.rms_log_residual
            ),
        )
    } else if analytic_fit.exact_zero {
        (
            Verdict::Mismatch,
            format!(
                "closed form vanishes identically; oracle differs as {:.4e}*kappa^{:.3}",
                diff_fit.coefficient(),
                diff_fit.slope
            ),
        )
    } else {
        let p = claimed_order.unwrap_or(f64::NAN);
        let gain = diff_fit.slope - p;
        let form = format!(
            "claimed order {p}, |difference| ~ {:.4e}*kappa^{:.3}, oracle ~ {:.4e}*kappa^{:.3}",
            diff_fit.coefficient(),
            diff_fit.slope,
            oracle_fit.coefficient(),
            oracle_fit.slope
        );
        if gain >= MATCH_ORDER_GAIN {
            (Verdict::Match, form)
        } else if gain <= MISMATCH_ORDER_GAIN {
            (Verdict::Mismatch, form)
        } else {
            (Verdict::Inconclusive, form)
        }
    };
    let truncation_ok = records.iter().all(|r| r.truncation_ok);
    QuantityComparison {
        quantity,
        description: quantity.description(),
        branch,
        dims,
        records,
        claimed_order,
        analytic_fit,
        oracle_fit,
        diff_fit,
        verdict,
        reason,
        truncation_ok,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationReport {
    pub ladder: Vec<FockDims>,
    pub values: Vec<f64>,
    /// `|v[k+1] − v[k]|`.
    pub differences: Vec<f64>,
    pub converged: bool,
    /// Successive differences grow while unconverged.
    pub blowup: bool,
}

/// Re-evaluate an observable along a cutoff ladder.
pub fn truncation_sweep<F>(ladder: &[FockDims], observable: F) -> Result<TruncationReport>
where
    F: Fn(FockDims) -> Result<f64> + Sync,
{
    if ladder.len() < 2 {
        return Err(LabError::InvalidParameter { name: "ladder", reason: "need at least two cutoffs".into() });
    }
    let values: Vec<f64> = ladder.par_iter().map(|&d| observable(d)).collect::<Result<_>>()?;
    let differences: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let last = *values.last().unwrap();
    let converged = *differences.last().unwrap() < ORACLE_TRUNCATION_TOL * (1.0 + last.abs());
    let blowup = !converged && differences.windows(2).any(|w| w[1] > w[0]);
    Ok(TruncationReport { ladder: ladder.to_vec(), values, differences, converged, blowup })
}

/// `base`, `base + step`, … (`count` entries).
pub fn cutoff_ladder(base: FockDims, step: usize, count: usize) -> Vec<FockDims> {
    (0..count).map(|k| base.grown(k * step)).collect()
}

/// Photon number or Mandel Q of one output port for coherent fundamental
/// inputs and vacuum harmonics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortObservable {
    MeanN,
    MandelQ,
    Squeeze { theta: f64 },
}

pub fn port_observable(
    params: &BssnParams,
    port: Port,
    x: f64,
    y: f64,
    observable: PortObservable,
    dims: FockDims,
) -> Result<f64> {
    let m = oracle_moments(params, port, x, y, dims)?;
    match observable {
        PortObservable::MeanN => Ok(m.n),
        PortObservable::MandelQ => m.mandel_q(),
        PortObservable::Squeeze { theta } => Ok(m.squeeze_witness(theta)),
    }
}

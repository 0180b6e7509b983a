//! Closed-form predictions for the output statistics, implemented exactly as
//! printed in the source article, including where they are suspect. The
//! verification harness decides whether they hold.

use serde::{Deserialize, Serialize};

use crate::error::{finite, LabError, Result};

/// Real coherent amplitudes of the two fundamental inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputAmplitudes {
    pub x: f64,
    pub y: f64,
}

impl InputAmplitudes {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        for (name, v) in [("x", x), ("y", y)] {
            finite(name, v)?;
            if v < 0.0 {
                return Err(LabError::InvalidParameter { name, reason: format!("must be >= 0, got {v}") });
            }
        }
        Ok(Self { x, y })
    }
}

/// Fundamental-port squeezing witness `κ(x+y)[cos(η + ϑ/2 − θ) + 2κ(x+y)]`.
pub fn s_fund(kappa: f64, eta: f64, theta_bs: f64, theta: f64, x: f64, y: f64) -> f64 {
    let k = kappa * (x + y);
    k * ((eta + 0.5 * theta_bs - theta).cos() + 2.0 * k)
}

/// Fundamental-port Mandel Q, `½[1 − 16κ²(x+y)²]`.
pub fn q_fund(kappa: f64, x: f64, y: f64) -> f64 {
    0.5 * (1.0 - 16.0 * (kappa * (x + y)).powi(2))
}

/// Harmonic-port Mandel Q,
/// `16κ²(x²+y²+4xy sin2η)(x²+y²)x²y² / [x⁴+y⁴+6x²y² − 4xy(x²+y²) sin2η]`.
pub fn q_sh(kappa: f64, eta: f64, x: f64, y: f64) -> Result<f64> {
    let s = (2.0 * eta).sin();
    let r2 = x * x + y * y;
    let den = x.powi(4) + y.powi(4) + 6.0 * x * x * y * y - 4.0 * x * y * r2 * s;
    if den == 0.0 {
        return Err(LabError::Singular("harmonic Mandel Q denominator vanishes"));
    }
    Ok(16.0 * kappa * kappa * (r2 + 4.0 * x * y * s) * r2 * x * x * y * y / den)
}

/// Harmonic-port squeezing witness at `θ = ϑ/2 − π/4`,
/// `½κ²(x²+y²−4xy)(x²+y²)(1 + sin2η)`.
pub fn s_sh(kappa: f64, eta: f64, x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    0.5 * kappa * kappa * (r2 - 4.0 * x * y) * r2 * (1.0 + (2.0 * eta).sin())
}

/// Local-oscillator phase at which [`s_sh`] is stated.
pub fn s_sh_theta(theta_bs: f64) -> f64 {
    0.5 * theta_bs - std::f64::consts::FRAC_PI_4
}

/// The article's threshold conditions for nonclassical behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Predicates {
    /// `2κ(x+y) < 1`
    pub fund_squeezing: bool,
    /// `4κ(x+y) > 1`
    pub fund_sub_poisson: bool,
    /// `x² + y² + 4xy sin2η < 0`
    pub sh_sub_poisson: bool,
    /// `x² + y² − 4xy < 0`
    pub sh_squeezing: bool,
}

pub fn predicates(kappa: f64, eta: f64, x: f64, y: f64) -> Predicates {
    let r2 = x * x + y * y;
    Predicates {
        fund_squeezing: 2.0 * kappa * (x + y) < 1.0,
        fund_sub_poisson: 4.0 * kappa * (x + y) > 1.0,
        sh_sub_poisson: r2 + 4.0 * x * y * (2.0 * eta).sin() < 0.0,
        sh_squeezing: r2 - 4.0 * x * y < 0.0,
    }
}

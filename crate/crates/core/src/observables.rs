//! Quadrature and photon-counting statistics of output mode operators,
//! evaluated in the Heisenberg picture on an input state.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fock::{inner, QOperator, QState};

/// Mean photon numbers at or below this are treated as zero.
pub const MEAN_FLOOR: f64 = 1e-30;
pub const DEFAULT_GRID_POINTS: usize = 64;

/// `X_θ = (m† e^{iθ} + m e^{−iθ}) / 2`.
pub fn quadrature_op(m: &QOperator, theta: f64) -> QOperator {
    let phase = Complex64::from_polar(0.5, theta);
    &(&m.adjoint() * phase) + &(m * phase.conj())
}

/// `Var(X_θ) − 1/4`, computed directly from the quadrature operator.
pub fn squeeze_witness(state: &QState, m: &QOperator, theta: f64) -> Result<f64> {
    Ok(quadrature_op(m, theta).variance(state)? - 0.25)
}

/// `(⟨N²⟩ − ⟨N⟩² − ⟨N⟩) / ⟨N⟩` with `N = m†m`.
pub fn mandel_q(state: &QState, m: &QOperator) -> Result<f64> {
    Moments::of(state, m)?.mandel_q()
}

/// `n` uniform points on `[0, 2π)`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

/// The expectation values every statistic here is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub m: Complex64,
    pub m2: Complex64,
    /// `⟨m†m⟩`
    pub n: f64,
    /// `⟨m m†⟩`
    pub anti_n: f64,
    /// `⟨(m†m)²⟩`
    pub n2: f64,
}

impl Moments {
    pub fn of(state: &QState, op: &QOperator) -> Result<Self> {
        let psi = state.amplitudes();
        let dag = op.adjoint();
        let v = op.apply_state(state)?;
        let u = dag.apply(psi);
        let nv = dag.apply(&v);
        let sq = |x: &[Complex64]| x.iter().map(|c| c.norm_sqr()).sum::<f64>();
        Ok(Self {
            m: inner(psi, &v),
            m2: inner(psi, &op.apply(&v)),
            n: sq(&v),
            anti_n: sq(&u),
            n2: sq(&nv),
        })
    }

    pub fn mandel_q(&self) -> Result<f64> {
        if self.n <= MEAN_FLOOR {
            return Err(LabError::UndefinedMandelQ);
        }
        Ok((self.n2 - self.n * self.n - self.n) / self.n)
    }

    /// `m²` covariance `⟨m²⟩ − ⟨m⟩²`.
    fn cov(&self) -> Complex64 {
        self.m2 - self.m * self.m
    }

    fn isotropic(&self) -> f64 {
        0.25 * (self.n + self.anti_n - 2.0 * self.m.norm_sqr())
    }

    pub fn squeeze_witness(&self, theta: f64) -> f64 {
        self.isotropic() + 0.5 * (self.cov() * Complex64::from_polar(1.0, -2.0 * theta)).re - 0.25
    }

    /// Exact minimum of `S(θ)` over θ and one minimizer in `[0, π)`.
    pub fn squeeze_minimum(&self) -> (f64, f64) {
        let cov = self.cov();
        let theta = (0.5 * cov.arg() + FRAC_PI_2).rem_euclid(PI);
        (self.isotropic() - 0.5 * cov.norm() - 0.25, theta)
    }

    /// `⟨[m, m†]⟩ − 1`; zero for a canonical mode.
    pub fn commutator_defect(&self) -> f64 {
        self.anti_n - self.n - 1.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsResult {
    pub moments: Moments,
    pub mean_n: f64,
    pub mean_n2: f64,
    /// `None` when the mean photon number vanishes.
    pub mandel_q: Option<f64>,
    pub theta_grid: Vec<f64>,
    pub squeeze: Vec<f64>,
    pub grid_min: f64,
    pub grid_argmin: f64,
    pub exact_min: f64,
    pub exact_argmin: f64,
    pub commutator_defect: f64,
}

pub fn stats(state: &QState, m: &QOperator, grid: &[f64]) -> Result<StatsResult> {
    let moments = Moments::of(state, m)?;
    let mandel_q = match moments.mandel_q() {
        Ok(q) => Some(q),
        Err(LabError::UndefinedMandelQ) => None,
        Err(e) => return Err(e),
    };
    let squeeze: Vec<f64> = grid.iter().map(|&t| moments.squeeze_witness(t)).collect();
    let (grid_argmin, grid_min) = grid
        .iter()
        .zip(&squeeze)
        .fold((f64::NAN, f64::INFINITY), |best, (&t, &s)| if s < best.1 { (t, s) } else { best });
    let (exact_min, exact_argmin) = moments.squeeze_minimum();
    Ok(StatsResult {
        moments,
        mean_n: moments.n,
        mean_n2: moments.n2,
        mandel_q,
        theta_grid: grid.to_vec(),
        squeeze,
        grid_min,
        grid_argmin,
        exact_min,
        exact_argmin,
        commutator_defect: moments.commutator_defect(),
    })
}

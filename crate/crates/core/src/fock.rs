//! Truncated four-mode Fock space.
//!
//! Modes are ordered `(a, b, A, B)`: the two fundamental inputs followed by
//! their second-harmonic counterparts. Basis states are indexed row-major over
//! that order, so `B` is the fastest-varying occupation:
//!
//! ```text
//! index = ((k_a * n_b + k_b) * n_A + k_A) * n_B + k_B
//! ```
//!
//! Ladder operators are truncated at the cutoff: the creation operator maps the
//! top level `|n_max - 1>` to zero. Anything sensitive to that edge must be read
//! through [`QOperator::interior_block`] / [`interior_projector`].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use crate::error::{finite, LabError, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Input mode label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Fundamental input `a`.
    #[serde(rename = "a")]
    FundA,
    /// Fundamental input `b`.
    #[serde(rename = "b")]
    FundB,
    /// Second-harmonic input `A`.
    #[serde(rename = "A")]
    HarmA,
    /// Second-harmonic input `B`.
    #[serde(rename = "B")]
    HarmB,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::FundA, Mode::FundB, Mode::HarmA, Mode::HarmB];

    pub fn index(self) -> usize {
        match self {
            Mode::FundA => 0,
            Mode::FundB => 1,
            Mode::HarmA => 2,
            Mode::HarmB => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::FundA => "a",
            Mode::FundB => "b",
            Mode::HarmA => "A",
            Mode::HarmB => "B",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Mode::FundA),
            "b" => Ok(Mode::FundB),
            "A" => Ok(Mode::HarmA),
            "B" => Ok(Mode::HarmB),
            _ => Err(LabError::Parse(format!("unknown mode `{s}` (expected a, b, A or B)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Annihilate,
    Create,
}

/// Per-mode cutoffs `(n_a, n_b, n_A, n_B)`; mode `m` spans `|0>..|n_m - 1>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[usize; 4]", into = "[usize; 4]")]
pub struct FockDims {
    cutoffs: [usize; 4],
}

impl FockDims {
    pub fn new(cutoffs: [usize; 4]) -> Result<Self> {
        if cutoffs.iter().any(|&n| n < 2) {
            return Err(LabError::InvalidCutoffs(cutoffs));
        }
        Ok(Self { cutoffs })
    }

    pub fn cutoffs(&self) -> [usize; 4] {
        self.cutoffs
    }

    pub fn cutoff(&self, mode: Mode) -> usize {
        self.cutoffs[mode.index()]
    }

    pub fn total(&self) -> usize {
        self.cutoffs.iter().product()
    }

    /// Every cutoff raised by `step`.
    pub fn grown(&self, step: usize) -> Self {
        Self { cutoffs: self.cutoffs.map(|n| n + step) }
    }

    pub fn index(&self, occupations: [usize; 4]) -> usize {
        occupations
            .iter()
            .zip(self.cutoffs.iter())
            .fold(0, |acc, (&k, &n)| {
                debug_assert!(k < n);
                acc * n + k
            })
    }

    pub fn occupations(&self, mut index: usize) -> [usize; 4] {
        let mut occ = [0; 4];
        for m in (0..4).rev() {
            occ[m] = index % self.cutoffs[m];
            index /= self.cutoffs[m];
        }
        occ
    }

    /// Basis indices whose every occupation is `<= cutoff - 1 - margin`.
    pub fn interior_indices(&self, margin: usize) -> Vec<usize> {
        (0..self.total())
            .filter(|&i| {
                let occ = self.occupations(i);
                occ.iter()
                    .zip(self.cutoffs.iter())
                    .all(|(&k, &n)| k + 1 + margin <= n)
            })
            .collect()
    }

    fn check(&self, other: &FockDims) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(LabError::DimensionMismatch { left: self.cutoffs, right: other.cutoffs })
        }
    }
}

impl TryFrom<[usize; 4]> for FockDims {
    type Error = LabError;

    fn try_from(cutoffs: [usize; 4]) -> Result<Self> {
        FockDims::new(cutoffs)
    }
}

impl From<FockDims> for [usize; 4] {
    fn from(d: FockDims) -> Self {
        d.cutoffs
    }
}

impl fmt::Display for FockDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.cutoffs;
        write!(f, "({a},{b},{c},{d})")
    }
}

/// Normalized pure state on a [`FockDims`] space.
#[derive(Debug, Clone, PartialEq)]
pub struct QState {
    amplitudes: Vec<Complex64>,
    dims: FockDims,
}

impl QState {
    pub fn vacuum(dims: FockDims) -> Self {
        let mut amplitudes = vec![ZERO; dims.total()];
        amplitudes[0] = ONE;
        Self { amplitudes, dims }
    }

    /// Number state `|k_a, k_b, k_A, k_B>`.
    pub fn fock(dims: FockDims, occupations: [usize; 4]) -> Result<Self> {
        for (m, (&k, &n)) in occupations.iter().zip(dims.cutoffs.iter()).enumerate() {
            if k >= n {
                return Err(LabError::InvalidParameter {
                    name: "occupations",
                    reason: format!("occupation {k} of mode {} exceeds cutoff {n}", Mode::ALL[m]),
                });
            }
        }
        let mut amplitudes = vec![ZERO; dims.total()];
        amplitudes[dims.index(occupations)] = ONE;
        Ok(Self { amplitudes, dims })
    }

    /// Arbitrary amplitudes in basis order, normalized.
    pub fn from_amplitudes(dims: FockDims, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != dims.total() {
            return Err(LabError::InvalidParameter {
                name: "amplitudes",
                reason: format!("expected {} amplitudes for {dims}, got {}", dims.total(), amplitudes.len()),
            });
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        finite("norm", norm)?;
        if norm == 0.0 {
            return Err(LabError::InvalidParameter { name: "amplitudes", reason: "zero vector".into() });
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(Self { amplitudes, dims })
    }

    /// Coherent state `|alpha>` on `mode`, vacuum elsewhere.
    ///
    /// The truncated amplitudes are renormalized; the returned leakage is the
    /// Poisson mass that fell beyond the cutoff.
    pub fn coherent(dims: FockDims, mode: Mode, alpha: Complex64) -> Result<(Self, f64)> {
        let mut alphas = [ZERO; 4];
        alphas[mode.index()] = alpha;
        let (state, leakage) = Self::coherent_product(dims, alphas)?;
        Ok((state, leakage[mode.index()]))
    }

    /// Product of coherent states, one amplitude per mode.
    pub fn coherent_product(dims: FockDims, alphas: [Complex64; 4]) -> Result<(Self, [f64; 4])> {
        let mut factors: Vec<Vec<Complex64>> = Vec::with_capacity(4);
        let mut leakage = [0.0; 4];
        for (m, &alpha) in alphas.iter().enumerate() {
            finite("alpha.re", alpha.re)?;
            finite("alpha.im", alpha.im)?;
            let n = dims.cutoffs[m];
            factors.push(truncated_coherent(n, alpha));
            leakage[m] = poisson_tail(alpha.norm_sqr(), n);
        }
        Ok((Self::product(dims, &factors), leakage))
    }

    fn product(dims: FockDims, factors: &[Vec<Complex64>]) -> Self {
        let mut amplitudes = vec![ZERO; dims.total()];
        for (i, amp) in amplitudes.iter_mut().enumerate() {
            let occ = dims.occupations(i);
            *amp = occ.iter().enumerate().map(|(m, &k)| factors[m][k]).product();
        }
        let mut state = Self { amplitudes, dims };
        state.normalize();
        state
    }

    fn normalize(&mut self) {
        let norm = self.norm();
        for a in &mut self.amplitudes {
            *a /= norm;
        }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn dims(&self) -> FockDims {
        self.dims
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, occupations: [usize; 4]) -> Complex64 {
        self.amplitudes[self.dims.index(occupations)]
    }

    pub fn overlap(&self, other: &QState) -> Result<Complex64> {
        self.dims.check(&other.dims)?;
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    /// `e^{i gamma} |psi>`.
    pub fn with_global_phase(&self, gamma: f64) -> Self {
        let phase = Complex64::from_polar(1.0, gamma);
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
            dims: self.dims,
        }
    }
}

fn truncated_coherent(cutoff: usize, alpha: Complex64) -> Vec<Complex64> {
    let mut amps = Vec::with_capacity(cutoff);
    let mut c = ONE;
    amps.push(c);
    for n in 1..cutoff {
        c = c * alpha / (n as f64).sqrt();
        amps.push(c);
    }
    amps
}

/// `P(N >= cutoff)` for a Poisson distribution of the given mean, summed
/// directly over the tail.
pub fn poisson_tail(mean: f64, cutoff: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let ln_first = -mean + cutoff as f64 * mean.ln() - ln_factorial(cutoff);
    let mut term = ln_first.exp();
    let mut sum = 0.0;
    let mut n = cutoff;
    loop {
        sum += term;
        n += 1;
        term *= mean / n as f64;
        if term <= sum * 1e-18 && n as f64 > mean {
            break;
        }
        if term == 0.0 {
            break;
        }
    }
    sum
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

pub(crate) fn inner(left: &[Complex64], right: &[Complex64]) -> Complex64 {
    left.iter().zip(right).map(|(l, r)| l.conj() * r).sum()
}

/// Sparse complex operator on a [`FockDims`] space.
///
/// The arithmetic operators panic on mismatched dimensions, the same way
/// array libraries treat shape errors; use the `checked_*` methods where the
/// operands come from untrusted configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct QOperator {
    mat: CsMat<Complex64>,
    dims: FockDims,
}

impl QOperator {
    fn from_triplets(dims: FockDims, triplets: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let n = dims.total();
        let mut tri = TriMat::new((n, n));
        for (r, c, v) in triplets {
            tri.add_triplet(r, c, v);
        }
        Self { mat: tri.to_csr(), dims }
    }

    pub fn zero(dims: FockDims) -> Self {
        Self { mat: CsMat::zero((dims.total(), dims.total())), dims }
    }

    pub fn identity(dims: FockDims) -> Self {
        Self { mat: CsMat::eye(dims.total()).map(|v: &f64| Complex64::new(*v, 0.0)), dims }
    }

    /// Annihilation or creation operator on `mode`, identity on the others.
    pub fn ladder(dims: FockDims, mode: Mode, kind: Ladder) -> Self {
        let m = mode.index();
        let entries = (0..dims.total()).filter_map(|col| {
            let occ = dims.occupations(col);
            let k = occ[m];
            if k == 0 {
                return None;
            }
            let mut lowered = occ;
            lowered[m] = k - 1;
            Some((dims.index(lowered), col, Complex64::new((k as f64).sqrt(), 0.0)))
        });
        let lower = Self::from_triplets(dims, entries);
        match kind {
            Ladder::Annihilate => lower,
            Ladder::Create => lower.adjoint(),
        }
    }

    pub fn annihilate(dims: FockDims, mode: Mode) -> Self {
        Self::ladder(dims, mode, Ladder::Annihilate)
    }

    pub fn create(dims: FockDims, mode: Mode) -> Self {
        Self::ladder(dims, mode, Ladder::Create)
    }

    /// `m^dag m` for the ladder operator of `mode`.
    pub fn number(dims: FockDims, mode: Mode) -> Self {
        let m = mode.index();
        Self::from_triplets(
            dims,
            (0..dims.total()).map(|i| (i, i, Complex64::new(dims.occupations(i)[m] as f64, 0.0))),
        )
    }

    pub fn dims(&self) -> FockDims {
        self.dims
    }

    pub fn nnz(&self) -> usize {
        self.mat.nnz()
    }

    pub fn matrix(&self) -> &CsMat<Complex64> {
        &self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.mat.get(row, col).copied().unwrap_or(ZERO)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.transpose_view().to_csr().map(|v| v.conj()),
            dims: self.dims,
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self { mat: self.mat.map(|v| v * factor), dims: self.dims }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn checked_add(&self, other: &QOperator) -> Result<Self> {
        self.dims.check(&other.dims)?;
        Ok(Self { mat: &self.mat + &other.mat, dims: self.dims })
    }

    pub fn checked_sub(&self, other: &QOperator) -> Result<Self> {
        self.dims.check(&other.dims)?;
        Ok(Self { mat: &self.mat - &other.mat, dims: self.dims })
    }

    pub fn checked_mul(&self, other: &QOperator) -> Result<Self> {
        self.dims.check(&other.dims)?;
        Ok(Self { mat: &self.mat * &other.mat, dims: self.dims })
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &QOperator) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn apply(&self, vector: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(vector.len(), self.dims.total(), "vector length does not match operator");
        self.mat
            .outer_iterator()
            .map(|row| row.iter().map(|(c, v)| v * vector[c]).sum())
            .collect()
    }

    pub fn apply_state(&self, state: &QState) -> Result<Vec<Complex64>> {
        self.dims.check(&state.dims)?;
        Ok(self.apply(&state.amplitudes))
    }

    /// `<psi| M |psi>`.
    pub fn expect(&self, state: &QState) -> Result<Complex64> {
        let image = self.apply_state(state)?;
        Ok(inner(&state.amplitudes, &image))
    }

    /// `<M^2> − <M>^2` for a self-adjoint operator.
    pub fn variance(&self, state: &QState) -> Result<f64> {
        let image = self.apply_state(state)?;
        let mean = inner(&state.amplitudes, &image);
        let second = inner(&state.amplitudes, &self.apply(&image));
        Ok((second - mean * mean).re)
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &QOperator) -> f64 {
        let diff = self - other;
        diff.max_abs()
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.data().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Dense `P M P` block on the interior basis states of the given margin.
    pub fn interior_block(&self, margin: usize) -> DMatrix<Complex64> {
        let idx = self.dims.interior_indices(margin);
        let mut pos = vec![usize::MAX; self.dims.total()];
        for (k, &i) in idx.iter().enumerate() {
            pos[i] = k;
        }
        let mut block = DMatrix::from_element(idx.len(), idx.len(), ZERO);
        for &r in &idx {
            if let Some(row) = self.mat.outer_view(r) {
                for (c, v) in row.iter() {
                    if pos[c] != usize::MAX {
                        block[(pos[r], pos[c])] += *v;
                    }
                }
            }
        }
        block
    }

    /// Spectral norm of the interior-projected operator.
    pub fn interior_norm(&self, margin: usize) -> f64 {
        spectral_norm(&self.interior_block(margin))
    }
}

pub(crate) fn spectral_norm(block: &DMatrix<Complex64>) -> f64 {
    if block.is_empty() {
        return 0.0;
    }
    block.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Diagonal projector onto states with every occupation `<= cutoff − 1 − margin`.
pub fn interior_projector(dims: FockDims, margin: usize) -> QOperator {
    QOperator::from_triplets(dims, dims.interior_indices(margin).into_iter().map(|i| (i, i, ONE)))
}

impl<'a> Add<&'a QOperator> for &'a QOperator {
    type Output = QOperator;

    fn add(self, rhs: &'a QOperator) -> QOperator {
        self.checked_add(rhs).expect("operator dimension mismatch")
    }
}

impl<'a> Sub<&'a QOperator> for &'a QOperator {
    type Output = QOperator;

    fn sub(self, rhs: &'a QOperator) -> QOperator {
        self.checked_sub(rhs).expect("operator dimension mismatch")
    }
}

impl<'a> Mul<&'a QOperator> for &'a QOperator {
    type Output = QOperator;

    fn mul(self, rhs: &'a QOperator) -> QOperator {
        self.checked_mul(rhs).expect("operator dimension mismatch")
    }
}

impl Mul<Complex64> for &QOperator {
    type Output = QOperator;

    fn mul(self, rhs: Complex64) -> QOperator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &QOperator {
    type Output = QOperator;

    fn mul(self, rhs: f64) -> QOperator {
        self.scale_real(rhs)
    }
}

impl Neg for &QOperator {
    type Output = QOperator;

    fn neg(self) -> QOperator {
        self.scale_real(-1.0)
    }
}

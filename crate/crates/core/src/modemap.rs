//! Output-mode operators of the nonlinear beam splitter, expressed as
//! polynomials in the input ladder operators (Heisenberg picture).
//!
//! Two constructions are kept side by side: the general seven-coupling ansatz
//! ([`Ansatz`]) and the reduced two-constant family ([`BssnParams`]). The
//! family is built directly from its closed form, not through the ansatz, so
//! that comparing the two is a genuine check of [`family_coefficients`].

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{finite, LabError, Result};
use crate::fock::{FockDims, Mode, QOperator, I};

/// Output port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Port {
    #[serde(rename = "c")]
    FundC,
    #[serde(rename = "d")]
    FundD,
    #[serde(rename = "C")]
    HarmC,
    #[serde(rename = "D")]
    HarmD,
}

impl Port {
    pub const ALL: [Port; 4] = [Port::FundC, Port::FundD, Port::HarmC, Port::HarmD];

    pub fn index(self) -> usize {
        match self {
            Port::FundC => 0,
            Port::FundD => 1,
            Port::HarmC => 2,
            Port::HarmD => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Port::FundC => "c",
            Port::FundD => "d",
            Port::HarmC => "C",
            Port::HarmD => "D",
        }
    }

    /// The input mode this port is paired with under reversal.
    pub fn partner(self) -> Mode {
        Mode::ALL[self.index()]
    }

    pub fn is_harmonic(self) -> bool {
        matches!(self, Port::HarmC | Port::HarmD)
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Port {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c" => Ok(Port::FundC),
            "d" => Ok(Port::FundD),
            "C" => Ok(Port::HarmC),
            "D" => Ok(Port::HarmD),
            _ => Err(LabError::Parse(format!("unknown port `{s}` (expected c, d, C or D)"))),
        }
    }
}

/// General coupling set: fundamental transmission/reflection, the
/// second-harmonic splitting angle, and the seven complex couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ansatz {
    pub t_f: f64,
    /// Signed so that the reversed map (i → −i) stays representable.
    pub r_f: f64,
    /// Second-harmonic angle: `t_s = cos`, `r_s = sin`.
    pub theta_bs: f64,
    pub z: [Complex64; 4],
    pub w: [Complex64; 3],
}

impl Ansatz {
    pub fn new(t_f: f64, r_f: f64, theta_bs: f64, z: [Complex64; 4], w: [Complex64; 3]) -> Result<Self> {
        finite("t_f", t_f)?;
        finite("r_f", r_f)?;
        finite("theta_bs", theta_bs)?;
        for c in z.iter().chain(w.iter()) {
            finite("coupling.re", c.re)?;
            finite("coupling.im", c.im)?;
        }
        if !(0.0..=1.0).contains(&t_f) || ((t_f * t_f + r_f * r_f) - 1.0).abs() > 1e-12 {
            return Err(LabError::InvalidParameter {
                name: "t_f/r_f",
                reason: format!("need t_f in [0,1] and t_f^2 + r_f^2 = 1, got ({t_f}, {r_f})"),
            });
        }
        Ok(Self { t_f, r_f, theta_bs, z, w })
    }

    /// 50:50 linear beam splitter, all couplings zero.
    pub fn linear(theta_bs: f64) -> Self {
        Self {
            t_f: FRAC_1_SQRT_2,
            r_f: FRAC_1_SQRT_2,
            theta_bs,
            z: [Complex64::default(); 4],
            w: [Complex64::default(); 3],
        }
    }

    /// Couplings multiplied by `s`; the linear part is untouched.
    pub fn scaled(&self, s: f64) -> Self {
        Self { z: self.z.map(|c| c * s), w: self.w.map(|c| c * s), ..*self }
    }

    /// Substitute the four operators `(p, q, P, Q)` for `(a, b, A, B)` and
    /// return the expressions for `(c, d, C, D)`.
    pub fn expand(&self, inputs: &ModeOps) -> [QOperator; 4] {
        let [p, q, hp, hq] = &inputs.ops;
        let [pd, qd, _, _] = &inputs.dags;
        let [z1, z2, z3, z4] = self.z;
        let [w1, w2, w3] = self.w;
        let t = Complex64::new(self.t_f, 0.0);
        let ir = I * self.r_f;
        let (ts, irs) = (Complex64::new(self.theta_bs.cos(), 0.0), I * self.theta_bs.sin());

        let pd_hp = pd * hp;
        let pd_hq = pd * hq;
        let qd_hp = qd * hp;
        let qd_hq = qd * hq;
        let pp = p * p;
        let qq = q * q;
        let pq = p * q;

        let c = lincomb(&[(t, p), (ir, q), (z1, &pd_hp), (z2, &pd_hq), (z3, &qd_hp), (z4, &qd_hq)]);
        let d = lincomb(&[(t, q), (ir, p), (z4, &pd_hp), (z3, &pd_hq), (z2, &qd_hp), (z1, &qd_hq)]);
        let big_c = lincomb(&[(ts, hp), (irs, hq), (w1 + w2, &pp), (w1 - w2, &qq), (w3, &pq)]);
        let big_d = lincomb(&[(ts, hq), (irs, hp), (w1 - w2, &pp), (w1 + w2, &qq), (w3, &pq)]);
        [c, d, big_c, big_d]
    }
}

/// Reduced family: coupling strength, material phase, second-harmonic angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BssnParams {
    pub kappa: f64,
    pub eta: f64,
    pub theta_bs: f64,
}

impl BssnParams {
    pub fn new(kappa: f64, eta: f64, theta_bs: f64) -> Result<Self> {
        finite("kappa", kappa)?;
        finite("eta", eta)?;
        finite("theta_bs", theta_bs)?;
        if kappa < 0.0 {
            return Err(LabError::InvalidParameter {
                name: "kappa",
                reason: format!("must be non-negative, got {kappa}"),
            });
        }
        Ok(Self { kappa, eta, theta_bs })
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        Self { kappa, ..*self }
    }
}

/// Ladder operators of the four input modes together with their adjoints.
#[derive(Debug, Clone)]
pub struct ModeOps {
    pub ops: [QOperator; 4],
    pub dags: [QOperator; 4],
}

impl ModeOps {
    pub fn ladders(dims: FockDims) -> Self {
        Self::from_ops(Mode::ALL.map(|m| QOperator::annihilate(dims, m)))
    }

    pub fn from_ops(ops: [QOperator; 4]) -> Self {
        let dags = [ops[0].adjoint(), ops[1].adjoint(), ops[2].adjoint(), ops[3].adjoint()];
        Self { ops, dags }
    }

    pub fn dims(&self) -> FockDims {
        self.ops[0].dims()
    }

    pub fn get(&self, mode: Mode) -> &QOperator {
        &self.ops[mode.index()]
    }
}

pub(crate) fn lincomb(terms: &[(Complex64, &QOperator)]) -> QOperator {
    let mut iter = terms.iter().filter(|(c, _)| *c != Complex64::default());
    let Some((c0, op0)) = iter.next() else {
        return QOperator::zero(terms[0].1.dims());
    };
    iter.fold(op0.scale(*c0), |acc, (c, op)| &acc + &op.scale(*c))
}

pub fn ansatz_output_op(ansatz: &Ansatz, port: Port, dims: FockDims) -> QOperator {
    let [c, d, big_c, big_d] = ansatz.expand(&ModeOps::ladders(dims));
    match port {
        Port::FundC => c,
        Port::FundD => d,
        Port::HarmC => big_c,
        Port::HarmD => big_d,
    }
}

/// All four output operators of the reduced family.
pub fn bssn_outputs(params: &BssnParams, inputs: &ModeOps) -> [QOperator; 4] {
    let BssnParams { kappa, eta, theta_bs } = *params;
    let [a, b, ha, hb] = &inputs.ops;
    let [ad, bd, _, _] = &inputs.dags;
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let ih = I * FRAC_1_SQRT_2;

    let pump = ha + hb;
    let k = -2.0 * I * SQRT_2 * kappa * Complex64::from_polar(1.0, theta_bs / 2.0);
    let (s, c) = eta.sin_cos();
    let c_creation = lincomb(&[(Complex64::new(-s, 0.0), ad), (Complex64::new(c, 0.0), bd)]);
    let d_creation = lincomb(&[(Complex64::new(-s, 0.0), bd), (Complex64::new(c, 0.0), ad)]);
    let out_c = lincomb(&[(h, a), (ih, b), (k, &(&c_creation * &pump))]);
    let out_d = lincomb(&[(h, b), (ih, a), (k, &(&d_creation * &pump))]);

    let sum_sq = &(a * a) + &(b * b);
    let ab = a * b;
    let w_sq = kappa * Complex64::from_polar(1.0, (theta_bs + 2.0 * eta) / 2.0);
    let w_ab = -2.0 * I * kappa * Complex64::from_polar(1.0, (theta_bs - 2.0 * eta) / 2.0);
    let (ts, irs) = (Complex64::new(theta_bs.cos(), 0.0), I * theta_bs.sin());
    let out_big_c = lincomb(&[(ts, ha), (irs, hb), (w_sq, &sum_sq), (w_ab, &ab)]);
    let out_big_d = lincomb(&[(ts, hb), (irs, ha), (w_sq, &sum_sq), (w_ab, &ab)]);
    [out_c, out_d, out_big_c, out_big_d]
}

pub fn bssn_output_op(params: &BssnParams, port: Port, dims: FockDims) -> QOperator {
    let [c, d, big_c, big_d] = bssn_outputs(params, &ModeOps::ladders(dims));
    match port {
        Port::FundC => c,
        Port::FundD => d,
        Port::HarmC => big_c,
        Port::HarmD => big_d,
    }
}

/// The ansatz couplings that reproduce the reduced family.
pub fn family_coefficients(params: &BssnParams) -> Ansatz {
    let BssnParams { kappa, eta, theta_bs } = *params;
    let x12 = -2.0 * SQRT_2 * kappa * eta.sin();
    let x34 = 2.0 * SQRT_2 * kappa * eta.cos();
    let rot = Complex64::from_polar(1.0, -(PI - theta_bs) / 2.0);
    let w1 = kappa * Complex64::from_polar(1.0, (theta_bs + 2.0 * eta) / 2.0);
    let w3 = -2.0 * I * kappa * Complex64::from_polar(1.0, (theta_bs - 2.0 * eta) / 2.0);
    Ansatz {
        t_f: FRAC_1_SQRT_2,
        r_f: FRAC_1_SQRT_2,
        theta_bs,
        z: [rot * x12, rot * x12, rot * x34, rot * x34],
        w: [w1, Complex64::default(), w3],
    }
}

/// Swap inputs and outputs with `i → −i`: the couplings are conjugated and the
/// explicit `i` of both reflection terms flips sign.
pub fn reversal_substitute(ansatz: &Ansatz) -> Ansatz {
    Ansatz {
        t_f: ansatz.t_f,
        r_f: -ansatz.r_f,
        theta_bs: -ansatz.theta_bs,
        z: ansatz.z.map(|c| c.conj()),
        w: ansatz.w.map(|c| c.conj()),
    }
}

/// Forward map followed by the reversed map: returns the recovered
/// `(a, b, A, B)` as operators in the original input variables.
pub fn reversal_composition(ansatz: &Ansatz, inputs: &ModeOps) -> [QOperator; 4] {
    let outputs = ModeOps::from_ops(ansatz.expand(inputs));
    reversal_substitute(ansatz).expand(&outputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{QState, ONE};

    fn dims() -> FockDims {
        FockDims::new([4, 4, 3, 3]).unwrap()
    }

    #[test]
    fn linear_limit_matches_plain_beam_splitter() {
        let d = dims();
        let lad = ModeOps::ladders(d);
        let expected = &lad.ops[0].scale_real(FRAC_1_SQRT_2) + &lad.ops[1].scale(I * FRAC_1_SQRT_2);
        let from_ansatz = ansatz_output_op(&Ansatz::linear(0.4), Port::FundC, d);
        assert!(from_ansatz.max_abs_diff(&expected) < 1e-15);
        let p = BssnParams::new(0.0, 0.3, 0.4).unwrap();
        assert!(bssn_output_op(&p, Port::FundC, d).max_abs_diff(&expected) < 1e-15);

        let harm = &lad.ops[2].scale_real(0.4f64.cos()) + &lad.ops[3].scale(I * 0.4f64.sin());
        assert!(bssn_output_op(&p, Port::HarmC, d).max_abs_diff(&harm) < 1e-15);
    }

    #[test]
    fn single_coupling_action() {
        let d = dims();
        let mut ans = Ansatz::linear(0.0);
        ans.z[0] = ONE;
        let c = ansatz_output_op(&ans, Port::FundC, d);
        let input = QState::fock(d, [0, 0, 1, 0]).unwrap();
        let out = c.apply_state(&input).unwrap();
        let target = d.index([1, 0, 0, 0]);
        for (i, v) in out.iter().enumerate() {
            let want = if i == target { ONE } else { Complex64::default() };
            assert!((v - want).norm() < 1e-15, "index {i}: {v}");
        }
    }

    #[test]
    fn family_coefficients_worked_example() {
        let ans = family_coefficients(&BssnParams::new(0.1, 0.0, 0.0).unwrap());
        let z34 = Complex64::new(0.0, -2.0 * SQRT_2 * 0.1);
        assert!(ans.z[0].norm() < 1e-16 && ans.z[1].norm() < 1e-16);
        assert!((ans.z[2] - z34).norm() < 1e-15 && (ans.z[3] - z34).norm() < 1e-15);
        assert!((ans.w[0] - Complex64::new(0.1, 0.0)).norm() < 1e-15);
        assert_eq!(ans.w[1], Complex64::default());
        assert!((ans.w[2] - Complex64::new(0.0, -0.2)).norm() < 1e-15);

        let zero = family_coefficients(&BssnParams::new(0.0, 1.3, 0.2).unwrap());
        assert!(zero.z.iter().chain(zero.w.iter()).all(|c| c.norm() == 0.0));
    }

    #[test]
    fn family_ansatz_equals_closed_form() {
        let d = dims();
        for &(k, eta, th) in &[(0.1, 0.3, 0.7), (0.05, -0.785, 0.0), (0.2, 2.0, -1.1)] {
            let p = BssnParams::new(k, eta, th).unwrap();
            let ans = family_coefficients(&p);
            for port in Port::ALL {
                let diff = ansatz_output_op(&ans, port, d).max_abs_diff(&bssn_output_op(&p, port, d));
                assert!(diff < 1e-12, "{port} at {p:?}: {diff}");
            }
        }
    }

    #[test]
    fn harmonic_output_mean_on_coherent_inputs() {
        let d = FockDims::new([16, 16, 3, 3]).unwrap();
        let p = BssnParams::new(0.01, 0.0, 0.0).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        let (psi, _) = QState::coherent_product(d, [one, one, zero, zero]).unwrap();
        let mean = bssn_output_op(&p, Port::HarmC, d).expect(&psi).unwrap();
        assert!((mean - Complex64::new(0.02, -0.02)).norm() < 1e-10, "{mean}");
    }

    #[test]
    fn reversal_is_an_involution() {
        let ans = family_coefficients(&BssnParams::new(0.07, 0.4, 0.9).unwrap());
        assert_eq!(reversal_substitute(&reversal_substitute(&ans)), ans);
    }

    #[test]
    fn reversed_linear_map_recovers_inputs() {
        let d = dims();
        let lad = ModeOps::ladders(d);
        let rev = reversal_substitute(&Ansatz::linear(0.6));
        assert!((rev.r_f + FRAC_1_SQRT_2).abs() < 1e-16);
        let recovered = reversal_composition(&Ansatz::linear(0.6), &lad);
        for (rec, op) in recovered.iter().zip(lad.ops.iter()) {
            assert!(rec.max_abs_diff(op) < 1e-15);
        }
    }

    #[test]
    fn kappa_scales_nonlinear_part_linearly() {
        let d = dims();
        let base = BssnParams::new(0.0, 0.3, 0.5).unwrap();
        for port in Port::ALL {
            let lin = bssn_output_op(&base, port, d);
            let n1 = &bssn_output_op(&base.with_kappa(0.01), port, d) - &lin;
            let n3 = &bssn_output_op(&base.with_kappa(0.03), port, d) - &lin;
            assert!(n3.max_abs_diff(&n1.scale_real(3.0)) < 1e-15);
        }
    }

    #[test]
    fn ansatz_validation() {
        assert!(Ansatz::new(0.6, 0.8, 0.0, [ONE; 4], [ONE; 3]).is_ok());
        assert!(Ansatz::new(0.6, 0.6, 0.0, [ONE; 4], [ONE; 3]).is_err());
        assert!(Ansatz::new(0.6, 0.8, f64::NAN, [ONE; 4], [ONE; 3]).is_err());
        assert!(BssnParams::new(-0.1, 0.0, 0.0).is_err());
    }
}

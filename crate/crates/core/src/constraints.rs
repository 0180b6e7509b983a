//! Numerical re-derivation of the coupling coefficients.
//!
//! The fourteen real unknowns (real and imaginary parts of `z1..z4, w1..w3`)
//! enter every residual polynomially with no constant term on the interior,
//! so the first-order part of each residual is a real-linear map of the
//! unknowns. Probing that map with unit vectors gives a constraint matrix; its
//! numerical nullspace is the set of first-order-consistent couplings.
//!
//! Residual polynomials have degree at most three in an overall coupling
//! scale `s`, so the first-order coefficient is extracted exactly by the
//! five-point stencil `(8[f(1) − f(−1)] − [f(2) − f(−2)]) / 12`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fock::{FockDims, I};
use crate::modemap::{family_coefficients, Ansatz, BssnParams, ModeOps};
use crate::residual::{ansatz_residuals, BlockSet, ResidualKind};

pub const UNKNOWNS: usize = 14;

/// Unknown ordering: `Re z1, Im z1, …, Re z4, Im z4, Re w1, Im w1, …, Im w3`.
pub const UNKNOWN_LABELS: [&str; UNKNOWNS] = [
    "Re z1", "Im z1", "Re z2", "Im z2", "Re z3", "Im z3", "Re z4", "Im z4", "Re w1", "Im w1", "Re w2",
    "Im w2", "Re w3", "Im w3",
];

/// Default relative singular-value threshold.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Minimum ratio between the smallest kept and largest discarded singular value.
pub const MIN_GAP_RATIO: f64 = 1e3;
const LINEARITY_TOL: f64 = 1e-10;
const SPAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnknownVector(pub [f64; UNKNOWNS]);

impl UnknownVector {
    pub fn from_ansatz(ansatz: &Ansatz) -> Self {
        let mut v = [0.0; UNKNOWNS];
        for (k, c) in ansatz.z.iter().chain(ansatz.w.iter()).enumerate() {
            v[2 * k] = c.re;
            v[2 * k + 1] = c.im;
        }
        Self(v)
    }

    pub fn unit(j: usize) -> Self {
        let mut v = [0.0; UNKNOWNS];
        v[j] = 1.0;
        Self(v)
    }

    /// 50:50 fundamental splitting with these couplings.
    pub fn to_ansatz(&self, theta_bs: f64) -> Ansatz {
        let c = |k: usize| Complex64::new(self.0[2 * k], self.0[2 * k + 1]);
        Ansatz {
            t_f: FRAC_1_SQRT_2,
            r_f: FRAC_1_SQRT_2,
            theta_bs,
            z: [c(0), c(1), c(2), c(3)],
            w: [c(4), c(5), c(6)],
        }
    }

    pub fn as_dvector(&self) -> DVector<f64> {
        DVector::from_row_slice(&self.0)
    }

    pub fn from_dvector(v: &DVector<f64>) -> Self {
        let mut out = [0.0; UNKNOWNS];
        out.copy_from_slice(v.as_slice());
        Self(out)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RowBlock {
    pub kind: ResidualKind,
    pub start: usize,
    pub rows: usize,
}

/// Rows are the real and imaginary parts of interior-projected residual
/// entries; columns are the fourteen unknowns.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    pub theta_bs: f64,
    pub dims: FockDims,
    pub margin: usize,
    pub blocks: Vec<RowBlock>,
    pub matrix: DMatrix<f64>,
    /// Largest |M·v − direct(v)| seen in the linearity self-check.
    pub linearity_deviation: f64,
}

impl ConstraintMatrix {
    pub fn residual(&self, v: &UnknownVector) -> DVector<f64> {
        &self.matrix * v.as_dvector()
    }
}

fn vectorize(kind_ops: Vec<(ResidualKind, crate::fock::QOperator)>, margin: usize) -> Vec<(ResidualKind, Vec<f64>)> {
    kind_ops
        .into_iter()
        .map(|(kind, op)| {
            let block = op.interior_block(margin);
            let mut rows: Vec<f64> = block.iter().map(|c| c.re).collect();
            rows.extend(block.iter().map(|c| c.im));
            (kind, rows)
        })
        .collect()
}

/// First-order part of every selected residual for one coupling vector,
/// computed directly from the full operators.
pub fn first_order_residual(
    v: &UnknownVector,
    theta_bs: f64,
    inputs: &ModeOps,
    margin: usize,
    blocks: BlockSet,
) -> Vec<(ResidualKind, Vec<f64>)> {
    let ansatz = v.to_ansatz(theta_bs);
    let eval = |s: f64| vectorize(ansatz_residuals(&ansatz.scaled(s), inputs, blocks), margin);
    let (p1, m1, p2, m2) = (eval(1.0), eval(-1.0), eval(2.0), eval(-2.0));
    p1.into_iter()
        .zip(m1)
        .zip(p2.into_iter().zip(m2))
        .map(|(((kind, p1), (_, m1)), ((_, p2), (_, m2)))| {
            let rows = (0..p1.len())
                .map(|i| (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / 12.0)
                .collect();
            (kind, rows)
        })
        .collect()
}

fn flatten(parts: &[(ResidualKind, Vec<f64>)]) -> Vec<f64> {
    parts.iter().flat_map(|(_, r)| r.iter().copied()).collect()
}

/// Assemble the first-order constraint matrix by probing each unknown.
pub fn build_constraints(theta_bs: f64, dims: FockDims, margin: usize, blocks: BlockSet) -> Result<ConstraintMatrix> {
    if margin < 2 {
        return Err(LabError::InvalidParameter {
            name: "margin",
            reason: format!("constraint rows need margin >= 2, got {margin}"),
        });
    }
    if dims.interior_indices(margin).is_empty() {
        return Err(LabError::InvalidParameter {
            name: "dims",
            reason: format!("interior of {dims} at margin {margin} is empty"),
        });
    }
    let inputs = ModeOps::ladders(dims);
    let columns: Vec<Vec<(ResidualKind, Vec<f64>)>> = (0..UNKNOWNS)
        .into_par_iter()
        .map(|j| first_order_residual(&UnknownVector::unit(j), theta_bs, &inputs, margin, blocks))
        .collect();

    let mut row_blocks = Vec::new();
    let mut start = 0;
    for (kind, rows) in &columns[0] {
        row_blocks.push(RowBlock { kind: *kind, start, rows: rows.len() });
        start += rows.len();
    }
    let flat: Vec<Vec<f64>> = columns.iter().map(|c| flatten(c)).collect();
    let matrix = DMatrix::from_fn(start, UNKNOWNS, |r, c| flat[c][r]);

    let mut cm = ConstraintMatrix {
        theta_bs,
        dims,
        margin,
        blocks: row_blocks,
        matrix,
        linearity_deviation: 0.0,
    };
    cm.linearity_deviation = linearity_check(&cm, &inputs, blocks, 3, 0x5eed)?;
    Ok(cm)
}

/// Compare `M·v` against the direct first-order evaluation for seeded random
/// coupling vectors, and check homogeneity under scaling.
pub fn linearity_check(
    cm: &ConstraintMatrix,
    inputs: &ModeOps,
    blocks: BlockSet,
    probes: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let mut raw = [0.0; UNKNOWNS];
        for x in raw.iter_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        let v = UnknownVector(raw);
        let via_matrix = cm.residual(&v);
        let direct = DVector::from_vec(flatten(&first_order_residual(&v, cm.theta_bs, inputs, cm.margin, blocks)));
        let scale = 1.0 + via_matrix.amax();
        worst = worst.max((&via_matrix - &direct).amax() / scale);

        let lambda = -1.7;
        let scaled = UnknownVector(raw.map(|x| x * lambda));
        let direct_scaled =
            DVector::from_vec(flatten(&first_order_residual(&scaled, cm.theta_bs, inputs, cm.margin, blocks)));
        worst = worst.max((&direct_scaled - &direct * lambda).amax() / (scale * lambda.abs()));
    }
    if worst > LINEARITY_TOL {
        return Err(LabError::NonLinearProbe { deviation: worst, tolerance: LINEARITY_TOL });
    }
    Ok(worst)
}

/// Direct first-order residual of a coupling vector, flattened in the same
/// row order as [`ConstraintMatrix::matrix`].
pub fn direct_residual(cm: &ConstraintMatrix, v: &UnknownVector, blocks: BlockSet) -> DVector<f64> {
    let inputs = ModeOps::ladders(cm.dims);
    DVector::from_vec(flatten(&first_order_residual(v, cm.theta_bs, &inputs, cm.margin, blocks)))
}

#[derive(Debug, Clone, Serialize)]
pub struct Nullspace {
    /// Descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub dimension: usize,
    /// Smallest kept over largest discarded singular value; `None` when a
    /// side is empty or the discarded values are exactly zero.
    pub gap_ratio: Option<f64>,
    pub gap_flagged: bool,
    pub tol: f64,
    pub basis: Vec<UnknownVector>,
}

/// Orthonormal basis of the numerical nullspace by singular-value
/// thresholding at `tol · σ_max`.
pub fn nullspace(cm: &ConstraintMatrix, tol: f64) -> Nullspace {
    let nonzero_rows: Vec<usize> = (0..cm.matrix.nrows())
        .filter(|&r| cm.matrix.row(r).iter().any(|x| *x != 0.0))
        .collect();
    let reduced = DMatrix::from_fn(nonzero_rows.len().max(UNKNOWNS), UNKNOWNS, |r, c| {
        nonzero_rows.get(r).map_or(0.0, |&row| cm.matrix[(row, c)])
    });
    let svd = reduced.svd(false, true);
    let v_t = svd.v_t.expect("v requested");
    let mut order: Vec<usize> = (0..UNKNOWNS).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();

    let sigma_max = singular_values[0];
    let cutoff = tol * sigma_max;
    let rank = singular_values.iter().filter(|&&s| s >= cutoff && s > 0.0).count();
    let dimension = UNKNOWNS - rank;
    let gap_ratio = if rank == 0 || dimension == 0 || singular_values[rank] == 0.0 {
        None
    } else {
        Some(singular_values[rank - 1] / singular_values[rank])
    };
    let gap_flagged = gap_ratio.is_some_and(|g| g < MIN_GAP_RATIO);

    let basis = order[rank..]
        .iter()
        .map(|&i| {
            let mut v = [0.0; UNKNOWNS];
            for (c, x) in v.iter_mut().enumerate() {
                *x = v_t[(i, c)];
            }
            canonical_sign(UnknownVector(v))
        })
        .collect();

    Nullspace { singular_values, rank, dimension, gap_ratio, gap_flagged, tol, basis }
}

fn canonical_sign(v: UnknownVector) -> UnknownVector {
    let pivot = v.0.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() + 1e-12 { x } else { acc });
    if pivot < 0.0 {
        UnknownVector(v.0.map(|x| -x))
    } else {
        v
    }
}

fn basis_matrix(vectors: &[UnknownVector]) -> DMatrix<f64> {
    DMatrix::from_fn(UNKNOWNS, vectors.len(), |r, c| vectors[c].0[r])
}

fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return m.clone();
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > SPAN_TOL * svd.singular_values.max())
        .collect();
    DMatrix::from_fn(UNKNOWNS, keep.len(), |r, c| u[(r, keep[c])])
}

/// The two generators of the reduced family: `(κ, η) = (1, 0)` and `(1, π/2)`.
/// Every family member is `κ cos η · g0 + κ sin η · g1`.
pub fn family_generators(theta_bs: f64) -> [UnknownVector; 2] {
    [0.0, FRAC_PI_2].map(|eta| {
        UnknownVector::from_ansatz(&family_coefficients(&BssnParams { kappa: 1.0, eta, theta_bs }))
    })
}

/// Least-squares `(κ, η)` of a coupling vector; the third value is the
/// relative residual of the fit.
pub fn kappa_eta_of(v: &UnknownVector, theta_bs: f64) -> (f64, f64, f64) {
    let g = basis_matrix(&family_generators(theta_bs));
    let gram = g.transpose() * &g;
    let rhs = g.transpose() * v.as_dvector();
    let coef = gram.lu().solve(&rhs).expect("generators are independent");
    let fitted = &g * &coef;
    let resid = (v.as_dvector() - fitted).norm() / v.norm().max(f64::MIN_POSITIVE);
    let (p, q) = (coef[0], coef[1]);
    (p.hypot(q), q.atan2(p), if v.norm() == 0.0 { 0.0 } else { resid })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtraDirection {
    pub vector: UnknownVector,
    pub intermediates: SolverIntermediates,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyFit {
    pub nullspace_dimension: usize,
    /// Largest relative distance of a family generator from the nullspace.
    pub family_in_nullspace: f64,
    /// Largest distance of a nullspace basis vector from the family span.
    pub nullspace_in_family: f64,
    pub spans_equal: bool,
    /// Family generators expressed in nullspace coordinates (`dim × 2`, row-major).
    pub change_of_basis: Vec<[f64; 2]>,
    /// Nullspace directions orthogonal to the family, if any.
    pub extra_directions: Vec<ExtraDirection>,
    pub discrepancy: Option<String>,
}

impl FamilyFit {
    /// Nullspace coordinates of a family member.
    pub fn coords_of(&self, kappa: f64, eta: f64) -> Vec<f64> {
        let (s, c) = eta.sin_cos();
        self.change_of_basis
            .iter()
            .map(|row| kappa * (c * row[0] + s * row[1]))
            .collect()
    }
}

pub fn fit_family(basis: &[UnknownVector], theta_bs: f64) -> FamilyFit {
    let b = basis_matrix(basis);
    let gens = family_generators(theta_bs);
    let g = basis_matrix(&gens);

    let proj_b = &b * b.transpose();
    let family_in_nullspace = (0..2)
        .map(|i| {
            let col = g.column(i).clone_owned();
            (&col - &proj_b * &col).norm() / col.norm()
        })
        .fold(0.0, f64::max);

    let q = orthonormalize(&g);
    let proj_q = &q * q.transpose();
    let nullspace_in_family = (0..b.ncols())
        .map(|i| {
            let col = b.column(i).clone_owned();
            (&col - &proj_q * &col).norm()
        })
        .fold(0.0, f64::max);

    let coords = b.transpose() * &g;
    let change_of_basis = (0..coords.nrows()).map(|r| [coords[(r, 0)], coords[(r, 1)]]).collect();

    let complement = &b - &proj_q * &b;
    let extra_directions = if basis.is_empty() {
        Vec::new()
    } else {
        let svd = complement.svd(true, false);
        let u = svd.u.expect("u requested");
        let mut idx: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > SPAN_TOL)
            .collect();
        idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        idx.into_iter()
            .map(|i| {
                let v = canonical_sign(UnknownVector::from_dvector(&u.column(i).clone_owned()));
                ExtraDirection { intermediates: intermediates(&v.to_ansatz(theta_bs)), vector: v }
            })
            .collect()
    };

    let spans_equal = basis.len() == 2 && family_in_nullspace <= SPAN_TOL && nullspace_in_family <= SPAN_TOL;
    let discrepancy = if spans_equal {
        None
    } else if family_in_nullspace > SPAN_TOL {
        Some(format!(
            "family generators leave the nullspace (relative distance {family_in_nullspace:.3e})"
        ))
    } else {
        Some(format!(
            "nullspace has dimension {} but the (kappa, eta) family spans 2; {} extra direction(s)",
            basis.len(),
            extra_directions.len()
        ))
    };

    FamilyFit {
        nullspace_dimension: basis.len(),
        family_in_nullspace,
        nullspace_in_family,
        spans_equal,
        change_of_basis,
        extra_directions,
        discrepancy,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Relation {
    pub name: &'static str,
    pub value: f64,
}

/// Intermediate symbols of the hand derivation, computed from an ansatz.
#[derive(Debug, Clone, Serialize)]
pub struct SolverIntermediates {
    /// `Z_j = z_j e^{i(π−ϑ)/2}` as `[re, im]`.
    pub big_z: [[f64; 2]; 4],
    pub r0: f64,
    pub phi: f64,
    pub x0: f64,
    pub y0: f64,
    pub y: f64,
    pub x12: f64,
    pub x34: f64,
    /// From `w2 = i M e^{−iϑ/2}`.
    pub m: f64,
    /// Residuals of the derivation's relations; all zero on a consistent solution.
    pub relations: Vec<Relation>,
}

pub fn intermediates(ansatz: &Ansatz) -> SolverIntermediates {
    let th = ansatz.theta_bs;
    let rot = Complex64::from_polar(1.0, (PI - th) / 2.0);
    let big_z = ansatz.z.map(|z| z * rot);
    let (xs, ys) = (big_z.map(|z| z.re), big_z.map(|z| z.im));
    let combo = big_z[0] - big_z[1] - big_z[2] + big_z[3];
    let phi = FRAC_PI_4 - th;
    let along = combo * Complex64::from_polar(1.0, -phi);
    let r0 = along.re / 4.0;
    let x0 = combo.re / 4.0;
    let y0 = combo.im / 4.0;
    let y = (ys[0] + ys[2]) / 2.0;
    let x12 = (xs[0] + xs[1]) / 2.0;
    let x34 = (xs[2] + xs[3]) / 2.0;

    let [w1, w2, w3] = ansatz.w;
    let m_complex = -I * w2 * Complex64::from_polar(1.0, th / 2.0);
    let eq7 = combo.conj() - combo * Complex64::from_polar(1.0, (4.0 * th - PI) / 2.0);
    let w1_energy = w1 - Complex64::new(x34, -x12) * Complex64::from_polar(1.0, th / 2.0) / (2.0 * SQRT_2);
    let relations = vec![
        Relation { name: "eq7", value: eq7.norm() },
        Relation { name: "phase of Z1-Z2-Z3+Z4 vs phi", value: along.im.abs() / 4.0 },
        Relation { name: "Y1+Y2", value: (ys[0] + ys[1]).abs() },
        Relation { name: "Y3+Y4", value: (ys[2] + ys[3]).abs() },
        Relation { name: "Y1+sqrt2*R0*sin", value: (ys[0] + SQRT_2 * r0 * th.sin()).abs() },
        Relation { name: "Y3+sqrt2*R0*cos", value: (ys[2] + SQRT_2 * r0 * th.cos()).abs() },
        Relation { name: "X1-X2-2sqrt2*R0*cos", value: (xs[0] - xs[1] - 2.0 * SQRT_2 * r0 * th.cos()).abs() },
        Relation { name: "X3-X4+2sqrt2*R0*sin", value: (xs[2] - xs[3] + 2.0 * SQRT_2 * r0 * th.sin()).abs() },
        Relation {
            name: "w1*-(i/2)w3e^{-i theta}",
            value: (w1.conj() - 0.5 * I * w3 * Complex64::from_polar(1.0, -th)).norm(),
        },
        Relation { name: "w2*+w2e^{i theta}", value: (w2.conj() + w2 * Complex64::from_polar(1.0, th)).norm() },
        Relation { name: "Im M", value: m_complex.im.abs() },
        Relation { name: "energy: w1-(X34-iX12)e^{i theta/2}/(2sqrt2)", value: w1_energy.norm() },
        Relation { name: "energy: M", value: m_complex.re.abs() },
        Relation { name: "energy: R0", value: r0.abs() },
    ];

    SolverIntermediates {
        big_z: big_z.map(|z| [z.re, z.im]),
        r0,
        phi,
        x0,
        y0,
        y,
        x12,
        x34,
        m: m_complex.re,
        relations,
    }
}

/// Everything the `family` command reports.
#[derive(Debug, Clone, Serialize)]
pub struct DerivationReport {
    pub theta_bs: f64,
    pub dims: FockDims,
    pub margin: usize,
    pub blocks: BlockSet,
    pub constraint_rows: usize,
    pub linearity_deviation: f64,
    pub nullspace: Nullspace,
    pub family_fit: FamilyFit,
    pub family_sample: SolverIntermediates,
}

pub fn derive(theta_bs: f64, dims: FockDims, margin: usize, tol: f64, blocks: BlockSet) -> Result<DerivationReport> {
    let cm = build_constraints(theta_bs, dims, margin, blocks)?;
    let ns = nullspace(&cm, tol);
    let fit = fit_family(&ns.basis, theta_bs);
    let sample = family_coefficients(&BssnParams { kappa: 0.1, eta: 0.3, theta_bs });
    Ok(DerivationReport {
        theta_bs,
        dims,
        margin,
        blocks,
        constraint_rows: cm.matrix.nrows(),
        linearity_deviation: cm.linearity_deviation,
        nullspace: ns,
        family_fit: fit,
        family_sample: intermediates(&sample),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> FockDims {
        FockDims::new([5, 5, 4, 4]).unwrap()
    }

    #[test]
    fn zero_vector_has_zero_residual() {
        let cm = build_constraints(0.7, dims(), 2, BlockSet::ALL).unwrap();
        assert_eq!(cm.residual(&UnknownVector([0.0; UNKNOWNS])).amax(), 0.0);
        let direct = direct_residual(&cm, &UnknownVector([0.0; UNKNOWNS]), BlockSet::ALL);
        assert!(direct.amax() < 1e-15);
    }

    #[test]
    fn family_lies_in_the_nullspace() {
        let cm = build_constraints(0.7, dims(), 2, BlockSet::ALL).unwrap();
        let fam = UnknownVector::from_ansatz(&family_coefficients(&BssnParams::new(0.1, 0.3, 0.7).unwrap()));
        assert!(cm.residual(&fam).norm() <= 1e-10);
        assert!(direct_residual(&cm, &fam, BlockSet::ALL).norm() <= 1e-10);
    }

    #[test]
    fn margin_below_two_is_rejected() {
        assert!(build_constraints(0.0, dims(), 1, BlockSet::ALL).is_err());
        let tiny = FockDims::new([3, 3, 2, 2]).unwrap();
        assert!(build_constraints(0.0, tiny, 2, BlockSet::ALL).is_err());
    }

    #[test]
    fn intermediates_of_family_and_zero() {
        let fam = family_coefficients(&BssnParams::new(0.1, 0.3, 0.7).unwrap());
        let im = intermediates(&fam);
        for z in im.big_z {
            assert!(z[1].abs() < 1e-15);
        }
        assert!(im.r0.abs() < 1e-15 && im.m.abs() < 1e-15);
        assert!(im.relations.iter().all(|r| r.value < 1e-14), "{:?}", im.relations);

        let zero = intermediates(&Ansatz::linear(0.3));
        assert!(zero.big_z.iter().all(|z| z[0] == 0.0 && z[1] == 0.0));
        assert!(zero.r0 == 0.0 && zero.x12 == 0.0 && zero.x34 == 0.0 && zero.m == 0.0);
    }

    #[test]
    fn x12_is_mean_of_x1_x2() {
        let th = 0.4;
        let rot = Complex64::from_polar(1.0, -(PI - th) / 2.0);
        let mut ans = Ansatz::linear(th);
        ans.z[0] = rot * 0.3;
        ans.z[1] = rot * -0.3;
        let im = intermediates(&ans);
        assert!(im.x12.abs() < 1e-16);
        ans.z[1] = rot * 0.1;
        assert!((intermediates(&ans).x12 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn kappa_eta_round_trip() {
        for &(k, eta) in &[(0.05, 1.0), (0.3, -2.5), (1.2, 3.0), (0.01, -0.2)] {
            let v = UnknownVector::from_ansatz(&family_coefficients(&BssnParams::new(k, eta, 0.4).unwrap()));
            let (k2, e2, res) = kappa_eta_of(&v, 0.4);
            assert!((k2 - k).abs() < 1e-12 && (e2 - eta).abs() < 1e-12 && res < 1e-12);
        }
    }

    #[test]
    fn nullspace_contains_family_and_one_extra_direction() {
        let th = 0.7;
        let cm = build_constraints(th, dims(), 2, BlockSet::ALL).unwrap();
        let ns = nullspace(&cm, DEFAULT_TOL);
        assert_eq!(ns.dimension, 3);
        assert!(!ns.gap_flagged, "{:?}", ns.gap_ratio);
        for v in &ns.basis {
            assert!(direct_residual(&cm, v, BlockSet::ALL).norm() <= DEFAULT_TOL);
        }
        let fit = fit_family(&ns.basis, th);
        assert!(fit.family_in_nullspace <= 1e-9);
        assert!(!fit.spans_equal && fit.discrepancy.is_some());
        assert_eq!(fit.extra_directions.len(), 1);
        let extra = &fit.extra_directions[0].intermediates;
        assert!(extra.m.abs() > 1e-3 && extra.r0.abs() > 1e-3);
        assert!((extra.m + extra.r0).abs() < 1e-9);
    }

    #[test]
    fn dropping_energy_enlarges_the_nullspace() {
        let with = nullspace(&build_constraints(0.3, dims(), 2, BlockSet::ALL).unwrap(), DEFAULT_TOL);
        let without =
            nullspace(&build_constraints(0.3, dims(), 2, BlockSet::without_energy()).unwrap(), DEFAULT_TOL);
        assert!(without.dimension > with.dimension);
        let fit = fit_family(&without.basis, 0.3);
        assert!(fit.extra_directions.iter().any(|d| d.intermediates.m.abs() > 1e-3));
        assert!(fit.extra_directions.iter().any(|d| d.intermediates.r0.abs() > 1e-3));
    }

    #[test]
    fn family_coordinates_round_trip() {
        let th = 0.4;
        let ns = nullspace(&build_constraints(th, dims(), 2, BlockSet::ALL).unwrap(), DEFAULT_TOL);
        let fit = fit_family(&ns.basis, th);
        let fam = UnknownVector::from_ansatz(&family_coefficients(&BssnParams::new(0.05, 1.0, th).unwrap()));
        let coords = fit.coords_of(0.05, 1.0);
        let mut rebuilt = [0.0; UNKNOWNS];
        for (c, v) in coords.iter().zip(&ns.basis) {
            for (r, x) in rebuilt.iter_mut().zip(v.0) {
                *r += c * x;
            }
        }
        let err: f64 = rebuilt.iter().zip(fam.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-9);
        let (k, eta, _) = kappa_eta_of(&UnknownVector(rebuilt), th);
        assert!((k - 0.05).abs() <= 1e-9 && (eta - 1.0).abs() <= 1e-9);
        assert_eq!(fit.coords_of(0.0, 1.0), vec![0.0; ns.dimension]);
    }
}

//! Residual operators that vanish for an exact bosonic, energy-conserving,
//! reversible map: the twelve commutator relations, the weighted photon-number
//! balance, and the forward-then-reversed recovery of each input mode.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::fock::{Mode, QOperator};
use crate::modemap::{reversal_composition, Ansatz, ModeOps, Port};

/// `[left, right]` or `[left, right^dag]`; the identity is subtracted for
/// `[x, x^dag]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommutatorSpec {
    pub left: Port,
    pub right: Port,
    pub adjoint_right: bool,
}

impl CommutatorSpec {
    const fn new(left: Port, right: Port, adjoint_right: bool) -> Self {
        Self { left, right, adjoint_right }
    }

    pub fn subtracts_identity(&self) -> bool {
        self.adjoint_right && self.left == self.right
    }

    pub fn label(&self) -> String {
        let dag = if self.adjoint_right { "†" } else { "" };
        let shift = if self.subtracts_identity() { "-1" } else { "" };
        format!("[{},{}{}]{}", self.left, self.right, dag, shift)
    }
}

pub const COMMUTATORS: [CommutatorSpec; 12] = [
    CommutatorSpec::new(Port::FundC, Port::FundC, true),
    CommutatorSpec::new(Port::FundD, Port::FundD, true),
    CommutatorSpec::new(Port::FundC, Port::FundD, false),
    CommutatorSpec::new(Port::FundC, Port::FundD, true),
    CommutatorSpec::new(Port::HarmC, Port::HarmC, true),
    CommutatorSpec::new(Port::HarmD, Port::HarmD, true),
    CommutatorSpec::new(Port::HarmC, Port::HarmD, false),
    CommutatorSpec::new(Port::HarmC, Port::HarmD, true),
    CommutatorSpec::new(Port::FundC, Port::HarmD, false),
    CommutatorSpec::new(Port::FundD, Port::HarmD, false),
    CommutatorSpec::new(Port::HarmC, Port::FundD, false),
    CommutatorSpec::new(Port::HarmD, Port::FundD, false),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualKind {
    /// Index into [`COMMUTATORS`].
    Commutator(usize),
    Energy,
    Reversibility(Mode),
}

impl ResidualKind {
    pub fn label(&self) -> String {
        match self {
            ResidualKind::Commutator(i) => COMMUTATORS[*i].label(),
            ResidualKind::Energy => "energy".to_string(),
            ResidualKind::Reversibility(m) => format!("reversal[{m}]"),
        }
    }

    pub fn block(&self) -> Block {
        match self {
            ResidualKind::Commutator(_) => Block::Commutators,
            ResidualKind::Energy => Block::Energy,
            ResidualKind::Reversibility(_) => Block::Reversibility,
        }
    }
}

impl fmt::Display for ResidualKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for ResidualKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Commutators,
    Energy,
    Reversibility,
}

/// Which residual families to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockSet {
    pub commutators: bool,
    pub energy: bool,
    pub reversibility: bool,
}

impl BlockSet {
    pub const ALL: BlockSet = BlockSet { commutators: true, energy: true, reversibility: true };

    pub fn without_energy() -> Self {
        BlockSet { energy: false, ..Self::ALL }
    }

    pub fn kinds(&self) -> Vec<ResidualKind> {
        let mut kinds = Vec::new();
        if self.commutators {
            kinds.extend((0..COMMUTATORS.len()).map(ResidualKind::Commutator));
        }
        if self.energy {
            kinds.push(ResidualKind::Energy);
        }
        if self.reversibility {
            kinds.extend(Mode::ALL.map(ResidualKind::Reversibility));
        }
        kinds
    }
}

pub fn commutator_residual(spec: &CommutatorSpec, outputs: &ModeOps) -> QOperator {
    let left = &outputs.ops[spec.left.index()];
    let right = if spec.adjoint_right {
        &outputs.dags[spec.right.index()]
    } else {
        &outputs.ops[spec.right.index()]
    };
    let comm = left.commutator(right);
    if spec.subtracts_identity() {
        &comm - &QOperator::identity(comm.dims())
    } else {
        comm
    }
}

/// `Σ_out w·o^dag o − Σ_in w·m^dag m` with weight 1 for fundamentals and 2
/// for second harmonics.
pub fn energy_residual(outputs: &ModeOps, inputs: &ModeOps) -> QOperator {
    let weighted = |ops: &ModeOps| {
        let terms: Vec<QOperator> = (0..4)
            .map(|i| {
                let n = &ops.dags[i] * &ops.ops[i];
                if i >= 2 { n.scale_real(2.0) } else { n }
            })
            .collect();
        terms[1..].iter().fold(terms[0].clone(), |acc, t| &acc + t)
    };
    &weighted(outputs) - &weighted(inputs)
}

/// Evaluate the selected residuals for a map whose outputs are already built.
/// `reversal` supplies the ansatz used for the reversed substitution.
pub fn residual_operators(
    outputs: &ModeOps,
    inputs: &ModeOps,
    reversal: &Ansatz,
    blocks: BlockSet,
) -> Vec<(ResidualKind, QOperator)> {
    let recovered = if blocks.reversibility {
        Some(reversal_composition(reversal, inputs))
    } else {
        None
    };
    blocks
        .kinds()
        .into_iter()
        .map(|kind| {
            let op = match kind {
                ResidualKind::Commutator(i) => commutator_residual(&COMMUTATORS[i], outputs),
                ResidualKind::Energy => energy_residual(outputs, inputs),
                ResidualKind::Reversibility(m) => {
                    let rec = recovered.as_ref().expect("reversal requested");
                    &rec[m.index()] - inputs.get(m)
                }
            };
            (kind, op)
        })
        .collect()
}

/// All selected residuals of a general ansatz.
pub fn ansatz_residuals(ansatz: &Ansatz, inputs: &ModeOps, blocks: BlockSet) -> Vec<(ResidualKind, QOperator)> {
    let outputs = ModeOps::from_ops(ansatz.expand(inputs));
    residual_operators(&outputs, inputs, ansatz, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockDims;
    use crate::modemap::{family_coefficients, BssnParams};

    #[test]
    fn labels_are_distinct() {
        let labels: Vec<String> = BlockSet::ALL.kinds().iter().map(|k| k.label()).collect();
        assert_eq!(labels.len(), 17);
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 17);
        assert_eq!(labels[0], "[c,c†]-1");
        assert_eq!(labels[6], "[C,D]");
    }

    #[test]
    fn linear_map_has_zero_interior_residuals() {
        let dims = FockDims::new([5, 5, 4, 4]).unwrap();
        let lad = ModeOps::ladders(dims);
        for (kind, op) in ansatz_residuals(&Ansatz::linear(0.5), &lad, BlockSet::ALL) {
            assert!(op.interior_norm(2) < 1e-14, "{kind}");
        }
    }

    #[test]
    fn family_residuals_are_second_order() {
        let dims = FockDims::new([6, 6, 4, 4]).unwrap();
        let lad = ModeOps::ladders(dims);
        let norms = |k: f64| -> Vec<f64> {
            let ans = family_coefficients(&BssnParams::new(k, 0.3, 0.5).unwrap());
            ansatz_residuals(&ans, &lad, BlockSet::ALL).iter().map(|(_, op)| op.interior_norm(2)).collect()
        };
        let small = norms(1e-3);
        let large = norms(2e-3);
        for (i, (s, l)) in small.iter().zip(large.iter()).enumerate() {
            if *l < 1e-13 {
                continue;
            }
            let ratio = l / s;
            assert!((3.5..4.5).contains(&ratio), "residual {i}: ratio {ratio}");
        }
    }
}

//! Binary-tree dilation of channels and POVMs.
//!
//! A layer is a joint unitary on `ancilla (x) system`, ordered ancilla-major
//! (joint index `a * d + s`), applied with the ancilla in `|0>`. Its first
//! block column `(top; bottom)` carries the branch operators: measuring the
//! ancilla in `|0>` applies `top`, in `|1>` applies `bottom`. After a
//! measurement the ancilla is reset and the observed bit selects the next
//! layer's unitary.
//!
//! For Kraus operators `K_0..K_3` the first layer has
//! `A_i = sqrt(K_{2i}^dag K_{2i} + K_{2i+1}^dag K_{2i+1})` and the second
//! `B_ij = K_{2i+j} A_i^+`, so that `B_ij A_i = K_{2i+j}` and outcome bits
//! `(i, j)` herald Kraus index `2i + j`. Deeper trees apply the same split
//! recursively.

use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::discrimination::PovmSet;
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Operator};
use crate::linalg::{self, CMatrix, CVector};
use crate::metrics;
use crate::serial::{self, Pair};

/// Tolerance on `top^dag top + bottom^dag bottom = I` and on unitarity.
pub const ISOMETRY_TOL: f64 = 1e-9;

/// Eigenvalues of a node operator at or below this fraction of the largest
/// one are treated as zero by the pseudoinverse.
pub const PINV_CUTOFF: f64 = 1e-10;

const SUPPORT_TOL: f64 = 1e-9;
const COMPLETION_TOL: f64 = 1e-6;

/// Stacked first block column `(top; bottom)` of a layer unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct IsometryBlock {
    top: Operator,
    bottom: Operator,
}

impl IsometryBlock {
    pub fn new(top: Operator, bottom: Operator) -> Result<Self> {
        if top.dim() != bottom.dim() {
            return Err(Error::DimensionMismatch {
                expected: top.dim(),
                found: bottom.dim(),
            });
        }
        let block = Self { top, bottom };
        let deviation = block.deviation();
        if deviation > ISOMETRY_TOL {
            return Err(Error::NotIsometry { deviation });
        }
        Ok(block)
    }

    pub fn top(&self) -> &Operator {
        &self.top
    }

    pub fn bottom(&self) -> &Operator {
        &self.bottom
    }

    pub fn dim(&self) -> usize {
        self.top.dim()
    }

    /// `max |top^dag top + bottom^dag bottom - I|`
    pub fn deviation(&self) -> f64 {
        let (t, b) = (self.top.matrix(), self.bottom.matrix());
        let sum = t.adjoint() * t + b.adjoint() * b;
        linalg::max_abs_diff(&sum, &linalg::identity(self.dim()))
    }

    fn stacked(&self) -> CMatrix {
        let n = self.dim();
        let mut v = CMatrix::zeros(2 * n, n);
        v.view_mut((0, 0), (n, n)).copy_from(self.top.matrix());
        v.view_mut((n, 0), (n, n)).copy_from(self.bottom.matrix());
        v
    }
}

/// `A_0 = sqrt(K_0^dag K_0 + K_1^dag K_1)`, `A_1 = sqrt(K_2^dag K_2 + K_3^dag K_3)`.
pub fn layer_split(kraus4: &[Operator]) -> Result<(Operator, Operator)> {
    if kraus4.len() != 4 {
        return Err(Error::InvalidDimension(format!(
            "layer split needs 4 Kraus operators, got {}",
            kraus4.len()
        )));
    }
    let sq = |a: &Operator, b: &Operator| {
        let s = a.matrix().adjoint() * a.matrix() + b.matrix().adjoint() * b.matrix();
        Operator::from(linalg::psd_sqrt(&s))
    };
    Ok((sq(&kraus4[0], &kraus4[1]), sq(&kraus4[2], &kraus4[3])))
}

/// `B_j = K_j A^+`, completed on `ker A` so that `(B_0; B_1)` is an isometry.
pub fn branch_ops(kraus_pair: (&Operator, &Operator), a: &Operator) -> Result<(Operator, Operator)> {
    let block = branch_block(kraus_pair.0.matrix(), kraus_pair.1.matrix(), a.matrix())?;
    Ok((block.top, block.bottom))
}

fn branch_block(c0: &CMatrix, c1: &CMatrix, m: &CMatrix) -> Result<IsometryBlock> {
    let n = m.nrows();
    let inv = linalg::psd_pinv(m, PINV_CUTOFF);
    let kernel = linalg::projector(&inv.kernel, n);
    let scale = linalg::max_abs(m).max(1.0);
    let residual = linalg::max_abs(&(c0 * &kernel)).max(linalg::max_abs(&(c1 * &kernel)));
    if residual > SUPPORT_TOL * scale {
        return Err(Error::SupportViolation { residual });
    }
    let mut b0 = c0 * &inv.pinv;
    let mut b1 = c1 * &inv.pinv;

    if !inv.kernel.is_empty() {
        let stack = |top: &CVector, bottom: &CVector| {
            let mut v = CVector::zeros(2 * n);
            v.rows_mut(0, n).copy_from(top);
            v.rows_mut(n, n).copy_from(bottom);
            v
        };
        let zero = CVector::zeros(n);
        let mut taken: Vec<CVector> = inv
            .support
            .iter()
            .map(|s| stack(&(&b0 * s), &(&b1 * s)))
            .collect();
        let mut candidates: Vec<CVector> = Vec::new();
        candidates.extend(inv.kernel.iter().map(|k| stack(k, &zero)));
        candidates.extend(inv.kernel.iter().map(|k| stack(&zero, k)));
        candidates.extend((0..2 * n).map(|k| linalg::unit_vector(2 * n, k)));
        for k in &inv.kernel {
            let w = candidates
                .iter()
                .find_map(|c| linalg::orthogonal_residual(c, &taken, COMPLETION_TOL))
                .expect("2n candidates span the joint space");
            b0 += linalg::outer(&w.rows(0, n).into_owned(), k);
            b1 += linalg::outer(&w.rows(n, n).into_owned(), k);
            taken.push(w);
        }
    }
    IsometryBlock::new(Operator::from(b0), Operator::from(b1))
}

/// Joint unitary whose first block column is the given isometry; the rest
/// is an orthonormal completion built from the standard basis.
pub fn unitary_completion(block: &IsometryBlock) -> Result<CMatrix> {
    let deviation = block.deviation();
    if deviation > ISOMETRY_TOL {
        return Err(Error::NotIsometry { deviation });
    }
    let n = block.dim();
    let v = block.stacked();
    let columns: Vec<CVector> = (0..n).map(|k| v.column(k).into_owned()).collect();
    let extra = linalg::complete_basis(&columns, 2 * n);
    let mut u = CMatrix::zeros(2 * n, 2 * n);
    u.view_mut((0, 0), (2 * n, n)).copy_from(&v);
    for (k, c) in extra.iter().enumerate() {
        u.set_column(n + k, c);
    }
    Ok(u)
}

/// Kraus list padded with zero operators to length 4.
pub fn pad_kraus(channel: &KrausChannel) -> Result<Vec<Operator>> {
    if channel.rank() > 4 {
        return Err(Error::UnsupportedRank {
            rank: channel.rank(),
            max: 4,
        });
    }
    let mut ops = channel.kraus().to_vec();
    ops.resize(4, Operator::zeros(channel.dim()));
    Ok(ops)
}

/// Leaf of the tree: the measured bits (first layer first) and the Kraus
/// index they herald, `None` for zero-padding leaves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeEntry {
    pub bits: String,
    pub kraus: Option<usize>,
    pub padded: bool,
}

/// Layered joint unitaries with measurement-conditioned branching.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryTreeCircuit {
    dim: usize,
    /// `layers[l][p]`: unitary of layer `l` after observing the `l` bits
    /// of `p` (most significant first).
    layers: Vec<Vec<CMatrix>>,
    outcome_map: Vec<OutcomeEntry>,
}

impl BinaryTreeCircuit {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<CMatrix>] {
        &self.layers
    }

    /// Unitary of `layer` given the previously observed bits `prefix`.
    pub fn unitary(&self, layer: usize, prefix: usize) -> &CMatrix {
        &self.layers[layer][prefix]
    }

    pub fn u_a(&self) -> &CMatrix {
        &self.layers[0][0]
    }

    pub fn u_b(&self, first_bit: usize) -> &CMatrix {
        &self.layers[1][first_bit]
    }

    pub fn outcome_map(&self) -> &[OutcomeEntry] {
        &self.outcome_map
    }

    pub fn num_leaves(&self) -> usize {
        1 << self.depth()
    }

    /// Branch operator of a layer for ancilla outcome `bit`.
    pub fn branch(&self, layer: usize, prefix: usize, bit: usize) -> CMatrix {
        linalg::block(self.unitary(layer, prefix), self.dim, bit, 0)
    }

    /// Product of the branch operators along the path to `leaf`.
    pub fn leaf_operator(&self, leaf: usize) -> CMatrix {
        let depth = self.depth();
        let mut op = linalg::identity(self.dim);
        for l in 0..depth {
            let prefix = leaf >> (depth - l);
            let bit = (leaf >> (depth - l - 1)) & 1;
            op = self.branch(l, prefix, bit) * op;
        }
        op
    }

    /// Effective Kraus operators in Kraus-index order, padding dropped.
    pub fn effective_kraus(&self) -> Vec<Operator> {
        let mut indexed: Vec<(usize, Operator)> = self
            .outcome_map
            .iter()
            .enumerate()
            .filter_map(|(leaf, e)| e.kraus.map(|k| (k, Operator::from(self.leaf_operator(leaf)))))
            .collect();
        indexed.sort_by_key(|(k, _)| *k);
        indexed.into_iter().map(|(_, op)| op).collect()
    }

    /// The channel implemented by the circuit, every leaf included.
    pub fn implemented_channel(&self) -> Result<KrausChannel> {
        let ops = (0..self.num_leaves())
            .map(|leaf| Operator::from(self.leaf_operator(leaf)))
            .collect();
        KrausChannel::new(ops, "circuit")
    }

    /// Leaf probabilities `Tr[L rho L^dag]` under ideal propagation.
    pub fn leaf_probabilities(&self, rho: &DensityMatrix) -> Vec<f64> {
        (0..self.num_leaves())
            .map(|leaf| {
                let l = self.leaf_operator(leaf);
                (&l * rho.matrix() * l.adjoint()).trace().re
            })
            .collect()
    }

    pub fn max_unitarity_deviation(&self) -> f64 {
        self.layers
            .iter()
            .flatten()
            .map(linalg::unitarity_deviation)
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> CircuitJson {
        let m = |u: &CMatrix| serial::matrix_to_pairs(u);
        CircuitJson {
            dim: self.dim,
            u_a: m(self.u_a()),
            u_b0: m(self.u_b(0)),
            u_b1: m(self.u_b(1)),
            outcome_map: self.outcome_map.clone(),
            deeper_layers: self.layers[2..]
                .iter()
                .map(|layer| layer.iter().map(m).collect())
                .collect(),
        }
    }

    pub fn from_json(json: &CircuitJson) -> Result<Self> {
        let n2 = 2 * json.dim;
        let m = |p: &[Pair]| serial::matrix_from_pairs(p, Some(n2));
        let mut layers = vec![vec![m(&json.u_a)?], vec![m(&json.u_b0)?, m(&json.u_b1)?]];
        for (k, layer) in json.deeper_layers.iter().enumerate() {
            let want = 1usize << (k + 2);
            if layer.len() != want {
                return Err(Error::ShapeMismatch(format!(
                    "layer {} has {} unitaries, expected {want}",
                    k + 2,
                    layer.len()
                )));
            }
            layers.push(layer.iter().map(|u| m(u)).collect::<Result<_>>()?);
        }
        let circuit = Self {
            dim: json.dim,
            layers,
            outcome_map: json.outcome_map.clone(),
        };
        if circuit.outcome_map.len() != circuit.num_leaves() {
            return Err(Error::ShapeMismatch(format!(
                "{} outcome entries for {} leaves",
                circuit.outcome_map.len(),
                circuit.num_leaves()
            )));
        }
        let deviation = circuit.max_unitarity_deviation();
        if deviation > ISOMETRY_TOL {
            return Err(Error::NotIsometry { deviation });
        }
        Ok(circuit)
    }
}

/// Circuit wire format: complex matrices flattened row-major. Trees deeper
/// than two layers list layers 3 and beyond in `deeper_layers`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitJson {
    pub dim: usize,
    #[serde(rename = "U_A")]
    pub u_a: Vec<Pair>,
    #[serde(rename = "U_B0")]
    pub u_b0: Vec<Pair>,
    #[serde(rename = "U_B1")]
    pub u_b1: Vec<Pair>,
    pub outcome_map: Vec<OutcomeEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deeper_layers: Vec<Vec<Vec<Pair>>>,
}

/// Two-layer circuit for a channel of Kraus rank at most 4.
pub fn compile_channel(channel: &KrausChannel) -> Result<BinaryTreeCircuit> {
    let ops = pad_kraus(channel)?;
    compile_kraus(&ops, channel.rank(), 2)
}

/// Tree of depth `max(2, ceil(log2 rank))`; identical to
/// [`compile_channel`] for rank up to 4.
pub fn compile_tree(channel: &KrausChannel) -> Result<BinaryTreeCircuit> {
    let mut depth = 2;
    while (1usize << depth) < channel.rank() {
        depth += 1;
    }
    let mut ops = channel.kraus().to_vec();
    ops.resize(1 << depth, Operator::zeros(channel.dim()));
    compile_kraus(&ops, channel.rank(), depth)
}

fn compile_kraus(ops: &[Operator], rank: usize, depth: usize) -> Result<BinaryTreeCircuit> {
    let n = ops[0].dim();
    let leaves = 1usize << depth;
    debug_assert_eq!(ops.len(), leaves);
    let gram: Vec<CMatrix> = ops
        .iter()
        .map(|k| k.matrix().adjoint() * k.matrix())
        .collect();
    // node_ops[l][p]: sqrt of the summed K^dag K below node p of level l;
    // the leaf level holds the Kraus operators themselves.
    let mut node_ops: Vec<Vec<CMatrix>> = (0..depth)
        .map(|l| {
            let width = leaves >> l;
            (0..1usize << l)
                .map(|p| {
                    let mut s = linalg::zeros(n);
                    for g in &gram[p * width..(p + 1) * width] {
                        s += g;
                    }
                    linalg::psd_sqrt(&s)
                })
                .collect()
        })
        .collect();
    node_ops.push(ops.iter().map(|k| k.matrix().clone()).collect());

    let mut layers = Vec::with_capacity(depth);
    for l in 0..depth {
        let layer = (0..1usize << l)
            .map(|p| {
                let block = branch_block(
                    &node_ops[l + 1][2 * p],
                    &node_ops[l + 1][2 * p + 1],
                    &node_ops[l][p],
                )?;
                unitary_completion(&block)
            })
            .collect::<Result<Vec<_>>>()?;
        layers.push(layer);
    }
    let outcome_map = (0..leaves)
        .map(|leaf| OutcomeEntry {
            bits: format!("{leaf:0depth$b}"),
            kraus: (leaf < rank).then_some(leaf),
            padded: leaf >= rank,
        })
        .collect();
    Ok(BinaryTreeCircuit {
        dim: n,
        layers,
        outcome_map,
    })
}

/// Kraus operators `e = sqrt(E)` in the order `E_I, E_0, ..., E_{N-1}`.
pub fn povm_to_kraus(povm: &PovmSet) -> Result<KrausChannel> {
    let ops = povm
        .all_effects()
        .enumerate()
        .map(|(k, e)| {
            let min = linalg::min_eigenvalue(e.matrix());
            if min < -crate::discrimination::POVM_TOL {
                return Err(Error::InvalidPovm(format!(
                    "effect {k} has negative eigenvalue {min:.3e}"
                )));
            }
            Ok(Operator::from(linalg::psd_sqrt(e.matrix())))
        })
        .collect::<Result<Vec<_>>>()?;
    KrausChannel::new(ops, "povm")
}

/// Process fidelity between the channel realised by the circuit and the
/// target.
pub fn verify_circuit(circuit: &BinaryTreeCircuit, target: &KrausChannel) -> Result<f64> {
    if circuit.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            found: circuit.dim(),
        });
    }
    let implemented = circuit.implemented_channel()?;
    metrics::process_fidelity(
        &metrics::chi_from_channel(target),
        &metrics::chi_from_channel(&implemented),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{
        block_dephasing, block_pauli, channel_difference, random_channel, BlockPartition,
        BlockPauliParams, PauliKind,
    };
    use crate::hilbert::{HilbertDim, StateVector};
    use crate::linalg::C64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hd(d: usize) -> HilbertDim {
        HilbertDim::qudit(d).unwrap()
    }

    fn pauli(eta: f64, kind: PauliKind) -> KrausChannel {
        block_pauli(&BlockPauliParams::standard(eta, kind), hd(4)).unwrap()
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        linalg::max_abs_diff(a, b) < tol
    }

    #[test]
    fn unitary_channel_splits_trivially() {
        let x = pauli(1.0, PauliKind::X);
        let ops = pad_kraus(&x).unwrap();
        assert_eq!(ops.len(), 4);
        let (a0, a1) = layer_split(&ops).unwrap();
        assert!(close(a0.matrix(), &linalg::identity(4), 1e-12));
        assert!(a1.is_zero(1e-12));
    }

    #[test]
    fn interleaved_pauli_split() {
        let c = pauli(0.5, PauliKind::X);
        let k = c.kraus();
        let z = Operator::zeros(4);
        let (a0, a1) = layer_split(&[k[0].clone(), z.clone(), k[1].clone(), z]).unwrap();
        let half = linalg::identity(4).scale(0.5f64.sqrt());
        assert!(close(a0.matrix(), &half, 1e-12));
        assert!(close(a1.matrix(), &half, 1e-12));
    }

    #[test]
    fn projector_povm_split_is_projector() {
        let p = |v: &[f64]| StateVector::from_real(v).unwrap().density().into_inner();
        let e_i = p(&[1.0, 0.0, 0.0, 1.0]);
        let e_0 = p(&[1.0, 0.0, 0.0, -1.0]);
        let e_1 = p(&[0.0, 1.0, 1.0, 0.0]);
        let e_2 = p(&[0.0, 1.0, -1.0, 0.0]);
        let ops: Vec<Operator> = [&e_i, &e_0, &e_1, &e_2]
            .iter()
            .map(|m| Operator::from((*m).clone()))
            .collect();
        let (a0, _) = layer_split(&ops).unwrap();
        assert!(close(a0.matrix(), &(&e_i + &e_0), 1e-12));
    }

    #[test]
    fn branch_ops_invertible_and_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = random_channel(3, 2, &mut rng).unwrap();
        let k = c.kraus();
        let (a, _) = layer_split(&[k[0].clone(), k[1].clone(), Operator::zeros(3), Operator::zeros(3)]).unwrap();
        let (b0, b1) = branch_ops((&k[0], &k[1]), &a).unwrap();
        let inv = a.matrix().clone().try_inverse().unwrap();
        assert!(close(b0.matrix(), &(k[0].matrix() * &inv), 1e-10));
        assert!(close(&(b1.matrix() * a.matrix()), k[1].matrix(), 1e-10));

        let proj = StateVector::from_real(&[1.0, 1.0, 0.0]).unwrap().density().into_inner();
        let p = Operator::from(proj.clone());
        let (b0, b1) = branch_ops((&p, &Operator::zeros(3)), &p).unwrap();
        assert!(close(b0.matrix(), &linalg::identity(3), 1e-12));
        assert!(b1.is_zero(1e-12));
    }

    #[test]
    fn support_violation_detected() {
        let p = Operator::from(StateVector::from_real(&[1.0, 0.0]).unwrap().density().into_inner());
        let q = Operator::from(StateVector::from_real(&[0.0, 1.0]).unwrap().density().into_inner());
        assert!(matches!(
            branch_ops((&q, &Operator::zeros(2)), &p),
            Err(Error::SupportViolation { .. })
        ));
    }

    #[test]
    fn completion_cases() {
        let id = Operator::identity(3);
        let u = unitary_completion(&IsometryBlock::new(id.clone(), Operator::zeros(3)).unwrap()).unwrap();
        assert!(close(&u, &linalg::identity(6), 1e-15));
        let h = id.scale(0.5f64.sqrt());
        let u = unitary_completion(&IsometryBlock::new(h.clone(), h).unwrap()).unwrap();
        assert!(linalg::unitarity_deviation(&u) < 1e-10);
        assert!(matches!(
            IsometryBlock::new(id.clone(), id),
            Err(Error::NotIsometry { .. })
        ));
    }

    #[test]
    fn rank_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = random_channel(2, 5, &mut rng).unwrap();
        assert!(matches!(pad_kraus(&c), Err(Error::UnsupportedRank { rank: 5, max: 4 })));
        assert!(compile_channel(&c).is_err());
        let tree = compile_tree(&c).unwrap();
        assert_eq!(tree.depth(), 3);
        assert!(verify_circuit(&tree, &c).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn identity_circuit() {
        let id = KrausChannel::identity(4);
        let c = compile_channel(&id).unwrap();
        assert!(close(c.u_a(), &linalg::identity(8), 1e-12));
        assert!(close(c.u_b(0), &linalg::identity(8), 1e-12));
        let probs = c.leaf_probabilities(&StateVector::from_real(&[1.0, 2.0, 0.0, 1.0]).unwrap().density());
        assert!((probs[0] - 1.0).abs() < 1e-12);
        assert!((verify_circuit(&c, &id).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(c.outcome_map()[0].kraus, Some(0));
        assert!(c.outcome_map()[1].padded);
    }

    #[test]
    fn pauli_and_dephasing_branch_probabilities() {
        let probe = StateVector::from_real(&[1.0, 0.0, 0.0, 1.0]).unwrap().density();
        let c = compile_channel(&pauli(0.3, PauliKind::X)).unwrap();
        let p = c.leaf_probabilities(&probe);
        assert!((p[0] - 0.7).abs() < 1e-12 && (p[1] - 0.3).abs() < 1e-12);

        let part = BlockPartition::new(vec![vec![0], vec![1, 2, 3]], 4).unwrap();
        let deph = block_dephasing(&part, hd(4)).unwrap();
        let c = compile_channel(&deph).unwrap();
        let p = c.leaf_probabilities(&StateVector::from_real(&[1.0; 4]).unwrap().density());
        assert!((p[0] - 0.25).abs() < 1e-12 && (p[1] - 0.75).abs() < 1e-12);
        assert!(p[2].abs() < 1e-12 && p[3].abs() < 1e-12);
    }

    #[test]
    fn wrong_target_fidelity() {
        let x = pauli(0.5, PauliKind::X);
        let c = compile_channel(&x).unwrap();
        assert!(verify_circuit(&c, &x).unwrap() > 1.0 - 1e-9);
        // commuting chi matrices with weights (1/2, 1/2) on I and on
        // mutually orthogonal K_X, K_Y: F = (sqrt(1/4))^2
        let f = verify_circuit(&c, &pauli(0.5, PauliKind::Y)).unwrap();
        assert!((f - 0.25).abs() < 1e-9, "{f}");
    }

    #[test]
    fn povm_roots() {
        let p = |v: &[f64]| StateVector::from_real(v).unwrap().density().into_inner();
        let effects = vec![
            Operator::from(p(&[1.0, 0.0, 0.0, -1.0])),
            Operator::from(p(&[0.0, 1.0, 1.0, 0.0])),
            Operator::from(p(&[0.0, 1.0, -1.0, 0.0])),
        ];
        let povm = PovmSet::from_effects(effects, Some(1.0)).unwrap();
        let k = povm_to_kraus(&povm).unwrap();
        for (e, root) in povm.all_effects().zip(k.kraus()) {
            assert!(close(e.matrix(), root.matrix(), 1e-12));
        }

        let s = 2.0 + 2f64.sqrt();
        let w = |i: usize| {
            let mut v = vec![0.0; 4];
            v[i] = 1.0;
            v[i + 1] = -1.0;
            p(&v)
        };
        let effects: Vec<Operator> = (0..3).map(|i| Operator::from(w(i).scale(2.0 / s))).collect();
        let povm = PovmSet::from_effects(effects, None).unwrap();
        let k = povm_to_kraus(&povm).unwrap();
        for i in 0..3 {
            let want = w(i).scale((2.0 / s).sqrt());
            assert!(close(k.kraus()[i + 1].matrix(), &want, 1e-12));
        }
    }

    #[test]
    fn json_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for rank in [3, 6] {
            let c = random_channel(3, rank, &mut rng).unwrap();
            let circuit = compile_tree(&c).unwrap();
            let text = serde_json::to_string(&circuit.to_json()).unwrap();
            assert_eq!(rank <= 4, !text.contains("deeper_layers"));
            let back = BinaryTreeCircuit::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
            assert_eq!(back, circuit);
        }
        let text = serde_json::to_string(&compile_channel(&KrausChannel::identity(2)).unwrap().to_json()).unwrap();
        assert!(text.starts_with("{\"dim\":2,\"U_A\":"));
    }

    #[test]
    fn effective_kraus_match_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = random_channel(4, 3, &mut rng).unwrap();
        let circuit = compile_channel(&c).unwrap();
        for (got, want) in circuit.effective_kraus().iter().zip(c.kraus()) {
            assert!(close(got.matrix(), want.matrix(), 1e-9));
        }
        let implemented = circuit.implemented_channel().unwrap();
        assert!(channel_difference(&implemented, &c).unwrap() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn round_trip_random_channels(seed in 0u64..10_000, d_idx in 0usize..4, rank in 1usize..=4) {
            let d = [2usize, 3, 4, 8][d_idx];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_channel(d, rank, &mut rng).unwrap();
            let circuit = compile_channel(&c).unwrap();
            prop_assert!(circuit.max_unitarity_deviation() < 1e-9);
            prop_assert!(verify_circuit(&circuit, &c).unwrap() >= 1.0 - 1e-9);
            let rho = StateVector::normalized(CVector::from_fn(d, |i, _| C64::new(1.0 + i as f64, -(i as f64)))).unwrap().density();
            let total: f64 = circuit.leaf_probabilities(&rho).iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }
    }
}

//! Kraus-operator channels and the channel families used by the
//! discrimination experiments.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, HilbertDim, Operator};
use crate::linalg::{self, CMatrix, C64};
use crate::serial::{self, Pair};

/// Trace-preservation tolerance accepted from user-supplied Kraus sets.
pub const TP_TOL: f64 = 1e-8;

/// Completely positive trace-preserving map `rho -> sum_i K_i rho K_i^dag`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    kraus: Vec<Operator>,
    dim: usize,
    label: String,
}

impl KrausChannel {
    /// Validate a Kraus list: nonempty, equal square dimensions and
    /// `sum K^dag K = I` to within [`TP_TOL`].
    pub fn new(kraus: Vec<Operator>, label: impl Into<String>) -> Result<Self> {
        let first = kraus.first().ok_or(Error::EmptyKraus)?;
        let dim = first.dim();
        for k in &kraus {
            if k.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: k.dim(),
                });
            }
        }
        let channel = Self {
            kraus,
            dim,
            label: label.into(),
        };
        let deviation = channel.tp_deviation();
        if deviation > TP_TOL {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(channel)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            kraus: vec![Operator::identity(n)],
            dim: n,
            label: "identity".into(),
        }
    }

    /// Unitary channel; the operator is checked for unitarity.
    pub fn unitary(u: Operator, label: impl Into<String>) -> Result<Self> {
        Self::new(vec![u], label)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.kraus.len()
    }

    pub fn kraus(&self) -> &[Operator] {
        &self.kraus
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `max |sum K^dag K - I|`
    pub fn tp_deviation(&self) -> f64 {
        let mut sum = linalg::zeros(self.dim);
        for k in &self.kraus {
            sum += k.matrix().adjoint() * k.matrix();
        }
        linalg::max_abs_diff(&sum, &linalg::identity(self.dim))
    }

    /// Apply to a density matrix.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        Ok(DensityMatrix::from_matrix_unchecked(
            self.apply_matrix(rho.matrix()),
        ))
    }

    /// Apply the linear map to an arbitrary matrix (no validation; the
    /// caller guarantees the dimension).
    pub fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        let mut out = linalg::zeros(self.dim);
        for k in &self.kraus {
            let km = k.matrix();
            out += km * m * km.adjoint();
        }
        out
    }

    pub fn to_json(&self) -> ChannelJson {
        ChannelJson {
            label: self.label.clone(),
            dim: self.dim,
            kraus: self
                .kraus
                .iter()
                .map(|k| serial::matrix_to_pairs(k.matrix()))
                .collect(),
        }
    }

    pub fn from_json(json: &ChannelJson) -> Result<Self> {
        let kraus = json
            .kraus
            .iter()
            .map(|k| serial::matrix_from_pairs(k, Some(json.dim)).map(Operator::from))
            .collect::<Result<Vec<_>>>()?;
        Self::new(kraus, json.label.clone())
    }
}

/// Wire format of a channel: row-major Kraus matrices of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    pub label: String,
    pub dim: usize,
    pub kraus: Vec<Vec<Pair>>,
}

/// Validate and wrap a Kraus list (unlabelled).
pub fn make_channel(kraus: Vec<Operator>) -> Result<KrausChannel> {
    KrausChannel::new(kraus, "")
}

/// Sequential composition: `a` first, then `b`. Kraus set `{B_j A_i}`.
pub fn compose(a: &KrausChannel, b: &KrausChannel) -> Result<KrausChannel> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    let mut kraus = Vec::with_capacity(a.rank() * b.rank());
    for bk in &b.kraus {
        for ak in &a.kraus {
            kraus.push(Operator::from(bk.matrix() * ak.matrix()));
        }
    }
    Ok(KrausChannel {
        kraus,
        dim: a.dim,
        label: format!("{} ; {}", a.label, b.label),
    })
}

/// Largest entry-wise difference between two linear maps evaluated on every
/// elementary matrix `|i><j|`.
pub fn map_difference(
    n: usize,
    a: impl Fn(&CMatrix) -> CMatrix,
    b: impl Fn(&CMatrix) -> CMatrix,
) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut e = linalg::zeros(n);
            e[(i, j)] = linalg::ONE;
            worst = worst.max(linalg::max_abs_diff(&a(&e), &b(&e)));
        }
    }
    worst
}

/// Channels are equal as maps when they agree on the elementary basis.
pub fn channel_difference(a: &KrausChannel, b: &KrausChannel) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(map_difference(a.dim, |m| a.apply_matrix(m), |m| b.apply_matrix(m)))
}

/// Disjoint index blocks covering `{0..d-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
}

impl BlockPartition {
    pub fn new(blocks: Vec<Vec<usize>>, d: usize) -> Result<Self> {
        let mut seen = vec![false; d];
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &i in b {
                if i >= d {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} outside 0..{d}"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} appears twice"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!(
                "index {missing} not covered"
            )));
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }
}

/// Block-dephasing: Kraus operators are the block projectors. Levels of the
/// truncated space above `d` form one extra block.
pub fn block_dephasing(partition: &BlockPartition, dim: HilbertDim) -> Result<KrausChannel> {
    let n = dim.d_trunc();
    let covered: usize = partition.blocks.iter().map(Vec::len).sum();
    if covered != dim.d() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {covered} levels but d = {}",
            dim.d()
        )));
    }
    let mut blocks = partition.blocks.clone();
    if n > dim.d() {
        blocks.push((dim.d()..n).collect());
    }
    let kraus = blocks
        .iter()
        .map(|b| {
            let mut p = linalg::zeros(n);
            for &i in b {
                p[(i, i)] = linalg::ONE;
            }
            Operator::from(p)
        })
        .collect();
    let label = partition
        .blocks
        .iter()
        .map(|b| b.iter().map(|i| i.to_string()).collect::<String>())
        .collect::<Vec<_>>()
        .join("|");
    Ok(KrausChannel {
        kraus,
        dim: n,
        label: format!("dephasing[{label}]"),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliKind {
    X,
    Y,
    Z,
}

impl PauliKind {
    pub const ALL: [PauliKind; 3] = [PauliKind::X, PauliKind::Y, PauliKind::Z];

    /// 2x2 matrix in the ordered basis `(first, second)` of a pair.
    pub fn matrix(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            PauliKind::X => [[o, one], [one, o]],
            PauliKind::Y => [[o, -i], [i, o]],
            PauliKind::Z => [[one, o], [o, -one]],
        }
    }
}

impl std::fmt::Display for PauliKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PauliKind::X => "X",
            PauliKind::Y => "Y",
            PauliKind::Z => "Z",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockPauliParams {
    pub eta: f64,
    pub kind: PauliKind,
    pub pairs: Vec<(usize, usize)>,
}

impl BlockPauliParams {
    /// The pairing `{0,2}`, `{1,3}` of a 4-level system.
    pub fn standard(eta: f64, kind: PauliKind) -> Self {
        Self {
            eta,
            kind,
            pairs: vec![(0, 2), (1, 3)],
        }
    }
}

/// `sigma` on every listed pair, identity on levels not in any pair.
pub fn pauli_on_pairs(kind: PauliKind, pairs: &[(usize, usize)], n: usize) -> Result<CMatrix> {
    let mut used = vec![false; n];
    for &(a, b) in pairs {
        for i in [a, b] {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, dim: n });
            }
            if used[i] {
                return Err(Error::InvalidPartition(format!(
                    "level {i} appears in more than one pair"
                )));
            }
            used[i] = true;
        }
    }
    let mut m = linalg::zeros(n);
    for (i, u) in used.iter().enumerate() {
        if !u {
            m[(i, i)] = linalg::ONE;
        }
    }
    let s = kind.matrix();
    for &(a, b) in pairs {
        let idx = [a, b];
        for r in 0..2 {
            for c in 0..2 {
                m[(idx[r], idx[c])] = s[r][c];
            }
        }
    }
    Ok(m)
}

/// `rho -> (1-eta) rho + eta K rho K^dag` with `K` a Pauli acting on each
/// listed pair simultaneously.
pub fn block_pauli(params: &BlockPauliParams, dim: HilbertDim) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&params.eta) {
        return Err(Error::OutOfRange(format!("eta = {} not in [0,1]", params.eta)));
    }
    let n = dim.d_trunc();
    let k1 = pauli_on_pairs(params.kind, &params.pairs, n)?;
    let mut kraus = Vec::with_capacity(2);
    if params.eta < 1.0 {
        kraus.push(Operator::identity(n).scale((1.0 - params.eta).sqrt()));
    }
    if params.eta > 0.0 {
        kraus.push(Operator::from(k1.scale(params.eta.sqrt())));
    }
    Ok(KrausChannel {
        kraus,
        dim: n,
        label: format!("block-pauli-{}(eta={})", params.kind, params.eta),
    })
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Photon-loss channel on `n` levels:
/// `<m-l|K_l|m> = sqrt(C(m,l)) (1-gamma)^((m-l)/2) gamma^(l/2)`.
pub fn amplitude_damping_kraus(gamma: f64, n: usize) -> Result<Vec<Operator>> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::OutOfRange(format!("gamma = {gamma} not in [0,1)")));
    }
    let max_loss = if gamma == 0.0 { 1 } else { n };
    let mut kraus = Vec::with_capacity(max_loss);
    for l in 0..max_loss {
        let mut k = linalg::zeros(n);
        for m in l..n {
            let ln_c = ln_factorial(m) - ln_factorial(l) - ln_factorial(m - l);
            let mut amp = (0.5 * ln_c).exp() * (1.0 - gamma).powf(0.5 * (m - l) as f64);
            if l > 0 {
                amp *= gamma.powf(0.5 * l as f64);
            }
            k[(m - l, m)] = C64::new(amp, 0.0);
        }
        kraus.push(Operator::from(k));
    }
    Ok(kraus)
}

pub fn amplitude_damping(gamma: f64, dim: HilbertDim) -> Result<KrausChannel> {
    let kraus = amplitude_damping_kraus(gamma, dim.d_trunc())?;
    Ok(KrausChannel {
        kraus,
        dim: dim.d_trunc(),
        label: format!("amplitude-damping(gamma={gamma})"),
    })
}

/// Qubit relaxation followed by pure dephasing over a duration `t`
/// (all times in the same unit). `t1` and `tphi` may be infinite.
pub fn qubit_noise(t: f64, t1: f64, tphi: f64) -> Result<KrausChannel> {
    if !(t >= 0.0) || !(t1 > 0.0) || !(tphi > 0.0) {
        return Err(Error::OutOfRange(format!(
            "need t >= 0, T1 > 0, Tphi > 0 (got t={t}, T1={t1}, Tphi={tphi})"
        )));
    }
    let gamma = 1.0 - (-t / t1).exp();
    let coherence = (-t / tphi).exp();
    let p_keep = 0.5 * (1.0 + coherence);
    let z = |re: f64| C64::new(re, 0.0);

    let mut damping = vec![CMatrix::from_row_slice(
        2,
        2,
        &[z(1.0), z(0.0), z(0.0), z((1.0 - gamma).sqrt())],
    )];
    if gamma > 0.0 {
        damping.push(CMatrix::from_row_slice(
            2,
            2,
            &[z(0.0), z(gamma.sqrt()), z(0.0), z(0.0)],
        ));
    }
    let mut dephasing = vec![linalg::identity(2).scale(p_keep.sqrt())];
    if p_keep < 1.0 {
        dephasing.push(CMatrix::from_row_slice(
            2,
            2,
            &[z(1.0), z(0.0), z(0.0), z(-1.0)],
        )
        .scale((1.0 - p_keep).sqrt()));
    }
    let mut kraus = Vec::new();
    for dp in &dephasing {
        for dm in &damping {
            kraus.push(Operator::from(dp * dm));
        }
    }
    Ok(KrausChannel {
        kraus,
        dim: 2,
        label: format!("qubit-noise(t={t}, T1={t1}, Tphi={tphi})"),
    })
}

/// Random CPTP map of the given Kraus rank: Gaussian operators `G_i`
/// normalised as `K_i = G_i S^{-1/2}` with `S = sum G_i^dag G_i`.
pub fn random_channel<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Result<KrausChannel> {
    if n == 0 || rank == 0 {
        return Err(Error::InvalidDimension(format!("n={n}, rank={rank}")));
    }
    let gs: Vec<CMatrix> = (0..rank)
        .map(|_| {
            CMatrix::from_fn(n, n, |_, _| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            })
        })
        .collect();
    let mut s = linalg::zeros(n);
    for g in &gs {
        s += g.adjoint() * g;
    }
    let inv_root = linalg::psd_pinv(&linalg::psd_sqrt(&s), 0.0).pinv;
    let kraus = gs.iter().map(|g| Operator::from(g * &inv_root)).collect();
    KrausChannel::new(kraus, format!("random[rank {rank}]"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{coherent_state, fock_state, number_operator, StateVector};

    fn qd(d: usize) -> HilbertDim {
        HilbertDim::qudit(d).unwrap()
    }

    fn uniform(d: usize) -> StateVector {
        StateVector::from_real(&vec![1.0; d]).unwrap()
    }

    #[test]
    fn identity_channel_valid() {
        let ch = make_channel(vec![Operator::identity(4)]).unwrap();
        assert_eq!(ch.rank(), 1);
        let rho = uniform(4).density();
        let out = ch.apply(&rho).unwrap();
        assert!(linalg::max_abs_diff(out.matrix(), rho.matrix()) < 1e-15);
    }

    #[test]
    fn half_identity_rejected() {
        let err = make_channel(vec![Operator::identity(2).scale(0.5f64.sqrt())]).unwrap_err();
        match err {
            Error::NotTracePreserving { deviation } => assert!((deviation - 0.5).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn block_pauli_pair_is_valid() {
        let k1 = pauli_on_pairs(PauliKind::X, &[(0, 2), (1, 3)], 4).unwrap();
        let eta: f64 = 0.37;
        let ch = make_channel(vec![
            Operator::identity(4).scale((1.0 - eta).sqrt()),
            Operator::from(k1.scale(eta.sqrt())),
        ])
        .unwrap();
        assert!(ch.tp_deviation() < 1e-12);
    }

    #[test]
    fn full_dephasing_kills_coherence() {
        let p = BlockPartition::new(vec![vec![0], vec![1], vec![2], vec![3]], 4).unwrap();
        let ch = block_dephasing(&p, qd(4)).unwrap();
        let out = ch.apply(&uniform(4).density()).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let want = if r == c { 0.25 } else { 0.0 };
                assert!((out.matrix()[(r, c)] - C64::new(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn block_dephasing_e0_on_uniform_probe() {
        let p = BlockPartition::new(vec![vec![0], vec![1, 2, 3]], 4).unwrap();
        let ch = block_dephasing(&p, qd(4)).unwrap();
        let out = ch.apply(&uniform(4).density()).unwrap();
        // oracle: (1/4)|0><0| + (3/4)|u><u|, u = (|1>+|2>+|3>)/sqrt(3)
        let u = StateVector::from_real(&[0.0, 1.0, 1.0, 1.0]).unwrap();
        let zero = fock_state(0, qd(4)).unwrap();
        let want = zero.density().into_inner().scale(0.25) + u.density().into_inner().scale(0.75);
        assert!(linalg::max_abs_diff(out.matrix(), &want) < 1e-15);
    }

    #[test]
    fn single_block_is_identity() {
        let p = BlockPartition::new(vec![vec![0, 1, 2, 3]], 4).unwrap();
        let ch = block_dephasing(&p, qd(4)).unwrap();
        assert!(channel_difference(&ch, &KrausChannel::identity(4)).unwrap() < 1e-15);
    }

    #[test]
    fn invalid_partitions() {
        assert!(BlockPartition::new(vec![vec![0, 1], vec![1, 2]], 3).is_err());
        assert!(BlockPartition::new(vec![vec![0, 1]], 3).is_err());
        assert!(BlockPartition::new(vec![vec![0, 1, 2, 3]], 3).is_err());
    }

    #[test]
    fn block_dephasing_idempotent() {
        let p = BlockPartition::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        let ch = block_dephasing(&p, qd(4)).unwrap();
        let twice = compose(&ch, &ch).unwrap();
        assert!(channel_difference(&ch, &twice).unwrap() < 1e-12);
    }

    #[test]
    fn dephasing_compose_is_common_refinement() {
        let a = BlockPartition::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        let b = BlockPartition::new(vec![vec![0], vec![1, 2, 3]], 4).unwrap();
        let refined = BlockPartition::new(vec![vec![0], vec![1], vec![2, 3]], 4).unwrap();
        let ab = compose(
            &block_dephasing(&a, qd(4)).unwrap(),
            &block_dephasing(&b, qd(4)).unwrap(),
        )
        .unwrap();
        assert_eq!(ab.rank(), 4);
        let r = block_dephasing(&refined, qd(4)).unwrap();
        assert!(channel_difference(&ab, &r).unwrap() < 1e-9);
    }

    #[test]
    fn block_pauli_zero_eta_is_identity() {
        let ch = block_pauli(&BlockPauliParams::standard(0.0, PauliKind::Y), qd(4)).unwrap();
        assert_eq!(ch.rank(), 1);
        assert!(channel_difference(&ch, &KrausChannel::identity(4)).unwrap() < 1e-15);
    }

    #[test]
    fn block_pauli_x_mapping() {
        let ch = block_pauli(&BlockPauliParams::standard(0.5, PauliKind::X), qd(4)).unwrap();
        let k1 = ch.kraus()[1].matrix().scale(2f64.sqrt());
        let e = |k| fock_state(k, qd(4)).unwrap().into_inner();
        assert!((&k1 * e(0) - e(2)).norm() < 1e-15);
        assert!((&k1 * e(3) - e(1)).norm() < 1e-15);
    }

    #[test]
    fn block_pauli_z_error_branch() {
        let ch = block_pauli(&BlockPauliParams::standard(0.5, PauliKind::Z), qd(4)).unwrap();
        let probe = StateVector::from_real(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        let branch = probe.evolve(&ch.kraus()[1]).unwrap();
        let want = StateVector::from_real(&[1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!((branch.amplitudes() - want.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn block_pauli_mixture_form() {
        for kind in PauliKind::ALL {
            let eta = 0.3;
            let ch = block_pauli(&BlockPauliParams::standard(eta, kind), qd(4)).unwrap();
            let k = pauli_on_pairs(kind, &[(0, 2), (1, 3)], 4).unwrap();
            let rho = StateVector::from_real(&[0.3, -0.2, 0.9, 0.1]).unwrap().density();
            let want = rho.matrix().scale(1.0 - eta) + (&k * rho.matrix() * k.adjoint()).scale(eta);
            assert!(linalg::max_abs_diff(ch.apply(&rho).unwrap().matrix(), &want) < 1e-12);
        }
    }

    #[test]
    fn overlapping_pairs_rejected() {
        let p = BlockPauliParams {
            eta: 0.1,
            kind: PauliKind::X,
            pairs: vec![(0, 1), (1, 2)],
        };
        assert!(block_pauli(&p, qd(4)).is_err());
    }

    #[test]
    fn amplitude_damping_cases() {
        let ch = amplitude_damping(0.0, qd(5)).unwrap();
        assert_eq!(ch.rank(), 1);
        assert!(channel_difference(&ch, &KrausChannel::identity(5)).unwrap() < 1e-15);

        let gamma = 0.23;
        let ch = amplitude_damping(gamma, qd(5)).unwrap();
        assert!(ch.tp_deviation() < 1e-10);
        let out = ch.apply(&fock_state(1, qd(5)).unwrap().density()).unwrap();
        assert!((out.matrix()[(0, 0)].re - gamma).abs() < 1e-14);
        assert!(amplitude_damping(1.0, qd(5)).is_err());
    }

    #[test]
    fn amplitude_damping_shrinks_photon_number() {
        let hd = HilbertDim::new(4, 40).unwrap();
        let gamma = 0.01;
        let ch = amplitude_damping(gamma, hd).unwrap();
        assert!(ch.tp_deviation() < 1e-10);
        let rho = coherent_state(C64::new(1.6, 0.0), hd).unwrap().density();
        let nop = Operator::from(number_operator(40));
        let before = rho.expectation(&nop);
        let after = ch.apply(&rho).unwrap().expectation(&nop);
        assert!((after - (1.0 - gamma) * before).abs() < 1e-8);
    }

    #[test]
    fn damping_composition() {
        let hd = qd(6);
        let (g1, g2) = (0.1, 0.25);
        let ab = compose(
            &amplitude_damping(g1, hd).unwrap(),
            &amplitude_damping(g2, hd).unwrap(),
        )
        .unwrap();
        assert_eq!(ab.rank(), 36);
        assert!(ab.tp_deviation() < 1e-9);
        let direct = amplitude_damping(1.0 - (1.0 - g1) * (1.0 - g2), hd).unwrap();
        assert!(channel_difference(&ab, &direct).unwrap() < 1e-9);
    }

    #[test]
    fn compose_with_identity() {
        let ch = block_pauli(&BlockPauliParams::standard(0.4, PauliKind::Y), qd(4)).unwrap();
        let c = compose(&KrausChannel::identity(4), &ch).unwrap();
        assert!(channel_difference(&c, &ch).unwrap() < 1e-15);
        assert!(compose(&KrausChannel::identity(3), &ch).is_err());
    }

    #[test]
    fn qubit_noise_values() {
        let ch = qubit_noise(0.0, 30.0, 120.0).unwrap();
        assert_eq!(ch.rank(), 1);
        assert!(channel_difference(&ch, &KrausChannel::identity(2)).unwrap() < 1e-15);

        let ch = qubit_noise(30.0, 30.0, f64::INFINITY).unwrap();
        let excited = StateVector::from_real(&[0.0, 1.0]).unwrap().density();
        let p1 = ch.apply(&excited).unwrap().matrix()[(1, 1)].re;
        assert!((p1 - (-1f64).exp()).abs() < 1e-14);

        let ch = qubit_noise(1.0, 30.0, 120.0).unwrap();
        assert!(ch.tp_deviation() < 1e-10);
        let plus = StateVector::from_real(&[1.0, 1.0]).unwrap().density();
        let out = ch.apply(&plus).unwrap();
        let gamma = 1.0 - out.matrix()[(1, 1)].re / 0.5;
        assert!((gamma - 0.0328).abs() < 5e-5);
        // coherence = sqrt(1-gamma) * dephasing factor
        let deph = out.matrix()[(0, 1)].re / 0.5 / (1.0 - gamma).sqrt();
        assert!((deph - 0.99170).abs() < 5e-6);
        assert!(qubit_noise(-1.0, 30.0, 120.0).is_err());
        assert!(qubit_noise(1.0, 0.0, 120.0).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let ch = block_pauli(&BlockPauliParams::standard(0.3, PauliKind::Y), qd(4)).unwrap();
        let text = serde_json::to_string(&ch.to_json()).unwrap();
        assert!(text.starts_with("{\"label\":"));
        let back: ChannelJson = serde_json::from_str(&text).unwrap();
        assert_eq!(KrausChannel::from_json(&back).unwrap(), ch);
        let bad = r#"{"label":"x","dim":1,"kraus":[[[1,0]]],"extra":1}"#;
        assert!(serde_json::from_str::<ChannelJson>(bad).is_err());
    }
}

//! Built-in discrimination experiments: symmetric displacements,
//! block-dephasing pairs and triples, and the block-Pauli set.

use std::f64::consts::SQRT_2;

use crate::channels::{block_dephasing, block_pauli, BlockPartition, BlockPauliParams, KrausChannel, PauliKind};
use crate::discrimination::{
    build_symmetric_povm, evaluate_povm, heralded_povm, symmetric_amplitude, symmetric_states,
    uniform_priors, DiscriminationReport, PovmSet,
};
use crate::error::{Error, Result};
use crate::hilbert::{displacement_operator, fock_state, HilbertDim, Operator, StateVector};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::noisesim::ExperimentPlan;

/// Default oscillator truncation for displacement experiments.
pub const DISPLACEMENT_TRUNCATION: usize = 40;

/// A set of operations, a probe and a heralded POVM.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub name: String,
    pub channels: Vec<KrausChannel>,
    pub probe: StateVector,
    pub povm: PovmSet,
}

impl Experiment {
    /// Heralds the POVM against the channel outputs before storing it.
    pub fn new(
        name: impl Into<String>,
        channels: Vec<KrausChannel>,
        probe: StateVector,
        povm: &PovmSet,
    ) -> Result<Self> {
        let povm = heralded_povm(povm, &channels, &probe)?;
        Ok(Self {
            name: name.into(),
            channels,
            probe,
            povm,
        })
    }

    pub fn num_operations(&self) -> usize {
        self.channels.len()
    }

    pub fn dim(&self) -> usize {
        self.probe.dim()
    }

    /// Born-rule report under uniform priors.
    pub fn ideal_report(&self) -> Result<DiscriminationReport> {
        evaluate_povm(
            &self.povm,
            &self.channels,
            &self.probe,
            &uniform_priors(self.num_operations()),
        )
    }

    pub fn plan(&self, shots: usize, seed: u64) -> Result<ExperimentPlan> {
        ExperimentPlan::compile(self.probe.clone(), &self.channels, &self.povm, shots, seed)
    }
}

/// `D(|alpha| e^{2 pi i k / N})` for `k = 0..N`.
pub fn displacement_channels(alpha_mag: f64, count: usize, dim: HilbertDim) -> Result<Vec<KrausChannel>> {
    (0..count)
        .map(|k| {
            let u = displacement_operator(symmetric_amplitude(alpha_mag, k, count), dim)?;
            KrausChannel::unitary(u, format!("D{k}"))
        })
        .collect()
}

/// `N` phase-symmetric displacements probed with vacuum and read out with
/// the optimal symmetric POVM.
pub fn displacement_ud(alpha_mag: f64, count: usize, truncation: usize) -> Result<Experiment> {
    let dim = HilbertDim::new(2, truncation)?;
    let channels = displacement_channels(alpha_mag, count, dim)?;
    let povm = build_symmetric_povm(&symmetric_states(alpha_mag, count, dim)?)?;
    Experiment::new(
        format!("displacement_ud[N={count}, |alpha|={alpha_mag}]"),
        channels,
        fock_state(0, dim)?,
        &povm,
    )
}

/// Partitions used for the block-dephasing experiments.
pub fn block_dephasing_partitions(d: usize) -> Result<Vec<BlockPartition>> {
    let blocks: Vec<Vec<Vec<usize>>> = match d {
        3 => vec![vec![vec![0, 1], vec![2]], vec![vec![0], vec![1, 2]]],
        4 => vec![
            vec![vec![0], vec![1, 2, 3]],
            vec![vec![0, 1], vec![2, 3]],
            vec![vec![0, 1, 2], vec![3]],
        ],
        _ => {
            return Err(Error::InvalidDimension(format!(
                "block-dephasing experiments exist for d = 3 and d = 4, got {d}"
            )))
        }
    };
    blocks.into_iter().map(|b| BlockPartition::new(b, d)).collect()
}

fn difference_projector(d: usize, i: usize, norm: f64) -> Operator {
    let mut v = CVector::zeros(d);
    v[i] = C64::new(1.0, 0.0);
    v[i + 1] = C64::new(-1.0, 0.0);
    Operator::from(linalg::outer(&v, &v).scale(1.0 / norm))
}

/// Measurement for the block-dephasing sets:
/// `E_k ∝ (|k> - |k+1>)(<k| - <k+1|)` for neighbouring levels, normalised by
/// 3 for `d = 3` and `2 + sqrt 2` for `d = 4`.
pub fn block_dephasing_povm(d: usize) -> Result<PovmSet> {
    let norm = match d {
        3 => 3.0,
        4 => 2.0 + SQRT_2,
        _ => {
            return Err(Error::InvalidDimension(format!(
                "block-dephasing experiments exist for d = 3 and d = 4, got {d}"
            )))
        }
    };
    PovmSet::from_effects((0..d - 1).map(|i| difference_projector(d, i, norm)).collect(), None)
}

/// Block-dephasing pair (`d = 3`) or triple (`d = 4`) probed with the
/// uniform superposition.
pub fn block_dephasing_ud(d: usize) -> Result<Experiment> {
    let dim = HilbertDim::qudit(d)?;
    let channels = block_dephasing_partitions(d)?
        .iter()
        .map(|p| block_dephasing(p, dim))
        .collect::<Result<Vec<_>>>()?;
    let probe = StateVector::from_real(&vec![1.0; d])?;
    Experiment::new(format!("block_dephasing_ud[d={d}]"), channels, probe, &block_dephasing_povm(d)?)
}

/// Measurement for the block-Pauli set on the probe `(|0> + |3>)/sqrt 2`:
/// projectors onto `(|0> - |3>)`, `(|1> + |2>)` and `(|1> - |2>)`, halved,
/// heralding Z, X and Y.
pub fn block_pauli_povm() -> Result<PovmSet> {
    let proj = |a: usize, b: usize, sign: f64| {
        let mut v = CVector::zeros(4);
        v[a] = C64::new(1.0, 0.0);
        v[b] = C64::new(sign, 0.0);
        Operator::from(linalg::outer(&v, &v).scale(0.5))
    };
    PovmSet::from_effects(vec![proj(0, 3, -1.0), proj(1, 2, 1.0), proj(1, 2, -1.0)], None)
}

/// Block-Pauli X, Y and Z with error rate `eta`.
pub fn block_pauli_ud(eta: f64) -> Result<Experiment> {
    let dim = HilbertDim::qudit(4)?;
    let channels = PauliKind::ALL
        .iter()
        .map(|&k| block_pauli(&BlockPauliParams::standard(eta, k), dim))
        .collect::<Result<Vec<_>>>()?;
    let probe = StateVector::from_real(&[1.0, 0.0, 0.0, 1.0])?;
    Experiment::new(format!("block_pauli_ud[eta={eta}]"), channels, probe, &block_pauli_povm()?)
}

/// True when every matrix of `a` matches a distinct matrix of `b` within
/// `tol`, in any order.
pub fn effects_match_unordered(a: &[CMatrix], b: &[CMatrix], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|x| {
        match (0..b.len()).find(|&j| !used[j] && linalg::max_abs_diff(x, &b[j]) <= tol) {
            Some(j) => {
                used[j] = true;
                true
            }
            None => false,
        }
    })
}

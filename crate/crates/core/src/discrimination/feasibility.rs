use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Operator, StateVector};
use crate::linalg::{self, CMatrix, CVector, C64};

use super::povm::{PovmJson, PovmSet};
use super::report::output_states;
use super::symmetric::max_common_scale;

/// Eigenvalues at or below this fraction of the trace are outside the
/// support.
pub const SUPPORT_TOL: f64 = 1e-9;

/// Eigenvalue threshold on summed projectors when forming spans.
const SPAN_TOL: f64 = 1e-9;

/// Orthonormal eigenvectors of `rho` whose eigenvalue exceeds
/// `tol * Tr(rho)`.
pub fn support(rho: &DensityMatrix, tol: f64) -> Vec<CVector> {
    let (values, vectors) = linalg::eigh(rho.matrix());
    let cut = tol * rho.trace();
    values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > cut)
        .map(|(k, _)| vectors.column(k).into_owned())
        .collect()
}

/// Support structure of the output states `rho_n = E_n(|psi_p><psi_p|)`.
#[derive(Clone, Debug)]
pub struct SupportAnalysis {
    dim: usize,
    s: Vec<CVector>,
    s_n: Vec<Vec<CVector>>,
    complements: Vec<CMatrix>,
    feasible: Vec<bool>,
    candidate: Option<PovmSet>,
    p_con: f64,
}

impl SupportAnalysis {
    /// Orthonormal basis of the union of all output supports.
    pub fn s(&self) -> &[CVector] {
        &self.s
    }

    /// `s_n()[n]` spans the supports of every output except `rho_n`.
    pub fn s_n(&self) -> &[Vec<CVector>] {
        &self.s_n
    }

    /// Projector onto the part of `S` orthogonal to `S_n`.
    pub fn complements(&self) -> &[CMatrix] {
        &self.complements
    }

    pub fn feasible(&self) -> &[bool] {
        &self.feasible
    }

    pub fn all_feasible(&self) -> bool {
        self.feasible.iter().all(|&f| f)
    }

    /// Common-scale POVM built from the complements; present only when every
    /// operation is feasible.
    pub fn candidate(&self) -> Option<&PovmSet> {
        self.candidate.as_ref()
    }

    /// Conclusive probability of the candidate under uniform priors, zero
    /// when there is none.
    pub fn p_con(&self) -> f64 {
        self.p_con
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn to_json(&self) -> FeasibilityJson {
        FeasibilityJson {
            feasible: self.feasible.clone(),
            support_dim: self.s.len(),
            other_support_dims: self.s_n.iter().map(Vec::len).collect(),
            p_con: self.p_con,
            povm: self.candidate.as_ref().map(PovmSet::to_json),
        }
    }
}

/// Feasibility report wire format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilityJson {
    pub feasible: Vec<bool>,
    pub support_dim: usize,
    pub other_support_dims: Vec<usize>,
    pub p_con: f64,
    pub povm: Option<PovmJson>,
}

fn check_dims(channels: &[KrausChannel], n: usize) -> Result<()> {
    if channels.is_empty() {
        return Err(Error::InvalidState("no channels".into()));
    }
    for c in channels {
        if c.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: c.dim(),
            });
        }
    }
    Ok(())
}

/// Support criterion for UD of `channels` with a pure probe: operation `n`
/// is discriminable iff `dim S > dim S_n`.
pub fn ud_feasibility(channels: &[KrausChannel], probe: &StateVector) -> Result<SupportAnalysis> {
    let n = probe.dim();
    check_dims(channels, n)?;
    let outputs = output_states(channels, probe)?;
    let supports: Vec<Vec<CVector>> = outputs.iter().map(|r| support(r, SUPPORT_TOL)).collect();
    let all: Vec<&[CVector]> = supports.iter().map(Vec::as_slice).collect();
    let s = linalg::span_basis(&all, n, SPAN_TOL);
    let proj_s = linalg::projector(&s, n);

    let mut s_n = Vec::with_capacity(channels.len());
    let mut complements = Vec::with_capacity(channels.len());
    let mut feasible = Vec::with_capacity(channels.len());
    for k in 0..channels.len() {
        let others: Vec<&[CVector]> = all
            .iter()
            .enumerate()
            .filter(|(m, _)| *m != k)
            .map(|(_, b)| *b)
            .collect();
        let basis = linalg::span_basis(&others, n, SPAN_TOL);
        let diff = &proj_s - linalg::projector(&basis, n);
        let (values, vectors) = linalg::eigh(&diff);
        let comp: Vec<CVector> = values
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0.5)
            .map(|(j, _)| vectors.column(j).into_owned())
            .collect();
        feasible.push(s.len() > basis.len() && !comp.is_empty());
        complements.push(linalg::projector(&comp, n));
        s_n.push(basis);
    }

    let (candidate, p_con) = if feasible.iter().all(|&f| f) {
        let mut m = linalg::zeros(n);
        for c in &complements {
            m += c;
        }
        let p = max_common_scale(&m);
        let effects = complements
            .iter()
            .map(|c| Operator::from(c.scale(p)))
            .collect();
        let povm = PovmSet::from_effects(effects, Some(p))?;
        let p_con = povm
            .effects()
            .iter()
            .zip(&outputs)
            .map(|(e, rho)| rho.expectation(e))
            .sum::<f64>()
            / channels.len() as f64;
        (Some(povm), p_con)
    } else {
        (None, 0.0)
    };

    Ok(SupportAnalysis {
        dim: n,
        s,
        s_n,
        complements,
        feasible,
        candidate,
        p_con,
    })
}

/// A pure probe in `d` dimensions as `d - 1` hyperspherical angles for the
/// moduli and `d - 1` relative phases; amplitude 0 is real and nonnegative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeParams {
    pub angles: Vec<f64>,
    pub phases: Vec<f64>,
}

pub fn probe_from_params(params: &ProbeParams) -> Result<StateVector> {
    if params.angles.len() != params.phases.len() || params.angles.is_empty() {
        return Err(Error::InvalidState(format!(
            "{} angles and {} phases",
            params.angles.len(),
            params.phases.len()
        )));
    }
    let d = params.angles.len() + 1;
    let mut amps = CVector::zeros(d);
    let mut radius = 1.0;
    for k in 0..d {
        let r = if k + 1 < d {
            radius * params.angles[k].cos()
        } else {
            radius
        };
        if k + 1 < d {
            radius *= params.angles[k].sin();
        }
        amps[k] = if k == 0 {
            C64::new(r, 0.0)
        } else {
            C64::from_polar(r, params.phases[k - 1])
        };
    }
    StateVector::normalized(amps)
}

/// Inverse of [`probe_from_params`] after removing the global phase.
pub fn params_from_probe(probe: &StateVector) -> ProbeParams {
    let a = probe.amplitudes();
    let d = a.len();
    let phase = if a[0].norm() > 0.0 { a[0].arg() } else { 0.0 };
    let rot = C64::from_polar(1.0, -phase);
    let amps: Vec<C64> = a.iter().map(|x| x * rot).collect();
    let mut angles = Vec::with_capacity(d - 1);
    for k in 0..d - 1 {
        let tail: f64 = amps[k + 1..].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        angles.push(tail.atan2(amps[k].norm()));
    }
    let phases = amps[1..].iter().map(|x| x.arg()).collect();
    ProbeParams { angles, phases }
}

/// Options for [`probe_search_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSearch {
    pub trials: usize,
    pub seed: u64,
    /// Hill-climbing steps applied to the best sampled probe.
    pub refine_steps: usize,
    /// Initial standard deviation of the parameter perturbations.
    pub step: f64,
}

impl Default for ProbeSearch {
    fn default() -> Self {
        Self {
            trials: 1000,
            seed: 0,
            refine_steps: 200,
            step: 0.2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProbeSearchResult {
    pub probe: StateVector,
    pub params: ProbeParams,
    pub analysis: SupportAnalysis,
    /// How many of the sampled probes were feasible for every operation.
    pub feasible_trials: usize,
}

impl ProbeSearchResult {
    pub fn p_con(&self) -> f64 {
        self.analysis.p_con()
    }
}

/// Haar-random probe search with default refinement.
pub fn probe_search(
    channels: &[KrausChannel],
    trials: usize,
    seed: u64,
) -> Result<Option<ProbeSearchResult>> {
    probe_search_with(
        channels,
        &ProbeSearch {
            trials,
            seed,
            ..ProbeSearch::default()
        },
    )
}

/// Sample `trials` Haar-random probes, keep the feasible one with the
/// largest candidate conclusive probability, then hill-climb in parameter
/// space. `None` when no sampled probe is feasible.
pub fn probe_search_with(
    channels: &[KrausChannel],
    options: &ProbeSearch,
) -> Result<Option<ProbeSearchResult>> {
    if options.trials == 0 {
        return Err(Error::OutOfRange("trials must be at least 1".into()));
    }
    let n = channels
        .first()
        .ok_or_else(|| Error::InvalidState("no channels".into()))?
        .dim();
    check_dims(channels, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let samples: Vec<StateVector> = (0..options.trials)
        .map(|_| haar_probe(&mut rng, n))
        .collect::<Result<_>>()?;

    let mut best: Option<(StateVector, SupportAnalysis)> = None;
    let mut feasible_trials = 0;
    for probe in samples {
        let analysis = ud_feasibility(channels, &probe)?;
        if !analysis.all_feasible() {
            continue;
        }
        feasible_trials += 1;
        if best.as_ref().map_or(true, |(_, b)| analysis.p_con() > b.p_con()) {
            best = Some((probe, analysis));
        }
    }
    let Some((probe, analysis)) = best else {
        return Ok(None);
    };

    let mut params = params_from_probe(&probe);
    let mut current = (probe, analysis);
    let mut step = options.step;
    for _ in 0..options.refine_steps {
        let trial = ProbeParams {
            angles: params
                .angles
                .iter()
                .map(|a| a + step * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            phases: params
                .phases
                .iter()
                .map(|p| p + step * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        };
        let probe = probe_from_params(&trial)?;
        let analysis = ud_feasibility(channels, &probe)?;
        if analysis.all_feasible() && analysis.p_con() > current.1.p_con() {
            params = trial;
            current = (probe, analysis);
        } else {
            step *= 0.97;
        }
    }
    let (probe, analysis) = current;
    Ok(Some(ProbeSearchResult {
        params: params_from_probe(&probe),
        probe,
        analysis,
        feasible_trials,
    }))
}

fn haar_probe(rng: &mut ChaCha8Rng, n: usize) -> Result<StateVector> {
    let v = CVector::from_fn(n, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    StateVector::normalized(v)
}

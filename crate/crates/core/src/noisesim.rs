//! Prepare / operate / measure pipeline under cavity and ancilla
//! decoherence, propagated exactly or sampled shot by shot.
//!
//! Each joint unitary of a [`BinaryTreeCircuit`] is wrapped in two noise
//! half-steps of `gate_time / 2`. Measured layers then idle for
//! `measure_time` before the ancilla is projected, the observed bit passes
//! through the readout confusion matrix and the ancilla is reset ideally.
//! Layers whose first block is the identity are skipped; layers whose
//! `|1>` branch vanishes are applied without measuring. Leaf states are
//! tracked per observed bit string, so confusion errors steer later layers
//! exactly as they would in hardware.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{qubit_noise, KrausChannel};
use crate::dilation::{compile_tree, povm_to_kraus, BinaryTreeCircuit, CircuitJson};
use crate::discrimination::{uniform_priors, DiscriminationReport, Outcome, PovmSet};
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, StateVector};
use crate::linalg::{self, CMatrix, C64};
use crate::metrics;
use crate::serial::{self, Pair};

const PASSIVE_TOL: f64 = 1e-10;
const CONFUSION_TOL: f64 = 1e-12;
/// Largest system dimension for which process fidelities are computed.
pub const MAX_PROCESS_DIM: usize = 8;

/// Which decoherence sources are active. Cavity and ancilla decoherence are
/// on by default, readout confusion off: the measured assignment
/// infidelity is mostly ancilla decay during readout, already modelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseToggles {
    pub cavity_decoherence: bool,
    pub qubit_decoherence: bool,
    pub readout_error: bool,
}

impl Default for NoiseToggles {
    fn default() -> Self {
        Self {
            cavity_decoherence: true,
            qubit_decoherence: true,
            readout_error: false,
        }
    }
}

impl NoiseToggles {
    pub const NONE: Self = Self {
        cavity_decoherence: false,
        qubit_decoherence: false,
        readout_error: false,
    };

    pub const SYSTEM_ONLY: Self = Self {
        cavity_decoherence: true,
        qubit_decoherence: false,
        readout_error: false,
    };
}

/// Device decoherence parameters. Times in microseconds, `chi_qs` in MHz
/// (recorded only). Missing fields take their default values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    #[serde(rename = "cavity_T1")]
    pub cavity_t1: f64,
    #[serde(rename = "qubit_T1")]
    pub qubit_t1: f64,
    #[serde(rename = "qubit_Tphi")]
    pub qubit_tphi: f64,
    pub chi_qs: f64,
    pub gate_time: f64,
    pub measure_time: f64,
    /// `readout_confusion[true][observed]`
    pub readout_confusion: [[f64; 2]; 2],
    pub toggles: NoiseToggles,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            cavity_t1: 143.0,
            qubit_t1: 30.0,
            qubit_tphi: 120.0,
            chi_qs: 1.90,
            gate_time: 2.0,
            measure_time: 0.32,
            readout_confusion: [[0.999, 0.001], [0.011, 0.989]],
            toggles: NoiseToggles::default(),
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default().with_toggles(NoiseToggles::NONE)
    }

    pub fn with_toggles(mut self, toggles: NoiseToggles) -> Self {
        self.toggles = toggles;
        self
    }

    pub fn with_gate_time(mut self, gate_time: f64) -> Self {
        self.gate_time = gate_time;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let times = [
            ("cavity_T1", self.cavity_t1),
            ("qubit_T1", self.qubit_t1),
            ("qubit_Tphi", self.qubit_tphi),
            ("gate_time", self.gate_time),
            ("measure_time", self.measure_time),
        ];
        for (name, t) in times {
            if !(t > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {t}")));
            }
        }
        for (k, row) in self.readout_confusion.iter().enumerate() {
            let sum = row[0] + row[1];
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > CONFUSION_TOL {
                return Err(Error::Config(format!(
                    "readout_confusion row {k} is not a probability vector"
                )));
            }
        }
        Ok(())
    }
}

/// Cavity amplitude damping as `rho'_{mn} = sum_l c_{m,l} c_{n,l} rho_{m+l,n+l}`
/// with `c_{m,l} = sqrt(C(m+l, l)) (1-g)^{m/2} g^{l/2}`.
#[derive(Clone, Debug)]
struct Damping {
    coeff: Vec<Vec<f64>>,
}

impl Damping {
    fn new(gamma: f64, n: usize) -> Self {
        let coeff = (0..n)
            .map(|m| {
                (0..n - m)
                    .map(|l| {
                        let ln_binom = ln_factorial(m + l) - ln_factorial(m) - ln_factorial(l);
                        let ln = 0.5 * ln_binom
                            + 0.5 * m as f64 * (1.0 - gamma).ln()
                            + if l == 0 { 0.0 } else { 0.5 * l as f64 * gamma.ln() };
                        ln.exp()
                    })
                    .collect()
            })
            .collect();
        Self { coeff }
    }

    fn apply(&self, x: &CMatrix) -> CMatrix {
        let n = x.nrows();
        CMatrix::from_fn(n, n, |m, k| {
            let (cm, ck) = (&self.coeff[m], &self.coeff[k]);
            (0..n - m.max(k))
                .map(|l| x[(m + l, k + l)] * (cm[l] * ck[l]))
                .sum()
        })
    }
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|j| (j as f64).ln()).sum()
}

/// Noise over one time interval on `ancilla (x) system`.
#[derive(Clone, Debug)]
struct NoiseStep {
    cavity: Option<Damping>,
    ancilla: Option<Vec<[[C64; 2]; 2]>>,
}

impl NoiseStep {
    fn new(noise: &NoiseModel, t: f64, n: usize) -> Result<Self> {
        let cavity = noise
            .toggles
            .cavity_decoherence
            .then(|| Damping::new(1.0 - (-t / noise.cavity_t1).exp(), n));
        let ancilla = if noise.toggles.qubit_decoherence {
            let ch = qubit_noise(t, noise.qubit_t1, noise.qubit_tphi)?;
            Some(
                ch.kraus()
                    .iter()
                    .map(|k| {
                        let m = k.matrix();
                        [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
                    })
                    .collect(),
            )
        } else {
            None
        };
        Ok(Self { cavity, ancilla })
    }

    fn apply_system(&self, x: &CMatrix) -> CMatrix {
        match &self.cavity {
            Some(d) => d.apply(x),
            None => x.clone(),
        }
    }

    fn apply_joint(&self, j: &CMatrix, n: usize) -> CMatrix {
        let mut blocks = [[linalg::zeros(n), linalg::zeros(n)], [linalg::zeros(n), linalg::zeros(n)]];
        for (a, row) in blocks.iter_mut().enumerate() {
            for (b, blk) in row.iter_mut().enumerate() {
                *blk = self.apply_system(&linalg::block(j, n, a, b));
            }
        }
        if let Some(kraus) = &self.ancilla {
            let old = blocks.clone();
            for (a, row) in blocks.iter_mut().enumerate() {
                for (b, blk) in row.iter_mut().enumerate() {
                    let mut acc = linalg::zeros(n);
                    for k in kraus {
                        for c in 0..2 {
                            for d in 0..2 {
                                let w = k[a][c] * k[b][d].conj();
                                if w.norm() > 0.0 {
                                    acc += &old[c][d] * w;
                                }
                            }
                        }
                    }
                    *blk = acc;
                }
            }
        }
        let mut out = CMatrix::zeros(2 * n, 2 * n);
        for (a, row) in blocks.iter().enumerate() {
            for (b, blk) in row.iter().enumerate() {
                out.view_mut((a * n, b * n), (n, n)).copy_from(blk);
            }
        }
        out
    }
}

/// Precomputed noise for one system dimension.
struct Simulator<'a> {
    noise: &'a NoiseModel,
    n: usize,
    half_gate: NoiseStep,
    measure: NoiseStep,
}

impl<'a> Simulator<'a> {
    fn new(noise: &'a NoiseModel, n: usize) -> Result<Self> {
        noise.validate()?;
        Ok(Self {
            noise,
            n,
            half_gate: NoiseStep::new(noise, 0.5 * noise.gate_time, n)?,
            measure: NoiseStep::new(noise, noise.measure_time, n)?,
        })
    }

    /// Probe preparation: an ideal unitary from vacuum between two noise
    /// half-steps. Vacuum is invariant under the first half-step and the
    /// ancilla idles in `|0>`, so only cavity damping of the prepared state
    /// remains. A vacuum probe needs no gate.
    fn prepare(&self, probe: &StateVector) -> CMatrix {
        let rho = probe.density().into_inner();
        if probe.amplitudes()[0].norm() > 1.0 - 1e-12 {
            rho
        } else {
            self.half_gate.apply_system(&rho)
        }
    }

    /// Unnormalised system states indexed by the observed leaf bits.
    fn run(&self, circuit: &BinaryTreeCircuit, input: CMatrix) -> Vec<CMatrix> {
        let n = self.n;
        let id = linalg::identity(n);
        let mut current = vec![input];
        for l in 0..circuit.depth() {
            let mut next = Vec::with_capacity(2 * current.len());
            for (p, sigma) in current.into_iter().enumerate() {
                let zero = linalg::zeros(n);
                if linalg::max_abs(&sigma) == 0.0 {
                    next.push(sigma);
                    next.push(zero);
                    continue;
                }
                let u = circuit.unitary(l, p);
                let top = linalg::block(u, n, 0, 0);
                if linalg::max_abs_diff(&top, &id) < PASSIVE_TOL {
                    next.push(sigma);
                    next.push(zero);
                    continue;
                }
                let measured = linalg::max_abs(&linalg::block(u, n, 1, 0)) >= PASSIVE_TOL;
                let mut j = CMatrix::zeros(2 * n, 2 * n);
                j.view_mut((0, 0), (n, n)).copy_from(&sigma);
                j = self.half_gate.apply_joint(&j, n);
                j = u * j * u.adjoint();
                j = self.half_gate.apply_joint(&j, n);
                if !measured {
                    next.push(linalg::block(&j, n, 0, 0) + linalg::block(&j, n, 1, 1));
                    next.push(zero);
                    continue;
                }
                j = self.measure.apply_joint(&j, n);
                let r0 = linalg::block(&j, n, 0, 0);
                let r1 = linalg::block(&j, n, 1, 1);
                if self.noise.toggles.readout_error {
                    let c = &self.noise.readout_confusion;
                    next.push(&r0 * C64::from(c[0][0]) + &r1 * C64::from(c[1][0]));
                    next.push(&r0 * C64::from(c[0][1]) + &r1 * C64::from(c[1][1]));
                } else {
                    next.push(r0);
                    next.push(r1);
                }
            }
            current = next;
        }
        current
    }
}

/// Everything needed to run one discrimination experiment: probe, one
/// compiled circuit per operation and the compiled POVM. POVM leaves follow
/// the Kraus order `E_I, E_0, ..., E_{N-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    probe: StateVector,
    channel_circuits: Vec<BinaryTreeCircuit>,
    povm_circuit: BinaryTreeCircuit,
    shots: usize,
    seed: u64,
}

impl ExperimentPlan {
    pub fn new(
        probe: StateVector,
        channel_circuits: Vec<BinaryTreeCircuit>,
        povm_circuit: BinaryTreeCircuit,
        shots: usize,
        seed: u64,
    ) -> Result<Self> {
        if shots == 0 {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        if channel_circuits.is_empty() {
            return Err(Error::Config("no operations".into()));
        }
        let n = probe.dim();
        for c in channel_circuits.iter().chain(std::iter::once(&povm_circuit)) {
            if c.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: c.dim(),
                });
            }
        }
        let heralds = povm_circuit
            .outcome_map()
            .iter()
            .filter(|e| e.kraus.is_some())
            .count();
        if heralds != channel_circuits.len() + 1 {
            return Err(Error::InvalidPovm(format!(
                "POVM circuit has {heralds} elements for {} operations",
                channel_circuits.len()
            )));
        }
        Ok(Self {
            probe,
            channel_circuits,
            povm_circuit,
            shots,
            seed,
        })
    }

    /// Compile channels and POVM into circuits.
    pub fn compile(
        probe: StateVector,
        channels: &[KrausChannel],
        povm: &PovmSet,
        shots: usize,
        seed: u64,
    ) -> Result<Self> {
        let circuits = channels.iter().map(compile_tree).collect::<Result<Vec<_>>>()?;
        let povm_circuit = compile_tree(&povm_to_kraus(povm)?)?;
        Self::new(probe, circuits, povm_circuit, shots, seed)
    }

    pub fn probe(&self) -> &StateVector {
        &self.probe
    }

    pub fn channel_circuits(&self) -> &[BinaryTreeCircuit] {
        &self.channel_circuits
    }

    pub fn povm_circuit(&self) -> &BinaryTreeCircuit {
        &self.povm_circuit
    }

    pub fn shots(&self) -> usize {
        self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_shots(mut self, shots: usize) -> Result<Self> {
        if shots == 0 {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        self.shots = shots;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn num_operations(&self) -> usize {
        self.channel_circuits.len()
    }

    pub fn dim(&self) -> usize {
        self.probe.dim()
    }

    /// Label of every POVM leaf; padding leaves count as inconclusive.
    pub fn leaf_labels(&self) -> Vec<Outcome> {
        self.povm_circuit
            .outcome_map()
            .iter()
            .map(|e| match e.kraus {
                Some(k) if k > 0 => Outcome::Label(k - 1),
                _ => Outcome::Inconclusive,
            })
            .collect()
    }

    pub fn to_json(&self) -> PlanJson {
        PlanJson {
            probe: serial::vector_to_pairs(self.probe.amplitudes()),
            channel_circuits: self.channel_circuits.iter().map(|c| c.to_json()).collect(),
            povm_circuit: self.povm_circuit.to_json(),
            shots: self.shots,
            seed: self.seed,
        }
    }

    pub fn from_json(json: &PlanJson) -> Result<Self> {
        let probe = StateVector::new(serial::vector_from_pairs(&json.probe))?;
        let circuits = json
            .channel_circuits
            .iter()
            .map(BinaryTreeCircuit::from_json)
            .collect::<Result<Vec<_>>>()?;
        let povm = BinaryTreeCircuit::from_json(&json.povm_circuit)?;
        Self::new(probe, circuits, povm, json.shots, json.seed)
    }
}

/// Plan wire format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanJson {
    pub probe: Vec<Pair>,
    pub channel_circuits: Vec<CircuitJson>,
    pub povm_circuit: CircuitJson,
    pub shots: usize,
    pub seed: u64,
}

/// A plan and a noise model in one document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationJson {
    pub plan: PlanJson,
    pub noise: NoiseModel,
}

/// Joint probabilities `weights[c][m]` of channel leaf `c` and POVM leaf
/// `m` for one operation.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafDistribution {
    pub weights: Vec<Vec<f64>>,
}

impl LeafDistribution {
    pub fn total(&self) -> f64 {
        self.weights.iter().flatten().sum()
    }
}

/// Exact joint leaf distributions, one per operation.
pub fn leaf_distributions(plan: &ExperimentPlan, noise: &NoiseModel) -> Result<Vec<LeafDistribution>> {
    let sim = Simulator::new(noise, plan.dim())?;
    let rho0 = sim.prepare(plan.probe());
    plan.channel_circuits
        .iter()
        .map(|circuit| {
            let weights = sim
                .run(circuit, rho0.clone())
                .into_iter()
                .map(|sigma| {
                    if linalg::max_abs(&sigma) == 0.0 {
                        vec![0.0; plan.povm_circuit.num_leaves()]
                    } else {
                        sim.run(&plan.povm_circuit, sigma)
                            .iter()
                            .map(|t| linalg::trace_re(t).max(0.0))
                            .collect()
                    }
                })
                .collect();
            Ok(LeafDistribution { weights })
        })
        .collect()
}

fn report_from_counts(rows: Vec<Vec<f64>>) -> Result<DiscriminationReport> {
    let n = rows.len();
    DiscriminationReport::from_conditional(rows, uniform_priors(n))
}

fn label_column(label: Outcome, n: usize) -> usize {
    match label {
        Outcome::Inconclusive => n,
        Outcome::Label(m) => m,
    }
}

/// Exact outcome probabilities of the noisy pipeline.
pub fn propagate_exact(plan: &ExperimentPlan, noise: &NoiseModel) -> Result<DiscriminationReport> {
    let labels = plan.leaf_labels();
    let n = plan.num_operations();
    let rows = leaf_distributions(plan, noise)?
        .into_iter()
        .map(|dist| {
            let total = dist.total();
            let mut row = vec![0.0; n + 1];
            for w in &dist.weights {
                for (m, p) in w.iter().enumerate() {
                    row[label_column(labels[m], n)] += p / total;
                }
            }
            row
        })
        .collect();
    report_from_counts(rows)
}

/// One sampled run of the pipeline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotRecord {
    pub shot: usize,
    pub channel_bits: String,
    pub povm_bits: String,
    pub label: Outcome,
}

/// Sampled records per operation with their empirical report.
#[derive(Clone, Debug)]
pub struct ShotRun {
    pub records: Vec<Vec<ShotRecord>>,
    pub report: DiscriminationReport,
}

/// CSV with header `shot,channel_bits,povm_bits,label`.
pub fn shots_csv(records: &[ShotRecord]) -> String {
    let mut out = String::from("shot,channel_bits,povm_bits,label\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.shot, r.channel_bits, r.povm_bits, r.label
        ));
    }
    out
}

/// Sample `plan.shots()` runs per operation from the exact leaf
/// distribution. Operation `k` draws from stream `k` of a ChaCha8
/// generator seeded with `plan.seed()`, so results do not depend on how
/// operations are scheduled.
pub fn sample_shots(plan: &ExperimentPlan, noise: &NoiseModel) -> Result<ShotRun> {
    let labels = plan.leaf_labels();
    let n = plan.num_operations();
    let dists = leaf_distributions(plan, noise)?;
    let c_depth = |k: usize| plan.channel_circuits[k].depth();
    let p_depth = plan.povm_circuit.depth();

    let mut records = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for (k, dist) in dists.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed());
        rng.set_stream(k as u64);
        let flat: Vec<(usize, usize, f64)> = dist
            .weights
            .iter()
            .enumerate()
            .flat_map(|(c, w)| w.iter().enumerate().map(move |(m, &p)| (c, m, p)))
            .collect();
        let total = dist.total();
        let last = flat
            .iter()
            .rposition(|e| e.2 > 0.0)
            .ok_or_else(|| Error::InvalidState("no outcome has positive probability".into()))?;
        let mut counts = vec![0usize; n + 1];
        let mut recs = Vec::with_capacity(plan.shots());
        for shot in 0..plan.shots() {
            let u: f64 = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = last;
            for (i, e) in flat.iter().enumerate() {
                acc += e.2;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            let (c, m, _) = flat[pick];
            let label = labels[m];
            counts[label_column(label, n)] += 1;
            let cd = c_depth(k);
            recs.push(ShotRecord {
                shot,
                channel_bits: format!("{c:0cd$b}"),
                povm_bits: format!("{m:0p_depth$b}"),
                label,
            });
        }
        rows.push(
            counts
                .iter()
                .map(|&c| c as f64 / plan.shots() as f64)
                .collect(),
        );
        records.push(recs);
    }
    Ok(ShotRun {
        records,
        report: report_from_counts(rows)?,
    })
}

/// Probe density matrix after noisy preparation.
pub fn prepared_state(probe: &StateVector, noise: &NoiseModel) -> Result<DensityMatrix> {
    let sim = Simulator::new(noise, probe.dim())?;
    Ok(DensityMatrix::from_matrix_unchecked(sim.prepare(probe)))
}

/// `1 - Tr(rho_prepared |psi><psi|)`
pub fn state_prep_infidelity(probe: &StateVector, noise: &NoiseModel) -> Result<f64> {
    let rho = prepared_state(probe, noise)?;
    Ok(1.0 - metrics::state_fidelity(&rho, &probe.density())?)
}

/// The noisy circuit as a linear map, summed over all observed outcomes.
pub fn noisy_channel_map<'a>(
    circuit: &'a BinaryTreeCircuit,
    noise: &'a NoiseModel,
) -> Result<impl Fn(&CMatrix) -> CMatrix + 'a> {
    let sim = Simulator::new(noise, circuit.dim())?;
    let n = circuit.dim();
    Ok(move |x: &CMatrix| {
        sim.run(circuit, x.clone())
            .iter()
            .fold(linalg::zeros(n), |acc, s| acc + s)
    })
}

/// Process infidelity of the noisy circuit against its noiseless self.
pub fn process_infidelity(circuit: &BinaryTreeCircuit, noise: &NoiseModel) -> Result<f64> {
    let n = circuit.dim();
    let ideal = metrics::chi_from_channel(&circuit.implemented_channel()?);
    let noisy = metrics::chi_matrix(noisy_channel_map(circuit, noise)?, n);
    Ok(1.0 - metrics::process_fidelity(&ideal, &noisy)?)
}

/// One row of an error budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub config: String,
    pub distance: f64,
    pub state_infid: f64,
    /// Per-operation process infidelities; empty above [`MAX_PROCESS_DIM`].
    pub proc_infid: Vec<f64>,
}

/// Distances under full noise, cavity-only noise and no noise, with the
/// share attributed to each source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub gate_time: f64,
    pub rows: Vec<BudgetRow>,
    /// `D_full - D_system_only`
    pub ancilla_contribution: f64,
    /// `D_system_only - D_none`
    pub system_contribution: f64,
    /// `D_none`; gates are exact in this model
    pub control_contribution: f64,
}

impl ErrorBudget {
    pub fn row(&self, config: &str) -> Option<&BudgetRow> {
        self.rows.iter().find(|r| r.config == config)
    }

    pub fn distance(&self, config: &str) -> f64 {
        self.row(config).map_or(f64::NAN, |r| r.distance)
    }
}

/// Error budget of a plan relative to its ideal report.
pub fn error_budget(
    plan: &ExperimentPlan,
    noise: &NoiseModel,
    ideal_report: &DiscriminationReport,
) -> Result<ErrorBudget> {
    let configs = [
        ("full", noise.toggles),
        ("system_only", NoiseToggles::SYSTEM_ONLY),
        ("none", NoiseToggles::NONE),
    ];
    let mut rows = Vec::with_capacity(configs.len());
    for (name, toggles) in configs {
        let model = noise.clone().with_toggles(toggles);
        let report = propagate_exact(plan, &model)?;
        let proc_infid = if plan.dim() <= MAX_PROCESS_DIM {
            plan.channel_circuits()
                .iter()
                .map(|c| process_infidelity(c, &model))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        rows.push(BudgetRow {
            config: name.into(),
            distance: metrics::distance_d(&report, ideal_report)?,
            state_infid: state_prep_infidelity(plan.probe(), &model)?,
            proc_infid,
        });
    }
    let (full, sys, none) = (rows[0].distance, rows[1].distance, rows[2].distance);
    Ok(ErrorBudget {
        gate_time: noise.gate_time,
        rows,
        ancilla_contribution: full - sys,
        system_contribution: sys - none,
        control_contribution: none,
    })
}

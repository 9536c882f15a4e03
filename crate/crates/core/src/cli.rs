//! Command-line front end. Every command renders its results into an
//! [`Outputs`] value first, so the same code path serves the binary and
//! the tests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::channels::{block_dephasing, BlockPartition, ChannelJson, KrausChannel};
use crate::dilation::{compile_tree, povm_to_kraus, CircuitJson};
use crate::discrimination::{
    probe_search, symmetric_ud_bound, ud_feasibility, DiscriminationReport, FeasibilityJson,
    PovmJson, PovmSet, ReportJson,
};
use crate::error::{Error, Result};
use crate::experiments::{
    block_dephasing_ud, block_pauli_ud, displacement_ud, Experiment, DISPLACEMENT_TRUNCATION,
};
use crate::hilbert::{fock_state, HilbertDim, StateVector};
use crate::linalg::C64;
use crate::noisesim::{
    error_budget, propagate_exact, sample_shots, shots_csv, ErrorBudget, ExperimentPlan,
    NoiseModel, SimulationJson,
};
use crate::serial::{csv_num, vector_from_pairs, vector_to_pairs, Pair};

#[derive(Debug, Parser)]
#[command(
    name = "udsim",
    version,
    about = "Unambiguous discrimination of quantum operations: bounds, simulation and circuit compilation"
)]
pub struct Cli {
    /// Experiment configuration (JSON)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the configured shot count
    #[arg(long, global = true)]
    pub shots: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal conclusive probability for N symmetric displacements
    Bound {
        /// Number of operations
        #[arg(short = 'n', long = "count", default_value_t = 4)]
        count: usize,
        /// Comma list or `start:stop:step`
        #[arg(long, default_value = "0.4:2.0:0.2")]
        alpha: String,
    },
    /// Ideal, exact noisy and sampled reports for a configured experiment
    Run {
        /// Run a compiled plan document instead of a configuration
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Distances under full, system-only and no noise
    Budget {
        /// Also sweep these gate times (µs)
        #[arg(long, value_delimiter = ',')]
        gate_times: Vec<f64>,
    },
    /// Support criterion and candidate POVM
    Feasibility {
        /// JSON array of channels; defaults to the configured experiment
        #[arg(long)]
        channels: Option<PathBuf>,
        /// `vacuum`, `uniform`, `pauli` or comma-separated real amplitudes
        #[arg(long)]
        probe: Option<String>,
        /// Search for a feasible probe instead of using a given one
        #[arg(long)]
        search: bool,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Compile a channel or POVM into a circuit, or a configured experiment
    /// into a plan document
    Compile {
        #[arg(long, conflicts_with = "povm")]
        channel: Option<PathBuf>,
        #[arg(long)]
        povm: Option<PathBuf>,
    },
}

/// Files to write (relative to the output directory) and text for stdout.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
    pub stdout: String,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DisplacementUd,
    BlockDephasingUd,
    BlockPauliUd,
    Custom,
}

/// Experiment parameters; which fields apply depends on the experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partitions: Option<Vec<Vec<Vec<usize>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<ChannelJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub povm: Option<PovmJson>,
}

/// A named probe, real amplitudes or `[re, im]` pairs. Amplitudes are
/// normalised.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbeSpec {
    Named(String),
    Real(Vec<f64>),
    Complex(Vec<Pair>),
}

impl ProbeSpec {
    /// Parse the command-line form: a name or comma-separated reals.
    pub fn parse(s: &str) -> Result<Self> {
        if s.contains(',') || s.parse::<f64>().is_ok() {
            let v = s
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Config(format!("probe: {e}")))?;
            Ok(Self::Real(v))
        } else {
            Ok(Self::Named(s.to_string()))
        }
    }

    pub fn resolve(&self, n: usize) -> Result<StateVector> {
        let amps = match self {
            Self::Named(name) => match name.as_str() {
                "vacuum" => return fock_state(0, HilbertDim::new(n.max(2), n)?),
                "uniform" => vec![C64::new(1.0, 0.0); n],
                "pauli" if n == 4 => return StateVector::from_real(&[1.0, 0.0, 0.0, 1.0]),
                "pauli" => {
                    return Err(Error::Config(format!("probe: `pauli` needs dimension 4, got {n}")))
                }
                other => return Err(Error::Config(format!("probe: unknown probe `{other}`"))),
            },
            Self::Real(v) => v.iter().map(|&x| C64::new(x, 0.0)).collect(),
            Self::Complex(p) => vector_from_pairs(p).iter().copied().collect(),
        };
        if amps.len() != n {
            return Err(Error::Config(format!(
                "probe: {} amplitudes for dimension {n}",
                amps.len()
            )));
        }
        StateVector::normalized(crate::linalg::CVector::from_vec(amps))
            .map_err(|e| Error::Config(format!("probe: {e}")))
    }
}

/// Experiment configuration file. Unknown fields are rejected. Without a
/// `noise` section `run` is noiseless and `budget` uses the default device
/// model; `"noise": {}` selects the default device model explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        config.check_parameters()?;
        if let Some(noise) = &config.noise {
            noise
                .validate()
                .map_err(|e| Error::Config(format!("noise: {e}")))?;
        }
        if config.shots == Some(0) {
            return Err(Error::Config("shots: must be at least 1".into()));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    fn check_parameters(&self) -> Result<()> {
        let p = &self.parameters;
        let present = [
            ("N", p.n.is_some()),
            ("alpha", p.alpha.is_some()),
            ("truncation", p.truncation.is_some()),
            ("d", p.d.is_some()),
            ("partitions", p.partitions.is_some()),
            ("eta", p.eta.is_some()),
            ("channels", p.channels.is_some()),
            ("povm", p.povm.is_some()),
        ];
        let allowed: &[&str] = match self.experiment {
            ExperimentKind::DisplacementUd => &["N", "alpha", "truncation", "povm"],
            ExperimentKind::BlockDephasingUd => &["d", "partitions", "povm"],
            ExperimentKind::BlockPauliUd => &["eta", "povm"],
            ExperimentKind::Custom => &["channels", "povm"],
        };
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                return Err(Error::Config(format!(
                    "parameters.{name}: not used by {}",
                    self.kind_name()
                )));
            }
        }
        if self.experiment == ExperimentKind::Custom {
            if p.channels.is_none() {
                return Err(Error::Config("parameters.channels: required for custom".into()));
            }
            if self.probe.is_none() {
                return Err(Error::Config("probe: required for custom".into()));
            }
        }
        if matches!(&p.alpha, Some(a) if a.is_empty()) {
            return Err(Error::Config("parameters.alpha: empty grid".into()));
        }
        if matches!(&p.eta, Some(e) if e.is_empty()) {
            return Err(Error::Config("parameters.eta: empty list".into()));
        }
        Ok(())
    }

    fn kind_name(&self) -> &'static str {
        match self.experiment {
            ExperimentKind::DisplacementUd => "displacement_ud",
            ExperimentKind::BlockDephasingUd => "block_dephasing_ud",
            ExperimentKind::BlockPauliUd => "block_pauli_ud",
            ExperimentKind::Custom => "custom",
        }
    }

    /// One tagged experiment per parameter point.
    pub fn experiments(&self) -> Result<Vec<(String, Experiment)>> {
        let p = &self.parameters;
        let mut out = Vec::new();
        match self.experiment {
            ExperimentKind::DisplacementUd => {
                let count = p.n.unwrap_or(4);
                let truncation = p.truncation.unwrap_or(DISPLACEMENT_TRUNCATION);
                for &alpha in p.alpha.as_deref().unwrap_or(&[1.6]) {
                    let e = displacement_ud(alpha, count, truncation).map_err(field("alpha"))?;
                    out.push((format!("displacement_N{count}_alpha{alpha}"), e));
                }
            }
            ExperimentKind::BlockDephasingUd => {
                let d = p.d.unwrap_or(4);
                let e = match &p.partitions {
                    None => block_dephasing_ud(d).map_err(field("d"))?,
                    Some(parts) => {
                        let dim = HilbertDim::qudit(d).map_err(field("d"))?;
                        let channels = parts
                            .iter()
                            .map(|b| block_dephasing(&BlockPartition::new(b.clone(), d)?, dim))
                            .collect::<Result<Vec<_>>>()
                            .map_err(field("partitions"))?;
                        let probe = StateVector::from_real(&vec![1.0; d])?;
                        support_experiment("block_dephasing", channels, probe)?
                    }
                };
                out.push((format!("block_dephasing_d{d}"), e));
            }
            ExperimentKind::BlockPauliUd => {
                for &eta in p.eta.as_deref().unwrap_or(&[0.5]) {
                    let e = block_pauli_ud(eta).map_err(field("eta"))?;
                    out.push((format!("block_pauli_eta{eta}"), e));
                }
            }
            ExperimentKind::Custom => {
                let channels = p
                    .channels
                    .iter()
                    .flatten()
                    .map(KrausChannel::from_json)
                    .collect::<Result<Vec<_>>>()
                    .map_err(field("channels"))?;
                let n = channels.first().map_or(0, KrausChannel::dim);
                let probe = self.probe.as_ref().expect("checked").resolve(n)?;
                out.push(("custom".into(), custom_experiment(channels, probe, p.povm.as_ref())?));
            }
        }
        if self.experiment != ExperimentKind::Custom {
            let overridden = self.probe.is_some() || p.povm.is_some();
            if overridden {
                for (_, e) in out.iter_mut() {
                    let probe = match &self.probe {
                        Some(spec) => spec.resolve(e.dim())?,
                        None => e.probe.clone(),
                    };
                    *e = custom_experiment(e.channels.clone(), probe, p.povm.as_ref())?;
                }
            }
        }
        Ok(out)
    }
}

fn field(name: &'static str) -> impl Fn(Error) -> Error {
    move |e| Error::Config(format!("parameters.{name}: {e}"))
}

fn support_experiment(name: &str, channels: Vec<KrausChannel>, probe: StateVector) -> Result<Experiment> {
    let analysis = ud_feasibility(&channels, &probe)?;
    let povm = analysis.candidate().cloned().ok_or_else(|| {
        Error::Config(format!(
            "{name}: operations {:?} cannot be unambiguously discriminated with this probe",
            infeasible_ops(&analysis.to_json())
        ))
    })?;
    Experiment::new(name, channels, probe, &povm)
}

fn custom_experiment(
    channels: Vec<KrausChannel>,
    probe: StateVector,
    povm: Option<&PovmJson>,
) -> Result<Experiment> {
    match povm {
        Some(json) => {
            let povm = PovmSet::from_json(json).map_err(|e| Error::Config(format!("parameters.povm: {e}")))?;
            Experiment::new("custom", channels, probe, &povm)
        }
        None => support_experiment("custom", channels, probe),
    }
}

fn infeasible_ops(json: &FeasibilityJson) -> Vec<usize> {
    json.feasible
        .iter()
        .enumerate()
        .filter(|(_, &f)| !f)
        .map(|(k, _)| k)
        .collect()
}

/// `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::Config(format!("alpha grid `{s}`: {why}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [one] => one.split(',').map(num).collect::<Result<Vec<_>>>()?,
        [start, stop, step] => {
            let (a, b, h) = (num(start)?, num(stop)?, num(step)?);
            if !(h > 0.0) || b < a {
                return Err(bad("need step > 0 and stop >= start"));
            }
            let count = ((b - a) / h + 1e-9).floor() as usize + 1;
            (0..count).map(|k| a + k as f64 * h).collect()
        }
        _ => return Err(bad("expected a list or start:stop:step")),
    };
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(bad("values must be finite and nonnegative"));
    }
    Ok(grid)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub alpha: f64,
    pub p_con_bound: f64,
    pub c_sq: Vec<f64>,
}

pub fn bound_rows(count: usize, grid: &[f64]) -> Result<Vec<BoundRow>> {
    grid.iter()
        .map(|&alpha| {
            let b = symmetric_ud_bound(alpha, count)?;
            Ok(BoundRow {
                alpha,
                p_con_bound: b.bound,
                c_sq: b.c_sq,
            })
        })
        .collect()
}

/// Header `alpha,p_con_bound,c0,..,c{N-1}`; `c_r` columns hold `|c_r|^2`.
pub fn bound_csv(count: usize, rows: &[BoundRow]) -> String {
    let mut out = String::from("alpha,p_con_bound");
    for r in 0..count {
        out.push_str(&format!(",c{r}"));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&csv_num(row.alpha));
        out.push(',');
        out.push_str(&csv_num(row.p_con_bound));
        for c in &row.c_sq {
            out.push(',');
            out.push_str(&csv_num(*c));
        }
        out.push('\n');
    }
    out
}

/// Result of one `run` point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunJson {
    pub experiment: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasible: Option<Vec<bool>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ideal: Option<ReportJson>,
    pub exact: ReportJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampled: Option<ReportJson>,
    pub shots: usize,
    pub seed: u64,
}

fn to_json_text<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn summary_line(tag: &str, source: &str, r: &DiscriminationReport) -> String {
    format!(
        "{tag},{source},{},{},{}\n",
        csv_num(r.p_con()),
        csv_num(r.p_inc()),
        csv_num(r.p_err())
    )
}

const SUMMARY_HEADER: &str = "experiment,source,p_con,p_inc,p_err\n";

struct RunPoint<'a> {
    tag: &'a str,
    plan: ExperimentPlan,
    noise: &'a NoiseModel,
    sample: bool,
    ideal: Option<DiscriminationReport>,
    feasible: Option<Vec<bool>>,
}

fn run_point(point: RunPoint<'_>, out: &mut Outputs, summary: &mut String) -> Result<RunJson> {
    let tag = point.tag;
    let exact = propagate_exact(&point.plan, point.noise)?;
    out.files
        .push((format!("{tag}_conditional.csv"), exact.conditional_csv()));
    if let Some(ideal) = &point.ideal {
        summary.push_str(&summary_line(tag, "ideal", ideal));
    }
    summary.push_str(&summary_line(tag, "exact", &exact));
    let mut sampled = None;
    if point.sample {
        let run = sample_shots(&point.plan, point.noise)?;
        for (k, recs) in run.records.iter().enumerate() {
            out.files.push((format!("{tag}_shots_op{k}.csv"), shots_csv(recs)));
        }
        out.files.push((
            format!("{tag}_sampled_conditional.csv"),
            run.report.conditional_csv(),
        ));
        summary.push_str(&summary_line(tag, "sampled", &run.report));
        sampled = Some(run.report.to_json());
    }
    let json = RunJson {
        experiment: tag.to_string(),
        feasible: point.feasible,
        ideal: point.ideal.as_ref().map(DiscriminationReport::to_json),
        exact: exact.to_json(),
        sampled,
        shots: point.plan.shots(),
        seed: point.plan.seed(),
    };
    out.files.push((format!("{tag}_report.json"), to_json_text(&json)?));
    Ok(json)
}

fn require_config(cli: &Cli, command: &str) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config(format!("--config is required for `{command}`")))?;
    ExperimentConfig::load(path)
}

fn cmd_bound(cli: &Cli, count: usize, alpha: &str) -> Result<Outputs> {
    let rows = bound_rows(count, &parse_grid(alpha)?)?;
    let text = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => bound_csv(count, &rows),
        Format::Json => to_json_text(&rows)?,
    };
    let ext = if cli.format == Some(Format::Json) { "json" } else { "csv" };
    Ok(Outputs {
        files: vec![(format!("bound_N{count}.{ext}"), text.clone())],
        stdout: text,
        warnings: Vec::new(),
    })
}

fn cmd_run(cli: &Cli, plan: Option<&Path>) -> Result<Outputs> {
    let mut out = Outputs::default();
    let mut summary = String::from(SUMMARY_HEADER);
    let mut results = Vec::new();
    if let Some(path) = plan {
        let text = fs::read_to_string(path)?;
        let doc: SimulationJson =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("plan: {e}")))?;
        doc.noise.validate()?;
        let mut plan = ExperimentPlan::from_json(&doc.plan)?;
        if let Some(seed) = cli.seed {
            plan = plan.with_seed(seed);
        }
        if let Some(shots) = cli.shots {
            plan = plan.with_shots(shots)?;
        }
        let ideal = propagate_exact(&plan, &NoiseModel::noiseless())?;
        results.push(run_point(
            RunPoint {
                tag: "plan",
                plan,
                noise: &doc.noise,
                sample: cli.shots.is_some(),
                ideal: Some(ideal),
                feasible: None,
            },
            &mut out,
            &mut summary,
        )?);
    } else {
        let config = require_config(cli, "run")?;
        let noise = config.noise.clone().unwrap_or_else(NoiseModel::noiseless);
        let shots = cli.shots.or(config.shots);
        let seed = cli.seed.unwrap_or(config.seed);
        for (tag, exp) in config.experiments()? {
            let feasibility = ud_feasibility(&exp.channels, &exp.probe)?.to_json();
            let bad = infeasible_ops(&feasibility);
            if !bad.is_empty() {
                out.warnings.push(format!(
                    "{tag}: operations {bad:?} fail the support criterion with this probe"
                ));
            }
            results.push(run_point(
                RunPoint {
                    tag: &tag,
                    plan: exp.plan(shots.unwrap_or(1), seed)?,
                    noise: &noise,
                    sample: shots.is_some(),
                    ideal: Some(exp.ideal_report()?),
                    feasible: Some(feasibility.feasible),
                },
                &mut out,
                &mut summary,
            )?);
        }
    }
    out.files.push(("summary.csv".into(), summary.clone()));
    out.stdout = match cli.format.unwrap_or(Format::Json) {
        Format::Json => to_json_text(&results)?,
        Format::Csv => summary,
    };
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct BudgetJson<'a> {
    experiment: &'a str,
    budget: &'a ErrorBudget,
    sweep: &'a [ErrorBudget],
}

fn budget_csv(budget: &ErrorBudget, pauli: bool) -> String {
    let mut out = String::from("config,distance,state_infid,proc_infid_X,proc_infid_Y,proc_infid_Z\n");
    for row in &budget.rows {
        let procs: Vec<String> = if pauli && row.proc_infid.len() == 3 {
            row.proc_infid.iter().map(|&x| csv_num(x)).collect()
        } else {
            vec![String::new(); 3]
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.config,
            csv_num(row.distance),
            csv_num(row.state_infid),
            procs.join(",")
        ));
    }
    out
}

fn sweep_csv(sweep: &[ErrorBudget]) -> String {
    let mut out = String::from(
        "gate_time,distance_full,distance_system_only,distance_none,ancilla,system,control\n",
    );
    for b in sweep {
        let cells = [
            b.gate_time,
            b.distance("full"),
            b.distance("system_only"),
            b.distance("none"),
            b.ancilla_contribution,
            b.system_contribution,
            b.control_contribution,
        ];
        let cells: Vec<String> = cells.iter().map(|&x| csv_num(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn cmd_budget(cli: &Cli, gate_times: &[f64]) -> Result<Outputs> {
    let config = require_config(cli, "budget")?;
    let noise = config.noise.clone().unwrap_or_default();
    let pauli = config.experiment == ExperimentKind::BlockPauliUd;
    let format = cli.format.unwrap_or(Format::Csv);
    let mut out = Outputs::default();
    let mut stdout_json = Vec::new();
    let mut stdout_csv =
        String::from("experiment,config,distance,state_infid,proc_infid_X,proc_infid_Y,proc_infid_Z\n");
    for (tag, exp) in config.experiments()? {
        let ideal = exp.ideal_report()?;
        let plan = exp.plan(1, config.seed)?;
        let budget = error_budget(&plan, &noise, &ideal)?;
        let sweep = gate_times
            .iter()
            .map(|&g| error_budget(&plan, &noise.clone().with_gate_time(g), &ideal))
            .collect::<Result<Vec<_>>>()?;
        let table = budget_csv(&budget, pauli);
        for line in table.lines().skip(1) {
            stdout_csv.push_str(&format!("{tag},{line}\n"));
        }
        match format {
            Format::Csv => {
                out.files.push((format!("{tag}_budget.csv"), table));
                if !sweep.is_empty() {
                    out.files.push((format!("{tag}_budget_sweep.csv"), sweep_csv(&sweep)));
                }
            }
            Format::Json => {
                let doc = BudgetJson {
                    experiment: &tag,
                    budget: &budget,
                    sweep: &sweep,
                };
                out.files.push((format!("{tag}_budget.json"), to_json_text(&doc)?));
                stdout_json.push(serde_json::to_value(&doc)?);
            }
        }
    }
    out.stdout = match format {
        Format::Csv => stdout_csv,
        Format::Json => to_json_text(&stdout_json)?,
    };
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibilityOutput {
    pub experiment: String,
    pub probe: Option<Vec<Pair>>,
    pub analysis: Option<FeasibilityJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchSummary {
    pub trials: usize,
    pub seed: u64,
    pub feasible_trials: usize,
}

fn load_channels(path: &Path) -> Result<Vec<KrausChannel>> {
    let text = fs::read_to_string(path)?;
    let json: Vec<ChannelJson> =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("channels: {e}")))?;
    json.iter().map(KrausChannel::from_json).collect()
}

fn cmd_feasibility(
    cli: &Cli,
    channels: Option<&Path>,
    probe: Option<&str>,
    search: bool,
    trials: usize,
) -> Result<Outputs> {
    let mut cases: Vec<(String, Vec<KrausChannel>, Option<StateVector>)> = Vec::new();
    let mut seed = cli.seed.unwrap_or(0);
    match channels {
        Some(path) => {
            let chans = load_channels(path)?;
            let n = chans
                .first()
                .ok_or_else(|| Error::Config("channels: empty list".into()))?
                .dim();
            let p = match probe {
                Some(s) => Some(ProbeSpec::parse(s)?.resolve(n)?),
                None if search => None,
                None => return Err(Error::Config("--probe or --search is required with --channels".into())),
            };
            cases.push(("channels".into(), chans, p));
        }
        None => {
            let config = require_config(cli, "feasibility")?;
            seed = cli.seed.unwrap_or(config.seed);
            for (tag, exp) in config.experiments()? {
                let p = match probe {
                    Some(s) => Some(ProbeSpec::parse(s)?.resolve(exp.dim())?),
                    None => Some(exp.probe.clone()),
                };
                cases.push((tag, exp.channels, p));
            }
        }
    }

    let mut results = Vec::new();
    let mut out = Outputs::default();
    for (tag, chans, p) in cases {
        let res = if search {
            match probe_search(&chans, trials, seed)? {
                Some(found) => FeasibilityOutput {
                    experiment: tag,
                    probe: Some(vector_to_pairs(found.probe.amplitudes())),
                    analysis: Some(found.analysis.to_json()),
                    search: Some(SearchSummary {
                        trials,
                        seed,
                        feasible_trials: found.feasible_trials,
                    }),
                },
                None => {
                    out.warnings
                        .push(format!("{tag}: no feasible probe among {trials} trials"));
                    FeasibilityOutput {
                        experiment: tag,
                        probe: None,
                        analysis: None,
                        search: Some(SearchSummary {
                            trials,
                            seed,
                            feasible_trials: 0,
                        }),
                    }
                }
            }
        } else {
            let p = p.expect("probe resolved above");
            let analysis = ud_feasibility(&chans, &p)?.to_json();
            let bad = infeasible_ops(&analysis);
            if !bad.is_empty() {
                out.warnings
                    .push(format!("{tag}: operations {bad:?} fail the support criterion"));
            }
            FeasibilityOutput {
                experiment: tag,
                probe: Some(vector_to_pairs(p.amplitudes())),
                analysis: Some(analysis),
                search: None,
            }
        };
        results.push(res);
    }

    let text = match cli.format.unwrap_or(Format::Json) {
        Format::Json => to_json_text(&results)?,
        Format::Csv => {
            let mut s = String::from("experiment,operation,feasible,support_dim,other_support_dim,p_con\n");
            for r in &results {
                if let Some(a) = &r.analysis {
                    for (k, f) in a.feasible.iter().enumerate() {
                        s.push_str(&format!(
                            "{},{k},{f},{},{},{}\n",
                            r.experiment,
                            a.support_dim,
                            a.other_support_dims[k],
                            csv_num(a.p_con)
                        ));
                    }
                }
            }
            s
        }
    };
    let ext = if cli.format == Some(Format::Csv) { "csv" } else { "json" };
    out.files.push((format!("feasibility.{ext}"), text.clone()));
    out.stdout = text;
    Ok(out)
}

fn cmd_compile(cli: &Cli, channel: Option<&Path>, povm: Option<&Path>) -> Result<Outputs> {
    if cli.format == Some(Format::Csv) {
        return Err(Error::Config("--format: compile writes JSON only".into()));
    }
    let mut out = Outputs::default();
    let circuit_doc = |name: String, json: CircuitJson, out: &mut Outputs| -> Result<()> {
        let text = to_json_text(&json)?;
        out.files.push((name, text.clone()));
        out.stdout.push_str(&text);
        Ok(())
    };
    if let Some(path) = channel {
        let text = fs::read_to_string(path)?;
        let json: ChannelJson =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("channel: {e}")))?;
        let circuit = compile_tree(&KrausChannel::from_json(&json)?)?;
        circuit_doc("circuit.json".into(), circuit.to_json(), &mut out)?;
    } else if let Some(path) = povm {
        let text = fs::read_to_string(path)?;
        let json: PovmJson =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("povm: {e}")))?;
        let circuit = compile_tree(&povm_to_kraus(&PovmSet::from_json(&json)?)?)?;
        circuit_doc("povm_circuit.json".into(), circuit.to_json(), &mut out)?;
    } else {
        let config = require_config(cli, "compile")?;
        let noise = config.noise.clone().unwrap_or_else(NoiseModel::noiseless);
        let shots = cli.shots.or(config.shots).unwrap_or(1);
        let seed = cli.seed.unwrap_or(config.seed);
        let mut docs = Vec::new();
        for (tag, exp) in config.experiments()? {
            let doc = SimulationJson {
                plan: exp.plan(shots, seed)?.to_json(),
                noise: noise.clone(),
            };
            out.files.push((format!("{tag}_plan.json"), to_json_text(&doc)?));
            docs.push(doc);
        }
        out.stdout = to_json_text(&docs)?;
    }
    Ok(out)
}

/// Run a parsed command without touching the filesystem for output.
pub fn render(cli: &Cli) -> Result<Outputs> {
    match &cli.command {
        Command::Bound { count, alpha } => cmd_bound(cli, *count, alpha),
        Command::Run { plan } => cmd_run(cli, plan.as_deref()),
        Command::Budget { gate_times } => cmd_budget(cli, gate_times),
        Command::Feasibility {
            channels,
            probe,
            search,
            trials,
        } => cmd_feasibility(cli, channels.as_deref(), probe.as_deref(), *search, *trials),
        Command::Compile { channel, povm } => cmd_compile(cli, channel.as_deref(), povm.as_deref()),
    }
}

/// Output directory: `--out`, else the configured `output`, else `out` for
/// `run` and `budget`. Other commands only print unless a directory is given.
fn output_dir(cli: &Cli) -> Option<PathBuf> {
    if let Some(dir) = &cli.out {
        return Some(dir.clone());
    }
    let configured = cli
        .config
        .as_ref()
        .and_then(|p| ExperimentConfig::load(p).ok())
        .and_then(|c| c.output);
    match (&cli.command, configured) {
        (_, Some(dir)) => Some(dir),
        (Command::Run { .. } | Command::Budget { .. }, None) => Some(PathBuf::from("out")),
        _ => None,
    }
}

/// Render, write files and print.
pub fn execute(cli: &Cli) -> Result<()> {
    let outputs = render(cli)?;
    for w in &outputs.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(dir) = output_dir(cli) {
        fs::create_dir_all(&dir)?;
        for (name, text) in &outputs.files {
            fs::write(dir.join(name), text)?;
        }
    }
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(outputs.stdout.as_bytes()).and_then(|()| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("udsim").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0").unwrap(), vec![0.0]);
        assert_eq!(parse_grid("0.4:2.0:0.2").unwrap().len(), 9);
        assert_eq!(parse_grid("1,1.6").unwrap(), vec![1.0, 1.6]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("-1").is_err());
    }

    #[test]
    fn bound_table() {
        let out = render(&cli(&["bound", "-n", "4", "--alpha", "0,1.6"])).unwrap();
        let lines: Vec<&str> = out.stdout.lines().collect();
        assert_eq!(lines[0], "alpha,p_con_bound,c0,c1,c2,c3");
        assert!(lines[1].starts_with("0,0,"));
        assert!(lines[2].starts_with("1.60000000000,0.87678"));
        let six = render(&cli(&["bound", "-n", "6"])).unwrap();
        assert_eq!(six.stdout.lines().count(), 10);
    }

    #[test]
    fn config_rejects_unknown_and_misplaced_fields() {
        let e = ExperimentConfig::from_json_str(r#"{"experiment":"block_pauli_ud","bogus":1}"#).unwrap_err();
        assert!(e.to_string().contains("bogus"));
        let e = ExperimentConfig::from_json_str(
            r#"{"experiment":"block_pauli_ud","parameters":{"alpha":[1.0]}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("parameters.alpha"));
        let e = ExperimentConfig::from_json_str(
            r#"{"experiment":"block_pauli_ud","noise":{"gate_time":-1}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("gate_time"));
        let e = ExperimentConfig::from_json_str(r#"{"experiment":"custom"}"#).unwrap_err();
        assert!(e.to_string().contains("parameters.channels"));
    }

    #[test]
    fn probe_specs() {
        assert_eq!(ProbeSpec::parse("uniform").unwrap(), ProbeSpec::Named("uniform".into()));
        let p = ProbeSpec::parse("1,0,0,1").unwrap().resolve(4).unwrap();
        assert!((p.amplitudes()[3].re - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(ProbeSpec::parse("1,0").unwrap().resolve(4).is_err());
        assert!(ProbeSpec::Named("pauli".into()).resolve(3).is_err());
        let v = ProbeSpec::Named("vacuum".into()).resolve(5).unwrap();
        assert_eq!(v.amplitudes()[0].re, 1.0);
    }

    #[test]
    fn partitions_use_support_candidate() {
        let c = ExperimentConfig::from_json_str(
            r#"{"experiment":"block_dephasing_ud","parameters":{"d":3,"partitions":[[[0,1],[2]],[[0],[1,2]]]}}"#,
        )
        .unwrap();
        let (_, e) = c.experiments().unwrap().remove(0);
        let r = e.ideal_report().unwrap();
        assert!(r.p_err() < 1e-12);
        assert!(r.p_con() >= 2.0 / 9.0 - 1e-12);
    }
}

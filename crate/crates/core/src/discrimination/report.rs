use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, StateVector};
use crate::serial;

use super::povm::PovmSet;

const ROW_TOL: f64 = 1e-9;
const PRIOR_TOL: f64 = 1e-12;
/// Above this many outcomes the heralding assignment is greedy rather than
/// exhaustive.
const EXHAUSTIVE_HERALD_MAX: usize = 8;

/// Measurement outcome: inconclusive or the label of an operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Inconclusive,
    Label(usize),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Inconclusive => f.write_str("I"),
            Outcome::Label(n) => write!(f, "{n}"),
        }
    }
}

/// Conditional probabilities `P(m|n)` with the inconclusive outcome in the
/// last column, plus the prior-weighted totals.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminationReport {
    conditional: Vec<Vec<f64>>,
    priors: Vec<f64>,
    p_con: f64,
    p_inc: f64,
    p_err: f64,
}

impl DiscriminationReport {
    /// `conditional[n]` has `N + 1` entries: outcomes `0..N` then `I`.
    pub fn from_conditional(conditional: Vec<Vec<f64>>, priors: Vec<f64>) -> Result<Self> {
        let n = conditional.len();
        check_priors(&priors, n)?;
        for (k, row) in conditional.iter().enumerate() {
            if row.len() != n + 1 {
                return Err(Error::ShapeMismatch(format!(
                    "row {k} has {} entries, expected {}",
                    row.len(),
                    n + 1
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOL || row.iter().any(|p| !p.is_finite()) {
                return Err(Error::InvalidState(format!("row {k} sums to {sum}")));
            }
        }
        let p_con = (0..n).map(|k| priors[k] * conditional[k][k]).sum();
        let p_inc = (0..n).map(|k| priors[k] * conditional[k][n]).sum();
        let p_err = (0..n)
            .map(|k| {
                let wrong: f64 = (0..n).filter(|&m| m != k).map(|m| conditional[k][m]).sum();
                priors[k] * wrong
            })
            .sum();
        Ok(Self {
            conditional,
            priors,
            p_con,
            p_inc,
            p_err,
        })
    }

    pub fn num_operations(&self) -> usize {
        self.conditional.len()
    }

    pub fn conditional(&self) -> &[Vec<f64>] {
        &self.conditional
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn p_con(&self) -> f64 {
        self.p_con
    }

    pub fn p_inc(&self) -> f64 {
        self.p_inc
    }

    pub fn p_err(&self) -> f64 {
        self.p_err
    }

    /// `P(outcome | operation)`
    pub fn prob(&self, outcome: Outcome, operation: usize) -> f64 {
        let row = &self.conditional[operation];
        match outcome {
            Outcome::Inconclusive => row[row.len() - 1],
            Outcome::Label(m) => row[m],
        }
    }

    pub fn to_json(&self) -> ReportJson {
        ReportJson {
            conditional: self.conditional.clone(),
            p_con: self.p_con,
            p_inc: self.p_inc,
            p_err: self.p_err,
        }
    }

    /// Rows `operation,outcome,probability`, inconclusive written as `I`.
    pub fn conditional_csv(&self) -> String {
        let mut out = String::from("operation,outcome,probability\n");
        let n = self.num_operations();
        for (op, row) in self.conditional.iter().enumerate() {
            for (m, p) in row.iter().enumerate() {
                let outcome = if m == n {
                    Outcome::Inconclusive
                } else {
                    Outcome::Label(m)
                };
                out.push_str(&format!("{op},{outcome},{}\n", serial::csv_num(*p)));
            }
        }
        out
    }
}

/// Report wire format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportJson {
    pub conditional: Vec<Vec<f64>>,
    pub p_con: f64,
    pub p_inc: f64,
    pub p_err: f64,
}

pub fn uniform_priors(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn check_priors(priors: &[f64], n: usize) -> Result<()> {
    if priors.len() != n || n == 0 {
        return Err(Error::InvalidPriors(format!(
            "{} priors for {n} operations",
            priors.len()
        )));
    }
    if priors.iter().any(|q| !(*q >= 0.0) || !q.is_finite()) {
        return Err(Error::InvalidPriors("negative or non-finite prior".into()));
    }
    let sum: f64 = priors.iter().sum();
    if (sum - 1.0).abs() > PRIOR_TOL {
        return Err(Error::InvalidPriors(format!("priors sum to {sum}")));
    }
    Ok(())
}

/// `rho_n = E_n(|psi_p><psi_p|)`
pub fn output_states(channels: &[KrausChannel], probe: &StateVector) -> Result<Vec<DensityMatrix>> {
    let rho = probe.density();
    channels.iter().map(|c| c.apply(&rho)).collect()
}

/// Assignment of effects to operations maximising the summed diagonal of
/// `raw[n][m] = Tr[E_m rho_n]`. Returns `perm` with new effect `k` = old
/// effect `perm[k]`; among equally good assignments the lexicographically
/// first wins, so an already-heralded POVM keeps its order.
pub fn herald_permutation(raw: &[Vec<f64>]) -> Vec<usize> {
    let n = raw.len();
    let mut best: Vec<usize> = (0..n).collect();
    if n > EXHAUSTIVE_HERALD_MAX {
        return greedy_assignment(raw);
    }
    let score = |p: &[usize]| -> f64 { p.iter().enumerate().map(|(k, &m)| raw[k][m]).sum() };
    let mut best_score = score(&best);
    let mut perm = best.clone();
    while next_permutation(&mut perm) {
        let s = score(&perm);
        if s > best_score + 1e-12 {
            best_score = s;
            best.clone_from(&perm);
        }
    }
    best
}

fn greedy_assignment(raw: &[Vec<f64>]) -> Vec<usize> {
    let n = raw.len();
    let mut used = vec![false; n];
    let mut perm = vec![0; n];
    for (k, row) in raw.iter().enumerate() {
        let m = (0..n)
            .filter(|&m| !used[m])
            .max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a)))
            .expect("unused effect remains");
        used[m] = true;
        perm[k] = m;
    }
    perm
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn raw_conditional(povm: &PovmSet, outputs: &[DensityMatrix]) -> Vec<Vec<f64>> {
    outputs
        .iter()
        .map(|rho| povm.effects().iter().map(|e| rho.expectation(e)).collect())
        .collect()
}

fn check_shapes(povm: &PovmSet, channels: &[KrausChannel], probe: &StateVector) -> Result<()> {
    if povm.num_outcomes() != channels.len() {
        return Err(Error::InvalidPovm(format!(
            "{} heralding effects for {} operations",
            povm.num_outcomes(),
            channels.len()
        )));
    }
    for c in channels {
        if c.dim() != probe.dim() || povm.dim() != probe.dim() {
            return Err(Error::DimensionMismatch {
                expected: probe.dim(),
                found: c.dim().max(povm.dim()),
            });
        }
    }
    Ok(())
}

/// The POVM with effects reordered so that effect `n` heralds operation `n`.
pub fn heralded_povm(
    povm: &PovmSet,
    channels: &[KrausChannel],
    probe: &StateVector,
) -> Result<PovmSet> {
    check_shapes(povm, channels, probe)?;
    let outputs = output_states(channels, probe)?;
    povm.permuted(&herald_permutation(&raw_conditional(povm, &outputs)))
}

/// Born-rule report `P(m|n) = Tr[E_m E_n(|psi_p><psi_p|)]` after heralding
/// relabelling.
pub fn evaluate_povm(
    povm: &PovmSet,
    channels: &[KrausChannel],
    probe: &StateVector,
    priors: &[f64],
) -> Result<DiscriminationReport> {
    check_shapes(povm, channels, probe)?;
    check_priors(priors, channels.len())?;
    let outputs = output_states(channels, probe)?;
    let raw = raw_conditional(povm, &outputs);
    let perm = herald_permutation(&raw);
    let conditional = outputs
        .iter()
        .zip(&raw)
        .map(|(rho, row)| {
            let mut r: Vec<f64> = perm.iter().map(|&m| row[m]).collect();
            r.push(rho.expectation(povm.inconclusive()));
            r
        })
        .collect();
    DiscriminationReport::from_conditional(conditional, priors.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Operator;

    #[test]
    fn totals_from_conditional() {
        let r = DiscriminationReport::from_conditional(
            vec![vec![0.5, 0.1, 0.4], vec![0.0, 0.7, 0.3]],
            uniform_priors(2),
        )
        .unwrap();
        assert!((r.p_con() - 0.6).abs() < 1e-15);
        assert!((r.p_inc() - 0.35).abs() < 1e-15);
        assert!((r.p_err() - 0.05).abs() < 1e-15);
        assert_eq!(r.prob(Outcome::Inconclusive, 1), 0.3);
        assert!(DiscriminationReport::from_conditional(vec![vec![0.5, 0.1]], vec![1.0]).is_err());
    }

    #[test]
    fn priors_validated() {
        assert!(check_priors(&[0.5, 0.6], 2).is_err());
        assert!(check_priors(&[0.5], 2).is_err());
        assert!(check_priors(&[-0.5, 1.5], 2).is_err());
        assert!(check_priors(&[0.25, 0.75], 2).is_ok());
    }

    #[test]
    fn permutation_prefers_identity_on_ties() {
        let raw = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        assert_eq!(herald_permutation(&raw), vec![0, 1]);
        let crossed = vec![vec![0.0, 0.3, 0.0], vec![0.0, 0.0, 0.3], vec![0.3, 0.0, 0.0]];
        assert_eq!(herald_permutation(&crossed), vec![1, 2, 0]);
        assert_eq!(greedy_assignment(&crossed), vec![1, 2, 0]);
    }

    #[test]
    fn csv_layout() {
        let r = DiscriminationReport::from_conditional(vec![vec![1.0, 0.0]], vec![1.0]).unwrap();
        assert_eq!(r.conditional_csv(), "operation,outcome,probability\n0,0,1.00000000000\n0,I,0\n");
    }

    #[test]
    fn crossed_povm_is_relabelled() {
        let e0 = StateVector::from_real(&[1.0, 0.0]).unwrap().density().into_inner();
        let e1 = StateVector::from_real(&[0.0, 1.0]).unwrap().density().into_inner();
        let povm = PovmSet::from_effects(vec![Operator::from(e1), Operator::from(e0)], None).unwrap();
        let flip = Operator::from(crate::channels::pauli_on_pairs(
            crate::channels::PauliKind::X,
            &[(0, 1)],
            2,
        )
        .unwrap());
        let channels = vec![
            KrausChannel::identity(2),
            KrausChannel::unitary(flip, "flip").unwrap(),
        ];
        let probe = StateVector::from_real(&[1.0, 0.0]).unwrap();
        let r = evaluate_povm(&povm, &channels, &probe, &uniform_priors(2)).unwrap();
        assert_eq!(r.p_con(), 1.0);
        assert_eq!(r.p_err(), 0.0);
        let h = heralded_povm(&povm, &channels, &probe).unwrap();
        assert_eq!(h.effects()[0], povm.effects()[1]);
    }
}

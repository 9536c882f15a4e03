use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hilbert::{coherent_overlap, coherent_state, HilbertDim, Operator, StateVector};
use crate::linalg::{self, CMatrix, C64};

use super::povm::PovmSet;

/// Minimum Gram eigenvalue for a state set to count as linearly independent.
pub const GRAM_TOL: f64 = 1e-10;

/// `I - P M` may dip this far below zero at the optimal common scale.
const SCALE_FEASIBILITY_TOL: f64 = 1e-12;
const SCALE_BISECTION_TOL: f64 = 1e-13;

fn gram_matrix(states: &[StateVector]) -> CMatrix {
    let n = states.len();
    CMatrix::from_fn(n, n, |i, j| {
        states[i].amplitudes().dotc(states[j].amplitudes())
    })
}

fn check_independent(states: &[StateVector]) -> Result<()> {
    let dim = states
        .first()
        .ok_or_else(|| Error::InvalidState("empty state list".into()))?
        .dim();
    for s in states {
        if s.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: s.dim(),
            });
        }
    }
    let min = linalg::min_eigenvalue(&gram_matrix(states));
    if min <= GRAM_TOL {
        return Err(Error::LinearlyDependent {
            min_eigenvalue: min,
        });
    }
    Ok(())
}

/// Reciprocal states: `|psi_n^perp>` is orthogonal to every `|psi_m>` with
/// `m != n`. Built by Gram-Schmidt on the other states and projecting them
/// out of `|psi_n>`; outputs are normalised.
pub fn reciprocal_states(states: &[StateVector]) -> Result<Vec<StateVector>> {
    check_independent(states)?;
    let mut out = Vec::with_capacity(states.len());
    for (n, psi) in states.iter().enumerate() {
        let others: Vec<_> = states
            .iter()
            .enumerate()
            .filter(|(m, _)| *m != n)
            .map(|(_, s)| s.amplitudes().clone())
            .collect();
        let basis = linalg::orthonormalize(&others, 0.0);
        let residual = linalg::orthogonal_residual(psi.amplitudes(), &basis, 0.0).ok_or(
            Error::LinearlyDependent {
                min_eigenvalue: 0.0,
            },
        )?;
        out.push(StateVector::normalized(residual)?);
    }
    Ok(out)
}

/// Largest `P` in `(0, 1]` with `I - P M` positive semidefinite, by
/// bisection on the smallest eigenvalue.
pub fn max_common_scale(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let id = linalg::identity(n);
    let feasible = |p: f64| linalg::min_eigenvalue(&(&id - m.scale(p))) >= -SCALE_FEASIBILITY_TOL;
    if feasible(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > SCALE_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Optimal equal-probability UD measurement for linearly independent pure
/// states: `E_n = P |psi_n^perp><psi_n^perp| / |<psi_n|psi_n^perp>|^2` with
/// the largest admissible `P`.
pub fn build_symmetric_povm(states: &[StateVector]) -> Result<PovmSet> {
    let recips = reciprocal_states(states)?;
    let n = states[0].dim();
    let projectors: Vec<CMatrix> = states
        .iter()
        .zip(&recips)
        .map(|(psi, perp)| {
            let ov = psi.amplitudes().dotc(perp.amplitudes()).norm_sqr();
            perp.density().into_inner().unscale(ov)
        })
        .collect();
    let m = super::povm::scaled_sum(&projectors, n);
    let p = max_common_scale(&m);
    let effects = projectors
        .into_iter()
        .map(|e| Operator::from(e.scale(p)))
        .collect();
    PovmSet::from_effects(effects, Some(p))
}

/// `D(alpha_n)|0>` with `alpha_n = |alpha| e^{2 pi i n / N}`.
pub fn symmetric_states(alpha_mag: f64, count: usize, dim: HilbertDim) -> Result<Vec<StateVector>> {
    (0..count)
        .map(|k| coherent_state(symmetric_amplitude(alpha_mag, k, count), dim))
        .collect()
}

pub(crate) fn symmetric_amplitude(alpha_mag: f64, k: usize, count: usize) -> C64 {
    C64::from_polar(alpha_mag, 2.0 * PI * k as f64 / count as f64)
}

/// Upper bound `N min_r |c_r|^2` on the conclusive probability for `N`
/// symmetric coherent states, together with every `|c_r|^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricBound {
    pub bound: f64,
    pub c_sq: Vec<f64>,
}

/// `|c_r|^2 = N^-2 sum_{n,n'} exp(-2 pi i r (n - n') / N) <psi_n|psi_n'>`,
/// evaluated on the circulant row of closed-form coherent overlaps.
pub fn symmetric_ud_bound(alpha_mag: f64, count: usize) -> Result<SymmetricBound> {
    if count < 2 {
        return Err(Error::OutOfRange(format!("N = {count}, need N >= 2")));
    }
    if !(alpha_mag >= 0.0) || !alpha_mag.is_finite() {
        return Err(Error::OutOfRange(format!("|alpha| = {alpha_mag}")));
    }
    let a0 = symmetric_amplitude(alpha_mag, 0, count);
    let row: Vec<C64> = (0..count)
        .map(|k| coherent_overlap(a0, symmetric_amplitude(alpha_mag, k, count)))
        .collect();
    let c_sq: Vec<f64> = (0..count)
        .map(|r| {
            let s: C64 = row
                .iter()
                .enumerate()
                .map(|(k, g)| g * C64::from_polar(1.0, 2.0 * PI * (r * k) as f64 / count as f64))
                .sum();
            (s.re / count as f64).max(0.0)
        })
        .collect();
    let min = c_sq.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = (count as f64 * min).clamp(0.0, 1.0);
    Ok(SymmetricBound { bound, c_sq })
}

//! States and operators on a truncated oscillator / qudit Hilbert space.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};

/// Default Fock truncation for oscillator work at `|alpha| <= 2`.
pub const DEFAULT_TRUNCATION: usize = 40;
/// Default bound on the Poisson weight lost to truncation.
pub const DEFAULT_LEAKAGE_BOUND: f64 = 1e-10;

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// Logical qudit dimension `d` embedded in a Fock space of `d_trunc` levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HilbertDim {
    d: usize,
    d_trunc: usize,
}

impl HilbertDim {
    pub fn new(d: usize, d_trunc: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(format!("d = {d}, need d >= 2")));
        }
        if d_trunc < d {
            return Err(Error::InvalidDimension(format!(
                "d_trunc = {d_trunc} is smaller than d = {d}"
            )));
        }
        Ok(Self { d, d_trunc })
    }

    /// A plain qudit: no extra oscillator levels.
    pub fn qudit(d: usize) -> Result<Self> {
        Self::new(d, d)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn d_trunc(&self) -> usize {
        self.d_trunc
    }
}

/// Normalised pure state with `d_trunc` amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    /// Wrap amplitudes that are already normalised.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm_sq = amplitudes.norm_squared();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "squared norm {norm_sq} differs from 1"
            )));
        }
        Ok(Self(amplitudes))
    }

    /// Normalise arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::InvalidState("zero or non-finite amplitudes".into()));
        }
        Ok(Self(amplitudes.unscale(norm)))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(CVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|&a| C64::new(a, 0.0)),
        ))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn into_inner(self) -> CVector {
        self.0
    }

    pub fn with_global_phase(&self, phi: f64) -> Self {
        Self(self.0.map(|z| z * C64::from_polar(1.0, phi)))
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix(linalg::outer(&self.0, &self.0))
    }

    /// Apply an operator and renormalise (used for unitaries and for
    /// post-selected branches).
    pub fn evolve(&self, op: &Operator) -> Result<Self> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                found: self.dim(),
            });
        }
        Self::normalized(op.matrix() * &self.0)
    }
}

/// Mixed state: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState("density matrix is not square".into()));
        }
        let herm = linalg::max_abs_diff(&matrix, &matrix.adjoint());
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = linalg::min_eigenvalue(&matrix);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self(matrix))
    }

    /// Skip validation; used for outputs of maps that are CPTP by
    /// construction. The matrix is symmetrised.
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        Self(linalg::hermitian_part(&matrix))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(linalg::identity(n).unscale(n as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    /// Born probability `Tr[E rho]`.
    pub fn expectation(&self, effect: &Operator) -> f64 {
        (effect.matrix() * &self.0).trace().re
    }
}

/// Square complex matrix acting on the truncated space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(CMatrix);

impl Operator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidDimension(format!(
                "operator is {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidDimension("non-finite operator entry".into()));
        }
        Ok(Self(matrix))
    }

    pub fn identity(n: usize) -> Self {
        Self(linalg::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(linalg::zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        linalg::max_abs(&self.0) <= tol
    }
}

impl From<CMatrix> for Operator {
    fn from(m: CMatrix) -> Self {
        Self(m)
    }
}

/// Fock / computational basis state `|k>`.
pub fn fock_state(k: usize, dim: HilbertDim) -> Result<StateVector> {
    let n = dim.d_trunc();
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, dim: n });
    }
    Ok(StateVector(linalg::unit_vector(n, k)))
}

/// Truncated coherent state `D(alpha)|0>` with the default leakage bound.
pub fn coherent_state(alpha: C64, dim: HilbertDim) -> Result<StateVector> {
    coherent_state_with_bound(alpha, dim, DEFAULT_LEAKAGE_BOUND)
}

/// Truncated coherent state; errors when the Poisson weight beyond the
/// truncation exceeds `leakage_bound`. The kept amplitudes are renormalised.
pub fn coherent_state_with_bound(
    alpha: C64,
    dim: HilbertDim,
    leakage_bound: f64,
) -> Result<StateVector> {
    let n = dim.d_trunc();
    let mut amps = CVector::zeros(n);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for k in 0..n {
        amps[k] = c;
        c = c * alpha / ((k + 1) as f64).sqrt();
    }
    let kept = amps.norm_squared();
    let leakage = (1.0 - kept).max(0.0);
    if leakage > leakage_bound {
        return Err(Error::TruncationInsufficient {
            leakage,
            bound: leakage_bound,
        });
    }
    StateVector::normalized(amps)
}

/// Truncated annihilation operator `a` on `n` levels.
pub fn annihilation(n: usize) -> CMatrix {
    let mut a = linalg::zeros(n);
    for k in 1..n {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

pub fn number_operator(n: usize) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        n,
        (0..n).map(|k| C64::new(k as f64, 0.0)),
    ))
}

/// Extra levels used to estimate the truncation error of `D(alpha)`.
const DISPLACEMENT_PROBE_LEVELS: usize = 20;
const DISPLACEMENT_TOL: f64 = 1e-8;

fn displacement_matrix(alpha: C64, n: usize) -> CMatrix {
    let a = annihilation(n);
    // H = i (alpha a^dag - alpha^* a) is Hermitian and D = exp(-i H).
    let i = Complex64::i();
    let generator = a.adjoint().map(|z| z * alpha) - a.map(|z| z * alpha.conj());
    let h = generator.map(|z| z * i);
    let (values, vectors) = linalg::eigh(&h);
    let mut scaled = vectors.clone();
    for (k, &l) in values.iter().enumerate() {
        let phase = C64::from_polar(1.0, -l);
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= phase);
    }
    scaled * vectors.adjoint()
}

/// Displacement `D(alpha) = exp(alpha a^dag - alpha^* a)` on the truncated
/// space. The lowest `d` columns are checked against a larger truncation and
/// must agree to 1e-8.
pub fn displacement_operator(alpha: C64, dim: HilbertDim) -> Result<Operator> {
    let n = dim.d_trunc();
    let d = displacement_matrix(alpha, n);
    let big = displacement_matrix(alpha, n + DISPLACEMENT_PROBE_LEVELS);
    let mut err: f64 = 0.0;
    for col in 0..dim.d() {
        for row in 0..n {
            err = err.max((d[(row, col)] - big[(row, col)]).norm());
        }
        // weight the larger space puts beyond the truncation
        let tail: f64 = (n..n + DISPLACEMENT_PROBE_LEVELS)
            .map(|row| big[(row, col)].norm_sqr())
            .sum();
        err = err.max(tail.sqrt());
    }
    if err > DISPLACEMENT_TOL {
        return Err(Error::TruncationInsufficient {
            leakage: err,
            bound: DISPLACEMENT_TOL,
        });
    }
    Ok(Operator(d))
}

/// `<a|b>`, conjugate-linear in the first argument.
pub fn overlap(a: &StateVector, b: &StateVector) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.0.dotc(&b.0))
}

/// Closed-form coherent overlap `<alpha|beta>`.
pub fn coherent_overlap(alpha: C64, beta: C64) -> C64 {
    (-0.5 * alpha.norm_sqr() - 0.5 * beta.norm_sqr() + alpha.conj() * beta).exp()
}

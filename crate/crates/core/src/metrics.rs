//! Distance between discrimination reports, state fidelity, process
//! (chi) matrices and process fidelity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::discrimination::DiscriminationReport;
use crate::error::{Error, Result};
use crate::hilbert::DensityMatrix;
use crate::linalg::{self, CMatrix, C64};
use crate::serial::{self, Pair};

/// Label of the operator basis used by [`chi_matrix`].
pub const HEISENBERG_WEYL: &str = "heisenberg-weyl";

const PURE_TOL: f64 = 1e-9;
/// Chi eigenvalues below this are rounding noise; their square roots
/// would otherwise leak about 1e-8 each into the fidelity.
const CHI_EIG_FLOOR: f64 = 1e-14;

/// `sum |A_simu - A_ideal| / N` over the full conditional matrix, `N` the
/// number of operations.
pub fn distance_d(simulated: &DiscriminationReport, ideal: &DiscriminationReport) -> Result<f64> {
    let (a, b) = (simulated.conditional(), ideal.conditional());
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.len() != y.len()) {
        return Err(Error::ShapeMismatch(format!(
            "{} operations vs {}",
            a.len(),
            b.len()
        )));
    }
    let total: f64 = a
        .iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .sum();
    Ok(total / a.len() as f64)
}

/// `Tr(rho_simu rho_ideal)` for a pure ideal state.
pub fn state_fidelity(simu: &DensityMatrix, ideal_pure: &DensityMatrix) -> Result<f64> {
    if simu.dim() != ideal_pure.dim() {
        return Err(Error::DimensionMismatch {
            expected: ideal_pure.dim(),
            found: simu.dim(),
        });
    }
    let purity = ideal_pure.purity();
    if purity < 1.0 - PURE_TOL {
        return Err(Error::NotPure { purity });
    }
    let f = (simu.matrix() * ideal_pure.matrix()).trace().re;
    Ok(f.clamp(0.0, 1.0))
}

/// Trace-orthonormal Heisenberg-Weyl operators `X^a Z^b / sqrt(d)`, index
/// `a d + b`, with `X|j> = |j+1>` and `Z|j> = w^j |j>`.
pub fn heisenberg_weyl_basis(d: usize) -> Vec<CMatrix> {
    let norm = (d as f64).sqrt();
    let mut basis = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let mut m = linalg::zeros(d);
            for j in 0..d {
                let phase = C64::from_polar(1.0, 2.0 * PI * (b * j) as f64 / d as f64);
                m[((j + a) % d, j)] = phase / norm;
            }
            basis.push(m);
        }
    }
    basis
}

/// Process matrix with `E(rho) = d sum_mn chi_mn B_m rho B_n^dag`, so that a
/// trace-preserving map has unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiMatrix {
    matrix: CMatrix,
    dim: usize,
    basis_label: String,
}

impl ChiMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Dimension of the system the process acts on.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_label(&self) -> &str {
        &self.basis_label
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Rebuild the map from the chi matrix.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let basis = heisenberg_weyl_basis(self.dim);
        let mut out = linalg::zeros(self.dim);
        for (m, bm) in basis.iter().enumerate() {
            let left = bm * rho;
            for (n, bn) in basis.iter().enumerate() {
                let c = self.matrix[(m, n)];
                if c.norm() > 0.0 {
                    out += (&left * bn.adjoint()) * c;
                }
            }
        }
        out * C64::new(self.dim as f64, 0.0)
    }

    pub fn to_json(&self) -> ChiJson {
        ChiJson {
            basis_label: self.basis_label.clone(),
            dim: self.dim,
            matrix: serial::matrix_to_pairs(&self.matrix),
        }
    }
}

/// Chi-matrix wire format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiJson {
    pub basis_label: String,
    pub dim: usize,
    pub matrix: Vec<Pair>,
}

/// Chi matrix of an arbitrary linear map on `d x d` matrices, from its
/// Choi matrix projected onto the Heisenberg-Weyl basis.
pub fn chi_matrix(map: impl Fn(&CMatrix) -> CMatrix, d: usize) -> ChiMatrix {
    let d2 = d * d;
    // choi[(a, i), (b, j)] = E(|i><j|)[a, b]
    let mut choi = CMatrix::zeros(d2, d2);
    for i in 0..d {
        for j in 0..d {
            let mut e = linalg::zeros(d);
            e[(i, j)] = linalg::ONE;
            let out = map(&e);
            for a in 0..d {
                for b in 0..d {
                    choi[(a * d + i, b * d + j)] = out[(a, b)];
                }
            }
        }
    }
    let basis = heisenberg_weyl_basis(d);
    let v = CMatrix::from_fn(d2, d2, |row, m| basis[m][(row / d, row % d)]);
    let chi = v.adjoint() * choi * v / C64::new(d as f64, 0.0);
    ChiMatrix {
        matrix: linalg::hermitian_part(&chi),
        dim: d,
        basis_label: HEISENBERG_WEYL.into(),
    }
}

pub fn chi_from_channel(channel: &KrausChannel) -> ChiMatrix {
    chi_matrix(|m| channel.apply_matrix(m), channel.dim())
}

/// `(Tr sqrt(sqrt(a) b sqrt(a)))^2`
pub fn process_fidelity(a: &ChiMatrix, b: &ChiMatrix) -> Result<f64> {
    if a.basis_label != b.basis_label || a.dim != b.dim {
        return Err(Error::BasisMismatch(
            format!("{} (d={})", a.basis_label, a.dim),
            format!("{} (d={})", b.basis_label, b.dim),
        ));
    }
    let (va, ua) = linalg::eigh(&a.matrix);
    let mut scaled = ua.clone();
    for (k, &l) in va.iter().enumerate() {
        let s = if l > CHI_EIG_FLOOR { l.sqrt() } else { 0.0 };
        scaled.column_mut(k).scale_mut(s);
    }
    let sa = scaled * ua.adjoint();
    let inner = &sa * &b.matrix * &sa;
    let (values, _) = linalg::eigh(&inner);
    let root: f64 = values
        .iter()
        .filter(|&&l| l > CHI_EIG_FLOOR)
        .map(|l| l.sqrt())
        .sum();
    Ok((root * root).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{
        block_pauli, channel_difference, random_channel, BlockPauliParams, PauliKind,
    };
    use crate::discrimination::uniform_priors;
    use crate::hilbert::{HilbertDim, StateVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli(eta: f64, kind: PauliKind) -> KrausChannel {
        block_pauli(&BlockPauliParams::standard(eta, kind), HilbertDim::qudit(4).unwrap()).unwrap()
    }

    #[test]
    fn distance_arithmetic() {
        let a = DiscriminationReport::from_conditional(vec![vec![1.0, 0.0]; 1], vec![1.0]).unwrap();
        assert_eq!(distance_d(&a, &a).unwrap(), 0.0);
        let rows = |x: f64| -> Vec<Vec<f64>> {
            let mut r = vec![vec![0.0; 5]; 4];
            for (k, row) in r.iter_mut().enumerate() {
                row[k] = 1.0;
            }
            r[2][2] -= x;
            r[2][4] += x;
            r
        };
        let ideal = DiscriminationReport::from_conditional(rows(0.0), uniform_priors(4)).unwrap();
        let off = DiscriminationReport::from_conditional(rows(0.1), uniform_priors(4)).unwrap();
        // two cells off by 0.1 each
        assert!((distance_d(&off, &ideal).unwrap() - 0.05).abs() < 1e-15);
        assert!(distance_d(&a, &ideal).is_err());
    }

    #[test]
    fn state_fidelity_bounds() {
        let a = StateVector::from_real(&[1.0, 0.0]).unwrap().density();
        let b = StateVector::from_real(&[0.0, 1.0]).unwrap().density();
        assert!((state_fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!(state_fidelity(&a, &b).unwrap().abs() < 1e-15);
        assert!(matches!(
            state_fidelity(&a, &DensityMatrix::maximally_mixed(2)),
            Err(Error::NotPure { .. })
        ));
    }

    #[test]
    fn basis_is_trace_orthonormal() {
        let basis = heisenberg_weyl_basis(3);
        for (m, a) in basis.iter().enumerate() {
            for (n, b) in basis.iter().enumerate() {
                let ip = (a.adjoint() * b).trace();
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((ip - C64::new(want, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn identity_chi_is_rank_one() {
        let chi = chi_from_channel(&KrausChannel::identity(3));
        assert!((chi.matrix()[(0, 0)].re - 1.0).abs() < 1e-14);
        assert!((chi.trace() - 1.0).abs() < 1e-14);
        assert!((linalg::max_abs(chi.matrix()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn depolarizing_qubit_chi() {
        let chi = chi_matrix(|m| linalg::identity(2) * (m.trace() / C64::new(2.0, 0.0)), 2);
        let want = linalg::identity(4) / C64::new(4.0, 0.0);
        assert!(linalg::max_abs_diff(chi.matrix(), &want) < 1e-14);
    }

    #[test]
    fn block_pauli_chi_has_two_weights() {
        let eta = 0.3;
        let chi = chi_from_channel(&pauli(eta, PauliKind::X));
        let (values, _) = linalg::eigh(chi.matrix());
        let nonzero: Vec<f64> = values.into_iter().filter(|v| v.abs() > 1e-12).collect();
        assert_eq!(nonzero.len(), 2);
        assert!((nonzero[0] - eta).abs() < 1e-12 && (nonzero[1] - (1.0 - eta)).abs() < 1e-12);
    }

    #[test]
    fn fidelity_closed_forms() {
        let id = chi_from_channel(&KrausChannel::identity(4));
        let x = chi_from_channel(&pauli(0.5, PauliKind::X));
        let y = chi_from_channel(&pauli(0.5, PauliKind::Y));
        assert!((process_fidelity(&x, &x).unwrap() - 1.0).abs() < 1e-9);
        // commuting chi's: F = (sum_i sqrt(a_i b_i))^2
        assert!((process_fidelity(&id, &x).unwrap() - 0.5).abs() < 1e-9);
        assert!((process_fidelity(&x, &y).unwrap() - 0.25).abs() < 1e-9);
        let other = chi_from_channel(&KrausChannel::identity(2));
        assert!(process_fidelity(&id, &other).is_err());
    }

    #[test]
    fn chi_reconstructs_random_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(d, r) in &[(2usize, 3usize), (3, 2), (4, 4)] {
            let c = random_channel(d, r, &mut rng).unwrap();
            let chi = chi_from_channel(&c);
            assert!((chi.trace() - 1.0).abs() < 1e-9);
            assert!(linalg::min_eigenvalue(chi.matrix()) > -1e-9);
            let err = crate::channels::map_difference(d, |m| c.apply_matrix(m), |m| chi.apply(m));
            assert!(err < 1e-9, "{err}");
            let f_ab = process_fidelity(&chi, &chi_from_channel(&KrausChannel::identity(d))).unwrap();
            let f_ba = process_fidelity(&chi_from_channel(&KrausChannel::identity(d)), &chi).unwrap();
            assert!((f_ab - f_ba).abs() < 1e-9);
            assert!(channel_difference(&c, &c).unwrap() == 0.0);
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::Operator;
use crate::linalg::{self, CMatrix};
use crate::serial::{self, Pair};

/// Tolerance for effect positivity and resolution of the identity.
pub const POVM_TOL: f64 = 1e-10;

/// Measurement `{E_I, E_0, ..., E_{N-1}}` with the inconclusive effect kept
/// apart from the heralding effects.
#[derive(Clone, Debug, PartialEq)]
pub struct PovmSet {
    effects: Vec<Operator>,
    inconclusive: Operator,
    scale: Option<f64>,
}

impl PovmSet {
    /// Heralding effects plus `E_I = I - sum E_n`.
    pub fn from_effects(effects: Vec<Operator>, scale: Option<f64>) -> Result<Self> {
        let n = effects
            .first()
            .ok_or_else(|| Error::InvalidPovm("no effects".into()))?
            .dim();
        let mut rest = linalg::identity(n);
        for e in &effects {
            if e.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: e.dim(),
                });
            }
            rest -= e.matrix();
        }
        Self::new(effects, Operator::from(linalg::hermitian_part(&rest)), scale)
    }

    pub fn new(effects: Vec<Operator>, inconclusive: Operator, scale: Option<f64>) -> Result<Self> {
        let povm = Self {
            effects,
            inconclusive,
            scale,
        };
        povm.validate()?;
        Ok(povm)
    }

    fn validate(&self) -> Result<()> {
        let n = self.inconclusive.dim();
        if self.effects.is_empty() {
            return Err(Error::InvalidPovm("no effects".into()));
        }
        let mut sum = self.inconclusive.matrix().clone();
        for (k, e) in self.all_effects().enumerate() {
            if e.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: e.dim(),
                });
            }
            let herm = linalg::max_abs_diff(e.matrix(), &e.matrix().adjoint());
            if herm > POVM_TOL {
                return Err(Error::InvalidPovm(format!(
                    "effect {k} not Hermitian ({herm:.3e})"
                )));
            }
            let min = linalg::min_eigenvalue(e.matrix());
            if min < -POVM_TOL {
                return Err(Error::InvalidPovm(format!(
                    "effect {k} has negative eigenvalue {min:.3e}"
                )));
            }
            if k > 0 {
                sum += e.matrix();
            }
        }
        let dev = linalg::max_abs_diff(&sum, &linalg::identity(n));
        if dev > POVM_TOL {
            return Err(Error::InvalidPovm(format!(
                "effects sum to identity only within {dev:.3e}"
            )));
        }
        if let Some(s) = self.scale {
            if !(s > 0.0 && s <= 1.0 + POVM_TOL) {
                return Err(Error::InvalidPovm(format!("scale {s} not in (0,1]")));
            }
        }
        Ok(())
    }

    /// Heralding effects `E_0..E_{N-1}`.
    pub fn effects(&self) -> &[Operator] {
        &self.effects
    }

    pub fn inconclusive(&self) -> &Operator {
        &self.inconclusive
    }

    pub fn scale(&self) -> Option<f64> {
        self.scale
    }

    pub fn num_outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn dim(&self) -> usize {
        self.inconclusive.dim()
    }

    /// `E_I` first, then `E_0..E_{N-1}`.
    pub fn all_effects(&self) -> impl Iterator<Item = &Operator> {
        std::iter::once(&self.inconclusive).chain(self.effects.iter())
    }

    /// Reorder the heralding effects: new effect `k` is old effect `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.effects.len()];
        if perm.len() != self.effects.len() {
            return Err(Error::InvalidPovm("permutation length mismatch".into()));
        }
        for &p in perm {
            if p >= seen.len() || seen[p] {
                return Err(Error::InvalidPovm("not a permutation".into()));
            }
            seen[p] = true;
        }
        Ok(Self {
            effects: perm.iter().map(|&p| self.effects[p].clone()).collect(),
            inconclusive: self.inconclusive.clone(),
            scale: self.scale,
        })
    }

    /// `max |E_I + sum E_n - I|`
    pub fn resolution_deviation(&self) -> f64 {
        let n = self.dim();
        let mut sum = linalg::zeros(n);
        for e in self.all_effects() {
            sum += e.matrix();
        }
        linalg::max_abs_diff(&sum, &linalg::identity(n))
    }

    /// Smallest eigenvalue over all effects, `E_I` included.
    pub fn min_effect_eigenvalue(&self) -> f64 {
        self.all_effects()
            .map(|e| linalg::min_eigenvalue(e.matrix()))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> PovmJson {
        PovmJson {
            effects: self
                .effects
                .iter()
                .map(|e| serial::matrix_to_pairs(e.matrix()))
                .collect(),
            inconclusive: serial::matrix_to_pairs(self.inconclusive.matrix()),
            scale: self.scale,
        }
    }

    pub fn from_json(json: &PovmJson) -> Result<Self> {
        let inconclusive = serial::matrix_from_pairs(&json.inconclusive, None)?;
        let n = inconclusive.nrows();
        let effects = json
            .effects
            .iter()
            .map(|e| serial::matrix_from_pairs(e, Some(n)).map(Operator::from))
            .collect::<Result<Vec<_>>>()?;
        Self::new(effects, Operator::from(inconclusive), json.scale)
    }
}

/// Wire format of a POVM; matrices flattened row-major as `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmJson {
    pub effects: Vec<Vec<Pair>>,
    pub inconclusive: Vec<Pair>,
    pub scale: Option<f64>,
}

pub(crate) fn scaled_sum(ops: &[CMatrix], n: usize) -> CMatrix {
    let mut m = linalg::zeros(n);
    for o in ops {
        m += o;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::StateVector;

    #[test]
    fn projective_povm() {
        let v = StateVector::from_real(&[1.0, 0.0]).unwrap();
        let p = PovmSet::from_effects(vec![Operator::from(v.density().into_inner())], Some(1.0)).unwrap();
        assert!(p.resolution_deviation() < 1e-15);
        assert!(p.min_effect_eigenvalue() > -1e-15);
        assert!((p.inconclusive().matrix()[(1, 1)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn oversized_effects_rejected() {
        let e = Operator::identity(2).scale(0.7);
        assert!(PovmSet::from_effects(vec![e.clone(), e], None).is_err());
    }

    #[test]
    fn json_roundtrip_and_permutation() {
        let a = StateVector::from_real(&[1.0, 1.0, 0.0]).unwrap();
        let b = StateVector::from_real(&[0.0, 1.0, -1.0]).unwrap();
        let p = PovmSet::from_effects(
            vec![
                Operator::from(a.density().into_inner().scale(0.5)),
                Operator::from(b.density().into_inner().scale(0.5)),
            ],
            Some(0.5),
        )
        .unwrap();
        let json = serde_json::to_string(&p.to_json()).unwrap();
        let back = PovmSet::from_json(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, p);
        let swapped = p.permuted(&[1, 0]).unwrap();
        assert_eq!(swapped.effects()[0], p.effects()[1]);
        assert!(p.permuted(&[0, 0]).is_err());
    }
}

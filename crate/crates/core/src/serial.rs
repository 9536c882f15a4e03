//! JSON encoding of complex data: every complex number is a `[re, im]`
//! pair and matrices are flattened row-major.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};

pub type Pair = [f64; 2];

pub fn vector_to_pairs(v: &CVector) -> Vec<Pair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_pairs(pairs: &[Pair]) -> CVector {
    CVector::from_iterator(pairs.len(), pairs.iter().map(|p| C64::new(p[0], p[1])))
}

pub fn matrix_to_pairs(m: &CMatrix) -> Vec<Pair> {
    let mut out = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            out.push([z.re, z.im]);
        }
    }
    out
}

/// Decode a square row-major matrix. `dim` may be omitted and is then
/// inferred from the entry count.
pub fn matrix_from_pairs(pairs: &[Pair], dim: Option<usize>) -> Result<CMatrix> {
    let n = match dim {
        Some(n) => n,
        None => {
            let n = (pairs.len() as f64).sqrt().round() as usize;
            if n * n != pairs.len() {
                return Err(Error::Format(format!(
                    "{} entries do not form a square matrix",
                    pairs.len()
                )));
            }
            n
        }
    };
    if pairs.len() != n * n {
        return Err(Error::Format(format!(
            "expected {} entries for a {n}x{n} matrix, found {}",
            n * n,
            pairs.len()
        )));
    }
    if pairs.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::Format("non-finite matrix entry".into()));
    }
    Ok(CMatrix::from_row_iterator(
        n,
        n,
        pairs.iter().map(|p| C64::new(p[0], p[1])),
    ))
}

/// Fixed significant-digit formatting used for every CSV number.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{:.*e}", digits.saturating_sub(1), x);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    // -0.000... after rounding
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0".into()
    } else {
        s
    }
}

/// CSV numbers: 12 significant digits.
pub fn csv_num(x: f64) -> String {
    fmt_sig(x, 12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_digits() {
        assert_eq!(csv_num(0.876_612_345_678_9), "0.876612345679");
        assert_eq!(csv_num(1.0), "1.00000000000");
        assert_eq!(csv_num(0.0), "0");
        assert_eq!(csv_num(12.5), "12.5000000000");
        assert_eq!(csv_num(1.5e-12), "1.50000000000e-12");
    }

    #[test]
    fn matrix_pairs_reject_non_square() {
        assert!(matrix_from_pairs(&[[1.0, 0.0]; 3], None).is_err());
        let m = matrix_from_pairs(&[[1.0, 0.0], [0.0, 1.0], [2.0, 0.0], [3.0, 0.0]], None).unwrap();
        assert_eq!(m[(0, 1)], C64::new(0.0, 1.0));
        assert_eq!(m[(1, 0)], C64::new(2.0, 0.0));
    }
}

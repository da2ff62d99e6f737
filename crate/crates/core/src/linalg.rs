//! Small dense-matrix helpers shared across the crate.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// True when every entry is finite.
pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Largest absolute entry (0 for empty matrices).
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Reciprocal condition number sigma_min / sigma_max from singular values.
/// Returns 0 for singular matrices.
pub fn rcond(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let smax = sv.iter().fold(0.0f64, |a, &s| a.max(s));
    let smin = sv.iter().fold(f64::INFINITY, |a, &s| a.min(s));
    if smax == 0.0 {
        0.0
    } else {
        smin / smax
    }
}

/// Numerical rank via singular values, with the usual max(dim) * eps * sigma_max cutoff.
pub fn rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().singular_values();
    let smax = sv.iter().fold(0.0f64, |a, &s| a.max(s));
    let tol = smax * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Moore-Penrose right inverse C^T (C C^T)^-1 for full-row-rank C.
pub fn right_pseudo_inverse(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rows = c.nrows();
    let r = rank(c);
    if r < rows {
        return Err(Error::RankDeficientC { rank: r, rows });
    }
    let gram = c * c.transpose();
    let inv = gram
        .try_inverse()
        .ok_or(Error::RankDeficientC { rank: r, rows })?;
    Ok(c.transpose() * inv)
}

/// M + M^T.
pub fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    m + m.transpose()
}

/// Exact symmetrization (M + M^T) / 2.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix (matrix is symmetrized first).
pub fn min_eig_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let es = symmetrize(m).symmetric_eigen();
    es.eigenvalues.iter().fold(f64::INFINITY, |a, &v| a.min(v))
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eig_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    let es = symmetrize(m).symmetric_eigen();
    es.eigenvalues
        .iter()
        .fold(f64::NEG_INFINITY, |a, &v| a.max(v))
}

/// Builds a dense matrix from nested rows, rejecting ragged input.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Ok(DMatrix::zeros(0, 0));
    }
    let cols = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(Error::Parse(format!(
                "ragged array: row {} has {} entries, expected {}",
                i,
                r.len(),
                cols
            )));
        }
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), cols, &flat))
}

/// Row-major nested-vec view of a matrix (the JSON wire form).
pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rcond_of_identity_is_one() {
        let m = DMatrix::<f64>::identity(4, 4);
        assert!((rcond(&m) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn right_pinv_of_wide_matrix() {
        let c = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 1.0]);
        let p = right_pseudo_inverse(&c).unwrap();
        let cp = &c * &p;
        assert!((cp[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn right_pinv_rejects_rank_deficient() {
        let c = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            right_pseudo_inverse(&c),
            Err(Error::RankDeficientC { rank: 1, rows: 2 })
        ));
    }

    #[test]
    fn from_rows_rejects_ragged() {
        let rows = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(from_rows(&rows).is_err());
    }
}

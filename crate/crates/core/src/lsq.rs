//! Truncated-SVD least squares.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    pub rank: usize,
    /// Ratio of the largest to the smallest retained singular value.
    pub condition: f64,
    pub rank_deficient: bool,
}

/// Solves `min |A c - b|` for a row-major `rows x cols` matrix. Columns are
/// scaled to unit norm first; singular values below `rcond` times the largest
/// are discarded (pseudo-inverse semantics).
pub fn solve(a: &[f64], rows: usize, cols: usize, b: &[f64], rcond: f64) -> LeastSquares {
    assert_eq!(a.len(), rows * cols);
    assert_eq!(b.len(), rows);
    let mut m = DMatrix::from_row_slice(rows, cols, a);
    let norms: Vec<f64> = (0..cols).map(|j| m.column(j).norm()).collect();
    for (j, &n) in norms.iter().enumerate() {
        if n > 0.0 {
            m.column_mut(j).scale_mut(1.0 / n);
        }
    }
    let svd = m.svd(true, true);
    let sv = &svd.singular_values;
    let largest = sv.iter().cloned().fold(0.0, f64::max);
    let cutoff = rcond * largest;
    let rank = sv.iter().filter(|&&s| s > cutoff).count();
    let smallest = sv.iter().cloned().filter(|&s| s > cutoff).fold(f64::INFINITY, f64::min);
    let rhs = DVector::from_row_slice(b);
    let x = svd.solve(&rhs, cutoff.max(f64::MIN_POSITIVE)).expect("both factors were computed");
    let coefficients = x.iter().zip(&norms).map(|(v, &n)| if n > 0.0 { v / n } else { 0.0 }).collect();
    LeastSquares {
        coefficients,
        rank,
        condition: if rank > 0 { largest / smallest } else { f64::INFINITY },
        rank_deficient: rank < cols.min(rows),
    }
}

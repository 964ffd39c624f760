use super::{DenseMatrix, Partition};
use crate::error::{Error, Result};

/// Row and block leverage scores of an orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LeverageProfile {
    /// `ℓ_i = ‖U_(i)‖²`.
    pub row_scores: Vec<f64>,
    /// `ℓ̃_ι = ‖U_(K_ι)‖_F²`.
    pub block_scores: Vec<f64>,
    /// `ℓ̃_ι / d`, a probability vector over blocks.
    pub normalized_block_scores: Vec<f64>,
}

impl LeverageProfile {
    /// Coefficient of variation of the block scores.
    pub fn block_cv(&self) -> f64 {
        let k = self.block_scores.len() as f64;
        let mean = self.block_scores.iter().sum::<f64>() / k;
        let var = self.block_scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / k;
        var.sqrt() / mean
    }

    pub fn max_block_score(&self) -> f64 {
        self.block_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_block_score(&self) -> f64 {
        self.block_scores.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Scores of `u` without the orthonormality check; `Πu` for a non-orthogonal
/// `Π` (Rademacher) still has well-defined block masses.
pub fn block_scores(u: &DenseMatrix, part: &Partition) -> LeverageProfile {
    let d = u.cols() as f64;
    let row_scores: Vec<f64> = (0..u.rows()).map(|i| u.row(i).iter().map(|v| v * v).sum()).collect();
    let block_scores: Vec<f64> = part.iter().map(|range| row_scores[range].iter().sum()).collect();
    let normalized_block_scores = block_scores.iter().map(|s| s / d).collect();
    LeverageProfile {
        row_scores,
        block_scores,
        normalized_block_scores,
    }
}

/// Leverage profile of an orthonormal `U` under a block partition.
pub fn leverage_profile(u: &DenseMatrix, part: &Partition) -> Result<LeverageProfile> {
    if u.rows() != part.n() {
        return Err(Error::dim(format!(
            "basis has {} rows, partition covers {}",
            u.rows(),
            part.n()
        )));
    }
    let gap = u.gram().sub(&DenseMatrix::identity(u.cols()))?.max_abs();
    if gap > 1e-8 {
        return Err(Error::Precondition(format!(
            "basis is not orthonormal (max |UᵀU − I| = {gap:.3e})"
        )));
    }
    Ok(block_scores(u, part))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormal_basis;

    #[test]
    fn coordinate_basis() {
        let u = DenseMatrix::from_fn(8, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let part = Partition::new(8, 4).unwrap();
        let p = leverage_profile(&u, &part).unwrap();
        assert_eq!(p.row_scores, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.block_scores, vec![2.0, 1.0, 0.0, 0.0]);
        let total: f64 = p.normalized_block_scores.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scores_sum_to_rank() {
        let a = DenseMatrix::from_fn(24, 4, |i, j| {
            ((i * 31 + j * 17) % 13) as f64 - 6.0 + (i == j) as u8 as f64
        });
        let u = orthonormal_basis(&a).unwrap();
        let part = Partition::new(24, 6).unwrap();
        let p = leverage_profile(&u, &part).unwrap();
        assert!((p.row_scores.iter().sum::<f64>() - 4.0).abs() < 1e-8);
        assert!((p.block_scores.iter().sum::<f64>() - 4.0).abs() < 1e-8);
        for (iota, range) in part.iter().enumerate() {
            let s: f64 = p.row_scores[range].iter().sum();
            assert!((s - p.block_scores[iota]).abs() < 1e-10);
        }
        assert!(p.row_scores.iter().all(|&l| (0.0..=1.0 + 1e-10).contains(&l)));
    }

    #[test]
    fn non_orthonormal_is_rejected() {
        let u = DenseMatrix::identity(4).scaled(2.0);
        let part = Partition::new(4, 2).unwrap();
        assert!(matches!(leverage_profile(&u, &part), Err(Error::Precondition(_))));
        let part = Partition::new(6, 2).unwrap();
        assert!(matches!(leverage_profile(&u, &part), Err(Error::Dimension(_))));
    }
}

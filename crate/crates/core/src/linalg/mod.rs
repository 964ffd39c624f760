//! Dense numerical primitives.

mod fwht;
mod leverage;
pub(crate) mod matrix;
mod norm;
pub(crate) mod qr;

pub use fwht::{fwht_columns, fwht_inplace};
pub use leverage::{block_scores, leverage_profile, LeverageProfile};
pub use matrix::{DenseMatrix, Partition};
pub use norm::{spectral_norm, spectral_norm_with, symmetric_spectral_norm, PowerIteration};
pub use qr::{least_squares, orthonormal_basis, HouseholderQr};

use crate::error::{Error, Result};

/// Anything that maps an `N × c` matrix to an `r × c` matrix linearly.
pub trait SketchOperator {
    /// Output row count `r`.
    fn rows(&self) -> usize;
    /// Input row count `N`.
    fn cols(&self) -> usize;
    fn apply(&self, m: &DenseMatrix) -> Result<DenseMatrix>;
}

impl SketchOperator for DenseMatrix {
    fn rows(&self) -> usize {
        self.rows()
    }

    fn cols(&self) -> usize {
        self.cols()
    }

    fn apply(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        self.matmul(m)
    }
}

/// `‖I_d − (SU)ᵀ(SU)‖₂` for an orthonormal `U`.
pub fn embedding_distortion(u: &DenseMatrix, s: &dyn SketchOperator) -> Result<f64> {
    if s.cols() != u.rows() {
        return Err(Error::dim(format!(
            "sketch takes {} rows but basis has {}",
            s.cols(),
            u.rows()
        )));
    }
    let su = s.apply(u)?;
    let mut gap = su.gram();
    for i in 0..gap.rows() {
        for j in 0..gap.cols() {
            let identity = if i == j { 1.0 } else { 0.0 };
            gap[(i, j)] = identity - gap[(i, j)];
        }
    }
    symmetric_spectral_norm(&gap)
}

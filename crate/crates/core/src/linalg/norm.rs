use rand_distr::{Distribution, StandardNormal};

use super::matrix::norm2;
use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Settings for [`spectral_norm_with`].
#[derive(Clone, Copy, Debug)]
pub struct PowerIteration {
    /// Relative tolerance on the largest singular value.
    pub tol: f64,
    /// Seed of the start vector.
    pub seed: u64,
    /// Overrides the default cap of `10 · max(rows, cols) · ln(1/tol)`.
    pub max_iter: Option<usize>,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            seed: 0x5eed,
            max_iter: None,
        }
    }
}

/// Largest singular value of `m`, by power iteration on `mᵀm`.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    spectral_norm_with(m, PowerIteration::default())
}

pub fn spectral_norm_with(m: &DenseMatrix, opts: PowerIteration) -> Result<f64> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 || m.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let cap = opts.max_iter.unwrap_or_else(|| {
        let c = 10.0 * rows.max(cols) as f64 * (1.0 / opts.tol).ln();
        c.ceil() as usize
    });

    let mut rng = stream_rng(opts.seed, Stream::PowerIteration, cols as u64);
    let mut v: Vec<f64> = (0..cols).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n = norm2(&v);
    v.iter_mut().for_each(|x| *x /= n);

    // Rayleigh quotients of mᵀm increase monotonically towards σ_max².
    let mut lambda = 0.0;
    for _ in 0..cap {
        let mv = m.matvec(&v)?;
        let next = norm2(&mv).powi(2);
        let mut w = m.tr_matvec(&mv)?;
        let wn = norm2(&w);
        if wn == 0.0 {
            return Ok(next.sqrt());
        }
        w.iter_mut().for_each(|x| *x /= wn);
        v = w;
        // The singular value is sqrt(lambda): its relative change is half of lambda's.
        if (next - lambda).abs() <= 1e-2 * opts.tol * next {
            return Ok(next.sqrt());
        }
        lambda = next;
    }
    Err(Error::NotConverged {
        iterations: cap,
        estimate: lambda.sqrt(),
    })
}

/// `max |λ_i|` of a symmetric matrix, from a dense eigendecomposition.
///
/// Power iteration stalls when the extreme eigenvalues of a symmetric
/// matrix are close in magnitude but opposite in sign, which is the typical
/// shape of `I − (SU)ᵀ(SU)`.
pub fn symmetric_spectral_norm(m: &DenseMatrix) -> Result<f64> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::dim(format!("expected a square matrix, got {rows}x{cols}")));
    }
    let asym = (0..rows)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (m[(i, j)] - m[(j, i)]).abs())
        .fold(0.0, f64::max);
    if asym > 1e-10 * m.max_abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "matrix is not symmetric (max |m - mᵀ| = {asym:.2e})"
        )));
    }
    if rows == 0 {
        return Ok(0.0);
    }
    let eig = nalgebra::DMatrix::from_row_slice(rows, cols, m.as_slice()).symmetric_eigenvalues();
    Ok(eig.iter().fold(0.0, |acc: f64, v| acc.max(v.abs())))
}

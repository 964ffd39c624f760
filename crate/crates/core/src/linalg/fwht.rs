use super::DenseMatrix;
use crate::error::{Error, Result};

fn check_len(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::dim(format!(
            "Walsh-Hadamard transform needs a power-of-two length, got {n}"
        )));
    }
    Ok(())
}

/// Normalized Walsh–Hadamard transform `Ĥ_N · v`, in place.
///
/// `Ĥ_N = H_2^{⊗ log2 N} / √N` in natural (Sylvester) order. Runs in
/// `N log2 N` butterflies.
pub fn fwht_inplace(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    check_len(n)?;
    let mut h = 1;
    while h < n {
        for chunk in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = chunk.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    let s = 1.0 / (n as f64).sqrt();
    v.iter_mut().for_each(|x| *x *= s);
    Ok(())
}

/// `Ĥ_N · M` for every column of `M` at once.
///
/// The butterflies act on whole rows, so for a row-major `N × c` matrix the
/// inner loop runs over contiguous memory. Cost is `O(N c log N)`.
pub fn fwht_columns(m: &mut DenseMatrix) -> Result<()> {
    let (n, c) = m.shape();
    check_len(n)?;
    let data = m.as_mut_slice();
    let mut h = 1;
    while h < n {
        for chunk in data.chunks_exact_mut(2 * h * c) {
            let (lo, hi) = chunk.split_at_mut(h * c);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    let s = 1.0 / (n as f64).sqrt();
    data.iter_mut().for_each(|x| *x *= s);
    Ok(())
}

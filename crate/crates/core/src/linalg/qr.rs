use super::matrix::{axpy, dot, norm2};
use super::DenseMatrix;
use crate::error::{Error, Result};

/// Relative rank threshold on the diagonal of `R`.
const RANK_TOL: f64 = 1e-10;

/// One Householder reflector `H = I − β v vᵀ` acting on rows `offset..`.
#[derive(Clone, Debug)]
pub(crate) struct Reflector {
    pub offset: usize,
    pub v: Vec<f64>,
    pub beta: f64,
}

impl Reflector {
    /// Builds the reflector that maps `x` onto `α e_1` and returns `α`.
    pub(crate) fn annihilate(offset: usize, x: &[f64]) -> (Self, f64) {
        let norm = norm2(x);
        let mut v = x.to_vec();
        if norm == 0.0 {
            return (Reflector { offset, v, beta: 0.0 }, 0.0);
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vv = dot(&v, &v);
        let beta = if vv == 0.0 { 0.0 } else { 2.0 / vv };
        (Reflector { offset, v, beta }, alpha)
    }

    /// Applies `H` to the rows of a row-major matrix in place.
    pub(crate) fn apply_rows(&self, m: &mut DenseMatrix) {
        if self.beta == 0.0 {
            return;
        }
        let c = m.cols();
        let mut w = vec![0.0; c];
        for (i, &vi) in self.v.iter().enumerate() {
            axpy(vi, m.row(self.offset + i), &mut w);
        }
        for (i, &vi) in self.v.iter().enumerate() {
            axpy(-self.beta * vi, &w, m.row_mut(self.offset + i));
        }
    }

    /// Applies `H` to a single contiguous vector in place.
    pub(crate) fn apply_vec(&self, x: &mut [f64]) {
        if self.beta == 0.0 {
            return;
        }
        let seg = &mut x[self.offset..self.offset + self.v.len()];
        let s = self.beta * dot(&self.v, seg);
        axpy(-s, &self.v, seg);
    }
}

/// Householder QR factorization `A = QR` of a tall `N × d` matrix.
#[derive(Clone, Debug)]
pub struct HouseholderQr {
    rows: usize,
    cols: usize,
    reflectors: Vec<Reflector>,
    /// Upper-triangular `R`, `d × d`.
    r: DenseMatrix,
}

impl HouseholderQr {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let (n, d) = a.shape();
        if d == 0 || d > n {
            return Err(Error::dim(format!("QR needs 0 < cols <= rows, got {n}x{d}")));
        }
        // Column-major working copy so each reflector touches contiguous memory.
        let mut work: Vec<Vec<f64>> = (0..d).map(|j| a.col(j)).collect();
        let mut reflectors = Vec::with_capacity(d);
        let mut r = DenseMatrix::zeros(d, d);
        for k in 0..d {
            let (head, tail) = work.split_at_mut(k + 1);
            let (h, alpha) = Reflector::annihilate(k, &head[k][k..]);
            r[(k, k)] = alpha;
            for (off, col) in tail.iter_mut().enumerate() {
                h.apply_vec(col);
                r[(k, k + 1 + off)] = col[k];
            }
            reflectors.push(h);
        }
        Ok(Self {
            rows: n,
            cols: d,
            reflectors,
            r,
        })
    }

    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    /// `min |R_ii| / max |R_ii|`.
    pub fn rank_ratio(&self) -> f64 {
        let diag: Vec<f64> = (0..self.cols).map(|i| self.r[(i, i)].abs()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if max == 0.0 {
            0.0
        } else {
            min / max
        }
    }

    fn check_rank(&self) -> Result<()> {
        let ratio = self.rank_ratio();
        if ratio < RANK_TOL {
            return Err(Error::Rank { ratio });
        }
        Ok(())
    }

    /// `Qᵀ · M` for an `N × c` matrix.
    pub fn apply_qt(&self, m: &mut DenseMatrix) {
        for h in &self.reflectors {
            h.apply_rows(m);
        }
    }

    /// `Q · M` for an `N × c` matrix.
    pub fn apply_q(&self, m: &mut DenseMatrix) {
        for h in self.reflectors.iter().rev() {
            h.apply_rows(m);
        }
    }

    /// The first `d` columns of `Q`.
    pub fn thin_q(&self) -> DenseMatrix {
        let mut q = DenseMatrix::from_fn(self.rows, self.cols, |i, j| if i == j { 1.0 } else { 0.0 });
        self.apply_q(&mut q);
        q
    }

    /// Least-squares solution of `min ‖Ax − b‖₂`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.rows {
            return Err(Error::dim(format!(
                "right-hand side has {} rows, expected {}",
                b.len(),
                self.rows
            )));
        }
        self.check_rank()?;
        let mut qtb = b.to_vec();
        for h in &self.reflectors {
            h.apply_vec(&mut qtb);
        }
        let d = self.cols;
        let mut x = vec![0.0; d];
        for i in (0..d).rev() {
            let s: f64 = (i + 1..d).map(|j| self.r[(i, j)] * x[j]).sum();
            x[i] = (qtb[i] - s) / self.r[(i, i)];
        }
        Ok(x)
    }
}

/// An orthonormal basis `U` of `im(A)` for a full-column-rank `A`.
pub fn orthonormal_basis(a: &DenseMatrix) -> Result<DenseMatrix> {
    let qr = HouseholderQr::new(a)?;
    qr.check_rank()?;
    Ok(qr.thin_q())
}

/// `A⁺ b` via Householder QR.
pub fn least_squares(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    HouseholderQr::new(a)?.solve(b)
}

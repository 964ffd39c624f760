use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::qr::Reflector;
use crate::linalg::{fwht_columns, DenseMatrix};
use crate::rng::{stream_rng, Stream};

/// Family a projection `Π` is drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProjectionKind {
    /// `Π = I_N`.
    Identity,
    /// Haar-distributed orthonormal matrix.
    HaarOrthonormal,
    /// `Π = Ĥ D`.
    BlockSrht,
    /// `Π = P Ĥ D` with a secret row permutation `P`.
    GarbledBlockSrht,
    /// i.i.d. `±1/√N` entries. Not orthonormal.
    Rademacher,
    /// i.i.d. `N(0, 1/N)` entries. Not orthonormal; experiment baseline only.
    Gaussian,
}

impl ProjectionKind {
    pub const ALL: [ProjectionKind; 6] = [
        ProjectionKind::Identity,
        ProjectionKind::HaarOrthonormal,
        ProjectionKind::BlockSrht,
        ProjectionKind::GarbledBlockSrht,
        ProjectionKind::Rademacher,
        ProjectionKind::Gaussian,
    ];

    pub fn is_orthonormal(self) -> bool {
        matches!(
            self,
            Self::Identity | Self::HaarOrthonormal | Self::BlockSrht | Self::GarbledBlockSrht
        )
    }

    pub fn is_hadamard(self) -> bool {
        matches!(self, Self::BlockSrht | Self::GarbledBlockSrht)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::HaarOrthonormal => "haar",
            Self::BlockSrht => "block-srht",
            Self::GarbledBlockSrht => "garbled-srht",
            Self::Rademacher => "rademacher",
            Self::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for ProjectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProjectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown projection kind {s:?}")))
    }
}

/// Lazily factored Haar matrix: `Π = H_0 H_1 ⋯ H_{N−1} · diag(signs)`.
///
/// These are exactly the Householder factors of the QR decomposition of an
/// i.i.d. standard normal matrix, with `signs = sign(diag R)` so that the
/// `R` factor has a positive diagonal. Column `k` of the Gaussian matrix
/// only matters through rows `k..` after the first `k` reflections, and
/// those entries are again i.i.d. normal, so each column is drawn fresh.
#[derive(Clone, Debug)]
struct HaarFactors {
    reflectors: Vec<Reflector>,
    signs: Vec<f64>,
}

impl HaarFactors {
    fn sample(n: usize, seed: u64) -> Self {
        let mut rng = stream_rng(seed, Stream::Projection, n as u64);
        let mut reflectors = Vec::with_capacity(n);
        let mut signs = Vec::with_capacity(n);
        for k in 0..n {
            let x: Vec<f64> = (k..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let (h, r_kk) = Reflector::annihilate(k, &x);
            signs.push(if r_kk < 0.0 { -1.0 } else { 1.0 });
            reflectors.push(h);
        }
        Self { reflectors, signs }
    }

    fn apply(&self, m: &mut DenseMatrix) {
        scale_rows(m, &self.signs);
        for h in self.reflectors.iter().rev() {
            h.apply_rows(m);
        }
    }

    fn apply_transpose(&self, m: &mut DenseMatrix) {
        for h in &self.reflectors {
            h.apply_rows(m);
        }
        scale_rows(m, &self.signs);
    }
}

fn scale_rows(m: &mut DenseMatrix, s: &[f64]) {
    for (i, &si) in s.iter().enumerate() {
        if si != 1.0 {
            m.row_mut(i).iter_mut().for_each(|v| *v *= si);
        }
    }
}

/// `out_i = m_{perm[i]}`.
fn permute_rows(m: &DenseMatrix, perm: &[usize]) -> DenseMatrix {
    let parts: Vec<f64> = perm.iter().flat_map(|&p| m.row(p).iter().copied()).collect();
    DenseMatrix::from_row_major(m.rows(), m.cols(), parts).expect("same shape")
}

/// `out_{perm[i]} = m_i`.
fn unpermute_rows(m: &DenseMatrix, perm: &[usize]) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.rows(), m.cols());
    for (i, &p) in perm.iter().enumerate() {
        out.row_mut(p).copy_from_slice(m.row(i));
    }
    out
}

/// Uniform random permutation of `0..n` (Fisher–Yates).
pub(crate) fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(seed, Stream::Permutation, n as u64));
    perm
}

/// Diagonal of a random signature matrix `D`.
pub(crate) fn random_signature(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, Stream::Signature, n as u64);
    (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// A random `N × N` transform `Π`, stored implicitly where structure allows.
#[derive(Clone, Debug)]
pub struct Projection {
    kind: ProjectionKind,
    n: usize,
    seed: u64,
    signature: Option<Vec<f64>>,
    permutation: Option<Vec<usize>>,
    haar: Option<HaarFactors>,
    dense: Option<DenseMatrix>,
}

impl Projection {
    /// Draws `Π` of the given kind. Deterministic in `(kind, n, seed)`.
    pub fn build(kind: ProjectionKind, n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::dim(format!("projection dimension must be >= 2, got {n}")));
        }
        if kind.is_hadamard() && !n.is_power_of_two() {
            return Err(Error::dim(format!("{kind} needs a power-of-two dimension, got {n}")));
        }
        let mut p = Projection {
            kind,
            n,
            seed,
            signature: None,
            permutation: None,
            haar: None,
            dense: None,
        };
        match kind {
            ProjectionKind::Identity => {}
            ProjectionKind::HaarOrthonormal => p.haar = Some(HaarFactors::sample(n, seed)),
            ProjectionKind::BlockSrht => p.signature = Some(random_signature(n, seed)),
            ProjectionKind::GarbledBlockSrht => {
                p.signature = Some(random_signature(n, seed));
                p.permutation = Some(random_permutation(n, seed));
            }
            ProjectionKind::Rademacher => {
                let mut rng = stream_rng(seed, Stream::Projection, n as u64);
                let s = 1.0 / (n as f64).sqrt();
                let mut data = Vec::with_capacity(n * n);
                while data.len() < n * n {
                    let bits: u64 = rng.gen();
                    for b in 0..64.min(n * n - data.len()) {
                        data.push(if bits >> b & 1 == 1 { s } else { -s });
                    }
                }
                p.dense = Some(DenseMatrix::from_row_major(n, n, data)?);
            }
            ProjectionKind::Gaussian => {
                let mut rng = stream_rng(seed, Stream::Projection, n as u64);
                let law = Normal::new(0.0, 1.0 / (n as f64).sqrt()).expect("valid std");
                p.dense = Some(DenseMatrix::from_fn(n, n, |_, _| law.sample(&mut rng)));
            }
        }
        Ok(p)
    }

    /// Hadamard-based projection with explicit `D` and optional `P`.
    pub fn hadamard_with(signature: Vec<f64>, permutation: Option<Vec<usize>>) -> Result<Self> {
        let n = signature.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::dim(format!(
                "Hadamard dimension must be a power of two, got {n}"
            )));
        }
        if signature.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::Precondition("signature entries must be ±1".into()));
        }
        if let Some(perm) = &permutation {
            let mut seen = vec![false; n];
            if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
                return Err(Error::Precondition("permutation is not a bijection".into()));
            }
        }
        Ok(Projection {
            kind: if permutation.is_some() {
                ProjectionKind::GarbledBlockSrht
            } else {
                ProjectionKind::BlockSrht
            },
            n,
            seed: 0,
            signature: Some(signature),
            permutation,
            haar: None,
            dense: None,
        })
    }

    pub fn kind(&self) -> ProjectionKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn signature(&self) -> Option<&[f64]> {
        self.signature.as_deref()
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        self.permutation.as_deref()
    }

    pub fn is_orthonormal(&self) -> bool {
        self.kind.is_orthonormal()
    }

    fn check_rows(&self, m: &DenseMatrix) -> Result<()> {
        if m.rows() != self.n {
            return Err(Error::dim(format!(
                "projection of size {} applied to {} rows",
                self.n,
                m.rows()
            )));
        }
        Ok(())
    }

    /// `Π · M`.
    pub fn apply(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows(m)?;
        match self.kind {
            ProjectionKind::Identity => Ok(m.clone()),
            ProjectionKind::HaarOrthonormal => {
                let mut out = m.clone();
                self.haar.as_ref().expect("haar factors").apply(&mut out);
                Ok(out)
            }
            ProjectionKind::BlockSrht | ProjectionKind::GarbledBlockSrht => {
                let mut out = m.clone();
                scale_rows(&mut out, self.signature.as_ref().expect("signature"));
                fwht_columns(&mut out)?;
                Ok(match &self.permutation {
                    Some(perm) => permute_rows(&out, perm),
                    None => out,
                })
            }
            ProjectionKind::Rademacher | ProjectionKind::Gaussian => {
                self.dense.as_ref().expect("dense projection").matmul(m)
            }
        }
    }

    /// `Πᵀ · M`.
    pub fn apply_transpose(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows(m)?;
        match self.kind {
            ProjectionKind::Identity => Ok(m.clone()),
            ProjectionKind::HaarOrthonormal => {
                let mut out = m.clone();
                self.haar.as_ref().expect("haar factors").apply_transpose(&mut out);
                Ok(out)
            }
            ProjectionKind::BlockSrht | ProjectionKind::GarbledBlockSrht => {
                let mut out = match &self.permutation {
                    Some(perm) => unpermute_rows(m, perm),
                    None => m.clone(),
                };
                fwht_columns(&mut out)?;
                scale_rows(&mut out, self.signature.as_ref().expect("signature"));
                Ok(out)
            }
            ProjectionKind::Rademacher | ProjectionKind::Gaussian => {
                self.dense.as_ref().expect("dense projection").tr_matmul(m)
            }
        }
    }

    /// The explicit `N × N` matrix.
    pub fn to_dense(&self) -> DenseMatrix {
        match &self.dense {
            Some(d) => d.clone(),
            None => self
                .apply(&DenseMatrix::identity(self.n))
                .expect("square identity matches"),
        }
    }

    /// The text record `kind=<kind> n=<N> seed=<seed>` that rebuilds this projection.
    pub fn spec(&self) -> ProjectionSpec {
        ProjectionSpec {
            kind: self.kind,
            n: self.n,
            seed: self.seed,
        }
    }
}

/// Serializable description of a projection. Never carries the matrix itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProjectionSpec {
    pub kind: ProjectionKind,
    pub n: usize,
    pub seed: u64,
}

impl ProjectionSpec {
    pub fn build(&self) -> Result<Projection> {
        Projection::build(self.kind, self.n, self.seed)
    }
}

impl fmt::Display for ProjectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kind={} n={} seed={}", self.kind, self.n, self.seed)
    }
}

impl FromStr for ProjectionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (mut kind, mut n, mut seed) = (None, None, None);
        for field in s.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {field:?}")))?;
            let bad = |e: std::num::ParseIntError| Error::Parse(format!("{key}: {e}"));
            match key {
                "kind" => kind = Some(value.parse()?),
                "n" => n = Some(value.parse().map_err(bad)?),
                "seed" => seed = Some(value.parse().map_err(bad)?),
                _ => return Err(Error::Parse(format!("unknown field {key:?}"))),
            }
        }
        match (kind, n, seed) {
            (Some(kind), Some(n), Some(seed)) => Ok(ProjectionSpec { kind, n, seed }),
            _ => Err(Error::Parse("projection record needs kind, n and seed".into())),
        }
    }
}

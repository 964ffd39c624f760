//! Secrecy of the encoded data against workers and eavesdroppers.
//!
//! Workers only ever see `ΠA`. When `Π` is drawn uniformly from a finite
//! multiplicative group of orthonormal matrices that also contains the
//! plaintext, `ΠA` is uniformly distributed over the group whatever `A` is:
//! a one-time pad over a matrix group. The plain block-SRHT has no such
//! property, which [`srht_distinguisher`] demonstrates at `N = 2`. The
//! garbled variant `PĤD` hides the row order behind a secret permutation;
//! its security rests on that permutation staying unknown, which is an
//! assumption documented here rather than something the code proves.
//!
//! Encryption leaks the singular values and right singular vectors of `A`
//! (`ΠA = (ΠU)ΣVᵀ`), and reusing one key for two messages reveals their
//! inner products `(ΠU₀)ᵀ(ΠU₁) = U₀ᵀU₁`.

use num_bigint::BigUint;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::{stream_rng, Stream};
use crate::sketch::{random_permutation, Projection, ProjectionKind};

/// Ciphertext-to-group-element matching tolerance.
pub const MATCH_TOL: f64 = 1e-8;

/// Key space a ciphertext was produced with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ensemble {
    /// `{ĤD}`.
    Hadamard,
    /// `{PĤD}`.
    GarbledHadamard,
    /// `±1/√N` matrices.
    Rademacher,
    /// Other kinds, or an explicit finite group.
    Other,
}

impl From<ProjectionKind> for Ensemble {
    fn from(kind: ProjectionKind) -> Self {
        match kind {
            ProjectionKind::BlockSrht => Ensemble::Hadamard,
            ProjectionKind::GarbledBlockSrht => Ensemble::GarbledHadamard,
            ProjectionKind::Rademacher => Ensemble::Rademacher,
            _ => Ensemble::Other,
        }
    }
}

/// `Enc_Π(M) = ΠM`.
#[derive(Clone, Debug)]
pub struct Ciphertext {
    pub matrix: DenseMatrix,
    pub ensemble: Ensemble,
}

pub fn encrypt(key: &Projection, plaintext: &DenseMatrix) -> Result<Ciphertext> {
    Ok(Ciphertext {
        matrix: key.apply(plaintext)?,
        ensemble: key.kind().into(),
    })
}

/// `Πᵀ C`, which recovers the plaintext for orthonormal keys.
pub fn decrypt(key: &Projection, c: &Ciphertext) -> Result<DenseMatrix> {
    if !key.is_orthonormal() {
        return Err(Error::Precondition(format!(
            "{} keys are not invertible by transpose",
            key.kind()
        )));
    }
    key.apply_transpose(&c.matrix)
}

/// The secret row permutation `P` of the garbled transform `PĤD`.
pub fn garble(seed: u64, n: usize) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::dim(format!("garbling needs N >= 2, got {n}")));
    }
    Ok(random_permutation(n, seed))
}

/// Which of the two `N = 2` plaintexts a block-SRHT ciphertext came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Plaintext {
    /// `U₀ = I₂`.
    Identity,
    /// `U₁ = Ĥ₂`.
    Hadamard,
}

impl Plaintext {
    pub fn matrix(self) -> DenseMatrix {
        match self {
            Plaintext::Identity => DenseMatrix::identity(2),
            Plaintext::Hadamard => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                DenseMatrix::from_fn(2, 2, |i, j| if i == 1 && j == 1 { -s } else { s })
            }
        }
    }
}

/// Guesses the plaintext behind `C = ĤD·U_b`.
///
/// `ĤD·I₂` has only `±1/√2` entries, while `ĤD·Ĥ₂ = ½[[d₁+d₂, d₁−d₂], [d₁−d₂, d₁+d₂]]`
/// always has two zeros. One zero entry is therefore enough to tell them apart
/// for every signature `D`.
pub fn srht_distinguisher(c: &DenseMatrix) -> Result<Plaintext> {
    if c.shape() != (2, 2) {
        return Err(Error::dim(format!("expected a 2x2 ciphertext, got {:?}", c.shape())));
    }
    if c.as_slice().iter().any(|v| v.abs() <= 1e-12) {
        Ok(Plaintext::Hadamard)
    } else {
        Ok(Plaintext::Identity)
    }
}

/// Runs the distinguisher over all four signatures and both plaintexts.
/// Returns `(correct, total)`.
pub fn distinguisher_enumeration() -> Result<(usize, usize)> {
    let mut correct = 0;
    let mut total = 0;
    for (d1, d2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let key = Projection::hadamard_with(vec![d1, d2], None)?;
        for b in [Plaintext::Identity, Plaintext::Hadamard] {
            let c = encrypt(&key, &b.matrix())?;
            if srht_distinguisher(&c.matrix)? == b {
                correct += 1;
            }
            total += 1;
        }
    }
    Ok((correct, total))
}

/// A finite subgroup of `O_N(ℝ)` listed element by element.
#[derive(Clone, Debug)]
pub struct FiniteOrthogroup {
    n: usize,
    elements: Vec<DenseMatrix>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

impl FiniteOrthogroup {
    /// Builds the group and checks identity, inverse and product closure.
    pub fn new(elements: Vec<DenseMatrix>) -> Result<Self> {
        let n = elements
            .first()
            .map(|e| e.rows())
            .ok_or_else(|| Error::Precondition("a group needs at least one element".into()))?;
        if elements.iter().any(|e| e.shape() != (n, n)) {
            return Err(Error::dim("group elements must all be N x N"));
        }
        let g = Self { n, elements };
        g.locate(&DenseMatrix::identity(n))?;
        for e in &g.elements {
            g.locate(&e.transpose())?;
            for f in &g.elements {
                g.locate(&e.matmul(f)?)?;
            }
        }
        Ok(g)
    }

    /// `{I_N}`.
    pub fn trivial(n: usize) -> Self {
        Self {
            n,
            elements: vec![DenseMatrix::identity(n)],
        }
    }

    /// The `N!` permutation matrices.
    pub fn permutation_matrices(n: usize) -> Result<Self> {
        let elements = permutations(n)
            .into_iter()
            .map(|p| DenseMatrix::from_fn(n, n, |i, j| if p[i] == j { 1.0 } else { 0.0 }))
            .collect();
        Self::new(elements)
    }

    /// The `2^N · N!` signed permutation matrices (the hyperoctahedral group).
    pub fn signed_permutations(n: usize) -> Result<Self> {
        let mut elements = Vec::new();
        for p in permutations(n) {
            for signs in 0..(1u32 << n) {
                elements.push(DenseMatrix::from_fn(n, n, |i, j| {
                    if p[i] != j {
                        0.0
                    } else if signs >> i & 1 == 1 {
                        -1.0
                    } else {
                        1.0
                    }
                }));
            }
        }
        Self::new(elements)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[DenseMatrix] {
        &self.elements
    }

    /// Index of the element within [`MATCH_TOL`] of `m`.
    pub fn locate(&self, m: &DenseMatrix) -> Result<usize> {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, e) in self.elements.iter().enumerate() {
            let dist = e.max_abs_diff(m);
            if dist < best.1 {
                best = (i, dist);
            }
        }
        if best.1 <= MATCH_TOL {
            Ok(best.0)
        } else {
            Err(Error::Closure { distance: best.1 })
        }
    }
}

/// How keys are drawn in [`secrecy_frequency_test`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyDraws {
    /// `trials` uniform keys per message.
    Sampled { trials: usize, seed: u64 },
    /// Every key exactly once per message.
    Exhaustive,
}

/// Largest group the frequency test accepts.
pub const MAX_GROUP: usize = 256;

fn total_variation(p: &[usize], q: &[usize], total: f64) -> f64 {
    0.5 * p.iter().zip(q).map(|(&a, &b)| (a as f64 - b as f64).abs()).sum::<f64>() / total
}

/// Max pairwise total-variation distance between the ciphertext
/// distributions of all messages, with keys and messages both in `g`.
pub fn secrecy_frequency_test(g: &FiniteOrthogroup, draws: KeyDraws) -> Result<f64> {
    let size = g.len();
    if size > MAX_GROUP {
        return Err(Error::Precondition(format!(
            "group of order {size} exceeds {MAX_GROUP}"
        )));
    }
    let per_message = match draws {
        KeyDraws::Sampled { trials, .. } => {
            if trials < 100 * size {
                return Err(Error::Precondition(format!(
                    "need at least {} trials for a group of order {size}, got {trials}",
                    100 * size
                )));
            }
            trials
        }
        KeyDraws::Exhaustive => size,
    };
    let mut histograms = Vec::with_capacity(size);
    for (mi, message) in g.elements().iter().enumerate() {
        let mut counts = vec![0usize; size];
        match draws {
            KeyDraws::Exhaustive => {
                for key in g.elements() {
                    counts[g.locate(&key.matmul(message)?)?] += 1;
                }
            }
            KeyDraws::Sampled { trials, seed } => {
                let mut rng = stream_rng(seed, Stream::Key, mi as u64);
                for _ in 0..trials {
                    let key = &g.elements()[rng.gen_range(0..size)];
                    counts[g.locate(&key.matmul(message)?)?] += 1;
                }
            }
        }
        histograms.push(counts);
    }
    let mut worst: f64 = 0.0;
    for i in 0..size {
        for j in i + 1..size {
            worst = worst.max(total_variation(&histograms[i], &histograms[j], per_message as f64));
        }
    }
    Ok(worst)
}

/// Sampling-noise bound `3 √(|G| / trials)` on the sampled TV distance.
pub fn secrecy_threshold(group_order: usize, trials: usize) -> f64 {
    3.0 * (group_order as f64 / trials as f64).sqrt()
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, i| acc * BigUint::from(i))
}

/// Number of distinct keys the implementation can draw for `kind`.
///
/// Block-SRHT: `2^N` signatures. Garbled: `2^N · N!`. Rademacher: `2^(N²)`.
pub fn ensemble_size(kind: ProjectionKind, n: usize) -> Result<BigUint> {
    let two = BigUint::from(2u32);
    match kind {
        ProjectionKind::BlockSrht => Ok(two.pow(n as u32)),
        ProjectionKind::GarbledBlockSrht => Ok(two.pow(n as u32) * factorial(n)),
        ProjectionKind::Rademacher => Ok(two.pow((n * n) as u32)),
        other => Err(Error::Unsupported(format!(
            "no finite key count for {other} projections"
        ))),
    }
}

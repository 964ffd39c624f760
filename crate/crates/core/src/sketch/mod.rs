//! Block-subsampled orthonormal sketches.
//!
//! A sketch is `S_p = Ω_p · Π` where `Π` is an `N × N` projection and
//! `Ω_p = Ω_part ⊗ I_τ` picks `q` of the `K` row blocks of `ΠA` uniformly
//! with replacement and rescales them by `√(N/r) = √(K/q)`.

mod projection;

pub(crate) use projection::random_permutation;
pub use projection::{Projection, ProjectionKind, ProjectionSpec};

use itertools::Itertools;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Partition, SketchOperator};
use crate::rng::{stream_rng, Stream};

/// Largest number of subsets the exhaustive oracles will enumerate.
pub const ENUMERATION_LIMIT: u128 = 100_000;

/// Dimensions of one block-sampled sketch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SketchConfig {
    pub n: usize,
    pub d: usize,
    /// Number of blocks `K`.
    pub k: usize,
    /// Target sketch rows `r = q τ`.
    pub r: usize,
    pub seed: u64,
}

impl SketchConfig {
    pub fn new(n: usize, d: usize, k: usize, r: usize, seed: u64) -> Result<Self> {
        let cfg = Self { n, d, k, r, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn tau(&self) -> usize {
        self.n / self.k
    }

    pub fn q(&self) -> usize {
        self.r / self.tau()
    }

    pub fn partition(&self) -> Result<Partition> {
        Partition::new(self.n, self.k)
    }

    pub fn validate(&self) -> Result<()> {
        self.partition()?;
        let tau = self.tau();
        if self.r == 0 || !self.r.is_multiple_of(tau) || self.r > self.n {
            return Err(Error::Config(format!(
                "r = {} must be a positive multiple of τ = {tau} not exceeding N = {}",
                self.r, self.n
            )));
        }
        // q > d/τ  ⇔  r > d
        if self.r <= self.d {
            return Err(Error::Config(format!(
                "need q = r/τ > d/τ, i.e. r > d (r = {}, d = {})",
                self.r, self.d
            )));
        }
        Ok(())
    }

    /// Extra check for the Hadamard-based kinds.
    pub fn validate_for(&self, kind: ProjectionKind) -> Result<()> {
        self.validate()?;
        if kind.is_hadamard() && !self.n.is_power_of_two() {
            return Err(Error::Config(format!("{kind} needs N a power of two, got {}", self.n)));
        }
        Ok(())
    }
}

/// The `q` block indices drawn by `Ω_part`, in draw order.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSample {
    /// 0-based block indices; repeats allowed.
    pub indices: Vec<usize>,
    /// `√(N/r) = √(K/q)`.
    pub scale: f64,
}

impl BlockSample {
    /// A sample with explicit indices; `scale = √(K/q)`.
    pub fn with_indices(indices: Vec<usize>, k: usize) -> Result<Self> {
        if indices.is_empty() || indices.iter().any(|&j| j >= k) {
            return Err(Error::dim(format!("block indices must lie in 0..{k}")));
        }
        let scale = (k as f64 / indices.len() as f64).sqrt();
        Ok(Self { indices, scale })
    }

    pub fn q(&self) -> usize {
        self.indices.len()
    }
}

/// Draws `q` blocks uniformly with replacement.
pub fn sample_blocks(cfg: &SketchConfig, seed: u64) -> Result<BlockSample> {
    cfg.validate()?;
    let mut rng = stream_rng(seed, Stream::Sampling, 0);
    let indices = (0..cfg.q()).map(|_| rng.gen_range(0..cfg.k)).collect();
    BlockSample::with_indices(indices, cfg.k)
}

fn check_sample(p: &Projection, sample: &BlockSample, part: &Partition, a: &DenseMatrix) -> Result<()> {
    if p.n() != part.n() || a.rows() != part.n() {
        return Err(Error::dim(format!(
            "projection {}, partition {} and data {} rows disagree",
            p.n(),
            part.n(),
            a.rows()
        )));
    }
    if sample.indices.iter().any(|&j| j >= part.blocks()) {
        return Err(Error::dim("sampled block index out of range"));
    }
    Ok(())
}

/// Stacks `scale · (ΠA)_(K_j)` for each sampled `j`, in sample order.
fn stack_blocks(pa: &DenseMatrix, sample: &BlockSample, part: &Partition) -> DenseMatrix {
    let blocks: Vec<DenseMatrix> = sample
        .indices
        .iter()
        .map(|&j| pa.row_block(part.block(j)).scaled(sample.scale))
        .collect();
    DenseMatrix::vstack(&blocks).expect("blocks share column count")
}

/// `S_p · A = Ω_p Π A`, an `r × c` matrix.
pub fn assemble_sketch(p: &Projection, sample: &BlockSample, part: &Partition, a: &DenseMatrix) -> Result<DenseMatrix> {
    check_sample(p, sample, part, a)?;
    Ok(stack_blocks(&p.apply(a)?, sample, part))
}

/// The explicit `r × N` matrix `S_p`.
pub fn explicit_sketch_matrix(p: &Projection, sample: &BlockSample, part: &Partition) -> Result<DenseMatrix> {
    let identity = DenseMatrix::identity(p.n());
    check_sample(p, sample, part, &identity)?;
    Ok(stack_blocks(&p.to_dense(), sample, part))
}

/// A concrete sketch `S_p`, usable wherever a [`SketchOperator`] is expected.
#[derive(Clone, Debug)]
pub struct Sketch<'a> {
    pub projection: &'a Projection,
    pub sample: BlockSample,
    pub partition: Partition,
}

impl SketchOperator for Sketch<'_> {
    fn rows(&self) -> usize {
        self.sample.q() * self.partition.tau()
    }

    fn cols(&self) -> usize {
        self.partition.n()
    }

    fn apply(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        assemble_sketch(self.projection, &self.sample, &self.partition, m)
    }
}

/// `C(n, k)` without overflow for the sizes we enumerate.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

pub(crate) fn check_enumeration(k: usize, q: usize) -> Result<u128> {
    let count = binomial(k, q);
    if count > ENUMERATION_LIMIT {
        return Err(Error::Capacity {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    if q == 0 || q > k {
        return Err(Error::Precondition(format!("need 1 <= q <= K, got q = {q}, K = {k}")));
    }
    Ok(count)
}

/// Exact average of `S_[t]ᵀ S_[t]` over every `q`-subset of the `K` blocks.
///
/// Each subset keeps its blocks of `Π` scaled by `√(K/q)`. For an
/// orthonormal `Π` the result is `I_N`.
pub fn gram_expectation_oracle(p: &Projection, part: &Partition, q: usize) -> Result<DenseMatrix> {
    if p.n() != part.n() {
        return Err(Error::dim("projection and partition sizes differ"));
    }
    let count = check_enumeration(part.blocks(), q)?;
    let dense = p.to_dense();
    let n = p.n();
    let block_grams: Vec<DenseMatrix> = part.iter().map(|r| dense.row_block(r).gram()).collect();
    let scale = part.blocks() as f64 / q as f64;
    let mut total = DenseMatrix::zeros(n, n);
    for subset in (0..part.blocks()).combinations(q) {
        let mut s_gram = DenseMatrix::zeros(n, n);
        for j in subset {
            s_gram.add_assign(&block_grams[j])?;
        }
        total.add_assign(&s_gram.scaled(scale))?;
    }
    Ok(total.scaled(1.0 / count as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, d: usize, seed: u64) -> DenseMatrix {
        let mut rng = stream_rng(seed, Stream::Data, 0);
        DenseMatrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn config_validation() {
        assert!(SketchConfig::new(16, 2, 4, 8, 0).is_ok());
        assert!(SketchConfig::new(16, 2, 5, 8, 0).is_err()); // K ∤ N
        assert!(SketchConfig::new(16, 2, 4, 6, 0).is_err()); // τ ∤ r
        assert!(SketchConfig::new(16, 8, 4, 8, 0).is_err()); // q <= d/τ
        let cfg = SketchConfig::new(12, 2, 4, 6, 0).unwrap();
        assert!(cfg.validate_for(ProjectionKind::BlockSrht).is_err());
        assert!(cfg.validate_for(ProjectionKind::HaarOrthonormal).is_ok());
    }

    #[test]
    fn single_block_samples_repeat() {
        let cfg = SketchConfig {
            n: 6,
            d: 1,
            k: 1,
            r: 6,
            seed: 0,
        };
        // r = 6 = τ gives q = 1; use explicit indices for the three-draw case.
        assert_eq!(sample_blocks(&cfg, 3).unwrap().indices, vec![0]);
        let s = BlockSample::with_indices(vec![0, 0, 0], 1).unwrap();
        assert_eq!(s.q(), 3);
    }

    #[test]
    fn scale_is_sqrt_k_over_q() {
        let cfg = SketchConfig::new(40, 3, 20, 10, 0).unwrap();
        let s = sample_blocks(&cfg, 1).unwrap();
        assert_eq!(s.q(), 5);
        assert_eq!(s.scale, 2.0);
        assert!((s.scale.powi(2) - cfg.n as f64 / cfg.r as f64).abs() < 1e-15);
    }

    #[test]
    fn uniform_block_frequencies() {
        let cfg = SketchConfig::new(200, 1, 100, 100, 0).unwrap();
        let mut counts = vec![0usize; 100];
        let seeds = 100_000;
        for seed in 0..seeds {
            for j in sample_blocks(&cfg, seed).unwrap().indices {
                counts[j] += 1;
            }
        }
        for c in counts {
            let freq = c as f64 / seeds as f64;
            assert!((freq - 0.5).abs() < 0.01, "{freq}");
        }
    }

    #[test]
    fn identity_full_sample_returns_input() {
        let a = gaussian(12, 3, 1);
        let part = Partition::new(12, 4).unwrap();
        let p = Projection::build(ProjectionKind::Identity, 12, 0).unwrap();
        let sample = BlockSample::with_indices(vec![0, 1, 2, 3], 4).unwrap();
        assert_eq!(sample.scale, 1.0);
        assert_eq!(assemble_sketch(&p, &sample, &part, &a).unwrap(), a);
    }

    #[test]
    fn assembled_matches_explicit_product() {
        let part = Partition::new(8, 4).unwrap();
        let a = gaussian(8, 3, 2);
        for kind in ProjectionKind::ALL {
            let p = Projection::build(kind, 8, 5).unwrap();
            let cfg = SketchConfig::new(8, 3, 4, 4, 0).unwrap();
            let sample = sample_blocks(&cfg, 9).unwrap();
            let fast = assemble_sketch(&p, &sample, &part, &a).unwrap();
            let slow = explicit_sketch_matrix(&p, &sample, &part).unwrap().matmul(&a).unwrap();
            assert_eq!(fast.rows(), 4);
            assert!(fast.max_abs_diff(&slow) < 1e-12, "{kind}");
        }
    }

    #[test]
    fn assemble_rejects_bad_shapes() {
        let part = Partition::new(8, 4).unwrap();
        let p = Projection::build(ProjectionKind::Identity, 8, 0).unwrap();
        let sample = BlockSample::with_indices(vec![1], 4).unwrap();
        assert!(assemble_sketch(&p, &sample, &part, &DenseMatrix::zeros(6, 2)).is_err());
        let bad = BlockSample {
            indices: vec![4],
            scale: 1.0,
        };
        assert!(assemble_sketch(&p, &bad, &part, &DenseMatrix::zeros(8, 2)).is_err());
    }

    #[test]
    fn gram_oracle_small_cases() {
        // K = q: one subset, Gram is ΠᵀΠ.
        let part = Partition::new(8, 4).unwrap();
        let p = Projection::build(ProjectionKind::HaarOrthonormal, 8, 1).unwrap();
        let g = gram_expectation_oracle(&p, &part, 4).unwrap();
        assert!(g.max_abs_diff(&DenseMatrix::identity(8)) < 1e-12);

        let part = Partition::new(4, 2).unwrap();
        let p = Projection::build(ProjectionKind::Identity, 4, 0).unwrap();
        let g = gram_expectation_oracle(&p, &part, 1).unwrap();
        assert!(g.max_abs_diff(&DenseMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn gram_oracle_capacity() {
        let part = Partition::new(40, 40).unwrap();
        let p = Projection::build(ProjectionKind::Identity, 40, 0).unwrap();
        assert!(matches!(
            gram_expectation_oracle(&p, &part, 20),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(100, 50), 100891344545564193334812497256);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn sketch_operator_dimensions() {
        let p = Projection::build(ProjectionKind::BlockSrht, 16, 3).unwrap();
        let sk = Sketch {
            projection: &p,
            sample: BlockSample::with_indices(vec![0, 3], 4).unwrap(),
            partition: Partition::new(16, 4).unwrap(),
        };
        assert_eq!((sk.rows(), sk.cols()), (8, 16));
    }
}

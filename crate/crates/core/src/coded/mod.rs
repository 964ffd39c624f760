//! Simulated coded-computing network.
//!
//! The server encodes `(A, b)` once as `G_p [A | b]` with `G_p = √(N/r) Π`,
//! hands block `i` to worker `i` (one replica per block, so `m = K`), and in
//! every round sums the partial gradients of the `q` fastest workers.

mod solver;

pub use solver::{
    baseline_minibatch, baseline_sd, contraction_factor, exhaustive_gradient_mean, exhaustive_step_mean,
    sketched_solution_oracle, ssd_run, xi_opt, IterationRecord, SolverState, StepRule, DIVERGENCE_THRESHOLD,
};

use std::cmp::Ordering;

use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::linalg::matrix::{axpy, dot};
use crate::linalg::{DenseMatrix, Partition};
use crate::rng::{stream_rng, Stream};
use crate::sketch::{Projection, ProjectionKind, ProjectionSpec};

/// Distribution of a single worker's completion time.
#[derive(Clone, Debug, PartialEq)]
pub enum RuntimeLaw {
    /// `shift + Exp(rate)`.
    ShiftedExponential { shift: f64, rate: f64 },
    /// Fixed per-worker times.
    Deterministic(Vec<f64>),
}

impl RuntimeLaw {
    /// `shift = τ/N` (unit time per unit of data), `rate = 1`.
    pub fn default_for(part: &Partition) -> Self {
        RuntimeLaw::ShiftedExponential {
            shift: part.tau() as f64 / part.n() as f64,
            rate: 1.0,
        }
    }
}

/// `m` workers, of which the server waits for the `q` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct StragglerModel {
    m: usize,
    q: usize,
    law: RuntimeLaw,
}

impl StragglerModel {
    pub fn new(m: usize, q: usize, law: RuntimeLaw) -> Result<Self> {
        if q == 0 || q > m {
            return Err(Error::Config(format!("need 1 <= q <= m, got q = {q}, m = {m}")));
        }
        match &law {
            RuntimeLaw::ShiftedExponential { shift, rate } => {
                if !(*shift >= 0.0 && *rate > 0.0 && shift.is_finite() && rate.is_finite()) {
                    return Err(Error::Config(format!(
                        "shifted exponential needs shift >= 0 and rate > 0, got {shift}, {rate}"
                    )));
                }
            }
            RuntimeLaw::Deterministic(times) => {
                if times.len() != m || times.iter().any(|t| !t.is_finite()) {
                    return Err(Error::Config(format!(
                        "deterministic law needs {m} finite runtimes, got {}",
                        times.len()
                    )));
                }
            }
        }
        Ok(Self { m, q, law })
    }

    pub fn workers(&self) -> usize {
        self.m
    }

    pub fn responders(&self) -> usize {
        self.q
    }

    /// `s = m − q`.
    pub fn stragglers(&self) -> usize {
        self.m - self.q
    }

    pub fn law(&self) -> &RuntimeLaw {
        &self.law
    }
}

/// Indices of the `q` fastest workers in round `t`, sorted ascending.
///
/// Runtimes are redrawn every round from `(seed, t)`; equal runtimes go
/// to the lower worker index.
pub fn simulate_round(model: &StragglerModel, seed: u64, t: u64) -> Vec<usize> {
    let times: Vec<f64> = match &model.law {
        RuntimeLaw::Deterministic(times) => times.clone(),
        RuntimeLaw::ShiftedExponential { shift, rate } => {
            let mut rng = stream_rng(seed, Stream::Runtime, t);
            let exp = Exp::new(*rate).expect("validated rate");
            (0..model.m).map(|_| shift + exp.sample(&mut rng)).collect()
        }
    };
    let mut order: Vec<usize> = (0..model.m).collect();
    order.sort_by(|&i, &j| {
        times[i]
            .partial_cmp(&times[j])
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut fastest = order[..model.q].to_vec();
    fastest.sort_unstable();
    fastest
}

/// Encoded blocks `(Ã_i, b̃_i)` held by the workers.
#[derive(Clone, Debug)]
pub struct EncodedShards {
    a: Vec<DenseMatrix>,
    b: Vec<Vec<f64>>,
    projection: ProjectionSpec,
    scale: f64,
    partition: Partition,
}

/// Encodes `G_p [A | b]` with `G_p = √(N/r) Π` and splits it into blocks.
///
/// Passing `r = N` gives unit-scale shards `Π [A | b]`.
pub fn encode_distribute(
    a: &DenseMatrix,
    b: &[f64],
    p: &Projection,
    part: &Partition,
    r: usize,
) -> Result<EncodedShards> {
    let n = part.n();
    if a.rows() != n || b.len() != n || p.n() != n {
        return Err(Error::dim(format!(
            "data {}x{}, labels {}, projection {} and partition {} disagree",
            a.rows(),
            a.cols(),
            b.len(),
            p.n(),
            n
        )));
    }
    if r == 0 || r > n {
        return Err(Error::dim(format!("sketch size r = {r} must lie in 1..={n}")));
    }
    let scale = (n as f64 / r as f64).sqrt();
    let d = a.cols();
    let encoded = p.apply(&a.hstack(&DenseMatrix::column(b))?)?.scaled(scale);
    let mut shards_a = Vec::with_capacity(part.blocks());
    let mut shards_b = Vec::with_capacity(part.blocks());
    for range in part.iter() {
        let block = encoded.row_block(range);
        shards_a.push(DenseMatrix::from_fn(block.rows(), d, |i, j| block[(i, j)]));
        shards_b.push(block.col(d));
    }
    Ok(EncodedShards {
        a: shards_a,
        b: shards_b,
        projection: p.spec(),
        scale,
        partition: *part,
    })
}

impl EncodedShards {
    pub fn blocks(&self) -> usize {
        self.a.len()
    }

    pub fn dim(&self) -> usize {
        self.a[0].cols()
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// The embedded `√(N/r)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn projection(&self) -> &ProjectionSpec {
        &self.projection
    }

    pub fn projection_kind(&self) -> ProjectionKind {
        self.projection.kind
    }

    pub fn shard(&self, i: usize) -> (&DenseMatrix, &[f64]) {
        (&self.a[i], &self.b[i])
    }

    /// All shards stacked back into `(G_p A, G_p b)`.
    pub fn stacked(&self) -> (DenseMatrix, Vec<f64>) {
        let a = DenseMatrix::vstack(&self.a).expect("shards share width");
        let b = self.b.iter().flatten().copied().collect();
        (a, b)
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::dim(format!(
                "iterate has length {}, data has {} columns",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Worker `i`'s partial gradient `2 Ã_iᵀ(Ã_i x − b̃_i)`.
    pub fn partial_gradient(&self, i: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_x(x)?;
        let (a, b) = self.shard(i);
        let mut resid = a.matvec(x)?;
        resid.iter_mut().zip(b).for_each(|(r, bi)| *r = 2.0 * (*r - bi));
        a.tr_matvec(&resid)
    }

    /// `Σ_{j ∈ S} Ã_jᵀ Ã_j`, the Gram of the induced sketch `(S_p A)ᵀ(S_p A)`.
    pub fn sampled_gram(&self, responders: &[usize]) -> DenseMatrix {
        let d = self.dim();
        let mut g = DenseMatrix::zeros(d, d);
        for &j in responders {
            g.add_assign(&self.a[j].gram()).expect("square d×d");
        }
        g
    }

    /// `‖Ax − b‖²` measured through the encoded data, `‖G_p(Ax − b)‖² / (N/r)`.
    ///
    /// Exact for orthonormal projections.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        let mut total = 0.0;
        for (a, b) in self.a.iter().zip(&self.b) {
            let ax = a.matvec(x)?;
            total += ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
        }
        Ok(total / (self.scale * self.scale))
    }
}

/// The aggregated gradient `ĝ = 2 Σ_{j∈S} Ã_jᵀ(Ã_j x − b̃_j)`.
///
/// Repeated indices count with multiplicity. No further scaling is applied:
/// the `√(N/r)` factor already sits inside the shards.
pub fn aggregated_gradient(shards: &EncodedShards, responders: &[usize], x: &[f64]) -> Result<Vec<f64>> {
    shards.check_x(x)?;
    if let Some(&j) = responders.iter().find(|&&j| j >= shards.blocks()) {
        return Err(Error::dim(format!(
            "responder {j} out of range for {} workers",
            shards.blocks()
        )));
    }
    let mut g = vec![0.0; shards.dim()];
    for &j in responders {
        axpy(1.0, &shards.partial_gradient(j, x)?, &mut g);
    }
    Ok(g)
}

/// `2 Aᵀ(Ax − b)`.
pub fn full_gradient(a: &DenseMatrix, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let mut resid = a.matvec(x)?;
    if resid.len() != b.len() {
        return Err(Error::dim("labels do not match data rows"));
    }
    resid.iter_mut().zip(b).for_each(|(r, bi)| *r = 2.0 * (*r - bi));
    a.tr_matvec(&resid)
}

pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum()
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::ProjectionKind;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, d: usize, seed: u64) -> DenseMatrix {
        let mut rng = stream_rng(seed, Stream::Data, 0);
        DenseMatrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn deterministic_runtimes() {
        let law = RuntimeLaw::Deterministic(vec![1.0, 2.0, 3.0, 4.0]);
        let m = StragglerModel::new(4, 2, law).unwrap();
        assert_eq!(simulate_round(&m, 0, 0), vec![0, 1]);
        assert_eq!(m.stragglers(), 2);

        let law = RuntimeLaw::Deterministic(vec![4.0, 1.0, 3.0, 2.0]);
        let m = StragglerModel::new(4, 2, law).unwrap();
        assert_eq!(simulate_round(&m, 0, 0), vec![1, 3]);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let law = RuntimeLaw::Deterministic(vec![1.0; 4]);
        let m = StragglerModel::new(4, 2, law).unwrap();
        assert_eq!(simulate_round(&m, 5, 9), vec![0, 1]);
    }

    #[test]
    fn model_validation() {
        assert!(StragglerModel::new(4, 0, RuntimeLaw::Deterministic(vec![1.0; 4])).is_err());
        assert!(StragglerModel::new(4, 5, RuntimeLaw::Deterministic(vec![1.0; 4])).is_err());
        assert!(StragglerModel::new(4, 2, RuntimeLaw::Deterministic(vec![1.0; 3])).is_err());
        let bad = RuntimeLaw::ShiftedExponential { shift: -1.0, rate: 1.0 };
        assert!(StragglerModel::new(4, 2, bad).is_err());
        let bad = RuntimeLaw::ShiftedExponential { shift: 0.0, rate: 0.0 };
        assert!(StragglerModel::new(4, 2, bad).is_err());
    }

    #[test]
    fn shifted_exponential_is_symmetric_across_workers() {
        let part = Partition::new(200, 100).unwrap();
        let model = StragglerModel::new(100, 50, RuntimeLaw::default_for(&part)).unwrap();
        let rounds = 10_000;
        let mut hits = vec![0usize; 100];
        for t in 0..rounds {
            let s = simulate_round(&model, 3, t);
            assert_eq!(s.len(), 50);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            for j in s {
                hits[j] += 1;
            }
        }
        for h in hits {
            let f = h as f64 / rounds as f64;
            assert!((f - 0.5).abs() < 0.02, "{f}");
        }
    }

    #[test]
    fn identity_shards_are_the_plain_partition() {
        let a = gaussian(12, 3, 1);
        let b: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let part = Partition::new(12, 4).unwrap();
        let p = Projection::build(ProjectionKind::Identity, 12, 0).unwrap();
        let shards = encode_distribute(&a, &b, &p, &part, 12).unwrap();
        for (i, range) in part.iter().enumerate() {
            let (sa, sb) = shards.shard(i);
            assert_eq!(sa.rows(), 3);
            assert_eq!(*sa, a.row_block(range.clone()));
            assert_eq!(sb, &b[range]);
        }
    }

    #[test]
    fn stacked_shards_equal_scaled_projection() {
        let a = gaussian(16, 3, 2);
        let b = gaussian(16, 1, 3).into_vec();
        let part = Partition::new(16, 8).unwrap();
        let p = Projection::build(ProjectionKind::HaarOrthonormal, 16, 4).unwrap();
        let shards = encode_distribute(&a, &b, &p, &part, 8).unwrap();
        let (sa, sb) = shards.stacked();
        let s = 2f64.sqrt();
        let dense = p.to_dense();
        let expect_a = dense.matmul(&a).unwrap().scaled(s);
        let expect_b = dense.matvec(&b).unwrap();
        assert!(sa.max_abs_diff(&expect_a) < 1e-12);
        for (x, y) in sb.iter().zip(&expect_b) {
            assert!((x - s * y).abs() < 1e-12);
        }
        for i in 0..8 {
            assert_eq!(shards.shard(i).0.rows(), 2);
        }
    }

    #[test]
    fn full_responder_set_gives_exact_gradient() {
        let a = gaussian(16, 3, 5);
        let b = gaussian(16, 1, 6).into_vec();
        let part = Partition::new(16, 4).unwrap();
        let x = [0.3, -1.0, 2.0];
        let exact = full_gradient(&a, &b, &x).unwrap();
        for kind in ProjectionKind::ALL.into_iter().filter(|k| k.is_orthonormal()) {
            let p = Projection::build(kind, 16, 7).unwrap();
            let shards = encode_distribute(&a, &b, &p, &part, 16).unwrap();
            let g = aggregated_gradient(&shards, &[0, 1, 2, 3], &x).unwrap();
            for (u, v) in g.iter().zip(&exact) {
                assert!((u - v).abs() < 1e-10, "{kind}");
            }
            assert!((shards.objective(&x).unwrap() - sq_dist(&a.matvec(&x).unwrap(), &b)).abs() < 1e-9);
        }
    }

    #[test]
    fn aggregated_equals_induced_sketch_gradient() {
        use crate::sketch::{explicit_sketch_matrix, BlockSample};
        let a = gaussian(16, 3, 8);
        let b = gaussian(16, 1, 9).into_vec();
        let part = Partition::new(16, 4).unwrap();
        let p = Projection::build(ProjectionKind::BlockSrht, 16, 1).unwrap();
        let shards = encode_distribute(&a, &b, &p, &part, 8).unwrap();
        let responders = [1, 3];
        let x = [1.0, 0.5, -0.25];
        let g = aggregated_gradient(&shards, &responders, &x).unwrap();
        let s = explicit_sketch_matrix(&p, &BlockSample::with_indices(responders.to_vec(), 4).unwrap(), &part).unwrap();
        let sa = s.matmul(&a).unwrap();
        let sb = s.matvec(&b).unwrap();
        let expect = full_gradient(&sa, &sb, &x).unwrap();
        for (u, v) in g.iter().zip(&expect) {
            assert!((u - v).abs() < 1e-10);
        }
        assert!(aggregated_gradient(&shards, &[4], &x).is_err());
        assert!(aggregated_gradient(&shards, &[0], &[1.0]).is_err());
    }
}

use std::fmt::Write as _;

use itertools::Itertools;
use rand::seq::index;

use super::{aggregated_gradient, full_gradient, norm, simulate_round, sq_dist, EncodedShards, StragglerModel};
use crate::error::{Error, Result};
use crate::linalg::matrix::axpy;
use crate::linalg::{least_squares, spectral_norm, symmetric_spectral_norm, DenseMatrix, Partition};
use crate::rng::{stream_rng, Stream};
use crate::sketch::{check_enumeration, Projection};

/// Runs abort once `‖x − x*‖₂` exceeds this.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Contraction factors are tracked up to this dimension.
const CONTRACTION_MAX_DIM: usize = 16;

/// Step-size schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    /// `x ← x − ξ ĝ`.
    Fixed(f64),
    /// `x ← x − (factor · ξ) ĝ`, with `factor = K/q` compensating for the
    /// `q/K` shrinkage of the expected aggregated gradient.
    FixedRescaled { xi: f64, factor: f64 },
}

impl StepRule {
    pub fn rescaled(xi: f64, k: usize, q: usize) -> Self {
        StepRule::FixedRescaled {
            xi,
            factor: k as f64 / q as f64,
        }
    }

    /// The step actually applied.
    pub fn effective(&self) -> f64 {
        match *self {
            StepRule::Fixed(xi) => xi,
            StepRule::FixedRescaled { xi, factor } => xi * factor,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepRule::Fixed(xi) => xi > 0.0 && xi.is_finite(),
            StepRule::FixedRescaled { xi, factor } => xi > 0.0 && factor > 0.0 && (xi * factor).is_finite(),
        };
        if !ok {
            return Err(Error::Precondition(format!("step size must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// What happened at one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    /// Iteration index `t`, starting at 0.
    pub t: usize,
    /// Workers whose partial gradients were aggregated, ascending.
    pub responders: Vec<usize>,
    /// `‖ĝ^[t]‖₂`.
    pub gradient_norm: f64,
    /// `‖x^[t+1] − x*‖₂`.
    pub residual: f64,
    /// `‖A x^[t+1] − b‖₂²`.
    pub objective: f64,
    /// `γ_t = ‖I − 2ξ (S A)ᵀ(S A)‖₂` of the sketch used at this step.
    pub contraction: Option<f64>,
}

/// Iterate and history of a descent run.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub t: usize,
    pub step_rule: StepRule,
    pub x_star: Vec<f64>,
    /// `‖x^[0] − x*‖₂`.
    pub initial_residual: f64,
    pub history: Vec<IterationRecord>,
}

impl SolverState {
    /// Residuals `‖x^[t] − x*‖` for `t = 0..=T`.
    pub fn residual_curve(&self) -> Vec<f64> {
        std::iter::once(self.initial_residual)
            .chain(self.history.iter().map(|r| r.residual))
            .collect()
    }

    pub fn final_residual(&self) -> f64 {
        self.history.last().map_or(self.initial_residual, |r| r.residual)
    }

    /// Per-iteration CSV: `t,responders,residual,objective,gradient_norm`.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("t,responders,residual,objective,gradient_norm\n");
        for r in &self.history {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.t,
                r.responders.iter().join(";"),
                r.residual,
                r.objective,
                r.gradient_norm
            );
        }
        out
    }
}

struct Step {
    responders: Vec<usize>,
    gradient: Vec<f64>,
    gram: Option<DenseMatrix>,
}

fn contraction(gram: &DenseMatrix, xi: f64) -> f64 {
    let d = gram.rows();
    let mut b = gram.clone().scaled(-2.0 * xi);
    for i in 0..d {
        b[(i, i)] += 1.0;
    }
    symmetric_spectral_norm(&b).unwrap_or(f64::NAN)
}

fn descend(
    x0: &[f64],
    steps: usize,
    rule: StepRule,
    x_star: Vec<f64>,
    objective: impl Fn(&[f64]) -> Result<f64>,
    mut step: impl FnMut(usize, &[f64]) -> Result<Step>,
) -> Result<SolverState> {
    rule.validate()?;
    if x0.len() != x_star.len() {
        return Err(Error::dim(format!(
            "start point has length {}, problem has {} unknowns",
            x0.len(),
            x_star.len()
        )));
    }
    let xi = rule.effective();
    let mut state = SolverState {
        x: x0.to_vec(),
        t: 0,
        step_rule: rule,
        initial_residual: sq_dist(x0, &x_star).sqrt(),
        x_star,
        history: Vec::with_capacity(steps),
    };
    for t in 0..steps {
        let Step {
            responders,
            gradient,
            gram,
        } = step(t, &state.x)?;
        axpy(-xi, &gradient, &mut state.x);
        let residual = sq_dist(&state.x, &state.x_star).sqrt();
        state.t = t + 1;
        state.history.push(IterationRecord {
            t,
            responders,
            gradient_norm: norm(&gradient),
            residual,
            objective: objective(&state.x)?,
            contraction: gram.map(|g| contraction(&g, xi)),
        });
        if !residual.is_finite() || residual > DIVERGENCE_THRESHOLD {
            return Err(Error::Divergence { state: Box::new(state) });
        }
    }
    Ok(state)
}

/// Iterative-sketching steepest descent over the simulated network.
///
/// Each round draws fresh runtimes, aggregates the `q` fastest partial
/// gradients and steps by `step_rule`. Without `x_star`, the reference
/// solution is the least-squares solution of the stacked shards, which is
/// `A⁺b` for orthonormal projections.
pub fn ssd_run(
    shards: &EncodedShards,
    model: &StragglerModel,
    x0: &[f64],
    steps: usize,
    step_rule: StepRule,
    seed: u64,
    x_star: Option<Vec<f64>>,
) -> Result<SolverState> {
    if model.workers() != shards.blocks() {
        return Err(Error::Config(format!(
            "{} workers for {} blocks; one replica per block needs m = K",
            model.workers(),
            shards.blocks()
        )));
    }
    let x_star = match x_star {
        Some(x) => x,
        None => {
            let (a, b) = shards.stacked();
            least_squares(&a, &b)?
        }
    };
    let track = shards.dim() <= CONTRACTION_MAX_DIM;
    descend(
        x0,
        steps,
        step_rule,
        x_star,
        |x| shards.objective(x),
        |t, x| {
            let responders = simulate_round(model, seed, t as u64);
            let gradient = aggregated_gradient(shards, &responders, x)?;
            let gram = track.then(|| shards.sampled_gram(&responders));
            Ok(Step {
                responders,
                gradient,
                gram,
            })
        },
    )
}

fn reference_solution(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    least_squares(a, b)
}

/// Plain steepest descent on `‖Ax − b‖²`.
pub fn baseline_sd(a: &DenseMatrix, b: &[f64], x0: &[f64], xi: f64, steps: usize) -> Result<SolverState> {
    let x_star = reference_solution(a, b)?;
    let gram = (a.cols() <= CONTRACTION_MAX_DIM).then(|| a.gram());
    descend(
        x0,
        steps,
        StepRule::Fixed(xi),
        x_star,
        |x| Ok(sq_dist(&a.matvec(x)?, b)),
        |_, x| {
            Ok(Step {
                responders: Vec::new(),
                gradient: full_gradient(a, b, x)?,
                gram: gram.clone(),
            })
        },
    )
}

/// Mini-batch stochastic descent on the raw partition.
///
/// Each step draws `batch_blocks` distinct blocks uniformly and scales
/// their summed gradient by `K / batch_blocks`.
#[allow(clippy::too_many_arguments)]
pub fn baseline_minibatch(
    a: &DenseMatrix,
    b: &[f64],
    part: &Partition,
    batch_blocks: usize,
    x0: &[f64],
    xi: f64,
    steps: usize,
    seed: u64,
) -> Result<SolverState> {
    if a.rows() != part.n() || b.len() != part.n() {
        return Err(Error::dim("data does not match partition"));
    }
    if batch_blocks == 0 || batch_blocks > part.blocks() {
        return Err(Error::Config(format!(
            "batch of {batch_blocks} blocks out of {}",
            part.blocks()
        )));
    }
    let x_star = reference_solution(a, b)?;
    let blocks: Vec<(DenseMatrix, Vec<f64>)> = part.iter().map(|r| (a.row_block(r.clone()), b[r].to_vec())).collect();
    let weight = part.blocks() as f64 / batch_blocks as f64;
    let track = a.cols() <= CONTRACTION_MAX_DIM;
    descend(
        x0,
        steps,
        StepRule::Fixed(xi),
        x_star,
        |x| Ok(sq_dist(&a.matvec(x)?, b)),
        |t, x| {
            let mut rng = stream_rng(seed, Stream::Sampling, t as u64);
            let mut batch = index::sample(&mut rng, part.blocks(), batch_blocks).into_vec();
            batch.sort_unstable();
            let mut gradient = vec![0.0; a.cols()];
            let mut gram = track.then(|| DenseMatrix::zeros(a.cols(), a.cols()));
            for &j in &batch {
                let (aj, bj) = &blocks[j];
                axpy(weight, &full_gradient(aj, bj, x)?, &mut gradient);
                if let Some(g) = gram.as_mut() {
                    g.add_assign(&aj.gram().scaled(weight))?;
                }
            }
            Ok(Step {
                responders: batch,
                gradient,
                gram,
            })
        },
    )
}

/// `γ = λ₁(I_d − 2ξ (SA)ᵀ(SA))` for an explicit `r × N` sketch.
pub fn contraction_factor(a: &DenseMatrix, s: &DenseMatrix, xi: f64) -> Result<f64> {
    let sa = s.matmul(a)?;
    Ok(contraction(&sa.gram(), xi))
}

/// `ξ_opt = 2 / σ_max(A)²`.
pub fn xi_opt(a: &DenseMatrix) -> Result<f64> {
    let s = spectral_norm(a)?;
    if s == 0.0 {
        return Err(Error::Precondition("zero data matrix".into()));
    }
    Ok(2.0 / (s * s))
}

/// Direct solution of `min ‖G_p(Ax − b)‖²` without subsampling.
pub fn sketched_solution_oracle(a: &DenseMatrix, b: &[f64], p: &Projection) -> Result<Vec<f64>> {
    if !p.is_orthonormal() {
        return Err(Error::Precondition(format!(
            "{} projection is not orthonormal",
            p.kind()
        )));
    }
    let pa = p.apply(a)?;
    let pb = p.apply(&DenseMatrix::column(b))?.into_vec();
    least_squares(&pa, &pb)
}

/// Mean of `ĝ` over every `q`-subset of workers.
pub fn exhaustive_gradient_mean(shards: &EncodedShards, q: usize, x: &[f64]) -> Result<Vec<f64>> {
    let count = check_enumeration(shards.blocks(), q)?;
    let mut mean = vec![0.0; shards.dim()];
    for subset in (0..shards.blocks()).combinations(q) {
        axpy(1.0, &aggregated_gradient(shards, &subset, x)?, &mut mean);
    }
    mean.iter_mut().for_each(|v| *v /= count as f64);
    Ok(mean)
}

/// Mean of one update `x − ξ̃ ĝ` over every `q`-subset of workers.
pub fn exhaustive_step_mean(shards: &EncodedShards, q: usize, x: &[f64], rule: StepRule) -> Result<Vec<f64>> {
    let count = check_enumeration(shards.blocks(), q)?;
    let xi = rule.effective();
    let mut mean = vec![0.0; shards.dim()];
    for subset in (0..shards.blocks()).combinations(q) {
        let g = aggregated_gradient(shards, &subset, x)?;
        let next: Vec<f64> = x.iter().zip(&g).map(|(xi_, gi)| xi_ - xi * gi).collect();
        axpy(1.0, &next, &mut mean);
    }
    mean.iter_mut().for_each(|v| *v /= count as f64);
    Ok(mean)
}

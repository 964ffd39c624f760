use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::config::{ExperimentConfig, Method};
use super::data::{gen_data, Dataset};
use crate::coded::{
    baseline_minibatch, baseline_sd, encode_distribute, ssd_run, xi_opt, EncodedShards, RuntimeLaw, SolverState,
    StepRule, StragglerModel,
};
use crate::error::{Error, Result};
use crate::linalg::{block_scores, orthonormal_basis, DenseMatrix, LeverageProfile, Partition};
use crate::rng::derive_seed;
use crate::sketch::{Projection, ProjectionKind};

/// Block layout a projection runs on.
///
/// Hadamard kinds need a power-of-two `N`. Other sizes are zero-padded to
/// the next power of two, with `τ` rounded down to a power of two and `r`
/// scaled to keep the same sketch ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub k: usize,
    pub r: usize,
}

impl Layout {
    pub fn for_kind(cfg: &ExperimentConfig, kind: ProjectionKind) -> Result<Self> {
        let plain = Layout {
            n: cfg.n,
            k: cfg.k,
            r: cfg.r,
        };
        if !kind.is_hadamard() || cfg.n.is_power_of_two() {
            return Ok(plain);
        }
        let n = cfg.n.next_power_of_two();
        let tau = 1usize << cfg.tau().ilog2();
        let r_scaled = cfg.r as f64 * n as f64 / cfg.n as f64;
        let r = ((r_scaled / tau as f64).round() as usize).clamp(1, n / tau) * tau;
        let layout = Layout { n, k: n / tau, r };
        if r <= cfg.d {
            return Err(Error::Config(format!(
                "padded sketch size {r} does not exceed d = {}",
                cfg.d
            )));
        }
        Ok(layout)
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
}

/// Seed of repeat `rep`.
pub fn repeat_seed(cfg: &ExperimentConfig, rep: usize) -> u64 {
    derive_seed(cfg.seed, rep as u64)
}

/// Mean-loss step unit `ξ_opt(A) / N` that the step factors multiply.
pub fn base_step(data: &Dataset) -> Result<f64> {
    Ok(xi_opt(&data.a)? / data.a.rows() as f64)
}

struct SketchSetup {
    shards: EncodedShards,
    model: StragglerModel,
    layout: Layout,
}

fn pad(data: &Dataset, n: usize) -> (DenseMatrix, Vec<f64>) {
    let mut b = data.b.clone();
    b.resize(n, 0.0);
    (data.a.pad_rows(n), b)
}

fn prepare(cfg: &ExperimentConfig, kind: ProjectionKind, data: &Dataset, seed: u64) -> Result<SketchSetup> {
    let layout = Layout::for_kind(cfg, kind)?;
    let part = layout.partition()?;
    let p = Projection::build(kind, layout.n, seed)?;
    let (a, b) = pad(data, layout.n);
    let shards = encode_distribute(&a, &b, &p, &part, layout.r)?;
    let shift = cfg.runtime_shift.unwrap_or(part.tau() as f64 / part.n() as f64);
    let law = RuntimeLaw::ShiftedExponential {
        shift,
        rate: cfg.runtime_rate,
    };
    let model = StragglerModel::new(layout.k, layout.q(), law)?;
    Ok(SketchSetup { shards, model, layout })
}

enum Runner {
    Sketch(SketchSetup),
    Sd,
    MiniBatch,
}

impl Runner {
    fn new(cfg: &ExperimentConfig, method: Method, data: &Dataset, seed: u64) -> Result<Self> {
        Ok(match method {
            Method::Sketch(kind) => Runner::Sketch(prepare(cfg, kind, data, seed)?),
            Method::Sd => Runner::Sd,
            Method::MiniBatch => Runner::MiniBatch,
        })
    }

    /// Runs `steps` iterations at step `xi` from the origin.
    ///
    /// Sketched runs rescale by `K/q` on top of the `√(N/r)` embedding.
    fn run(&self, cfg: &ExperimentConfig, data: &Dataset, xi: f64, steps: usize, seed: u64) -> Result<SolverState> {
        let x0 = vec![0.0; cfg.d];
        match self {
            Runner::Sketch(s) => ssd_run(
                &s.shards,
                &s.model,
                &x0,
                steps,
                StepRule::rescaled(xi, s.layout.k, s.layout.q()),
                seed,
                Some(data.x_star.clone()),
            ),
            Runner::Sd => baseline_sd(&data.a, &data.b, &x0, xi, steps),
            Runner::MiniBatch => {
                let part = Partition::new(cfg.n, cfg.k)?;
                baseline_minibatch(&data.a, &data.b, &part, cfg.q(), &x0, xi, steps, seed)
            }
        }
    }
}

/// Residual curve of one run, `+∞` from the point of divergence on.
fn curve(result: Result<SolverState>, steps: usize) -> Result<(Vec<f64>, bool)> {
    match result {
        Ok(state) => Ok((state.residual_curve(), false)),
        Err(Error::Divergence { state }) => {
            let mut c = state.residual_curve();
            c.resize(steps + 1, f64::INFINITY);
            Ok((c, true))
        }
        Err(e) => Err(e),
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        v.to_string()
    }
}

fn sorted_methods(cfg: &ExperimentConfig) -> Vec<Method> {
    let mut methods = cfg.methods.clone();
    methods.sort_by_key(|m| m.name());
    methods.dedup();
    methods
}

/// Final residual versus step size.
#[derive(Clone, Debug, PartialEq)]
pub struct Fig1 {
    /// `(step factor, method, mean final residual)`, sorted by factor then
    /// method name. Cells where any repeat diverged hold `+∞`.
    pub cells: Vec<(i32, Method, f64)>,
}

impl Fig1 {
    pub fn csv(&self) -> String {
        let mut out = String::from("step_factor,method,residual,log10_residual\n");
        for (f, m, v) in &self.cells {
            let _ = writeln!(out, "{f},{m},{},{}", fmt_value(*v), fmt_value(v.log10()));
        }
        out
    }

    pub fn get(&self, factor: i32, method: Method) -> Option<f64> {
        self.cells
            .iter()
            .find(|(f, m, _)| *f == factor && *m == method)
            .map(|c| c.2)
    }
}

pub fn run_fig1(cfg: &ExperimentConfig) -> Result<Fig1> {
    cfg.validate()?;
    let methods = sorted_methods(cfg);
    let mut factors = cfg.step_factors.clone();
    factors.sort_unstable();
    factors.dedup();
    let mut sums: BTreeMap<(i32, usize), f64> = BTreeMap::new();
    for rep in 0..cfg.repeats {
        let seed = repeat_seed(cfg, rep);
        let data = gen_data(cfg, seed)?;
        let unit = base_step(&data)?;
        for (mi, &method) in methods.iter().enumerate() {
            let runner = Runner::new(cfg, method, &data, seed)?;
            for &f in &factors {
                let xi = unit * 10f64.powi(f);
                let (c, diverged) = curve(runner.run(cfg, &data, xi, cfg.steps, seed), cfg.steps)?;
                let v = if diverged { f64::INFINITY } else { c[cfg.steps] };
                *sums.entry((f, mi)).or_insert(0.0) += v;
            }
        }
    }
    let cells = sums
        .into_iter()
        .map(|((f, mi), s)| (f, methods[mi], s / cfg.repeats as f64))
        .collect();
    Ok(Fig1 { cells })
}

/// Residual versus iteration at one step size.
#[derive(Clone, Debug, PartialEq)]
pub struct Fig2 {
    pub step_factor: i32,
    /// Mean residual `‖x^[t] − x*‖` for `t = 0..=steps`, keyed by method
    /// name.
    pub curves: BTreeMap<String, Vec<f64>>,
    /// Methods that diverged in at least one repeat.
    pub diverged: Vec<String>,
}

impl Fig2 {
    pub fn csv(&self) -> String {
        let mut out = String::from("method,t,residual\n");
        for (m, c) in &self.curves {
            for (t, v) in c.iter().enumerate() {
                let _ = writeln!(out, "{m},{t},{}", fmt_value(*v));
            }
        }
        out
    }
}

pub fn run_fig2(cfg: &ExperimentConfig) -> Result<Fig2> {
    cfg.validate()?;
    let methods = sorted_methods(cfg);
    let mut curves: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut diverged = Vec::new();
    for rep in 0..cfg.repeats {
        let seed = repeat_seed(cfg, rep);
        let data = gen_data(cfg, seed)?;
        let xi = base_step(&data)? * 10f64.powi(cfg.fig2_factor);
        for &method in &methods {
            let runner = Runner::new(cfg, method, &data, seed)?;
            let (c, div) = curve(runner.run(cfg, &data, xi, cfg.steps, seed), cfg.steps)?;
            if div && !diverged.contains(&method.name().to_string()) {
                diverged.push(method.name().to_string());
            }
            let acc = curves
                .entry(method.name().to_string())
                .or_insert_with(|| vec![0.0; cfg.steps + 1]);
            for (a, v) in acc.iter_mut().zip(c) {
                *a += v / cfg.repeats as f64;
            }
        }
    }
    diverged.sort();
    Ok(Fig2 {
        step_factor: cfg.fig2_factor,
        curves,
        diverged,
    })
}

/// Block leverage before and after each projection.
#[derive(Clone, Debug, PartialEq)]
pub struct Fig3 {
    /// Keyed by projection name, with `raw` for the unprojected basis.
    pub profiles: BTreeMap<String, LeverageProfile>,
}

impl Fig3 {
    pub fn csv(&self) -> String {
        let mut out = String::from("projection,block,score,normalized\n");
        for (name, p) in &self.profiles {
            for (i, (s, z)) in p.block_scores.iter().zip(&p.normalized_block_scores).enumerate() {
                let _ = writeln!(out, "{name},{i},{s},{z}");
            }
        }
        out
    }

    /// `max / min` block score of one profile.
    pub fn flatness(&self, name: &str) -> Option<f64> {
        self.profiles
            .get(name)
            .map(|p| p.max_block_score() / p.min_block_score())
    }
}

/// Block leverage of `ΠU` where `U` spans the data of repeat 0.
pub fn run_fig3(cfg: &ExperimentConfig) -> Result<Fig3> {
    cfg.validate()?;
    let seed = repeat_seed(cfg, 0);
    let data = gen_data(cfg, seed)?;
    let u = orthonormal_basis(&data.a)?;
    let mut profiles = BTreeMap::new();
    profiles.insert("raw".to_string(), block_scores(&u, &Partition::new(cfg.n, cfg.k)?));
    for method in sorted_methods(cfg) {
        let Method::Sketch(kind) = method else { continue };
        let layout = Layout::for_kind(cfg, kind)?;
        let p = Projection::build(kind, layout.n, seed)?;
        let pu = p.apply(&u.pad_rows(layout.n))?;
        profiles.insert(kind.name().to_string(), block_scores(&pu, &layout.partition()?));
    }
    Ok(Fig3 { profiles })
}

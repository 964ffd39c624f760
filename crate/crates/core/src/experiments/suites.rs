//! Self-checks reported as `test,param,value,threshold,pass` rows.

use std::fmt::Write as _;

use rand_distr::{Distribution, StandardNormal};

use crate::coded::{
    aggregated_gradient, encode_distribute, exhaustive_gradient_mean, exhaustive_step_mean, full_gradient,
    sketched_solution_oracle, StepRule,
};
use crate::error::Result;
use crate::linalg::{least_squares, DenseMatrix, Partition};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::security::{
    distinguisher_enumeration, ensemble_size, secrecy_frequency_test, secrecy_threshold, FiniteOrthogroup, KeyDraws,
};
use crate::sketch::{gram_expectation_oracle, Projection, ProjectionKind};

const EXACT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub test: String,
    pub param: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckRow {
    fn at_most(test: &str, param: String, value: f64, threshold: f64) -> Self {
        Self {
            test: test.into(),
            param,
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub rows: Vec<CheckRow>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("test,param,value,threshold,pass\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.test, r.param, r.value, r.threshold, r.pass);
        }
        out
    }
}

fn gaussian(rows: usize, cols: usize, seed: u64, index: u64) -> DenseMatrix {
    let mut rng = stream_rng(seed, Stream::Data, index);
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn rel_diff(x: &[f64], y: &[f64]) -> f64 {
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    max_abs_diff(x, y) / scale
}

/// Cases `(kind, N, K, q)` for the exact expectation checks.
const EXPECTATION_CASES: [(ProjectionKind, usize, usize, usize); 4] = [
    (ProjectionKind::HaarOrthonormal, 12, 6, 3),
    (ProjectionKind::Identity, 12, 6, 3),
    (ProjectionKind::GarbledBlockSrht, 16, 8, 4),
    (ProjectionKind::BlockSrht, 16, 8, 4),
];

/// Exact unbiasedness and solution-preservation checks on small problems.
pub fn oracle_suite(seed: u64) -> Result<SuiteReport> {
    let mut rows = Vec::new();
    let d = 4;
    for (case, &(kind, n, k, q)) in EXPECTATION_CASES.iter().enumerate() {
        let s = derive_seed(seed, case as u64);
        let part = Partition::new(n, k)?;
        let p = Projection::build(kind, n, s)?;
        let param = format!("{kind} N={n} K={k} q={q}");

        let gram = gram_expectation_oracle(&p, &part, q)?;
        let dev = gram.max_abs_diff(&DenseMatrix::identity(n));
        rows.push(CheckRow::at_most("gram_expectation", param.clone(), dev, EXACT_TOL));

        let a = gaussian(n, d, s, 0);
        let b = gaussian(n, 1, s, 1).into_vec();
        let x = gaussian(d, 1, s, 2).into_vec();
        let shards = encode_distribute(&a, &b, &p, &part, n)?;
        let g = full_gradient(&a, &b, &x)?;

        let mean = exhaustive_gradient_mean(&shards, q, &x)?;
        let target: Vec<f64> = g.iter().map(|v| v * q as f64 / k as f64).collect();
        rows.push(CheckRow::at_most(
            "gradient_mean",
            param.clone(),
            rel_diff(&mean, &target),
            EXACT_TOL,
        ));

        let xi = 1e-2;
        let step = exhaustive_step_mean(&shards, q, &x, StepRule::rescaled(xi, k, q))?;
        let sd: Vec<f64> = x.iter().zip(&g).map(|(xv, gv)| xv - xi * gv).collect();
        rows.push(CheckRow::at_most(
            "rescaled_step_mean",
            param.clone(),
            rel_diff(&step, &sd),
            EXACT_TOL,
        ));

        let all: Vec<usize> = (0..k).collect();
        let full = aggregated_gradient(&shards, &all, &x)?;
        rows.push(CheckRow::at_most(
            "full_network_gradient",
            param.clone(),
            rel_diff(&full, &g),
            EXACT_TOL,
        ));

        let sketched = sketched_solution_oracle(&a, &b, &p)?;
        let direct = least_squares(&a, &b)?;
        rows.push(CheckRow::at_most(
            "sketched_solution",
            param,
            rel_diff(&sketched, &direct),
            EXACT_TOL,
        ));
    }
    Ok(SuiteReport { rows })
}

/// Distinguisher, group one-time-pad and key-count checks.
pub fn secrecy_suite(seed: u64) -> Result<SuiteReport> {
    let mut rows = Vec::new();
    let (correct, total) = distinguisher_enumeration()?;
    rows.push(CheckRow {
        test: "srht_distinguisher".into(),
        param: "N=2".into(),
        value: correct as f64,
        threshold: total as f64,
        pass: correct == total,
    });

    let groups = [
        ("signed-permutations N=2", FiniteOrthogroup::signed_permutations(2)?),
        ("signed-permutations N=3", FiniteOrthogroup::signed_permutations(3)?),
        ("permutations N=4", FiniteOrthogroup::permutation_matrices(4)?),
    ];
    for (i, (name, g)) in groups.iter().enumerate() {
        let exact = secrecy_frequency_test(g, KeyDraws::Exhaustive)?;
        rows.push(CheckRow::at_most(
            "group_secrecy_exact",
            name.to_string(),
            exact,
            EXACT_TOL,
        ));
        let trials = 100 * g.len();
        let draws = KeyDraws::Sampled {
            trials,
            seed: derive_seed(seed, i as u64),
        };
        let sampled = secrecy_frequency_test(g, draws)?;
        let bound = secrecy_threshold(g.len(), trials);
        rows.push(CheckRow::at_most(
            "group_secrecy_sampled",
            format!("{name} trials={trials}"),
            sampled,
            bound,
        ));
    }

    let expected = [
        (ProjectionKind::BlockSrht, 4, 16u64),
        (ProjectionKind::GarbledBlockSrht, 4, 384),
        (ProjectionKind::Rademacher, 2, 16),
        (ProjectionKind::Rademacher, 4, 65536),
    ];
    for (kind, n, count) in expected {
        let got = ensemble_size(kind, n)?;
        let value: f64 = got.to_string().parse().unwrap_or(f64::NAN);
        rows.push(CheckRow {
            test: "ensemble_size".into(),
            param: format!("{kind} N={n}"),
            value,
            threshold: count as f64,
            pass: got == count.into(),
        });
    }
    Ok(SuiteReport { rows })
}

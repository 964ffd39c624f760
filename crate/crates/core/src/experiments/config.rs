//! Flat `key = value` experiment configuration.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! line    := blank | comment | entry
//! comment := '#' any*
//! entry   := key ws* '=' ws* value
//! value   := number | word | list          (list = value (',' value)*)
//! ```
//!
//! Unknown keys are rejected. Missing keys keep their defaults.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sketch::{ProjectionKind, SketchConfig};

/// Law of the synthetic data matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DataLaw {
    /// Gaussian with 10% of blocks scaled ×10, then each entry kept with
    /// probability `density`.
    GaussianSparse { density: f64 },
    /// Gaussian with 10% of blocks scaled ×10.
    GaussianDense,
    /// i.i.d. Student-t entries.
    StudentT { dof: f64 },
}

impl DataLaw {
    pub fn name(&self) -> &'static str {
        match self {
            DataLaw::GaussianSparse { .. } => "gaussian-sparse",
            DataLaw::GaussianDense => "gaussian-dense",
            DataLaw::StudentT { .. } => "student-t",
        }
    }
}

/// One curve in an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Iterative sketching through the simulated network.
    Sketch(ProjectionKind),
    /// Plain steepest descent.
    Sd,
    /// Mini-batch stochastic descent on the raw blocks.
    MiniBatch,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Sketch(kind) => kind.name(),
            Method::Sd => "sd",
            Method::MiniBatch => "minibatch",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sd" => Ok(Method::Sd),
            "minibatch" => Ok(Method::MiniBatch),
            other => other.parse().map(Method::Sketch),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub r: usize,
    pub dist: DataLaw,
    pub noise_std: f64,
    pub steps: usize,
    /// Exponents `e` of the step sizes `10^e · ξ_opt` swept by `fig1`.
    pub step_factors: Vec<i32>,
    /// Exponent used by `fig2`.
    pub fig2_factor: i32,
    pub repeats: usize,
    pub seed: u64,
    /// `None` means `τ/N`.
    pub runtime_shift: Option<f64>,
    pub runtime_rate: f64,
    pub methods: Vec<Method>,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            d: 40,
            k: 100,
            r: 1000,
            dist: DataLaw::GaussianSparse { density: 0.1 },
            noise_std: 1.0,
            steps: 100,
            step_factors: (-3..=3).collect(),
            fig2_factor: 2,
            repeats: 6,
            seed: 0,
            runtime_shift: None,
            runtime_rate: 1.0,
            methods: vec![
                Method::Sketch(ProjectionKind::BlockSrht),
                Method::Sketch(ProjectionKind::GarbledBlockSrht),
                Method::Sketch(ProjectionKind::HaarOrthonormal),
                Method::Sketch(ProjectionKind::Gaussian),
                Method::Sketch(ProjectionKind::Rademacher),
                Method::Sd,
                Method::MiniBatch,
            ],
            output: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    pub fn tau(&self) -> usize {
        self.n / self.k
    }

    pub fn q(&self) -> usize {
        self.r / self.tau()
    }

    pub fn validate(&self) -> Result<()> {
        SketchConfig {
            n: self.n,
            d: self.d,
            k: self.k,
            r: self.r,
            seed: self.seed,
        }
        .validate()?;
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(format!("noise_std must be >= 0, got {}", self.noise_std)));
        }
        if self.runtime_rate.is_nan()
            || self.runtime_rate <= 0.0
            || self.runtime_shift.is_some_and(|s| s.is_nan() || s < 0.0)
        {
            return Err(Error::Config("runtime shift must be >= 0 and rate > 0".into()));
        }
        match self.dist {
            DataLaw::GaussianSparse { density } if !(density > 0.0 && density <= 1.0) => {
                Err(Error::Config(format!("density must lie in (0, 1], got {density}")))
            }
            DataLaw::StudentT { dof } if dof.is_nan() || dof <= 0.0 => {
                Err(Error::Config(format!("dof must be positive, got {dof}")))
            }
            _ => Ok(()),
        }
    }

    /// Renders the config in the `key = value` format.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let join = |v: &[String]| v.join(",");
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "d = {}", self.d);
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "r = {}", self.r);
        let _ = writeln!(s, "dist = {}", self.dist.name());
        match self.dist {
            DataLaw::GaussianSparse { density } => {
                let _ = writeln!(s, "density = {density}");
            }
            DataLaw::StudentT { dof } => {
                let _ = writeln!(s, "dof = {dof}");
            }
            DataLaw::GaussianDense => {}
        }
        let _ = writeln!(s, "noise_std = {}", self.noise_std);
        let _ = writeln!(s, "steps = {}", self.steps);
        let factors: Vec<String> = self.step_factors.iter().map(|f| f.to_string()).collect();
        let _ = writeln!(s, "step_factors = {}", join(&factors));
        let _ = writeln!(s, "fig2_factor = {}", self.fig2_factor);
        let _ = writeln!(s, "repeats = {}", self.repeats);
        let _ = writeln!(s, "seed = {}", self.seed);
        match self.runtime_shift {
            Some(v) => {
                let _ = writeln!(s, "runtime_shift = {v}");
            }
            None => {
                let _ = writeln!(s, "runtime_shift = auto");
            }
        }
        let _ = writeln!(s, "runtime_rate = {}", self.runtime_rate);
        let methods: Vec<String> = self.methods.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(s, "methods = {}", join(&methods));
        let _ = writeln!(s, "output = {}", self.output.display());
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut dist_name: Option<String> = None;
        let mut density = 0.1;
        let mut dof = 3.0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let err = |e: &dyn fmt::Display| Error::Config(format!("line {}: {key}: {e}", lineno + 1));
            macro_rules! num {
                () => {
                    value.parse().map_err(|e| err(&e))?
                };
            }
            match key {
                "n" => cfg.n = num!(),
                "d" => cfg.d = num!(),
                "k" => cfg.k = num!(),
                "r" => cfg.r = num!(),
                "dist" => dist_name = Some(value.to_string()),
                "density" => density = num!(),
                "dof" => dof = num!(),
                "noise_std" => cfg.noise_std = num!(),
                "steps" => cfg.steps = num!(),
                "step_factors" => {
                    cfg.step_factors = value
                        .split(',')
                        .map(|v| v.trim().parse().map_err(|e| err(&e)))
                        .collect::<Result<_>>()?
                }
                "fig2_factor" => cfg.fig2_factor = num!(),
                "repeats" => cfg.repeats = num!(),
                "seed" => cfg.seed = num!(),
                "runtime_shift" => cfg.runtime_shift = if value == "auto" { None } else { Some(num!()) },
                "runtime_rate" => cfg.runtime_rate = num!(),
                "methods" => {
                    cfg.methods = value
                        .split(',')
                        .map(|v| v.trim().parse::<Method>().map_err(|e| err(&e)))
                        .collect::<Result<_>>()?
                }
                "output" => cfg.output = PathBuf::from(value),
                other => return Err(Error::Config(format!("line {}: unknown key {other:?}", lineno + 1))),
            }
        }
        if let Some(name) = dist_name {
            cfg.dist = match name.as_str() {
                "gaussian-sparse" => DataLaw::GaussianSparse { density },
                "gaussian-dense" => DataLaw::GaussianDense,
                "student-t" => DataLaw::StudentT { dof },
                other => return Err(Error::Config(format!("unknown dist {other:?}"))),
            };
        } else if let DataLaw::GaussianSparse { .. } = cfg.dist {
            cfg.dist = DataLaw::GaussianSparse { density };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

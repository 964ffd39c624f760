use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use super::config::{DataLaw, ExperimentConfig};
use crate::error::{Error, Result};
use crate::linalg::{least_squares, DenseMatrix, Partition};
use crate::rng::{stream_rng, Stream};

/// Fraction of blocks whose rows are amplified in the Gaussian laws.
const HEAVY_BLOCK_FRACTION: f64 = 0.1;
const HEAVY_BLOCK_GAIN: f64 = 10.0;

/// Synthetic regression problem `b = A w + ε`.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    /// Planted coefficients.
    pub w: Vec<f64>,
    /// Least-squares solution `A⁺b`.
    pub x_star: Vec<f64>,
}

/// Draws a dataset from the configured law using the data stream of `seed`.
pub fn gen_data(cfg: &ExperimentConfig, seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    let part = Partition::new(cfg.n, cfg.k)?;
    let mut rng = stream_rng(seed, Stream::Data, 0);
    let (n, d) = (cfg.n, cfg.d);
    let mut a = match cfg.dist {
        DataLaw::StudentT { dof } => {
            let law = StudentT::new(dof).map_err(|e| Error::Config(e.to_string()))?;
            DenseMatrix::from_fn(n, d, |_, _| law.sample(&mut rng))
        }
        DataLaw::GaussianDense | DataLaw::GaussianSparse { .. } => {
            let mut a = DenseMatrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng));
            let heavy = ((HEAVY_BLOCK_FRACTION * cfg.k as f64).round() as usize).max(1);
            for blk in index::sample(&mut rng, cfg.k, heavy) {
                for i in part.block(blk) {
                    a.row_mut(i).iter_mut().for_each(|v| *v *= HEAVY_BLOCK_GAIN);
                }
            }
            a
        }
    };
    if let DataLaw::GaussianSparse { density } = cfg.dist {
        for v in a.as_mut_slice() {
            if !rng.gen_bool(density) {
                *v = 0.0;
            }
        }
    }
    let w: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut b = a.matvec(&w)?;
    if cfg.noise_std > 0.0 {
        for v in &mut b {
            let e: f64 = StandardNormal.sample(&mut rng);
            *v += cfg.noise_std * e;
        }
    }
    let x_star = least_squares(&a, &b)?;
    Ok(Dataset { a, b, w, x_star })
}

impl Dataset {
    /// Writes `A.csv`, `b.csv`, `w.csv` and `x_star.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let put =
            |name: &str, m: &DenseMatrix| -> Result<()> { m.write_csv(BufWriter::new(File::create(dir.join(name))?)) };
        put("A.csv", &self.a)?;
        put("b.csv", &DenseMatrix::column(&self.b))?;
        put("w.csv", &DenseMatrix::column(&self.w))?;
        put("x_star.csv", &DenseMatrix::column(&self.x_star))
    }

    pub fn read_from(dir: &Path) -> Result<Self> {
        let get = |name: &str| DenseMatrix::read_csv(File::open(dir.join(name))?);
        let a = get("A.csv")?;
        let b = get("b.csv")?.into_vec();
        let w = get("w.csv")?.into_vec();
        let x_star = get("x_star.csv")?.into_vec();
        if b.len() != a.rows() || w.len() != a.cols() || x_star.len() != a.cols() {
            return Err(Error::Parse(format!("inconsistent dataset files in {}", dir.display())));
        }
        Ok(Self { a, b, w, x_star })
    }
}

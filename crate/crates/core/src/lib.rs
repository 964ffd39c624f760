//! Block-subsampled orthonormal sketches for distributed least squares.
//!
//! A data matrix `A` is mixed by a random orthonormal transform `Π`
//! (dense Haar, block-SRHT `ĤD`, or garbled block-SRHT `PĤD`), split into
//! `K` blocks of `τ` rows, and handed to `K` simulated workers. Each round
//! the server aggregates partial gradients from the `q` fastest workers,
//! which amounts to steepest descent on a fresh block-sampled sketch
//! `S_p A` every iteration. The transform also hides `A` from the workers.
//!
//! Modules:
//! - [`linalg`]: FWHT, Householder QR, spectral norms, leverage scores.
//! - [`sketch`]: projections, block sampling, sketch assembly.
//! - [`coded`]: straggler simulation and iterative-sketching descent.
//! - [`security`]: garbling, ensemble sizes, secrecy experiments.
//! - [`experiments`]: synthetic data and the desk-scale experiment drivers.

pub mod coded;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod rng;
pub mod security;
pub mod sketch;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, LeverageProfile, Partition};
pub use sketch::{BlockSample, Projection, ProjectionKind, SketchConfig};

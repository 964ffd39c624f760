//! Synthetic experiments: data generation, figure sweeps and self-checks.

mod config;
mod data;
mod figures;
mod suites;

pub use config::{DataLaw, ExperimentConfig, Method};
pub use data::{gen_data, Dataset};
pub use figures::{base_step, repeat_seed, run_fig1, run_fig2, run_fig3, Fig1, Fig2, Fig3, Layout};
pub use suites::{oracle_suite, secrecy_suite, CheckRow, SuiteReport};

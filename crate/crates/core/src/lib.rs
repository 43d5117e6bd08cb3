//! Admissibility-based detection of exponential dichotomies.
//!
//! A linear cocycle `x_{n+1} = A_n x_n` has an exponential dichotomy exactly
//! when `(T x)_n = x_n - A_{n-1} x_{n-1}` is invertible on an admissible
//! sequence space. This crate works with finite windows of such cocycles:
//!
//! - [`seqspace`]: `ℓ^p`, `ℓ^∞` and Orlicz norms, geometric convolution bounds.
//! - [`cocycle`]: products, certificates `(P_n, D, λ, μ)` and their verification, test families.
//! - [`dichotomy`]: finite sections of `T` and `B(z)`, solvers, inverse norms,
//!   projection recovery and rate extraction.
//! - [`nonuniform`]: adapted norms along trajectories, the operators `R_x`,
//!   splitting recovery and the functions `C(x)`, `K(x)`.
//! - [`cli_io`]: JSON schemas, reports and the command-line driver.

pub mod cli_io;
pub mod cocycle;
pub mod dichotomy;
pub mod error;
mod linalg;
pub mod nonuniform;
pub mod seqspace;
pub mod serde_mat;

use serde::{Deserialize, Serialize};

pub use cocycle::{Cocycle, DichotomyCertificate, ExampleKind, NormSequence, Window};
pub use error::{Error, Result};
pub use seqspace::{SequenceSpace, WindowedSequence};

/// Numerical tolerances; every field can be overridden from the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub verify_tol: f64,
    pub proj_tol: f64,
    pub inv_cond_max: f64,
    pub eig_tol: f64,
    pub tail_tol: f64,
    pub inv_norm_max: f64,
    pub rate_tol: f64,
    /// Iterations of the inverse-norm estimate for general spaces.
    pub estimate_iters: usize,
    /// Factor `inverse_norm / half-window inverse_norm` at which a finite section
    /// is classified as not invertible.
    pub growth_threshold: f64,
    pub series_tol: f64,
    pub split_tol: f64,
    pub d_slack: f64,
    pub seed: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            verify_tol: 1e-8,
            proj_tol: 1e-8,
            inv_cond_max: 1e12,
            eig_tol: 1e-12,
            tail_tol: 1e-12,
            inv_norm_max: 1e8,
            rate_tol: 1e-3,
            estimate_iters: 64,
            growth_threshold: 1.9,
            series_tol: 1e-8,
            split_tol: 1e-8,
            d_slack: 1.05,
            seed: 0,
        }
    }
}

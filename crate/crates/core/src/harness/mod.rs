//! Metrics, experiment sweeps and the on-disk formats used by the CLI.

pub mod experiment;
pub mod io;

use crate::datagen::GroundTruth;
use crate::numerics::{norm2, sigma_norm_diag, sub};

/// `(‖ŵ − w*‖_Σ, ‖ŵ − w*‖₂)`.
pub fn param_error(w_hat: &[f64], truth: &GroundTruth) -> (f64, f64) {
    param_error_diag(w_hat, &truth.w_star, &truth.sigma_diag)
}

pub fn param_error_diag(w_hat: &[f64], w_star: &[f64], sigma_diag: &[f64]) -> (f64, f64) {
    let d = sub(w_hat, w_star);
    (sigma_norm_diag(&d, sigma_diag), norm2(&d))
}

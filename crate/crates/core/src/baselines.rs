//! Reference estimators: ordinary least squares, fixed-fraction hard
//! thresholding (TORRENT, fully corrective) and Huber regression by IRLS.

use crate::adacrr::FitResult;
use crate::datagen::{corrupted_count, torrent_counterexample, Dataset, GroundTruth};
use crate::error::{Error, Result};
use crate::numerics::{norm2, solve_least_squares_jittered, sub, DenseMatrix, DenseVector};
use serde::{Deserialize, Serialize};
use std::time::Instant;

pub fn ols_fit(data: &Dataset, truth: Option<&GroundTruth>) -> Result<FitResult> {
    let started = Instant::now();
    let w = solve_least_squares_jittered(&data.x, &data.y)?;
    let mut fit = FitResult::from_trace(vec![w], Vec::new(), started);
    if let Some(truth) = truth {
        fit.attach_errors(truth);
    }
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TorrentConfig {
    /// Assumed corruption fraction; `⌊(1−α) n⌋` points are kept.
    pub alpha: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for TorrentConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            max_iters: 100,
            tol: 1e-9,
        }
    }
}

/// Indices of the `keep` smallest magnitudes, ascending; ties go to the lower
/// index.
pub fn smallest_magnitudes(r: &[f64], keep: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..r.len()).collect();
    order.sort_by(|&i, &j| r[i].abs().total_cmp(&r[j].abs()).then(i.cmp(&j)));
    order.truncate(keep);
    order.sort_unstable();
    order
}

/// TORRENT from `w = 0`.
pub fn torrent_fit(data: &Dataset, cfg: &TorrentConfig, truth: Option<&GroundTruth>) -> Result<FitResult> {
    torrent_fit_from(data, cfg, &vec![0.0; data.p()], truth)
}

/// Alternates keeping the `⌊(1−α) n⌋` smallest residuals and refitting OLS on
/// them, starting from `w_init`.
pub fn torrent_fit_from(data: &Dataset, cfg: &TorrentConfig, w_init: &[f64], truth: Option<&GroundTruth>) -> Result<FitResult> {
    let started = Instant::now();
    if !(0.0..1.0).contains(&cfg.alpha) || cfg.max_iters == 0 {
        return Err(Error::InvalidConfig(format!("torrent needs alpha in [0,1) and max_iters >= 1, got {cfg:?}")));
    }
    let keep = data.n() - corrupted_count(cfg.alpha, data.n());
    if keep < data.p() {
        return Err(Error::InvalidConfig(format!("torrent keeps {keep} points but p = {}", data.p())));
    }
    let mut trace = vec![DenseVector::from(w_init.to_vec())];
    let mut sizes = Vec::new();
    for _ in 0..cfg.max_iters {
        let w = trace.last().expect("non-empty");
        let r = sub(&data.y, &data.x.matvec(w));
        let kept = smallest_magnitudes(&r, keep);
        sizes.push(kept.len());
        let sub_data = data.subset(&kept);
        let next = solve_least_squares_jittered(&sub_data.x, &sub_data.y)?;
        let moved = norm2(&sub(&next, w));
        trace.push(next);
        if moved < cfg.tol {
            break;
        }
    }
    let mut fit = FitResult::from_trace(trace, sizes, started);
    if let Some(truth) = truth {
        fit.attach_errors(truth);
    }
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub w_init: f64,
    pub w_final: f64,
}

/// Runs TORRENT on one counterexample instance from every starting point of
/// the grid for exactly `iters` iterations.
pub fn torrent_fixed_point_trajectory(n: usize, alpha: f64, w_init_grid: &[f64], iters: usize, seed: u64) -> Result<Vec<TrajectoryPoint>> {
    let (data, _) = torrent_counterexample(n, alpha, seed)?;
    let cfg = TorrentConfig { alpha, max_iters: iters, tol: 0.0 };
    w_init_grid
        .iter()
        .map(|&w0| {
            let fit = torrent_fit_from(&data, &cfg, &[w0], None)?;
            Ok(TrajectoryPoint { w_init: w0, w_final: fit.w_final[0] })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HuberConfig {
    pub delta: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for HuberConfig {
    fn default() -> Self {
        Self {
            delta: 1.345,
            max_iters: 200,
            tol: 1e-10,
        }
    }
}

pub fn huber_loss(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        0.5 * r * r
    } else {
        delta * a - 0.5 * delta * delta
    }
}

/// `Σ_i huber(y_i − x_iᵀ w)`.
pub fn huber_objective(data: &Dataset, w: &[f64], delta: f64) -> f64 {
    sub(&data.y, &data.x.matvec(w)).iter().map(|&r| huber_loss(r, delta)).sum()
}

/// Huber regression by iteratively reweighted least squares from the OLS fit,
/// with weights `min(1, δ/|r_i|)`.
pub fn huber_fit(data: &Dataset, cfg: &HuberConfig, truth: Option<&GroundTruth>) -> Result<FitResult> {
    let started = Instant::now();
    if !(cfg.delta > 0.0) || cfg.max_iters == 0 {
        return Err(Error::InvalidConfig(format!("huber needs delta > 0 and max_iters >= 1, got {cfg:?}")));
    }
    if data.n() < data.p() {
        return Err(Error::InvalidConfig(format!("huber needs n >= p, got n={}, p={}", data.n(), data.p())));
    }
    let p = data.p();
    let mut trace = vec![solve_least_squares_jittered(&data.x, &data.y)?];
    for _ in 0..cfg.max_iters {
        let w = trace.last().expect("non-empty");
        let r = sub(&data.y, &data.x.matvec(w));
        let mut xs = Vec::with_capacity(data.n() * p);
        let mut ys = Vec::with_capacity(data.n());
        for (i, &ri) in r.iter().enumerate() {
            let weight = if ri.abs() <= cfg.delta { 1.0 } else { cfg.delta / ri.abs() };
            let sw = weight.sqrt();
            xs.extend(data.x.row(i).iter().map(|v| sw * v));
            ys.push(sw * data.y[i]);
        }
        let weighted = DenseMatrix::new(data.n(), p, xs)?;
        let next = solve_least_squares_jittered(&weighted, &ys)?;
        let moved = norm2(&sub(&next, w));
        trace.push(next);
        if moved < cfg.tol {
            break;
        }
    }
    let mut fit = FitResult::from_trace(trace, Vec::new(), started);
    if let Some(truth) = truth {
        fit.attach_errors(truth);
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_dataset, CorruptionScheme, CorruptionSpec, NoiseSpec, SigmaSpec};
    use crate::numerics::{sigma_norm_diag, solve_least_squares};

    #[test]
    fn smallest_half_selection() {
        assert_eq!(smallest_magnitudes(&[0.1, 5.0, 0.2, 7.0], 2), vec![0, 2]);
        assert_eq!(smallest_magnitudes(&[1.0, -1.0, 1.0], 2), vec![0, 1]);
    }

    #[test]
    fn torrent_without_corruption_is_ols() {
        let (data, _) = gen_dataset(300, &[1.0, 2.0, -1.0], &SigmaSpec::Identity, &NoiseSpec::Gaussian { sigma: 1.0 }, &CorruptionSpec::none(), 1).unwrap();
        let cfg = TorrentConfig { alpha: 0.0, ..TorrentConfig::default() };
        let fit = torrent_fit(&data, &cfg, None).unwrap();
        let ols = solve_least_squares(&data.x, &data.y, 0.0).unwrap();
        assert_eq!(fit.w_final, ols);
        assert!(fit.set_sizes.iter().all(|&s| s == 300));
    }

    #[test]
    fn torrent_keeps_exact_subset_size() {
        let corruption = CorruptionSpec { alpha: 0.3, scheme: CorruptionScheme::UniformRange { lo: 5.0, hi: 50.0 } };
        let (data, _) = gen_dataset(301, &[1.0, -1.0], &SigmaSpec::Identity, &NoiseSpec::Gaussian { sigma: 0.5 }, &corruption, 2).unwrap();
        let cfg = TorrentConfig { alpha: 0.35, ..TorrentConfig::default() };
        let a = torrent_fit(&data, &cfg, None).unwrap();
        let b = torrent_fit(&data, &cfg, None).unwrap();
        assert!(a.set_sizes.iter().all(|&s| s == 301 - (0.35f64 * 301.0).floor() as usize));
        assert_eq!(a.w_trace, b.w_trace);
    }

    #[test]
    fn huber_with_large_delta_is_ols() {
        let (data, _) = gen_dataset(200, &[1.0, 2.0], &SigmaSpec::Identity, &NoiseSpec::Gaussian { sigma: 1.0 }, &CorruptionSpec::none(), 3).unwrap();
        let ols = solve_least_squares(&data.x, &data.y, 0.0).unwrap();
        let max_r = sub(&data.y, &data.x.matvec(&ols)).iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        let fit = huber_fit(&data, &HuberConfig { delta: max_r + 1.0, ..HuberConfig::default() }, None).unwrap();
        assert!(norm2(&sub(&fit.w_final, &ols)) < 1e-8);
    }

    #[test]
    fn huber_objective_is_monotone() {
        for seed in 0..5 {
            let corruption = CorruptionSpec { alpha: 0.4, scheme: CorruptionScheme::UniformRange { lo: -100.0, hi: 100.0 } };
            let (data, _) = gen_dataset(400, &[1.0, 2.0, -3.0], &SigmaSpec::DiagonalConditioned { kappa: 5.0 }, &NoiseSpec::Cauchy { scale: 1.0 }, &corruption, seed).unwrap();
            let cfg = HuberConfig { delta: 0.7, ..HuberConfig::default() };
            let fit = huber_fit(&data, &cfg, None).unwrap();
            let obj: Vec<f64> = fit.w_trace.iter().map(|w| huber_objective(&data, w, cfg.delta)).collect();
            for pair in obj.windows(2) {
                assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "{pair:?}");
            }
        }
    }

    #[test]
    fn huber_near_ols_on_clean_gaussian() {
        let w: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let (data, truth) = gen_dataset(5000, &w, &SigmaSpec::Identity, &NoiseSpec::Gaussian { sigma: 1.0 }, &CorruptionSpec::none(), 4).unwrap();
        let ols = ols_fit(&data, None).unwrap();
        let hub = huber_fit(&data, &HuberConfig::default(), None).unwrap();
        let gap = sigma_norm_diag(&sub(&hub.w_final, &ols.w_final), &truth.sigma_diag);
        assert!(gap <= 0.05, "{gap}");
    }

    #[test]
    fn all_baselines_exact_on_clean_data() {
        let w = [0.5, -1.5, 2.0];
        let (data, truth) = gen_dataset(100, &w, &SigmaSpec::Identity, &NoiseSpec::None, &CorruptionSpec::none(), 5).unwrap();
        for fit in [
            ols_fit(&data, Some(&truth)).unwrap(),
            torrent_fit(&data, &TorrentConfig { alpha: 0.2, ..TorrentConfig::default() }, Some(&truth)).unwrap(),
            huber_fit(&data, &HuberConfig::default(), Some(&truth)).unwrap(),
        ] {
            assert!(norm2(&sub(&fit.w_final, &w)) < 1e-6);
        }
    }

    #[test]
    fn counterexample_zero_is_fixed_point() {
        let pts = torrent_fixed_point_trajectory(10_000, 0.8, &[0.0], 20, 1).unwrap();
        assert_eq!(pts[0].w_final, 0.0);
    }

    #[test]
    fn low_corruption_grid_converges_to_zero() {
        let grid: Vec<f64> = (0..=8).map(|i| -1.0 + 0.25 * i as f64).collect();
        for pt in torrent_fixed_point_trajectory(10_000, 0.1, &grid, 50, 2).unwrap() {
            assert!(pt.w_final.abs() <= 0.05, "{pt:?}");
        }
    }
}

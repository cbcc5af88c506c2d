//! The AdaCRR estimator: alternating adaptive thresholding and refitting on
//! fresh folds of the data.
//!
//! Each outer iteration `t` computes residuals of the previous iterate on
//! fold `t`, keeps the points chosen by [`adaht_select`], and refits with one
//! of three update rules (exact least squares, gradient steps, or
//! iterative hard thresholding for sparse models).

use crate::adaht::{adaht_select, interval_length, ScheduleMode, ScheduleSpec};
use crate::datagen::{Dataset, GroundTruth};
use crate::error::{Error, Result};
use crate::numerics::{
    dot, norm2, sigma_norm_diag, solve_least_squares, solve_least_squares_jittered, spectral_norm_sq, sub,
    top_k_project, DenseMatrix, DenseVector,
};
use crate::rng::{derive_seed, tag, Stream};
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum UpdateRule {
    /// Exact least squares on the kept points.
    FullyCorrective,
    /// `steps` gradient steps `w ← w − η Xᵀ(Xw − y)` from the previous iterate.
    GradientDescent { eta: StepSize, steps: usize },
    /// k-sparse least squares by iterative hard thresholding from zero.
    SparseIht { k: usize, iht_iters: usize, eta: StepSize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum D0Source {
    Given(f64),
    EstimateOls,
    EstimateSignal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaCrrConfig {
    #[serde(rename = "T", alias = "iterations")]
    pub iterations: usize,
    pub update: UpdateRule,
    pub a: f64,
    pub gamma: f64,
    pub schedule: ScheduleSpec,
    pub d0_source: D0Source,
    pub seed: u64,
    /// Use every sample in every iteration instead of one fresh fold each.
    pub reuse_all_data: bool,
}

impl Default for AdaCrrConfig {
    fn default() -> Self {
        Self {
            iterations: 10,
            update: UpdateRule::FullyCorrective,
            a: 1.0 / 18.0,
            gamma: 4.0,
            schedule: ScheduleSpec::practical(1.0, 0.98),
            d0_source: D0Source::EstimateOls,
            seed: 0,
            reuse_all_data: false,
        }
    }
}

impl AdaCrrConfig {
    /// Defaults with the given noise-scale upper bound `σ̂`.
    pub fn with_sigma_hat(sigma_hat: f64) -> Self {
        Self {
            schedule: ScheduleSpec::practical(sigma_hat, 0.98),
            ..Self::default()
        }
    }

    /// Defaults for heavy-tailed noise with tail threshold `ρ`.
    pub fn heavy_tailed(rho: f64) -> Self {
        Self {
            schedule: ScheduleSpec::heavy_tailed(rho, 0.98),
            ..Self::default()
        }
    }

    fn effective_dim(&self, p: usize) -> usize {
        match self.update {
            UpdateRule::SparseIht { k, .. } => k,
            _ => p,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.iterations == 0 {
            return bad("T must be >= 1".into());
        }
        if !(0.0..=0.1).contains(&self.a) {
            return bad(format!("a must lie in [0, 0.1], got {}", self.a));
        }
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must be > 1, got {}", self.gamma));
        }
        self.schedule.validate(false).map_err(Error::InvalidConfig)?;
        match self.update {
            UpdateRule::FullyCorrective => {}
            UpdateRule::GradientDescent { eta, steps } => {
                if steps == 0 {
                    return bad("gradient descent needs steps >= 1".into());
                }
                check_step(eta)?;
            }
            UpdateRule::SparseIht { k, iht_iters, eta } => {
                if k == 0 || k > p {
                    return bad(format!("sparse update needs 1 <= k <= p, got k={k}, p={p}"));
                }
                if iht_iters == 0 {
                    return bad("iht_iters must be >= 1".into());
                }
                check_step(eta)?;
                if !matches!(self.d0_source, D0Source::Given(_)) {
                    return bad("sparse update starts at w0 = 0 and needs d0_source = given".into());
                }
            }
        }
        if let D0Source::Given(v) = self.d0_source {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("given d0 must be finite and >= 0, got {v}"));
            }
        }
        Ok(())
    }
}

fn check_step(eta: StepSize) -> Result<()> {
    match eta {
        StepSize::Fixed(v) if !(v > 0.0) || !v.is_finite() => {
            Err(Error::InvalidConfig(format!("step size must be > 0, got {v}")))
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub w_final: DenseVector,
    /// Iterates `w_0, …, w_T`.
    pub w_trace: Vec<DenseVector>,
    /// `|S_t|` for `t = 1..=T`.
    pub set_sizes: Vec<usize>,
    /// `‖w_t − w*‖_Σ` for every entry of `w_trace`, when truth was supplied.
    pub errors_sigma_norm: Option<Vec<f64>>,
    pub wall_time: Duration,
    /// Iterations (1-based) whose update was skipped and carried `w_{t−1}`.
    pub flagged_iterations: Vec<usize>,
    pub d0_hat: Option<f64>,
    pub interval_lengths: Vec<f64>,
}

impl FitResult {
    pub(crate) fn from_trace(w_trace: Vec<DenseVector>, set_sizes: Vec<usize>, started: Instant) -> Self {
        Self {
            w_final: w_trace.last().cloned().unwrap_or_default(),
            w_trace,
            set_sizes,
            errors_sigma_norm: None,
            wall_time: started.elapsed(),
            flagged_iterations: Vec::new(),
            d0_hat: None,
            interval_lengths: Vec::new(),
        }
    }

    pub fn attach_errors(&mut self, truth: &GroundTruth) {
        self.errors_sigma_norm = Some(
            self.w_trace
                .iter()
                .map(|w| sigma_norm_diag(&sub(w, &truth.w_star), &truth.sigma_diag))
                .collect(),
        );
    }
}

/// Seeded shuffle of `0..n` cut into `T+1` folds of `⌊n/(T+1)⌋` points, the
/// remainder going to fold 0.
pub fn split_folds(n: usize, iterations: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    Stream::derived(seed, &[tag::FOLDS]).shuffle(&mut perm);
    let folds = iterations + 1;
    let size = n / folds;
    let first = n - size * iterations;
    let mut out = Vec::with_capacity(folds);
    out.push(perm[..first].to_vec());
    for t in 0..iterations {
        let start = first + t * size;
        out.push(perm[start..start + size].to_vec());
    }
    out
}

fn residual(data: &Dataset, w: &[f64]) -> Vec<f64> {
    sub(&data.y, &data.x.matvec(w))
}

fn resolve_step(eta: StepSize, x: &DenseMatrix, scale: f64) -> Option<f64> {
    match eta {
        StepSize::Fixed(v) => Some(v),
        StepSize::Auto => {
            let l = spectral_norm_sq(x);
            (l > 0.0).then(|| scale / l)
        }
    }
}

/// `steps` iterations of `w ← w − η Xᵀ(Xw − y)`; `Auto` uses `η = 1/λ_max(XᵀX)`.
pub fn update_gd(x: &DenseMatrix, y: &[f64], w_prev: &[f64], eta: StepSize, steps: usize) -> Result<DenseVector> {
    if steps == 0 {
        return Err(Error::InvalidConfig("gradient descent needs steps >= 1".into()));
    }
    let Some(eta) = resolve_step(eta, x, 1.0) else {
        return Ok(w_prev.to_vec().into());
    };
    let mut w = w_prev.to_vec();
    for _ in 0..steps {
        let grad = x.t_matvec(&sub(&x.matvec(&w), y));
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= eta * gi;
        }
    }
    DenseVector::try_new(w)
}

const IHT_TOL: f64 = 1e-9;

/// Iterative hard thresholding for `min ‖y − Xw‖²` over k-sparse `w`,
/// started at zero. `Auto` uses `η = 2 / (3 λ_max(XᵀX))`.
pub fn iht(x: &DenseMatrix, y: &[f64], k: usize, eta: StepSize, iters: usize) -> Result<DenseVector> {
    let p = x.cols();
    if k > p {
        return Err(Error::InvalidConfig(format!("sparsity {k} exceeds dimension {p}")));
    }
    if iters == 0 {
        return Err(Error::InvalidConfig("iht needs iters >= 1".into()));
    }
    let mut w = vec![0.0; p];
    let Some(eta) = resolve_step(eta, x, 2.0 / 3.0) else {
        return Ok(w.into());
    };
    for _ in 0..iters {
        let grad = x.t_matvec(&sub(&x.matvec(&w), y));
        let step: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi - eta * gi).collect();
        let next = top_k_project(&step, k).into_inner();
        let moved = norm2(&sub(&next, &w));
        w = next;
        if moved < IHT_TOL {
            break;
        }
    }
    DenseVector::try_new(w)
}

/// Upper estimate of `‖w₀ − w*‖_Σ` from the fold-0 OLS residual:
/// `2 c √p / ñ · ‖y₀ − X₀ w₀‖` with `c = 4 √(p ln ñ / ñ)`.
pub fn estimate_d0_ols(x0: &DenseMatrix, y0: &[f64], w0: &[f64]) -> Result<f64> {
    let (n, p) = (x0.rows(), x0.cols());
    if n <= p {
        return Err(Error::InvalidConfig(format!("d0 estimate needs fold size > p, got {n} <= {p}")));
    }
    let (n, p) = (n as f64, p as f64);
    let c = 4.0 * (p * n.ln() / n).sqrt();
    let r = norm2(&sub(y0, &x0.matvec(w0)));
    Ok(2.0 * c * p.sqrt() / n * r)
}

/// Signal-strength estimate `√((‖y₀‖² − ‖y₀ − X₀ w_OLS‖²) / ñ)`, clamped at 0.
pub fn estimate_d0_signal(x0: &DenseMatrix, y0: &[f64]) -> Result<f64> {
    let (n, p) = (x0.rows(), x0.cols());
    if n <= p {
        return Err(Error::InvalidConfig(format!("d0 estimate needs fold size > p, got {n} <= {p}")));
    }
    let w = solve_least_squares_jittered(x0, y0)?;
    let r = sub(y0, &x0.matvec(&w));
    Ok(((dot(y0, y0) - dot(&r, &r)) / n as f64).max(0.0).sqrt())
}

fn fully_corrective(x: &DenseMatrix, y: &[f64]) -> Option<DenseVector> {
    let p = x.cols();
    if x.rows() >= p {
        return solve_least_squares_jittered(x, y).ok();
    }
    let trace: f64 = x.as_slice().iter().map(|v| v * v).sum();
    let ridge = 1e-6 * trace / p as f64;
    if ridge > 0.0 {
        solve_least_squares(x, y, ridge).ok()
    } else {
        None
    }
}

/// Runs the estimator. When `truth` is given, Σ-norm errors of every iterate
/// are recorded.
pub fn adacrr_fit(data: &Dataset, config: &AdaCrrConfig, truth: Option<&GroundTruth>) -> Result<FitResult> {
    let started = Instant::now();
    let (n, p) = (data.n(), data.p());
    config.validate(p)?;
    let t_max = config.iterations;
    let need = config.effective_dim(p).max(2);
    let min_n = if config.reuse_all_data { need } else { (t_max + 1) * need };
    if n < min_n {
        return Err(Error::InvalidConfig(format!(
            "need n >= {min_n} samples for T={t_max} and effective dimension {need}, got {n}"
        )));
    }

    let folds: Vec<Dataset> = if config.reuse_all_data {
        vec![data.clone()]
    } else {
        split_folds(n, t_max, config.seed)
            .iter()
            .map(|idx| data.subset(idx))
            .collect()
    };
    let fold = |t: usize| if config.reuse_all_data { &folds[0] } else { &folds[t] };

    let sparse = matches!(config.update, UpdateRule::SparseIht { .. });
    let fold0 = fold(0);
    let w0 = if sparse {
        DenseVector::zeros(p)
    } else {
        solve_least_squares_jittered(&fold0.x, &fold0.y)?
    };
    let d0_hat = match config.d0_source {
        D0Source::Given(v) => v,
        D0Source::EstimateOls => estimate_d0_ols(&fold0.x, &fold0.y, &w0)?,
        D0Source::EstimateSignal => estimate_d0_signal(&fold0.x, &fold0.y)?,
    };
    let schedule = config.schedule.with_d0(d0_hat);

    let mut rng = Stream::derived(config.seed, &[tag::THRESHOLD]);
    let mut trace = Vec::with_capacity(t_max + 1);
    trace.push(w0);
    let mut set_sizes = Vec::with_capacity(t_max);
    let mut flagged = Vec::new();
    let mut widths = Vec::with_capacity(t_max);

    for t in 1..=t_max {
        let current = fold(t);
        let w_prev = trace.last().expect("trace starts with w0");
        let r = residual(current, w_prev);
        let width = interval_length(t, &schedule, current.n());
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "interval length {width} at t={t}; the schedule needs a positive noise scale or d0"
            )));
        }
        widths.push(width);
        let sel = adaht_select(&r, width, config.gamma, config.a, &mut rng);
        set_sizes.push(sel.selected.len());

        let next = if sel.selected.is_empty() {
            None
        } else {
            let kept = current.subset(&sel.selected);
            match config.update {
                UpdateRule::FullyCorrective => fully_corrective(&kept.x, &kept.y),
                UpdateRule::GradientDescent { eta, steps } => Some(update_gd(&kept.x, &kept.y, w_prev, eta, steps)?),
                UpdateRule::SparseIht { k, iht_iters, eta } => Some(iht(&kept.x, &kept.y, k, eta, iht_iters)?),
            }
        };
        match next {
            Some(w) => trace.push(w),
            None => {
                flagged.push(t);
                trace.push(w_prev.clone());
            }
        }
    }

    let mut result = FitResult::from_trace(trace, set_sizes, started);
    result.flagged_iterations = flagged;
    result.d0_hat = Some(d0_hat);
    result.interval_lengths = widths;
    if let Some(truth) = truth {
        result.attach_errors(truth);
    }
    result.wall_time = started.elapsed();
    Ok(result)
}

/// [`adacrr_fit`] restricted to the heavy-tailed interval schedule.
pub fn heavy_fit(data: &Dataset, config: &AdaCrrConfig, truth: Option<&GroundTruth>) -> Result<FitResult> {
    if config.schedule.mode != ScheduleMode::HeavyTailed || !(config.schedule.rho > 0.0) {
        return Err(Error::InvalidConfig("heavy-tailed fit needs the heavy_tailed schedule with rho > 0".into()));
    }
    adacrr_fit(data, config, truth)
}

/// Coordinate-wise mean of the rows of `y` for noise symmetric about zero.
///
/// Each coordinate becomes a one-dimensional regression with covariates ±1
/// (half of the rows sign-flipped at random) and responses `s_i y_i`, fitted
/// in heavy-tailed mode.
pub fn mean_estimate_symmetrized(y: &DenseMatrix, config: &AdaCrrConfig) -> Result<DenseVector> {
    let (n, p) = (y.rows(), y.cols());
    if n < 2 * (config.iterations + 1) {
        return Err(Error::InvalidConfig(format!(
            "mean estimation needs n >= 2(T+1) = {}, got {n}",
            2 * (config.iterations + 1)
        )));
    }
    if config.schedule.mode != ScheduleMode::HeavyTailed {
        return Err(Error::InvalidConfig("mean estimation runs in heavy-tailed mode".into()));
    }
    let mut out = Vec::with_capacity(p);
    for j in 0..p {
        let mut signs = vec![1.0; n];
        let flips = Stream::derived(config.seed, &[tag::SIGNS, j as u64]).sample_indices(n, n / 2);
        for i in flips {
            signs[i] = -1.0;
        }
        let x = DenseMatrix::new(n, 1, signs.clone())?;
        let resp: Vec<f64> = (0..n).map(|i| signs[i] * y.get(i, j)).collect();
        let data = Dataset::new(x, DenseVector::try_new(resp)?)?;
        let cfg = AdaCrrConfig {
            seed: derive_seed(config.seed, &[j as u64]),
            ..config.clone()
        };
        out.push(heavy_fit(&data, &cfg, None)?.w_final[0]);
    }
    Ok(out.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_dataset, CorruptionScheme, CorruptionSpec, NoiseSpec, SigmaSpec};

    fn clean(n: usize, p: usize, seed: u64) -> (Dataset, GroundTruth) {
        let w: Vec<f64> = (0..p).map(|i| 1.0 - 0.3 * i as f64).collect();
        gen_dataset(n, &w, &SigmaSpec::Identity, &NoiseSpec::None, &CorruptionSpec::none(), seed).unwrap()
    }

    #[test]
    fn folds_partition_indices() {
        for (n, t) in [(100, 3), (101, 10), (11, 10), (57, 1)] {
            let folds = split_folds(n, t, 9);
            assert_eq!(folds.len(), t + 1);
            let size = n / (t + 1);
            assert_eq!(folds[0].len(), size + n % (t + 1));
            assert!(folds[1..].iter().all(|f| f.len() == size));
            let mut all: Vec<usize> = folds.concat();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn clean_full_rank_recovery() {
        let (data, truth) = clean(200, 5, 1);
        let cfg = AdaCrrConfig { iterations: 1, ..AdaCrrConfig::with_sigma_hat(0.1) };
        let fit = adacrr_fit(&data, &cfg, Some(&truth)).unwrap();
        assert_eq!(fit.w_trace.len(), 2);
        assert_eq!(fit.set_sizes.len(), 1);
        for w in &fit.w_trace {
            assert!(norm2(&sub(w, &truth.w_star)) < 1e-8);
        }
        assert_eq!(fit.set_sizes[0], 200 / 2);
    }

    #[test]
    fn clean_iterates_stay_exact() {
        let (data, truth) = clean(600, 4, 2);
        let fit = adacrr_fit(&data, &AdaCrrConfig::with_sigma_hat(0.5), Some(&truth)).unwrap();
        assert_eq!(fit.w_trace.len(), 11);
        for e in fit.errors_sigma_norm.unwrap() {
            assert!(e < 1e-8, "{e}");
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let corruption = CorruptionSpec { alpha: 0.6, scheme: CorruptionScheme::PaperNoisy };
        let (data, _) = gen_dataset(1100, &[1.0, -1.0, 2.0], &SigmaSpec::Identity, &NoiseSpec::Gaussian { sigma: 1.0 }, &corruption, 3).unwrap();
        for update in [
            UpdateRule::FullyCorrective,
            UpdateRule::GradientDescent { eta: StepSize::Auto, steps: 5 },
        ] {
            let cfg = AdaCrrConfig { update, seed: 17, ..AdaCrrConfig::with_sigma_hat(2.0) };
            let a = adacrr_fit(&data, &cfg, None).unwrap();
            let b = adacrr_fit(&data, &cfg, None).unwrap();
            assert_eq!(a.w_trace, b.w_trace);
            assert_eq!(a.set_sizes, b.set_sizes);
        }
    }

    #[test]
    fn doubling_responses_doubles_trace() {
        let corruption = CorruptionSpec { alpha: 0.6, scheme: CorruptionScheme::PaperNoisy };
        let (data, _) = gen_dataset(1100, &[1.0, -1.0, 2.0], &SigmaSpec::Identity, &NoiseSpec::Gaussian { sigma: 1.0 }, &corruption, 4).unwrap();
        let doubled = Dataset::new(data.x.clone(), data.y.scaled(2.0)).unwrap();
        let cfg = AdaCrrConfig { seed: 5, ..AdaCrrConfig::with_sigma_hat(2.0) };
        let cfg2 = AdaCrrConfig { seed: 5, ..AdaCrrConfig::with_sigma_hat(4.0) };
        let a = adacrr_fit(&data, &cfg, None).unwrap();
        let b = adacrr_fit(&doubled, &cfg2, None).unwrap();
        assert_eq!(a.set_sizes, b.set_sizes);
        for (wa, wb) in a.w_trace.iter().zip(&b.w_trace) {
            assert_eq!(&*wa.scaled(2.0), &**wb);
        }
    }

    #[test]
    fn gd_examples() {
        let x = DenseMatrix::identity(2);
        let w = update_gd(&x, &[1.0, 1.0], &[0.0, 0.0], StepSize::Fixed(1.0), 1).unwrap();
        assert_eq!(&*w, &[1.0, 1.0]);
        assert!(update_gd(&x, &[1.0, 1.0], &[0.0, 0.0], StepSize::Fixed(1.0), 0).is_err());
        // stationary point is preserved
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let y = [1.0, 2.0, 3.0];
        let w_ls = solve_least_squares(&x, &y, 0.0).unwrap();
        let w = update_gd(&x, &y, &w_ls, StepSize::Auto, 10).unwrap();
        assert!(norm2(&sub(&w, &w_ls)) < 1e-12);
    }

    #[test]
    fn iht_examples() {
        let x = DenseMatrix::identity(3);
        let w = iht(&x, &[3.0, 0.0, 2.0], 2, StepSize::Auto, 500).unwrap();
        assert!(norm2(&sub(&w, &[3.0, 0.0, 2.0])) < 1e-8);

        let w = iht(&x, &[0.0; 3], 2, StepSize::Auto, 50).unwrap();
        assert_eq!(&*w, &[0.0; 3]);

        let (data, _) = gen_dataset(80, &[0.5, -1.0, 2.0, 0.25], &SigmaSpec::Identity, &NoiseSpec::Gaussian { sigma: 0.3 }, &CorruptionSpec::none(), 6).unwrap();
        let ols = solve_least_squares(&data.x, &data.y, 0.0).unwrap();
        let w = iht(&data.x, &data.y, 4, StepSize::Auto, 5000).unwrap();
        assert!(norm2(&sub(&w, &ols)) < 1e-6);

        assert!(iht(&x, &[1.0; 3], 4, StepSize::Auto, 5).is_err());
    }

    #[test]
    fn d0_ols_closed_form() {
        let x = DenseMatrix::identity(2);
        assert_eq!(estimate_d0_ols(&DenseMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap(), &[1.0, 2.0, 3.0], &[1.0]).unwrap(), 0.0);
        assert!(estimate_d0_ols(&x, &[1.0, 1.0], &[1.0, 1.0]).is_err());

        // p=4, ñ=10000, ‖r‖ = 100: residual concentrated in one row
        let n = 10_000;
        let mut rows = vec![0.0; n * 4];
        for i in 0..4 {
            rows[i * 4 + i] = 1.0;
        }
        let x = DenseMatrix::new(n, 4, rows).unwrap();
        let mut y = vec![0.0; n];
        y[10] = 100.0;
        let got = estimate_d0_ols(&x, &y, &[0.0; 4]).unwrap();
        let c = 4.0 * (4.0 * (10_000f64).ln() / 10_000.0).sqrt();
        let expected = 2.0 * c * 2.0 / 10_000.0 * 100.0;
        assert!((got - expected).abs() <= 1e-15 * expected);
    }

    #[test]
    fn d0_signal_examples() {
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        assert!((estimate_d0_signal(&x, &[1.0; 4]).unwrap() - 1.0).abs() < 1e-12);
        let y = [1.0, -1.0, 1.0, -1.0];
        assert!(estimate_d0_signal(&x, &y).unwrap() < 1e-7);
    }

    #[test]
    fn sparse_iterates_respect_k() {
        let mut w = vec![0.0; 40];
        w[3] = 1.0;
        w[17] = -1.0;
        let corruption = CorruptionSpec { alpha: 0.3, scheme: CorruptionScheme::UniformRange { lo: 50.0, hi: 100.0 } };
        let (data, truth) = gen_dataset(600, &w, &SigmaSpec::Identity, &NoiseSpec::Gaussian { sigma: 0.1 }, &corruption, 8).unwrap();
        let cfg = AdaCrrConfig {
            iterations: 3,
            update: UpdateRule::SparseIht { k: 5, iht_iters: 300, eta: StepSize::Auto },
            d0_source: D0Source::Given(2f64.sqrt()),
            ..AdaCrrConfig::with_sigma_hat(0.2)
        };
        let fit = adacrr_fit(&data, &cfg, Some(&truth)).unwrap();
        assert_eq!(&*fit.w_trace[0], &vec![0.0; 40][..]);
        assert!(fit.w_trace[1..].iter().all(|w| w.nnz() <= 5));
        assert!(*fit.errors_sigma_norm.unwrap().last().unwrap() < 0.2);
    }

    #[test]
    fn sparse_requires_given_d0() {
        let (data, _) = clean(200, 5, 1);
        let cfg = AdaCrrConfig {
            update: UpdateRule::SparseIht { k: 2, iht_iters: 10, eta: StepSize::Auto },
            ..AdaCrrConfig::default()
        };
        assert!(matches!(adacrr_fit(&data, &cfg, None), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn too_few_samples_is_config_error() {
        let (data, _) = clean(30, 5, 1);
        assert!(matches!(adacrr_fit(&data, &AdaCrrConfig::default(), None), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn zero_interval_is_config_error() {
        let (data, _) = clean(200, 2, 1);
        let cfg = AdaCrrConfig { d0_source: D0Source::Given(0.0), ..AdaCrrConfig::with_sigma_hat(0.0) };
        assert!(matches!(adacrr_fit(&data, &cfg, None), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn heavy_fit_requires_heavy_schedule() {
        let (data, _) = clean(200, 2, 1);
        assert!(heavy_fit(&data, &AdaCrrConfig::default(), None).is_err());
        let fit = heavy_fit(&data, &AdaCrrConfig::heavy_tailed(0.3), None).unwrap();
        assert!(norm2(&sub(&fit.w_final, &[1.0, 0.7])) < 1e-6);
    }

    #[test]
    fn heavy_and_practical_agree_on_identical_schedules() {
        // with d0 = 0 both schedules are constant; pick rho so the widths coincide
        let practical = ScheduleSpec::practical(1.0, 0.98).with_d0(0.0);
        let target = interval_length(1, &practical, 100);
        let base_bits = (target * 8f64.sqrt() / 18.0).to_bits();
        let heavy = (0..400u64)
            .flat_map(|k| [base_bits + k, base_bits - k])
            .map(|bits| ScheduleSpec::heavy_tailed(f64::from_bits(bits), 0.98).with_d0(0.0))
            .find(|h| interval_length(1, h, 100) == target)
            .expect("a representable rho reproduces the practical width");

        let corruption = CorruptionSpec { alpha: 0.3, scheme: CorruptionScheme::UniformRange { lo: 40.0, hi: 80.0 } };
        let (data, _) = gen_dataset(1100, &[1.0, 2.0], &SigmaSpec::Identity, &NoiseSpec::Cauchy { scale: 1.0 }, &corruption, 9).unwrap();
        let base = AdaCrrConfig { d0_source: D0Source::Given(0.0), seed: 3, ..AdaCrrConfig::default() };
        let a = heavy_fit(&data, &AdaCrrConfig { schedule: heavy, ..base.clone() }, None).unwrap();
        let b = adacrr_fit(&data, &AdaCrrConfig { schedule: practical, ..base }, None).unwrap();
        assert_eq!(a.interval_lengths, b.interval_lengths);
        assert_eq!(a.w_trace, b.w_trace);
    }

    #[test]
    fn mean_of_constant_rows() {
        let mu = [0.3, -2.0, 7.5];
        let y = DenseMatrix::from_rows(&vec![mu.to_vec(); 400]).unwrap();
        let est = mean_estimate_symmetrized(&y, &AdaCrrConfig::heavy_tailed(0.3)).unwrap();
        for (e, m) in est.iter().zip(&mu) {
            assert!((e - m).abs() < 1e-12, "{e} vs {m}");
        }
    }

    #[test]
    fn mean_is_sign_equivariant() {
        let mut s = Stream::new(12);
        let rows: Vec<Vec<f64>> = (0..500).map(|_| vec![1.0 + s.cauchy(1.0), -0.5 + s.cauchy(1.0)]).collect();
        let y = DenseMatrix::from_rows(&rows).unwrap();
        let neg = DenseMatrix::from_rows(&rows.iter().map(|r| r.iter().map(|v| -v).collect()).collect::<Vec<_>>()).unwrap();
        let cfg = AdaCrrConfig { seed: 4, ..AdaCrrConfig::heavy_tailed(0.3) };
        let a = mean_estimate_symmetrized(&y, &cfg).unwrap();
        let b = mean_estimate_symmetrized(&neg, &cfg).unwrap();
        assert_eq!(&*a.scaled(-1.0), &*b);
    }

    #[test]
    fn mean_needs_enough_rows() {
        let y = DenseMatrix::zeros(10, 2);
        assert!(mean_estimate_symmetrized(&y, &AdaCrrConfig::heavy_tailed(0.3)).is_err());
    }
}

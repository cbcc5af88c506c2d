//! Adaptive randomized hard thresholding.
//!
//! Residual magnitudes are bucketed into half-open intervals of width `I`.
//! The first interval whose population falls below `γ ñ / (j ln ñ)` acts as a
//! crude threshold: everything to its left is kept, everything to its right
//! is dropped, and points inside it are kept when they fall below the
//! interval midpoint perturbed by `η I`, `η ~ U[-a, a]`.

use crate::rng::Stream;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// `18 √((2σ̂² + 2β^{2(t−1)} d̂₀²) ln ñ)`
    Theoretical,
    /// `3 √(2σ̂² + 2β^{2(t−2)} d̂₀²)`
    Practical,
    /// `18 (ρ/√8 + β^{t−1} d̂₀ √(ln ñ))`
    HeavyTailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub mode: ScheduleMode,
    #[serde(default)]
    pub sigma_hat: f64,
    #[serde(default)]
    pub d0_hat: f64,
    pub beta: f64,
    #[serde(default)]
    pub rho: f64,
}

impl ScheduleSpec {
    pub fn practical(sigma_hat: f64, beta: f64) -> Self {
        Self {
            mode: ScheduleMode::Practical,
            sigma_hat,
            d0_hat: 0.0,
            beta,
            rho: 0.0,
        }
    }

    pub fn heavy_tailed(rho: f64, beta: f64) -> Self {
        Self {
            mode: ScheduleMode::HeavyTailed,
            sigma_hat: 0.0,
            d0_hat: 0.0,
            beta,
            rho,
        }
    }

    pub fn with_d0(self, d0_hat: f64) -> Self {
        Self { d0_hat, ..self }
    }

    /// Checks parameter ranges; `needs_scale` additionally requires a
    /// positive noise scale or `d̂₀`.
    pub fn validate(&self, needs_scale: bool) -> Result<(), String> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        for (name, v) in [("sigma_hat", self.sigma_hat), ("d0_hat", self.d0_hat), ("rho", self.rho)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        let scale = match self.mode {
            ScheduleMode::HeavyTailed => self.rho,
            _ => self.sigma_hat,
        };
        if needs_scale && scale == 0.0 && self.d0_hat == 0.0 {
            return Err("interval length would be zero: set sigma_hat/rho or d0_hat".into());
        }
        Ok(())
    }
}

/// Interval width at outer iteration `t ≥ 1` for a fold of `n_tilde` points.
pub fn interval_length(t: usize, schedule: &ScheduleSpec, n_tilde: usize) -> f64 {
    interval_length_with_log(t, schedule, (n_tilde as f64).ln())
}

/// As [`interval_length`] with `ln ñ` supplied directly.
pub fn interval_length_with_log(t: usize, schedule: &ScheduleSpec, log_n: f64) -> f64 {
    let ScheduleSpec { sigma_hat, d0_hat, beta, rho, .. } = *schedule;
    let t = t as i32;
    match schedule.mode {
        ScheduleMode::Theoretical => {
            let decay = beta.powi(2 * (t - 1));
            18.0 * ((2.0 * sigma_hat * sigma_hat + 2.0 * decay * d0_hat * d0_hat) * log_n).sqrt()
        }
        ScheduleMode::Practical => {
            let decay = beta.powi(2 * (t - 2));
            3.0 * (2.0 * sigma_hat * sigma_hat + 2.0 * decay * d0_hat * d0_hat).sqrt()
        }
        ScheduleMode::HeavyTailed => {
            let decay = beta.powi(t - 1);
            18.0 * (rho / 8f64.sqrt() + decay * d0_hat * log_n.sqrt())
        }
    }
}

/// 1-based interval holding a residual magnitude: `⌊|r| / I⌋ + 1`.
fn interval_of(abs_r: f64, width: f64) -> usize {
    (abs_r / width).floor() as usize + 1
}

/// Number of intervals searched: `⌈ñ^{1/γ}⌉ + 1`.
pub fn search_range(n_tilde: usize, gamma: f64) -> usize {
    (n_tilde as f64).powf(1.0 / gamma).ceil() as usize + 1
}

/// Picks the first sparse interval.
///
/// Returns the 1-based interval `j` and the counts of intervals
/// `1..=search_range`, followed by one bucket holding every residual beyond
/// the searched range.
pub fn select_interval(abs_residuals: &[f64], width: f64, gamma: f64) -> (usize, Vec<usize>) {
    let n = abs_residuals.len();
    let j_max = search_range(n, gamma);
    let mut counts = vec![0usize; j_max + 1];
    for &r in abs_residuals {
        let j = interval_of(r, width).min(j_max + 1);
        counts[j - 1] += 1;
    }
    let log_n = (n as f64).ln();
    let passes = |j: usize| (counts[j - 1] as f64) < gamma * n as f64 / (j as f64 * log_n);
    let chosen = (1..=j_max).find(|&j| passes(j)).unwrap_or_else(|| {
        // only reachable through rounding; take the emptiest searched interval
        (1..=j_max).min_by_key(|&j| (counts[j - 1], j)).unwrap_or(1)
    });
    (chosen, counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Kept indices, ascending.
    pub selected: Vec<usize>,
    pub chosen_interval: usize,
    pub tau: f64,
    pub interval_length: f64,
    pub counts: Vec<usize>,
}

/// Runs the thresholding operator on raw residuals.
///
/// One `η` draw is consumed per member of the chosen interval, in ascending
/// index order.
pub fn adaht_select(residuals: &[f64], width: f64, gamma: f64, a: f64, rng: &mut Stream) -> SelectionResult {
    let abs: Vec<f64> = residuals.iter().map(|r| r.abs()).collect();
    let (j, counts) = select_interval(&abs, width, gamma);
    let tau = (j as f64 - 0.5) * width;
    let mut selected = Vec::with_capacity(abs.len());
    for (i, &r) in abs.iter().enumerate() {
        let bucket = interval_of(r, width);
        if bucket < j {
            selected.push(i);
        } else if bucket == j {
            let eta = -a + 2.0 * a * rng.uniform();
            if r < tau + eta * width {
                selected.push(i);
            }
        }
    }
    SelectionResult {
        selected,
        chosen_interval: j,
        tau,
        interval_length: width,
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(mode: ScheduleMode, sigma_hat: f64, d0_hat: f64, beta: f64, rho: f64) -> ScheduleSpec {
        ScheduleSpec { mode, sigma_hat, d0_hat, beta, rho }
    }

    #[test]
    fn interval_length_examples() {
        let th = spec(ScheduleMode::Theoretical, 1.0, 2.0, 0.5, 0.0);
        assert!((interval_length_with_log(2, &th, 1.0) - 36.0).abs() < 1e-12);

        let pr = spec(ScheduleMode::Practical, 1.0, 2.0, 0.5, 0.0);
        assert!((interval_length(2, &pr, 100) - 3.0 * 10f64.sqrt()).abs() < 1e-12);
        // exponent 2(t-2): at t=1 the d0 term is inflated by beta^-2
        assert!((interval_length(1, &pr, 100) - 3.0 * (2.0 + 2.0 * 4.0 * 4.0f64).sqrt()).abs() < 1e-12);

        let ht = spec(ScheduleMode::HeavyTailed, 0.0, 0.0, 0.5, 8f64.sqrt());
        assert!((interval_length(3, &ht, 1000) - 18.0).abs() < 1e-12);
    }

    #[test]
    fn schedule_validation() {
        assert!(spec(ScheduleMode::Practical, 1.0, 0.0, 1.0, 0.0).validate(true).is_err());
        assert!(spec(ScheduleMode::Practical, 0.0, 0.0, 0.5, 0.0).validate(true).is_err());
        assert!(spec(ScheduleMode::HeavyTailed, 1.0, 0.0, 0.5, 0.0).validate(true).is_err());
        assert!(spec(ScheduleMode::HeavyTailed, 0.0, 0.0, 0.5, 0.3).validate(true).is_ok());
        assert!(spec(ScheduleMode::Practical, -1.0, 1.0, 0.5, 0.0).validate(false).is_err());
    }

    #[test]
    fn select_interval_counting_rule() {
        // ñ=16, γ=2, ln 16 = 2.7726: thresholds 11.54, 5.77, 3.85
        let mut r = vec![0.5; 12];
        r.extend([1.5, 1.5, 1.5, 2.5]);
        let (j, counts) = select_interval(&r, 1.0, 2.0);
        assert_eq!(j, 2);
        assert_eq!(&counts[..3], &[12, 3, 1]);
        assert_eq!(counts.iter().sum::<usize>(), 16);

        let (j, counts) = select_interval(&[0.0; 16], 1.0, 2.0);
        assert_eq!(j, 2);
        assert_eq!(counts[0], 16);
        assert!(j <= 4);
    }

    #[test]
    fn boundary_goes_to_next_interval() {
        let (_, counts) = select_interval(&[1.0, 2.0, 0.999], 1.0, 2.0);
        assert_eq!(counts[0], 1);
        assert_eq!(counts[1], 1);
    }

    #[test]
    fn adaht_small_example() {
        let mut rng = Stream::new(0);
        let res = adaht_select(&[0.2, 1.4, 5.0], 1.0, 2.0, 0.0, &mut rng);
        assert_eq!(res.chosen_interval, 1);
        assert_eq!(res.tau, 0.5);
        assert_eq!(res.selected, vec![0]);
    }

    #[test]
    fn zero_randomization_uses_midpoint() {
        // with γ=20 the j=1 threshold is 20*9/ln 9 > 9, so interval 1 is chosen
        let r: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        let mut rng = Stream::new(1);
        let res = adaht_select(&r, 1.0, 20.0, 0.0, &mut rng);
        assert_eq!(res.chosen_interval, 1);
        let expected: Vec<usize> = (0..9).filter(|&i| r[i] < 0.5).collect();
        assert_eq!(res.selected, expected);
    }

    #[test]
    fn same_seed_same_selection() {
        let r: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let a = adaht_select(&r, 2.0, 4.0, 1.0 / 18.0, &mut Stream::new(5));
        let b = adaht_select(&r, 2.0, 4.0, 1.0 / 18.0, &mut Stream::new(5));
        assert_eq!(a, b);
    }

    fn residuals() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(
            prop_oneof![3 => -3.0f64..3.0, 1 => -200.0f64..200.0, 1 => Just(0.0)],
            16..300,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn selection_invariants(r in residuals(), width in 0.05f64..5.0, gamma in 1.01f64..6.0, seed in any::<u64>()) {
            let a = 1.0 / 18.0;
            let n = r.len();
            let res = adaht_select(&r, width, gamma, a, &mut Stream::new(seed));
            let j = res.chosen_interval;

            prop_assert_eq!(res.counts.iter().sum::<usize>(), n);
            prop_assert!(res.selected.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(res.selected.iter().all(|&i| i < n));

            // j bound holds whenever gamma <= ln ñ
            if gamma <= (n as f64).ln() {
                prop_assert!(j <= (n as f64).powf(1.0 / gamma).ceil() as usize);
            }

            for (i, &ri) in r.iter().enumerate() {
                let m = ri.abs();
                let kept = res.selected.binary_search(&i).is_ok();
                let bucket = (m / width).floor() as usize + 1;
                if bucket < j { prop_assert!(kept); }
                if bucket > j { prop_assert!(!kept); }
                // sandwich
                if m < res.tau - a * width { prop_assert!(kept); }
                if kept { prop_assert!(m < res.tau + a * width); }
            }
        }

        #[test]
        fn selection_is_scale_equivariant(r in residuals(), width in 0.05f64..5.0, c in 0.01f64..100.0, seed in any::<u64>()) {
            let scaled: Vec<f64> = r.iter().map(|x| c * x).collect();
            let base = adaht_select(&r, width, 4.0, 1.0 / 18.0, &mut Stream::new(seed));
            let other = adaht_select(&scaled, c * width, 4.0, 1.0 / 18.0, &mut Stream::new(seed));
            prop_assert_eq!(base.selected, other.selected);
            prop_assert_eq!(base.chosen_interval, other.chosen_interval);
        }
    }
}

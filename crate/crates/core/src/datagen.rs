//! Synthetic instances for the oblivious-corruption regression model
//! `y = X w* + ε + b*`.
//!
//! Randomness is split into independent streams (covariates, noise,
//! corruption support, corruption values) derived from one master seed, so
//! the corruption vector depends only on `(n, corruption spec, seed)`.

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector};
use crate::rng::{derive_seed, tag, Stream};
use serde::{Deserialize, Serialize};

/// Design matrix and responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DenseMatrix,
    pub y: DenseVector,
}

impl Dataset {
    pub fn new(x: DenseMatrix, y: DenseVector) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::Dimension {
                what: "dataset responses",
                expected: x.rows(),
                found: y.len(),
            });
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect::<Vec<_>>().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SigmaSpec {
    Identity,
    DiagonalConditioned { kappa: f64 },
    ExplicitDiagonal { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NoiseSpec {
    None,
    Gaussian { sigma: f64 },
    Cauchy { scale: f64 },
    StudentT { dof: f64, scale: f64 },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            NoiseSpec::None => true,
            NoiseSpec::Gaussian { sigma } => sigma >= 0.0 && sigma.is_finite(),
            NoiseSpec::Cauchy { scale } => scale > 0.0 && scale.is_finite(),
            NoiseSpec::StudentT { dof, scale } => dof > 0.0 && scale > 0.0 && dof.is_finite() && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("noise parameters out of range: {self:?}")))
        }
    }

    fn sample(&self, stream: &mut Stream) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::Gaussian { sigma } => sigma * stream.normal(),
            NoiseSpec::Cauchy { scale } => stream.cauchy(scale),
            NoiseSpec::StudentT { dof, scale } => stream.student_t(dof, scale),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CorruptionScheme {
    /// `⌊n/4⌋` entries at 1000, `⌊n/4⌋` at √1000, the rest uniform on (0, 10).
    PaperNoisy,
    /// `⌊n/4⌋` entries at 1, `⌊n/4⌋` at 1/√n, the rest at 1/n.
    PaperNoiseless,
    UniformRange { lo: f64, hi: f64 },
    /// Values assigned to the corrupted indices in selection order.
    ExplicitValues { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub alpha: f64,
    pub scheme: CorruptionScheme,
}

impl CorruptionSpec {
    pub fn none() -> Self {
        Self {
            alpha: 0.0,
            scheme: CorruptionScheme::UniformRange { lo: 0.0, hi: 0.0 },
        }
    }

    /// `⌊α n⌋`, robust to representation error in `α`.
    pub fn count(&self, n: usize) -> usize {
        corrupted_count(self.alpha, n)
    }
}

pub(crate) fn corrupted_count(alpha: f64, n: usize) -> usize {
    (alpha * n as f64 + 1e-9).floor() as usize
}

/// Per-purpose stream seeds for [`gen_dataset_with_seeds`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamSeeds {
    pub sigma: u64,
    pub covariates: u64,
    pub noise: u64,
    pub corruption_indices: u64,
    pub corruption_values: u64,
}

impl StreamSeeds {
    pub fn from_master(seed: u64) -> Self {
        Self {
            sigma: derive_seed(seed, &[tag::SIGMA]),
            covariates: derive_seed(seed, &[tag::COVARIATES]),
            noise: derive_seed(seed, &[tag::NOISE]),
            corruption_indices: derive_seed(seed, &[tag::CORRUPTION_INDICES]),
            corruption_values: derive_seed(seed, &[tag::CORRUPTION_VALUES]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub w_star: DenseVector,
    pub sigma: SigmaSpec,
    pub sigma_diag: Vec<f64>,
    pub noise: NoiseSpec,
    pub b_star: DenseVector,
    pub epsilon: DenseVector,
    /// Support of `b*`, sorted ascending.
    pub corrupted_indices: Vec<usize>,
    pub seed: u64,
}

impl GroundTruth {
    pub fn sigma_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_diag(&self.sigma_diag)
    }
}

/// Diagonal covariance for the given spec.
pub fn make_sigma(p: usize, spec: &SigmaSpec, seed: u64) -> Result<DenseMatrix> {
    Ok(DenseMatrix::from_diag(&sigma_diagonal(p, spec, seed)?))
}

fn sigma_diagonal(p: usize, spec: &SigmaSpec, seed: u64) -> Result<Vec<f64>> {
    if p == 0 {
        return Err(Error::InvalidSpec("p must be >= 1".into()));
    }
    match spec {
        SigmaSpec::Identity => Ok(vec![1.0; p]),
        SigmaSpec::DiagonalConditioned { kappa } => {
            if !(*kappa >= 1.0) || !kappa.is_finite() {
                return Err(Error::InvalidSpec(format!("kappa must be >= 1, got {kappa}")));
            }
            let mut stream = Stream::new(seed);
            let raw: Vec<f64> = (0..p).map(|_| stream.uniform()).collect();
            let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min_val = 1.0 / kappa;
            if hi - lo <= 0.0 {
                return Ok(vec![1.0; p]);
            }
            Ok(raw
                .iter()
                .map(|&u| {
                    if u == hi {
                        1.0
                    } else if u == lo {
                        min_val
                    } else {
                        min_val + (u - lo) * (1.0 - min_val) / (hi - lo)
                    }
                })
                .collect())
        }
        SigmaSpec::ExplicitDiagonal { values } => {
            if values.len() != p {
                return Err(Error::Dimension {
                    what: "explicit sigma diagonal",
                    expected: p,
                    found: values.len(),
                });
            }
            if values.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
                return Err(Error::InvalidSpec("sigma diagonal entries must lie in (0, 1]".into()));
            }
            Ok(values.clone())
        }
    }
}

/// Corrupted support (sorted) and the dense corruption vector.
pub fn corruption_vector(n: usize, spec: &CorruptionSpec, seeds: &StreamSeeds) -> Result<(Vec<usize>, Vec<f64>)> {
    if !(0.0..1.0).contains(&spec.alpha) {
        return Err(Error::InvalidSpec(format!("alpha must lie in [0, 1), got {}", spec.alpha)));
    }
    let m = spec.count(n);
    let quarter = n / 4;
    if m == 0 {
        return Ok((Vec::new(), vec![0.0; n]));
    }
    let mut values_stream = Stream::new(seeds.corruption_values);
    let values: Vec<f64> = match &spec.scheme {
        CorruptionScheme::PaperNoisy | CorruptionScheme::PaperNoiseless => {
            if m < 2 * quarter {
                return Err(Error::InvalidSpec(format!(
                    "scheme needs at least 2*floor(n/4) = {} corrupted entries, alpha*n gives {m}",
                    2 * quarter
                )));
            }
            let (big, mid) = match spec.scheme {
                CorruptionScheme::PaperNoisy => (1000.0, 1000f64.sqrt()),
                _ => (1.0, 1.0 / (n as f64).sqrt()),
            };
            (0..m)
                .map(|i| {
                    if i < quarter {
                        big
                    } else if i < 2 * quarter {
                        mid
                    } else if matches!(spec.scheme, CorruptionScheme::PaperNoisy) {
                        10.0 * values_stream.uniform()
                    } else {
                        1.0 / n as f64
                    }
                })
                .collect()
        }
        CorruptionScheme::UniformRange { lo, hi } => {
            if !(lo <= hi) {
                return Err(Error::InvalidSpec(format!("uniform range needs lo <= hi, got [{lo}, {hi}]")));
            }
            (0..m).map(|_| values_stream.uniform_range(*lo, *hi)).collect()
        }
        CorruptionScheme::ExplicitValues { values } => {
            if values.len() != m {
                return Err(Error::Dimension {
                    what: "explicit corruption values",
                    expected: m,
                    found: values.len(),
                });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("corruption values"));
            }
            values.clone()
        }
    };

    let chosen = Stream::new(seeds.corruption_indices).sample_indices(n, m);
    let mut b = vec![0.0; n];
    for (&i, &v) in chosen.iter().zip(&values) {
        b[i] = v;
    }
    let mut support = chosen;
    support.sort_unstable();
    Ok((support, b))
}

/// Draws `(X, y)` with Gaussian rows `N(0, Σ)`, noise per `noise`, and an
/// oblivious corruption vector.
pub fn gen_dataset(
    n: usize,
    w_star: &[f64],
    sigma: &SigmaSpec,
    noise: &NoiseSpec,
    corruption: &CorruptionSpec,
    seed: u64,
) -> Result<(Dataset, GroundTruth)> {
    gen_dataset_with_seeds(n, w_star, sigma, noise, corruption, seed, StreamSeeds::from_master(seed))
}

pub fn gen_dataset_with_seeds(
    n: usize,
    w_star: &[f64],
    sigma: &SigmaSpec,
    noise: &NoiseSpec,
    corruption: &CorruptionSpec,
    seed: u64,
    seeds: StreamSeeds,
) -> Result<(Dataset, GroundTruth)> {
    if n == 0 {
        return Err(Error::InvalidSpec("n must be >= 1".into()));
    }
    let p = w_star.len();
    noise.validate()?;
    let diag = sigma_diagonal(p, sigma, seeds.sigma)?;
    let (corrupted_indices, b) = corruption_vector(n, corruption, &seeds)?;

    let scale: Vec<f64> = diag.iter().map(|d| d.sqrt()).collect();
    let mut cov = Stream::new(seeds.covariates);
    let mut x = Vec::with_capacity(n * p);
    for _ in 0..n {
        x.extend(scale.iter().map(|s| s * cov.normal()));
    }
    let x = DenseMatrix::new(n, p, x)?;

    let mut noise_stream = Stream::new(seeds.noise);
    let eps: Vec<f64> = (0..n).map(|_| noise.sample(&mut noise_stream)).collect();

    let clean = x.matvec(w_star);
    let y: Vec<f64> = (0..n).map(|i| clean[i] + eps[i] + b[i]).collect();

    let data = Dataset::new(x, DenseVector::try_new(y)?)?;
    let truth = GroundTruth {
        w_star: w_star.to_vec().into(),
        sigma: sigma.clone(),
        sigma_diag: diag,
        noise: *noise,
        b_star: b.into(),
        epsilon: eps.into(),
        corrupted_indices,
        seed,
    };
    Ok((data, truth))
}

/// One-dimensional instance on which fixed-level thresholding stalls:
/// `w* = 0`, `x ~ N(0, 1)`, `y = b*` with `b* = 1` on the first `⌊α n⌋` rows.
pub fn torrent_counterexample(n: usize, alpha: f64, seed: u64) -> Result<(Dataset, GroundTruth)> {
    if n < 10 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidSpec(format!("counterexample needs n >= 10 and alpha in (0,1), got n={n}, alpha={alpha}")));
    }
    let m = corrupted_count(alpha, n);
    let mut cov = Stream::derived(seed, &[tag::COVARIATES]);
    let x: Vec<f64> = (0..n).map(|_| cov.normal()).collect();
    let b: Vec<f64> = (0..n).map(|i| if i < m { 1.0 } else { 0.0 }).collect();
    let data = Dataset::new(DenseMatrix::new(n, 1, x)?, b.clone().into())?;
    let truth = GroundTruth {
        w_star: vec![0.0].into(),
        sigma: SigmaSpec::Identity,
        sigma_diag: vec![1.0],
        noise: NoiseSpec::None,
        b_star: b.into(),
        epsilon: vec![0.0; n].into(),
        corrupted_indices: (0..m).collect(),
        seed,
    };
    Ok((data, truth))
}

/// `k*`-sparse vector with ±1 entries on a uniformly random support.
pub fn gen_sparse_truth(p: usize, k_star: usize, seed: u64) -> Result<DenseVector> {
    if k_star == 0 || k_star > p {
        return Err(Error::InvalidSpec(format!("need 1 <= k* <= p, got k*={k_star}, p={p}")));
    }
    let mut support = Stream::derived(seed, &[tag::SUPPORT]);
    let idx = support.sample_indices(p, k_star);
    let mut signs = Stream::derived(seed, &[tag::SIGNS]);
    let mut w = vec![0.0; p];
    for i in idx {
        w[i] = signs.sign();
    }
    Ok(w.into())
}

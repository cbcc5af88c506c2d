//! Sweeps over sample size, corruption level or iteration count, with one
//! CSV record per (sweep point, estimator, seed).

use crate::adacrr::{adacrr_fit, AdaCrrConfig, FitResult};
use crate::baselines::{huber_fit, ols_fit, torrent_fit, HuberConfig, TorrentConfig};
use crate::datagen::{gen_dataset, gen_sparse_truth, CorruptionScheme, CorruptionSpec, Dataset, GroundTruth, NoiseSpec, SigmaSpec};
use crate::error::{Error, Result};
use crate::harness::param_error;
use crate::rng::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EstimatorSpec {
    Adacrr {
        #[serde(default)]
        config: AdaCrrConfig,
    },
    Ols,
    Torrent {
        #[serde(default)]
        config: TorrentConfig,
        /// Replace `config.alpha` by the instance's true corruption level.
        #[serde(default)]
        oracle_alpha: bool,
    },
    Huber {
        #[serde(default)]
        config: HuberConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedEstimator {
    pub name: String,
    #[serde(flatten)]
    pub estimator: EstimatorSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    VaryN(Vec<usize>),
    VaryAlpha(Vec<f64>),
    /// One record per iterate of each fit at the base instance.
    VaryIter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WStarSpec {
    /// Dense vector of random ±1 entries.
    Signs,
    Sparse { k: usize },
    Explicit { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "identity")]
    pub sigma: SigmaSpec,
    pub noise: NoiseSpec,
    pub scheme: CorruptionScheme,
    #[serde(default = "signs")]
    pub w_star: WStarSpec,
}

fn identity() -> SigmaSpec {
    SigmaSpec::Identity
}

fn signs() -> WStarSpec {
    WStarSpec::Signs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub estimators: Vec<NamedEstimator>,
    pub sweep: Sweep,
    pub instance: InstanceSpec,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub outputs: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub estimator: String,
    pub n: usize,
    pub p: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Empty when the trial failed.
    pub err_sigma: Option<f64>,
    pub err_l2: Option<f64>,
    pub iters: usize,
    pub ms: f64,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.err_sigma.is_none()
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.estimators.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidSpec("experiment needs at least one estimator and one seed".into()));
        }
        Ok(())
    }

    fn points(&self) -> Vec<(usize, f64)> {
        let base = &self.instance;
        match &self.sweep {
            Sweep::VaryN(ns) => ns.iter().map(|&n| (n, base.alpha)).collect(),
            Sweep::VaryAlpha(alphas) => alphas.iter().map(|&a| (base.n, a)).collect(),
            Sweep::VaryIter => vec![(base.n, base.alpha)],
        }
    }
}

fn make_instance(inst: &InstanceSpec, n: usize, alpha: f64, seed: u64) -> Result<(Dataset, GroundTruth)> {
    let w_seed = derive_seed(seed, &[0x57]);
    let w_star = match &inst.w_star {
        WStarSpec::Signs => gen_sparse_truth(inst.p, inst.p, w_seed)?,
        WStarSpec::Sparse { k } => gen_sparse_truth(inst.p, *k, w_seed)?,
        WStarSpec::Explicit { values } => {
            if values.len() != inst.p {
                return Err(Error::Dimension { what: "explicit w*", expected: inst.p, found: values.len() });
            }
            values.clone().into()
        }
    };
    let corruption = CorruptionSpec { alpha, scheme: inst.scheme.clone() };
    gen_dataset(n, &w_star, &inst.sigma, &inst.noise, &corruption, seed)
}

fn run_estimator(est: &EstimatorSpec, data: &Dataset, truth: &GroundTruth, alpha: f64, fit_seed: u64) -> Result<FitResult> {
    match est {
        EstimatorSpec::Adacrr { config } => {
            let cfg = AdaCrrConfig { seed: fit_seed, ..config.clone() };
            adacrr_fit(data, &cfg, Some(truth))
        }
        EstimatorSpec::Ols => ols_fit(data, Some(truth)),
        EstimatorSpec::Torrent { config, oracle_alpha } => {
            let cfg = if *oracle_alpha { TorrentConfig { alpha, ..*config } } else { *config };
            torrent_fit(data, &cfg, Some(truth))
        }
        EstimatorSpec::Huber { config } => huber_fit(data, config, Some(truth)),
    }
}

/// Runs every (sweep point, estimator, seed) trial. Trials execute in
/// parallel; records come back in deterministic (sweep, estimator, seed)
/// order. A failing trial yields a record with empty error columns.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    let points = spec.points();
    let per_iter = matches!(spec.sweep, Sweep::VaryIter);
    let p = spec.instance.p;

    let cells: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|s| (0..spec.seeds.len()).map(move |k| (s, k)))
        .collect();

    // per (sweep point, seed): one record list per estimator
    let results: Vec<Vec<Vec<TrialRecord>>> = cells
        .par_iter()
        .map(|&(s, k)| {
            let (n, alpha) = points[s];
            let seed = spec.seeds[k];
            let instance = make_instance(&spec.instance, n, alpha, derive_seed(seed, &[s as u64, k as u64]));
            spec.estimators
                .iter()
                .enumerate()
                .map(|(e, named)| {
                    let base = TrialRecord {
                        estimator: named.name.clone(),
                        n,
                        p,
                        alpha,
                        seed,
                        err_sigma: None,
                        err_l2: None,
                        iters: 0,
                        ms: 0.0,
                    };
                    let fit_seed = derive_seed(seed, &[e as u64, s as u64, k as u64]);
                    let outcome = instance
                        .as_ref()
                        .map_err(|err| Error::InvalidSpec(err.to_string()))
                        .and_then(|(data, truth)| Ok((run_estimator(&named.estimator, data, truth, alpha, fit_seed)?, truth)));
                    match outcome {
                        Ok((fit, truth)) => {
                            let ms = fit.wall_time.as_secs_f64() * 1e3;
                            if per_iter {
                                fit.w_trace
                                    .iter()
                                    .enumerate()
                                    .map(|(t, w)| {
                                        let (es, el) = param_error(w, truth);
                                        TrialRecord { err_sigma: Some(es), err_l2: Some(el), iters: t, ms, ..base.clone() }
                                    })
                                    .collect()
                            } else {
                                let (es, el) = param_error(&fit.w_final, truth);
                                vec![TrialRecord { err_sigma: Some(es), err_l2: Some(el), iters: fit.w_trace.len() - 1, ms, ..base }]
                            }
                        }
                        Err(_) => vec![base],
                    }
                })
                .collect()
        })
        .collect();

    let n_seeds = spec.seeds.len();
    let mut out = Vec::new();
    for per_point in results.chunks(n_seeds) {
        for e in 0..spec.estimators.len() {
            for cell in per_point {
                out.extend(cell[e].iter().cloned());
            }
        }
    }
    Ok(out)
}

pub const RECORD_HEADER: &str = "estimator,n,p,alpha,seed,err_sigma,err_l2,iters,ms";

pub fn write_records_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(RECORD_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Median over finite values; `None` for an empty input.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

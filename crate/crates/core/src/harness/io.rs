use crate::adacrr::FitResult;
use crate::baselines::TrajectoryPoint;
use crate::datagen::{Dataset, GroundTruth, NoiseSpec};
use crate::error::{Error, Result};
use crate::harness::param_error_diag;
use crate::numerics::{DenseMatrix, DenseVector};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Writes `x1,...,xp,y` followed by one row per sample.
pub fn write_dataset_csv<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=data.p()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec: Vec<String> = data.x.row(i).iter().map(f64::to_string).collect();
        rec.push(data.y[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv<R: Read>(input: R) -> Result<Dataset> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let cols = header.len();
    if cols < 2 || &header[cols - 1] != "y" {
        return Err(Error::Parse("dataset header must be x1,...,xp,y".into()));
    }
    let p = cols - 1;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(Error::Dimension { what: "dataset row", expected: cols, found: rec.len() });
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse(format!("bad number {field:?}")))?;
            if j < p {
                xs.push(v);
            } else {
                ys.push(v);
            }
        }
    }
    let n = ys.len();
    Dataset::new(DenseMatrix::new(n, p, xs)?, DenseVector::try_new(ys)?)
}

pub fn save_dataset(data: &Dataset, path: &Path) -> Result<()> {
    write_dataset_csv(data, std::fs::File::create(path)?)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset_csv(std::fs::File::open(path)?)
}

/// Ground-truth sidecar stored next to a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub w_star: Vec<f64>,
    pub sigma_diag: Vec<f64>,
    pub corrupted_indices: Vec<usize>,
    pub noise: NoiseSpec,
    pub seed: u64,
}

impl From<&GroundTruth> for TruthSidecar {
    fn from(t: &GroundTruth) -> Self {
        Self {
            w_star: t.w_star.to_vec(),
            sigma_diag: t.sigma_diag.clone(),
            corrupted_indices: t.corrupted_indices.clone(),
            noise: t.noise,
            seed: t.seed,
        }
    }
}

impl TruthSidecar {
    pub fn errors(&self, w: &[f64]) -> (f64, f64) {
        param_error_diag(w, &self.w_star, &self.sigma_diag)
    }
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?)
}

/// JSON form of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub estimator: String,
    pub w_final: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub errors_sigma_norm: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub errors_l2: Option<Vec<f64>>,
    pub set_sizes: Vec<usize>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub wall_time_ms: f64,
}

impl FitReport {
    pub fn new(estimator: &str, fit: &FitResult, config: serde_json::Value, seed: Option<u64>, truth: Option<&TruthSidecar>) -> Self {
        let (sigma, l2) = match truth {
            Some(t) => {
                let (s, l): (Vec<f64>, Vec<f64>) = fit.w_trace.iter().map(|w| t.errors(w)).unzip();
                (Some(s), Some(l))
            }
            None => (fit.errors_sigma_norm.clone(), None),
        };
        Self {
            estimator: estimator.to_string(),
            w_final: fit.w_final.to_vec(),
            errors_sigma_norm: sigma,
            errors_l2: l2,
            set_sizes: fit.set_sizes.clone(),
            config,
            seed,
            wall_time_ms: fit.wall_time.as_secs_f64() * 1e3,
        }
    }
}

pub fn write_trajectory_csv<W: Write>(points: &[TrajectoryPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["w_init", "w_final"])?;
    for pt in points {
        w.write_record([pt.w_init.to_string(), pt.w_final.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

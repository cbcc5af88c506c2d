#![allow(clippy::neg_cmp_op_on_partial_ord)]

use adacrr_core::adacrr::{adacrr_fit, AdaCrrConfig, StepSize, UpdateRule};
use adacrr_core::baselines::{huber_fit, ols_fit, torrent_fit, torrent_fixed_point_trajectory, HuberConfig, TorrentConfig};
use adacrr_core::datagen::{gen_dataset, gen_sparse_truth, CorruptionScheme, CorruptionSpec, NoiseSpec, SigmaSpec};
use adacrr_core::error::{Error, Result};
use adacrr_core::harness::experiment::{run_experiment, write_records_csv, ExperimentSpec};
use adacrr_core::harness::io::{load_dataset, load_json, save_dataset, save_json, write_trajectory_csv, FitReport, TruthSidecar};
use adacrr_core::rng::derive_seed;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "adacrr", version, about = "Robust linear regression under oblivious corruption")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Noisy,
    Noiseless,
}

#[derive(Clone, Copy, ValueEnum)]
enum Estimator {
    AdacrrFc,
    AdacrrGd,
    AdacrrHd,
    Ols,
    Torrent,
    Huber,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with dense ±1 ground truth.
    Generate(GenerateArgs),
    /// Fit one estimator to a dataset CSV.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        estimator: Estimator,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment sweep described by a JSON spec.
    Experiment {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// TORRENT iterates on the one-dimensional counterexample over a grid of starts.
    TorrentDemo {
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0.8)]
        alpha: f64,
        /// lo:hi:step
        #[arg(long, default_value = "0:1:0.05", value_parser = parse_grid)]
        grid: Grid,
        #[arg(long, default_value_t = 30)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// none | gauss:σ | cauchy:s | t:dof,s
    #[arg(long, default_value = "gauss:1", value_parser = parse_noise)]
    noise: NoiseSpec,
    #[arg(long, value_enum, default_value = "noisy")]
    scheme: Scheme,
    /// Condition number of the diagonal covariance; 1 gives the identity.
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
struct Grid(Vec<f64>);

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("bad number {s:?}"))
}

fn parse_noise(s: &str) -> std::result::Result<NoiseSpec, String> {
    let (kind, args) = s.split_once(':').unwrap_or((s, ""));
    let spec = match kind {
        "none" if args.is_empty() => NoiseSpec::None,
        "gauss" | "gaussian" => NoiseSpec::Gaussian { sigma: parse_f64(args)? },
        "cauchy" => NoiseSpec::Cauchy { scale: parse_f64(args)? },
        "t" => {
            let (dof, scale) = args.split_once(',').ok_or("t noise is t:dof,scale")?;
            NoiseSpec::StudentT { dof: parse_f64(dof)?, scale: parse_f64(scale)? }
        }
        _ => return Err(format!("unknown noise {s:?}; expected none, gauss:σ, cauchy:s or t:dof,s")),
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err("grid is lo:hi:step".into());
    };
    let (lo, hi, step) = (parse_f64(lo)?, parse_f64(hi)?, parse_f64(step)?);
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(format!("bad grid {s:?}"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok(Grid((0..=count).map(|i| lo + i as f64 * step).collect()))
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), load_json)
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let GenerateArgs { n, p, alpha, noise, scheme, kappa, seed, ref out, truth: ref truth_out } = *args;
    let sigma = if kappa == 1.0 { SigmaSpec::Identity } else { SigmaSpec::DiagonalConditioned { kappa } };
    let scheme = match scheme {
        Scheme::Noisy => CorruptionScheme::PaperNoisy,
        Scheme::Noiseless => CorruptionScheme::PaperNoiseless,
    };
    let w_star = gen_sparse_truth(p, p, derive_seed(seed, &[0x57]))?;
    let (data, truth) = gen_dataset(n, &w_star, &sigma, &noise, &CorruptionSpec { alpha, scheme }, seed)?;
    save_dataset(&data, out)?;
    if let Some(path) = truth_out {
        save_json(&TruthSidecar::from(&truth), path)?;
    }
    Ok(())
}

fn fit(data: &Path, estimator: Estimator, config: Option<&Path>, truth: Option<&Path>, out: &Path) -> Result<()> {
    let data = load_dataset(data)?;
    let truth: Option<TruthSidecar> = truth.map(load_json).transpose()?;
    let (name, result, config, seed) = match estimator {
        Estimator::AdacrrFc | Estimator::AdacrrGd | Estimator::AdacrrHd => {
            let mut cfg: AdaCrrConfig = load_config(config)?;
            match (estimator, cfg.update) {
                (Estimator::AdacrrFc, _) => cfg.update = UpdateRule::FullyCorrective,
                (Estimator::AdacrrGd, UpdateRule::GradientDescent { .. }) => {}
                (Estimator::AdacrrGd, _) => cfg.update = UpdateRule::GradientDescent { eta: StepSize::Auto, steps: 5 },
                (Estimator::AdacrrHd, UpdateRule::SparseIht { .. }) => {}
                _ => return Err(Error::InvalidConfig("adacrr-hd needs update.kind = sparse_iht with k in the config".into())),
            }
            let name = match estimator {
                Estimator::AdacrrFc => "adacrr-fc",
                Estimator::AdacrrGd => "adacrr-gd",
                _ => "adacrr-hd",
            };
            (name, adacrr_fit(&data, &cfg, None)?, serde_json::to_value(&cfg)?, Some(cfg.seed))
        }
        Estimator::Ols => ("ols", ols_fit(&data, None)?, serde_json::json!({}), None),
        Estimator::Torrent => {
            let cfg: TorrentConfig = load_config(config)?;
            ("torrent", torrent_fit(&data, &cfg, None)?, serde_json::to_value(cfg)?, None)
        }
        Estimator::Huber => {
            let cfg: HuberConfig = load_config(config)?;
            ("huber", huber_fit(&data, &cfg, None)?, serde_json::to_value(cfg)?, None)
        }
    };
    if let Some(t) = &truth {
        if t.w_star.len() != data.p() {
            return Err(Error::Dimension { what: "truth w_star", expected: data.p(), found: t.w_star.len() });
        }
    }
    save_json(&FitReport::new(name, &result, config, seed, truth.as_ref()), out)
}

fn experiment(spec: &Path, out: Option<&Path>) -> Result<()> {
    let spec: ExperimentSpec = load_json(spec)?;
    let records = run_experiment(&spec)?;
    let failed = records.iter().filter(|r| r.failed()).count();
    match out.or(spec.outputs.as_deref()) {
        Some(path) => write_records_csv(&records, std::fs::File::create(path)?)?,
        None => write_records_csv(&records, std::io::stdout().lock())?,
    }
    if failed > 0 {
        eprintln!("{failed} of {} trials failed", records.len());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => generate(&args),
        Command::Fit { data, estimator, config, truth, out } => fit(&data, estimator, config.as_deref(), truth.as_deref(), &out),
        Command::Experiment { spec, out } => experiment(&spec, out.as_deref()),
        Command::TorrentDemo { n, alpha, grid, iters, seed, out } => {
            let points = torrent_fixed_point_trajectory(n, alpha, &grid.0, iters, seed)?;
            write_trajectory_csv(&points, std::fs::File::create(out)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

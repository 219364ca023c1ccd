//! Batch commands behind the CLI.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::{
    compare_models, dynamic_variance_path, residual_analysis, state_bands, summarize, summarize_values, waic,
    ModelRanking, PathBands, PointEstimate, ResidualReport, SigmaSource, WaicReport,
};
use crate::error::{Error, Result};
use crate::filter::{filter, ObservationNoise};
use crate::model::{simulate, SeriesData, StateCov};
use crate::sampling::{run_chains_parallel, PosteriorDraws, Problem};

use super::config::RunConfig;
use super::csv_data::{csv_io, read_csv, write_csv_to};
use super::tables::{
    full, read_draws, read_path_mean, read_waic, write_draws, write_ks, write_qq, write_residuals, write_summary,
    write_waic, PathsTable,
};

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG_COPY: &str = "config.toml";
pub const DRAWS: &str = "draws.csv";
pub const SUMMARY: &str = "summary.csv";
pub const PATHS: &str = "paths.csv";
pub const WAIC: &str = "waic.csv";
pub const WAIC_POINTWISE: &str = "waic_pointwise.csv";

/// Record of one fit, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitManifest {
    pub tool: String,
    pub version: String,
    pub label: String,
    pub model: String,
    pub n: usize,
    pub r: usize,
    pub t_len: usize,
    pub seed: u64,
    pub n_chains: usize,
    pub n_draws: usize,
    pub config_sha256: String,
    pub data_path: String,
    pub data_sha256: String,
    /// False when at least one chain stopped early.
    pub complete: bool,
    pub failures: Vec<String>,
    pub files: Vec<String>,
}

impl FitManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Err(Error::Insufficient(format!("missing fit artifact {}", path.display())));
        }
        let text = std::fs::read_to_string(&path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line() as u64,
            reason: e.to_string(),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Files written by `simulate`.
#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub data: PathBuf,
    pub states: PathBuf,
    pub sigma: PathBuf,
}

/// Simulate from `[truth]` and write `data.csv`, `truth_states.csv` and
/// `truth_sigma.csv`, each headed by a `# seed=` comment.
pub fn cmd_simulate(config: &RunConfig) -> Result<SimulateOutput> {
    let truth = config
        .truth
        .as_ref()
        .ok_or_else(|| Error::config("truth", "required by simulate"))?;
    let r = config.spec.r();
    let spec = config
        .spec
        .clone()
        .with_prior(truth.theta0.clone(), DMatrix::identity(r, r) * 1e-300)?;
    let (data, latent) = simulate(&spec, &truth.garch, &truth.corr, &truth.w, truth.t_len, config.seed)?;
    let dir = config.resolve_output_dir()?;
    create_dir(&dir)?;
    let header = vec![format!("seed={}", config.seed)];

    let out = SimulateOutput {
        data: dir.join("data.csv"),
        states: dir.join("truth_states.csv"),
        sigma: dir.join("truth_sigma.csv"),
    };
    let mut f = std::io::BufWriter::new(std::fs::File::create(&out.data)?);
    write_csv_to(&data, &mut f, &header)?;
    f.flush()?;

    let state_names: Vec<String> = (1..=r).map(|j| format!("theta{j}")).collect();
    write_matrix(&out.states, &header, &state_names, &latent.states, 0)?;
    let sigma_names: Vec<String> = data.names().iter().map(|n| format!("sigma_{n}")).collect();
    write_matrix(&out.sigma, &header, &sigma_names, &latent.sigma, 1)?;
    Ok(out)
}

fn write_matrix(path: &Path, comments: &[String], names: &[String], m: &DMatrix<f64>, t0: usize) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for c in comments {
        writeln!(f, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(f);
    let mut header = vec!["t".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(csv_io)?;
    for k in 0..m.nrows() {
        let mut row = vec![(k + t0).to_string()];
        row.extend(m.row(k).iter().map(|v| full(*v)));
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Result of `fit`.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub dir: PathBuf,
    pub draws: PosteriorDraws,
    pub waic: WaicReport,
    pub manifest: FitManifest,
}

/// Run the sampler on `io.input` and write every output into the output
/// directory. `threads` fixes the size of the worker pool; results do not
/// depend on it.
pub fn cmd_fit(config: &RunConfig, threads: Option<usize>) -> Result<FitOutcome> {
    let input = config
        .input
        .as_ref()
        .ok_or_else(|| Error::config("io.input", "required by fit"))?;
    let bytes = std::fs::read(input)?;
    let data = super::csv_data::read_csv_from(bytes.as_slice(), &input.display().to_string())?;
    if data.n() != config.dim {
        return Err(Error::Dimension(format!(
            "{} has {} series but model.dim = {}",
            input.display(),
            data.n(),
            config.dim
        )));
    }
    let dir = config.resolve_output_dir()?;

    let problem = Problem {
        data: &data,
        spec: &config.spec,
        model: config.model,
        prior: &config.priors,
        config: &config.mcmc,
    };
    let draws = match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?
            .install(|| run_chains_parallel(&problem))?,
        None => run_chains_parallel(&problem)?,
    };
    let report = waic(&draws.pointwise_lp)?;

    create_dir(&dir)?;
    std::fs::write(dir.join(CONFIG_COPY), &config.source)?;
    write_draws(&draws, &dir.join(DRAWS))?;
    let summaries = summarize(&draws)?;
    write_summary(&summaries, &dir.join(SUMMARY))?;
    let estimate = PointEstimate::from_summaries(draws.model, draws.n, draws.r, &summaries)?;

    let mut paths = PathsTable::new();
    paths.push_bands("state", &state_bands(&draws)?, 0);
    paths.push_bands("sigma", &dynamic_variance_path(&draws, SigmaSource::Sampled)?, 1);
    paths.push_bands("sigma_filtered", &dynamic_variance_path(&draws, SigmaSource::Filtered)?, 1);
    paths.push_bands("forecast", &point_forecasts(&data, config, &estimate)?, 1);
    paths.write(&dir.join(PATHS))?;

    let label = config.label();
    write_waic(&label, &report, &dir.join(WAIC), &dir.join(WAIC_POINTWISE))?;
    write_acceptance(&draws, &dir.join("acceptance.csv"))?;
    write_ergodic(&draws, &dir.join("ergodic.csv"))?;
    let mut files = vec![CONFIG_COPY, DRAWS, SUMMARY, PATHS, WAIC, WAIC_POINTWISE, "acceptance.csv", "ergodic.csv"];
    if !draws.imputed.is_empty() && !data.missing_cells().is_empty() {
        write_imputed(&draws, &data, &dir.join("imputed.csv"))?;
        files.push("imputed.csv");
    }

    let manifest = FitManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        label,
        model: config.model.name().into(),
        n: draws.n,
        r: draws.r,
        t_len: draws.t_len,
        seed: config.seed,
        n_chains: config.mcmc.n_chains,
        n_draws: draws.len(),
        config_sha256: sha256_hex(config.source.as_bytes()),
        data_path: std::fs::canonicalize(input).unwrap_or_else(|_| input.clone()).display().to_string(),
        data_sha256: sha256_hex(&bytes),
        complete: draws.failures.is_empty(),
        failures: draws
            .failures
            .iter()
            .map(|f| format!("chain {}: {}", f.chain, f.message))
            .collect(),
        files: files.iter().map(|f| f.to_string()).collect(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Numerical(e.to_string()))?;
    std::fs::write(dir.join(MANIFEST), json + "\n")?;
    Ok(FitOutcome {
        dir,
        draws,
        waic: report,
        manifest,
    })
}

/// One-step forecast mean and 95% band at the parameter point estimate.
fn point_forecasts(data: &SeriesData, config: &RunConfig, est: &PointEstimate) -> Result<PathBands> {
    let w = StateCov::new(est.w.clone())?;
    let noise = match &est.garch {
        Some(g) => ObservationNoise::Garch {
            params: g,
            corr: &est.obs,
        },
        None => ObservationNoise::Constant(&est.obs),
    };
    let out = filter(data, &config.spec, noise, &w)?;
    let (t_len, n) = (data.len(), data.n());
    let mut mean = DMatrix::zeros(t_len, n);
    let mut lo = DMatrix::zeros(t_len, n);
    let mut hi = DMatrix::zeros(t_len, n);
    for (t, step) in out.steps.iter().enumerate() {
        for i in 0..n {
            let half = 1.959_963_984_540_054 * step.q[(i, i)].sqrt();
            mean[(t, i)] = step.f[i];
            lo[(t, i)] = step.f[i] - half;
            hi[(t, i)] = step.f[i] + half;
        }
    }
    Ok(PathBands {
        median: mean.clone(),
        mean,
        lo,
        hi,
    })
}

fn write_acceptance(draws: &PosteriorDraws, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(["chain", "block", "rate"]).map_err(csv_io)?;
    for a in &draws.acceptance_rates {
        w.write_record([a.chain.to_string(), a.block.clone(), full(a.rate)]).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-chain running means of every scalar parameter.
fn write_ergodic(draws: &PosteriorDraws, path: &Path) -> Result<()> {
    let params = draws.scalar_parameters();
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    let mut header = vec!["chain".to_string(), "iteration".into()];
    header.extend(params.iter().map(|(n, _)| n.clone()));
    w.write_record(&header).map_err(csv_io)?;
    let mut sums = vec![0.0; params.len()];
    let mut count = 0usize;
    for s in 0..draws.len() {
        if s > 0 && draws.chain_id[s] != draws.chain_id[s - 1] {
            sums.iter_mut().for_each(|v| *v = 0.0);
            count = 0;
        }
        count += 1;
        let mut row = vec![draws.chain_id[s].to_string(), draws.iteration[s].to_string()];
        for (acc, (_, v)) in sums.iter_mut().zip(&params) {
            *acc += v[s];
            row.push(full(*acc / count as f64));
        }
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn write_imputed(draws: &PosteriorDraws, data: &SeriesData, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(["t", "series", "mean", "median", "lo", "hi"]).map_err(csv_io)?;
    for (k, (t, i)) in data.missing_cells().into_iter().enumerate() {
        let values: Vec<f64> = draws.imputed.iter().map(|d| d[k]).collect();
        let s = summarize_values("imputed", &values)?;
        w.write_record([
            (t + 1).to_string(),
            (i + 1).to_string(),
            full(s.mean),
            full(s.median),
            full(s.ci_lo),
            full(s.ci_hi),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Result of `compare`.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub ranking: ModelRanking,
    pub reports: Vec<(String, WaicReport)>,
    /// Human-readable summary, also printed by the CLI.
    pub text: String,
}

/// Rank two or more fits of the same data by WAIC and write `output` (CSV).
pub fn cmd_compare(fits: &[PathBuf], output: Option<&Path>) -> Result<Comparison> {
    if fits.len() < 2 {
        return Err(Error::Insufficient("compare needs at least two fit directories".into()));
    }
    let manifests = fits.iter().map(|d| FitManifest::read(d)).collect::<Result<Vec<_>>>()?;
    if let Some((k, m)) = manifests.iter().enumerate().skip(1).find(|(_, m)| m.data_sha256 != manifests[0].data_sha256)
    {
        return Err(Error::Mismatch(format!(
            "{} and {} were fitted to different data ({} vs {})",
            fits[0].display(),
            fits[k].display(),
            &manifests[0].data_sha256[..12],
            &m.data_sha256[..12]
        )));
    }
    let mut reports = Vec::with_capacity(fits.len());
    for dir in fits {
        reports.push(read_waic(&dir.join(WAIC), &dir.join(WAIC_POINTWISE))?);
    }
    // Fall back to directory names when labels collide.
    let mut names: Vec<String> = reports.iter().map(|r| r.0.clone()).collect();
    let unique = names.iter().collect::<std::collections::BTreeSet<_>>().len() == names.len();
    if !unique {
        names = fits
            .iter()
            .zip(&reports)
            .map(|(d, r)| {
                let dir = d.file_name().map_or_else(|| d.display().to_string(), |s| s.to_string_lossy().into());
                format!("{}:{dir}", r.0)
            })
            .collect();
    }
    for (r, name) in reports.iter_mut().zip(names) {
        r.0 = name;
    }
    let ranking = compare_models(&reports)?;

    let mut text = String::new();
    for m in &ranking.ranked {
        let _ = writeln!(text, "{:<24} WAIC {:>16.4}  delta {:>12.4}", m.name, m.waic, m.delta);
    }
    for (a, b, d) in &ranking.differences {
        let _ = writeln!(text, "WAIC({a}) - WAIC({b}) = {d:.4}");
    }
    match ranking.selected() {
        Some(name) => {
            let _ = writeln!(text, "selected: {name}");
        }
        None => {
            let _ = writeln!(text, "selected: tie");
        }
    }

    if let Some(path) = output {
        let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
        w.write_record(["model", "lppd", "p_waic", "waic", "delta", "selected"]).map_err(csv_io)?;
        for m in &ranking.ranked {
            let rep = &reports.iter().find(|r| r.0 == m.name).expect("ranked names come from reports").1;
            let selected = ranking.selected() == Some(m.name.as_str());
            w.write_record([
                m.name.clone(),
                full(rep.lppd),
                full(rep.p_waic),
                full(m.waic),
                full(m.delta),
                selected.to_string(),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;
    }
    Ok(Comparison { ranking, reports, text })
}

/// Residual diagnostics of a fit: writes `residuals.csv`, `qq.csv` and
/// `ks.csv` into `output` (the fit directory by default).
pub fn cmd_diagnose(fit_dir: &Path, data_path: &Path, output: Option<&Path>) -> Result<ResidualReport> {
    let manifest = FitManifest::read(fit_dir)?;
    let config_path = fit_dir.join(CONFIG_COPY);
    if !config_path.exists() {
        return Err(Error::Insufficient(format!("missing fit artifact {}", config_path.display())));
    }
    let config = RunConfig::from_file(&config_path)?;
    let bytes = std::fs::read(data_path)?;
    if sha256_hex(&bytes) != manifest.data_sha256 {
        return Err(Error::Mismatch(format!(
            "{} differs from the data the fit in {} used",
            data_path.display(),
            fit_dir.display()
        )));
    }
    let data = read_csv(data_path)?;

    let columns = read_draws(&fit_dir.join(DRAWS))?;
    let summaries = columns
        .iter()
        .filter(|(name, _)| !matches!(name.as_str(), "chain" | "iteration" | "loglik"))
        .map(|(name, v)| summarize_values(name, v))
        .collect::<Result<Vec<_>>>()?;
    let estimate = PointEstimate::from_summaries(config.model, manifest.n, manifest.r, &summaries)?;
    let states = read_path_mean(&fit_dir.join(PATHS), "state", 0)?;
    let report = residual_analysis(&data, &config.spec, &estimate, &states)?;

    let out = output.unwrap_or(fit_dir);
    create_dir(out)?;
    write_residuals(&report, &out.join("residuals.csv"))?;
    write_qq(&report, &out.join("qq.csv"))?;
    write_ks(&report, data.names(), &out.join("ks.csv"))?;
    Ok(report)
}

//! Plot-ready CSV tables written by `fit` and read back by `compare` and
//! `diagnose`.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::diagnostics::{ParameterSummary, PathBands, ResidualReport, WaicReport};
use crate::error::{Error, Result};
use crate::sampling::PosteriorDraws;

use super::csv_data::csv_io;

/// Lossless decimal form (17 significant digits).
pub fn full(x: f64) -> String {
    if x.is_nan() {
        "NA".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Four significant digits in positional notation.
pub fn sig4(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NA".into() } else { x.to_string() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(exp - 3);
    let rounded = (x / scale).round() * scale;
    // Rounding can carry into the next decade (9.9996 -> 10.00).
    let exp = rounded.abs().log10().floor() as i32;
    let decimals = (3 - exp).max(0) as usize;
    format!("{rounded:.decimals$}")
}

fn writer(path: &Path) -> Result<csv::Writer<std::io::BufWriter<std::fs::File>>> {
    Ok(csv::Writer::from_writer(std::io::BufWriter::new(std::fs::File::create(path)?)))
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    if !path.exists() {
        return Err(Error::Insufficient(format!("missing fit artifact {}", path.display())));
    }
    csv::ReaderBuilder::new().from_path(path).map_err(csv_io)
}

fn parse_err(path: &Path, line: u64, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        reason: reason.into(),
    }
}

fn parse_num(path: &Path, line: u64, cell: &str) -> Result<f64> {
    if cell == "NA" {
        return Ok(f64::NAN);
    }
    cell.parse().map_err(|_| parse_err(path, line, format!("cannot parse `{cell}`")))
}

/// One row per retained draw: `chain, iteration, loglik`, then every scalar parameter.
pub fn write_draws(draws: &PosteriorDraws, path: &Path) -> Result<()> {
    let params = draws.scalar_parameters();
    let mut w = writer(path)?;
    let mut header = vec!["chain".to_string(), "iteration".into(), "loglik".into()];
    header.extend(params.iter().map(|(n, _)| n.clone()));
    w.write_record(&header).map_err(csv_io)?;
    for s in 0..draws.len() {
        let mut row = vec![draws.chain_id[s].to_string(), draws.iteration[s].to_string(), full(draws.loglik[s])];
        row.extend(params.iter().map(|(_, v)| full(v[s])));
        w.write_record(&row).map_err(csv_io)?;
    }
    finish(w)
}

/// Columns of a draws file, including `chain`, `iteration` and `loglik`.
pub fn read_draws(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(csv_io)?.clone();
    let mut cols: Vec<(String, Vec<f64>)> = header.iter().map(|h| (h.to_string(), Vec::new())).collect();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_io)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != cols.len() {
            return Err(parse_err(path, line, "ragged row"));
        }
        for (c, cell) in cols.iter_mut().zip(rec.iter()) {
            c.1.push(parse_num(path, line, cell)?);
        }
    }
    Ok(cols)
}

pub fn write_summary(summaries: &[ParameterSummary], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["parameter", "mean", "median", "sd", "ci_lo", "ci_hi"]).map_err(csv_io)?;
    for s in summaries {
        w.write_record([s.name.clone(), sig4(s.mean), sig4(s.median), sig4(s.sd), sig4(s.ci_lo), sig4(s.ci_hi)])
            .map_err(csv_io)?;
    }
    finish(w)
}

pub fn read_summary(path: &Path) -> Result<Vec<ParameterSummary>> {
    let mut rdr = reader(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_io)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 6 {
            return Err(parse_err(path, line, "expected 6 fields"));
        }
        let num = |k: usize| parse_num(path, line, &rec[k]);
        out.push(ParameterSummary {
            name: rec[0].to_string(),
            mean: num(1)?,
            median: num(2)?,
            sd: num(3)?,
            ci_lo: num(4)?,
            ci_hi: num(5)?,
        });
    }
    Ok(out)
}

/// Long-format per-time quantities.
#[derive(Debug, Default)]
pub struct PathsTable {
    rows: Vec<(String, usize, usize, [f64; 4])>,
}

impl PathsTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add bands whose row `k` corresponds to time `k + t_offset` and column
    /// `j` to component `j + 1`.
    pub fn push_bands(&mut self, quantity: &str, bands: &PathBands, t_offset: usize) {
        for j in 0..bands.mean.ncols() {
            for k in 0..bands.mean.nrows() {
                let v = [bands.mean[(k, j)], bands.median[(k, j)], bands.lo[(k, j)], bands.hi[(k, j)]];
                self.rows.push((quantity.to_string(), j + 1, k + t_offset, v));
            }
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = writer(path)?;
        w.write_record(["quantity", "index", "t", "mean", "median", "lo", "hi"]).map_err(csv_io)?;
        for (q, i, t, v) in &self.rows {
            w.write_record([q.clone(), i.to_string(), t.to_string(), full(v[0]), full(v[1]), full(v[2]), full(v[3])])
                .map_err(csv_io)?;
        }
        finish(w)
    }
}

/// Posterior-mean path of `quantity` from a paths file, `rows × components`
/// with row `k` holding time `k + t_offset`.
pub fn read_path_mean(path: &Path, quantity: &str, t_offset: usize) -> Result<DMatrix<f64>> {
    let mut rdr = reader(path)?;
    let mut cells = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_io)?;
        if &rec[0] != quantity {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line());
        let idx: usize = rec[1].parse().map_err(|_| parse_err(path, line, "bad index"))?;
        let t: usize = rec[2].parse().map_err(|_| parse_err(path, line, "bad time"))?;
        if idx == 0 || t < t_offset {
            return Err(parse_err(path, line, "index or time out of range"));
        }
        cells.push((t - t_offset, idx - 1, parse_num(path, line, &rec[3])?));
    }
    if cells.is_empty() {
        return Err(Error::Insufficient(format!("no `{quantity}` rows in {}", path.display())));
    }
    let rows = cells.iter().map(|c| c.0).max().unwrap_or(0) + 1;
    let cols = cells.iter().map(|c| c.1).max().unwrap_or(0) + 1;
    if cells.len() != rows * cols {
        return Err(Error::Dimension(format!("`{quantity}` rows in {} are incomplete", path.display())));
    }
    let mut m = DMatrix::zeros(rows, cols);
    for (t, i, v) in cells {
        m[(t, i)] = v;
    }
    Ok(m)
}

/// WAIC totals and per-time contributions.
pub fn write_waic(label: &str, report: &WaicReport, path: &Path, pointwise_path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["model", "lppd", "p_waic", "waic", "n_draws", "t_len"]).map_err(csv_io)?;
    w.write_record([
        label.to_string(),
        full(report.lppd),
        full(report.p_waic),
        full(report.waic),
        report.n_draws.to_string(),
        report.per_point.len().to_string(),
    ])
    .map_err(csv_io)?;
    finish(w)?;
    let mut w = writer(pointwise_path)?;
    w.write_record(["t", "waic"]).map_err(csv_io)?;
    for (t, v) in report.per_point.iter().enumerate() {
        w.write_record([(t + 1).to_string(), full(*v)]).map_err(csv_io)?;
    }
    finish(w)
}

pub fn read_waic(path: &Path, pointwise_path: &Path) -> Result<(String, WaicReport)> {
    let mut rdr = reader(path)?;
    let rec = rdr
        .records()
        .next()
        .ok_or_else(|| parse_err(path, 2, "no WAIC row"))?
        .map_err(csv_io)?;
    if rec.len() != 6 {
        return Err(parse_err(path, 2, "expected 6 fields"));
    }
    let n_draws = rec[4].parse().map_err(|_| parse_err(path, 2, "bad n_draws"))?;
    let t_len: usize = rec[5].parse().map_err(|_| parse_err(path, 2, "bad t_len"))?;
    let mut per_point = Vec::with_capacity(t_len);
    let mut prdr = reader(pointwise_path)?;
    for r in prdr.records() {
        let r = r.map_err(csv_io)?;
        let line = r.position().map_or(0, |p| p.line());
        per_point.push(parse_num(pointwise_path, line, &r[1])?);
    }
    if per_point.len() != t_len {
        return Err(parse_err(pointwise_path, 1, format!("expected {t_len} rows")));
    }
    Ok((
        rec[0].to_string(),
        WaicReport {
            lppd: parse_num(path, 2, &rec[1])?,
            p_waic: parse_num(path, 2, &rec[2])?,
            waic: parse_num(path, 2, &rec[3])?,
            per_point,
            n_draws,
        },
    ))
}

/// Residuals in long format; missing cells are `NA`.
pub fn write_residuals(report: &ResidualReport, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "series", "residual", "sigma", "standardized"]).map_err(csv_io)?;
    let (t_len, n) = report.residuals.shape();
    for i in 0..n {
        for t in 0..t_len {
            w.write_record([
                (t + 1).to_string(),
                (i + 1).to_string(),
                full(report.residuals[(t, i)]),
                full(report.sigma[(t, i)]),
                full(report.standardized[(t, i)]),
            ])
            .map_err(csv_io)?;
        }
    }
    finish(w)
}

pub fn write_qq(report: &ResidualReport, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["series", "theoretical", "sample"]).map_err(csv_io)?;
    for (i, pairs) in report.qq.iter().enumerate() {
        for (x, y) in pairs {
            w.write_record([(i + 1).to_string(), full(*x), full(*y)]).map_err(csv_io)?;
        }
    }
    finish(w)
}

pub fn write_ks(report: &ResidualReport, names: &[String], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["series", "name", "n", "statistic", "p_value", "statistic_raw", "p_value_raw"])
        .map_err(csv_io)?;
    for (i, (ks, raw)) in report.ks.iter().zip(&report.ks_raw).enumerate() {
        w.write_record([
            (i + 1).to_string(),
            names[i].clone(),
            ks.n.to_string(),
            full(ks.statistic),
            full(ks.p_value),
            full(raw.statistic),
            full(raw.p_value),
        ])
        .map_err(csv_io)?;
    }
    finish(w)
}

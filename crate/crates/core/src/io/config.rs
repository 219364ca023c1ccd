//! Run configuration in TOML.
//!
//! ```toml
//! seed = 42
//! name = "garch"            # optional label used by `compare`
//!
//! [model]
//! kind = "rwpn"             # or "trend"
//! dim = 4
//! c0 = 1e7                  # optional prior state variance (scalar, diagonal or matrix)
//!
//! [garch]
//! enabled = true
//! p = 1
//! q = 1
//!
//! [priors]
//! iw_df = 10.0
//! iw_scale = 0.1            # scalar × I, a diagonal list or a full matrix
//!
//! [mcmc]
//! n_chains = 4
//! burn_in = 20000
//!
//! [io]
//! input = "data.csv"        # relative to the config file
//! output_dir = "fit"
//!
//! [truth]                   # `simulate` only
//! t_len = 1000
//! alpha0 = [1, 1, 2, 2]
//! alpha = [0.1, 0.3, 0.1, 0.2]
//! beta = [0.8, 0.6, 0.4, 0.7]
//! w = 0.1
//! theta0 = [0, 0, 0, 0]    # optional
//! ```

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::model::{CorrelationFactor, GarchParams, ModelSpec, SeriesGarch, StateCov, DIFFUSE_PRIOR_VARIANCE};
use crate::sampling::{McmcConfig, ObservationModel, PriorSpec};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "GARCH_SSM_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Random walk plus noise: `F' = G = I_n`.
    Rwpn,
    /// Local linear trend per series.
    Trend,
}

/// True parameter values for simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthConfig {
    pub t_len: usize,
    pub garch: GarchParams,
    pub corr: CorrelationFactor,
    pub w: StateCov,
    /// Initial state `θ_0` (zeros unless given).
    pub theta0: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: Option<String>,
    pub seed: u64,
    pub kind: ModelKind,
    pub dim: usize,
    pub spec: ModelSpec,
    pub model: ObservationModel,
    pub priors: PriorSpec,
    pub mcmc: McmcConfig,
    pub input: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub truth: Option<TruthConfig>,
    /// Verbatim configuration text.
    pub source: String,
}

impl RunConfig {
    /// Label used in comparisons: the configured `name` or the model type.
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.model.name().to_string())
    }

    /// `io.output_dir`, falling back to the environment default.
    pub fn resolve_output_dir(&self) -> Result<PathBuf> {
        if let Some(dir) = &self.output_dir {
            return Ok(dir.clone());
        }
        std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .ok_or_else(|| Error::config("io.output_dir", format!("not set and ${OUTPUT_DIR_ENV} is undefined")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parse configuration text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let root: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
        let mut root = Section::new("", root);

        let name = root.opt_str("name")?;
        let seed = root.opt_u64("seed")?.unwrap_or(1);

        let mut model = root.section("model")?;
        let kind = match model.opt_str("kind")?.as_deref().unwrap_or("rwpn") {
            "rwpn" => ModelKind::Rwpn,
            "trend" => ModelKind::Trend,
            other => return Err(Error::config(model.key("kind"), format!("unknown model kind `{other}`"))),
        };
        let dim = model.req_usize("dim")?;
        if dim == 0 {
            return Err(Error::config(model.key("dim"), "must be at least 1"));
        }
        let base_spec = match kind {
            ModelKind::Rwpn => ModelSpec::random_walk_plus_noise(dim)?,
            ModelKind::Trend => ModelSpec::local_linear_trend(dim)?,
        };
        let r = base_spec.r();
        let m0 = match model.opt_f64_list("m0")? {
            Some(v) if v.len() != r => return Err(Error::config(model.key("m0"), format!("needs {r} entries"))),
            Some(v) => DVector::from_vec(v),
            None => DVector::zeros(r),
        };
        let c0 = model
            .opt_matrix("c0", r)?
            .unwrap_or_else(|| DMatrix::identity(r, r) * DIFFUSE_PRIOR_VARIANCE);
        let spec = base_spec
            .with_prior(m0, c0)
            .map_err(|e| Error::config(model.key("c0"), e.to_string()))?;
        model.finish()?;

        let mut garch = root.section("garch")?;
        let enabled = garch.opt_bool("enabled")?.unwrap_or(true);
        let p = garch.opt_usize("p")?.unwrap_or(1);
        let q = garch.opt_usize("q")?.unwrap_or(1);
        if enabled && p + q == 0 {
            return Err(Error::config(garch.key("p"), "p + q must be positive"));
        }
        garch.finish()?;
        let obs_model = if enabled { ObservationModel::Garch { p, q } } else { ObservationModel::Constant };

        let mut pr = root.section("priors")?;
        let mut priors = PriorSpec::defaults(dim, r);
        if let Some(v) = pr.opt_f64("cauchy_scale_alpha0")? {
            priors.cauchy_scale_alpha0 = v;
        }
        if let Some(v) = pr.opt_f64("cauchy_scale_ab")? {
            priors.cauchy_scale_ab = v;
        }
        if let Some(v) = pr.opt_f64("cauchy_scale_udiag")? {
            priors.cauchy_scale_udiag = v;
        }
        if let Some(v) = pr.opt_f64("normal_sd_uoffdiag")? {
            priors.normal_sd_uoffdiag = v;
        }
        if let Some(v) = pr.opt_f64("iw_df")? {
            priors.iw_df = v;
        }
        if let Some(m) = pr.opt_matrix("iw_scale", r)? {
            priors.iw_scale = m;
        }
        if let Some(m) = pr.opt_matrix("iw_obs_scale", dim)? {
            priors.iw_obs_scale = m;
        }
        if let Some(v) = pr.opt_bool("rho_uniform")? {
            priors.rho_uniform = v;
        }
        pr.finish()?;
        priors.validate(dim, r).map_err(param_to_config)?;

        let mut mc = root.section("mcmc")?;
        let mut mcmc = McmcConfig {
            seed,
            ..McmcConfig::default()
        };
        if let Some(v) = mc.opt_usize("n_chains")? {
            mcmc.n_chains = v;
        }
        if let Some(v) = mc.opt_usize("burn_in")? {
            mcmc.burn_in = v;
        }
        if let Some(v) = mc.opt_usize("thin")? {
            mcmc.thin = v;
        }
        if let Some(v) = mc.opt_usize("n_keep")? {
            mcmc.n_keep = v;
        }
        if let Some(v) = mc.opt_f64("proposal_sd_alpha0")? {
            mcmc.proposal_sd_alpha0 = v;
        }
        if let Some(v) = mc.opt_f64("proposal_sd_loadings")? {
            mcmc.proposal_sd_loadings = v;
        }
        if let Some(v) = mc.opt_f64("proposal_sd_corr")? {
            mcmc.proposal_sd_corr = v;
        }
        if let Some(v) = mc.opt_f64("proposal_sd_w")? {
            mcmc.proposal_sd_w = v;
        }
        if let Some(v) = mc.opt_bool("adapt")? {
            mcmc.adapt = v;
        }
        if let Some(v) = mc.opt_usize("path_draws")? {
            mcmc.path_draws = v;
        }
        mc.finish()?;
        mcmc.validate().map_err(param_to_config)?;

        let mut io = root.section("io")?;
        let input = io.opt_str("input")?.map(|s| base.join(s));
        let output_dir = io.opt_str("output_dir")?.map(|s| base.join(s));
        io.finish()?;

        let truth = if root.has("truth") {
            Some(parse_truth(root.section("truth")?, dim, r, p, q)?)
        } else {
            None
        };
        root.finish()?;

        Ok(Self {
            name,
            seed,
            kind,
            dim,
            spec,
            model: obs_model,
            priors,
            mcmc,
            input,
            output_dir,
            truth,
            source: text.to_string(),
        })
    }
}

fn param_to_config(e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => Error::Config { key: name, reason },
        other => other,
    }
}

fn parse_truth(mut tr: Section, n: usize, r: usize, p: usize, q: usize) -> Result<TruthConfig> {
    let t_len = tr.req_usize("t_len")?;
    if t_len == 0 {
        return Err(Error::config(tr.key("t_len"), "must be at least 1"));
    }
    let alpha0 = tr.req_f64_list("alpha0", n)?;
    let alpha = tr.opt_f64_list("alpha")?.unwrap_or_else(|| vec![0.0; n * p]);
    let beta = tr.opt_f64_list("beta")?.unwrap_or_else(|| vec![0.0; n * q]);
    if alpha.len() != n * p {
        return Err(Error::config(tr.key("alpha"), format!("needs {} entries (series-major, p per series)", n * p)));
    }
    if beta.len() != n * q {
        return Err(Error::config(tr.key("beta"), format!("needs {} entries (series-major, q per series)", n * q)));
    }
    let series = (0..n)
        .map(|i| SeriesGarch::new(alpha0[i], alpha[i * p..(i + 1) * p].to_vec(), beta[i * q..(i + 1) * q].to_vec()))
        .collect();
    let garch = GarchParams::new(series).map_err(|e| Error::config(tr.key("alpha0"), e.to_string()))?;
    let corr = match tr.opt_matrix("corr", n)? {
        Some(m) => CorrelationFactor::from_correlation(&m).map_err(|e| Error::config(tr.key("corr"), e.to_string()))?,
        None => CorrelationFactor::identity(n),
    };
    let w = tr.req_matrix("w", r)?;
    let w = StateCov::new(w).map_err(|e| Error::config(tr.key("w"), e.to_string()))?;
    let theta0 = match tr.opt_f64_list("theta0")? {
        Some(v) if v.len() != r => return Err(Error::config(tr.key("theta0"), format!("needs {r} entries"))),
        Some(v) => DVector::from_vec(v),
        None => DVector::zeros(r),
    };
    tr.finish()?;
    Ok(TruthConfig {
        t_len,
        garch,
        corr,
        w,
        theta0,
    })
}

/// A TOML table that tracks which keys were consumed so leftovers can be
/// reported with their full dotted name.
struct Section {
    prefix: String,
    table: Table,
}

impl Section {
    fn new(prefix: &str, table: Table) -> Self {
        Self {
            prefix: prefix.to_string(),
            table,
        }
    }

    fn key(&self, k: &str) -> String {
        if self.prefix.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.prefix)
        }
    }

    fn has(&self, k: &str) -> bool {
        self.table.contains_key(k)
    }

    fn take(&mut self, k: &str) -> Option<Value> {
        self.table.remove(k)
    }

    fn section(&mut self, k: &str) -> Result<Section> {
        let full = self.key(k);
        match self.take(k) {
            None => Ok(Section::new(&full, Table::new())),
            Some(Value::Table(t)) => Ok(Section::new(&full, t)),
            Some(_) => Err(Error::config(full, "expected a table")),
        }
    }

    fn finish(self) -> Result<()> {
        match self.table.keys().next() {
            Some(k) => Err(Error::config(self.key(k), "unknown key")),
            None => Ok(()),
        }
    }

    fn opt_str(&mut self, k: &str) -> Result<Option<String>> {
        match self.take(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(Error::config(self.key(k), "expected a string")),
        }
    }

    fn opt_bool(&mut self, k: &str) -> Result<Option<bool>> {
        match self.take(k) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(b)),
            Some(_) => Err(Error::config(self.key(k), "expected true or false")),
        }
    }

    fn opt_u64(&mut self, k: &str) -> Result<Option<u64>> {
        match self.take(k) {
            None => Ok(None),
            Some(Value::Integer(i)) if i >= 0 => Ok(Some(i as u64)),
            Some(_) => Err(Error::config(self.key(k), "expected a non-negative integer")),
        }
    }

    fn opt_usize(&mut self, k: &str) -> Result<Option<usize>> {
        Ok(self.opt_u64(k)?.map(|v| v as usize))
    }

    fn req_usize(&mut self, k: &str) -> Result<usize> {
        self.opt_usize(k)?.ok_or_else(|| Error::config(self.key(k), "required"))
    }

    fn opt_f64(&mut self, k: &str) -> Result<Option<f64>> {
        match self.take(k) {
            None => Ok(None),
            Some(v) => as_f64(&v).map(Some).ok_or_else(|| Error::config(self.key(k), "expected a number")),
        }
    }

    fn opt_f64_list(&mut self, k: &str) -> Result<Option<Vec<f64>>> {
        match self.take(k) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(as_f64)
                .collect::<Option<Vec<_>>>()
                .map(Some)
                .ok_or_else(|| Error::config(self.key(k), "expected a list of numbers")),
            Some(_) => Err(Error::config(self.key(k), "expected a list of numbers")),
        }
    }

    fn req_f64_list(&mut self, k: &str, len: usize) -> Result<Vec<f64>> {
        let v = self.opt_f64_list(k)?.ok_or_else(|| Error::config(self.key(k), "required"))?;
        if v.len() != len {
            return Err(Error::config(self.key(k), format!("needs {len} entries")));
        }
        Ok(v)
    }

    /// A scalar (times the identity), a diagonal list or a list of rows.
    fn opt_matrix(&mut self, k: &str, d: usize) -> Result<Option<DMatrix<f64>>> {
        let key = self.key(k);
        let Some(v) = self.take(k) else { return Ok(None) };
        if let Some(s) = as_f64(&v) {
            return Ok(Some(DMatrix::identity(d, d) * s));
        }
        let Value::Array(a) = v else {
            return Err(Error::config(key, "expected a number or a list"));
        };
        if a.iter().all(|x| as_f64(x).is_some()) {
            if a.len() != d {
                return Err(Error::config(key, format!("diagonal needs {d} entries")));
            }
            let diag: Vec<f64> = a.iter().filter_map(as_f64).collect();
            return Ok(Some(DMatrix::from_diagonal(&DVector::from_vec(diag))));
        }
        let mut m = DMatrix::zeros(d, d);
        if a.len() != d {
            return Err(Error::config(key, format!("matrix needs {d} rows")));
        }
        for (i, row) in a.iter().enumerate() {
            let row = row
                .as_array()
                .filter(|r| r.len() == d)
                .ok_or_else(|| Error::config(key.clone(), format!("row {} must have {d} numbers", i + 1)))?;
            for (j, x) in row.iter().enumerate() {
                m[(i, j)] = as_f64(x).ok_or_else(|| Error::config(key.clone(), "matrix entries must be numbers"))?;
            }
        }
        Ok(Some(m))
    }

    fn req_matrix(&mut self, k: &str, d: usize) -> Result<DMatrix<f64>> {
        self.opt_matrix(k, d)?.ok_or_else(|| Error::config(self.key(k), "required"))
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
seed = 7
[model]
kind = "rwpn"
dim = 2
[garch]
enabled = true
[priors]
iw_scale = [[0.2, 0.0], [0.0, 0.3]]
[mcmc]
n_chains = 2
burn_in = 10
thin = 1
n_keep = 4
[io]
input = "data.csv"
output_dir = "out"
[truth]
t_len = 5
alpha0 = [1, 2]
alpha = [0.1, 0.2]
beta = [0.5, 0.6]
corr = [[1, 0.3], [0.3, 1]]
w = [0.1, 0.2]
"#;

    #[test]
    fn parses_full_document() {
        let c = RunConfig::parse(FULL, Path::new("/base")).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.mcmc.seed, 7);
        assert_eq!(c.mcmc.n_chains, 2);
        assert_eq!(c.priors.iw_scale[(1, 1)], 0.3);
        assert_eq!(c.input.as_deref(), Some(Path::new("/base/data.csv")));
        let t = c.truth.unwrap();
        assert_eq!(t.garch.series(1).beta, vec![0.6]);
        assert_eq!(t.w.matrix()[(1, 1)], 0.2);
        assert_eq!(c.model, ObservationModel::Garch { p: 1, q: 1 });
    }

    #[test]
    fn dotted_keys_are_equivalent() {
        let c = RunConfig::parse("model.dim = 3\ngarch.enabled = false\nmcmc.thin = 5\n", Path::new(".")).unwrap();
        assert_eq!(c.dim, 3);
        assert_eq!(c.model, ObservationModel::Constant);
        assert_eq!(c.mcmc.thin, 5);
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            ("model.dim = 2\nmcmc.burn_inn = 3\n", "mcmc.burn_inn"),
            ("model.dim = 2\nmcmc.thin = 0\n", "mcmc.thin"),
            ("model.dim = 2\npriors.iw_df = 0.5\n", "priors.iw_df"),
            ("model.dim = 2\nmodel.kind = \"arma\"\n", "model.kind"),
            ("mcmc.thin = 1\n", "model.dim"),
            ("model.dim = 2\ngarch.p = \"one\"\n", "garch.p"),
            ("model.dim = 2\n[truth]\nt_len = 3\nalpha0 = [1]\nw = 0.1\n", "truth.alpha0"),
            ("model.dim = 2\nbogus = 1\n", "bogus"),
        ];
        for (text, key) in cases {
            let err = RunConfig::parse(text, Path::new(".")).unwrap_err();
            match &err {
                Error::Config { key: k, .. } => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: unexpected error {other}"),
            }
        }
    }

    #[test]
    fn trend_dimensions() {
        let c = RunConfig::parse("model.kind = \"trend\"\nmodel.dim = 2\n", Path::new(".")).unwrap();
        assert_eq!(c.spec.r(), 4);
        assert_eq!(c.priors.iw_scale.nrows(), 4);
    }
}

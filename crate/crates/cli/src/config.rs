//! Experiment configuration: a flat `key = value` text file.
//!
//! Blank lines and lines starting with `#` are ignored. Every key has a
//! default, so an empty file is a valid configuration. The resolved
//! configuration is written back in the same format into every report.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clilm::fit::{Beta0Grid, McmcSettings};
use clilm::model::{Framework, Transform};
use clilm::ppc::MseReference;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// `(alpha, beta)` of each simulated scenario.
    pub scenarios: Vec<(f64, f64)>,
    pub frameworks: Vec<Framework>,
    pub period_mean: f64,
    pub n: usize,
    pub side: f64,
    pub t_end: u32,
    pub stage1: usize,
    pub stage2: usize,
    pub grid: Vec<f64>,
    pub transform: Transform,
    pub iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub replicates: usize,
    pub band: f64,
    pub reference: MseReference,
    /// Simulated epidemics with fewer cases are redrawn.
    pub min_cases: usize,
    pub max_attempts: usize,
    pub fmd: bool,
    pub fmd_frameworks: Vec<Framework>,
    pub fmd_si: (f64, f64),
    pub fmd_sir: (f64, f64),
    pub fmd_period_mean: f64,
    pub fmd_n: usize,
    pub fmd_side: f64,
    pub fmd_t_end: u32,
    pub fmd_datasets: usize,
    pub fmd_grid: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mcmc = McmcSettings::default();
        Self {
            scenarios: vec![(0.7, 4.0), (0.5, 3.0), (0.2, 4.0), (0.9, 5.0)],
            frameworks: vec![Framework::Si, Framework::Sir],
            period_mean: 4.0,
            n: 500,
            side: 10.0,
            t_end: 20,
            stage1: 10,
            stage2: 5,
            grid: Beta0Grid::simulation_default().values().to_vec(),
            transform: Transform::Log,
            iters: mcmc.iters,
            burn_in: mcmc.burn_in,
            thin: mcmc.thin,
            replicates: 200,
            band: 0.95,
            reference: MseReference::PredictiveMean,
            min_cases: 10,
            max_attempts: 100,
            fmd: true,
            fmd_frameworks: vec![Framework::Si, Framework::Sir],
            fmd_si: (0.00096, 1.22),
            fmd_sir: (0.002, 1.18),
            fmd_period_mean: 8.86,
            fmd_n: 1101,
            fmd_side: 20.0,
            fmd_t_end: 71,
            fmd_datasets: 1,
            fmd_grid: Beta0Grid::fmd_default().values().to_vec(),
            seed: 1,
            out: PathBuf::from("report"),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim().parse().with_context(|| format!("{key}: cannot parse `{v}` as a number"))
}

fn parse_int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| anyhow!("{key}: cannot parse `{v}` as a non-negative integer"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => bail!("{key}: expected true or false, got `{other}`"),
    }
}

fn parse_pair(key: &str, v: &str) -> Result<(f64, f64)> {
    let (a, b) = v.split_once(':').ok_or_else(|| anyhow!("{key}: expected `alpha:beta`, got `{v}`"))?;
    Ok((parse_f64(key, a)?, parse_f64(key, b)?))
}

fn parse_list<T>(key: &str, v: &str, item: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    let items: Vec<T> = v.split(',').filter(|s| !s.trim().is_empty()).map(|s| item(key, s.trim())).collect::<Result<_>>()?;
    if items.is_empty() {
        bail!("{key}: list is empty");
    }
    Ok(items)
}

fn parse_framework(key: &str, v: &str) -> Result<Framework> {
    v.parse().with_context(|| format!("{key}: bad framework"))
}

/// Parses a beta0 grid: `default`, `fmd`, or a comma list whose items are
/// numbers or inclusive ranges `start:stop:step`.
pub fn parse_grid(v: &str) -> Result<Vec<f64>> {
    match v.trim() {
        "default" | "simulation" => return Ok(Beta0Grid::simulation_default().values().to_vec()),
        "fmd" => return Ok(Beta0Grid::fmd_default().values().to_vec()),
        _ => {}
    }
    let mut values = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => values.push(parse_f64("grid", x)?),
            [a, b, s] => {
                let r = Beta0Grid::range(parse_f64("grid", a)?, parse_f64("grid", b)?, parse_f64("grid", s)?)?;
                values.extend_from_slice(r.values());
            }
            _ => bail!("grid: bad item `{item}`, expected a number or start:stop:step"),
        }
    }
    Ok(Beta0Grid::new(values)?.values().to_vec())
}

pub fn parse_reference(v: &str) -> Result<MseReference> {
    match v.trim() {
        "mean" | "predictive-mean" => Ok(MseReference::PredictiveMean),
        "observed" => Ok(MseReference::Observed),
        other => bail!("reference: expected `mean` or `observed`, got `{other}`"),
    }
}

fn reference_name(r: MseReference) -> &'static str {
    match r {
        MseReference::PredictiveMean => "mean",
        MseReference::Observed => "observed",
    }
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Parses a config file body on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            cfg.set_line(line).with_context(|| format!("config line {}", k + 1))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key=value` assignment.
    pub fn set_line(&mut self, line: &str) -> Result<()> {
        let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("expected `key = value`, got `{line}`"))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "scenarios" => self.scenarios = parse_list(key, v, parse_pair)?,
            "frameworks" => self.frameworks = parse_list(key, v, parse_framework)?,
            "period_mean" => self.period_mean = parse_f64(key, v)?,
            "n" => self.n = parse_int(key, v)?,
            "side" => self.side = parse_f64(key, v)?,
            "t_end" => self.t_end = parse_int(key, v)?,
            "stage1" => self.stage1 = parse_int(key, v)?,
            "stage2" => self.stage2 = parse_int(key, v)?,
            "grid" => self.grid = parse_grid(v)?,
            "transform" => self.transform = v.parse()?,
            "iters" => self.iters = parse_int(key, v)?,
            "burn_in" => self.burn_in = parse_int(key, v)?,
            "thin" => self.thin = parse_int(key, v)?,
            "replicates" => self.replicates = parse_int(key, v)?,
            "band" => self.band = parse_f64(key, v)?,
            "reference" => self.reference = parse_reference(v)?,
            "min_cases" => self.min_cases = parse_int(key, v)?,
            "max_attempts" => self.max_attempts = parse_int(key, v)?,
            "fmd" => self.fmd = parse_bool(key, v)?,
            "fmd_frameworks" => self.fmd_frameworks = parse_list(key, v, parse_framework)?,
            "fmd_si" => self.fmd_si = parse_pair(key, v)?,
            "fmd_sir" => self.fmd_sir = parse_pair(key, v)?,
            "fmd_period_mean" => self.fmd_period_mean = parse_f64(key, v)?,
            "fmd_n" => self.fmd_n = parse_int(key, v)?,
            "fmd_side" => self.fmd_side = parse_f64(key, v)?,
            "fmd_t_end" => self.fmd_t_end = parse_int(key, v)?,
            "fmd_datasets" => self.fmd_datasets = parse_int(key, v)?,
            "fmd_grid" => self.fmd_grid = parse_grid(v)?,
            "seed" => self.seed = parse_int(key, v)?,
            "out" => self.out = PathBuf::from(v),
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.stage1 == 0 || self.stage2 == 0 || self.fmd_datasets == 0 {
            bail!("dataset counts must be at least 1");
        }
        if self.stage2 > self.stage1 {
            bail!("stage2 ({}) exceeds stage1 ({})", self.stage2, self.stage1);
        }
        if self.replicates < 2 {
            bail!("replicates must be at least 2");
        }
        if !(self.band > 0.0 && self.band < 1.0) {
            bail!("band must lie in (0, 1)");
        }
        if self.iters <= self.burn_in || self.thin == 0 {
            bail!("need iters > burn_in and thin >= 1");
        }
        if self.n < 2 || self.fmd_n < 2 || self.t_end < 2 || self.fmd_t_end < 2 {
            bail!("populations need n >= 2 and horizons t_end >= 2");
        }
        if !(self.side > 0.0 && self.fmd_side > 0.0 && self.period_mean > 0.0 && self.fmd_period_mean > 0.0) {
            bail!("side lengths and infectious-period means must be positive");
        }
        if self.scenarios.iter().chain([&self.fmd_si, &self.fmd_sir]).any(|&(a, b)| !(a > 0.0 && b > 0.0)) {
            bail!("scenario parameters must be positive");
        }
        if self.max_attempts == 0 {
            bail!("max_attempts must be at least 1");
        }
        Beta0Grid::new(self.grid.clone())?;
        Beta0Grid::new(self.fmd_grid.clone())?;
        Ok(())
    }

    pub fn mcmc(&self, seed: u64) -> McmcSettings {
        McmcSettings::new(self.iters, self.burn_in, self.thin, seed)
    }

    /// The resolved configuration in the same `key = value` format it is
    /// read from. The output directory is left out, so reports written to
    /// different places stay byte-identical.
    pub fn to_text(&self) -> String {
        let pair = |p: &(f64, f64)| format!("{}:{}", p.0, p.1);
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("scenarios", join(&self.scenarios, pair));
        kv("frameworks", join(&self.frameworks, Framework::to_string));
        kv("period_mean", self.period_mean.to_string());
        kv("n", self.n.to_string());
        kv("side", self.side.to_string());
        kv("t_end", self.t_end.to_string());
        kv("stage1", self.stage1.to_string());
        kv("stage2", self.stage2.to_string());
        kv("grid", join(&self.grid, f64::to_string));
        kv("transform", self.transform.to_string());
        kv("iters", self.iters.to_string());
        kv("burn_in", self.burn_in.to_string());
        kv("thin", self.thin.to_string());
        kv("replicates", self.replicates.to_string());
        kv("band", self.band.to_string());
        kv("reference", reference_name(self.reference).to_string());
        kv("min_cases", self.min_cases.to_string());
        kv("max_attempts", self.max_attempts.to_string());
        kv("fmd", self.fmd.to_string());
        kv("fmd_frameworks", join(&self.fmd_frameworks, Framework::to_string));
        kv("fmd_si", pair(&self.fmd_si));
        kv("fmd_sir", pair(&self.fmd_sir));
        kv("fmd_period_mean", self.fmd_period_mean.to_string());
        kv("fmd_n", self.fmd_n.to_string());
        kv("fmd_side", self.fmd_side.to_string());
        kv("fmd_t_end", self.fmd_t_end.to_string());
        kv("fmd_datasets", self.fmd_datasets.to_string());
        kv("fmd_grid", join(&self.fmd_grid, f64::to_string));
        kv("seed", self.seed.to_string());
        out
    }
}

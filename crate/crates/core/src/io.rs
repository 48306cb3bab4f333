//! CSV readers and writers for every file the toolkit produces.
//!
//! Files may start with `# key=value` comment lines carrying metadata that
//! does not fit the tabular header (horizon, chain settings). Floats are
//! written in shortest round-trip form, so reading a file back reproduces the
//! in-memory values exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::binary::{BinaryRow, BinaryTable, TableMeta};
use crate::error::{Error, Result};
use crate::fit::{Candidate, PointEstimate, PosteriorSample, TuneResult};
use crate::population::{Individual, Population};
use crate::ppc::PpcResult;
use crate::record::EpidemicRecord;

struct Parsed {
    meta: BTreeMap<String, String>,
    comments: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

fn parse(text: &str, source: &str, expected: &[&str]) -> Result<Parsed> {
    let mut meta = BTreeMap::new();
    let mut comments = Vec::new();
    let mut body_start = 0;
    let mut line_no = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim();
            comments.push(rest.to_string());
            if let Some((k, v)) = rest.split_once('=') {
                if !k.contains(' ') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
            }
            body_start += line.len();
            line_no += 1;
        } else {
            break;
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(&text.as_bytes()[body_start..]);
    let schema = |row: usize, msg: String| Error::Schema { path: source.to_string(), row, msg };
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != expected {
        return Err(schema(line_no + 1, format!("expected header `{}`, found `{}`", expected.join(","), header.join(","))));
    }
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let row = line_no + 2 + k;
        let rec = rec.map_err(|e| schema(row, e.to_string()))?;
        if rec.len() != expected.len() {
            return Err(schema(row, format!("expected {} fields, found {}", expected.len(), rec.len())));
        }
        rows.push((row, rec.iter().map(str::to_string).collect()));
    }
    Ok(Parsed { meta, comments, rows })
}

fn field<T: std::str::FromStr>(source: &str, row: usize, name: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Schema {
        path: source.to_string(),
        row,
        msg: format!("cannot parse {name} from `{value}`"),
    })
}

fn optional<T: std::str::FromStr>(source: &str, row: usize, name: &str, value: &str) -> Result<Option<T>> {
    if value.is_empty() {
        Ok(None)
    } else {
        field(source, row, name, value).map(Some)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

// ---- population ----

pub fn population_to_csv(pop: &Population) -> String {
    let mut out = String::from("id,x,y\n");
    for p in pop.individuals() {
        let _ = writeln!(out, "{},{},{}", csv_field(&p.id), p.x, p.y);
    }
    out
}

pub fn population_from_csv(text: &str, source: &str) -> Result<Population> {
    let parsed = parse(text, source, &["id", "x", "y"])?;
    let mut individuals = Vec::with_capacity(parsed.rows.len());
    for (row, f) in &parsed.rows {
        individuals.push(Individual {
            id: f[0].clone(),
            x: field(source, *row, "x", &f[1])?,
            y: field(source, *row, "y", &f[2])?,
        });
    }
    Population::new(individuals)
}

pub fn write_population(path: &Path, pop: &Population) -> Result<()> {
    write(path, &population_to_csv(pop))
}

pub fn read_population(path: &Path) -> Result<Population> {
    population_from_csv(&read(path)?, &path.display().to_string())
}

// ---- epidemic record ----

/// Rows follow population order; the horizon goes in a `# t_max=` line.
pub fn record_to_csv(record: &EpidemicRecord, pop: &Population) -> String {
    let mut out = format!("# t_max={}\nid,t_inf,t_rem\n", record.t_max());
    let opt = |v: Option<u32>| v.map(|t| t.to_string()).unwrap_or_default();
    for i in 0..record.len() {
        let _ = writeln!(out, "{},{},{}", csv_field(pop.id(i)), opt(record.t_inf(i)), opt(record.t_rem(i)));
    }
    out
}

/// Reads a record for `pop`. Without a `# t_max=` line the horizon defaults
/// to the last infection time.
pub fn record_from_csv(text: &str, source: &str, pop: &Population) -> Result<EpidemicRecord> {
    let parsed = parse(text, source, &["id", "t_inf", "t_rem"])?;
    let n = pop.len();
    let mut t_inf = vec![None; n];
    let mut t_rem = vec![None; n];
    let mut seen = vec![false; n];
    for (row, f) in &parsed.rows {
        let k = pop.position(&f[0]).ok_or_else(|| Error::Schema {
            path: source.to_string(),
            row: *row,
            msg: format!("id `{}` is not in the population", f[0]),
        })?;
        if std::mem::replace(&mut seen[k], true) {
            return Err(Error::Schema { path: source.to_string(), row: *row, msg: format!("duplicate id `{}`", f[0]) });
        }
        t_inf[k] = optional(source, *row, "t_inf", &f[1])?;
        t_rem[k] = optional(source, *row, "t_rem", &f[2])?;
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(Error::Schema {
            path: source.to_string(),
            row: parsed.rows.len() + 1,
            msg: format!("id `{}` from the population is missing", pop.id(k)),
        });
    }
    let t_max = match parsed.meta.get("t_max") {
        Some(v) => field(source, 1, "t_max", v)?,
        None => t_inf.iter().flatten().copied().max().unwrap_or(1),
    };
    EpidemicRecord::new(t_inf, t_rem, t_max)
}

pub fn write_record(path: &Path, record: &EpidemicRecord, pop: &Population) -> Result<()> {
    write(path, &record_to_csv(record, pop))
}

pub fn read_record(path: &Path, pop: &Population) -> Result<EpidemicRecord> {
    record_from_csv(&read(path)?, &path.display().to_string(), pop)
}

// ---- binary table ----

pub fn table_to_csv(table: &BinaryTable) -> String {
    let mut out = String::from("id,t,y,x\n");
    for r in &table.rows {
        let _ = writeln!(out, "{},{},{},{}", csv_field(&r.id), r.t, u8::from(r.y), r.x);
    }
    out
}

pub fn table_meta_to_text(meta: &TableMeta) -> String {
    format!("beta0={}\ntransform={}\nt0={}\nt_max={}\n", meta.beta0, meta.transform, meta.t0, meta.t_max)
}

pub fn table_meta_from_text(text: &str, source: &str) -> Result<TableMeta> {
    let mut kv = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Schema {
            path: source.to_string(),
            row: k + 1,
            msg: format!("expected key=value, found `{line}`"),
        })?;
        kv.insert(key.trim().to_string(), (k + 1, value.trim().to_string()));
    }
    let get = |name: &str| {
        kv.get(name).cloned().ok_or_else(|| Error::Schema {
            path: source.to_string(),
            row: 0,
            msg: format!("missing key `{name}`"),
        })
    };
    let (r, v) = get("beta0")?;
    let beta0 = field(source, r, "beta0", &v)?;
    let (r, v) = get("transform")?;
    let transform = field(source, r, "transform", &v)?;
    let (r, v) = get("t0")?;
    let t0 = field(source, r, "t0", &v)?;
    let (r, v) = get("t_max")?;
    let t_max = field(source, r, "t_max", &v)?;
    Ok(TableMeta { beta0, transform, t0, t_max })
}

pub fn table_from_csv(text: &str, source: &str, meta: TableMeta) -> Result<BinaryTable> {
    let parsed = parse(text, source, &["id", "t", "y", "x"])?;
    let mut rows = Vec::with_capacity(parsed.rows.len());
    for (row, f) in &parsed.rows {
        let y = match f[2].as_str() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Schema { path: source.to_string(), row: *row, msg: format!("y must be 0 or 1, found `{other}`") })
            }
        };
        rows.push(BinaryRow { id: f[0].clone(), t: field(source, *row, "t", &f[1])?, y, x: field(source, *row, "x", &f[3])? });
    }
    Ok(BinaryTable { rows, meta })
}

/// Sidecar path for a table: same stem, `.meta` extension.
pub fn meta_path(table_path: &Path) -> std::path::PathBuf {
    table_path.with_extension("meta")
}

pub fn write_table(path: &Path, table: &BinaryTable) -> Result<()> {
    write(path, &table_to_csv(table))?;
    write(&meta_path(path), &table_meta_to_text(&table.meta))
}

pub fn read_table(path: &Path) -> Result<BinaryTable> {
    let mp = meta_path(path);
    let meta = table_meta_from_text(&read(&mp)?, &mp.display().to_string())?;
    table_from_csv(&read(path)?, &path.display().to_string(), meta)
}

// ---- posterior sample ----

pub fn posterior_to_csv(sample: &PosteriorSample) -> String {
    let mut out = format!(
        "# params={},{}\n# acceptance_rate={}\n# burn_in={}\n# thin={}\n# seed={}\niter,param1,param2,log_post\n",
        sample.names[0], sample.names[1], sample.acceptance_rate, sample.burn_in, sample.thin, sample.seed
    );
    for ((it, d), lp) in sample.iterations.iter().zip(&sample.draws).zip(&sample.log_post) {
        let _ = writeln!(out, "{it},{},{},{lp}", d[0], d[1]);
    }
    out
}

pub fn posterior_from_csv(text: &str, source: &str) -> Result<PosteriorSample> {
    let parsed = parse(text, source, &["iter", "param1", "param2", "log_post"])?;
    let meta = |k: &str, default: &str| parsed.meta.get(k).cloned().unwrap_or_else(|| default.to_string());
    let names = meta("params", "param1,param2");
    let (n1, n2) = names.split_once(',').unwrap_or(("param1", "param2"));
    let mut sample = PosteriorSample {
        names: [n1.to_string(), n2.to_string()],
        draws: Vec::with_capacity(parsed.rows.len()),
        iterations: Vec::with_capacity(parsed.rows.len()),
        log_post: Vec::with_capacity(parsed.rows.len()),
        acceptance_rate: field(source, 1, "acceptance_rate", &meta("acceptance_rate", "NaN"))?,
        burn_in: field(source, 1, "burn_in", &meta("burn_in", "0"))?,
        thin: field(source, 1, "thin", &meta("thin", "1"))?,
        seed: field(source, 1, "seed", &meta("seed", "0"))?,
    };
    for (row, f) in &parsed.rows {
        sample.iterations.push(field(source, *row, "iter", &f[0])?);
        sample.draws.push([field(source, *row, "param1", &f[1])?, field(source, *row, "param2", &f[2])?]);
        sample.log_post.push(field(source, *row, "log_post", &f[3])?);
    }
    Ok(sample)
}

pub fn write_posterior(path: &Path, sample: &PosteriorSample) -> Result<()> {
    write(path, &posterior_to_csv(sample))
}

pub fn read_posterior(path: &Path) -> Result<PosteriorSample> {
    posterior_from_csv(&read(path)?, &path.display().to_string())
}

// ---- tuning ----

pub fn tune_to_csv(result: &TuneResult) -> String {
    let mut out = format!("# chosen_beta0={}\n", result.chosen_beta0);
    for c in &result.candidates {
        if let Some(msg) = &c.failure {
            let _ = writeln!(out, "# failed {}: {}", c.beta0, msg.replace('\n', " "));
        }
    }
    out.push_str("beta0,loglik,alpha0,alpha1,converged\n");
    for c in &result.candidates {
        let _ = writeln!(out, "{},{},{},{},{}", c.beta0, c.log_lik, c.alpha0, c.alpha1, c.converged);
    }
    out
}

pub fn tune_from_csv(text: &str, source: &str) -> Result<TuneResult> {
    let parsed = parse(text, source, &["beta0", "loglik", "alpha0", "alpha1", "converged"])?;
    let mut failures = BTreeMap::new();
    for c in &parsed.comments {
        if let Some(rest) = c.strip_prefix("failed ") {
            if let Some((b, msg)) = rest.split_once(": ") {
                failures.insert(b.to_string(), msg.to_string());
            }
        }
    }
    let mut candidates = Vec::with_capacity(parsed.rows.len());
    for (row, f) in &parsed.rows {
        candidates.push(Candidate {
            beta0: field(source, *row, "beta0", &f[0])?,
            log_lik: field(source, *row, "loglik", &f[1])?,
            alpha0: field(source, *row, "alpha0", &f[2])?,
            alpha1: field(source, *row, "alpha1", &f[3])?,
            converged: field(source, *row, "converged", &f[4])?,
            failure: failures.get(&f[0]).cloned(),
        });
    }
    let chosen = parsed.meta.get("chosen_beta0").ok_or_else(|| Error::Schema {
        path: source.to_string(),
        row: 1,
        msg: "missing `# chosen_beta0=` line".into(),
    })?;
    Ok(TuneResult { chosen_beta0: field(source, 1, "chosen_beta0", chosen)?, candidates })
}

pub fn write_tune(path: &Path, result: &TuneResult) -> Result<()> {
    write(path, &tune_to_csv(result))
}

pub fn read_tune(path: &Path) -> Result<TuneResult> {
    tune_from_csv(&read(path)?, &path.display().to_string())
}

// ---- point estimates ----

pub fn estimate_to_csv(est: &PointEstimate) -> String {
    let mut out = format!(
        "# log_lik={}\n# converged={}\n# iterations={}\nparam,estimate,std_error\n",
        est.log_lik, est.converged, est.iterations
    );
    for k in 0..2 {
        let _ = writeln!(out, "{},{},{}", est.names[k], est.values[k], est.std_errors[k]);
    }
    out
}

pub fn estimate_from_csv(text: &str, source: &str) -> Result<PointEstimate> {
    let parsed = parse(text, source, &["param", "estimate", "std_error"])?;
    if parsed.rows.len() != 2 {
        return Err(Error::Schema { path: source.to_string(), row: 1, msg: format!("expected 2 parameter rows, found {}", parsed.rows.len()) });
    }
    let meta = |k: &str| parsed.meta.get(k).cloned().unwrap_or_default();
    let mut est = PointEstimate {
        names: [String::new(), String::new()],
        values: [0.0; 2],
        std_errors: [0.0; 2],
        log_lik: field(source, 1, "log_lik", &meta("log_lik"))?,
        converged: field(source, 1, "converged", &meta("converged"))?,
        iterations: field(source, 1, "iterations", &meta("iterations"))?,
    };
    for (k, (row, f)) in parsed.rows.iter().enumerate() {
        est.names[k] = f[0].clone();
        est.values[k] = field(source, *row, "estimate", &f[1])?;
        est.std_errors[k] = field(source, *row, "std_error", &f[2])?;
    }
    Ok(est)
}

pub fn write_estimate(path: &Path, est: &PointEstimate) -> Result<()> {
    write(path, &estimate_to_csv(est))
}

pub fn read_estimate(path: &Path) -> Result<PointEstimate> {
    estimate_from_csv(&read(path)?, &path.display().to_string())
}

// ---- posterior predictive bundle ----

/// Writes `curves.csv`, `summary.csv` and `metrics.csv` into `dir`.
pub fn write_ppc_bundle(dir: &Path, result: &PpcResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut curves = String::from("replicate,t,count\n");
    for (s, c) in result.curves.iter().enumerate() {
        for (t, v) in c.iter().enumerate() {
            let _ = writeln!(curves, "{},{},{v}", s + 1, t + 1);
        }
    }
    write(&dir.join("curves.csv"), &curves)?;
    let mut summary = String::from("t,mean,lo,hi,observed\n");
    for t in 0..result.observed.len() {
        let _ = writeln!(
            summary,
            "{},{},{},{},{}",
            t + 1,
            result.mean[t],
            result.lower[t],
            result.upper[t],
            result.observed[t]
        );
    }
    write(&dir.join("summary.csv"), &summary)?;
    write(&dir.join("metrics.csv"), &format!("mse,avg_sd,coverage\n{},{},{}\n", result.mse, result.avg_sd, result.coverage))
}

/// Reads a bundle back; pointwise standard deviations are recomputed from
/// the replicate curves.
pub fn read_ppc_bundle(dir: &Path) -> Result<PpcResult> {
    let src = |name: &str| dir.join(name).display().to_string();
    let parsed = parse(&read(&dir.join("curves.csv"))?, &src("curves.csv"), &["replicate", "t", "count"])?;
    let mut curves: Vec<Vec<u32>> = Vec::new();
    for (row, f) in &parsed.rows {
        let s: usize = field(&src("curves.csv"), *row, "replicate", &f[0])?;
        let t: usize = field(&src("curves.csv"), *row, "t", &f[1])?;
        let v: u32 = field(&src("curves.csv"), *row, "count", &f[2])?;
        if s == 0 || t == 0 {
            return Err(Error::Schema { path: src("curves.csv"), row: *row, msg: "indices start at 1".into() });
        }
        if curves.len() < s {
            curves.resize(s, Vec::new());
        }
        if curves[s - 1].len() < t {
            curves[s - 1].resize(t, 0);
        }
        curves[s - 1][t - 1] = v;
    }
    let parsed = parse(&read(&dir.join("summary.csv"))?, &src("summary.csv"), &["t", "mean", "lo", "hi", "observed"])?;
    let (mut mean, mut lower, mut upper, mut observed) = (vec![], vec![], vec![], vec![]);
    for (row, f) in &parsed.rows {
        let s = src("summary.csv");
        mean.push(field(&s, *row, "mean", &f[1])?);
        lower.push(field(&s, *row, "lo", &f[2])?);
        upper.push(field(&s, *row, "hi", &f[3])?);
        observed.push(field(&s, *row, "observed", &f[4])?);
    }
    let parsed = parse(&read(&dir.join("metrics.csv"))?, &src("metrics.csv"), &["mse", "avg_sd", "coverage"])?;
    let (row, f) = parsed.rows.first().ok_or_else(|| Error::Schema { path: src("metrics.csv"), row: 2, msg: "no metrics row".into() })?;
    let s = src("metrics.csv");
    let (mse, avg_sd, coverage) = (field(&s, *row, "mse", &f[0])?, field(&s, *row, "avg_sd", &f[1])?, field(&s, *row, "coverage", &f[2])?);
    let n = curves.len() as f64;
    let sd = (0..observed.len())
        .map(|t| {
            let m: f64 = mean[t];
            (curves.iter().map(|c| (f64::from(c[t]) - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        })
        .collect();
    Ok(PpcResult { curves, observed, mean, sd, lower, upper, mse, avg_sd, coverage })
}

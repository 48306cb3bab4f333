//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clilm::fit::{
    ilm_mle, irls_fit, mcmc_clilm, mcmc_ilm_with_likelihood, tune_beta0, Beta0Grid, McmcSettings, PointEstimate,
    PriorSpec,
};
use clilm::io;
use clilm::ppc::{run_ppc, MseReference, PpcModel, PpcOptions};
use clilm::rng::split_seed;
use clilm::{convert, BinaryTable, Compartments, IlmLikelihood, IlmParams, SimConfig};

use crate::config::{parse_grid, ExperimentConfig};
use crate::{
    experiment, Cli, Command, ConvertArgs, DataArgs, ExperimentArgs, FitArgs, FrameworkArg, MethodArg, ModelArg,
    PpcArgs, ReferenceArg, SimulateArgs, TuneArgs, UsageError,
};

const DEFAULT_SEED: u64 = 1;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Simulate(a) => simulate(a, seed, out.unwrap_or(Path::new("."))),
        Command::Convert(a) => convert_cmd(a, out.unwrap_or(Path::new("table.csv"))),
        Command::Tune(a) => tune(a, out.unwrap_or(Path::new("tune.csv"))),
        Command::Fit(a) => fit(a, seed, out),
        Command::Ppc(a) => ppc(a, seed, out.unwrap_or(Path::new("ppc"))),
        Command::Experiment(a) => experiment_cmd(a, cli.seed, out),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn ensure_parent(file: &Path) -> Result<()> {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

fn read_data(d: &DataArgs) -> Result<(clilm::Population, clilm::EpidemicRecord)> {
    let pop = io::read_population(&d.population)?;
    let record = io::read_record(&d.epidemic, &pop)?;
    Ok((pop, record))
}

fn compartments(fw: FrameworkArg, period_mean: f64) -> Result<Compartments> {
    Ok(match fw {
        FrameworkArg::Si => Compartments::Si,
        FrameworkArg::Sir => Compartments::sir(period_mean)?,
    })
}

/// Writes `population.csv` and `epidemic.csv` into `dir`.
pub fn simulate(a: &SimulateArgs, seed: u64, dir: &Path) -> Result<()> {
    let pop = match &a.population {
        Some(p) => io::read_population(p)?,
        None => clilm::sample_population(a.n, a.side, split_seed(seed, 0))?,
    };
    let params = IlmParams::new(a.alpha, a.beta)?;
    let mut cfg = SimConfig::new(params, compartments(a.framework, a.period_mean)?, &pop, a.t_end, split_seed(seed, 1));
    if let Some(ids) = &a.initial {
        let idx = ids
            .iter()
            .map(|id| pop.position(id).with_context(|| format!("unknown initial id `{id}`")))
            .collect::<Result<Vec<_>>>()?;
        cfg.initial_infectious = Some(idx);
    }
    let record = clilm::simulate(&cfg)?;
    ensure_dir(dir)?;
    io::write_population(&dir.join("population.csv"), &pop)?;
    io::write_record(&dir.join("epidemic.csv"), &record, &pop)?;
    println!("{} of {} individuals infected by t={}", record.n_infected(), pop.len(), record.t_max());
    Ok(())
}

pub fn convert_cmd(a: &ConvertArgs, out: &Path) -> Result<()> {
    let (pop, record) = read_data(&a.data)?;
    let table = convert(&record, &pop, a.beta0, a.transform.into())?;
    ensure_parent(out)?;
    io::write_table(out, &table)?;
    println!("{} rows, {} events", table.len(), table.n_events());
    Ok(())
}

pub fn tune(a: &TuneArgs, out: &Path) -> Result<()> {
    let (pop, record) = read_data(&a.data)?;
    let grid = Beta0Grid::new(parse_grid(&a.grid).map_err(|e| usage(format!("{e:#}")))?)?;
    let result = tune_beta0(&record, &pop, &grid, a.transform.into())?;
    ensure_parent(out)?;
    io::write_tune(out, &result)?;
    println!("chosen beta0 = {}", result.chosen_beta0);
    Ok(())
}

fn logistic_table(a: &FitArgs) -> Result<BinaryTable> {
    match (&a.table, &a.population, &a.epidemic, a.beta0) {
        (Some(t), None, None, None) => Ok(io::read_table(t)?),
        (None, Some(p), Some(e), Some(b)) => {
            let pop = io::read_population(p)?;
            let record = io::read_record(e, &pop)?;
            Ok(convert(&record, &pop, b, a.transform.into())?)
        }
        _ => Err(usage("the logistic model needs either --table, or --population, --epidemic and --beta0")),
    }
}

pub fn fit(a: &FitArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let priors = PriorSpec::default();
    let settings = McmcSettings::new(a.mcmc.iters, a.mcmc.burn_in, a.mcmc.thin, seed);
    let default_out = |mcmc: bool| PathBuf::from(if mcmc { "posterior.csv" } else { "estimate.csv" });
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| default_out(a.method == MethodArg::Mcmc));
    match a.model {
        ModelArg::Ilm => {
            if a.table.is_some() || a.beta0.is_some() {
                return Err(usage("--table and --beta0 apply to the logistic model only"));
            }
            let (Some(p), Some(e)) = (&a.population, &a.epidemic) else {
                return Err(usage("the spatial ILM needs --population and --epidemic"));
            };
            let pop = io::read_population(p)?;
            let record = io::read_record(e, &pop)?;
            let lik = IlmLikelihood::new(&record, &pop.distance_matrix())?;
            match a.method {
                MethodArg::Irls => return Err(usage("IRLS fits the logistic model; use --method mle or mcmc for the ILM")),
                MethodArg::Mle => {
                    let mle = ilm_mle(&lik, priors.alpha_max, priors.beta_max)?;
                    ensure_parent(&out)?;
                    io::write_estimate(&out, &PointEstimate::from_mle(&mle))?;
                    println!("alpha = {}, beta = {}", mle.params.alpha(), mle.params.beta());
                }
                MethodArg::Mcmc => {
                    let sample = mcmc_ilm_with_likelihood(lik, &priors, &settings)?;
                    write_sample(&out, &sample)?;
                }
            }
        }
        ModelArg::Clilm => {
            let table = logistic_table(a)?;
            match a.method {
                MethodArg::Irls | MethodArg::Mle => {
                    let f = irls_fit(&table)?;
                    ensure_parent(&out)?;
                    io::write_estimate(&out, &PointEstimate::from_irls(&f))?;
                    println!("alpha0 = {}, alpha1 = {} ({} iterations)", f.alpha0, f.alpha1, f.iterations);
                }
                MethodArg::Mcmc => {
                    let sample = mcmc_clilm(&table, &priors, &settings)?;
                    write_sample(&out, &sample)?;
                }
            }
        }
    }
    Ok(())
}

fn write_sample(out: &Path, sample: &clilm::fit::PosteriorSample) -> Result<()> {
    ensure_parent(out)?;
    io::write_posterior(out, sample)?;
    let m = sample.mean();
    println!(
        "{} draws, acceptance {:.3}; posterior means {} = {}, {} = {}",
        sample.len(),
        sample.acceptance_rate,
        sample.names[0],
        m[0],
        sample.names[1],
        m[1]
    );
    if sample.acceptance_flagged() {
        eprintln!("warning: acceptance rate {:.3} outside (0.05, 0.6)", sample.acceptance_rate);
    }
    Ok(())
}

pub fn ppc(a: &PpcArgs, seed: u64, dir: &Path) -> Result<()> {
    let (pop, record) = read_data(&a.data)?;
    let sample = io::read_posterior(&a.posterior)?;
    let model = match (a.model, a.beta0) {
        (ModelArg::Ilm, None) => PpcModel::Ilm,
        (ModelArg::Clilm, Some(beta0)) => PpcModel::Clilm { beta0, transform: a.transform.into() },
        (ModelArg::Ilm, Some(_)) => return Err(usage("--beta0 applies to the logistic model only")),
        (ModelArg::Clilm, None) => return Err(usage("the logistic model needs --beta0")),
    };
    let fw = a.framework.unwrap_or(if record.has_removals() { FrameworkArg::Sir } else { FrameworkArg::Si });
    let reference = match a.reference {
        ReferenceArg::Mean => MseReference::PredictiveMean,
        ReferenceArg::Observed => MseReference::Observed,
    };
    let options = PpcOptions { replicates: a.replicates, band_mass: a.band, reference, seed };
    let result = run_ppc(&sample, model, &pop, &compartments(fw, a.period_mean)?, &record, &options)?;
    ensure_dir(dir)?;
    io::write_ppc_bundle(dir, &result)?;
    println!("mse = {}, avg_sd = {}, coverage = {}", result.mse, result.avg_sd, result.coverage);
    Ok(())
}

/// Resolves the configuration: defaults, then the file, then `--set`
/// overrides, then the global `--seed` and `--out`.
pub fn resolve_config(a: &ExperimentArgs, seed: Option<u64>, out: Option<&Path>) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::from_text(&text).with_context(|| format!("in {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    for s in &a.set {
        cfg.set_line(s).map_err(|e| usage(format!("--set {s}: {e:#}")))?;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(out) = out {
        cfg.out = out.to_path_buf();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn experiment_cmd(a: &ExperimentArgs, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let cfg = resolve_config(a, seed, out)?;
    let report = experiment::run(&cfg)?;
    experiment::write_report(&report, &cfg.out)?;
    let failed = report
        .outcomes
        .iter()
        .filter(|o| o.dataset.is_err() || matches!(o.tune, Some(Err(_))) || matches!(o.stage2, Some(Err(_))))
        .count();
    println!("report written to {} ({} datasets, {failed} with failures)", cfg.out.display(), report.outcomes.len());
    if failed == report.outcomes.len() {
        bail!("every dataset failed; see failures.csv");
    }
    Ok(())
}

//! Two-stage simulation study.
//!
//! For every scenario, stage one simulates `stage1` epidemics and tunes
//! `beta0` on each; stage two takes the first `stage2` of them, fits the
//! spatial ILM and the conditional logistic ILM by MCMC and compares their
//! posterior predictive epidemic curves. Every random quantity derives from
//! the base seed through [`split_seed`], so reports are reproducible
//! regardless of thread count.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use clilm::fit::{mcmc_clilm, mcmc_ilm_with_likelihood, tune_beta0_with, Beta0Grid, PosteriorSample, PriorSpec, TuneResult};
use clilm::io;
use clilm::ppc::{run_ppc_with, summarize, MseReference, PpcModel, PpcOptions, PpcResult};
use clilm::rng::split_seed;
use clilm::simulate::simulate_with_distances;
use clilm::{convert, Compartments, EpidemicRecord, Framework, IlmLikelihood, IlmParams, Population, SimConfig};
use rayon::prelude::*;

use crate::config::ExperimentConfig;

/// One row of the study design.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub alpha: f64,
    pub beta: f64,
    pub compartments: Compartments,
    pub n: usize,
    pub side: f64,
    pub t_end: u32,
    pub stage1: usize,
    pub stage2: usize,
    pub grid: Vec<f64>,
}

impl Scenario {
    pub fn framework(&self) -> Framework {
        self.compartments.framework()
    }
}

fn compartments(fw: Framework, period_mean: f64) -> Result<Compartments> {
    Ok(match fw {
        Framework::Si => Compartments::Si,
        Framework::Sir => Compartments::sir(period_mean)?,
    })
}

/// Expands the configuration into scenarios: simulated ones first, ordered
/// by framework then parameters, followed by the FMD-like surrogate.
pub fn scenarios(cfg: &ExperimentConfig) -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    for &fw in &cfg.frameworks {
        for &(alpha, beta) in &cfg.scenarios {
            out.push(Scenario {
                label: format!("{fw}_a{alpha}_b{beta}"),
                alpha,
                beta,
                compartments: compartments(fw, cfg.period_mean)?,
                n: cfg.n,
                side: cfg.side,
                t_end: cfg.t_end,
                stage1: cfg.stage1,
                stage2: cfg.stage2,
                grid: cfg.grid.clone(),
            });
        }
    }
    if cfg.fmd {
        for &fw in &cfg.fmd_frameworks {
            let (alpha, beta) = match fw {
                Framework::Si => cfg.fmd_si,
                Framework::Sir => cfg.fmd_sir,
            };
            out.push(Scenario {
                label: format!("fmd_{fw}"),
                alpha,
                beta,
                compartments: compartments(fw, cfg.fmd_period_mean)?,
                n: cfg.fmd_n,
                side: cfg.fmd_side,
                t_end: cfg.fmd_t_end,
                stage1: cfg.fmd_datasets,
                stage2: cfg.fmd_datasets,
                grid: cfg.fmd_grid.clone(),
            });
        }
    }
    Ok(out)
}

/// Simulated data for one dataset slot.
pub struct Dataset {
    pub pop: Population,
    pub record: EpidemicRecord,
    pub attempts: usize,
}

/// Draws population and epidemic, redrawing both while the epidemic has
/// fewer than `min_cases` infections.
pub fn draw_dataset(sc: &Scenario, seed: u64, min_cases: usize, max_attempts: usize) -> Result<Dataset> {
    let params = IlmParams::new(sc.alpha, sc.beta)?;
    for a in 0..max_attempts as u64 {
        let pop = clilm::sample_population(sc.n, sc.side, split_seed(seed, 2 * a))?;
        let dists = pop.distance_matrix();
        let cfg = SimConfig::new(params, sc.compartments, &pop, sc.t_end, split_seed(seed, 2 * a + 1));
        let record = simulate_with_distances(&cfg, &dists)?;
        if record.n_infected() >= min_cases {
            return Ok(Dataset { pop, record, attempts: a as usize + 1 });
        }
    }
    anyhow::bail!("no epidemic with at least {min_cases} cases in {max_attempts} attempts")
}

/// Mean infectious period `t_rem - t_inf` over removed individuals.
pub fn mean_infectious_period(record: &EpidemicRecord) -> Option<f64> {
    let periods: Vec<f64> = (0..record.len())
        .filter_map(|i| Some(f64::from(record.t_rem(i)? - record.t_inf(i)?)))
        .collect();
    (!periods.is_empty()).then(|| periods.iter().sum::<f64>() / periods.len() as f64)
}

/// Posterior predictive results for one model, with the MSE under both
/// references.
pub struct ModelCheck {
    pub posterior: PosteriorSample,
    pub ppc: PpcResult,
    pub mse_mean: f64,
    pub mse_observed: f64,
}

pub struct Stage2 {
    pub ilm: ModelCheck,
    pub clilm: ModelCheck,
}

pub struct DatasetOutcome {
    pub scenario: usize,
    pub index: usize,
    pub dataset: Result<Dataset, String>,
    pub tune: Option<Result<TuneResult, String>>,
    pub stage2: Option<Result<Stage2, String>>,
}

fn check(
    posterior: PosteriorSample,
    model: PpcModel,
    data: &Dataset,
    dists: &clilm::DistanceMatrix,
    sc: &Scenario,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<ModelCheck> {
    let options = PpcOptions { replicates: cfg.replicates, band_mass: cfg.band, reference: cfg.reference, seed };
    let ppc = run_ppc_with(&posterior, model, &data.pop, dists, &sc.compartments, &data.record, &options)?;
    let other = match cfg.reference {
        MseReference::PredictiveMean => MseReference::Observed,
        MseReference::Observed => MseReference::PredictiveMean,
    };
    let alt = summarize(ppc.curves.clone(), ppc.observed.clone(), cfg.band, other)?.mse;
    let (mse_mean, mse_observed) = match cfg.reference {
        MseReference::PredictiveMean => (ppc.mse, alt),
        MseReference::Observed => (alt, ppc.mse),
    };
    Ok(ModelCheck { posterior, ppc, mse_mean, mse_observed })
}

fn stage2(data: &Dataset, beta0: f64, sc: &Scenario, cfg: &ExperimentConfig, seed: u64) -> Result<Stage2> {
    let priors = PriorSpec::default();
    let dists = data.pop.distance_matrix();
    let lik = IlmLikelihood::new(&data.record, &dists)?;
    let ilm_post = mcmc_ilm_with_likelihood(lik, &priors, &cfg.mcmc(split_seed(seed, 1)))?;
    let table = convert(&data.record, &data.pop, beta0, cfg.transform)?;
    let clilm_post = mcmc_clilm(&table, &priors, &cfg.mcmc(split_seed(seed, 2)))?;
    let ilm = check(ilm_post, PpcModel::Ilm, data, &dists, sc, cfg, split_seed(seed, 3))?;
    let model = PpcModel::Clilm { beta0, transform: cfg.transform };
    let clilm = check(clilm_post, model, data, &dists, sc, cfg, split_seed(seed, 4))?;
    Ok(Stage2 { ilm, clilm })
}

/// Runs stage one (and stage two when `index < stage2`) for one dataset.
pub fn run_dataset(cfg: &ExperimentConfig, scenarios: &[Scenario], s: usize, index: usize) -> DatasetOutcome {
    let sc = &scenarios[s];
    let seed = split_seed(split_seed(cfg.seed, s as u64), index as u64);
    let mut out = DatasetOutcome { scenario: s, index, dataset: Err(String::new()), tune: None, stage2: None };
    let data = match draw_dataset(sc, split_seed(seed, 0), cfg.min_cases, cfg.max_attempts) {
        Ok(d) => d,
        Err(e) => {
            out.dataset = Err(format!("{e:#}"));
            return out;
        }
    };
    let tune = Beta0Grid::new(sc.grid.clone())
        .and_then(|grid| tune_beta0_with(&data.record, &data.pop, &data.pop.distance_matrix(), &grid, cfg.transform))
        .map_err(|e| e.to_string());
    if index < sc.stage2 {
        out.stage2 = Some(match &tune {
            Ok(t) => stage2(&data, t.chosen_beta0, sc, cfg, split_seed(seed, 1)).map_err(|e| format!("{e:#}")),
            Err(e) => Err(format!("skipped, tuning failed: {e}")),
        });
    }
    out.tune = Some(tune);
    out.dataset = Ok(data);
    out
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// Per-scenario aggregate of the stage-two comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    pub label: String,
    pub datasets: usize,
    pub ilm_mse: f64,
    pub ilm_mse_observed: f64,
    pub ilm_sd: f64,
    pub clilm_mse: f64,
    pub clilm_mse_observed: f64,
    pub clilm_sd: f64,
    pub ilm_coverage: (f64, f64),
    pub clilm_coverage: (f64, f64),
}

pub fn summarize_scenario(label: &str, results: &[&Stage2]) -> ScenarioSummary {
    let col = |f: &dyn Fn(&Stage2) -> f64| results.iter().map(|r| f(r)).collect::<Vec<f64>>();
    ScenarioSummary {
        label: label.to_string(),
        datasets: results.len(),
        ilm_mse: mean_sd(&col(&|r| r.ilm.mse_mean)).0,
        ilm_mse_observed: mean_sd(&col(&|r| r.ilm.mse_observed)).0,
        ilm_sd: mean_sd(&col(&|r| r.ilm.ppc.avg_sd)).0,
        clilm_mse: mean_sd(&col(&|r| r.clilm.mse_mean)).0,
        clilm_mse_observed: mean_sd(&col(&|r| r.clilm.mse_observed)).0,
        clilm_sd: mean_sd(&col(&|r| r.clilm.ppc.avg_sd)).0,
        ilm_coverage: mean_sd(&col(&|r| r.ilm.ppc.coverage)),
        clilm_coverage: mean_sd(&col(&|r| r.clilm.ppc.coverage)),
    }
}

/// Everything the runner produced, in deterministic order.
pub struct Report {
    pub config: ExperimentConfig,
    pub scenarios: Vec<Scenario>,
    pub outcomes: Vec<DatasetOutcome>,
}

impl Report {
    pub fn outcomes_for(&self, s: usize) -> impl Iterator<Item = &DatasetOutcome> {
        self.outcomes.iter().filter(move |o| o.scenario == s)
    }

    pub fn summary(&self, s: usize) -> ScenarioSummary {
        let done: Vec<&Stage2> = self
            .outcomes_for(s)
            .filter_map(|o| o.stage2.as_ref().and_then(|r| r.as_ref().ok()))
            .collect();
        summarize_scenario(&self.scenarios[s].label, &done)
    }
}

/// Runs every dataset of every scenario. Datasets run in parallel on the
/// current rayon pool; failures are recorded and do not stop the run.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let scenarios = scenarios(cfg)?;
    let jobs: Vec<(usize, usize)> = scenarios
        .iter()
        .enumerate()
        .flat_map(|(s, sc)| (0..sc.stage1).map(move |k| (s, k)))
        .collect();
    let outcomes = jobs.par_iter().map(|&(s, k)| run_dataset(cfg, &scenarios, s, k)).collect();
    Ok(Report { config: cfg.clone(), scenarios, outcomes })
}

const NOTES: &str = "\
Simulated scenarios place individuals uniformly on a square and start from a single infectious individual at t=1.
Scenarios labelled fmd_* use a synthetic surrogate population of uniformly placed points, not real farm locations.
The surrogate epidemic starts at t=1; the real outbreak's infection times begin around t=30, so absolute times are not comparable.
Epidemics with fewer than min_cases infections are redrawn; the attempts column counts draws.
MSE columns: *_mse uses the pointwise predictive mean as reference, *_mse_observed uses the observed curve.
";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn clean(msg: &str) -> String {
    let m = msg.replace(['\n', '\r'], " ");
    if m.contains([',', '"']) {
        format!("\"{}\"", m.replace('"', "\"\""))
    } else {
        m
    }
}

/// Writes the report directory. Existing files with the same names are
/// overwritten.
pub fn write_report(report: &Report, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let w = |name: &str, text: &str| fs::write(dir.join(name), text).with_context(|| format!("writing {name}"));
    w("config.txt", &report.config.to_text())?;
    w("notes.txt", NOTES)?;

    let mut selection = String::from("scenario,framework,alpha,beta,beta0,count,proportion\n");
    let mut stage1 = String::from("scenario,dataset,n_infected,attempts,mean_infectious_period,chosen_beta0,loglik,alpha0,alpha1\n");
    let mut mse = String::from(
        "scenario,framework,alpha,beta,datasets,ilm_mse,ilm_mse_observed,ilm_sd,clilm_mse,clilm_mse_observed,clilm_sd\n",
    );
    let mut coverage = String::from("scenario,framework,alpha,beta,datasets,ilm_mean,ilm_sd,clilm_mean,clilm_sd\n");
    let mut stage2 = String::from(
        "scenario,dataset,beta0,ilm_alpha_mean,ilm_alpha_lo,ilm_alpha_hi,ilm_beta_mean,ilm_beta_lo,ilm_beta_hi,ilm_acceptance,\
clilm_alpha0_mean,clilm_alpha1_mean,clilm_acceptance,ilm_mse,ilm_mse_observed,ilm_sd,ilm_coverage,\
clilm_mse,clilm_mse_observed,clilm_sd,clilm_coverage\n",
    );
    let mut failures = String::from("scenario,dataset,stage,message\n");

    for (s, sc) in report.scenarios.iter().enumerate() {
        let head = format!("{},{},{},{}", sc.label, sc.framework(), sc.alpha, sc.beta);
        let mut chosen: Vec<f64> = Vec::new();
        for o in report.outcomes_for(s) {
            let k = o.index + 1;
            let data = match &o.dataset {
                Ok(d) => d,
                Err(e) => {
                    let _ = writeln!(failures, "{},{k},simulate,{}", sc.label, clean(e));
                    continue;
                }
            };
            let ds_dir = dir.join("datasets").join(&sc.label).join(format!("ds{k:02}"));
            fs::create_dir_all(&ds_dir)?;
            io::write_population(&ds_dir.join("population.csv"), &data.pop)?;
            io::write_record(&ds_dir.join("epidemic.csv"), &data.record, &data.pop)?;
            let period = mean_infectious_period(&data.record);
            match o.tune.as_ref().expect("tuning always attempted") {
                Ok(t) => {
                    io::write_tune(&ds_dir.join("tune.csv"), t)?;
                    chosen.push(t.chosen_beta0);
                    let c = t.chosen();
                    let _ = writeln!(
                        stage1,
                        "{},{k},{},{},{},{},{},{},{}",
                        sc.label,
                        data.record.n_infected(),
                        data.attempts,
                        opt(period),
                        t.chosen_beta0,
                        c.log_lik,
                        c.alpha0,
                        c.alpha1
                    );
                }
                Err(e) => {
                    let _ = writeln!(
                        stage1,
                        "{},{k},{},{},{},,,,",
                        sc.label,
                        data.record.n_infected(),
                        data.attempts,
                        opt(period)
                    );
                    let _ = writeln!(failures, "{},{k},tune,{}", sc.label, clean(e));
                }
            }
            match &o.stage2 {
                None => {}
                Some(Err(e)) => {
                    let _ = writeln!(failures, "{},{k},fit,{}", sc.label, clean(e));
                }
                Some(Ok(r)) => {
                    io::write_posterior(&ds_dir.join("posterior_ilm.csv"), &r.ilm.posterior)?;
                    io::write_posterior(&ds_dir.join("posterior_clilm.csv"), &r.clilm.posterior)?;
                    io::write_ppc_bundle(&ds_dir.join("ppc_ilm"), &r.ilm.ppc)?;
                    io::write_ppc_bundle(&ds_dir.join("ppc_clilm"), &r.clilm.ppc)?;
                    let ip = &r.ilm.posterior;
                    let cp = &r.clilm.posterior;
                    let (im, cm) = (ip.mean(), cp.mean());
                    let (alo, ahi) = ip.interval(0, 0.95);
                    let (blo, bhi) = ip.interval(1, 0.95);
                    let beta0 = o.tune.as_ref().and_then(|t| t.as_ref().ok()).map(|t| t.chosen_beta0);
                    let _ = writeln!(
                        stage2,
                        "{},{k},{},{},{alo},{ahi},{},{blo},{bhi},{},{},{},{},{},{},{},{},{},{},{},{}",
                        sc.label,
                        opt(beta0),
                        im[0],
                        im[1],
                        ip.acceptance_rate,
                        cm[0],
                        cm[1],
                        cp.acceptance_rate,
                        r.ilm.mse_mean,
                        r.ilm.mse_observed,
                        r.ilm.ppc.avg_sd,
                        r.ilm.ppc.coverage,
                        r.clilm.mse_mean,
                        r.clilm.mse_observed,
                        r.clilm.ppc.avg_sd,
                        r.clilm.ppc.coverage
                    );
                }
            }
        }
        chosen.sort_by(f64::total_cmp);
        let total = chosen.len();
        let mut k = 0;
        while k < total {
            let v = chosen[k];
            let count = chosen[k..].iter().take_while(|&&x| x == v).count();
            let _ = writeln!(selection, "{head},{v},{count},{}", count as f64 / total as f64);
            k += count;
        }
        let sm = report.summary(s);
        let _ = writeln!(
            mse,
            "{head},{},{},{},{},{},{},{}",
            sm.datasets, sm.ilm_mse, sm.ilm_mse_observed, sm.ilm_sd, sm.clilm_mse, sm.clilm_mse_observed, sm.clilm_sd
        );
        let _ = writeln!(
            coverage,
            "{head},{},{},{},{},{}",
            sm.datasets, sm.ilm_coverage.0, sm.ilm_coverage.1, sm.clilm_coverage.0, sm.clilm_coverage.1
        );
    }
    w("stage1_selection.csv", &selection)?;
    w("stage1_datasets.csv", &stage1)?;
    w("stage2_mse.csv", &mse)?;
    w("stage2_coverage.csv", &coverage)?;
    w("stage2_datasets.csv", &stage2)?;
    w("failures.csv", &failures)?;
    Ok(())
}

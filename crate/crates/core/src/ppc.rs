//! Posterior predictive checks on the epidemic curve.
//!
//! Each replicate draws one parameter vector uniformly (with replacement)
//! from the posterior sample, replays the observed epidemic's initial cases
//! over the observed horizon, and records the incidence curve. The curves
//! are summarised pointwise by their mean, standard deviation and a central
//! percentile band.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::PosteriorSample;
use crate::model::{ClilmParams, Compartments, IlmParams, Transform};
use crate::population::{DistanceMatrix, Population};
use crate::record::EpidemicRecord;
use crate::rng::{rng_from_seed, split_seed};
use crate::simulate::{self, SimConfig};

/// Newly infectious counts for `t = 1..=t_max` (index `t - 1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpidemicCurve {
    pub counts: Vec<u32>,
}

impl EpidemicCurve {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

pub fn epidemic_curve(record: &EpidemicRecord) -> EpidemicCurve {
    let mut counts = vec![0u32; record.t_max() as usize];
    for t in record.infection_times().iter().flatten() {
        counts[*t as usize - 1] += 1;
    }
    EpidemicCurve { counts }
}

/// Simulates an epidemic from the conditional logistic ILM with `beta0` and
/// transform taken from `params`.
pub fn simulate_from_clilm(
    params: &ClilmParams,
    pop: &Population,
    compartments: &Compartments,
    t_end: u32,
    initial: &[usize],
    seed: u64,
) -> Result<EpidemicRecord> {
    let kernel = pop.distance_matrix().kernel(params.beta0);
    simulate::simulate_clilm(params, &kernel, compartments, t_end, 1, initial, seed)
}

/// Which model the posterior sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PpcModel {
    Ilm,
    Clilm { beta0: f64, transform: Transform },
}

/// Reference curve in the squared-error metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MseReference {
    /// Pointwise mean of the replicate curves.
    #[default]
    PredictiveMean,
    /// The observed curve.
    Observed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpcOptions {
    pub replicates: usize,
    /// Central mass of the pointwise band; 1.0 gives `[min, max]`.
    pub band_mass: f64,
    pub reference: MseReference,
    pub seed: u64,
}

impl Default for PpcOptions {
    fn default() -> Self {
        Self { replicates: 500, band_mass: 0.95, reference: MseReference::PredictiveMean, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpcResult {
    pub curves: Vec<Vec<u32>>,
    pub observed: Vec<u32>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub mse: f64,
    pub avg_sd: f64,
    pub coverage: f64,
}

/// Inverse-ECDF quantile of sorted data: the `ceil(n p)`-th order statistic.
///
/// For `n = 500` the 2.5% and 97.5% points are the 13th and 488th order
/// statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let k = ((n as f64 * p) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[k - 1]
}

/// Summarises replicate curves against an observed curve.
pub fn summarize(curves: Vec<Vec<u32>>, observed: Vec<u32>, band_mass: f64, reference: MseReference) -> Result<PpcResult> {
    let s = curves.len();
    if s < 2 {
        return Err(Error::Validation(format!("need at least 2 replicates, got {s}")));
    }
    let t_max = observed.len();
    if curves.iter().any(|c| c.len() != t_max) {
        return Err(Error::Validation("replicate horizon differs from the observed horizon".into()));
    }
    if !(band_mass > 0.0 && band_mass <= 1.0) {
        return Err(Error::Validation(format!("band mass {band_mass} outside (0, 1]")));
    }
    let tail = (1.0 - band_mass) / 2.0;
    let (mut mean, mut sd, mut lower, mut upper) = (vec![0.0; t_max], vec![0.0; t_max], vec![0.0; t_max], vec![0.0; t_max]);
    let mut column = vec![0.0; s];
    for t in 0..t_max {
        for (v, c) in column.iter_mut().zip(&curves) {
            *v = f64::from(c[t]);
        }
        let m = column.iter().sum::<f64>() / s as f64;
        mean[t] = m;
        sd[t] = (column.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (s - 1) as f64).sqrt();
        column.sort_by(f64::total_cmp);
        lower[t] = quantile_sorted(&column, tail);
        upper[t] = quantile_sorted(&column, 1.0 - tail);
    }
    let reference_curve: Vec<f64> = match reference {
        MseReference::PredictiveMean => mean.clone(),
        MseReference::Observed => observed.iter().map(|&v| f64::from(v)).collect(),
    };
    let sse: f64 = curves
        .iter()
        .flat_map(|c| c.iter().zip(&reference_curve).map(|(&y, r)| (f64::from(y) - r).powi(2)))
        .sum();
    let mse = sse / (s * t_max) as f64;
    let avg_sd = sd.iter().sum::<f64>() / t_max as f64;
    let covered = (0..t_max)
        .filter(|&t| lower[t] <= f64::from(observed[t]) && f64::from(observed[t]) <= upper[t])
        .count();
    Ok(PpcResult {
        curves,
        observed,
        mean,
        sd,
        lower,
        upper,
        mse,
        avg_sd,
        coverage: covered as f64 / t_max as f64,
    })
}

/// Posterior predictive check of `sample` against the observed epidemic.
pub fn run_ppc(
    sample: &PosteriorSample,
    model: PpcModel,
    pop: &Population,
    compartments: &Compartments,
    observed: &EpidemicRecord,
    options: &PpcOptions,
) -> Result<PpcResult> {
    let dists = pop.distance_matrix();
    run_ppc_with(sample, model, pop, &dists, compartments, observed, options)
}

/// [`run_ppc`] with a precomputed distance matrix.
pub fn run_ppc_with(
    sample: &PosteriorSample,
    model: PpcModel,
    pop: &Population,
    dists: &DistanceMatrix,
    compartments: &Compartments,
    observed: &EpidemicRecord,
    options: &PpcOptions,
) -> Result<PpcResult> {
    if sample.is_empty() {
        return Err(Error::Validation("posterior sample is empty".into()));
    }
    if options.replicates < 2 {
        return Err(Error::Validation(format!("need at least 2 replicates, got {}", options.replicates)));
    }
    if observed.len() != pop.len() {
        return Err(Error::Validation("observed record and population sizes differ".into()));
    }
    let t_end = observed.t_max();
    if t_end < 2 {
        return Err(Error::Validation("observed horizon must be at least 2".into()));
    }
    let start = observed.first_infectious_time();
    let initial = observed.initial_cases();
    let kernel = match model {
        PpcModel::Clilm { beta0, .. } => Some(dists.kernel(beta0)),
        PpcModel::Ilm => None,
    };

    let curves: Result<Vec<Vec<u32>>> = (0..options.replicates)
        .into_par_iter()
        .map(|s| {
            let stream = split_seed(options.seed, s as u64);
            let mut rng = rng_from_seed(stream);
            let theta = sample.draws[rng.random_range(0..sample.len())];
            let sim_seed = split_seed(stream, 1);
            let rec = match model {
                PpcModel::Ilm => {
                    let params = IlmParams::new(theta[0], theta[1])?;
                    let mut cfg = SimConfig::new(params, *compartments, pop, t_end, sim_seed);
                    cfg.initial_infectious = Some(initial.clone());
                    cfg.start = start;
                    simulate::simulate_with_distances(&cfg, dists)?
                }
                PpcModel::Clilm { beta0, transform } => {
                    let params = ClilmParams { alpha0: theta[0], alpha1: theta[1], beta0, transform };
                    let kernel = kernel.as_ref().expect("built for logistic model");
                    simulate::simulate_clilm(&params, kernel, compartments, t_end, start, &initial, sim_seed)?
                }
            };
            Ok(epidemic_curve(&rec).counts)
        })
        .collect();

    summarize(curves?, epidemic_curve(observed).counts, options.band_mass, options.reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::toy;

    #[test]
    fn toy_curve() {
        let (_, rec) = toy();
        assert_eq!(epidemic_curve(&rec).counts, vec![0, 1, 1, 1, 1]);
        assert_eq!(epidemic_curve(&rec).total(), rec.n_infected() as u64);
        let single = EpidemicRecord::si(vec![Some(1), None, None], 4).unwrap();
        assert_eq!(epidemic_curve(&single).counts, vec![1, 0, 0, 0]);
    }

    #[test]
    fn order_statistics_for_500() {
        let v: Vec<f64> = (1..=500).map(f64::from).collect();
        assert_eq!(quantile_sorted(&v, 0.025), 13.0);
        assert_eq!(quantile_sorted(&v, 0.975), 488.0);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 500.0);
        let v: Vec<f64> = (1..=200).map(f64::from).collect();
        assert_eq!(quantile_sorted(&v, 0.025), 5.0);
        assert_eq!(quantile_sorted(&v, 0.975), 195.0);
    }

    #[test]
    fn identical_replicates() {
        let obs = vec![1, 3, 5, 2, 0];
        let r = summarize(vec![obs.clone(); 10], obs, 0.95, MseReference::PredictiveMean).unwrap();
        assert_eq!(r.mse, 0.0);
        assert_eq!(r.coverage, 1.0);
        assert_eq!(r.avg_sd, 0.0);
    }

    #[test]
    fn wider_band_covers_more() {
        let curves: Vec<Vec<u32>> = (0..40).map(|s| vec![s, 2 * s % 7, 40 - s, s % 3]).collect();
        let obs = vec![39, 6, 1, 2];
        let narrow = summarize(curves.clone(), obs.clone(), 0.5, MseReference::PredictiveMean).unwrap();
        let mid = summarize(curves.clone(), obs.clone(), 0.95, MseReference::PredictiveMean).unwrap();
        let full = summarize(curves, obs, 1.0, MseReference::Observed).unwrap();
        assert!(narrow.coverage <= mid.coverage && mid.coverage <= full.coverage);
        assert_eq!(full.coverage, 1.0);
    }

    #[test]
    fn rejects_mismatched_horizon() {
        assert!(summarize(vec![vec![1, 2], vec![1]], vec![1, 2], 0.95, MseReference::Observed).is_err());
        assert!(summarize(vec![vec![1, 2]], vec![1, 2], 0.95, MseReference::Observed).is_err());
    }
}

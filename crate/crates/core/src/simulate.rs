//! Discrete-time stochastic simulation of SI and SIR epidemics.
//!
//! At each step `t` every susceptible individual is infected independently
//! with its current infection probability and becomes infectious at `t + 1`.
//! Under SIR the infectious period is a Poisson draw, with zero draws mapped
//! to one.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::model::{ilm_prob_from_pressure, logistic, ClilmParams, Compartments, IlmParams};
use crate::population::{DistanceMatrix, KernelMatrix, Population};
use crate::record::EpidemicRecord;
use crate::rng::{rng_from_seed, SimRng};

/// Inputs for one simulated spatial ILM epidemic.
#[derive(Debug, Clone)]
pub struct SimConfig<'a> {
    pub params: IlmParams,
    pub compartments: Compartments,
    pub pop: &'a Population,
    pub t_end: u32,
    /// Infectious at `start`. `None` picks one individual uniformly at random.
    pub initial_infectious: Option<Vec<usize>>,
    /// Time at which the initial cases are infectious, 1 unless replaying an
    /// observed epidemic that starts later.
    pub start: u32,
    pub seed: u64,
}

impl<'a> SimConfig<'a> {
    pub fn new(params: IlmParams, compartments: Compartments, pop: &'a Population, t_end: u32, seed: u64) -> Self {
        Self { params, compartments, pop, t_end, initial_infectious: None, start: 1, seed }
    }
}

/// Source of kernel rows `d_j.^-power` for infectious individual `j`.
pub(crate) trait KernelRows {
    fn row(&mut self, j: usize) -> &[f64];
}

impl KernelRows for &KernelMatrix {
    fn row(&mut self, j: usize) -> &[f64] {
        KernelMatrix::row(self, j)
    }
}

/// Computes kernel rows on first use; only infected individuals ever need one.
pub(crate) struct LazyKernel<'a> {
    dists: &'a DistanceMatrix,
    power: f64,
    rows: Vec<Option<Box<[f64]>>>,
}

impl<'a> LazyKernel<'a> {
    pub(crate) fn new(dists: &'a DistanceMatrix, power: f64) -> Self {
        Self { dists, power, rows: vec![None; dists.len()] }
    }
}

impl KernelRows for LazyKernel<'_> {
    fn row(&mut self, j: usize) -> &[f64] {
        let (dists, power) = (self.dists, self.power);
        self.rows[j].get_or_insert_with(|| {
            dists
                .row(j)
                .iter()
                .map(|&d| if d > 0.0 { d.powf(-power) } else { 0.0 })
                .collect()
        })
    }
}

fn infectious_period(compartments: &Compartments, rng: &mut SimRng) -> Option<u32> {
    match *compartments {
        Compartments::Si => None,
        Compartments::Sir { infectious_period_mean } => {
            let draw: f64 = Poisson::new(infectious_period_mean)
                .expect("validated mean")
                .sample(rng);
            Some((draw as u32).max(1))
        }
    }
}

pub(crate) fn validate_horizon(n: usize, t_end: u32, start: u32, initial: &[usize]) -> Result<()> {
    if t_end < 2 {
        return Err(Error::Validation(format!("t_end must be at least 2, got {t_end}")));
    }
    if start < 1 || start > t_end {
        return Err(Error::Validation(format!("start time {start} outside [1, {t_end}]")));
    }
    if initial.is_empty() {
        return Err(Error::Validation("initial infectious set is empty".into()));
    }
    if let Some(&bad) = initial.iter().find(|&&i| i >= n) {
        return Err(Error::Validation(format!("initial infectious index {bad} not in population")));
    }
    Ok(())
}

/// Shared simulation loop. `prob` maps a susceptible's raw infectious
/// pressure to its infection probability; it is only called while somebody
/// is infectious.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_epidemic<K, F>(
    n: usize,
    compartments: &Compartments,
    t_end: u32,
    start: u32,
    initial: &[usize],
    rng: &mut SimRng,
    kernel: &mut K,
    prob: F,
) -> EpidemicRecord
where
    K: KernelRows,
    F: Fn(f64) -> f64,
{
    let mut t_inf: Vec<Option<u32>> = vec![None; n];
    let mut t_rem: Vec<Option<u32>> = vec![None; n];
    for &i in initial {
        if t_inf[i].is_none() {
            t_inf[i] = Some(start);
            t_rem[i] = infectious_period(compartments, rng).map(|p| start + p);
        }
    }

    let mut pressure = vec![0.0; n];
    let mut infectious: Vec<usize> = Vec::new();
    let mut new_cases: Vec<usize> = Vec::new();

    for t in start..t_end {
        // I(t): drop removals, add those becoming infectious at t
        let before = infectious.len();
        infectious.retain(|&j| t_rem[j].is_none_or(|tr| t < tr));
        let removed_any = infectious.len() != before;
        let arrivals: Vec<usize> = (0..n).filter(|&j| t_inf[j] == Some(t)).collect();

        if removed_any {
            infectious.extend_from_slice(&arrivals);
            infectious.sort_unstable();
            pressure.iter_mut().for_each(|p| *p = 0.0);
            for &j in &infectious {
                for (p, &k) in pressure.iter_mut().zip(kernel.row(j)) {
                    *p += k;
                }
            }
        } else {
            for &j in &arrivals {
                for (p, &k) in pressure.iter_mut().zip(kernel.row(j)) {
                    *p += k;
                }
            }
            infectious.extend_from_slice(&arrivals);
            infectious.sort_unstable();
        }

        if infectious.is_empty() {
            continue;
        }
        new_cases.clear();
        for i in 0..n {
            if t_inf[i].is_some() {
                continue;
            }
            let p = prob(pressure[i]);
            if p > 0.0 && rng.random::<f64>() < p {
                new_cases.push(i);
            }
        }
        for &i in &new_cases {
            t_inf[i] = Some(t + 1);
            t_rem[i] = infectious_period(compartments, rng).map(|d| t + 1 + d);
        }
    }

    EpidemicRecord::new(t_inf, t_rem, t_end).expect("simulated record is valid")
}

fn resolve_initial(cfg_initial: &Option<Vec<usize>>, n: usize, rng: &mut SimRng) -> Vec<usize> {
    match cfg_initial {
        Some(v) => v.clone(),
        None => vec![rng.random_range(0..n)],
    }
}

/// Simulates one spatial ILM epidemic. Identical configurations give
/// identical records.
pub fn simulate(cfg: &SimConfig<'_>) -> Result<EpidemicRecord> {
    let dists = cfg.pop.distance_matrix();
    simulate_with_distances(cfg, &dists)
}

/// [`simulate`] with a precomputed distance matrix for `cfg.pop`.
pub fn simulate_with_distances(cfg: &SimConfig<'_>, dists: &DistanceMatrix) -> Result<EpidemicRecord> {
    let n = cfg.pop.len();
    let mut rng = rng_from_seed(cfg.seed);
    let initial = resolve_initial(&cfg.initial_infectious, n, &mut rng);
    validate_horizon(n, cfg.t_end, cfg.start, &initial)?;
    let alpha = cfg.params.alpha();
    let mut kernel = LazyKernel::new(dists, cfg.params.beta());
    Ok(run_epidemic(
        n,
        &cfg.compartments,
        cfg.t_end,
        cfg.start,
        &initial,
        &mut rng,
        &mut kernel,
        |x| ilm_prob_from_pressure(alpha, x),
    ))
}

/// Simulates from the conditional logistic ILM. While nobody is infectious
/// the infection probability is zero.
pub fn simulate_clilm(
    params: &ClilmParams,
    kernel: &KernelMatrix,
    compartments: &Compartments,
    t_end: u32,
    start: u32,
    initial: &[usize],
    seed: u64,
) -> Result<EpidemicRecord> {
    let n = kernel.row(0).len();
    validate_horizon(n, t_end, start, initial)?;
    let mut rng = rng_from_seed(seed);
    let params = *params;
    let mut rows = kernel;
    Ok(run_epidemic(n, compartments, t_end, start, initial, &mut rng, &mut rows, |raw| {
        match params.transform.apply(raw) {
            Some(x) => logistic(params.linear_predictor(x)),
            None => 0.0,
        }
    }))
}

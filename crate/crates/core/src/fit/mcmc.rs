//! Adaptive random-walk Metropolis for two-parameter posteriors.
//!
//! Proposals are `theta + N(0, lambda * (C + eps I))`, where `C` is a running
//! estimate of the posterior covariance and `ln lambda` follows a
//! Robbins-Monro recursion toward an acceptance rate of 0.234. Both use the
//! gain `gamma_k = 100 / (k + 100)`, so adaptation fades like `1/k`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::irls::irls_fit;
use super::optim::ilm_mle;
use super::prior::PriorSpec;
use crate::binary::BinaryTable;
use crate::error::{Error, Result};
use crate::likelihood::IlmLikelihood;
use crate::model::bernoulli_log_mass;
use crate::population::Population;
use crate::record::EpidemicRecord;
use crate::rng::rng_from_seed;

const TARGET_ACCEPT: f64 = 0.234;
const GAIN_OFFSET: f64 = 100.0;

/// Unnormalised log-density over a two-dimensional parameter.
pub trait LogDensity {
    fn log_density(&self, theta: &[f64; 2]) -> f64;
}

impl<F: Fn(&[f64; 2]) -> f64> LogDensity for F {
    fn log_density(&self, theta: &[f64; 2]) -> f64 {
        self(theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmcSettings {
    pub iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Starting state; drivers pick one when absent.
    pub init: Option<[f64; 2]>,
    /// Initial proposal covariance; drivers pick one when absent.
    pub init_cov: Option<[[f64; 2]; 2]>,
}

impl Default for McmcSettings {
    fn default() -> Self {
        Self { iters: 50_000, burn_in: 10_000, thin: 10, seed: 1, init: None, init_cov: None }
    }
}

impl McmcSettings {
    pub fn new(iters: usize, burn_in: usize, thin: usize, seed: u64) -> Self {
        Self { iters, burn_in, thin, seed, ..Self::default() }
    }
}

/// Retained draws of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample {
    pub names: [String; 2],
    pub draws: Vec<[f64; 2]>,
    /// Iteration number (1-based) of every retained draw.
    pub iterations: Vec<usize>,
    pub log_post: Vec<f64>,
    /// Accepted / proposed after burn-in.
    pub acceptance_rate: f64,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl PosteriorSample {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[k]).collect()
    }

    pub fn mean(&self) -> [f64; 2] {
        let n = self.draws.len() as f64;
        let s = self.draws.iter().fold([0.0, 0.0], |a, d| [a[0] + d[0], a[1] + d[1]]);
        [s[0] / n, s[1] / n]
    }

    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let m = self.mean();
        let n = self.draws.len() as f64 - 1.0;
        let mut c = [[0.0; 2]; 2];
        for d in &self.draws {
            for a in 0..2 {
                for b in 0..2 {
                    c[a][b] += (d[a] - m[a]) * (d[b] - m[b]) / n;
                }
            }
        }
        c
    }

    /// Central interval with the given mass, from inverse-ECDF quantiles.
    pub fn interval(&self, k: usize, mass: f64) -> (f64, f64) {
        let mut v = self.column(k);
        v.sort_by(f64::total_cmp);
        let tail = (1.0 - mass) / 2.0;
        (crate::ppc::quantile_sorted(&v, tail), crate::ppc::quantile_sorted(&v, 1.0 - tail))
    }

    /// Acceptance rate outside (0.05, 0.6) suggests a poorly tuned chain.
    pub fn acceptance_flagged(&self) -> bool {
        !(self.acceptance_rate > 0.05 && self.acceptance_rate < 0.6)
    }
}

/// Monte Carlo standard error of the mean by non-overlapping batch means,
/// with `floor(sqrt(n))` batches.
pub fn batch_means_se(values: &[f64]) -> f64 {
    let n = values.len();
    let batches = (n as f64).sqrt().floor() as usize;
    if batches < 2 {
        return f64::NAN;
    }
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| values[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

fn cholesky(c: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    if !(c[0][0] > 0.0) {
        return None;
    }
    let l00 = c[0][0].sqrt();
    let l10 = c[1][0] / l00;
    let rem = c[1][1] - l10 * l10;
    if !(rem > 0.0) || !rem.is_finite() {
        return None;
    }
    Some([[l00, 0.0], [l10, rem.sqrt()]])
}

/// Runs one adaptive Metropolis chain on `target`.
pub fn sample_target<T: LogDensity + ?Sized>(
    target: &T,
    init: [f64; 2],
    init_cov: [[f64; 2]; 2],
    settings: &McmcSettings,
    names: [&str; 2],
) -> Result<PosteriorSample> {
    if settings.iters <= settings.burn_in {
        return Err(Error::Validation(format!(
            "iters ({}) must exceed burn_in ({}); no draws would be kept",
            settings.iters, settings.burn_in
        )));
    }
    if settings.thin == 0 {
        return Err(Error::Validation("thin must be at least 1".into()));
    }
    if cholesky(init_cov).is_none() {
        return Err(Error::Validation(format!("initial covariance {init_cov:?} is not positive definite")));
    }
    let mut lp = target.log_density(&init);
    if !lp.is_finite() {
        return Err(Error::OutsideSupport(init));
    }

    let mut rng = rng_from_seed(settings.seed);
    let jitter = 1e-10 * (init_cov[0][0] + init_cov[1][1]);
    let mut x = init;
    let mut mean = init;
    let mut cov = init_cov;
    let mut log_scale = (2.38f64 * 2.38 / 2.0).ln();

    let kept = (settings.iters - settings.burn_in) / settings.thin;
    let mut draws = Vec::with_capacity(kept);
    let mut iterations = Vec::with_capacity(kept);
    let mut log_post = Vec::with_capacity(kept);
    let (mut proposed, mut accepted) = (0usize, 0usize);

    for k in 1..=settings.iters {
        let s = log_scale.exp();
        let prop_cov = [[s * (cov[0][0] + jitter), s * cov[0][1]], [s * cov[1][0], s * (cov[1][1] + jitter)]];
        let l = match cholesky(prop_cov) {
            Some(l) => l,
            None => {
                // running estimate lost definiteness; fall back to its diagonal
                let d = [[s * (cov[0][0].abs() + jitter), 0.0], [0.0, s * (cov[1][1].abs() + jitter)]];
                cholesky(d).expect("diagonal with positive jitter")
            }
        };
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        let y = [x[0] + l[0][0] * z0, x[1] + l[1][0] * z0 + l[1][1] * z1];
        let lp_y = target.log_density(&y);
        let log_ratio = lp_y - lp;
        let accept_prob = if log_ratio.is_nan() { 0.0 } else { log_ratio.min(0.0).exp() };
        let u: f64 = rng.random();
        let accept = lp_y.is_finite() && u < accept_prob;
        if accept {
            x = y;
            lp = lp_y;
        }
        if k > settings.burn_in {
            proposed += 1;
            accepted += usize::from(accept);
        }

        let gain = GAIN_OFFSET / (k as f64 + GAIN_OFFSET);
        log_scale += gain * (accept_prob - TARGET_ACCEPT);
        let dx = [x[0] - mean[0], x[1] - mean[1]];
        for a in 0..2 {
            mean[a] += gain * dx[a];
        }
        for a in 0..2 {
            for b in 0..2 {
                cov[a][b] += gain * (dx[a] * dx[b] - cov[a][b]);
            }
        }

        if k > settings.burn_in && (k - settings.burn_in).is_multiple_of(settings.thin) {
            draws.push(x);
            iterations.push(k);
            log_post.push(lp);
        }
    }

    Ok(PosteriorSample {
        names: [names[0].to_string(), names[1].to_string()],
        draws,
        iterations,
        log_post,
        acceptance_rate: accepted as f64 / proposed as f64,
        burn_in: settings.burn_in,
        thin: settings.thin,
        seed: settings.seed,
    })
}

/// Posterior of the spatial ILM under the uniform priors.
pub struct IlmPosterior {
    pub lik: IlmLikelihood,
    pub priors: PriorSpec,
}

impl LogDensity for IlmPosterior {
    fn log_density(&self, theta: &[f64; 2]) -> f64 {
        let prior = self.priors.ilm_log_prior(theta);
        if prior == f64::NEG_INFINITY {
            return prior;
        }
        prior + self.lik.log_likelihood(theta[0], theta[1]).value
    }
}

/// Posterior of the logistic coefficients given a binary table, under the
/// Cauchy priors.
pub struct ClilmPosterior {
    pub xs: Vec<f64>,
    pub ys: Vec<bool>,
    pub priors: PriorSpec,
}

impl ClilmPosterior {
    pub fn new(table: &BinaryTable, priors: PriorSpec) -> Self {
        Self {
            xs: table.rows.iter().map(|r| r.x).collect(),
            ys: table.rows.iter().map(|r| r.y).collect(),
            priors,
        }
    }
}

impl LogDensity for ClilmPosterior {
    fn log_density(&self, theta: &[f64; 2]) -> f64 {
        let ll: f64 = self
            .xs
            .iter()
            .zip(&self.ys)
            .map(|(&x, &y)| bernoulli_log_mass(y, theta[0] + theta[1] * x))
            .sum();
        ll + self.priors.clilm_log_prior(theta)
    }
}

const IDENTITY: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];

/// ILM sampler on an arbitrary target. Starts from `settings.init` (default
/// `(1, 1)`) with `settings.init_cov` (default identity).
pub fn mcmc_ilm_on<T: LogDensity + ?Sized>(target: &T, settings: &McmcSettings) -> Result<PosteriorSample> {
    let init = settings.init.unwrap_or([1.0, 1.0]);
    sample_target(target, init, settings.init_cov.unwrap_or(IDENTITY), settings, ["alpha", "beta"])
}

/// Logistic sampler on an arbitrary target. Starts from `settings.init`
/// (default the origin) with `settings.init_cov` (default identity).
pub fn mcmc_clilm_on<T: LogDensity + ?Sized>(target: &T, settings: &McmcSettings) -> Result<PosteriorSample> {
    let init = settings.init.unwrap_or([0.0, 0.0]);
    sample_target(target, init, settings.init_cov.unwrap_or(IDENTITY), settings, ["alpha0", "alpha1"])
}

/// Bayesian fit of the spatial ILM `(alpha, beta)`.
///
/// Without an explicit start the chain begins at the maximum-likelihood
/// estimate, with the inverse observed information as initial proposal
/// covariance when it is positive definite.
pub fn mcmc_ilm(
    record: &EpidemicRecord,
    pop: &Population,
    priors: &PriorSpec,
    settings: &McmcSettings,
) -> Result<PosteriorSample> {
    let lik = IlmLikelihood::new(record, &pop.distance_matrix())?;
    mcmc_ilm_with_likelihood(lik, priors, settings)
}

/// [`mcmc_ilm`] on an already compiled likelihood.
pub fn mcmc_ilm_with_likelihood(lik: IlmLikelihood, priors: &PriorSpec, settings: &McmcSettings) -> Result<PosteriorSample> {
    let mut settings = *settings;
    if let Some(init) = settings.init {
        if !priors.ilm_in_support(&init) {
            return Err(Error::OutsideSupport(init));
        }
    } else {
        let mle = ilm_mle(&lik, priors.alpha_max, priors.beta_max)?;
        let (a, b) = (mle.params.alpha(), mle.params.beta());
        settings.init = Some([a, b]);
        if settings.init_cov.is_none() {
            settings.init_cov = Some(
                mle.covariance
                    .unwrap_or([[(0.1 * a).powi(2), 0.0], [0.0, (0.1 * b).powi(2)]]),
            );
        }
    }
    if settings.init_cov.is_none() {
        let [a, b] = settings.init.expect("set above");
        settings.init_cov = Some([[(0.1 * a).powi(2), 0.0], [0.0, (0.1 * b).powi(2)]]);
    }
    let target = IlmPosterior { lik, priors: *priors };
    mcmc_ilm_on(&target, &settings)
}

/// Bayesian fit of the logistic coefficients `(alpha0, alpha1)`.
///
/// Without an explicit start the chain begins at the IRLS estimate with its
/// inverse information as proposal covariance; if IRLS fails it starts at the
/// origin with an identity covariance.
pub fn mcmc_clilm(table: &BinaryTable, priors: &PriorSpec, settings: &McmcSettings) -> Result<PosteriorSample> {
    let mut settings = *settings;
    if settings.init.is_none() {
        if let Ok(fit) = irls_fit(table) {
            settings.init = Some([fit.alpha0, fit.alpha1]);
            if settings.init_cov.is_none() && cholesky(fit.covariance).is_some() {
                settings.init_cov = Some(fit.covariance);
            }
        }
    }
    let target = ClilmPosterior::new(table, *priors);
    mcmc_clilm_on(&target, &settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_normal(t: &[f64; 2]) -> f64 {
        -0.5 * (t[0] * t[0] + t[1] * t[1])
    }

    #[test]
    fn degenerate_requests() {
        let s = McmcSettings::new(100, 100, 1, 0);
        assert!(mcmc_ilm_on(&std_normal, &s).is_err());
        let s = McmcSettings::new(100, 10, 0, 0);
        assert!(mcmc_ilm_on(&std_normal, &s).is_err());
        let bounded = |t: &[f64; 2]| if t[0] > 0.0 { 0.0 } else { f64::NEG_INFINITY };
        let mut s = McmcSettings::new(100, 10, 1, 0);
        s.init = Some([-1.0, 0.0]);
        assert!(matches!(mcmc_ilm_on(&bounded, &s), Err(Error::OutsideSupport(_))));
    }

    #[test]
    fn same_seed_same_chain() {
        let s = McmcSettings::new(2000, 500, 3, 77);
        let a = mcmc_clilm_on(&std_normal, &s).unwrap();
        let b = mcmc_clilm_on(&std_normal, &s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 500);
        assert_eq!(a.iterations[0], 503);
        let c = mcmc_clilm_on(&std_normal, &McmcSettings::new(2000, 500, 3, 78)).unwrap();
        assert_ne!(a.draws, c.draws);
    }

    #[test]
    fn stored_log_posterior_matches_target() {
        let s = McmcSettings::new(3000, 1000, 7, 5);
        let out = mcmc_ilm_on(&std_normal, &s).unwrap();
        for (d, lp) in out.draws.iter().zip(&out.log_post) {
            assert!((std_normal(d) - lp).abs() <= 1e-10 * lp.abs().max(1.0));
        }
    }

    #[test]
    fn scale_adapts_for_narrow_target() {
        let narrow = |t: &[f64; 2]| -0.5 * ((t[0] / 0.01).powi(2) + (t[1] / 0.02).powi(2));
        let out = mcmc_clilm_on(&narrow, &McmcSettings::new(20_000, 5_000, 1, 3)).unwrap();
        assert!(!out.acceptance_flagged(), "acceptance {}", out.acceptance_rate);
        let c = out.covariance();
        assert!((c[0][0].sqrt() / 0.01 - 1.0).abs() < 0.2);
        assert!((c[1][1].sqrt() / 0.02 - 1.0).abs() < 0.2);
    }

    #[test]
    fn batch_means_of_iid() {
        let mut rng = rng_from_seed(4);
        let v: Vec<f64> = (0..10_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let se = batch_means_se(&v);
        assert!((se / 0.01 - 1.0).abs() < 0.3, "{se}");
    }
}

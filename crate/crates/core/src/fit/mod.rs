//! Parameter estimation.
//!
//! Stage one picks the spatial power of the conditional logistic model by
//! maximising the profile likelihood over a grid ([`tune_beta0`]); stage two
//! fits the remaining coefficients, either by maximum likelihood
//! ([`irls_fit`]) or by adaptive random-walk Metropolis ([`mcmc_clilm`]).
//! The spatial ILM itself is fitted with [`mcmc_ilm`] (or [`ilm_mle`]).

mod estimate;
mod irls;
mod mcmc;
mod optim;
mod prior;
mod tune;

pub use estimate::PointEstimate;
pub use irls::{irls_fit, irls_fit_xy, IrlsFit};
pub use mcmc::{
    batch_means_se, mcmc_clilm, mcmc_clilm_on, mcmc_ilm, mcmc_ilm_on, mcmc_ilm_with_likelihood, sample_target, ClilmPosterior,
    IlmPosterior, LogDensity, McmcSettings, PosteriorSample,
};
pub use optim::{ilm_mle, nelder_mead, IlmMle};
pub use prior::PriorSpec;
pub use tune::{tune_beta0, tune_beta0_with, Beta0Grid, Candidate, TuneResult};

//! Point estimates from the maximum-likelihood fitters.

use super::irls::IrlsFit;
use super::optim::IlmMle;

/// Two-parameter point estimate with standard errors (`NaN` when the
/// information matrix is unavailable).
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimate {
    pub names: [String; 2],
    pub values: [f64; 2],
    pub std_errors: [f64; 2],
    pub log_lik: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl PointEstimate {
    pub fn from_irls(fit: &IrlsFit) -> Self {
        Self {
            names: ["alpha0".into(), "alpha1".into()],
            values: [fit.alpha0, fit.alpha1],
            std_errors: [fit.covariance[0][0].sqrt(), fit.covariance[1][1].sqrt()],
            log_lik: fit.log_lik,
            converged: fit.converged,
            iterations: fit.iterations,
        }
    }

    pub fn from_mle(mle: &IlmMle) -> Self {
        let se = mle
            .covariance
            .map(|c| [c[0][0].sqrt(), c[1][1].sqrt()])
            .unwrap_or([f64::NAN; 2]);
        Self {
            names: ["alpha".into(), "beta".into()],
            values: [mle.params.alpha(), mle.params.beta()],
            std_errors: se,
            log_lik: mle.log_lik,
            converged: true,
            iterations: 0,
        }
    }
}

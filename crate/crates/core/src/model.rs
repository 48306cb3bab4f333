//! Model parameters and per-individual infection probabilities.
//!
//! Two models share the same spatial ingredient, the infectious pressure
//! `X_it = sum_{j in I(t)} d_ij^-power` on susceptible `i` at time `t`:
//!
//! * the spatial ILM, `P_it = 1 - exp(-alpha * X_it)` with `power = beta`;
//! * the conditional logistic ILM, `logit P_it = alpha0 + alpha1 * g(X_it)`
//!   with `power = beta0` held fixed and `g` either the identity or `ln`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::population::DistanceMatrix;

/// Parameters of the spatial ILM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlmParams {
    alpha: f64,
    beta: f64,
}

impl IlmParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Validation(format!(
                "ILM parameters must be positive, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Like [`IlmParams::new`] but admits `alpha = 0`, the zero-hazard limit.
    pub fn with_zero_alpha(alpha: f64, beta: f64) -> Result<Self> {
        if alpha == 0.0 && beta > 0.0 && beta.is_finite() {
            return Ok(Self { alpha, beta });
        }
        Self::new(alpha, beta)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// How the infectious-pressure covariate enters the logistic predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Transform {
    Identity,
    #[default]
    Log,
}

impl Transform {
    /// Applies the transform to a raw pressure, `None` when `ln` is undefined.
    pub fn apply(self, raw: f64) -> Option<f64> {
        match self {
            Transform::Identity => Some(raw),
            Transform::Log if raw > 0.0 => Some(raw.ln()),
            Transform::Log => None,
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transform::Identity => "identity",
            Transform::Log => "log",
        })
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" | "id" | "none" => Ok(Transform::Identity),
            "log" | "ln" => Ok(Transform::Log),
            other => Err(Error::Validation(format!("unknown transform `{other}`"))),
        }
    }
}

/// Parameters of the conditional logistic ILM. `beta0` is the fixed spatial
/// power and may be any real number, including negative values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClilmParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta0: f64,
    pub transform: Transform,
}

impl ClilmParams {
    pub fn linear_predictor(&self, covariate: f64) -> f64 {
        self.alpha0 + self.alpha1 * covariate
    }
}

/// Compartmental framework.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Framework {
    Si,
    Sir,
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Framework::Si => "si",
            Framework::Sir => "sir",
        })
    }
}

impl FromStr for Framework {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "si" => Ok(Framework::Si),
            "sir" => Ok(Framework::Sir),
            other => Err(Error::Validation(format!("unknown framework `{other}`"))),
        }
    }
}

/// Framework plus, for SIR, the mean of the Poisson infectious period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Compartments {
    Si,
    Sir { infectious_period_mean: f64 },
}

impl Compartments {
    pub fn sir(infectious_period_mean: f64) -> Result<Self> {
        if !(infectious_period_mean > 0.0 && infectious_period_mean.is_finite()) {
            return Err(Error::Validation(format!(
                "infectious period mean must be positive, got {infectious_period_mean}"
            )));
        }
        Ok(Compartments::Sir { infectious_period_mean })
    }

    pub fn framework(&self) -> Framework {
        match self {
            Compartments::Si => Framework::Si,
            Compartments::Sir { .. } => Framework::Sir,
        }
    }
}

/// `1 - exp(-alpha * pressure)`.
#[inline]
pub fn ilm_prob_from_pressure(alpha: f64, pressure: f64) -> f64 {
    -(-alpha * pressure).exp_m1()
}

/// Spatial ILM infection probability of susceptible `i` given the infectious set.
pub fn ilm_infection_prob(
    params: &IlmParams,
    i: usize,
    infectious: &[usize],
    dists: &DistanceMatrix,
) -> f64 {
    debug_assert!(!infectious.contains(&i));
    let row = dists.row(i);
    let pressure: f64 = infectious.iter().map(|&j| row[j].powf(-params.beta)).sum();
    ilm_prob_from_pressure(params.alpha, pressure)
}

/// Raw pressure `sum_j d_ij^-beta0`, optionally log-transformed.
pub fn spatial_covariate(
    beta0: f64,
    i: usize,
    infectious: &[usize],
    dists: &DistanceMatrix,
    transform: Transform,
) -> Result<f64> {
    let row = dists.row(i);
    let raw: f64 = infectious.iter().map(|&j| row[j].powf(-beta0)).sum();
    transform.apply(raw).ok_or_else(|| Error::Domain {
        context: format!("individual index {i}"),
        raw,
    })
}

// Bounds keep exp finite and the logistic strictly inside (0, 1).
const Z_MIN: f64 = -709.0;
const Z_MAX: f64 = 36.0;

/// Logistic function, clamped inside the exponential so the result always
/// lies in the open interval (0, 1).
#[inline]
pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z.clamp(Z_MIN, Z_MAX)).exp())
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Bernoulli log-mass of outcome `y` under success log-odds `z`.
#[inline]
pub fn bernoulli_log_mass(y: bool, z: f64) -> f64 {
    if y {
        -softplus(-z)
    } else {
        -softplus(z)
    }
}

/// Conditional logistic ILM infection probability for a given covariate value.
pub fn clilm_infection_prob(params: &ClilmParams, covariate: f64) -> f64 {
    logistic(params.linear_predictor(covariate))
}

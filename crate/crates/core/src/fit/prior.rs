use std::f64::consts::PI;

/// Priors for both models: independent uniforms on `(0, alpha_max)` and
/// `(0, beta_max)` for the ILM, independent Cauchy for the logistic
/// coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub alpha_max: f64,
    pub beta_max: f64,
    pub cauchy_location: f64,
    pub cauchy_scale: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self { alpha_max: 5.0, beta_max: 10.0, cauchy_location: 0.0, cauchy_scale: 1.0 }
    }
}

impl PriorSpec {
    pub fn ilm_in_support(&self, theta: &[f64; 2]) -> bool {
        theta[0] > 0.0 && theta[0] < self.alpha_max && theta[1] > 0.0 && theta[1] < self.beta_max
    }

    pub fn ilm_log_prior(&self, theta: &[f64; 2]) -> f64 {
        if self.ilm_in_support(theta) {
            -(self.alpha_max.ln() + self.beta_max.ln())
        } else {
            f64::NEG_INFINITY
        }
    }

    fn cauchy_log_density(&self, v: f64) -> f64 {
        let z = (v - self.cauchy_location) / self.cauchy_scale;
        -(PI * self.cauchy_scale).ln() - z.mul_add(z, 1.0).ln()
    }

    pub fn clilm_log_prior(&self, theta: &[f64; 2]) -> f64 {
        self.cauchy_log_density(theta[0]) + self.cauchy_log_density(theta[1])
    }
}

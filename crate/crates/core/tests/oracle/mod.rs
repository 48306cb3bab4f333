//! Brute-force reference implementations used by the integration and
//! acceptance tests. They work directly from coordinates and event times,
//! walking every (individual, time) pair with no shared code from the
//! library beyond the plain data accessors.
#![allow(dead_code)]

use clilm::{BinaryRow, BinaryTable, EpidemicRecord, Population, TableMeta, Transform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain copy of an epidemic: coordinates plus event times.
#[derive(Debug, Clone)]
pub struct Raw {
    pub xy: Vec<(f64, f64)>,
    pub t_inf: Vec<Option<u32>>,
    pub t_rem: Vec<Option<u32>>,
    pub t_max: u32,
}

impl Raw {
    pub fn from(pop: &Population, rec: &EpidemicRecord) -> Self {
        Raw {
            xy: pop.individuals().iter().map(|p| (p.x, p.y)).collect(),
            t_inf: (0..rec.len()).map(|i| rec.t_inf(i)).collect(),
            t_rem: (0..rec.len()).map(|i| rec.t_rem(i)).collect(),
            t_max: rec.t_max(),
        }
    }

    pub fn n(&self) -> usize {
        self.xy.len()
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.xy[i], self.xy[j]);
        ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
    }

    pub fn t0(&self) -> u32 {
        self.t_inf.iter().flatten().copied().min().unwrap()
    }

    pub fn infectious(&self, j: usize, t: u32) -> bool {
        match self.t_inf[j] {
            Some(a) => a <= t && self.t_rem[j].is_none_or(|r| t < r),
            None => false,
        }
    }

    pub fn susceptible(&self, i: usize, t: u32) -> bool {
        self.t_inf[i].is_none_or(|a| t < a)
    }

    pub fn pressure(&self, i: usize, t: u32, power: f64) -> f64 {
        (0..self.n())
            .filter(|&j| j != i && self.infectious(j, t))
            .map(|j| self.dist(i, j).powf(-power))
            .sum()
    }

    pub fn any_infectious(&self, t: u32) -> bool {
        (0..self.n()).any(|j| self.infectious(j, t))
    }

    /// The (i, t, y) index set: every non-initial individual at every time
    /// from the first infectious time while it is susceptible and someone is
    /// infectious; y marks infection at t (infectious from t + 1).
    pub fn index_set(&self) -> Vec<(usize, u32, bool)> {
        let t0 = self.t0();
        let mut rows = Vec::new();
        for i in 0..self.n() {
            if self.t_inf[i] == Some(t0) {
                continue;
            }
            for t in t0..self.t_max {
                if !self.susceptible(i, t) {
                    break;
                }
                if !self.any_infectious(t) {
                    break;
                }
                rows.push((i, t, self.t_inf[i] == Some(t + 1)));
            }
        }
        rows
    }

    /// Spatial ILM log-likelihood, one Bernoulli factor per (i, t).
    /// ln(1 - P) = -alpha * pressure and ln P = ln(1 - exp(-alpha * pressure)).
    pub fn ilm_loglik(&self, alpha: f64, beta: f64) -> f64 {
        let mut total = 0.0;
        for (i, t, y) in self.index_set() {
            let h = alpha * self.pressure(i, t, beta);
            total += if y { (-(-h).exp_m1()).ln() } else { -h };
        }
        total
    }

    /// Conditional logistic log-likelihood with covariate `g(sum d^-beta0)`.
    pub fn clilm_loglik(&self, a0: f64, a1: f64, beta0: f64, log: bool) -> f64 {
        let mut total = 0.0;
        for (i, t, y) in self.index_set() {
            let raw = self.pressure(i, t, beta0);
            let x = if log { raw.ln() } else { raw };
            let z = a0 + a1 * x;
            // ln p = -ln(1 + e^-z), ln(1 - p) = -ln(1 + e^z)
            total -= log1p_exp(if y { -z } else { z });
        }
        total
    }
}

/// ln(1 + e^u) without overflow.
fn log1p_exp(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

/// Relative difference with a unit floor on the scale.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Random small epidemic (n <= 20, t_max <= 10), SI or SIR, with at least
/// one infection beyond the initial case when possible.
pub fn random_epidemic(seed: u64) -> (Population, EpidemicRecord) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(4..=20usize);
    let t_max = rng.random_range(3..=10u32);
    let side = rng.random_range(1.5..4.0);
    let pop = clilm::sample_population(n, side, rng.random()).unwrap();
    let params = clilm::IlmParams::new(rng.random_range(0.2..2.0), rng.random_range(1.0..4.0)).unwrap();
    let comp = if rng.random_bool(0.5) {
        clilm::Compartments::Si
    } else {
        clilm::Compartments::sir(rng.random_range(1.0..4.0)).unwrap()
    };
    let mut best = None;
    for k in 0..20u64 {
        let cfg = clilm::SimConfig::new(params, comp, &pop, t_max, seed.wrapping_mul(31).wrapping_add(k));
        let rec = clilm::simulate(&cfg).unwrap();
        let more = rec.n_infected() > 1;
        best = Some(rec);
        if more {
            break;
        }
    }
    (pop, best.unwrap())
}

/// Random logistic table with covariates in [-3, 3].
pub fn random_table(rng: &mut ChaCha8Rng, n: usize) -> BinaryTable {
    let (a0, a1) = (rng.random_range(-2.0..1.0), rng.random_range(-1.5..1.5));
    let rows = (0..n)
        .map(|k| {
            let x: f64 = rng.random_range(-3.0..3.0);
            let y = rng.random_bool(clilm::model::logistic(a0 + a1 * x));
            BinaryRow { id: k.to_string(), t: 1, y, x }
        })
        .collect();
    let meta = TableMeta { beta0: 1.0, transform: Transform::Identity, t0: 1, t_max: 2 };
    BinaryTable { rows, meta }
}

//! Log-likelihoods of the spatial ILM and the conditional logistic ILM.
//!
//! Everything is accumulated on the log scale. For the ILM the non-infection
//! factor is `ln(1 - P) = -alpha * X` exactly, and the infection factor uses
//! `ln(-expm1(-alpha * X))`, so tiny hazards lose no precision. An infection
//! that the model gives probability zero yields `-inf` rather than an error.

use crate::binary::{BinaryTable, RowIndex};
use crate::error::{Error, Result};
use crate::model::{bernoulli_log_mass, logistic, ClilmParams, IlmParams};
use crate::population::{DistanceMatrix, Population};
use crate::record::EpidemicRecord;

/// A log-likelihood value and the number of Bernoulli factors behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLik {
    pub value: f64,
    pub n_terms: usize,
}

impl LogLik {
    /// True when some observed event has probability zero.
    pub fn is_impossible(&self) -> bool {
        self.value == f64::NEG_INFINITY
    }
}

/// Spatial ILM likelihood compiled for repeated evaluation at different
/// `(alpha, beta)`.
///
/// The non-infection part collapses to `-alpha * sum_{(i,j)} c_ij d_ij^-beta`
/// where `c_ij` counts the time points at which `j` was infectious while `i`
/// stayed susceptible, so one evaluation costs one exponential per pair.
#[derive(Debug, Clone)]
pub struct IlmLikelihood {
    escape_log_d: Vec<f64>,
    escape_count: Vec<f64>,
    event_offsets: Vec<usize>,
    event_log_d: Vec<f64>,
    impossible_events: usize,
    n_terms: usize,
}

impl IlmLikelihood {
    pub fn new(record: &EpidemicRecord, dists: &DistanceMatrix) -> Result<Self> {
        let n = record.len();
        if dists.len() != n {
            return Err(Error::Validation(format!(
                "record has {n} individuals but distance matrix has {}",
                dists.len()
            )));
        }
        let t_max = record.t_max();
        let t0 = record.first_infectious_time();
        let sets = record.infectious_sets();

        let mut escape_log_d = Vec::new();
        let mut escape_count = Vec::new();
        let mut event_offsets = vec![0];
        let mut event_log_d = Vec::new();
        let mut impossible_events = 0;
        let mut n_terms = 0;
        let mut counts = vec![0u32; n];

        for i in 0..n {
            // initial cases are conditioned on; earlier factors are all 1
            let last = match record.t_inf(i) {
                Some(ti) if ti <= t0 => continue,
                Some(ti) => (ti - 1).min(t_max - 1),
                None => t_max - 1,
            };
            counts.iter_mut().for_each(|c| *c = 0);
            for t in t0..=last {
                n_terms += 1;
                let set = &sets[t as usize];
                if record.t_inf(i) == Some(t + 1) {
                    if set.is_empty() {
                        impossible_events += 1;
                    } else {
                        event_log_d.extend(set.iter().map(|&j| dists.get(i, j).ln()));
                        event_offsets.push(event_log_d.len());
                    }
                } else {
                    for &j in set {
                        counts[j] += 1;
                    }
                }
            }
            for (j, &c) in counts.iter().enumerate() {
                if c > 0 {
                    escape_log_d.push(dists.get(i, j).ln());
                    escape_count.push(f64::from(c));
                }
            }
        }
        Ok(Self { escape_log_d, escape_count, event_offsets, event_log_d, impossible_events, n_terms })
    }

    pub fn n_events(&self) -> usize {
        self.event_offsets.len() - 1 + self.impossible_events
    }

    pub fn log_likelihood(&self, alpha: f64, beta: f64) -> LogLik {
        let n_terms = self.n_terms;
        if self.impossible_events > 0 {
            return LogLik { value: f64::NEG_INFINITY, n_terms };
        }
        let escape: f64 = self
            .escape_log_d
            .iter()
            .zip(&self.escape_count)
            .map(|(&ld, &c)| c * (-beta * ld).exp())
            .sum();
        let mut value = -alpha * escape;
        for w in self.event_offsets.windows(2) {
            let pressure: f64 = self.event_log_d[w[0]..w[1]].iter().map(|&ld| (-beta * ld).exp()).sum();
            value += (-(-alpha * pressure).exp_m1()).ln();
        }
        LogLik { value, n_terms }
    }
}

/// Spatial ILM log-likelihood of a fully observed epidemic.
pub fn ilm_log_likelihood(record: &EpidemicRecord, pop: &Population, params: &IlmParams) -> Result<LogLik> {
    let lik = IlmLikelihood::new(record, &pop.distance_matrix())?;
    Ok(lik.log_likelihood(params.alpha(), params.beta()))
}

/// Conditional logistic ILM log-likelihood evaluated directly on the event
/// record, over the same `(i, t)` index set as the binary table.
pub fn conditional_log_likelihood(record: &EpidemicRecord, pop: &Population, params: &ClilmParams) -> Result<LogLik> {
    let dists = pop.distance_matrix();
    conditional_log_likelihood_with(record, pop, &dists, params)
}

/// [`conditional_log_likelihood`] with a precomputed distance matrix.
pub fn conditional_log_likelihood_with(
    record: &EpidemicRecord,
    pop: &Population,
    dists: &DistanceMatrix,
    params: &ClilmParams,
) -> Result<LogLik> {
    if record.len() != pop.len() {
        return Err(Error::Validation("record and population sizes differ".into()));
    }
    let t0 = record.first_infectious_time();
    let mut value = 0.0;
    let mut n_terms = 0;
    for t in t0..record.t_max() {
        let set = record.infectious_at(t);
        for i in 0..record.len() {
            if !record.is_susceptible(i, t) {
                continue;
            }
            let y = record.t_inf(i) == Some(t + 1);
            if set.is_empty() {
                if y {
                    return Err(Error::InfectionWithoutPressure { id: pop.id(i).to_string(), t, t_inf: t + 1 });
                }
                continue;
            }
            let raw: f64 = set.iter().map(|&j| dists.get(i, j).powf(-params.beta0)).sum();
            let x = params.transform.apply(raw).ok_or_else(|| Error::Domain {
                context: format!("individual `{}` at t={t}", pop.id(i)),
                raw,
            })?;
            value += bernoulli_log_mass(y, params.linear_predictor(x));
            n_terms += 1;
        }
    }
    Ok(LogLik { value, n_terms })
}

/// Bernoulli log-likelihood of a binary table under `(alpha0, alpha1)`.
pub fn table_log_likelihood(table: &BinaryTable, alpha0: f64, alpha1: f64) -> LogLik {
    let value = table.rows.iter().map(|r| bernoulli_log_mass(r.y, alpha0 + alpha1 * r.x)).sum();
    LogLik { value, n_terms: table.len() }
}

/// Gradient of [`table_log_likelihood`] in `(alpha0, alpha1)`:
/// `(sum(y - p), sum(x (y - p)))`.
pub fn clilm_score(table: &BinaryTable, alpha0: f64, alpha1: f64) -> [f64; 2] {
    table.rows.iter().fold([0.0, 0.0], |[s0, s1], r| {
        let resid = f64::from(u8::from(r.y)) - logistic(alpha0 + alpha1 * r.x);
        [s0 + resid, s1 + r.x * resid]
    })
}

/// True when the table's Bernoulli log-likelihood reproduces the
/// record-level conditional log-likelihood term for term (same number of
/// factors, values within `1e-10` relative).
pub fn round_trip_check(record: &EpidemicRecord, pop: &Population, params: &ClilmParams, table: &BinaryTable) -> bool {
    let Ok(direct) = conditional_log_likelihood(record, pop, params) else {
        return false;
    };
    let via_table = table_log_likelihood(table, params.alpha0, params.alpha1);
    direct.n_terms == via_table.n_terms
        && (direct.value - via_table.value).abs() <= 1e-10 * direct.value.abs().max(f64::MIN_POSITIVE)
}

/// Index-set sanity: the number of table rows implied by a record.
pub fn expected_rows(record: &EpidemicRecord, pop: &Population) -> Result<usize> {
    Ok(RowIndex::new(record, pop)?.rows.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binary::convert;
    use crate::model::Transform;
    use crate::toy::toy;

    #[test]
    fn zero_alpha_without_spread_is_zero() {
        let pop = Population::from_coords(&[(0.0, 0.0), (1.0, 0.0), (0.0, 2.0)]).unwrap();
        let rec = EpidemicRecord::si(vec![Some(1), None, None], 4).unwrap();
        let p = IlmParams::with_zero_alpha(0.0, 2.0).unwrap();
        let ll = ilm_log_likelihood(&rec, &pop, &p).unwrap();
        assert_eq!(ll.value, 0.0);
        assert_eq!(ll.n_terms, 6);
    }

    #[test]
    fn vanishing_alpha_with_spread_is_impossible() {
        let (pop, rec) = toy();
        let p = IlmParams::with_zero_alpha(0.0, 4.0).unwrap();
        assert!(ilm_log_likelihood(&rec, &pop, &p).unwrap().is_impossible());
        let small = ilm_log_likelihood(&rec, &pop, &IlmParams::new(1e-300, 4.0).unwrap()).unwrap();
        assert!(small.value < -600.0);
    }

    #[test]
    fn halves_when_coefficients_vanish() {
        let (pop, rec) = toy();
        let p = ClilmParams { alpha0: 0.0, alpha1: 0.0, beta0: 4.0, transform: Transform::Log };
        let ll = conditional_log_likelihood(&rec, &pop, &p).unwrap();
        assert_eq!(ll.n_terms, 6);
        assert!((ll.value - 6.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn clilm_never_impossible() {
        let (pop, rec) = toy();
        let p = ClilmParams { alpha0: -500.0, alpha1: 0.0, beta0: 4.0, transform: Transform::Identity };
        assert!(conditional_log_likelihood(&rec, &pop, &p).unwrap().value.is_finite());
    }

    #[test]
    fn round_trip_on_toy_and_broken_table() {
        let (pop, rec) = toy();
        let p = ClilmParams { alpha0: -2.0, alpha1: 1.0, beta0: 4.0, transform: Transform::Identity };
        let mut table = convert(&rec, &pop, 4.0, Transform::Identity).unwrap();
        assert!(round_trip_check(&rec, &pop, &p, &table));
        table.rows.remove(0);
        assert!(!round_trip_check(&rec, &pop, &p, &table));
    }

    #[test]
    fn all_zero_outcomes_have_negative_intercept_score() {
        let (pop, rec) = toy();
        let mut table = convert(&rec, &pop, 2.0, Transform::Log).unwrap();
        table.rows.iter_mut().for_each(|r| r.y = false);
        assert!(clilm_score(&table, 0.0, 0.3)[0] < 0.0);
    }

    #[test]
    fn relabelling_invariance() {
        let (pop, rec) = toy();
        let params = IlmParams::new(0.7, 4.0).unwrap();
        let base = ilm_log_likelihood(&rec, &pop, &params).unwrap().value;
        let order = [2, 0, 3, 1];
        let coords: Vec<_> = order.iter().map(|&k| (pop.get(k).x, pop.get(k).y)).collect();
        let pop2 = Population::from_coords(&coords).unwrap();
        let t_inf = order.iter().map(|&k| rec.t_inf(k)).collect();
        let rec2 = EpidemicRecord::si(t_inf, rec.t_max()).unwrap();
        let other = ilm_log_likelihood(&rec2, &pop2, &params).unwrap().value;
        assert!((base - other).abs() <= 1e-12 * base.abs());
    }

    #[test]
    fn continuity() {
        let (pop, rec) = toy();
        let f = |a: f64, b: f64| ilm_log_likelihood(&rec, &pop, &IlmParams::new(a, b).unwrap()).unwrap().value;
        assert!((f(0.7, 4.0) - f(0.7 + 1e-9, 4.0 + 1e-9)).abs() < 1e-6);
        let g = |a0: f64| {
            let p = ClilmParams { alpha0: a0, alpha1: 0.5, beta0: 2.0, transform: Transform::Log };
            conditional_log_likelihood(&rec, &pop, &p).unwrap().value
        };
        assert!((g(-1.0) - g(-1.0 + 1e-9)).abs() < 1e-6);
    }
}

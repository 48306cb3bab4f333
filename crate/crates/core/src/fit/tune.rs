//! Stage one: choosing the spatial power `beta0` by profile likelihood.

use rayon::prelude::*;

use super::irls::irls_fit_xy;
use crate::binary::RowIndex;
use crate::error::{Error, Result};
use crate::model::Transform;
use crate::population::{DistanceMatrix, Population};
use crate::record::EpidemicRecord;

/// Candidate values for `beta0`, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Beta0Grid {
    values: Vec<f64>,
}

impl Beta0Grid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("beta0 grid is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("beta0 grid has a non-finite value".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("beta0 grid must be strictly increasing".into()));
        }
        Ok(Self { values })
    }

    /// `start, start + step, ..., stop` (inclusive, values rounded to 1e-9).
    pub fn range(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || stop < start {
            return Err(Error::Validation(format!("bad grid range {start}..{stop} by {step}")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        let values = (0..=count).map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9).collect();
        Self::new(values)
    }

    /// `{-1, 0.5, 1.0, ..., 10.0}`, the grid for the simulated scenarios.
    pub fn simulation_default() -> Self {
        let mut v = vec![-1.0];
        v.extend(Self::range(0.5, 10.0, 0.5).expect("static grid").values);
        Self::new(v).expect("static grid")
    }

    /// `{-1, 0.2, 0.4, ..., 4.0}`, the grid for the FMD-like scenario.
    pub fn fmd_default() -> Self {
        let mut v = vec![-1.0];
        v.extend(Self::range(0.2, 4.0, 0.2).expect("static grid").values);
        Self::new(v).expect("static grid")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Outcome of fitting one grid value.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub beta0: f64,
    pub log_lik: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub converged: bool,
    /// Why the fit failed, if it did.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub chosen_beta0: f64,
    pub candidates: Vec<Candidate>,
}

impl TuneResult {
    pub fn chosen(&self) -> &Candidate {
        self.candidates
            .iter()
            .find(|c| c.beta0 == self.chosen_beta0)
            .expect("chosen value is a candidate")
    }
}

/// Fits the conditional logistic model at every grid value and keeps the one
/// with the largest maximised log-likelihood. Failed or non-converged fits
/// are excluded; exact ties go to the smaller `beta0`.
pub fn tune_beta0(record: &EpidemicRecord, pop: &Population, grid: &Beta0Grid, transform: Transform) -> Result<TuneResult> {
    let dists = pop.distance_matrix();
    tune_beta0_with(record, pop, &dists, grid, transform)
}

/// [`tune_beta0`] with a precomputed distance matrix.
pub fn tune_beta0_with(
    record: &EpidemicRecord,
    pop: &Population,
    dists: &DistanceMatrix,
    grid: &Beta0Grid,
    transform: Transform,
) -> Result<TuneResult> {
    let index = RowIndex::new(record, pop)?;
    let ys: Vec<bool> = index.rows.iter().map(|r| r.2).collect();

    let candidates: Vec<Candidate> = grid
        .values()
        .par_iter()
        .map(|&beta0| {
            let failed = |msg: String| Candidate {
                beta0,
                log_lik: f64::NAN,
                alpha0: f64::NAN,
                alpha1: f64::NAN,
                converged: false,
                failure: Some(msg),
            };
            let kernel = dists.kernel(beta0);
            let xs = match index.covariates(&kernel, transform, pop) {
                Ok(xs) => xs,
                Err(e) => return failed(e.to_string()),
            };
            match irls_fit_xy(&xs, &ys) {
                Ok(fit) => Candidate {
                    beta0,
                    log_lik: fit.log_lik,
                    alpha0: fit.alpha0,
                    alpha1: fit.alpha1,
                    converged: fit.converged,
                    failure: None,
                },
                Err(e) => failed(e.to_string()),
            }
        })
        .collect();

    let mut best: Option<&Candidate> = None;
    for c in candidates.iter().filter(|c| c.converged && c.log_lik.is_finite()) {
        if best.is_none_or(|b| c.log_lik > b.log_lik) {
            best = Some(c);
        }
    }
    let chosen_beta0 = best.ok_or(Error::AllCandidatesFailed)?.beta0;
    Ok(TuneResult { chosen_beta0, candidates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Compartments, IlmParams};
    use crate::population::sample_population;
    use crate::simulate::{simulate, SimConfig};

    #[test]
    fn default_grids() {
        let g = Beta0Grid::simulation_default();
        assert_eq!(g.values().len(), 21);
        assert_eq!(g.values()[0], -1.0);
        assert_eq!(g.values()[1], 0.5);
        assert_eq!(*g.values().last().unwrap(), 10.0);
        let f = Beta0Grid::fmd_default();
        assert_eq!(f.values().len(), 21);
        assert_eq!(f.values()[5], 1.0);
        assert_eq!(*f.values().last().unwrap(), 4.0);
        assert!(Beta0Grid::new(vec![]).is_err());
        assert!(Beta0Grid::new(vec![1.0, 1.0]).is_err());
    }

    fn data() -> (Population, EpidemicRecord) {
        let pop = sample_population(200, 6.0, 17).unwrap();
        let params = IlmParams::new(0.7, 3.0).unwrap();
        let rec = simulate(&SimConfig::new(params, Compartments::Si, &pop, 10, 4)).unwrap();
        (pop, rec)
    }

    #[test]
    fn singleton_grid_echoes() {
        let (pop, rec) = data();
        let r = tune_beta0(&rec, &pop, &Beta0Grid::new(vec![2.5]).unwrap(), Transform::Log).unwrap();
        assert_eq!(r.chosen_beta0, 2.5);
    }

    #[test]
    fn chosen_maximises_among_converged() {
        let (pop, rec) = data();
        let r = tune_beta0(&rec, &pop, &Beta0Grid::simulation_default(), Transform::Log).unwrap();
        let best = r.chosen().log_lik;
        for c in r.candidates.iter().filter(|c| c.converged) {
            assert!(best >= c.log_lik);
        }
    }
}

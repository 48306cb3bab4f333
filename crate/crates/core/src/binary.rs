//! Conversion of event-time epidemic data into a long-format binary table.
//!
//! Each row is one susceptible individual at one time point `t` at which
//! somebody is infectious: `y = 1` if the individual becomes infectious at
//! `t + 1`, and `x` is its infectious-pressure covariate at `t`. Rows start
//! at the first infectious time `t0`; the initial cases produce no rows
//! because the analysis conditions on them.

use crate::error::{Error, Result};
use crate::model::Transform;
use crate::population::{KernelMatrix, Population};
use crate::record::EpidemicRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryRow {
    pub id: String,
    pub t: u32,
    pub y: bool,
    pub x: f64,
}

/// Settings a table was produced with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableMeta {
    pub beta0: f64,
    pub transform: Transform,
    pub t0: u32,
    pub t_max: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryTable {
    pub rows: Vec<BinaryRow>,
    pub meta: TableMeta,
}

impl BinaryTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_events(&self) -> usize {
        self.rows.iter().filter(|r| r.y).count()
    }
}

/// The `(individual, t, y)` index set of the binary table, independent of
/// the spatial power. Sorted by individual then time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIndex {
    pub rows: Vec<(usize, u32, bool)>,
    pub t0: u32,
    pub t_max: u32,
    /// `I(t)` for `t` in `0..=t_max`.
    pub infectious: Vec<Vec<usize>>,
}

impl RowIndex {
    pub fn new(record: &EpidemicRecord, pop: &Population) -> Result<Self> {
        if record.len() != pop.len() {
            return Err(Error::Validation(format!(
                "record has {} individuals but population has {}",
                record.len(),
                pop.len()
            )));
        }
        let t0 = record.first_infectious_time();
        let t_max = record.t_max();
        let infectious = record.infectious_sets();
        if (t0..t_max).all(|t| infectious[t as usize].is_empty()) {
            return Err(Error::NoEpidemic);
        }

        let mut rows = Vec::new();
        for i in 0..record.len() {
            let last = match record.t_inf(i) {
                Some(ti) if ti == t0 => continue,
                Some(ti) => ti - 1,
                None => t_max - 1,
            };
            for t in t0..=last {
                let y = record.t_inf(i) == Some(t + 1);
                if infectious[t as usize].is_empty() {
                    if y {
                        return Err(Error::InfectionWithoutPressure {
                            id: pop.id(i).to_string(),
                            t,
                            t_inf: t + 1,
                        });
                    }
                    continue;
                }
                rows.push((i, t, y));
            }
        }
        Ok(Self { rows, t0, t_max, infectious })
    }

    /// Covariate column for one spatial power.
    pub fn covariates(&self, kernel: &KernelMatrix, transform: Transform, pop: &Population) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .map(|&(i, t, _)| {
                let raw = kernel.pressure(i, &self.infectious[t as usize]);
                transform.apply(raw).ok_or_else(|| Error::Domain {
                    context: format!("individual `{}` at t={t}", pop.id(i)),
                    raw,
                })
            })
            .collect()
    }

    pub fn to_table(&self, pop: &Population, kernel: &KernelMatrix, transform: Transform) -> Result<BinaryTable> {
        let xs = self.covariates(kernel, transform, pop)?;
        let rows = self
            .rows
            .iter()
            .zip(xs)
            .map(|(&(i, t, y), x)| BinaryRow { id: pop.id(i).to_string(), t, y, x })
            .collect();
        Ok(BinaryTable {
            rows,
            meta: TableMeta { beta0: kernel.power(), transform, t0: self.t0, t_max: self.t_max },
        })
    }
}

/// Converts an epidemic record into the binary table for spatial power `beta0`.
pub fn convert(record: &EpidemicRecord, pop: &Population, beta0: f64, transform: Transform) -> Result<BinaryTable> {
    let index = RowIndex::new(record, pop)?;
    let kernel = pop.distance_matrix().kernel(beta0);
    index.to_table(pop, &kernel, transform)
}

//! Individuals with planar coordinates and the pairwise distances between them.

use std::collections::{HashMap, HashSet};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// One member of the population.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

/// Immutable roster of individuals.
///
/// Construction guarantees at least two members, distinct ids and distinct
/// coordinates, so every off-diagonal distance is strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    individuals: Vec<Individual>,
    index: HashMap<String, usize>,
}

impl Population {
    pub fn new(individuals: Vec<Individual>) -> Result<Self> {
        if individuals.len() < 2 {
            return Err(Error::Validation(format!(
                "a population needs at least 2 individuals, got {}",
                individuals.len()
            )));
        }
        let mut index = HashMap::with_capacity(individuals.len());
        let mut coords: HashMap<(u64, u64), usize> = HashMap::with_capacity(individuals.len());
        for (k, ind) in individuals.iter().enumerate() {
            if !ind.x.is_finite() || !ind.y.is_finite() {
                return Err(Error::Validation(format!(
                    "individual `{}` has non-finite coordinates",
                    ind.id
                )));
            }
            if index.insert(ind.id.clone(), k).is_some() {
                return Err(Error::Validation(format!("duplicate id `{}`", ind.id)));
            }
            // +0.0 and -0.0 are the same location
            let key = ((ind.x + 0.0).to_bits(), (ind.y + 0.0).to_bits());
            if let Some(&other) = coords.get(&key) {
                return Err(Error::DuplicateCoordinates(
                    individuals[other].id.clone(),
                    ind.id.clone(),
                ));
            }
            coords.insert(key, k);
        }
        Ok(Self { individuals, index })
    }

    /// Builds a population with ids `1..=n` from coordinate pairs.
    pub fn from_coords(coords: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            coords
                .iter()
                .enumerate()
                .map(|(k, &(x, y))| Individual { id: (k + 1).to_string(), x, y })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn get(&self, k: usize) -> &Individual {
        &self.individuals[k]
    }

    pub fn id(&self, k: usize) -> &str {
        &self.individuals[k].id
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn distance_matrix(&self) -> DistanceMatrix {
        DistanceMatrix::new(self)
    }
}

/// Dense symmetric matrix of Euclidean distances. The diagonal is zero and is
/// never read by the kernels.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(pop: &Population) -> Self {
        let n = pop.len();
        let mut data = vec![0.0; n * n];
        let ind = pop.individuals();
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (ind[i].x - ind[j].x).hypot(ind[i].y - ind[j].y);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Power-law kernel `d^-power` evaluated for every pair.
    pub fn kernel(&self, power: f64) -> KernelMatrix {
        let data = self
            .data
            .iter()
            .map(|&d| if d > 0.0 { d.powf(-power) } else { 0.0 })
            .collect();
        KernelMatrix { n: self.n, power, data }
    }
}

/// Cached `d_ij^-power` values for one fixed spatial power.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    n: usize,
    power: f64,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub fn power(&self) -> f64 {
        self.power
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// `sum_{j in infectious} d_ij^-power`.
    pub fn pressure(&self, i: usize, infectious: &[usize]) -> f64 {
        let row = self.row(i);
        infectious.iter().map(|&j| row[j]).sum()
    }
}

/// Samples `n` points uniformly on `[0, side]^2`, redrawing exact duplicates.
pub fn sample_population(n: usize, side: f64, seed: u64) -> Result<Population> {
    if n < 2 {
        return Err(Error::Validation(format!(
            "a population needs at least 2 individuals, got {n}"
        )));
    }
    if !(side > 0.0 && side.is_finite()) {
        return Err(Error::Validation(format!("side must be positive, got {side}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut seen = HashSet::with_capacity(n);
    let mut coords = Vec::with_capacity(n);
    while coords.len() < n {
        let x: f64 = rng.random::<f64>() * side;
        let y: f64 = rng.random::<f64>() * side;
        if seen.insert((x.to_bits(), y.to_bits())) {
            coords.push((x, y));
        }
    }
    Population::from_coords(&coords)
}

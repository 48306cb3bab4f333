//! Event histories: when each individual becomes infectious and, under SIR,
//! when it is removed.

use crate::error::{Error, Result};

/// Disease state of one individual at one time point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum State {
    Susceptible,
    Infectious,
    Removed,
}

/// Infection and removal times for every member of a population, indexed in
/// population order.
///
/// Individual `i` is infectious on `[t_inf, t_rem)`; a missing `t_rem` means
/// it stays infectious (SI, or not removed within the record).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpidemicRecord {
    t_inf: Vec<Option<u32>>,
    t_rem: Vec<Option<u32>>,
    t_max: u32,
}

impl EpidemicRecord {
    pub fn new(t_inf: Vec<Option<u32>>, t_rem: Vec<Option<u32>>, t_max: u32) -> Result<Self> {
        if t_inf.len() != t_rem.len() {
            return Err(Error::Validation(format!(
                "{} infection times but {} removal times",
                t_inf.len(),
                t_rem.len()
            )));
        }
        if t_max < 1 {
            return Err(Error::Validation("t_max must be at least 1".into()));
        }
        if t_inf.iter().all(Option::is_none) {
            return Err(Error::Validation("record contains no infected individual".into()));
        }
        for (k, (inf, rem)) in t_inf.iter().zip(&t_rem).enumerate() {
            match (inf, rem) {
                (Some(ti), _) if *ti < 1 || *ti > t_max => {
                    return Err(Error::Validation(format!(
                        "individual {k}: infection time {ti} outside [1, {t_max}]"
                    )))
                }
                (Some(ti), Some(tr)) if tr <= ti => {
                    return Err(Error::Validation(format!(
                        "individual {k}: removal time {tr} not after infection time {ti}"
                    )))
                }
                (None, Some(_)) => {
                    return Err(Error::Validation(format!(
                        "individual {k}: removal time without infection time"
                    )))
                }
                _ => {}
            }
        }
        Ok(Self { t_inf, t_rem, t_max })
    }

    /// SI record with no removals.
    pub fn si(t_inf: Vec<Option<u32>>, t_max: u32) -> Result<Self> {
        let n = t_inf.len();
        Self::new(t_inf, vec![None; n], t_max)
    }

    pub fn len(&self) -> usize {
        self.t_inf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_inf.is_empty()
    }

    pub fn t_max(&self) -> u32 {
        self.t_max
    }

    pub fn t_inf(&self, i: usize) -> Option<u32> {
        self.t_inf[i]
    }

    pub fn t_rem(&self, i: usize) -> Option<u32> {
        self.t_rem[i]
    }

    pub fn infection_times(&self) -> &[Option<u32>] {
        &self.t_inf
    }

    pub fn removal_times(&self) -> &[Option<u32>] {
        &self.t_rem
    }

    pub fn has_removals(&self) -> bool {
        self.t_rem.iter().any(Option::is_some)
    }

    /// First time anybody is infectious.
    pub fn first_infectious_time(&self) -> u32 {
        self.t_inf.iter().flatten().copied().min().expect("validated nonempty")
    }

    /// Individuals infectious at the first infectious time. These are
    /// conditioned on rather than modelled.
    pub fn initial_cases(&self) -> Vec<usize> {
        let t0 = self.first_infectious_time();
        (0..self.len()).filter(|&i| self.t_inf[i] == Some(t0)).collect()
    }

    pub fn state(&self, i: usize, t: u32) -> State {
        match (self.t_inf[i], self.t_rem[i]) {
            (Some(ti), _) if t < ti => State::Susceptible,
            (None, _) => State::Susceptible,
            (Some(_), Some(tr)) if t >= tr => State::Removed,
            _ => State::Infectious,
        }
    }

    pub fn is_susceptible(&self, i: usize, t: u32) -> bool {
        self.t_inf[i].is_none_or(|ti| t < ti)
    }

    pub fn is_infectious(&self, i: usize, t: u32) -> bool {
        self.state(i, t) == State::Infectious
    }

    /// `I(t)` in ascending index order.
    pub fn infectious_at(&self, t: u32) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_infectious(i, t)).collect()
    }

    /// `I(t)` for every `t` in `0..=t_max`; entry 0 is always empty.
    pub fn infectious_sets(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.t_max as usize + 1];
        for i in 0..self.len() {
            if let Some(ti) = self.t_inf[i] {
                let end = self.t_rem[i].map_or(self.t_max + 1, |tr| tr.min(self.t_max + 1));
                for t in ti..end {
                    sets[t as usize].push(i);
                }
            }
        }
        sets
    }

    /// Number of individuals ever infected.
    pub fn n_infected(&self) -> usize {
        self.t_inf.iter().flatten().count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(EpidemicRecord::si(vec![None, None], 3).is_err());
        assert!(EpidemicRecord::si(vec![Some(4), None], 3).is_err());
        assert!(EpidemicRecord::si(vec![Some(0), None], 3).is_err());
        assert!(EpidemicRecord::new(vec![Some(2)], vec![Some(2)], 3).is_err());
        assert!(EpidemicRecord::new(vec![None], vec![Some(2)], 3).is_err());
        assert!(EpidemicRecord::new(vec![Some(2), None], vec![Some(3), None], 3).is_ok());
    }

    #[test]
    fn states_and_sets() {
        let r = EpidemicRecord::new(vec![Some(1), Some(2), None], vec![Some(3), None, None], 4).unwrap();
        assert_eq!(r.first_infectious_time(), 1);
        assert_eq!(r.initial_cases(), vec![0]);
        assert_eq!(r.state(0, 1), State::Infectious);
        assert_eq!(r.state(0, 3), State::Removed);
        assert_eq!(r.state(1, 1), State::Susceptible);
        assert_eq!(r.infectious_at(2), vec![0, 1]);
        assert_eq!(r.infectious_at(3), vec![1]);
        let sets = r.infectious_sets();
        for t in 1..=4 {
            assert_eq!(sets[t as usize], r.infectious_at(t));
        }
        assert_eq!(r.n_infected(), 2);
    }
}

//! The four-individual worked example used throughout the docs and tests.
//!
//! | id | (x, y)     | infectious at |
//! |----|------------|---------------|
//! | 1  | (2.6, 1.5) | 5             |
//! | 2  | (3.7, 6.8) | 4             |
//! | 3  | (5.7, 6.5) | 2             |
//! | 4  | (5.9, 6.3) | 3             |

use crate::population::Population;
use crate::record::EpidemicRecord;

pub const COORDS: [(f64, f64); 4] = [(2.6, 1.5), (3.7, 6.8), (5.7, 6.5), (5.9, 6.3)];
pub const INFECTIOUS_AT: [u32; 4] = [5, 4, 2, 3];

/// Population and SI record of the worked example (`t_max = 5`).
pub fn toy() -> (Population, EpidemicRecord) {
    let pop = Population::from_coords(&COORDS).expect("distinct coordinates");
    let record = EpidemicRecord::si(INFECTIOUS_AT.iter().map(|&t| Some(t)).collect(), 5).expect("valid record");
    (pop, record)
}

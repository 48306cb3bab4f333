//! Spatial individual-level epidemic models (ILMs) and their conditional
//! logistic approximation.
//!
//! The crate covers the whole workflow: simulate SI/SIR epidemics from the
//! spatial ILM ([`simulate()`]), turn the event history into a binary table
//! ([`convert`]), pick the spatial power by profile likelihood
//! ([`fit::tune_beta0`]), fit either model by IRLS or adaptive Metropolis,
//! and compare posterior predictive epidemic curves ([`ppc::run_ppc`]).
//!
//! ```
//! use clilm::{convert, toy::toy, Transform};
//!
//! let (pop, record) = toy();
//! let table = convert(&record, &pop, 4.0, Transform::Identity).unwrap();
//! assert_eq!(table.len(), 6);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binary;
pub mod error;
pub mod fit;
pub mod io;
pub mod likelihood;
pub mod model;
pub mod population;
pub mod ppc;
pub mod record;
pub mod rng;
pub mod simulate;
pub mod toy;

pub use binary::{convert, BinaryRow, BinaryTable, RowIndex, TableMeta};
pub use error::{Error, Result};
pub use likelihood::{
    clilm_score, conditional_log_likelihood, ilm_log_likelihood, round_trip_check, table_log_likelihood,
    IlmLikelihood, LogLik,
};
pub use model::{
    clilm_infection_prob, ilm_infection_prob, spatial_covariate, ClilmParams, Compartments, Framework, IlmParams,
    Transform,
};
pub use population::{sample_population, DistanceMatrix, Individual, KernelMatrix, Population};
pub use record::{EpidemicRecord, State};
pub use simulate::{simulate, SimConfig};

// The guide's code blocks run as doctests, keeping the book and the API in step.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/conversion.md")]
    mod conversion {}
    #[doc = include_str!("../../../book/src/likelihood.md")]
    mod likelihood {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/ppc.md")]
    mod ppc {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

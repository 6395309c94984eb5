pub mod aggregation;
pub mod analysis;
pub mod coarse;
pub mod error;
pub mod experiment;
pub mod ingestion;
pub mod krylov;
pub mod modification;
pub mod solvers;
pub mod sparse;

pub use error::{Error, Result};

pub mod cli;
pub mod data;
pub mod embedding;
pub mod error;
pub mod graph;
pub mod recommend;
pub mod recurrence;
pub mod rng;
pub mod similarity;
pub mod viz;

pub use error::{Error, Result};

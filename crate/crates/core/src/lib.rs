pub mod analysis;
pub mod cli;
pub mod cmc;
pub mod covariance;
pub mod error;
pub mod filter;
pub mod io;
pub mod numerics;
pub mod report;
pub mod schmidt;
pub mod state;
pub mod verdict;
pub mod zoo;

pub use error::{Error, Result};

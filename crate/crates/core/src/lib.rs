//! Mean-square consensusability analysis for multi-agent systems over
//! lossy channels.

pub mod channel;
pub mod criteria;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod lmi;
pub mod mjls;
pub mod report;
pub mod riccati;
pub mod rng;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};

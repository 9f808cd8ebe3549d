//! Joint offloading and resource allocation for multi-server MEC networks.

pub mod association;
pub mod baselines;
pub mod compute;
pub mod error;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod power;
pub mod scenario;
pub mod solver;
pub mod subchannel;

pub use error::{Error, Result};

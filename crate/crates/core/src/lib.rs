//! System-level O-RAN downlink simulator with bandit-driven mobility load
//! balancing and resource allocation.

pub mod bandit;
pub mod channel;
pub mod error;
pub mod handover;
pub mod load;
pub mod mobility;
pub mod rng;
pub mod schemes;
pub mod sim;
pub mod topology;

pub use error::{Result, SimError};

//! Simulator and library for in-network message dropping of real-time
//! streams over variable-bandwidth cellular links.

pub mod apps;
pub mod cli;
pub mod config;
pub mod dropqueue;
pub mod header;
pub mod metrics;
pub mod netsim;
pub mod trace;
pub mod transport;
pub mod types;

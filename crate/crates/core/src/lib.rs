//! Hybrid analog/digital beamforming and combining for K-pair full-duplex
//! mmWave massive-MIMO interference channels, optimized by
//! minorization-maximization of the weighted sum rate.

pub mod benchmarks;
pub mod channel;
pub mod config;
pub mod covariance;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod optimizer;

pub use benchmarks::{run_fully_digital_fd, run_fully_digital_hd, run_scheme, SchemeTag};
pub use channel::ChannelSet;
pub use config::{load_config, parse_config, SystemConfig};
pub use error::{Error, Result};
pub use optimizer::{run_hybf, SolverOptions, TrialResult};

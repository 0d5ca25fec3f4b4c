//! Sparse mmWave MIMO channels: optimal (dominant singular vector) versus
//! directional beamforming, two-path closed forms, and Monte Carlo SNR-loss
//! statistics.

pub mod beamformer;
pub mod channel;
pub mod cli;
pub mod closedform;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod montecarlo;
pub mod steering;
pub mod verify;

pub use beamformer::{
    bidirectional_beamformer, dominant_path_beamformer, equal_power_beamformer,
    grid_search_beamformer, matched_filter, optimal_beamformer, received_snr,
    reduced_optimal_beamformer, BeamformerPair, GridSpec, SnrReport,
};
pub use channel::{assemble_channel, ChannelMatrix, PathComponent};
pub use error::{Error, Result};
pub use exec::Execution;
pub use steering::{steering_vector, AngleSpec, ArrayGeometry, SteeringVector};

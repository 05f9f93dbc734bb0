//! Obstruction-feature extraction and compact dense-network regression for
//! radio link path loss.
//!
//! The crate turns surface and terrain profiles of point-to-point links into
//! eight scalar obstruction features, trains a small fully connected network
//! on measured (or synthesized) path loss, and reproduces the holdout and
//! ablation protocols used to validate such models:
//!
//! * [`profile`]: path profiles, Earth-curvature correction, clearance.
//! * [`features`]: block detection and the F1-F8 feature vector.
//! * [`dataset`]: sample I/O, filtering, splitting, normalization, synthesis.
//! * [`nn`]: the dense network, its training loop, persistence.
//! * [`metrics`]: error metrics, binned error analysis, hexagonal binning.
//! * [`experiments`]: holdout scenarios, ablation and repeatability studies.
//!
//! All randomness flows through explicitly seeded generators; every command
//! and experiment is bit-reproducible given the same seed.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod features;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod profile;
pub mod seeds;

pub use error::{Error, Result};
pub use features::{
    detect_blocks, extract_features, oracle_block_count, oracle_total_depth, select_config, Block,
    FeatureConfig, FeatureVector,
};
pub use profile::{clearance_profile, curvature_drop, ClearanceProfile, PathProfile,
    MEAN_EARTH_RADIUS_M};

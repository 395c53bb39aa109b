//! Core numerics for pricing deals from a few dozen examples: deal records and
//! a synthetic generator, group-aware splitting, a regularized gradient-boosted
//! tree regressor, a ridge baseline with a cross-validation harness,
//! sensitivity sweeps, and the JSON schema contracts shared by the agents.

pub mod dataset;
pub mod presets;
pub mod gbdt;
pub mod metrics;
pub mod report;
pub mod schema;
pub mod sensitivity;
pub mod splits;

pub use dataset::{
    encode_features, Dataset, DealRecord, FeatureVector, RawFeature, RawFeatures,
    TechStack,
};
pub use gbdt::{GbdtModel, Hyperparameters};

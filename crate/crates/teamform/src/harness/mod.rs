//! Experiment orchestration: configuration, the experiment operations, and
//! reproducible CSV/manifest output.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::ExperimentConfig;
pub use experiments::{
    bot_comparison, nash_shapley_correlation, shapley_correspondence, shapley_regression,
    spatial_perturbation, ComparisonResult, CorrespondencePair, CorrespondenceReport, EnvKind,
    NashCorrReport, PerturbationReport, RegressionReport,
};

//! Multi-device interruptibility and social-role modeling pipeline.
//!
//! The crate turns raw phone/desktop event logs and experience-sampling (ESM)
//! answers into labeled 15-minute windows, featurizes them (application
//! sequences as CV/TF/TF-IDF sparse matrices plus dense spatio-temporal
//! features), trains classical classifiers, and evaluates a two-stage
//! role-then-interruptibility model with per-participant cross-validation and
//! paired statistics. A persona-based synthetic generator produces full
//! datasets for experiments and tests.
//!
//! Modules mirror the pipeline stages:
//!
//! - [`events`]: canonical event/label data model, log parsing and merging
//! - [`scheduler`]: ESM prompt scheduling simulation and constraint auditing
//! - [`sessionize`]: labeled 15-minute windows with cleaned app sequences
//! - [`features`]: sparse sequence features, pluscodes, dense features
//! - [`learners`]: baseline, tree, forest, KNN, logistic, ridge, AdaBoost
//! - [`pipeline`]: binary encodings, two-stage model, k-fold, F1, statistics
//! - [`synthgen`]: persona-driven synthetic event and label generation
//! - [`experiment`]: experiment configs, reproducible runs, report comparison

pub mod events;
pub mod experiment;
pub mod features;
pub mod learners;
pub mod pipeline;
pub mod scheduler;
pub mod sessionize;
pub mod synthgen;

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

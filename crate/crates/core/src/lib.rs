//! One-shot gesture learning toolkit.
//!
//! From a single recorded example per gesture class this crate extracts a
//! compact "gist" of salient placeholders, synthesizes an artificial
//! training set from it, trains four sequence classifiers (HMM, SVM, CRF,
//! DTW), simulates robot enactment with a marker-tracking camera pipeline,
//! and scores recognizers against each other or against human raters with
//! accuracy, agreement index and coherency.
//!
//! Module map:
//!
//! * [`types`], [`preprocess`], [`gist`], [`msrc12`], [`dataset`]: domain
//!   types, ingestion and the gist extraction function.
//! * [`synthesis`]: artificial sample generation by minimum-jerk
//!   reconstruction through perturbed placeholders.
//! * [`classifiers`]: feature encoding and the four classifiers behind one
//!   train/classify contract.
//! * [`metrics`]: confusion matrices, accuracy, agreement index, coherency.
//! * [`enactment`]: workspace mapping, actuator filtering, RGB-D rendering
//!   and blob-based re-extraction.
//! * [`experiment`]: config-driven end-to-end runs.

pub mod classifiers;
pub mod dataset;
pub mod enactment;
mod error;
pub mod experiment;
pub mod fixture;
pub mod gist;
pub mod metrics;
pub mod msrc12;
pub mod preprocess;
pub mod rng;
pub mod synthesis;
pub mod types;

pub use error::{Error, Result};
pub use gist::{extract_gist, GestureGist, GistParams, Placeholder};
pub use preprocess::{normalize, resample, NormalizationTransform};
pub use types::{GestureLabel, LabeledInstance, Lexicon, Point3, Trajectory};

//! Rank objects from the partial preferences revealed by ranked application
//! lists.
//!
//! The pipeline has three layers:
//!
//! 1. [`prefmodel`] turns each applicant's ranked list into a partial
//!    preference relation and aggregates all applicants into a preference
//!    matrix under an unweighted, weighted, or moderately weighted scheme,
//!    each optionally split by tuition financing ("adjusted").
//! 2. [`graphcore`] and [`scoring`] derive the results/matches matrices and
//!    the graph Laplacian from a preference matrix and compute row-sum,
//!    normalized row-sum, and least-squares scores, broken into strict
//!    rankings with a deterministic tie-break.
//! 3. [`metrics`] and [`axiomlab`] evaluate rankings: contradictory
//!    preference counts, Kendall rank correlation, and executable checks of
//!    four axiomatic properties (size invariance, bridge-set independence,
//!    bridge-set autonomy, bridge-player independence).
//!
//! [`ingest`], [`matrixio`], and [`pipeline`] provide the file formats and
//! the end-to-end orchestration used by the `prefrank` binary.
//!
//! Matrix entries are exact rationals by default and degrade to `f64` only
//! past a configurable denominator bound, so the small worked examples in the
//! test suite reproduce bit-exactly.
//!
//! With the `parallel` feature (default), aggregation, axiom trials, and
//! per-component solves use rayon; every parallel entry point has a
//! `*_sequential` twin that is always available.

pub mod axiomlab;
pub mod graphcore;
pub mod ingest;
pub mod matrixio;
pub mod metrics;
pub mod pipeline;
pub mod prefmodel;
pub mod scoring;
pub mod value;

pub use graphcore::{ComponentPartition, DerivedMatrices, RankingProblem};
pub use prefmodel::{
    ApplicationRecord, Granularity, ObjectKey, StudentPreferenceList, WeightingScheme,
};
pub use scoring::{Method, RankingTable, ScoreVector};
pub use value::Value;

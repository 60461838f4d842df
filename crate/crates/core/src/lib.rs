//! Univariate skeleton prediction for multivariate symbolic regression.
//!
//! The pipeline: a black-box multivariate system is sampled and fitted with a
//! feed-forward regressor; for each input variable, the regressor is probed
//! along that variable at several fixed settings of the others, producing a
//! collection of univariate (x, y) sets that share one functional form; a
//! set-attention encoder plus autoregressive decoder predicts that common
//! *skeleton* (constants abstracted to placeholders); and a GA-based
//! evaluator scores predicted skeletons against ground truth by fitting
//! their constants.
//!
//! Modules:
//! - [`expr`]: expression trees, prefix (de)serialization, evaluation,
//!   simplification, skeletons.
//! - [`gen`]: random expression generation under grammar constraints and
//!   skeleton corpus construction.
//! - [`data`]: sampling of concrete functions and support sets, domain
//!   repair, training-record synthesis.
//! - [`mlp`]: the multivariate feed-forward regressor.
//! - [`mst`]: the multi-set encoder/decoder skeleton predictor.
//! - [`ga`]: constant fitting and skeleton-distance evaluation.
//! - [`bench`]: the E1-E13 benchmark registry, end-to-end pipeline, and
//!   reporting.

pub mod bench;
pub mod config;
pub mod data;
pub mod expr;
pub mod ga;
pub mod gen;
pub mod mlp;
pub mod mst;

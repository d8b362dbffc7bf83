//! Cellular grid-traffic analysis toolkit.
//!
//! Turns time-stamped per-cell activity records into spatial graphs and runs
//! three hand-rolled graph-neural-network pipelines on top of them:
//!
//! - node embedding (Laplacian eigenmaps and forward-only GCN stacks),
//! - semi-supervised high-demand classification (two-layer GCN, dropout,
//!   softmax head, masked cross-entropy),
//! - sliding-window spatio-temporal forecasting (temporal conv / graph conv /
//!   temporal conv sandwich) with memory- and horizon-sweep experiments.
//!
//! All numerics are written from scratch over a generic scalar type (see
//! [`scalar::Scalar`]); `f64` is the default precision and what the CLI uses.
//! Every randomized operation is a pure function of an explicit seed.

pub mod bytes;
pub mod classify;
pub mod eigen;
pub mod embedding;
pub mod error;
pub mod forecast;
pub mod graph;
pub mod ingest;
pub mod nn;
pub mod rng;
pub mod scalar;
pub mod sparse;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default-precision aliases. The CLI and the committed fixtures use these.
pub type Tensor64 = tensor::Tensor<f64>;
pub type SparseMatrix64 = sparse::SparseMatrix<f64>;
pub type Graph64 = graph::Graph<f64>;
pub type PropagationMatrix64 = graph::PropagationMatrix<f64>;
pub type Snapshot64 = ingest::Snapshot<f64>;
pub type SnapshotSeries64 = ingest::SnapshotSeries<f64>;
pub type ClassifierModel64 = classify::ClassifierModel<f64>;
pub type ForecastModel64 = forecast::ForecastModel<f64>;
pub type MetricsReport64 = forecast::MetricsReport<f64>;
pub type EmbeddingResult64 = embedding::EmbeddingResult<f64>;

/// Single-precision aliases, mainly exercised by the generic-scalar tests.
pub type Tensor32 = tensor::Tensor<f32>;
pub type Graph32 = graph::Graph<f32>;

//! Analytics engine for lung-cancer risk data: CSV ingestion of patient and
//! environmental tables, feature statistics (correlation, information gain,
//! t/p-values, Spearman), and from-scratch classifiers (CART, random forest,
//! PCA + linear SVM, K-means) with deterministic, seedable training.
//!
//! Everything is pure and in-memory; file layout and orchestration live in
//! the CLI crate.

pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod linalg;
pub mod ml;
pub mod rng;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use eval::{ConfusionMatrix, EvaluatedOn, MetricsReport};
pub use features::{FeatureMatrix, RiskLevel, YearJoinedSeries};
pub use ingest::{
    ForestStatus, ImputeStrategy, LoadReport, PatientRecord, PatientTable, TreeCoverLoss,
    YearlyIncidence,
};
pub use linalg::Matrix;
pub use ml::{
    ForestModel, ForestParams, KMeansModel, PcaModel, SplitResult, SvmModel, SvmParams, TreeModel,
    TreeParams,
};
pub use stats::{CorrelationMatrix, FeatureScore};

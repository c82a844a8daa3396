//! From-scratch classifiers, data splitting, grid search and metrics.

pub mod data;
pub mod forest;
pub mod grid;
pub mod knn;
pub mod metrics;
pub mod model;
pub mod scale;
pub mod split;
pub mod svm;
pub mod tree;

pub use data::{LabeledData, Matrix};
pub use grid::{grid_search, GridResult, HyperGrid};
pub use metrics::{ConfusionMatrix, EvalReport};
pub use model::{Algorithm, Params, TrainedClassifier};

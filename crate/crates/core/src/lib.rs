//! Multivariate time-series alignment and similarity assessment.
//!
//! Instances of a dataset are aligned to a query by circular rotation
//! (cross-correlation or the DFT shifting theorem), compared per variable,
//! min-max normalized, weighted and combined into a similarity index in
//! `[0, 1]`, optionally filtered by threshold or top-k.
//!
//! ```
//! use mtasa_core::model::*;
//! use mtasa_core::engine::run_pipeline;
//!
//! let vars = vec!["x".to_string()];
//! let query = QuerySequence::new(vec![0.0, 1.0, 4.0, 2.0], 4, vars.clone()).unwrap();
//! // Second instance is the query shifted right by one step.
//! let dataset = TimeSeriesDataset::new(
//!     vec![5.0, 5.0, 0.0, 5.0, 2.0, 0.0, 1.0, 4.0],
//!     4,
//!     vec!["far".into(), "shifted".into()],
//!     vars.clone(),
//! )
//! .unwrap();
//! let config = AssessmentConfig::new(
//!     vars,
//!     WeightVector::uniform(1),
//!     AnalysisPeriod::full(4),
//!     RotationVariableSet::new(vec![0]).unwrap(),
//! );
//! let result = run_pipeline(&dataset, &query, &config).unwrap();
//! assert_eq!(result.index.rotation_array[1], Some(1));
//! assert_eq!(result.index.similarity_array[1], SimilarityEntry::Value(1.0));
//! ```

pub mod alignment;
pub mod cli;
pub mod dissimilarity;
pub mod engine;
pub mod error;
pub mod io;
pub mod model;
pub mod simindex;
pub mod spectral;

pub use engine::{run_pipeline, Assessment};
pub use error::ValidationError;

//! Approximate nearest-neighbor search with random binary partition forests.
//!
//! A forest holds `L` independent trees. Every internal node splits its
//! points with a random hyperplane over `K` coordinates, placing the
//! threshold between two order statistics so each side keeps at least a
//! fraction `r` of the points; leaves hold at most `C` point ids. A query
//! descends each tree to one leaf, and only the union of those leaves is
//! scored against it.
//!
//! ```
//! use rpforest::{Dataset32, Forest32, ForestParams, Metric, search};
//!
//! let rows: Vec<[f32; 2]> = (0..200).map(|i| [i as f32, (i * 7 % 13) as f32]).collect();
//! let forest = Forest32::build(Dataset32::from_rows(rows.clone()).unwrap(), ForestParams::new(8).with_seed(1)).unwrap();
//! let hit = search::knn(&forest, &rows[42], 3, Metric::Euclidean).unwrap();
//! assert_eq!(hit.neighbors[0].id, 42);
//! assert_eq!(hit.neighbors[0].distance, 0.0);
//! ```
//!
//! Everything is generic over the storage [`Scalar`] (`f32` or `f64`);
//! distances are accumulated in `f64`.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod forest;
pub mod io;
pub mod metric;
pub mod rng;
pub mod scalar;
pub mod search;

pub use dataset::{Dataset, FeatureVector, PointId};
pub use error::{Error, Result};
pub use eval::{EvalRecord, EvalReport, EvalSummary, Evaluation, GroundTruth};
pub use forest::{Forest, ForestParams, ForestView, PartitionTree, Side, SplitTest};
pub use metric::{normalize_unit, Metric};
pub use scalar::Scalar;
pub use search::{boost_estimate, exact_knn, exact_knn_batch, knn, Neighbor, QueryResult, Searcher};

pub type Dataset32 = Dataset<f32>;
pub type Dataset64 = Dataset<f64>;
pub type Forest32 = Forest<f32>;
pub type Forest64 = Forest<f64>;
pub type FeatureVector32 = FeatureVector<f32>;
pub type FeatureVector64 = FeatureVector<f64>;
pub type SplitTest32 = SplitTest<f32>;
pub type SplitTest64 = SplitTest<f64>;

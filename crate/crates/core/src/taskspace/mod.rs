//! Occupation-level task measures.

pub mod collinear;
pub mod composite;
pub mod kmeans;
pub mod percentile;
pub mod table;
pub mod text;

pub use collinear::{collinearity_determinant, correlation_determinant};
pub use composite::{composites, median_split, min_max, standardize, Composites};
pub use kmeans::{adjusted_rand_index, elbow, kmeans, ClusterModel, ElbowScan, KMeansConfig};
pub use percentile::{percentile_table, weighted_percentiles};
pub use table::{OccupationRow, OccupationTaskTable, Task};
pub use text::{text_task_rates, DictionarySizes, TextDictionary, TextRates};

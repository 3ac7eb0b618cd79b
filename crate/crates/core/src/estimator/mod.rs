//! Fixed-effects linear probability models with cluster-robust inference.

pub mod analysis;
pub mod credentials;
pub mod gaps;
pub mod inference;
pub mod interference;
pub mod mechanism;
pub mod model;
pub mod ols;
pub mod report;
pub mod within;

pub use analysis::{Analysis, AnalysisOutput, AnalysisRegistry};
pub use credentials::{credential_attenuation, CredentialTable};
pub use gaps::{gap_table, gap_table_with, GapTable};
pub use inference::{LincomResult, WaldResult};
pub use interference::{interference_check, InterferenceReport};
pub use mechanism::{bp_decomposition, contact_split, BpDecomposition, ContactSubsample};
pub use model::{ClusterBy, Composite, FixedEffects, Grouping, RegressionSpec};
pub use ols::{fit, Design, FitResult, INTERCEPT};
pub use report::{write_rows, ResultRow};
pub use within::{within_transform, WithinInfo};

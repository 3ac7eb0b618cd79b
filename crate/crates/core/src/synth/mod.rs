//! Synthetic correspondence audits.

pub mod attributes;
pub mod balance;
pub mod catalog;
pub mod config;
pub mod dataset;
pub mod dgp;
pub mod generate;
pub mod icc;
pub mod reduced;
pub mod structural;

pub use attributes::{Computer, Credential, Gpa, Internship, MajorGroup, Minor, ResumeAttributes};
pub use balance::{balance_check, balance_matrix, BalanceReport};
pub use catalog::{OccupationCatalog, OccupationInfo};
pub use config::DesignConfig;
pub use dataset::{AdComposites, Application, AuditDataset, JobAd};
pub use dgp::{CallbackDgp, DgpRegistry, DgpReport};
pub use generate::generate_dataset;
pub use icc::{anova_icc, anova_icc_balanced};
pub use reduced::{ReducedFormConfig, ReducedFormDgp};
pub use structural::StructuralDgp;

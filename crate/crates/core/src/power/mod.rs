//! Sample-size arithmetic and Monte Carlo power.

pub mod analytic;
pub mod scenario;

pub use analytic::{adjusted_n, analytic_power_two_prop, design_effect, required_n_two_prop};
pub use scenario::{
    audit_scenario, mc_power, AuditScenario, ClusterTwoArm, PowerReport, PowerScenario, ScenarioRegistry,
};

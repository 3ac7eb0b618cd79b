//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use taskgap_core::estimator::AnalysisRegistry;
use taskgap_core::power::ScenarioRegistry;
use taskgap_core::synth::{DesignConfig, DgpRegistry};
use taskgap_core::theory::verify::VerifyConfig;
use taskgap_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub master_seed: u64,
    pub design: DesignConfig,
    pub occupations: OccupationSource,
    pub dgp: StrategyBlock,
    pub clustering: ClusteringConfig,
    pub analyses: Vec<StrategyBlock>,
    pub power: PowerConfig,
    pub verify: VerifyConfig,
    pub output: Option<PathBuf>,
}

/// A registry entry chosen by name with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyBlock {
    pub name: String,
    #[serde(default)]
    pub params: Value,
}

impl StrategyBlock {
    pub fn new(name: &str, params: Value) -> Self {
        StrategyBlock {
            name: name.into(),
            params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "source")]
pub enum OccupationSource {
    /// task profiles drawn around four default cluster centroids
    Synthetic { n: usize },
    /// occupation task table CSV (occupation_id,a,p,r,m,phy,k,weight)
    Csv { path: PathBuf },
}

impl Default for OccupationSource {
    fn default() -> Self {
        OccupationSource::Synthetic { n: 175 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusteringConfig {
    pub k: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            k: 4,
            k_min: 1,
            k_max: 10,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerConfig {
    pub scenario: StrategyBlock,
    pub replications: usize,
    pub alpha: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            scenario: StrategyBlock::new("audit", Value::Null),
            replications: 500,
            alpha: 0.05,
        }
    }
}

/// Callback gaps by major occupation group used to seed the default run.
pub fn default_dgp_params() -> Value {
    json!({
        "baseline": 0.150,
        "icc": 0.30,
        "gaps": {"WW": -0.004, "BW": -0.014, "HW": 0.004, "BM": -0.021, "HM": -0.006},
        "major_group_gaps": {
            "management": {"WW": -0.029, "BW": -0.032, "HW": -0.026, "BM": -0.030, "HM": -0.034},
            "business":   {"WW": -0.002, "BW": 0.017, "HW": -0.006, "BM": 0.012, "HM": -0.009},
            "sales":      {"WW": -0.005, "BW": -0.002, "HW": 0.005, "BM": -0.002, "HM": 0.012},
            "office":     {"WW": 0.009, "BW": -0.008, "HW": -0.002, "BM": 0.004, "HM": -0.002}
        },
        "discretion_gradient": -0.006
    })
}

pub fn default_analyses() -> Vec<StrategyBlock> {
    vec![
        StrategyBlock::new("gap_table", json!({"grouping": "major_group"})),
        StrategyBlock::new("gap_table", json!({"grouping": "cluster"})),
        StrategyBlock::new("bp_decomposition", Value::Null),
        StrategyBlock::new("credential_attenuation", Value::Null),
        StrategyBlock::new("interference_check", Value::Null),
    ]
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            master_seed: 20_240_917,
            design: DesignConfig::default(),
            occupations: OccupationSource::default(),
            dgp: StrategyBlock::new("reduced", default_dgp_params()),
            clustering: ClusteringConfig::default(),
            analyses: default_analyses(),
            power: PowerConfig::default(),
            verify: VerifyConfig::default(),
            output: None,
        }
    }
}

impl RunConfig {
    /// Small configuration for smoke runs: 500 ads and 100 power replications
    /// on a 500-ad audit.
    pub fn demo() -> Self {
        let mut c = RunConfig::default();
        c.design.n_ads = 500;
        c.power.replications = 100;
        c.power.scenario = StrategyBlock::new("audit", json!({"design": {"n_ads": 500}}));
        c.verify.mc_draws = 200_000;
        c
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::config(json_path(&e), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check every block, including that named strategies exist and accept
    /// their parameters.
    pub fn validate(&self) -> Result<()> {
        self.design.validate()?;
        if let OccupationSource::Synthetic { n } = self.occupations {
            if n < self.clustering.k.max(4) {
                return Err(Error::config("occupations.n", "too few occupations for the clustering"));
            }
        }
        let c = &self.clustering;
        if c.k == 0 || c.k > u8::MAX as usize || c.k_min == 0 || c.k_min > c.k_max || c.restarts == 0 {
            return Err(Error::config("clustering", "need 1 <= k_min <= k_max, 1 <= k <= 255, restarts >= 1"));
        }
        DgpRegistry::default().build(&self.dgp.name, &self.dgp.params)?;
        let analyses = AnalysisRegistry::default();
        for (i, a) in self.analyses.iter().enumerate() {
            analyses
                .build(&a.name, &a.params)
                .map_err(|e| Error::config(format!("analyses[{i}]"), e.to_string()))?;
        }
        if self.power.replications < 100 {
            return Err(Error::config("power.replications", "must be at least 100"));
        }
        if !(self.power.alpha > 0.0 && self.power.alpha < 1.0) {
            return Err(Error::config("power.alpha", "must lie in (0, 1)"));
        }
        ScenarioRegistry::default().build(&self.power.scenario.name, &self.power.scenario.params)?;
        if self.verify.mc_points == 0 || self.verify.mc_draws < 1000 || self.verify.gradient_points == 0 {
            return Err(Error::config("verify", "need mc_points >= 1, mc_draws >= 1000, gradient_points >= 1"));
        }
        Ok(())
    }
}

/// Best-effort location of a serde_json error as "line L column C".
fn json_path(e: &serde_json::Error) -> String {
    format!("config (line {} column {})", e.line(), e.column())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
        RunConfig::demo().validate().unwrap();
    }

    #[test]
    fn bad_values_name_their_path() {
        let e = RunConfig::from_json(r#"{"design": {"computer_probs": [0.5, 0.5, 0.5, 0.0, 0.0]}}"#).unwrap_err();
        assert!(e.to_string().contains("design.computer_probs"), "{e}");
        let e = RunConfig::from_json(r#"{"dgp": {"name": "probit"}}"#).unwrap_err();
        assert_eq!(e.kind(), "unknown_strategy");
        let e = RunConfig::from_json(r#"{"power": {"replications": 10}}"#).unwrap_err();
        assert!(e.to_string().contains("power.replications"));
        let e = RunConfig::from_json(r#"{"desing": {}}"#).unwrap_err();
        assert_eq!(e.kind(), "config");
    }
}

//! Callback data-generating processes behind a name-keyed registry.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::dataset::AuditDataset;
use super::reduced::{ReducedFormConfig, ReducedFormDgp};
use super::structural::StructuralDgp;
use crate::error::{Error, Result};
use crate::theory::ModelParams;

/// Diagnostics returned by a simulation run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DgpReport {
    pub dgp: String,
    pub clamp_events: usize,
    pub clamp_rate: f64,
    pub icc_target: Option<f64>,
    /// calibrated variance of the ad effect
    pub ad_effect_variance: Option<f64>,
    /// ANOVA ICC implied by the calibrated variance on this dataset
    pub expected_icc: Option<f64>,
    /// Beta shape parameters of the ad effect
    pub beta_shape: Option<(f64, f64)>,
    /// support of the ad effect
    pub ad_effect_bounds: Option<(f64, f64)>,
    pub warnings: Vec<String>,
}

pub trait CallbackDgp: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Fill in callbacks for every application of `dataset`.
    fn simulate(&self, dataset: &mut AuditDataset, seed: u64) -> Result<DgpReport>;
}

pub type DgpFactory = fn(&serde_json::Value) -> Result<Box<dyn CallbackDgp>>;

pub(crate) fn parse<T: serde::de::DeserializeOwned>(path: &str, params: &serde_json::Value) -> Result<T> {
    let value = if params.is_null() {
        serde_json::Value::Object(Default::default())
    } else {
        params.clone()
    };
    serde_json::from_value(value).map_err(|e| Error::config(path, e.to_string()))
}

fn structural_factory(params: &serde_json::Value) -> Result<Box<dyn CallbackDgp>> {
    let p: ModelParams = parse("dgp.params", params)?;
    Ok(Box::new(StructuralDgp::new(p)?))
}

fn reduced_factory(params: &serde_json::Value) -> Result<Box<dyn CallbackDgp>> {
    let c: ReducedFormConfig = parse("dgp.params", params)?;
    Ok(Box::new(ReducedFormDgp::new(c)?))
}

#[derive(Clone)]
pub struct DgpRegistry {
    factories: BTreeMap<&'static str, DgpFactory>,
}

impl fmt::Debug for DgpRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

impl Default for DgpRegistry {
    fn default() -> Self {
        let mut r = DgpRegistry::empty();
        r.register("structural", structural_factory);
        r.register("reduced", reduced_factory);
        r
    }
}

impl DgpRegistry {
    pub fn empty() -> Self {
        DgpRegistry {
            factories: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, factory: DgpFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, name: &str, params: &serde_json::Value) -> Result<Box<dyn CallbackDgp>> {
        let factory = self.factories.get(name).ok_or_else(|| Error::UnknownStrategy {
            registry: "dgp",
            name: name.to_string(),
            known: self.names().join(", "),
        })?;
        factory(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_builtins_and_rejects_unknown() {
        let reg = DgpRegistry::default();
        assert_eq!(reg.names(), vec!["reduced", "structural"]);
        assert_eq!(reg.build("structural", &serde_json::Value::Null).unwrap().name(), "structural");
        let reduced = reg.build("reduced", &serde_json::json!({"baseline": 0.2})).unwrap();
        assert_eq!(reduced.name(), "reduced");
        let err = reg.build("logit", &serde_json::Value::Null).unwrap_err();
        assert_eq!(err.kind(), "unknown_strategy");
        let err = reg.build("reduced", &serde_json::json!({"basline": 0.2})).unwrap_err();
        assert!(err.to_string().contains("dgp.params"));
    }
}

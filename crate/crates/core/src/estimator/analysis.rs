//! Name-keyed registry of the analyses run on a simulated audit.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::credentials::credential_attenuation;
use super::gaps::gap_table_with;
use super::interference::interference_check;
use super::mechanism::{bp_decomposition, bp_text, ContactSubsample};
use super::model::{ClusterBy, FixedEffects, Grouping};
use super::report::ResultRow;
use crate::error::{Error, Result};
use crate::synth::dgp::parse;
use crate::synth::{AuditDataset, Credential};

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisOutput {
    /// file stem for this output
    pub name: String,
    pub rows: Vec<ResultRow>,
    pub text: String,
}

pub trait Analysis: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    /// Stem used for output files; distinguishes configured variants.
    fn label(&self) -> String {
        self.name().to_string()
    }
    fn run(&self, ds: &AuditDataset) -> Result<AnalysisOutput>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapTableAnalysis {
    pub grouping: Grouping,
    pub fixed_effects: FixedEffects,
    pub cluster: ClusterBy,
}

impl Default for GapTableAnalysis {
    fn default() -> Self {
        GapTableAnalysis {
            grouping: Grouping::MajorGroup,
            fixed_effects: FixedEffects::Ad,
            cluster: ClusterBy::Ad,
        }
    }
}

fn snake<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

impl Analysis for GapTableAnalysis {
    fn name(&self) -> &'static str {
        "gap_table"
    }

    fn label(&self) -> String {
        format!("gaps_{}", snake(&self.grouping))
    }

    fn run(&self, ds: &AuditDataset) -> Result<AnalysisOutput> {
        let t = gap_table_with(ds, self.grouping, self.fixed_effects, self.cluster)?;
        let label = self.label();
        Ok(AnalysisOutput {
            rows: t.rows(&label),
            text: format!("Callback gaps relative to White men by {}\n\n{}", snake(&self.grouping), t.to_text()),
            name: label,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BpAnalysis {
    pub subsamples: Vec<ContactSubsample>,
    pub pooled: bool,
    pub grouped: bool,
}

impl Default for BpAnalysis {
    fn default() -> Self {
        BpAnalysis {
            subsamples: ContactSubsample::ALL.to_vec(),
            pooled: true,
            grouped: true,
        }
    }
}

impl Analysis for BpAnalysis {
    fn name(&self) -> &'static str {
        "bp_decomposition"
    }

    fn run(&self, ds: &AuditDataset) -> Result<AnalysisOutput> {
        if self.subsamples.is_empty() || !(self.pooled || self.grouped) {
            return Err(Error::config("analysis.params", "nothing to estimate"));
        }
        let mut rows = Vec::new();
        let mut text = String::from("Gaps against standardized task composites (ad fixed effects)\n");
        for pooled in [true, false] {
            if (pooled && !self.pooled) || (!pooled && !self.grouped) {
                continue;
            }
            let res = self
                .subsamples
                .iter()
                .map(|&s| bp_decomposition(ds, pooled, s))
                .collect::<Result<Vec<_>>>()?;
            for r in &res {
                rows.extend(r.result_rows());
            }
            text.push_str(&format!("\n{}\n", if pooled { "pooled minority" } else { "by group" }));
            text.push_str(&bp_text(&res));
        }
        Ok(AnalysisOutput {
            name: self.label(),
            rows,
            text,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CredentialAnalysis {
    pub credentials: Vec<Credential>,
}

impl Default for CredentialAnalysis {
    fn default() -> Self {
        CredentialAnalysis {
            credentials: Credential::ALL.to_vec(),
        }
    }
}

impl Analysis for CredentialAnalysis {
    fn name(&self) -> &'static str {
        "credential_attenuation"
    }

    fn run(&self, ds: &AuditDataset) -> Result<AnalysisOutput> {
        let t = credential_attenuation(ds, &self.credentials)?;
        Ok(AnalysisOutput {
            name: self.label(),
            rows: t.result_rows(self.name()),
            text: format!("Credential returns by discretion half (median E*)\n\n{}", t.to_text()),
        })
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceAnalysis {}

impl Analysis for InterferenceAnalysis {
    fn name(&self) -> &'static str {
        "interference_check"
    }

    fn run(&self, ds: &AuditDataset) -> Result<AnalysisOutput> {
        let r = interference_check(ds)?;
        Ok(AnalysisOutput {
            name: self.label(),
            rows: r.result_rows(self.name()),
            text: r.to_text(),
        })
    }
}

pub type AnalysisFactory = fn(&serde_json::Value) -> Result<Box<dyn Analysis>>;

fn boxed<T: Analysis + serde::de::DeserializeOwned + 'static>(params: &serde_json::Value) -> Result<Box<dyn Analysis>> {
    Ok(Box::new(parse::<T>("analysis.params", params)?))
}

#[derive(Clone)]
pub struct AnalysisRegistry {
    factories: BTreeMap<&'static str, AnalysisFactory>,
}

impl fmt::Debug for AnalysisRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

impl Default for AnalysisRegistry {
    fn default() -> Self {
        let mut r = AnalysisRegistry {
            factories: BTreeMap::new(),
        };
        r.register("gap_table", boxed::<GapTableAnalysis>);
        r.register("bp_decomposition", boxed::<BpAnalysis>);
        r.register("credential_attenuation", boxed::<CredentialAnalysis>);
        r.register("interference_check", boxed::<InterferenceAnalysis>);
        r
    }
}

impl AnalysisRegistry {
    pub fn register(&mut self, name: &'static str, factory: AnalysisFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, name: &str, params: &serde_json::Value) -> Result<Box<dyn Analysis>> {
        let factory = self.factories.get(name).ok_or_else(|| Error::UnknownStrategy {
            registry: "analysis",
            name: name.to_string(),
            known: self.names().join(", "),
        })?;
        factory(params)
    }
}

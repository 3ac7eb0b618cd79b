//! Regression specifications over audit datasets.

use serde::{Deserialize, Serialize};

use super::ols::{fit, Design, FitResult};
use crate::error::{Error, Result};
use crate::group::Group;
use crate::synth::{AuditDataset, Credential, MajorGroup};
use crate::taskspace::composite::{median, standardize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedEffects {
    Ad,
    Firm,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterBy {
    Ad,
    Firm,
}

/// Categorical split of ads whose categories interact with the group indicators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    None,
    MajorGroup,
    JobCategory,
    Cluster,
    /// E* at or below / above the median over ads
    Discretion,
}

impl Grouping {
    /// Category labels in display order and each ad's category index.
    pub fn assign(self, ds: &AuditDataset) -> Result<(Vec<String>, Vec<usize>)> {
        match self {
            Grouping::None => Ok((vec!["all".into()], vec![0; ds.n_ads()])),
            Grouping::MajorGroup => {
                let present: Vec<MajorGroup> = MajorGroup::ALL
                    .iter()
                    .copied()
                    .filter(|m| ds.ads.iter().any(|a| a.major_group == *m))
                    .collect();
                let idx = ds
                    .ads
                    .iter()
                    .map(|a| present.iter().position(|m| *m == a.major_group).unwrap())
                    .collect();
                Ok((present.iter().map(|m| m.code().to_string()).collect(), idx))
            }
            Grouping::JobCategory => {
                let mut cats: Vec<u8> = ds.ads.iter().map(|a| a.job_category).collect();
                cats.sort_unstable();
                cats.dedup();
                let idx = ds
                    .ads
                    .iter()
                    .map(|a| cats.binary_search(&a.job_category).unwrap())
                    .collect();
                Ok((cats.iter().map(|c| format!("cat{c}")).collect(), idx))
            }
            Grouping::Cluster => {
                let ids = ds
                    .ads
                    .iter()
                    .map(|a| {
                        a.cluster_id.ok_or_else(|| {
                            Error::Precondition(format!("ad {} has no task cluster assigned", a.ad_id))
                        })
                    })
                    .collect::<Result<Vec<u8>>>()?;
                let mut cats = ids.clone();
                cats.sort_unstable();
                cats.dedup();
                let idx = ids.iter().map(|c| cats.binary_search(c).unwrap()).collect();
                Ok((cats.iter().map(|c| format!("cluster{c}")).collect(), idx))
            }
            Grouping::Discretion => {
                let high = high_discretion(ds);
                Ok((
                    vec!["low".into(), "high".into()],
                    high.iter().map(|&h| usize::from(h)).collect(),
                ))
            }
        }
    }
}

/// Per-ad indicator of E* strictly above its median over ads.
pub fn high_discretion(ds: &AuditDataset) -> Vec<bool> {
    let e: Vec<f64> = ds.ads.iter().map(|a| a.composites.e_star).collect();
    let med = median(&e);
    e.iter().map(|&v| v > med).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composite {
    B,
    P,
    M,
    C,
    EStar,
}

impl Composite {
    pub const MECHANISM: [Composite; 4] = [Composite::B, Composite::P, Composite::M, Composite::C];

    pub fn code(self) -> &'static str {
        match self {
            Composite::B => "b_std",
            Composite::P => "p_std",
            Composite::M => "m_std",
            Composite::C => "c_std",
            Composite::EStar => "e_std",
        }
    }

    pub fn raw(self, c: &crate::synth::AdComposites) -> f64 {
        match self {
            Composite::B => c.b_hat,
            Composite::P => c.p_hat,
            Composite::M => c.m_hat,
            Composite::C => c.c_hat,
            Composite::EStar => c.e_star,
        }
    }
}

/// Outcome, group indicators and ids; the common skeleton of every model.
pub(crate) fn base_design(ds: &AuditDataset, fe: FixedEffects, cluster: ClusterBy) -> Result<Design> {
    let y = ds.callbacks()?;
    let fe_ids = match fe {
        FixedEffects::Ad => Some(ds.applications.iter().map(|a| a.ad).collect()),
        FixedEffects::Firm => Some(ds.applications.iter().map(|a| ds.ad_of(a).firm_id).collect()),
        FixedEffects::None => None,
    };
    let cl = match cluster {
        ClusterBy::Ad => ds.applications.iter().map(|a| a.ad).collect(),
        ClusterBy::Firm => ds.applications.iter().map(|a| ds.ad_of(a).firm_id).collect(),
    };
    let mut d = Design::new(y, fe_ids, cl);
    for g in Group::MINORITIES {
        d.push(g.code(), group_indicator(ds, |h| h == g));
    }
    Ok(d)
}

pub(crate) fn group_indicator(ds: &AuditDataset, f: impl Fn(Group) -> bool) -> Vec<f64> {
    ds.applications
        .iter()
        .map(|a| f64::from(u8::from(f(a.attrs.group))))
        .collect()
}

pub(crate) fn credential_column(ds: &AuditDataset, c: Credential) -> Vec<f64> {
    ds.applications
        .iter()
        .map(|a| f64::from(u8::from(c.holds(&a.attrs))))
        .collect()
}

pub(crate) fn product(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

pub fn interaction_name(g: Group, other: &str) -> String {
    format!("{}:{other}", g.code())
}

/// Group gaps interacted with a grouping and/or continuous composites, with
/// optional credential controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegressionSpec {
    pub grouping: Grouping,
    pub composites: Vec<Composite>,
    pub credentials: Vec<Credential>,
    pub fixed_effects: FixedEffects,
    pub cluster: ClusterBy,
}

impl Default for RegressionSpec {
    fn default() -> Self {
        RegressionSpec {
            grouping: Grouping::None,
            composites: Vec::new(),
            credentials: Vec::new(),
            fixed_effects: FixedEffects::Ad,
            cluster: ClusterBy::Ad,
        }
    }
}

impl RegressionSpec {
    pub fn grouped(grouping: Grouping) -> Self {
        RegressionSpec {
            grouping,
            ..Default::default()
        }
    }

    /// Build the numeric design. Category 0 of the grouping is the base.
    pub fn design(&self, ds: &AuditDataset) -> Result<Design> {
        let mut d = base_design(ds, self.fixed_effects, self.cluster)?;
        let absorbs_ads = self.fixed_effects == FixedEffects::Ad;
        let (labels, cat) = self.grouping.assign(ds)?;
        for (c, label) in labels.iter().enumerate().skip(1) {
            let ind: Vec<f64> = ds
                .applications
                .iter()
                .map(|a| f64::from(u8::from(cat[a.ad as usize] == c)))
                .collect();
            if !absorbs_ads {
                d.push(format!("cat:{label}"), ind.clone());
            }
            for g in Group::MINORITIES {
                let gi = d.columns[g.index() - 1].clone();
                d.push(interaction_name(g, label), product(&gi, &ind));
            }
        }
        for &z in &self.composites {
            let raw: Vec<f64> = ds.applications.iter().map(|a| z.raw(&ds.ad_of(a).composites)).collect();
            let zs = standardize(&raw)
                .map_err(|_| Error::Degenerate(format!("composite `{}` has zero variance", z.code())))?;
            if !absorbs_ads {
                d.push(z.code(), zs.clone());
            }
            for g in Group::MINORITIES {
                let gi = d.columns[g.index() - 1].clone();
                d.push(interaction_name(g, z.code()), product(&gi, &zs));
            }
        }
        for &c in &self.credentials {
            d.push(format!("cred:{}", c.code()), credential_column(ds, c));
        }
        Ok(d)
    }

    pub fn fit(&self, ds: &AuditDataset) -> Result<FitResult> {
        fit(&self.design(ds)?)
    }
}

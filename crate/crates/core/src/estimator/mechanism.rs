//! Gaps against standardized task composites: the B-hat minus P-hat contrast.

use serde::{Deserialize, Serialize};

use super::inference::LincomResult;
use super::model::{base_design, group_indicator, interaction_name, product, ClusterBy, Composite, FixedEffects};
use super::ols::{fit, FitResult};
use super::report::{cell, render, ResultRow};
use crate::error::{Error, Result};
use crate::group::Group;
use crate::synth::AuditDataset;
use crate::taskspace::composite::standardize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactSubsample {
    All,
    /// contact at or below its 40th percentile over ads
    Low40,
    /// contact at or above its 60th percentile over ads
    High40,
}

impl ContactSubsample {
    pub const ALL: [ContactSubsample; 3] = [ContactSubsample::All, ContactSubsample::Low40, ContactSubsample::High40];

    pub fn code(self) -> &'static str {
        match self {
            ContactSubsample::All => "all",
            ContactSubsample::Low40 => "low40",
            ContactSubsample::High40 => "high40",
        }
    }
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(x: &[f64], q: f64) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let h = q * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Per-ad membership in a contact subsample.
pub fn contact_split(ds: &AuditDataset, sub: ContactSubsample) -> Vec<bool> {
    let c: Vec<f64> = ds.ads.iter().map(|a| a.composites.c_hat).collect();
    let q40 = quantile(&c, 0.4);
    let q60 = quantile(&c, 0.6);
    c.iter()
        .map(|&v| match sub {
            ContactSubsample::All => true,
            ContactSubsample::Low40 => v <= q40,
            ContactSubsample::High40 => v >= q60 && v > q40,
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BpRow {
    /// a group code, or "minority" in the pooled model
    pub label: String,
    pub b: LincomResult,
    pub p: LincomResult,
    pub m: LincomResult,
    pub c: LincomResult,
    pub b_minus_p: LincomResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct BpDecomposition {
    pub pooled: bool,
    pub subsample: ContactSubsample,
    pub n_ads: usize,
    pub rows: Vec<BpRow>,
    pub fit: FitResult,
}

impl BpDecomposition {
    pub fn model_name(&self) -> String {
        format!("bp_{}_{}", if self.pooled { "pooled" } else { "grouped" }, self.subsample.code())
    }

    pub fn result_rows(&self) -> Vec<ResultRow> {
        let model = self.model_name();
        let mut out = Vec::new();
        for r in &self.rows {
            for (name, l) in [("b", &r.b), ("p", &r.p), ("m", &r.m), ("c", &r.c), ("b-p", &r.b_minus_p)] {
                out.push(ResultRow::lincom(&model, format!("{}:{name}", r.label), l));
            }
        }
        out
    }
}

/// Callback on group indicators interacted with standardized B-hat, P-hat,
/// M-hat and contact, ad fixed effects, clustered by ad. Composites are
/// standardized within the subsample.
pub fn bp_decomposition(ds: &AuditDataset, pooled: bool, subsample: ContactSubsample) -> Result<BpDecomposition> {
    let in_ad = contact_split(ds, subsample);
    let keep: Vec<bool> = ds.applications.iter().map(|a| in_ad[a.ad as usize]).collect();
    let n_ads = in_ad.iter().filter(|&&k| k).count();
    if n_ads == 0 {
        return Err(Error::Precondition(format!("contact subsample `{}` is empty", subsample.code())));
    }
    let mut d = base_design(ds, FixedEffects::Ad, ClusterBy::Ad)?;
    let minority = group_indicator(ds, Group::is_minority);
    let mut zs = Vec::new();
    for z in Composite::MECHANISM {
        let raw: Vec<f64> = ds
            .applications
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(a, _)| z.raw(&ds.ad_of(a).composites))
            .collect();
        let std = standardize(&raw).map_err(|_| {
            Error::Degenerate(format!("composite `{}` has zero variance in `{}`", z.code(), subsample.code()))
        })?;
        // scatter back to full length; rows outside the subsample are dropped below
        let mut full = vec![0.0; ds.len()];
        let mut it = std.into_iter();
        for (v, &k) in full.iter_mut().zip(&keep) {
            if k {
                *v = it.next().unwrap();
            }
        }
        zs.push(full);
    }
    let labels: Vec<String> = if pooled {
        for (z, col) in Composite::MECHANISM.iter().zip(&zs) {
            d.push(format!("minority:{}", z.code()), product(&minority, col));
        }
        vec!["minority".into()]
    } else {
        for g in Group::MINORITIES {
            for (z, col) in Composite::MECHANISM.iter().zip(&zs) {
                let gi = d.columns[g.index() - 1].clone();
                d.push(interaction_name(g, z.code()), product(&gi, col));
            }
        }
        Group::MINORITIES.iter().map(|g| g.code().to_string()).collect()
    };
    let fitted = fit(&d.subset(&keep))?;
    let rows = labels
        .into_iter()
        .map(|label| {
            let name = |z: Composite| format!("{label}:{}", z.code());
            let (b, p) = (name(Composite::B), name(Composite::P));
            Ok(BpRow {
                b: fitted.test(&b)?,
                p: fitted.test(&p)?,
                m: fitted.test(&name(Composite::M))?,
                c: fitted.test(&name(Composite::C))?,
                b_minus_p: fitted.lincom(&[(b.as_str(), 1.0), (p.as_str(), -1.0)])?,
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BpDecomposition {
        pooled,
        subsample,
        n_ads,
        rows,
        fit: fitted,
    })
}

/// Table with one column per subsample and B, P, B - P rows per label.
pub fn bp_text(results: &[BpDecomposition]) -> String {
    let mut header = vec!["term".to_string()];
    header.extend(results.iter().map(|r| r.subsample.code().to_string()));
    let mut rows = Vec::new();
    if let Some(first) = results.first() {
        for (i, r) in first.rows.iter().enumerate() {
            for (name, pick) in [
                ("B", (|r: &BpRow| r.b) as fn(&BpRow) -> LincomResult),
                ("P", |r: &BpRow| r.p),
                ("B-P", |r: &BpRow| r.b_minus_p),
            ] {
                let mut line = vec![format!("{} x {name}", r.label)];
                line.extend(results.iter().map(|res| cell(&pick(&res.rows[i]))));
                rows.push(line);
            }
        }
    }
    let mut ads = vec!["ads".to_string()];
    ads.extend(results.iter().map(|r| r.n_ads.to_string()));
    rows.push(ads);
    render(&header, &rows)
}

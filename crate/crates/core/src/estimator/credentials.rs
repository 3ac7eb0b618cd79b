//! Returns to résumé credentials and their attenuation for minority applicants
//! by job discretion.

use serde::Serialize;

use super::inference::{LincomResult, WaldResult};
use super::model::{base_design, credential_column, group_indicator, high_discretion, product, ClusterBy, FixedEffects};
use super::ols::{fit, FitResult};
use super::report::{cell, render, ResultRow};
use crate::error::{Error, Result};
use crate::group::Group;
use crate::synth::{AuditDataset, Credential};

#[derive(Debug, Clone, Serialize)]
pub struct CredentialRow {
    pub credential: Credential,
    pub main: LincomResult,
    /// credential x minority in low-discretion ads
    pub minority_low: LincomResult,
    /// credential x minority x high discretion
    pub triple: LincomResult,
    /// credential x minority in high-discretion ads
    pub minority_high: LincomResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct CredentialTable {
    pub rows: Vec<CredentialRow>,
    /// credentials left out because they do not vary within a discretion half
    pub flagged: Vec<(Credential, String)>,
    pub positive_triples: Option<WaldResult>,
    pub placebo_triples: Option<WaldResult>,
    /// White-male callback rate in low and high discretion ads
    pub white_male_rates: (f64, f64),
    pub fit: FitResult,
}

fn name(c: Credential, suffix: &str) -> String {
    if suffix.is_empty() {
        c.code().to_string()
    } else {
        format!("{}:{suffix}", c.code())
    }
}

/// One regression with credential main effects and credential x minority,
/// credential x high, credential x minority x high and minority x high terms;
/// ad fixed effects absorb the discretion main effect.
pub fn credential_attenuation(ds: &AuditDataset, credentials: &[Credential]) -> Result<CredentialTable> {
    if credentials.is_empty() {
        return Err(Error::Precondition("no credentials requested".into()));
    }
    let high_ad = high_discretion(ds);
    let high: Vec<f64> = ds
        .applications
        .iter()
        .map(|a| f64::from(u8::from(high_ad[a.ad as usize])))
        .collect();
    let minority = group_indicator(ds, Group::is_minority);
    let min_high = product(&minority, &high);

    let mut d = base_design(ds, FixedEffects::Ad, ClusterBy::Ad)?;
    d.push("minority:high", min_high.clone());
    let mut used = Vec::new();
    let mut flagged = Vec::new();
    for &c in credentials {
        let x = credential_column(ds, c);
        let constant_in = |half: f64| {
            let mut vals = x.iter().zip(&high).filter(|(_, &h)| h == half).map(|(v, _)| *v);
            match vals.next() {
                Some(first) => vals.all(|v| v == first),
                None => true,
            }
        };
        if constant_in(0.0) || constant_in(1.0) {
            flagged.push((c, "constant within a discretion half".to_string()));
            continue;
        }
        d.push(name(c, ""), x.clone());
        d.push(name(c, "minority"), product(&x, &minority));
        d.push(name(c, "high"), product(&x, &high));
        d.push(name(c, "minority:high"), product(&x, &min_high));
        used.push(c);
    }
    let fitted = fit(&d)?;
    let rows = used
        .iter()
        .map(|&c| {
            let (two, three) = (name(c, "minority"), name(c, "minority:high"));
            Ok(CredentialRow {
                credential: c,
                main: fitted.test(&name(c, ""))?,
                minority_low: fitted.test(&two)?,
                triple: fitted.test(&three)?,
                minority_high: fitted.lincom(&[(two.as_str(), 1.0), (three.as_str(), 1.0)])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let block = |set: &[Credential]| -> Result<Option<WaldResult>> {
        let names: Vec<String> = used
            .iter()
            .filter(|c| set.contains(c))
            .map(|&c| name(c, "minority:high"))
            .collect();
        if names.is_empty() {
            Ok(None)
        } else {
            fitted.wald_zero(&names).map(Some)
        }
    };
    let positive_triples = block(&Credential::POSITIVE)?;
    let placebo_triples = block(&Credential::PLACEBO)?;

    let y = ds.callbacks()?;
    let mut acc = [(0.0, 0usize); 2];
    for ((a, y), h) in ds.applications.iter().zip(&y).zip(&high) {
        if a.attrs.group == Group::WM {
            let e = &mut acc[*h as usize];
            e.0 += y;
            e.1 += 1;
        }
    }
    let rate = |(s, n): (f64, usize)| if n > 0 { s / n as f64 } else { f64::NAN };

    Ok(CredentialTable {
        rows,
        flagged,
        positive_triples,
        placebo_triples,
        white_male_rates: (rate(acc[0]), rate(acc[1])),
        fit: fitted,
    })
}

impl CredentialTable {
    pub fn result_rows(&self, model: &str) -> Vec<ResultRow> {
        let mut out = Vec::new();
        for r in &self.rows {
            let c = r.credential.code();
            out.push(ResultRow::lincom(model, c, &r.main));
            out.push(ResultRow::lincom(model, format!("{c}:minority"), &r.minority_low));
            out.push(ResultRow::lincom(model, format!("{c}:minority:high"), &r.triple));
            out.push(ResultRow::lincom(model, format!("{c}:minority+triple"), &r.minority_high));
        }
        if let Some(w) = &self.positive_triples {
            out.push(ResultRow::wald(model, "F:positive_triples", w));
        }
        if let Some(w) = &self.placebo_triples {
            out.push(ResultRow::wald(model, "F:placebo_triples", w));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let header: Vec<String> = ["credential", "main", "x minority (low)", "x minority x high", "x minority (high)"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.credential.code().to_string(),
                    cell(&r.main),
                    cell(&r.minority_low),
                    cell(&r.triple),
                    cell(&r.minority_high),
                ]
            })
            .collect();
        let mut s = render(&header, &rows);
        for (label, w) in [("positive-return triples", &self.positive_triples), ("placebo triples", &self.placebo_triples)] {
            if let Some(w) = w {
                s.push_str(&format!("joint F, {label}: F({}, {}) = {:.3}, p = {:.3}\n", w.q, w.df, w.f, w.p));
            }
        }
        s.push_str(&format!(
            "White-male callback rate: {:.3} (low discretion) vs {:.3} (high discretion)\n",
            self.white_male_rates.0, self.white_male_rates.1
        ));
        for (c, why) in &self.flagged {
            s.push_str(&format!("note: {} omitted, {why}\n", c.code()));
        }
        s
    }
}

//! Group gaps by occupation category.

use serde::Serialize;

use super::inference::LincomResult;
use super::model::{interaction_name, ClusterBy, FixedEffects, Grouping, RegressionSpec};
use super::ols::{fit, FitResult};
use super::report::{cell, render, ResultRow};
use crate::error::{Error, Result};
use crate::group::Group;
use crate::synth::AuditDataset;

#[derive(Debug, Clone, Serialize)]
pub struct GapCell {
    pub group: Group,
    pub category: String,
    pub result: Option<LincomResult>,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapTable {
    pub grouping: Grouping,
    pub categories: Vec<String>,
    pub base: String,
    pub ads_per_category: Vec<usize>,
    /// gap of each group in each category
    pub cells: Vec<GapCell>,
    /// difference between each category's gap and the base category's
    pub differences: Vec<GapCell>,
    /// pooled gaps from the model without category interactions
    pub overall: Vec<(Group, LincomResult)>,
    pub fit: FitResult,
}

impl GapTable {
    pub fn cell(&self, g: Group, category: &str) -> Option<&GapCell> {
        self.cells.iter().find(|c| c.group == g && c.category == category)
    }

    pub fn rows(&self, model: &str) -> Vec<ResultRow> {
        let mut out = Vec::new();
        for c in &self.cells {
            if let Some(l) = &c.result {
                out.push(ResultRow::lincom(model, format!("{}@{}", c.group.code(), c.category), l));
            }
        }
        for c in &self.differences {
            if let Some(l) = &c.result {
                out.push(ResultRow::lincom(model, format!("{}@{}-{}", c.group.code(), c.category, self.base), l));
            }
        }
        for (g, l) in &self.overall {
            out.push(ResultRow::lincom(model, format!("{}@overall", g.code()), l));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut header = vec!["group".to_string()];
        header.extend(self.categories.iter().cloned());
        header.push("overall".into());
        let mut rows = Vec::new();
        for g in Group::MINORITIES {
            let mut r = vec![g.label().to_string()];
            for cat in &self.categories {
                r.push(match self.cell(g, cat) {
                    Some(GapCell { result: Some(l), .. }) => cell(l),
                    _ => "n/a".into(),
                });
            }
            let overall = self.overall.iter().find(|(h, _)| *h == g).map(|(_, l)| cell(l));
            r.push(overall.unwrap_or_else(|| "n/a".into()));
            rows.push(r);
        }
        let mut n_row = vec!["ads".to_string()];
        n_row.extend(self.ads_per_category.iter().map(|n| n.to_string()));
        n_row.push(self.ads_per_category.iter().sum::<usize>().to_string());
        rows.push(n_row);
        let mut s = render(&header, &rows);
        for c in &self.cells {
            if let Some(f) = &c.flag {
                s.push_str(&format!("note: {} in {}: {f}\n", c.group.code(), c.category));
            }
        }
        s
    }
}

/// Gaps relative to White men in every category of `grouping`. The base
/// category's gaps are raw coefficients; the others add the interaction.
pub fn gap_table(ds: &AuditDataset, grouping: Grouping) -> Result<GapTable> {
    gap_table_with(ds, grouping, FixedEffects::Ad, ClusterBy::Ad)
}

pub fn gap_table_with(ds: &AuditDataset, grouping: Grouping, fe: FixedEffects, cluster: ClusterBy) -> Result<GapTable> {
    let (labels, cat) = grouping.assign(ds)?;
    let mut ads_per_category = vec![0usize; labels.len()];
    for &c in &cat {
        ads_per_category[c] += 1;
    }
    let estimable: Vec<bool> = ads_per_category.iter().map(|&n| n >= 2).collect();
    let base = estimable
        .iter()
        .position(|&e| e)
        .ok_or_else(|| Error::Inference("no category has two or more ads".into()))?;

    // Reorder so the base comes first, and drop rows of thin categories.
    let spec = RegressionSpec {
        grouping,
        fixed_effects: fe,
        cluster,
        ..Default::default()
    };
    let mut design = spec.design(ds)?;
    let keep: Vec<bool> = ds.applications.iter().map(|a| estimable[cat[a.ad as usize]]).collect();
    if base != 0 {
        // interactions were built against category 0; rebuild them against `base`
        design.names.truncate(Group::MINORITIES.len());
        design.columns.truncate(Group::MINORITIES.len());
        for (c, label) in labels.iter().enumerate() {
            if c == base {
                continue;
            }
            let ind: Vec<f64> = ds
                .applications
                .iter()
                .map(|a| f64::from(u8::from(cat[a.ad as usize] == c)))
                .collect();
            if fe != FixedEffects::Ad {
                design.push(format!("cat:{label}"), ind.clone());
            }
            for g in Group::MINORITIES {
                let col = design.columns[g.index() - 1].iter().zip(&ind).map(|(a, b)| a * b).collect();
                design.push(interaction_name(g, label), col);
            }
        }
    }
    let thin: Vec<String> = labels
        .iter()
        .zip(&estimable)
        .filter(|(_, &e)| !e)
        .map(|(l, _)| l.clone())
        .collect();
    let keep_cols: Vec<bool> = design
        .names
        .iter()
        .map(|n| !thin.iter().any(|t| n.ends_with(&format!(":{t}"))))
        .collect();
    let mut design = design.subset(&keep);
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for ((n, c), k) in design.names.drain(..).zip(design.columns.drain(..)).zip(&keep_cols) {
        if *k {
            names.push(n);
            columns.push(c);
        }
    }
    design.names = names;
    design.columns = columns;
    let fitted = fit(&design)?;

    let mut cells = Vec::new();
    let mut differences = Vec::new();
    for (c, label) in labels.iter().enumerate() {
        for g in Group::MINORITIES {
            if !estimable[c] {
                cells.push(GapCell {
                    group: g,
                    category: label.clone(),
                    result: None,
                    flag: Some(format!("{} ad(s); fewer than 2 clusters", ads_per_category[c])),
                });
                continue;
            }
            let (result, diff) = if c == base {
                (fitted.test(g.code()), None)
            } else {
                let inter = interaction_name(g, label);
                (
                    fitted.lincom(&[(g.code(), 1.0), (inter.as_str(), 1.0)]),
                    Some(fitted.test(&inter)),
                )
            };
            let (result, flag) = settle(result)?;
            cells.push(GapCell {
                group: g,
                category: label.clone(),
                result,
                flag,
            });
            if let Some(d) = diff {
                let (result, flag) = settle(d)?;
                differences.push(GapCell {
                    group: g,
                    category: label.clone(),
                    result,
                    flag,
                });
            }
        }
    }

    let overall_fit = if labels.len() == 1 {
        fitted.clone()
    } else {
        RegressionSpec {
            fixed_effects: fe,
            cluster,
            ..Default::default()
        }
        .fit(ds)?
    };
    let overall = Group::MINORITIES
        .iter()
        .map(|&g| Ok((g, overall_fit.test(g.code())?)))
        .collect::<Result<Vec<_>>>()?;

    Ok(GapTable {
        grouping,
        categories: labels.clone(),
        base: labels[base].clone(),
        ads_per_category,
        cells,
        differences,
        overall,
        fit: fitted,
    })
}

/// A dropped coefficient becomes a flagged empty cell; other errors propagate.
fn settle(r: Result<LincomResult>) -> Result<(Option<LincomResult>, Option<String>)> {
    match r {
        Ok(l) => Ok((Some(l), None)),
        Err(Error::DroppedCoefficient(name)) => Ok((None, Some(format!("`{name}` not identified")))),
        Err(e) => Err(e),
    }
}

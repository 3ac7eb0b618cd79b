//! Randomisation balance: correlations of group indicators with résumé attributes.

use serde::{Deserialize, Serialize};

use super::attributes::{Computer, Gpa, Internship, Minor};
use super::dataset::AuditDataset;
use crate::error::{Error, Result};
use crate::group::Group;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub indicators: Vec<String>,
    pub attributes: Vec<String>,
    /// `rho[i][a]`: indicator `i` against attribute `a`
    pub rho: Vec<Vec<f64>>,
    /// columns with zero variance, reported with correlation 0
    pub flagged: Vec<String>,
    pub max_abs: f64,
}

pub type NamedColumn = (String, Vec<f64>);

pub fn balance_matrix(indicators: &[NamedColumn], attributes: &[NamedColumn]) -> Result<BalanceReport> {
    let n = indicators.first().map(|c| c.1.len()).unwrap_or(0);
    if n == 0 {
        return Err(Error::Precondition("balance check needs a nonempty dataset".into()));
    }
    if indicators.iter().chain(attributes).any(|c| c.1.len() != n) {
        return Err(Error::Precondition("balance columns differ in length".into()));
    }
    let mut flagged = Vec::new();
    for (name, col) in indicators.iter().chain(attributes) {
        if stats::variance(col) == 0.0 && !flagged.contains(name) {
            flagged.push(name.clone());
        }
    }
    let rho: Vec<Vec<f64>> = indicators
        .iter()
        .map(|(_, d)| {
            attributes
                .iter()
                .map(|(_, x)| stats::pearson(d, x).unwrap_or(0.0))
                .collect()
        })
        .collect();
    let max_abs = rho.iter().flatten().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(BalanceReport {
        indicators: indicators.iter().map(|c| c.0.clone()).collect(),
        attributes: attributes.iter().map(|c| c.0.clone()).collect(),
        rho,
        flagged,
        max_abs,
    })
}

pub fn group_indicators(ds: &AuditDataset) -> Vec<NamedColumn> {
    Group::ALL
        .iter()
        .map(|&g| {
            let col = ds
                .applications
                .iter()
                .map(|a| f64::from(u8::from(a.attrs.group == g)))
                .collect();
            (g.code().to_string(), col)
        })
        .collect()
}

/// Every résumé attribute expanded into 0/1 columns, one per category.
pub fn binarized_attributes(ds: &AuditDataset, n_universities: usize, n_majors: usize) -> Vec<NamedColumn> {
    let apps = &ds.applications;
    let col = |f: &dyn Fn(&super::attributes::ResumeAttributes) -> bool| -> Vec<f64> {
        apps.iter().map(|a| f64::from(u8::from(f(&a.attrs)))).collect()
    };
    let mut out: Vec<NamedColumn> = Vec::new();
    for u in 1..=n_universities as u8 {
        out.push((format!("university_{u}"), col(&|r| r.university_id == u)));
    }
    for m in 0..n_majors as u8 {
        out.push((format!("major_{m}"), col(&|r| r.major == m)));
    }
    for &v in Minor::ALL {
        out.push((format!("minor_{}", v.code()), col(&|r| r.minor == v)));
    }
    for &v in Gpa::ALL {
        out.push((format!("gpa_{}", v.code()), col(&|r| r.gpa == v)));
    }
    for &v in Internship::ALL {
        out.push((format!("internship_{}", v.code()), col(&|r| r.internship == v)));
    }
    for &v in Computer::ALL {
        out.push((format!("computer_{}", v.code()), col(&|r| r.computer == v)));
    }
    out.push(("volunteer".into(), col(&|r| r.volunteer)));
    out.push(("spanish".into(), col(&|r| r.spanish)));
    out.push(("study_abroad".into(), col(&|r| r.study_abroad)));
    out.push(("college_job".into(), col(&|r| r.college_job)));
    out
}

pub fn balance_check(ds: &AuditDataset, n_universities: usize, n_majors: usize) -> Result<BalanceReport> {
    balance_matrix(&group_indicators(ds), &binarized_attributes(ds, n_universities, n_majors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_duplicate_columns() {
        let d = vec![1.0, 0.0, 1.0, 0.0, 1.0];
        let x = vec![0.3, 0.1, 0.7, 0.2, 0.9];
        let report = balance_matrix(
            &[("D".into(), d.clone())],
            &[("const".into(), vec![2.0; 5]), ("dup".into(), d), ("x".into(), x)],
        )
        .unwrap();
        assert_eq!(report.rho[0][0], 0.0);
        assert_eq!(report.flagged, vec!["const".to_string()]);
        assert!((report.rho[0][1] - 1.0).abs() < 1e-15);
        assert!((report.max_abs - 1.0).abs() < 1e-15);
    }
}

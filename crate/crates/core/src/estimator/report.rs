//! Long-format result rows and plain-text table helpers.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::inference::{LincomResult, WaldResult};
use crate::error::Result;

pub const RESULT_COLUMNS: [&str; 6] = ["model", "term", "estimate", "se", "t", "p"];

/// One estimate or test. Wald tests carry the F statistic as the estimate and no SE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub term: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub t: Option<f64>,
    pub p: f64,
}

impl ResultRow {
    pub fn lincom(model: &str, term: impl Into<String>, l: &LincomResult) -> Self {
        ResultRow {
            model: model.to_string(),
            term: term.into(),
            estimate: l.estimate,
            se: Some(l.se),
            t: Some(l.t),
            p: l.p,
        }
    }

    pub fn wald(model: &str, term: impl Into<String>, w: &WaldResult) -> Self {
        ResultRow {
            model: model.to_string(),
            term: term.into(),
            estimate: w.f,
            se: None,
            t: None,
            p: w.p,
        }
    }
}

pub fn write_rows<W: Write>(rows: &[ResultRow], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(RESULT_COLUMNS)?;
    for r in rows {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_default();
        wtr.write_record([
            r.model.clone(),
            r.term.clone(),
            format!("{:.10e}", r.estimate),
            opt(r.se),
            opt(r.t),
            format!("{:.10e}", r.p),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// "-0.033 (0.012)" with significance stars at 10/5/1 percent.
pub fn cell(l: &LincomResult) -> String {
    let stars = if l.p < 0.01 {
        "***"
    } else if l.p < 0.05 {
        "**"
    } else if l.p < 0.1 {
        "*"
    } else {
        ""
    };
    format!("{:.3}{stars} ({:.3})", l.estimate, l.se)
}

/// Fixed-width text table; the first column is left aligned.
pub fn render(header: &[String], rows: &[Vec<String>]) -> String {
    let ncol = header.len();
    let mut width = vec![0; ncol];
    for r in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |r: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in r.iter().zip(&width).enumerate() {
            if i == 0 {
                s.push_str(&format!("{c:<w$}"));
            } else {
                s.push_str(&format!("  {c:>w$}"));
            }
        }
        s.trim_end().to_string()
    };
    let total: usize = width.iter().sum::<usize>() + 2 * ncol.saturating_sub(1);
    let mut out = line(header);
    out.push('\n');
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

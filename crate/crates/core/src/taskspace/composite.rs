//! Min-max task composites and the empirical discretion index.

use serde::{Deserialize, Serialize};

use super::table::{OccupationTaskTable, Task};
use crate::error::{Error, Result};
use crate::stats;

/// Per-occupation composites, aligned with the table rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Composites {
    /// `1 + alpha mm(a) + beta mm(p)`
    pub b_hat: Vec<f64>,
    /// `1 + delta mm(r)`
    pub p_hat: Vec<f64>,
    pub e_star: Vec<f64>,
    /// min-max routine manual intensity
    pub m_hat: Vec<f64>,
    /// min-max contact intensity
    pub c_hat: Vec<f64>,
    pub b_std: Vec<f64>,
    pub p_std: Vec<f64>,
    pub m_std: Vec<f64>,
    pub c_std: Vec<f64>,
}

/// Rescale to `[0, 1]`. Fails on a constant column.
pub fn min_max(x: &[f64]) -> Result<Vec<f64>> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::Degenerate("cannot min-max normalise a constant column".into()));
    }
    Ok(x.iter().map(|v| (v - lo) / (hi - lo)).collect())
}

/// Mean 0, variance 1 (n - 1 denominator).
pub fn standardize(x: &[f64]) -> Result<Vec<f64>> {
    let sd = stats::variance(x).sqrt();
    if !(sd > 0.0) {
        return Err(Error::Degenerate("cannot standardise a zero-variance column".into()));
    }
    let m = stats::mean(x);
    Ok(x.iter().map(|v| (v - m) / sd).collect())
}

pub fn composites(table: &OccupationTaskTable, alpha: f64, beta: f64, delta: f64) -> Result<Composites> {
    let mm = |t: Task| {
        min_max(&table.column(t)).map_err(|_| Error::Degenerate(format!("task `{}` is constant", t.name())))
    };
    let (a, p, r, m, k) = (mm(Task::A)?, mm(Task::P)?, mm(Task::R)?, mm(Task::M)?, mm(Task::K)?);
    let b_hat: Vec<f64> = a.iter().zip(&p).map(|(a, p)| 1.0 + alpha * a + beta * p).collect();
    let p_hat: Vec<f64> = r.iter().map(|r| 1.0 + delta * r).collect();
    let e_star = b_hat.iter().zip(&p_hat).map(|(b, p)| b / (b + p)).collect();
    Ok(Composites {
        b_std: standardize(&b_hat)?,
        p_std: standardize(&p_hat)?,
        m_std: standardize(&m)?,
        c_std: standardize(&k)?,
        b_hat,
        p_hat,
        e_star,
        m_hat: m,
        c_hat: k,
    })
}

/// Median of a slice (mean of the middle pair for even lengths).
pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `true` for values strictly above the median. Fails unless both halves are nonempty.
pub fn median_split(x: &[f64]) -> Result<Vec<bool>> {
    let med = median(x);
    let high: Vec<bool> = x.iter().map(|&v| v > med).collect();
    let n_high = high.iter().filter(|&&h| h).count();
    if n_high == 0 || n_high == x.len() {
        return Err(Error::Degenerate("median split leaves one half empty".into()));
    }
    Ok(high)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taskspace::table::OccupationRow;

    fn table() -> OccupationTaskTable {
        let rows = (0..5)
            .map(|i| {
                let x = i as f64;
                OccupationRow {
                    occupation_id: i,
                    a: x,
                    p: (4.0 - x) * (1.0 + x),
                    r: (x * 1.7) % 3.0,
                    m: x * x,
                    phy: 1.0,
                    k: (x - 2.0).abs(),
                    weight: 1.0,
                }
            })
            .collect();
        OccupationTaskTable::new(rows).unwrap()
    }

    #[test]
    fn bounds_and_range() {
        let c = composites(&table(), 1.0, 1.0, 1.0).unwrap();
        let max_p = c.p_hat.iter().copied().fold(f64::MIN, f64::max);
        let min_p = c.p_hat.iter().copied().fold(f64::MAX, f64::min);
        assert_eq!(max_p, 2.0);
        assert_eq!(min_p, 1.0);
        assert!(c.e_star.iter().all(|&e| e > 0.0 && e < 1.0));
        let m = stats::mean(&c.b_std);
        assert!(m.abs() < 1e-12);
        assert!((stats::variance(&c.b_std) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn floor_of_b_hat_is_one() {
        let rows = vec![
            OccupationRow { occupation_id: 1, a: 0.0, p: 0.0, r: 0.0, m: 0.0, phy: 0.0, k: 0.0, weight: 1.0 },
            OccupationRow { occupation_id: 2, a: 1.0, p: 2.0, r: 1.0, m: 1.0, phy: 1.0, k: 1.0, weight: 1.0 },
        ];
        let c = composites(&OccupationTaskTable::new(rows).unwrap(), 1.0, 1.0, 1.0).unwrap();
        assert_eq!(c.b_hat[0], 1.0);
        assert_eq!(c.b_hat[1], 3.0);
    }

    #[test]
    fn constant_column_is_an_error() {
        let mut rows = table().rows().to_vec();
        for r in &mut rows {
            r.r = 0.5;
        }
        assert!(composites(&OccupationTaskTable::new(rows).unwrap(), 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn median_split_halves() {
        let s = median_split(&[0.3, 0.1, 0.9, 0.5]).unwrap();
        assert_eq!(s, vec![false, false, true, true]);
        assert!(median_split(&[1.0, 1.0]).is_err());
    }
}

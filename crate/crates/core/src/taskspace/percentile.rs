//! Employment-weighted task centiles.

use super::table::{OccupationTaskTable, Task};
use crate::error::{Error, Result};

/// Centile (1-100) of each value in the weighted distribution of `values`.
///
/// Each occupation sits at the midpoint of its tied weight mass:
/// `ceil(100 * (W_below + W_tied / 2) / W)`. When every value is equal all
/// occupations land on 50.
pub fn weighted_centiles(values: &[f64], weights: &[f64]) -> Result<Vec<u8>> {
    if values.len() != weights.len() {
        return Err(Error::Precondition("values and weights differ in length".into()));
    }
    if values.len() < 2 {
        return Err(Error::Precondition("at least two occupations are needed for centiles".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Domain("total employment weight must be positive".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));

    let mut out = vec![0u8; values.len()];
    let mut below = 0.0;
    let mut start = 0;
    while start < order.len() {
        let v = values[order[start]];
        let mut end = start;
        let mut tied = 0.0;
        while end < order.len() && values[order[end]] == v {
            tied += weights[order[end]];
            end += 1;
        }
        let share = (below + 0.5 * tied) / total;
        let centile = (100.0 * share - 1e-9).ceil().clamp(1.0, 100.0) as u8;
        for &i in &order[start..end] {
            out[i] = centile;
        }
        below += tied;
        start = end;
    }
    Ok(out)
}

pub fn weighted_percentiles(table: &OccupationTaskTable, task: Task) -> Result<Vec<u8>> {
    weighted_centiles(&table.column(task), &table.weights())
}

/// Centiles for all six tasks, one `[a, p, r, m, phy, k]` row per occupation.
pub fn percentile_table(table: &OccupationTaskTable) -> Result<Vec<[f64; 6]>> {
    let cols = Task::ALL
        .iter()
        .map(|&t| weighted_percentiles(table, t))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..table.len())
        .map(|i| std::array::from_fn(|t| cols[t][i] as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_equal_weights_give_one_to_hundred() {
        let values: Vec<f64> = (0..100).map(|i| (i * 37 % 100) as f64).collect();
        let c = weighted_centiles(&values, &[1.0; 100]).unwrap();
        for (v, c) in values.iter().zip(&c) {
            assert_eq!(*c as f64, v + 1.0);
        }
    }

    #[test]
    fn all_equal_values_sit_at_fifty() {
        assert_eq!(weighted_centiles(&[3.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), vec![50; 5]);
    }

    #[test]
    fn ties_share_midpoint() {
        // weights 1,1,2 with the last two tied: mass below 1, tied 3 -> (1 + 1.5) / 4
        let c = weighted_centiles(&[0.0, 1.0, 1.0], &[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(c, vec![13, 63, 63]);
    }

    #[test]
    fn preconditions() {
        assert!(weighted_centiles(&[1.0], &[1.0]).is_err());
        assert!(weighted_centiles(&[1.0, 2.0], &[0.0, 0.0]).is_err());
    }
}

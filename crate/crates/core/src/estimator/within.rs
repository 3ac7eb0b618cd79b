//! Demeaning within fixed-effect groups.

use std::collections::HashMap;

/// Group bookkeeping from a within transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct WithinInfo {
    /// groups with two or more rows
    pub groups: usize,
    /// rows that are alone in their group; they are all-zero after demeaning
    pub singleton_rows: Vec<bool>,
}

impl WithinInfo {
    pub fn singletons(&self) -> usize {
        self.singleton_rows.iter().filter(|&&s| s).count()
    }
}

/// Dense group index for each row, numbered by first appearance.
pub(crate) fn dense_ids(ids: &[u32]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let dense = ids
        .iter()
        .map(|id| {
            let next = map.len();
            *map.entry(*id).or_insert(next)
        })
        .collect();
    (dense, map.len())
}

/// Subtract group means from every column in place.
pub fn within_transform(columns: &mut [&mut [f64]], fe: &[u32]) -> WithinInfo {
    let (dense, n_groups) = dense_ids(fe);
    let mut counts = vec![0usize; n_groups];
    for &g in &dense {
        counts[g] += 1;
    }
    let mut sums = vec![0.0; n_groups];
    for col in columns.iter_mut() {
        assert_eq!(col.len(), fe.len(), "column length differs from fixed-effect ids");
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (v, &g) in col.iter().zip(&dense) {
            sums[g] += v;
        }
        for (s, &c) in sums.iter_mut().zip(&counts) {
            *s /= c as f64;
        }
        for (v, &g) in col.iter_mut().zip(&dense) {
            *v = if counts[g] == 1 { 0.0 } else { *v - sums[g] };
        }
    }
    WithinInfo {
        groups: counts.iter().filter(|&&c| c > 1).count(),
        singleton_rows: dense.iter().map(|&g| counts[g] == 1).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_demeaning() {
        let mut x = vec![1.0, 3.0, 5.0, 7.0];
        let info = within_transform(&mut [&mut x], &[1, 1, 2, 2]);
        assert_eq!(x, vec![-1.0, 1.0, -1.0, 1.0]);
        assert_eq!(info.groups, 2);
        assert_eq!(info.singletons(), 0);
    }

    #[test]
    fn single_group_and_idempotence() {
        let mut x: Vec<f64> = (0..9).map(|i| (i as f64).sin() * 3.0 + 1.0).collect();
        within_transform(&mut [&mut x], &[4; 9]);
        assert!(x.iter().sum::<f64>().abs() < 1e-12);
        let ids = [1, 2, 2, 3, 3, 3, 1, 2, 3];
        let mut once = x.clone();
        within_transform(&mut [&mut once], &ids);
        let mut twice = once.clone();
        within_transform(&mut [&mut twice], &ids);
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn singletons_zeroed_and_flagged() {
        let mut x = vec![2.0, 4.0, 9.0];
        let info = within_transform(&mut [&mut x], &[1, 1, 7]);
        assert_eq!(x, vec![-1.0, 1.0, 0.0]);
        assert_eq!(info.singleton_rows, vec![false, false, true]);
        assert_eq!(info.groups, 1);
    }
}

//! One-way ANOVA intraclass correlation.

use crate::error::{Error, Result};

/// ANOVA ICC of `y` split into contiguous groups of the given sizes, using the
/// unbalanced-design group size `n0 = (N - sum n_j^2 / N) / (J - 1)`.
pub fn anova_icc(y: &[f64], sizes: &[usize]) -> Result<f64> {
    let n: usize = sizes.iter().sum();
    if n != y.len() {
        return Err(Error::Precondition(format!("group sizes sum to {n}, data has {}", y.len())));
    }
    let j = sizes.len();
    if j < 2 || n <= j {
        return Err(Error::Precondition("need at least two groups and some replication".into()));
    }
    let nf = n as f64;
    let grand = y.iter().sum::<f64>() / nf;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    let mut start = 0;
    let mut sum_sq_sizes = 0.0;
    for &s in sizes {
        if s == 0 {
            return Err(Error::Precondition("empty group".into()));
        }
        let g = &y[start..start + s];
        let m = g.iter().sum::<f64>() / s as f64;
        ssb += s as f64 * (m - grand) * (m - grand);
        ssw += g.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
        sum_sq_sizes += (s * s) as f64;
        start += s;
    }
    let msb = ssb / (j - 1) as f64;
    let msw = ssw / (nf - j as f64);
    let n0 = (nf - sum_sq_sizes / nf) / (j - 1) as f64;
    let denom = msb + (n0 - 1.0) * msw;
    if denom == 0.0 {
        return Err(Error::Degenerate("outcome is constant".into()));
    }
    Ok((msb - msw) / denom)
}

/// Balanced design of `n_groups` groups of size `k`.
pub fn anova_icc_balanced(y: &[f64], k: usize) -> Result<f64> {
    if k == 0 || !y.len().is_multiple_of(k) {
        return Err(Error::Precondition("data length is not a multiple of the group size".into()));
    }
    anova_icc(y, &vec![k; y.len() / k])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_clustering() {
        let y = [1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        assert!((anova_icc_balanced(&y, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_value() {
        // groups (1,2,3) and (4,5,9): MSB = 24/1, MSW = (2 + 14)/4 = 4
        let icc = anova_icc_balanced(&[1.0, 2.0, 3.0, 4.0, 5.0, 9.0], 3).unwrap();
        assert!((icc - (24.0 - 4.0) / (24.0 + 2.0 * 4.0)).abs() < 1e-12);
    }

    #[test]
    fn unbalanced_reduces_to_balanced() {
        let y = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let a = anova_icc(&y, &[2, 2, 2]).unwrap();
        let b = anova_icc_balanced(&y, 2).unwrap();
        assert_eq!(a, b);
        assert!(anova_icc(&y, &[2, 2]).is_err());
        assert!(anova_icc(&[1.0; 4], &[2, 2]).is_err());
    }
}

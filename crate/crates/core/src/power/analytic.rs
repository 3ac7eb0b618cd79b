//! Closed-form design-effect and two-proportion power arithmetic.

use crate::error::{Error, Result};
use crate::normal;

/// `1 + (k - 1) icc`.
pub fn design_effect(k: usize, icc: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("cluster size must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&icc) {
        return Err(Error::Domain(format!("icc must lie in [0, 1), got {icc}")));
    }
    Ok(1.0 + (k - 1) as f64 * icc)
}

/// `ceil(base_n * de)`, ignoring float noise below 1e-9.
pub fn adjusted_n(base_n: u64, de: f64) -> Result<u64> {
    if base_n == 0 || !(de >= 1.0) {
        return Err(Error::Domain(format!("need base_n >= 1 and de >= 1, got {base_n} and {de}")));
    }
    Ok((base_n as f64 * de - 1e-9).ceil() as u64)
}

/// Two-sided pooled-variance normal approximation with `n_per_arm / de`
/// effective observations per arm.
pub fn analytic_power_two_prop(p0: f64, p1: f64, n_per_arm: f64, alpha: f64, de: f64) -> Result<f64> {
    for (name, p) in [("p0", p0), ("p1", p1)] {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("{name} must lie in (0, 1), got {p}")));
        }
    }
    if !(n_per_arm >= 2.0) || !(alpha > 0.0 && alpha < 1.0) || !(de >= 1.0) {
        return Err(Error::Domain("need n >= 2, alpha in (0, 1), de >= 1".into()));
    }
    let n_eff = n_per_arm / de;
    let pbar = 0.5 * (p0 + p1);
    let s0 = (2.0 * pbar * (1.0 - pbar) / n_eff).sqrt();
    let s1 = ((p0 * (1.0 - p0) + p1 * (1.0 - p1)) / n_eff).sqrt();
    let z = normal::quantile(1.0 - alpha / 2.0);
    let d = (p1 - p0).abs();
    Ok(normal::cdf((d - z * s0) / s1) + normal::cdf((-d - z * s0) / s1))
}

/// Smallest per-arm n (before the design effect) reaching `power`.
pub fn required_n_two_prop(p0: f64, p1: f64, alpha: f64, power: f64) -> Result<u64> {
    if p0 == p1 {
        return Err(Error::Domain("no sample size detects a zero difference".into()));
    }
    if !(power > alpha && power < 1.0) {
        return Err(Error::Domain(format!("power must lie in (alpha, 1), got {power}")));
    }
    let pw = |n: u64| analytic_power_two_prop(p0, p1, n as f64, alpha, 1.0);
    let mut hi = 2u64;
    while pw(hi)? < power {
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if pw(mid)? >= power {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_effect_values() {
        assert_eq!(design_effect(4, 0.0).unwrap(), 1.0);
        assert_eq!(design_effect(4, 0.30).unwrap(), 1.9);
        assert_eq!(design_effect(1, 0.7).unwrap(), 1.0);
        assert!(design_effect(0, 0.3).is_err());
        assert!(design_effect(4, 1.0).is_err());
    }

    #[test]
    fn adjusted_n_values() {
        assert_eq!(adjusted_n(100, 1.0).unwrap(), 100);
        assert_eq!(adjusted_n(5586, 1.9).unwrap(), 10_614);
        assert_eq!(adjusted_n(5585, 1.9).unwrap(), 10_612);
    }

    #[test]
    fn power_limits_and_monotonicity() {
        let a = analytic_power_two_prop(0.15, 0.15, 500.0, 0.05, 1.9).unwrap();
        assert!((a - 0.05).abs() < 1e-12);
        let big = analytic_power_two_prop(0.15, 0.16, 1e7, 0.05, 1.0).unwrap();
        assert!(1.0 - big < 1e-6);
        let mut last = 0.0;
        for n in [100.0, 400.0, 1600.0, 6400.0] {
            let p = analytic_power_two_prop(0.15, 0.2, n, 0.05, 1.9).unwrap();
            assert!(p >= last);
            last = p;
        }
        let mut last = 0.0;
        for p1 in [0.16, 0.18, 0.2, 0.25] {
            let p = analytic_power_two_prop(0.15, p1, 800.0, 0.05, 1.9).unwrap();
            assert!(p >= last);
            last = p;
        }
        let mut last = 1.0;
        for de in [1.0, 1.3, 1.9, 3.0] {
            let p = analytic_power_two_prop(0.15, 0.2, 800.0, 0.05, de).unwrap();
            assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn required_n_hits_target() {
        let n = required_n_two_prop(0.15, 0.225, 0.05, 0.8).unwrap();
        assert!(analytic_power_two_prop(0.15, 0.225, n as f64, 0.05, 1.0).unwrap() >= 0.8);
        assert!(analytic_power_two_prop(0.15, 0.225, (n - 1) as f64, 0.05, 1.0).unwrap() < 0.8);
    }
}

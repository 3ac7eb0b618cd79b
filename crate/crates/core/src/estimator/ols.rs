//! Least squares with absorbed fixed effects and CR1 cluster-robust covariance.

// index loops mirror the matrix algebra
#![allow(clippy::needless_range_loop)]

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use super::within::{dense_ids, within_transform};
use crate::error::{Error, Result};
use crate::linalg::{ColMatrix, OrderedQr};

pub const INTERCEPT: &str = "_cons";

/// Numeric regression input. Without fixed effects an intercept is added.
#[derive(Debug, Clone, Default)]
pub struct Design {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    /// absorbed group of each row
    pub fe: Option<Vec<u32>>,
    pub cluster: Vec<u32>,
}

impl Design {
    pub fn new(y: Vec<f64>, fe: Option<Vec<u32>>, cluster: Vec<u32>) -> Self {
        Design {
            names: Vec::new(),
            columns: Vec::new(),
            y,
            fe,
            cluster,
        }
    }

    pub fn push(&mut self, name: impl Into<String>, column: Vec<f64>) {
        self.names.push(name.into());
        self.columns.push(column);
    }

    pub fn nrows(&self) -> usize {
        self.y.len()
    }

    /// Keep only rows where `keep` is true.
    pub fn subset(&self, keep: &[bool]) -> Design {
        let pick = |v: &[f64]| v.iter().zip(keep).filter(|(_, &k)| k).map(|(x, _)| *x).collect::<Vec<_>>();
        let pick_u = |v: &[u32]| v.iter().zip(keep).filter(|(_, &k)| k).map(|(x, _)| *x).collect::<Vec<_>>();
        Design {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| pick(c)).collect(),
            y: pick(&self.y),
            fe: self.fe.as_deref().map(pick_u),
            cluster: pick_u(&self.cluster),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.y.len();
        if n == 0 {
            return Err(Error::Degenerate("no observations".into()));
        }
        if self.names.len() != self.columns.len() {
            return Err(Error::Precondition("column names and columns differ in number".into()));
        }
        let mut seen = HashSet::new();
        for (name, col) in self.names.iter().zip(&self.columns) {
            if !seen.insert(name.as_str()) || name == INTERCEPT {
                return Err(Error::Precondition(format!("duplicate or reserved column name `{name}`")));
            }
            if col.len() != n {
                return Err(Error::Precondition(format!("column `{name}` has {} rows, outcome has {n}", col.len())));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("column `{name}` has non-finite values")));
            }
        }
        if self.cluster.len() != n || self.fe.as_ref().is_some_and(|f| f.len() != n) {
            return Err(Error::Precondition("fixed-effect or cluster ids missing for some rows".into()));
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("outcome has non-finite values".into()));
        }
        Ok(())
    }

    /// Row order that depends only on row contents, so fits do not depend on
    /// how the data were ordered.
    fn canonical_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.y.len()).collect();
        let cmp = |&a: &usize, &b: &usize| -> Ordering {
            self.cluster[a]
                .cmp(&self.cluster[b])
                .then_with(|| match &self.fe {
                    Some(fe) => fe[a].cmp(&fe[b]),
                    None => Ordering::Equal,
                })
                .then_with(|| self.y[a].total_cmp(&self.y[b]))
                .then_with(|| {
                    self.columns
                        .iter()
                        .map(|c| c[a].total_cmp(&c[b]))
                        .find(|o| o.is_ne())
                        .unwrap_or(Ordering::Equal)
                })
        };
        order.sort_by(cmp);
        order
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub names: Vec<String>,
    /// zero for dropped columns
    pub coef: Vec<f64>,
    /// CR1 covariance; rows and columns of dropped terms are zero
    pub vcov: Vec<Vec<f64>>,
    pub dropped: Vec<String>,
    /// observations used (singletons excluded)
    pub n: usize,
    pub n_clusters: usize,
    /// non-singleton fixed-effect groups
    pub n_absorbed: usize,
    pub n_singletons: usize,
    /// parameter count in the small-sample factor
    pub k: usize,
    /// every fixed-effect group lies inside one cluster
    pub fe_nested: bool,
    pub small_sample_factor: f64,
    pub rss: f64,
}

impl FitResult {
    pub fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownCoefficient(name.to_string()))
    }

    pub fn is_dropped(&self, i: usize) -> bool {
        self.dropped.iter().any(|d| *d == self.names[i])
    }

    pub fn coef_of(&self, name: &str) -> Result<f64> {
        let i = self.index(name)?;
        if self.is_dropped(i) {
            return Err(Error::DroppedCoefficient(name.to_string()));
        }
        Ok(self.coef[i])
    }

    pub fn se_of(&self, name: &str) -> Result<f64> {
        let i = self.index(name)?;
        if self.is_dropped(i) {
            return Err(Error::DroppedCoefficient(name.to_string()));
        }
        Ok(self.vcov[i][i].sqrt())
    }

    /// Residual degrees of freedom for t and F reference distributions.
    pub fn df(&self) -> f64 {
        (self.n_clusters - 1) as f64
    }
}

/// OLS of `design.y` on `design.columns`, absorbing `design.fe`, with CR1
/// standard errors clustered on `design.cluster`.
pub fn fit(design: &Design) -> Result<FitResult> {
    design.validate()?;
    let first = design.y[0];
    if design.y.iter().all(|&v| v == first) {
        return Err(Error::Degenerate("outcome is constant".into()));
    }

    let order = design.canonical_order();
    let permute = |v: &[f64]| order.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let mut y = permute(&design.y);
    let mut columns: Vec<Vec<f64>> = design.columns.iter().map(|c| permute(c)).collect();
    let mut cluster: Vec<u32> = order.iter().map(|&i| design.cluster[i]).collect();
    let mut names = design.names.clone();

    let (n_absorbed, n_singletons, fe_nested) = match &design.fe {
        Some(fe) => {
            let fe: Vec<u32> = order.iter().map(|&i| fe[i]).collect();
            let nested = fe_nested_in(&fe, &cluster);
            let info = {
                let mut refs: Vec<&mut [f64]> = Vec::with_capacity(columns.len() + 1);
                refs.push(&mut y);
                refs.extend(columns.iter_mut().map(|c| c.as_mut_slice()));
                within_transform(&mut refs, &fe)
            };
            let keep: Vec<bool> = info.singleton_rows.iter().map(|s| !s).collect();
            let retain = |v: &mut Vec<f64>| {
                let mut it = keep.iter();
                v.retain(|_| *it.next().unwrap());
            };
            retain(&mut y);
            columns.iter_mut().for_each(retain);
            let mut it = keep.iter();
            cluster.retain(|_| *it.next().unwrap());
            (info.groups, info.singletons(), nested)
        }
        None => {
            names.insert(0, INTERCEPT.to_string());
            columns.insert(0, vec![1.0; y.len()]);
            (0, 0, false)
        }
    };

    let n = y.len();
    if n == 0 || columns.is_empty() {
        return Err(Error::Degenerate("design matrix is empty after absorbing fixed effects".into()));
    }
    let x = ColMatrix::from_columns(n, &columns)?;
    let qr = OrderedQr::new(x);
    let rank = qr.rank();
    if rank == 0 {
        return Err(Error::Degenerate("no regressor varies within fixed-effect groups".into()));
    }
    let coef = qr.solve(&y);
    let retained = qr.retained().to_vec();
    let mut resid = y.clone();
    for &j in &retained {
        crate::linalg::axpy(-coef[j], &columns[j], &mut resid);
    }
    let rss = crate::linalg::dot(&resid, &resid);

    // clusters are contiguous in canonical order
    let mut bounds = vec![0];
    for i in 1..n {
        if cluster[i] != cluster[i - 1] {
            bounds.push(i);
        }
    }
    bounds.push(n);
    let g = bounds.len() - 1;
    if g < 2 {
        return Err(Error::Inference(format!("{g} cluster(s); cluster-robust inference needs at least 2")));
    }
    let k = rank + if fe_nested { 0 } else { n_absorbed };
    if n <= k {
        return Err(Error::Degenerate(format!("{n} observations for {k} parameters")));
    }

    let scores: Vec<Vec<f64>> = bounds
        .par_windows(2)
        .map(|w| {
            retained
                .iter()
                .map(|&j| crate::linalg::dot(&columns[j][w[0]..w[1]], &resid[w[0]..w[1]]))
                .collect()
        })
        .collect();
    let mut meat = vec![vec![0.0; rank]; rank];
    for s in &scores {
        for a in 0..rank {
            for b in a..rank {
                meat[a][b] += s[a] * s[b];
            }
        }
    }
    for a in 0..rank {
        for b in 0..a {
            meat[a][b] = meat[b][a];
        }
    }
    let bread = qr.xtx_inverse();
    let factor = (g as f64 / (g - 1) as f64) * ((n - 1) as f64 / (n - k) as f64);
    let am = matmul(&bread, &meat);
    let sandwich = matmul(&am, &bread);

    let p = names.len();
    let mut vcov = vec![vec![0.0; p]; p];
    for a in 0..rank {
        for b in 0..rank {
            let v = factor * 0.5 * (sandwich[a][b] + sandwich[b][a]);
            vcov[retained[a]][retained[b]] = v;
        }
    }
    let dropped = qr.dropped().iter().map(|&j| names[j].clone()).collect();

    Ok(FitResult {
        names,
        coef,
        vcov,
        dropped,
        n,
        n_clusters: g,
        n_absorbed,
        n_singletons,
        k,
        fe_nested,
        small_sample_factor: factor,
        rss,
    })
}

fn fe_nested_in(fe: &[u32], cluster: &[u32]) -> bool {
    let (dense, groups) = dense_ids(fe);
    let mut owner: Vec<Option<u32>> = vec![None; groups];
    for (&g, &c) in dense.iter().zip(cluster) {
        match owner[g] {
            None => owner[g] = Some(c),
            Some(o) if o != c => return false,
            _ => {}
        }
    }
    true
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for (l, &ail) in a[i].iter().enumerate() {
            if ail == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += ail * b[l][j];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_pcg::Pcg64;

    fn noisy(n: usize, seed: u64) -> (Design, Pcg64) {
        let mut r = Pcg64::seed_from_u64(seed);
        let x1: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let x2: Vec<f64> = (0..n).map(|_| r.random::<f64>() - 0.5).collect();
        let y = x1
            .iter()
            .zip(&x2)
            .map(|(a, b)| 0.5 + 2.0 * a - b + r.random::<f64>() - 0.5)
            .collect();
        let mut d = Design::new(y, None, (0..n as u32).collect());
        d.push("x1", x1);
        d.push("x2", x2);
        (d, r)
    }

    #[test]
    fn noiseless_recovery() {
        let n = 50;
        let x1: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let x2: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos()).collect();
        let y = x1.iter().zip(&x2).map(|(a, b)| 1.5 - 0.7 * a + 3.0 * b).collect();
        let mut d = Design::new(y, None, (0..n as u32).map(|i| i / 5).collect());
        d.push("x1", x1);
        d.push("x2", x2);
        let f = fit(&d).unwrap();
        assert!((f.coef_of(INTERCEPT).unwrap() - 1.5).abs() < 1e-10);
        assert!((f.coef_of("x1").unwrap() + 0.7).abs() < 1e-10);
        assert!((f.coef_of("x2").unwrap() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn singleton_clusters_give_hc1() {
        let (d, _) = noisy(200, 3);
        let f = fit(&d).unwrap();
        // direct HC sandwich with the n/(n-k) factor
        let n = d.nrows();
        let xs: Vec<[f64; 3]> = (0..n).map(|i| [1.0, d.columns[0][i], d.columns[1][i]]).collect();
        let mut xtx = nalgebra::Matrix3::<f64>::zeros();
        let mut meat = nalgebra::Matrix3::<f64>::zeros();
        for (i, x) in xs.iter().enumerate() {
            let v = nalgebra::Vector3::from_row_slice(x);
            let e = d.y[i] - (f.coef[0] * x[0] + f.coef[1] * x[1] + f.coef[2] * x[2]);
            xtx += v * v.transpose();
            meat += v * v.transpose() * (e * e);
        }
        let inv = xtx.try_inverse().unwrap();
        let hc1 = inv * meat * inv * (n as f64 / (n - 3) as f64);
        for a in 0..3 {
            for b in 0..3 {
                let rel = (f.vcov[a][b] - hc1[(a, b)]).abs() / hc1[(a, b)].abs();
                assert!(rel < 1e-10, "({a},{b}) {rel}");
            }
        }
    }

    #[test]
    fn collinear_column_dropped_and_named() {
        let (mut d, _) = noisy(100, 4);
        let dup: Vec<f64> = d.columns[0].iter().map(|v| 2.0 * v).collect();
        d.push("x1_twice", dup);
        let f = fit(&d).unwrap();
        assert_eq!(f.dropped.len(), 1);
        assert!(matches!(f.coef_of(&f.dropped[0]), Err(Error::DroppedCoefficient(_))));
    }

    #[test]
    fn errors() {
        let (mut d, _) = noisy(30, 5);
        d.cluster = vec![1; 30];
        assert!(matches!(fit(&d), Err(Error::Inference(_))));
        let (mut d, _) = noisy(30, 5);
        d.y = vec![1.0; 30];
        assert!(matches!(fit(&d), Err(Error::Degenerate(_))));
    }

    #[test]
    fn permutation_invariance_is_bitwise() {
        let (d, mut r) = noisy(300, 6);
        let mut d = d;
        d.fe = Some((0..300).map(|i| i / 3).collect());
        d.cluster = (0..300).map(|i| i / 6).collect();
        let a = fit(&d).unwrap();
        let mut perm: Vec<usize> = (0..300).collect();
        for i in (1..300).rev() {
            perm.swap(i, r.random_range(0..=i));
        }
        let mut shuffled = Design::new(
            perm.iter().map(|&i| d.y[i]).collect(),
            Some(perm.iter().map(|&i| d.fe.as_ref().unwrap()[i]).collect()),
            perm.iter().map(|&i| d.cluster[i]).collect(),
        );
        for (name, col) in d.names.iter().zip(&d.columns) {
            shuffled.push(name.clone(), perm.iter().map(|&i| col[i]).collect());
        }
        let b = fit(&shuffled).unwrap();
        assert_eq!(a.coef, b.coef);
        assert_eq!(a.vcov, b.vcov);
        assert!(a.fe_nested);
    }
}

//! Linear combinations and joint Wald tests on a fitted model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use super::ols::FitResult;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LincomResult {
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaldResult {
    pub f: f64,
    pub q: usize,
    pub df: f64,
    pub p: f64,
}

/// Two-sided p-value of `t` under Student's t with `df` degrees of freedom.
pub fn t_pvalue(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.cdf(-t.abs())).min(1.0)
}

pub fn f_pvalue(f: f64, q: usize, df: f64) -> f64 {
    let dist = FisherSnedecor::new(q as f64, df).expect("positive degrees of freedom");
    dist.sf(f.max(0.0))
}

impl FitResult {
    fn weight_vector(&self, terms: &[(&str, f64)]) -> Result<Vec<f64>> {
        let mut c = vec![0.0; self.names.len()];
        for (name, w) in terms {
            c[self.index(name)?] += w;
        }
        Ok(c)
    }

    fn check_dropped(&self, c: &[f64]) -> Result<()> {
        if c.len() != self.names.len() {
            return Err(Error::Precondition(format!(
                "weight vector has {} entries, model has {} coefficients",
                c.len(),
                self.names.len()
            )));
        }
        if let Some(i) = (0..c.len()).find(|&i| c[i] != 0.0 && self.is_dropped(i)) {
            return Err(Error::DroppedCoefficient(self.names[i].clone()));
        }
        Ok(())
    }

    /// `c'b` with standard error `sqrt(c'Vc)` and a t(G - 1) p-value.
    pub fn lincom_vec(&self, c: &[f64]) -> Result<LincomResult> {
        self.check_dropped(c)?;
        let estimate: f64 = c.iter().zip(&self.coef).map(|(a, b)| a * b).sum();
        let mut var = 0.0;
        for (i, &ci) in c.iter().enumerate() {
            if ci == 0.0 {
                continue;
            }
            for (j, &cj) in c.iter().enumerate() {
                var += ci * self.vcov[i][j] * cj;
            }
        }
        let se = var.max(0.0).sqrt();
        let t = if se > 0.0 { estimate / se } else { 0.0 };
        Ok(LincomResult {
            estimate,
            se,
            t,
            p: t_pvalue(t, self.df()),
        })
    }

    pub fn lincom(&self, terms: &[(&str, f64)]) -> Result<LincomResult> {
        let c = self.weight_vector(terms)?;
        self.lincom_vec(&c)
    }

    /// Single coefficient as a lincom.
    pub fn test(&self, name: &str) -> Result<LincomResult> {
        self.lincom(&[(name, 1.0)])
    }

    /// F test of `R b = 0` against F(q, G - 1).
    pub fn wald_vec(&self, rows: &[Vec<f64>]) -> Result<WaldResult> {
        if rows.is_empty() {
            return Err(Error::Precondition("empty restriction set".into()));
        }
        for r in rows {
            self.check_dropped(r)?;
        }
        let q = rows.len();
        let p = self.names.len();
        let r = DMatrix::from_fn(q, p, |i, j| rows[i][j]);
        let v = DMatrix::from_fn(p, p, |i, j| self.vcov[i][j]);
        let b = DVector::from_column_slice(&self.coef);
        let rb = &r * b;
        let rvr = &r * v * r.transpose();
        let chol = rvr
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("restriction covariance R V R' is not positive definite".into()))?;
        let scale = rvr.diagonal().max();
        let min_pivot = chol.l().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v * v));
        if !(min_pivot > scale * 1e-12) {
            return Err(Error::Singular("restriction covariance R V R' is singular".into()));
        }
        let f = rb.dot(&chol.solve(&rb)) / q as f64;
        let df = self.df();
        Ok(WaldResult {
            f,
            q,
            df,
            p: f_pvalue(f, q, df),
        })
    }

    pub fn wald(&self, restrictions: &[Vec<(&str, f64)>]) -> Result<WaldResult> {
        let rows = restrictions
            .iter()
            .map(|r| self.weight_vector(r))
            .collect::<Result<Vec<_>>>()?;
        self.wald_vec(&rows)
    }

    /// Joint test that every named coefficient is zero.
    pub fn wald_zero(&self, names: &[String]) -> Result<WaldResult> {
        let rows: Vec<Vec<(&str, f64)>> = names.iter().map(|n| vec![(n.as_str(), 1.0)]).collect();
        self.wald(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::super::ols::{fit, Design};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_pcg::Pcg64;

    fn fitted() -> FitResult {
        let mut r = Pcg64::seed_from_u64(9);
        let n = 400;
        let x: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| r.random::<f64>()).collect()).collect();
        let y = (0..n)
            .map(|i| 0.3 * x[0][i] - 0.2 * x[1][i] + r.random::<f64>())
            .collect();
        let mut d = Design::new(y, Some((0..n as u32).map(|i| i / 4).collect()), (0..n as u32).map(|i| i / 8).collect());
        for (i, c) in x.into_iter().enumerate() {
            d.push(format!("x{i}"), c);
        }
        fit(&d).unwrap()
    }

    #[test]
    fn unit_and_zero_vectors() {
        let f = fitted();
        let l = f.test("x1").unwrap();
        assert_eq!(l.estimate, f.coef_of("x1").unwrap());
        assert!((l.se - f.vcov[1][1].sqrt()).abs() < 1e-15);
        let z = f.lincom_vec(&[0.0; 3]).unwrap();
        assert_eq!((z.estimate, z.se, z.t, z.p), (0.0, 0.0, 0.0, 1.0));
        assert!(matches!(f.test("nope"), Err(Error::UnknownCoefficient(_))));
    }

    #[test]
    fn single_restriction_f_is_t_squared() {
        let f = fitted();
        let l = f.lincom(&[("x0", 1.0), ("x2", -1.0)]).unwrap();
        let w = f.wald(&[vec![("x0", 1.0), ("x2", -1.0)]]).unwrap();
        assert!((w.f - l.t * l.t).abs() / w.f < 1e-10);
        assert!((w.p - l.p).abs() < 1e-8);
    }

    #[test]
    fn dependent_restrictions_are_singular() {
        let f = fitted();
        let r = vec![vec![("x0", 1.0)], vec![("x0", 2.0)]];
        assert!(matches!(f.wald(&r), Err(Error::Singular(_))));
    }
}

//! Column-major dense matrices and Householder QR with ordered column elimination.

// index loops mirror the matrix algebra
#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

/// Dense column-major matrix. Regression designs are tall and narrow, so
/// columns are the natural unit of work.
#[derive(Debug, Clone, PartialEq)]
pub struct ColMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl ColMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        ColMatrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn from_columns(nrows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(nrows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != nrows {
                return Err(Error::Precondition(format!(
                    "column {j} has {} rows, expected {nrows}",
                    c.len()
                )));
            }
            data.extend_from_slice(c);
        }
        Ok(ColMatrix {
            nrows,
            ncols: columns.len(),
            data,
        })
    }

    /// Build from row-major nested slices; handy in tests.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = ColMatrix::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                axpy(vj, self.col(j), &mut out);
            }
        }
        out
    }

    pub fn transpose_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.ncols).map(|j| dot(self.col(j), v)).collect()
    }
}

impl std::ops::Index<(usize, usize)> for ColMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[j * self.nrows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ColMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[j * self.nrows + i]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm2(x: &[f64]) -> f64 {
    // Scaled to avoid overflow on extreme inputs.
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v / scale) * (v / scale)).sum::<f64>().sqrt()
}

/// Householder QR factorisation with ordered column elimination.
///
/// Columns are taken in input order. A column is dropped when the part of it
/// orthogonal to the columns already kept is below `DEPENDENCE_TOL` times its
/// own norm, so the dropped set does not depend on column scale and a
/// regressor is only ever dropped in favour of earlier ones.
#[derive(Debug, Clone)]
pub struct OrderedQr {
    /// R in the upper triangle, reflector tails below the diagonal; one
    /// column per kept regressor.
    qr: ColMatrix,
    tau: Vec<f64>,
    /// kept original indices in order, then dropped ones
    perm: Vec<usize>,
    rank: usize,
}

/// Relative residual norm at or below which a column counts as dependent.
pub const DEPENDENCE_TOL: f64 = 1e-9;

impl OrderedQr {
    pub fn new(a: ColMatrix) -> Self {
        let (m, n) = (a.nrows, a.ncols);
        let mut qr = ColMatrix::zeros(m, n.min(m));
        let mut tau: Vec<f64> = Vec::new();
        let mut kept = Vec::new();
        let mut dropped = Vec::new();

        for c in 0..n {
            let mut col = a.col(c).to_vec();
            let r = kept.len();
            let original = norm2(&col);
            for (j, &t) in tau.iter().enumerate() {
                if t == 0.0 {
                    continue;
                }
                let v = &qr.col(j)[j + 1..];
                let w = col[j] + dot(v, &col[j + 1..]);
                col[j] -= t * w;
                axpy(-t * w, v, &mut col[j + 1..]);
            }
            let residual = if r < m { norm2(&col[r..]) } else { 0.0 };
            if original == 0.0 || residual <= DEPENDENCE_TOL * original {
                dropped.push(c);
                continue;
            }
            let alpha = col[r];
            let xnorm = norm2(&col[r + 1..]);
            let t = if xnorm == 0.0 {
                0.0
            } else {
                let beta = if alpha == 0.0 { -xnorm } else { -alpha.signum() * alpha.hypot(xnorm) };
                let scale = 1.0 / (alpha - beta);
                for v in &mut col[r + 1..] {
                    *v *= scale;
                }
                col[r] = beta;
                (beta - alpha) / beta
            };
            qr.col_mut(r).copy_from_slice(&col);
            tau.push(t);
            kept.push(c);
        }

        let rank = kept.len();
        kept.extend(dropped);
        OrderedQr {
            qr,
            tau,
            perm: kept,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Original indices of the kept columns, in input order.
    pub fn retained(&self) -> &[usize] {
        &self.perm[..self.rank]
    }

    /// Original indices of the columns judged collinear.
    pub fn dropped(&self) -> &[usize] {
        &self.perm[self.rank..]
    }

    pub fn r_diag(&self) -> Vec<f64> {
        (0..self.rank).map(|i| self.qr[(i, i)]).collect()
    }

    /// Overwrite `y` with `Q' y`.
    pub fn apply_qt(&self, y: &mut [f64]) {
        for (j, &t) in self.tau.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            let v = &self.qr.col(j)[j + 1..];
            let w = y[j] + dot(v, &y[j + 1..]);
            y[j] -= t * w;
            axpy(-t * w, v, &mut y[j + 1..]);
        }
    }

    /// Least-squares solution; coefficients of dropped columns are zero.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        let r = self.rank;
        let mut z = vec![0.0; r];
        for i in (0..r).rev() {
            let mut s = qty[i];
            for k in i + 1..r {
                s -= self.qr[(i, k)] * z[k];
            }
            z[i] = s / self.qr[(i, i)];
        }
        let mut beta = vec![0.0; self.perm.len()];
        for (i, &zi) in z.iter().enumerate() {
            beta[self.perm[i]] = zi;
        }
        beta
    }

    /// `(X_r' X_r)^{-1}` for the kept columns; row/column `i` belongs to
    /// original column `retained()[i]`.
    pub fn xtx_inverse(&self) -> Vec<Vec<f64>> {
        let r = self.rank;
        let mut rinv = vec![vec![0.0; r]; r];
        for j in 0..r {
            rinv[j][j] = 1.0 / self.qr[(j, j)];
            for i in (0..j).rev() {
                let mut s = 0.0;
                for k in i + 1..=j {
                    s += self.qr[(i, k)] * rinv[k][j];
                }
                rinv[i][j] = -s / self.qr[(i, i)];
            }
        }
        let mut out = vec![vec![0.0; r]; r];
        for i in 0..r {
            for j in i..r {
                let s: f64 = (j..r).map(|k| rinv[i][k] * rinv[j][k]).sum();
                out[i][j] = s;
                out[j][i] = s;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_system() {
        let a = ColMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let qr = OrderedQr::new(a);
        let beta = qr.solve(&[3.0, 5.0]);
        assert!((beta[0] - 0.8).abs() < 1e-14);
        assert!((beta[1] - 1.4).abs() < 1e-14);
        assert_eq!(qr.rank(), 2);
    }

    #[test]
    fn detects_duplicate_column() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                let x = i as f64;
                vec![1.0, x, 2.0 * x, x * x]
            })
            .collect();
        let qr = OrderedQr::new(ColMatrix::from_rows(&rows));
        assert_eq!(qr.rank(), 3);
        let dropped = qr.dropped();
        assert_eq!(dropped, &[2]);
    }

    #[test]
    fn later_column_is_dropped_regardless_of_scale() {
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let x = i as f64;
                vec![1e-3 * x, 1.0, 1e3 * x, (x * 0.7).sin()]
            })
            .collect();
        let qr = OrderedQr::new(ColMatrix::from_rows(&rows));
        assert_eq!(qr.retained(), &[0, 1, 3]);
        assert_eq!(qr.dropped(), &[2]);
        let beta = qr.solve(&rows.iter().map(|r| 2.0 * r[0] + r[3]).collect::<Vec<_>>());
        assert!((beta[0] - 2.0).abs() < 1e-9 && beta[2] == 0.0);
    }

    #[test]
    fn xtx_inverse_matches_direct() {
        let rows = vec![
            vec![1.0, 0.5, -1.0],
            vec![1.0, 1.5, 2.0],
            vec![1.0, -0.3, 0.7],
            vec![1.0, 2.2, -0.4],
            vec![1.0, 0.9, 1.1],
        ];
        let x = ColMatrix::from_rows(&rows);
        let qr = OrderedQr::new(x.clone());
        let inv = qr.xtx_inverse();
        let kept = qr.retained().to_vec();
        // (X'X) * inv == I in pivot order
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += dot(x.col(kept[i]), x.col(kept[k])) * inv[k][j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((s - target).abs() < 1e-12, "{s} at ({i},{j})");
            }
        }
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let qr = OrderedQr::new(ColMatrix::zeros(4, 2));
        assert_eq!(qr.rank(), 0);
        assert_eq!(qr.solve(&[1.0, 2.0, 3.0, 4.0]), vec![0.0, 0.0]);
    }
}

use nalgebra::DMatrix;

use super::table::{OccupationTaskTable, Task};
use crate::error::{Error, Result};
use crate::stats;

/// Determinant of the Pearson correlation matrix of `columns`: 1 for
/// orthogonal columns, 0 for exact collinearity.
pub fn correlation_determinant(columns: &[Vec<f64>]) -> Result<f64> {
    let q = columns.len();
    if q < 2 {
        return Err(Error::Precondition("need at least two columns".into()));
    }
    let mut corr = DMatrix::<f64>::identity(q, q);
    for i in 0..q {
        for j in i + 1..q {
            let r = stats::pearson(&columns[i], &columns[j])
                .ok_or_else(|| Error::Degenerate(format!("column {} or {} has zero variance", i, j)))?;
            corr[(i, j)] = r;
            corr[(j, i)] = r;
        }
    }
    Ok(corr.determinant().clamp(0.0, 1.0))
}

pub fn collinearity_determinant(table: &OccupationTaskTable) -> Result<f64> {
    let cols: Vec<Vec<f64>> = Task::ALL.iter().map(|&t| table.column(t)).collect();
    correlation_determinant(&cols).map_err(|e| match e {
        Error::Degenerate(_) => Error::Degenerate("a task column is constant".into()),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_column_is_singular() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 31) % 17) as f64).collect();
        let y: Vec<f64> = (0..50).map(|i| ((i * 13) % 11) as f64).collect();
        let det = correlation_determinant(&[x.clone(), y, x]).unwrap();
        assert!(det < 1e-12);
    }

    #[test]
    fn constant_column_errors() {
        assert!(correlation_determinant(&[vec![1.0, 2.0, 3.0], vec![1.0; 3]]).is_err());
    }
}

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest condition number accepted by [`solve`].
pub const MAX_CONDITION: f64 = 1e10;

pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 1.0;
    }
    let sv = a.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `a x = b` column by column, refusing ill-conditioned systems.
pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let condition = condition_number(a);
    if condition > MAX_CONDITION {
        return Err(Error::SingularSolve { condition });
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or(Error::SingularSolve { condition })
}

pub fn solve_vec(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let x = solve(a, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()))?;
    Ok(DVector::from_column_slice(x.as_slice()))
}

pub fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    solve(a, &DMatrix::identity(a.nrows(), a.ncols()))
}

use nalgebra::{Cholesky, DMatrix};

use super::pcg;
use crate::error::{check_len, Error, Result};
use crate::linops::{IndexSet, MeasurementOperator};

/// Least squares restricted to a known support `t`: solves
/// `A_T^T A_T z = A_T^T y` by CG and scatters `z` back into a length-`m`
/// vector.
pub fn oracle_ls(a: &MeasurementOperator, y: &[f64], t: &IndexSet) -> Result<Vec<f64>> {
    check_len("measurement vector", a.rows(), y.len())?;
    check_len("support universe", a.cols(), t.universe())?;
    let mut x = vec![0.0; a.cols()];
    if t.is_empty() {
        return Ok(x);
    }
    let at = a.restrict_columns(t)?;
    let k = at.cols();
    if k > at.rows() {
        return Err(Error::Singular(format!(
            "support of size {k} exceeds the {} measurements",
            at.rows()
        )));
    }
    let gram = at.gram();
    let g = DMatrix::from_row_slice(k, k, gram.data());
    let chol = Cholesky::new(g).ok_or_else(|| Error::Singular("A_T is rank deficient".into()))?;
    let l = chol.l_dirty().diagonal();
    if (l.min() / l.max()).powi(2) < 1e-12 {
        return Err(Error::Singular("A_T is numerically rank deficient".into()));
    }

    let rhs = at.adjoint(y)?;
    let out = pcg(
        |v| gram.forward(v),
        &rhs,
        None,
        1e-14,
        10 * k + 10,
    )?;
    if out.rel_residual > 1e-10 {
        return Err(Error::Singular(format!(
            "CG on the support normal equations stalled at {:.3e}",
            out.rel_residual
        )));
    }
    for (&i, v) in t.as_slice().iter().zip(&out.x) {
        x[i] = *v;
    }
    Ok(x)
}

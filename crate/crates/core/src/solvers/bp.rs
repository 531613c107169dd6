//! Basis pursuit `min ||x||_1  s.t.  A x = y`.

use super::{ipm, SolverOptions, SolverResult};
use crate::error::{check_len, Error, Result};
use crate::linops::MeasurementOperator;
use crate::vector::norm2;

pub fn solve_bp(a: &MeasurementOperator, y: &[f64], opts: &SolverOptions) -> Result<SolverResult> {
    opts.validate()?;
    check_len("measurement vector", a.rows(), y.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("measurements must be finite".into()));
    }
    if norm2(y) == 0.0 {
        return Ok(SolverResult::trivial_zero(a.cols(), y, 0.0, "y = 0"));
    }
    ipm::solve_l1(a, y, None, opts)
}

//! `min ||x||_1  s.t.  ||A x - y|| <= eps` as a second-order cone program.

use super::{ipm, solve_bp, Objective, RecoveryProblem, SolverOptions, SolverResult};
use crate::error::{Error, Result};
use crate::vector::{dot, norm2, norm_inf};

/// Lower bound on the optimal value from the residual direction: with
/// `nu = -r / ||A^T r||_inf`, `nu^T y - eps ||nu||` is dual feasible.
pub(crate) fn residual_dual_bound(r: &[f64], atr: &[f64], y: &[f64], epsilon: f64) -> f64 {
    let scale = norm_inf(atr);
    if scale == 0.0 {
        return 0.0;
    }
    ((-dot(r, y) - epsilon * norm2(r)) / scale).max(0.0)
}

pub fn solve_bpdn(problem: &RecoveryProblem<'_>, opts: &SolverOptions) -> Result<SolverResult> {
    problem.validate()?;
    opts.validate()?;
    if problem.objective != Objective::L1 {
        return Err(Error::InvalidArgument(
            "solve_bpdn needs an l1 objective".into(),
        ));
    }
    let (a, y, epsilon) = (problem.a, &problem.y, problem.epsilon);
    if epsilon == 0.0 {
        return solve_bp(a, y, opts);
    }
    if norm2(y) <= epsilon {
        return Ok(SolverResult::trivial_zero(
            a.cols(),
            y,
            epsilon,
            "x = 0 is feasible",
        ));
    }
    ipm::solve_l1(a, y, Some(epsilon), opts)
}

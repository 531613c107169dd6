//! Convex recovery programs: equality-constrained basis pursuit, basis
//! pursuit denoising and total-variation minimization, plus the
//! support-oracle least-squares baseline.
//!
//! BPDN and TV share a primal log-barrier method whose Newton systems are
//! reduced to the signal variables and solved matrix-free by Jacobi
//! preconditioned CG, so only `forward`/`adjoint` applications of the
//! measurement operator are needed. Basis pursuit is solved as a linear
//! program by a primal-dual interior point method.

mod banded;
mod bp;
mod bpdn;
mod ipm;
mod cg;
mod oracle;
mod soc;
mod tv;

use std::io::Write;

pub use bp::solve_bp;
pub use bpdn::solve_bpdn;
pub use cg::{pcg, CgOutcome};
pub use oracle::oracle_ls;
pub use tv::solve_tv;

use crate::error::{check_len, Error, Result};
use crate::linops::{Gradient2D, MeasurementOperator};
use crate::vector::{norm2, sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    L1,
    /// Isotropic total variation of a row-major `height x width` image.
    Tv { height: usize, width: usize },
}

/// `min objective(x)  s.t.  ||A x - y|| <= epsilon`.
#[derive(Debug, Clone)]
pub struct RecoveryProblem<'a> {
    pub a: &'a MeasurementOperator,
    pub y: Vec<f64>,
    pub epsilon: f64,
    pub objective: Objective,
}

impl<'a> RecoveryProblem<'a> {
    pub fn l1(a: &'a MeasurementOperator, y: Vec<f64>, epsilon: f64) -> Self {
        Self {
            a,
            y,
            epsilon,
            objective: Objective::L1,
        }
    }

    pub fn tv(
        a: &'a MeasurementOperator,
        y: Vec<f64>,
        epsilon: f64,
        height: usize,
        width: usize,
    ) -> Self {
        Self {
            a,
            y,
            epsilon,
            objective: Objective::Tv { height, width },
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        check_len("measurement vector", self.a.rows(), self.y.len())?;
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("measurements must be finite".into()));
        }
        if let Objective::Tv { height, width } = self.objective {
            check_len("image size (height * width)", self.a.cols(), height * width)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target duality gap, relative to the objective value.
    pub gap_tolerance: f64,
    /// Newton steps allowed per barrier stage.
    pub max_newton_iters: usize,
    /// Barrier parameter growth per stage.
    pub barrier_increase: f64,
    pub cg_tolerance: f64,
    /// `None` means `4 m`.
    pub cg_max_iters: Option<usize>,
    pub line_search_alpha: f64,
    pub line_search_beta: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tolerance: 1e-8,
            max_newton_iters: 50,
            barrier_increase: 10.0,
            cg_tolerance: 1e-8,
            cg_max_iters: None,
            line_search_alpha: 0.01,
            line_search_beta: 0.5,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gap_tolerance", self.gap_tolerance),
            ("cg_tolerance", self.cg_tolerance),
            ("line_search_alpha", self.line_search_alpha),
            ("line_search_beta", self.line_search_beta),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be > 0")));
            }
        }
        if !(self.barrier_increase > 1.0) {
            return Err(Error::InvalidArgument(
                "barrier_increase must be > 1".into(),
            ));
        }
        if self.max_newton_iters == 0 || self.cg_max_iters == Some(0) {
            return Err(Error::InvalidArgument("iteration limits must be >= 1".into()));
        }
        if self.line_search_alpha >= 0.5 || self.line_search_beta >= 1.0 {
            return Err(Error::InvalidArgument(
                "line search needs alpha < 1/2 and beta < 1".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn cg_limit(&self, m: usize) -> usize {
        self.cg_max_iters.unwrap_or(4 * m).max(1)
    }
}

/// One line of the iteration log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub stage: usize,
    pub newton_iter: usize,
    /// Relative duality gap estimate at this point.
    pub gap: f64,
    /// `||A x - y||`
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub x_sharp: Vec<f64>,
    pub objective_value: f64,
    pub residual_norm: f64,
    /// Duality gap relative to the objective value.
    pub duality_gap: f64,
    pub newton_iterations: usize,
    pub barrier_stages: usize,
    pub cg_iterations: usize,
    pub converged: bool,
    /// Radius actually enforced (differs from the request when `eps = 0` is
    /// relaxed for TV).
    pub epsilon_used: f64,
    pub log: Vec<IterationRecord>,
    pub message: String,
}

impl SolverResult {
    pub const CSV_HEADER: [&'static str; 8] = [
        "objective_value",
        "residual_norm",
        "duality_gap",
        "newton_iterations",
        "barrier_stages",
        "cg_iterations",
        "converged",
        "epsilon_used",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        use crate::harness::fmt_sig;
        vec![
            fmt_sig(self.objective_value),
            fmt_sig(self.residual_norm),
            fmt_sig(self.duality_gap),
            self.newton_iterations.to_string(),
            self.barrier_stages.to_string(),
            self.cg_iterations.to_string(),
            self.converged.to_string(),
            fmt_sig(self.epsilon_used),
        ]
    }

    /// Line-delimited `stage,newton_iter,gap,residual` records.
    pub fn write_log<W: Write>(&self, mut w: W) -> Result<()> {
        use crate::harness::fmt_sig;
        writeln!(w, "stage,newton_iter,gap,residual")?;
        for r in &self.log {
            writeln!(
                w,
                "{},{},{},{}",
                r.stage,
                r.newton_iter,
                fmt_sig(r.gap),
                fmt_sig(r.residual)
            )?;
        }
        Ok(())
    }

    pub(crate) fn trivial_zero(m: usize, y: &[f64], epsilon: f64, message: &str) -> Self {
        Self {
            x_sharp: vec![0.0; m],
            objective_value: 0.0,
            residual_norm: norm2(y),
            duality_gap: 0.0,
            newton_iterations: 0,
            barrier_stages: 0,
            cg_iterations: 0,
            converged: true,
            epsilon_used: epsilon,
            log: Vec::new(),
            message: message.into(),
        }
    }
}

/// Dispatches on the objective; `eps = 0` with an l1 objective goes to
/// [`solve_bp`].
pub fn solve(problem: &RecoveryProblem<'_>, opts: &SolverOptions) -> Result<SolverResult> {
    match problem.objective {
        Objective::L1 if problem.epsilon == 0.0 => solve_bp(problem.a, &problem.y, opts),
        Objective::L1 => solve_bpdn(problem, opts),
        Objective::Tv { .. } => solve_tv(problem, opts),
    }
}

pub fn l1_norm(x: &[f64]) -> f64 {
    crate::vector::norm1(x)
}

/// `sum_{i,j} sqrt((x[i+1][j] - x[i][j])^2 + (x[i][j+1] - x[i][j])^2)` with
/// zero differences across the last row and column.
pub fn tv_norm(x: &[f64], height: usize, width: usize) -> Result<f64> {
    let g = Gradient2D::new(height, width)?;
    let (dv, dh) = g.diffs(x)?;
    Ok(dv.iter().zip(&dh).map(|(a, b)| a.hypot(*b)).sum())
}

/// `||A x - y||`.
pub fn residual_norm(a: &MeasurementOperator, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(norm2(&sub(&a.forward(x)?, y)))
}

/// Largest `s > 0` with `a s^2 + b s + c < 0`, given `c < 0`.
pub(crate) fn max_step_quadratic(a: f64, b: f64, c: f64) -> f64 {
    debug_assert!(c < 0.0);
    if a == 0.0 {
        return if b > 0.0 { -c / b } else { f64::INFINITY };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        // a < 0 and never crosses zero
        return f64::INFINITY;
    }
    let sq = disc.sqrt();
    let sgn = if b >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (b + sgn * sq);
    let (r1, r2) = (q / a, c / q);
    [r1, r2]
        .into_iter()
        .filter(|r| *r > 0.0 && r.is_finite())
        .fold(f64::INFINITY, f64::min)
}

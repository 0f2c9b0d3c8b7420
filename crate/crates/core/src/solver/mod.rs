//! Embedded conic solver and SDPA interchange.
//!
//! [`solve`] runs an operator-splitting iteration on
//! `min cᵀx  s.t.  Ax + s = b,  s ∈ {0}ᵐ × S₊ⁿ¹ × … × S₊ⁿᵏ`.
//! An iteration costs one solve against a cached Cholesky factor, two sparse
//! products and one eigendecomposition per PSD block.

mod admm;
pub mod presolve;
pub mod psd;
pub mod sdpa;

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relaxation::ConicProblem;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    InfeasibleSuspect,
}

impl SolveStatus {
    pub fn is_optimal(self) -> bool {
        self == SolveStatus::Optimal
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::InfeasibleSuspect => "infeasible_suspect",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings<T> {
    pub max_iters: usize,
    /// Absolute tolerance on residuals, equality violation and negative eigenvalues.
    pub abs_tol: T,
    pub rel_tol: T,
    /// Initial step penalty `ρ`.
    pub penalty: T,
    /// Ruiz equilibration of the constraint matrix.
    pub scaling: bool,
    pub adaptive_penalty: bool,
    /// Anderson acceleration memory; `0` runs plain ADMM.
    pub acceleration_memory: usize,
    /// Over-relaxation factor in `(0, 2)`.
    pub relaxation: T,
    /// Proximal weight on the primal variable.
    pub sigma: T,
    /// Relative tolerance of the infeasibility certificate.
    pub infeasibility_tol: T,
    /// Iterations between termination checks.
    pub check_interval: usize,
    /// Keep the per-iteration fixed-point residual in [`SolveReport::history`].
    pub record_history: bool,
}

impl<T: Real> Default for SolverSettings<T> {
    fn default() -> Self {
        Self {
            max_iters: 50_000,
            abs_tol: T::lit(1e-7),
            rel_tol: T::lit(1e-6),
            penalty: T::one(),
            scaling: true,
            adaptive_penalty: true,
            acceleration_memory: 10,
            relaxation: T::lit(1.6),
            sigma: T::lit(1e-6),
            infeasibility_tol: T::lit(1e-5),
            check_interval: 10,
            record_history: false,
        }
    }
}

impl<T: Real> SolverSettings<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Numerical(format!("invalid solver setting: {what}")));
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if self.check_interval == 0 {
            return bad("check_interval must be positive");
        }
        if !(self.abs_tol > T::zero()) || !(self.rel_tol >= T::zero()) {
            return bad("tolerances must be positive");
        }
        if !(self.penalty > T::zero()) || !(self.sigma > T::zero()) {
            return bad("penalty and sigma must be positive");
        }
        if !(self.relaxation > T::zero() && self.relaxation < T::lit(2.0)) {
            return bad("relaxation must lie in (0, 2)");
        }
        Ok(())
    }
}

/// Outcome of [`solve`]; residuals refer to the returned (unscaled) point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport<T> {
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_objective: T,
    pub max_equality_residual: T,
    pub min_block_eigenvalue: T,
    pub primal_residual: T,
    pub dual_residual: T,
    pub final_penalty: T,
    pub seconds: f64,
    #[serde(skip)]
    pub history: Vec<T>,
}

/// Solves a [`ConicProblem`]; returns the primal point and a report.
///
/// Exact reductions from [`presolve::presolve`] run first. `MaxIters` returns
/// the best iterate seen at a termination check; non-finite iterates are
/// reported as [`Error::Numerical`].
pub fn solve<T: Real>(
    problem: &ConicProblem<T>,
    settings: &SolverSettings<T>,
) -> Result<(Vec<T>, SolveReport<T>)> {
    problem.validate()?;
    settings.validate()?;
    let start = Instant::now();
    let pre = presolve::presolve(problem);
    let outcome = if pre.infeasible {
        admm::Outcome {
            x: vec![T::zero(); pre.reduced.num_vars],
            status: SolveStatus::InfeasibleSuspect,
            iterations: 0,
            primal_residual: T::zero(),
            dual_residual: T::zero(),
            penalty: settings.penalty,
            history: Vec::new(),
        }
    } else if pre.reduced.num_vars == 0 {
        let x = pre.expand(&[]);
        let ok = problem.max_equality_residual(&x) <= settings.abs_tol
            && problem.min_block_eigenvalue(&x) >= -settings.abs_tol;
        admm::Outcome {
            x: Vec::new(),
            status: if ok { SolveStatus::Optimal } else { SolveStatus::InfeasibleSuspect },
            iterations: 0,
            primal_residual: T::zero(),
            dual_residual: T::zero(),
            penalty: settings.penalty,
            history: Vec::new(),
        }
    } else {
        admm::run(&pre.reduced, settings)?
    };
    let x = pre.expand(&outcome.x);
    let report = SolveReport {
        status: outcome.status,
        iterations: outcome.iterations,
        primal_objective: problem.objective_value(&x),
        max_equality_residual: problem.max_equality_residual(&x),
        min_block_eigenvalue: problem.min_block_eigenvalue(&x),
        primal_residual: outcome.primal_residual,
        dual_residual: outcome.dual_residual,
        final_penalty: outcome.penalty,
        seconds: start.elapsed().as_secs_f64(),
        history: outcome.history,
    };
    Ok((x, report))
}

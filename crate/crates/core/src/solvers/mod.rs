//! Structured covariance approximation over the admissible set
//! `{T ⪰ 0, T ∈ span(L)}` under several distances.
//!
//! Conic problems (transport, Stoica, nuclear norm, linearized log-deviation)
//! go through a scaled-form ADMM; the smooth likelihood and KL problems use a
//! metric-preconditioned descent with an Armijo line search that keeps every
//! iterate strictly positive definite.

mod admm;
mod descent;

pub use admm::{
    solve_coupling, solve_log_linear, solve_nuclear, solve_stoica, solve_transport,
    verify_nuclear_identity, NuclearSplit, TransportSolution,
};
pub use descent::{
    default_ml_init, ml_gradient, ml_objective, random_toeplitz_starts, solve_kl, solve_ml,
    solve_ml_from, MlSolution, StartOutcome, ML_RIDGES,
};

use crate::matops::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    /// The line search could not make progress before the stopping test passed.
    Stalled,
    Infeasible,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::Stalled => "stalled",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

/// Outcome of one solve.
///
/// For ADMM solvers the residuals are the usual primal `‖X − Z‖_F` and dual
/// `ρ‖Z − Z_prev‖_F`. Descent iterates are always feasible, so their primal
/// residual is zero and the dual residual is the gradient norm.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub t_star: SymMatrix,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmOptions {
    pub rho: f64,
    /// Relative to `max(‖T̂‖_F, 1)`.
    pub eps_primal: f64,
    /// Relative to `max(‖T̂‖_F, 1)`.
    pub eps_dual: f64,
    pub max_iters: usize,
    /// Rebalance `rho` when one residual dominates the other by 10x.
    pub adaptive_rho: bool,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        AdmmOptions {
            rho: 1.0,
            eps_primal: 1e-8,
            eps_dual: 1e-8,
            max_iters: 50_000,
            adaptive_rho: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentOptions {
    /// Stop when `‖∇f‖₂ ≤ grad_tol * max(‖T̂‖_F, 1)`.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub armijo: f64,
    pub shrink: f64,
    /// Iterates must keep `λ_min(T) > pd_floor * max(‖T̂‖_F, 1)`.
    pub pd_floor: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            grad_tol: 1e-7,
            max_iters: 2_000,
            armijo: 1e-4,
            shrink: 0.5,
            pd_floor: 1e-10,
        }
    }
}

pub(crate) fn scale_of(t_hat: &SymMatrix) -> f64 {
    t_hat.frobenius_norm().max(1.0)
}

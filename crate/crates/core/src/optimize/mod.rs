//! Computation of locally D-optimal approximate designs: a certified
//! numerical solver, analytic fast paths for the two-occasion ratio model
//! and the symmetric three-occasion cases, exhaustive lattice search as an
//! independent oracle, and rounding of approximate designs to integer
//! allocations.

mod closed_form;
mod oracle;
mod round;
mod solver;

pub use closed_form::{
    line_j3_weight_ar1, line_j3_weight_rho0, ratio_optimal_design, ratio_optimal_weights,
    LINE_J3_FULL_SUPPORT_THRESHOLD,
};
pub use oracle::brute_force_oracle;
pub use round::round_exact;
pub use solver::solve_numeric;

use crate::covariance::CovarianceSpec;
use crate::equivalence::OptimalityCertificate;
use crate::error::{DesignError, Result};
use crate::information::DesignWeights;
use crate::model::{jacobian, GrowthCurve, TimeGrid};
use crate::scalar::{sc, Scalar};

/// One design problem: grid, mean-curve model, covariance components and
/// item budget.
#[derive(Debug, Clone)]
pub struct DesignProblem<S> {
    grid: TimeGrid<S>,
    model: GrowthCurve<S>,
    spec: CovarianceSpec<S>,
    total_items: S,
}

impl<S: Scalar> DesignProblem<S> {
    pub fn new(
        occasions: usize,
        model: GrowthCurve<S>,
        spec: CovarianceSpec<S>,
        total_items: S,
    ) -> Result<Self> {
        let grid = TimeGrid::new(occasions)?;
        // validates parameter count against the grid
        jacobian(&model, &grid)?;
        if !total_items.is_finite_val() || total_items <= S::zero() {
            return Err(DesignError::InvalidParameter(
                "item budget must be finite and positive".into(),
            ));
        }
        Ok(Self { grid, model, spec, total_items })
    }

    pub fn grid(&self) -> &TimeGrid<S> {
        &self.grid
    }

    pub fn occasions(&self) -> usize {
        self.grid.len()
    }

    pub fn model(&self) -> &GrowthCurve<S> {
        &self.model
    }

    pub fn spec(&self) -> &CovarianceSpec<S> {
        &self.spec
    }

    pub fn total_items(&self) -> S {
        self.total_items
    }

    /// Standardized variance ratio `a = I sigma_gamma^2 / sigma_eps^2`,
    /// the single quantity through which budget and variance components
    /// drive the optimal weights.
    pub fn variance_ratio_a(&self) -> S {
        self.total_items * self.spec.variance_ratio()
    }
}

/// Knobs of the numerical solver.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverOptions<S> {
    /// Overall iteration budget across all phases of one start.
    pub max_iters: usize,
    /// Stop once the certificate gap falls below this value.
    pub gap_tol: S,
    /// Number of random restarts added to the uniform start.
    pub restarts: usize,
    /// Seed for the restart draws.
    pub seed: u64,
}

impl<S: Scalar> Default for SolverOptions<S> {
    fn default() -> Self {
        Self { max_iters: 2000, gap_tol: sc(1e-9), restarts: 8, seed: 0 }
    }
}

impl<S: Scalar> SolverOptions<S> {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(DesignError::InvalidParameter(
                "iteration budget must be at least one".into(),
            ));
        }
        if !self.gap_tol.is_finite_val() || self.gap_tol <= S::zero() {
            return Err(DesignError::InvalidParameter(
                "gap tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Solver output: the best design found, its certificate and bookkeeping.
#[derive(Debug, Clone)]
pub struct Solution<S> {
    pub weights: DesignWeights<S>,
    pub certificate: OptimalityCertificate<S>,
    /// D-criterion value at the returned weights.
    pub criterion: S,
    /// Whether the certificate gap met the requested tolerance.
    pub converged: bool,
    /// Iterations spent over all starts and phases.
    pub iterations: usize,
}

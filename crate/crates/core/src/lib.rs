//! Locally D-optimal designs for repeated-measures growth curves.
//!
//! The library answers one planning question: given a mean growth curve
//! over equidistant testing occasions, correlated within-subject random
//! effects (compound symmetry or AR(1)) and a per-subject item budget,
//! how should the items be allocated across occasions so that the mean
//! parameters are estimated as precisely as possible in the D-sense?
//!
//! The pieces:
//! - [`model`]: growth-curve catalog and Jacobians,
//! - [`covariance`]: within-subject covariance structures,
//! - [`information`]: Fisher information, D-criterion and efficiencies,
//! - [`equivalence`]: optimality certificates from the sensitivity vector,
//! - [`optimize`]: numerical and closed-form solvers, lattice oracle and
//!   rounding to integer allocations.
//!
//! All numerics are generic over the scalar type through [`scalar::Scalar`];
//! the `*64` aliases below fix `f64`, which is what the command-line tools
//! use.

pub mod covariance;
pub mod equivalence;
pub mod error;
pub mod information;
pub mod model;
pub mod optimize;
pub mod scalar;

pub use covariance::{build_full_v, sigma_ar1, sigma_cs, CovKind, CovarianceSpec, ExactDesignLayout};
pub use equivalence::{
    check_optimality, efficiency_lower_bound, psi_vector, OptimalityCertificate,
};
pub use error::{DesignError, Result};
pub use information::{
    core_info, d_efficiency, fisher_info, fisher_info_parts, log_det_criterion, DesignWeights,
    InfoMatrix,
};
pub use model::{check_estimable, jacobian, mean_curve, CurveFamily, GrowthCurve, TimeGrid};
pub use optimize::{
    brute_force_oracle, line_j3_weight_ar1, line_j3_weight_rho0, ratio_optimal_design,
    ratio_optimal_weights, round_exact, solve_numeric, DesignProblem, Solution, SolverOptions,
};
pub use scalar::{sc, Scalar};

pub type TimeGrid64 = TimeGrid<f64>;
pub type GrowthCurve64 = GrowthCurve<f64>;
pub type CovarianceSpec64 = CovarianceSpec<f64>;
pub type DesignWeights64 = DesignWeights<f64>;
pub type InfoMatrix64 = InfoMatrix<f64>;
pub type OptimalityCertificate64 = OptimalityCertificate<f64>;
pub type DesignProblem64 = DesignProblem<f64>;
pub type SolverOptions64 = SolverOptions<f64>;
pub type Solution64 = Solution<f64>;

#[cfg(test)]
mod tests {
    use super::*;

    // the generic surface must stay usable at single precision
    #[test]
    fn f32_instantiation_smoke() {
        let model = GrowthCurve::<f32>::new(CurveFamily::StraightLine, vec![0.0, 1.0]).unwrap();
        let spec = CovarianceSpec::<f32>::new(CovKind::Cs, 1.0, 0.5, 1.0).unwrap();
        let w = DesignWeights::<f32>::uniform(3, 12.0).unwrap();
        let crit32 = log_det_criterion(&w, &model, &spec).unwrap();

        let model64 = GrowthCurve64::new(CurveFamily::StraightLine, vec![0.0, 1.0]).unwrap();
        let spec64 = CovarianceSpec64::new(CovKind::Cs, 1.0, 0.5, 1.0).unwrap();
        let w64 = DesignWeights64::uniform(3, 12.0).unwrap();
        let crit64 = log_det_criterion(&w64, &model64, &spec64).unwrap();

        assert!((crit32 as f64 - crit64).abs() < 1e-4);
    }
}

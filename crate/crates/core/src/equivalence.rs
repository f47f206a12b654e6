//! Optimality certification via the sensitivity vector psi.
//!
//! For a design with weights `w` and occasion information `M0 = diag(I w_j)`,
//! `psi_j` is the j-th diagonal entry of
//! `(sigma_eps^2 I + Sigma M0)^{-1} A M^{-1} A^T (sigma_eps^2 I + M0 Sigma)^{-1}`.
//! A design is locally D-optimal exactly when every `I psi_j` is at most the
//! weighted mean `sum_l w_l I psi_l`, with equality on the support. The same
//! quantities are the directional derivatives of the criterion, so they double
//! as the ascent direction and stopping rule of the numerical solver.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::covariance::CovarianceSpec;
use crate::error::{DesignError, Result};
use crate::information::{fisher_info_parts, DesignWeights};
use crate::model::{jacobian, GrowthCurve, TimeGrid};
use crate::scalar::{sc, Scalar};

/// Weights below this are treated as structural zeros when checking the
/// equality clause on the support.
pub const SUPPORT_EPS: f64 = 1e-10;

/// Default gap tolerance for optimality checks.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Outcome of an equivalence-theorem check.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimalityCertificate<S> {
    /// Sensitivity values `psi_j`.
    pub psi: Vec<S>,
    /// Weighted mean `sum_l w_l I psi_l`.
    pub avg: S,
    /// Criterion-scale optimality gap
    /// `sigma_eps^2 (max_j I psi_j - avg)`; nonnegative up to roundoff.
    pub gap: S,
    /// Whether the gap is within the requested tolerance.
    pub optimal: bool,
    /// Certified lower bound `exp(-gap / p)` on the D-efficiency.
    pub eff_lower_bound: S,
    /// Largest deviation `sigma_eps^2 |I psi_j - avg|` over the support.
    pub support_deviation: S,
    /// Support occasions whose deviation exceeds the tolerance.
    pub support_violations: Vec<usize>,
    /// Tolerance the check was run at.
    pub tol: S,
}

/// Derivative information at a design: sensitivities plus the matrices
/// needed for second-order steps.
pub(crate) struct Sensitivity<S> {
    /// D-criterion value at the design.
    pub logdet: S,
    /// psi as a vector.
    pub psi: DVector<S>,
    /// `Q = X M^{-1} X^T` with `X = (sigma_eps^2 I + Sigma M0)^{-1} A`.
    pub q: DMatrix<S>,
    /// `U = (sigma_eps^2 I + Sigma M0)^{-1} Sigma`.
    pub u: Option<DMatrix<S>>,
}

/// Validation-free sensitivity computation; `None` when the information
/// matrix is singular.
pub(crate) fn sensitivity_raw<S: Scalar>(
    weights: &[S],
    total: S,
    a: &DMatrix<S>,
    sigma: &DMatrix<S>,
    sigma_eps_sq: S,
    second_order: bool,
) -> Option<Sensitivity<S>> {
    let (m, logdet) = crate::information::info_raw(weights, total, a, sigma, sigma_eps_sq)?;
    if !logdet.is_finite_val() {
        return None;
    }
    let j = weights.len();
    // S = sigma_eps^2 I + Sigma diag(I w_j), column-scaled
    let mut s_mat = DMatrix::from_fn(j, j, |r, c| sigma[(r, c)] * total * weights[c]);
    for d in 0..j {
        s_mat[(d, d)] += sigma_eps_sq;
    }
    let lu = s_mat.lu();
    let x = lu.solve(a)?;
    let chol = Cholesky::new(m)?;
    let k = chol.solve(&x.transpose());
    let mut q = &x * k;
    // Q is symmetric by construction; restore it exactly
    let half = S::one() / sc(2.0);
    for r in 0..j {
        for c in 0..r {
            let avg = (q[(r, c)] + q[(c, r)]) * half;
            q[(r, c)] = avg;
            q[(c, r)] = avg;
        }
    }
    let psi = DVector::from_fn(j, |r, _| q[(r, r)].max(S::zero()));
    let u = if second_order { Some(lu.solve(sigma)?) } else { None };
    Some(Sensitivity { logdet, psi, q, u })
}

/// Computes psi from explicit parts with full input checking.
pub(crate) fn sensitivity_parts<S: Scalar>(
    design: &DesignWeights<S>,
    a: &DMatrix<S>,
    sigma: &DMatrix<S>,
    sigma_eps_sq: S,
    second_order: bool,
) -> Result<Sensitivity<S>> {
    let info = fisher_info_parts(design, a, sigma, sigma_eps_sq)?;
    if info.singular() {
        return Err(DesignError::Certificate(
            "design has singular information; psi is undefined".into(),
        ));
    }
    sensitivity_raw(
        design.weights(),
        design.total_items(),
        a,
        sigma,
        sigma_eps_sq,
        second_order,
    )
    .ok_or_else(|| {
        DesignError::Certificate("information matrix is numerically indefinite".into())
    })
}

/// Sensitivity values `psi_j` of a design; errors when the information
/// matrix is singular.
pub fn psi_vector<S: Scalar>(
    design: &DesignWeights<S>,
    model: &GrowthCurve<S>,
    spec: &CovarianceSpec<S>,
) -> Result<DVector<S>> {
    let grid = TimeGrid::new(design.len())?;
    let a = jacobian(model, &grid)?;
    let sigma = spec.sigma_matrix(design.len());
    Ok(sensitivity_parts(design, &a, &sigma, spec.sigma_eps_sq(), false)?.psi)
}

pub(crate) fn certificate_from_psi<S: Scalar>(
    design: &DesignWeights<S>,
    psi: &DVector<S>,
    p: usize,
    sigma_eps_sq: S,
    tol: S,
) -> OptimalityCertificate<S> {
    let total = design.total_items();
    let i_psi: Vec<S> = psi.iter().map(|&v| total * v).collect();
    let avg = design
        .weights()
        .iter()
        .zip(&i_psi)
        .fold(S::zero(), |acc, (&w, &v)| acc + w * v);
    let max = i_psi.iter().copied().fold(S::neg_inf(), |a, b| a.max(b));
    let gap = sigma_eps_sq * (max - avg);
    let support_eps = sc::<S>(SUPPORT_EPS);
    let mut support_deviation = S::zero();
    let mut support_violations = Vec::new();
    for (j, (&w, &v)) in design.weights().iter().zip(&i_psi).enumerate() {
        if w > support_eps {
            let dev = (sigma_eps_sq * (v - avg)).abs();
            support_deviation = support_deviation.max(dev);
            if dev > tol {
                support_violations.push(j);
            }
        }
    }
    let optimal = gap <= tol;
    let eff_lower_bound = bound_from_gap(gap, p);
    OptimalityCertificate {
        psi: psi.iter().copied().collect(),
        avg,
        gap,
        optimal,
        eff_lower_bound,
        support_deviation,
        support_violations,
        tol,
    }
}

fn bound_from_gap<S: Scalar>(gap: S, p: usize) -> S {
    (-gap / sc::<S>(p as f64)).exp().min(S::one())
}

/// Runs the equivalence-theorem check at the given gap tolerance.
pub fn check_optimality<S: Scalar>(
    design: &DesignWeights<S>,
    model: &GrowthCurve<S>,
    spec: &CovarianceSpec<S>,
    tol: S,
) -> Result<OptimalityCertificate<S>> {
    if !tol.is_finite_val() || tol <= S::zero() {
        return Err(DesignError::InvalidParameter(
            "tolerance must be positive".into(),
        ));
    }
    let psi = psi_vector(design, model, spec)?;
    Ok(certificate_from_psi(
        design,
        &psi,
        model.param_count(),
        spec.sigma_eps_sq(),
        tol,
    ))
}

/// Certified efficiency lower bound `exp(-gap / p)` implied by a certificate.
///
/// Concavity of the criterion makes this a true lower bound on the
/// D-efficiency of the certified design relative to the optimum.
pub fn efficiency_lower_bound<S: Scalar>(cert: &OptimalityCertificate<S>, p: usize) -> S {
    bound_from_gap(cert.gap, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::CovKind;
    use crate::model::CurveFamily;
    use approx::assert_relative_eq;

    fn spec(kind: CovKind, v: f64, rho: f64, eps: f64) -> CovarianceSpec<f64> {
        CovarianceSpec::new(kind, v, rho, eps).unwrap()
    }

    #[test]
    fn fixed_effects_psi_reduces_to_normalized_variance() {
        // without random effects, I psi_j = d(t_j, xi) / sigma_eps^2 and the
        // balanced two-point line design is the classical D-optimum
        let design = DesignWeights::uniform(2, 10.0).unwrap();
        let model = GrowthCurve::new(CurveFamily::StraightLine, vec![0.0, 1.0]).unwrap();
        let s = spec(CovKind::Cs, 0.0, 0.0, 2.0);
        let psi = psi_vector(&design, &model, &s).unwrap();
        for j in 0..2 {
            assert_relative_eq!(10.0 * psi[j], 2.0 / 2.0, epsilon = 1e-12);
        }
        let cert = check_optimality(&design, &model, &s, 1e-8).unwrap();
        assert!(cert.optimal);
        assert!(cert.gap.abs() < 1e-12);
    }

    #[test]
    fn cs_uniform_unstructured_has_equal_sensitivities() {
        let design = DesignWeights::uniform(4, 12.0).unwrap();
        let model = GrowthCurve::new(CurveFamily::Unstructured, vec![0.0; 4]).unwrap();
        let s = spec(CovKind::Cs, 1.5, 0.6, 1.0);
        let psi = psi_vector(&design, &model, &s).unwrap();
        for j in 1..4 {
            assert_relative_eq!(psi[j], psi[0], epsilon = 1e-12);
        }
        let cert = check_optimality(&design, &model, &s, 1e-8).unwrap();
        assert!(cert.optimal);
        assert!(cert.support_violations.is_empty());
        assert!(cert.eff_lower_bound > 1.0 - 1e-8);
    }

    #[test]
    fn lopsided_unstructured_design_fails_the_check() {
        let design = DesignWeights::new(vec![0.5, 0.25, 0.25], 12.0).unwrap();
        let model = GrowthCurve::new(CurveFamily::Unstructured, vec![0.0; 3]).unwrap();
        let s = spec(CovKind::Cs, 1.0, 0.4, 1.0);
        let cert = check_optimality(&design, &model, &s, 1e-8).unwrap();
        assert!(!cert.optimal);
        assert!(cert.gap > 0.0);
    }

    #[test]
    fn ratio_closed_form_design_is_certified() {
        // interior optimum of the origin-line model at a = 100, rho = 0.5
        let a = 100.0;
        let rho = 0.5;
        let w2 = (a + 1.0) / (a + a * rho);
        let design = DesignWeights::new(vec![1.0 - w2, w2], 100.0).unwrap();
        let model = GrowthCurve::new(CurveFamily::Ratio, vec![1.0]).unwrap();
        let s = spec(CovKind::Cs, 1.0, rho, 1.0);
        let cert = check_optimality(&design, &model, &s, 1e-8).unwrap();
        assert!(cert.optimal, "gap = {}", cert.gap);
        assert!(cert.support_violations.is_empty());
    }

    #[test]
    fn gap_is_never_meaningfully_negative() {
        let design = DesignWeights::new(vec![0.7, 0.2, 0.1], 8.0).unwrap();
        let model = GrowthCurve::new(CurveFamily::StraightLine, vec![0.0, 1.0]).unwrap();
        let s = spec(CovKind::Ar1, 0.8, 0.3, 1.0);
        let cert = check_optimality(&design, &model, &s, 1e-8).unwrap();
        assert!(cert.gap >= -1e-12);
    }

    #[test]
    fn bound_values() {
        let mut cert = OptimalityCertificate {
            psi: vec![0.0; 3],
            avg: 0.0,
            gap: 0.0,
            optimal: true,
            eff_lower_bound: 1.0,
            support_deviation: 0.0,
            support_violations: vec![],
            tol: 1e-8,
        };
        assert_eq!(efficiency_lower_bound(&cert, 3), 1.0);
        cert.gap = 3.0 * std::f64::consts::LN_2;
        assert_relative_eq!(efficiency_lower_bound(&cert, 3), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn singular_design_yields_certificate_error() {
        let design = DesignWeights::new(vec![1.0, 0.0, 0.0], 10.0).unwrap();
        let model = GrowthCurve::new(CurveFamily::StraightLine, vec![0.0, 1.0]).unwrap();
        let s = spec(CovKind::Cs, 1.0, 0.5, 1.0);
        assert!(matches!(
            check_optimality(&design, &model, &s, 1e-8),
            Err(DesignError::Certificate(_))
        ));
    }

    #[test]
    fn zero_tolerance_is_rejected() {
        let design = DesignWeights::uniform(2, 4.0).unwrap();
        let model = GrowthCurve::new(CurveFamily::Unstructured, vec![0.0, 0.0]).unwrap();
        let s = spec(CovKind::Cs, 1.0, 0.5, 1.0);
        assert!(check_optimality(&design, &model, &s, 0.0).is_err());
    }
}

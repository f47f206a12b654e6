//! Analytic optimal weights for the cases that admit closed forms: the
//! two-occasion ratio model and the symmetric three-occasion designs whose
//! first weight solves a cubic equation.

use crate::error::{DesignError, Result};
use crate::information::DesignWeights;
use crate::scalar::{sc, Scalar};

/// Below `a = 2 (sqrt(2) - 1)` the three-occasion line design stays on the
/// two endpoints; above it all three occasions carry weight.
pub const LINE_J3_FULL_SUPPORT_THRESHOLD: f64 = 0.8284271247461903;

fn validate_a_rho<S: Scalar>(a: S, rho: Option<S>) -> Result<()> {
    if !a.is_finite_val() || a < S::zero() {
        return Err(DesignError::InvalidParameter(
            "variance ratio a must be finite and nonnegative".into(),
        ));
    }
    if let Some(r) = rho {
        if !r.is_finite_val() || r < S::zero() || r > S::one() {
            return Err(DesignError::InvalidParameter(
                "correlation must lie in [0, 1]".into(),
            ));
        }
    }
    Ok(())
}

/// Optimal weights `(w_1, w_2)` of the ratio model on two occasions.
///
/// All items go to the effective second occasion unless `a rho > 1`, in
/// which case the offset occasion receives `(a rho - 1) / (a + a rho)`.
pub fn ratio_optimal_weights<S: Scalar>(a: S, rho: S) -> Result<[S; 2]> {
    validate_a_rho(a, Some(rho))?;
    if a * rho > S::one() {
        let denom = a + a * rho;
        Ok([(a * rho - S::one()) / denom, (a + S::one()) / denom])
    } else {
        Ok([S::zero(), S::one()])
    }
}

/// [`ratio_optimal_weights`] packaged as a design with the given budget.
pub fn ratio_optimal_design<S: Scalar>(a: S, rho: S, total_items: S) -> Result<DesignWeights<S>> {
    let w = ratio_optimal_weights(a, rho)?;
    let sum = w[0] + w[1];
    DesignWeights::new(vec![w[0] / sum, w[1] / sum], total_items)
}

/// Root finder for the cubic fast paths: bisection on `(0, 1/2]` to 1e-12,
/// with a scan that rejects brackets containing several roots.
fn bisect_unique_root<S: Scalar>(f: impl Fn(S) -> S, fallback: S) -> Result<S> {
    let lo = sc::<S>(1e-9);
    let hi = sc::<S>(0.5);
    let scan_points = 200;
    let mut sign_changes = 0;
    let mut prev = f(lo);
    for k in 1..=scan_points {
        let t = lo + (hi - lo) * sc::<S>(k as f64 / scan_points as f64);
        let cur = f(t);
        if prev != S::zero() && cur != S::zero() && (prev > S::zero()) != (cur > S::zero()) {
            sign_changes += 1;
        }
        prev = cur;
    }
    if sign_changes > 1 {
        return Err(DesignError::Numeric(format!(
            "cubic has {sign_changes} sign changes in (0, 1/2]; root is ambiguous"
        )));
    }
    let (mut lo_v, mut hi_v) = (f(lo), f(hi));
    if lo_v == S::zero() {
        return Ok(lo);
    }
    if hi_v == S::zero() {
        return Ok(hi);
    }
    if (lo_v > S::zero()) == (hi_v > S::zero()) {
        // no sign change: boundary optimum (roundoff at the regime edge)
        return Ok(fallback);
    }
    let mut a = lo;
    let mut b = hi;
    let tol = sc::<S>(1e-12);
    while b - a > tol {
        let mid = (a + b) / sc(2.0);
        let fm = f(mid);
        if fm == S::zero() {
            return Ok(mid);
        }
        if (fm > S::zero()) == (lo_v > S::zero()) {
            a = mid;
            lo_v = fm;
        } else {
            b = mid;
            hi_v = fm;
        }
    }
    let _ = hi_v;
    Ok((a + b) / sc(2.0))
}

/// Optimal endpoint weight `w_1` of the symmetric three-occasion straight
/// line design with uncorrelated random effects.
///
/// Returns `1/2` for `a <= 2 (sqrt(2) - 1)`; otherwise the root of
/// `18 a^2 w^3 - (20 a^2 + 18 a) w^2 + 5 (a^2 + a) w + a + 1` in `(0, 1/2]`.
pub fn line_j3_weight_rho0<S: Scalar>(a: S) -> Result<S> {
    validate_a_rho(a, None)?;
    if a <= sc(LINE_J3_FULL_SUPPORT_THRESHOLD) {
        return Ok(S::one() / sc(2.0));
    }
    let a2 = a * a;
    let cubic = |w: S| {
        sc::<S>(18.0) * a2 * w * w * w - (sc::<S>(20.0) * a2 + sc::<S>(18.0) * a) * w * w
            + sc::<S>(5.0) * (a2 + a) * w
            + a
            + S::one()
    };
    bisect_unique_root(cubic, S::one() / sc(2.0))
}

/// Optimal endpoint weight `w_1` for three occasions equal to the parameter
/// count under AR(1) correlation, where the optimal design is symmetric
/// `(w_1, 1 - 2 w_1, w_1)`.
///
/// Root of `(a^2 w (1-w) + a + 1)(1 - 3w) - a^2 rho^2 w (1-2w)^2 + a^2 rho^4 w^3`
/// in `(0, 1/2]`; equals `1/3` at `rho = 0` and `rho = 1`.
pub fn line_j3_weight_ar1<S: Scalar>(a: S, rho: S) -> Result<S> {
    validate_a_rho(a, Some(rho))?;
    let a2 = a * a;
    let r2 = rho * rho;
    let r4 = r2 * r2;
    let one = S::one();
    let cubic = move |w: S| {
        let sym = (a2 * w * (one - w) + a + one) * (one - sc::<S>(3.0) * w);
        let twow = one - sc::<S>(2.0) * w;
        sym - a2 * r2 * w * twow * twow + a2 * r4 * w * w * w
    };
    bisect_unique_root(cubic, S::one() / sc(3.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ratio_uncorrelated_concentrates_on_second_occasion() {
        for a in [0.0, 0.5, 3.0, 1e6] {
            assert_eq!(ratio_optimal_weights(a, 0.0).unwrap(), [0.0, 1.0]);
        }
    }

    #[test]
    fn ratio_weight_limit_for_large_a() {
        let [_, w2] = ratio_optimal_weights(1e12, 0.5).unwrap();
        assert_relative_eq!(w2, 1.0 / 1.5, epsilon = 1e-9);
    }

    #[test]
    fn ratio_weight_at_a100() {
        let [w1, w2] = ratio_optimal_weights(100.0, 0.5).unwrap();
        assert_relative_eq!(w2, 101.0 / 150.0, epsilon = 1e-15);
        assert_relative_eq!(w1, 49.0 / 150.0, epsilon = 1e-15);
    }

    #[test]
    fn ratio_threshold_boundary() {
        // a rho = 1 exactly: still the vertex design
        assert_eq!(ratio_optimal_weights(2.0, 0.5).unwrap(), [0.0, 1.0]);
    }

    #[test]
    fn line_rho0_minimally_supported_below_threshold() {
        for a in [0.0, 0.5, LINE_J3_FULL_SUPPORT_THRESHOLD] {
            assert_eq!(line_j3_weight_rho0(a).unwrap(), 0.5);
        }
    }

    #[test]
    fn line_rho0_interior_above_threshold() {
        let w = line_j3_weight_rho0(0.9).unwrap();
        assert!(w < 0.5, "w = {w}");
        assert!(w > 0.45);
    }

    #[test]
    fn line_rho0_limit() {
        let w = line_j3_weight_rho0(1e6).unwrap();
        let limit = (10.0 - 10.0f64.sqrt()) / 18.0;
        assert!((w - limit).abs() < 1e-4, "w = {w}, limit = {limit}");
    }

    #[test]
    fn line_rho0_is_cubic_root() {
        let a = 10.0f64;
        let w = line_j3_weight_rho0(a).unwrap();
        let val = 18.0 * a * a * w.powi(3) - (20.0 * a * a + 18.0 * a) * w * w
            + 5.0 * (a * a + a) * w
            + a
            + 1.0;
        assert!(val.abs() < 1e-6, "residual {val}");
    }

    #[test]
    fn line_ar1_boundary_correlations_give_one_third() {
        for a in [0.5, 10.0, 200.0] {
            assert_relative_eq!(line_j3_weight_ar1(a, 0.0).unwrap(), 1.0 / 3.0, epsilon = 1e-11);
            assert_relative_eq!(line_j3_weight_ar1(a, 1.0).unwrap(), 1.0 / 3.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn line_ar1_dips_below_one_third_at_moderate_correlation() {
        let w = line_j3_weight_ar1(100.0, 0.5).unwrap();
        assert!(w < 1.0 / 3.0, "w = {w}");
        assert!(w > 0.25);
    }

    #[test]
    fn inputs_are_validated() {
        assert!(ratio_optimal_weights(-1.0, 0.5).is_err());
        assert!(ratio_optimal_weights(1.0, 1.5).is_err());
        assert!(line_j3_weight_rho0(f64::NAN).is_err());
        assert!(line_j3_weight_ar1(1.0, -0.2).is_err());
    }
}

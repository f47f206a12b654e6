//! Mean growth curves over the fixed testing grid and their Jacobians.
//!
//! Five curve families are supported: an unstructured per-occasion mean,
//! a ratio line through the origin, a straight line, a three-parameter
//! exponential saturation curve and a four-parameter logistic curve.

use nalgebra::{DMatrix, DVector};

use crate::error::{DesignError, Result};
use crate::information::DesignWeights;
use crate::scalar::{sc, Scalar};

/// Largest supported number of testing occasions.
pub const MAX_TIME_POINTS: usize = 64;

/// Relative singular-value cutoff for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Equidistant testing occasions `t_j = j - 1`, `j = 1..J`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid<S> {
    times: Vec<S>,
}

impl<S: Scalar> TimeGrid<S> {
    /// Grid with `j` occasions at times `0, 1, ..., j - 1`.
    pub fn new(j: usize) -> Result<Self> {
        if j == 0 {
            return Err(DesignError::InvalidParameter(
                "time grid needs at least one occasion".into(),
            ));
        }
        if j > MAX_TIME_POINTS {
            return Err(DesignError::Resource(format!(
                "time grid of {j} occasions exceeds the supported maximum {MAX_TIME_POINTS}"
            )));
        }
        let times = (0..j).map(|k| sc(k as f64)).collect();
        Ok(Self { times })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> &[S] {
        &self.times
    }
}

/// Curve family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveFamily {
    /// One free mean per occasion (`p = J`).
    Unstructured,
    /// Line through the origin, `mu_j = beta_0 t_j` (`p = 1`).
    Ratio,
    /// `mu_j = beta_0 + beta_1 t_j` (`p = 2`).
    StraightLine,
    /// Saturating exponential, `mu_j = beta_1 - (beta_1 - beta_0) exp(-beta_2 t_j)`.
    Exponential,
    /// Four-parameter logistic, `mu_j = beta_0 + (beta_1 - beta_0) / (1 + exp(-(beta_2 t_j + beta_3)))`.
    Logistic,
}

impl CurveFamily {
    /// Parameter count, where `None` means "one per occasion".
    pub fn fixed_len(self) -> Option<usize> {
        match self {
            CurveFamily::Unstructured => None,
            CurveFamily::Ratio => Some(1),
            CurveFamily::StraightLine => Some(2),
            CurveFamily::Exponential => Some(3),
            CurveFamily::Logistic => Some(4),
        }
    }
}

/// A mean-curve family together with its parameter vector.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GrowthCurve<S> {
    family: CurveFamily,
    beta: Vec<S>,
}

impl<S: Scalar> GrowthCurve<S> {
    /// Validates the parameter vector against the family constraints.
    ///
    /// Exponential and logistic curves require `beta_0 < beta_1` and
    /// `beta_2 > 0`.
    pub fn new(family: CurveFamily, beta: Vec<S>) -> Result<Self> {
        if beta.is_empty() {
            return Err(DesignError::InvalidModel(
                "parameter vector must be nonempty".into(),
            ));
        }
        if beta.iter().any(|b| !b.is_finite_val()) {
            return Err(DesignError::InvalidModel(
                "parameter vector must be finite".into(),
            ));
        }
        if let Some(expected) = family.fixed_len() {
            if beta.len() != expected {
                return Err(DesignError::InvalidModel(format!(
                    "{family:?} expects {expected} parameters, got {}",
                    beta.len()
                )));
            }
        }
        match family {
            CurveFamily::Exponential | CurveFamily::Logistic => {
                if beta[0] >= beta[1] {
                    return Err(DesignError::InvalidModel(
                        "saturation level beta_1 must exceed baseline beta_0".into(),
                    ));
                }
                if beta[2] <= S::zero() {
                    return Err(DesignError::InvalidModel(
                        "slope parameter beta_2 must be positive".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(Self { family, beta })
    }

    pub fn family(&self) -> CurveFamily {
        self.family
    }

    pub fn beta(&self) -> &[S] {
        &self.beta
    }

    /// Number of mean parameters `p`.
    pub fn param_count(&self) -> usize {
        self.beta.len()
    }

    fn check_grid(&self, grid: &TimeGrid<S>) -> Result<()> {
        let j = grid.len();
        let p = self.param_count();
        if self.family == CurveFamily::Unstructured && p != j {
            return Err(DesignError::InvalidModel(format!(
                "unstructured curve needs one parameter per occasion ({j}), got {p}"
            )));
        }
        if p > j {
            return Err(DesignError::InvalidModel(format!(
                "{p} parameters cannot be estimated from {j} occasions"
            )));
        }
        Ok(())
    }
}

/// Logistic response `1 / (1 + exp(-x))` evaluated without overflow.
fn sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

/// Population mean at every occasion of the grid.
pub fn mean_curve<S: Scalar>(model: &GrowthCurve<S>, grid: &TimeGrid<S>) -> Result<DVector<S>> {
    model.check_grid(grid)?;
    let b = model.beta();
    let values = grid.times().iter().enumerate().map(|(j, &t)| match model.family {
        CurveFamily::Unstructured => b[j],
        CurveFamily::Ratio => b[0] * t,
        CurveFamily::StraightLine => b[0] + b[1] * t,
        CurveFamily::Exponential => b[1] - (b[1] - b[0]) * (-b[2] * t).exp(),
        CurveFamily::Logistic => b[0] + (b[1] - b[0]) * sigmoid(b[2] * t + b[3]),
    });
    Ok(DVector::from_iterator(grid.len(), values))
}

/// Jacobian of the mean curve: row `j` holds the partial derivatives of
/// `mu_j` with respect to the parameters.
pub fn jacobian<S: Scalar>(model: &GrowthCurve<S>, grid: &TimeGrid<S>) -> Result<DMatrix<S>> {
    model.check_grid(grid)?;
    let j = grid.len();
    let p = model.param_count();
    let b = model.beta();
    let mut a = DMatrix::<S>::zeros(j, p);
    for (row, &t) in grid.times().iter().enumerate() {
        match model.family {
            CurveFamily::Unstructured => a[(row, row)] = S::one(),
            CurveFamily::Ratio => a[(row, 0)] = t,
            CurveFamily::StraightLine => {
                a[(row, 0)] = S::one();
                a[(row, 1)] = t;
            }
            CurveFamily::Exponential => {
                let decay = (-b[2] * t).exp();
                a[(row, 0)] = decay;
                a[(row, 1)] = S::one() - decay;
                a[(row, 2)] = t * (b[1] - b[0]) * decay;
            }
            CurveFamily::Logistic => {
                let s = sigmoid(-(b[2] * t + b[3]));
                let d_shift = (b[1] - b[0]) * s * (S::one() - s);
                a[(row, 0)] = s;
                a[(row, 1)] = S::one() - s;
                a[(row, 2)] = t * d_shift;
                a[(row, 3)] = d_shift;
            }
        }
    }
    Ok(a)
}

/// Whether the mean parameters are estimable under the given weights:
/// the rows of `a` at positively weighted occasions must have rank `p`.
pub fn check_estimable<S: Scalar>(a: &DMatrix<S>, w: &DesignWeights<S>) -> bool {
    let p = a.ncols();
    if a.nrows() != w.len() || p == 0 {
        return false;
    }
    if a.iter().any(|x| !x.is_finite_val()) {
        return false;
    }
    let support: Vec<usize> = (0..w.len()).filter(|&j| w.weights()[j] > S::zero()).collect();
    if support.len() < p {
        return false;
    }
    let rows = a.select_rows(support.iter());
    let singular_values = rows.svd(false, false).singular_values;
    let largest = singular_values.max();
    if !(largest > S::zero()) {
        return false;
    }
    let cutoff = sc::<S>(RANK_TOL) * largest;
    singular_values.iter().filter(|&&s| s > cutoff).count() == p
}

//! Per-subject Fisher information, the D-criterion and D-efficiencies.
//!
//! The core representation inverts a regularized J x J system,
//! `M0^{1/2} (sigma_eps^2 I + M0^{1/2} Sigma M0^{1/2})^{-1} M0^{1/2}`
//! with `M0 = diag(I w_j)`, which stays well defined when occasions carry
//! zero weight: their rows and columns of the result are exactly zero.

use nalgebra::{Cholesky, DMatrix};

use crate::covariance::CovarianceSpec;
use crate::error::{DesignError, Result};
use crate::model::{check_estimable, jacobian, GrowthCurve, TimeGrid, MAX_TIME_POINTS};
use crate::scalar::{sc, Scalar};

/// Fractional item allocation over the testing occasions.
///
/// Weights are nonnegative and sum to one; `total_items` is the per-subject
/// item budget `I`, so occasion `j` receives `I w_j` items.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DesignWeights<S> {
    w: Vec<S>,
    total_items: S,
}

impl<S: Scalar> DesignWeights<S> {
    pub fn new(w: Vec<S>, total_items: S) -> Result<Self> {
        if w.is_empty() || w.len() > MAX_TIME_POINTS {
            return Err(DesignError::InvalidParameter(format!(
                "weight vector length {} outside 1..={MAX_TIME_POINTS}",
                w.len()
            )));
        }
        if w.iter().any(|x| !x.is_finite_val() || *x < S::zero()) {
            return Err(DesignError::InvalidParameter(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum: S = w.iter().fold(S::zero(), |acc, &x| acc + x);
        let tol = sc::<S>(1e-12).max(S::default_epsilon() * sc(16.0 * w.len() as f64));
        if (sum - S::one()).abs() > tol {
            return Err(DesignError::InvalidParameter(format!(
                "weights must sum to one (off by {:?})",
                sum - S::one()
            )));
        }
        if !total_items.is_finite_val() || total_items <= S::zero() {
            return Err(DesignError::InvalidParameter(
                "item budget must be finite and positive".into(),
            ));
        }
        Ok(Self { w, total_items })
    }

    /// Equal weight on every occasion.
    pub fn uniform(j: usize, total_items: S) -> Result<Self> {
        if j == 0 {
            return Err(DesignError::InvalidParameter(
                "need at least one occasion".into(),
            ));
        }
        Self::new(vec![S::one() / sc(j as f64); j], total_items)
    }

    /// All weight on a single occasion.
    pub fn vertex(j: usize, index: usize, total_items: S) -> Result<Self> {
        if index >= j {
            return Err(DesignError::InvalidParameter(format!(
                "occasion index {index} out of range for {j} occasions"
            )));
        }
        let mut w = vec![S::zero(); j];
        w[index] = S::one();
        Self::new(w, total_items)
    }

    /// Weights proportional to integer counts, with the counts' total as budget.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(DesignError::InvalidParameter(
                "counts must have a positive total".into(),
            ));
        }
        let t = sc::<S>(total as f64);
        let w = counts.iter().map(|&c| sc::<S>(c as f64) / t).collect();
        Self::new(w, t)
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weights(&self) -> &[S] {
        &self.w
    }

    pub fn total_items(&self) -> S {
        self.total_items
    }

    /// Occasions with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.w.len()).filter(|&j| self.w[j] > S::zero()).collect()
    }
}

/// A p x p information matrix with its log-determinant and singularity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix<S> {
    m: DMatrix<S>,
    logdet: S,
    singular: bool,
}

impl<S: Scalar> InfoMatrix<S> {
    pub fn matrix(&self) -> &DMatrix<S> {
        &self.m
    }

    pub fn logdet(&self) -> S {
        self.logdet
    }

    pub fn singular(&self) -> bool {
        self.singular
    }

    pub fn order(&self) -> usize {
        self.m.nrows()
    }
}

/// Determinants at or below this value are treated as structurally singular.
fn det_floor<S: Scalar>() -> S {
    let t = S::from_f64(1e-300).unwrap_or_else(S::min_pos);
    if t > S::zero() {
        t
    } else {
        S::min_pos()
    }
}

fn symmetrize<S: Scalar>(m: &mut DMatrix<S>) {
    let half = S::one() / sc(2.0);
    for r in 0..m.nrows() {
        for c in 0..r {
            let avg = (m[(r, c)] + m[(c, r)]) * half;
            m[(r, c)] = avg;
            m[(c, r)] = avg;
        }
    }
}

/// Validation-free kernel behind [`core_info`]: assumes weights are a valid
/// simplex point and sigma a matching square matrix.
pub(crate) fn gram_raw<S: Scalar>(
    weights: &[S],
    total: S,
    sigma: &DMatrix<S>,
    sigma_eps_sq: S,
) -> Option<DMatrix<S>> {
    let j = weights.len();
    let scales: Vec<S> = weights.iter().map(|&wj| (total * wj).sqrt()).collect();
    let mut b = DMatrix::from_fn(j, j, |r, c| scales[r] * sigma[(r, c)] * scales[c]);
    for d in 0..j {
        b[(d, d)] += sigma_eps_sq;
    }
    let b_inv = b.lu().try_inverse()?;
    let mut g = DMatrix::from_fn(j, j, |r, c| scales[r] * b_inv[(r, c)] * scales[c]);
    symmetrize(&mut g);
    Some(g)
}

/// Log-determinant of a symmetric nonnegative-definite matrix, negative
/// infinity when it is numerically singular.
pub(crate) fn logdet_psd<S: Scalar>(m: &DMatrix<S>) -> S {
    let logdet = match Cholesky::new(m.clone()) {
        Some(chol) => {
            let two = sc::<S>(2.0);
            chol.l()
                .diagonal()
                .iter()
                .fold(S::zero(), |acc, &d| acc + two * d.ln())
        }
        None => S::neg_inf(),
    };
    if !logdet.is_finite_val() || logdet <= det_floor::<S>().ln() {
        S::neg_inf()
    } else {
        logdet
    }
}

/// Validation-free information matrix and log-determinant.
pub(crate) fn info_raw<S: Scalar>(
    weights: &[S],
    total: S,
    a: &DMatrix<S>,
    sigma: &DMatrix<S>,
    sigma_eps_sq: S,
) -> Option<(DMatrix<S>, S)> {
    let g = gram_raw(weights, total, sigma, sigma_eps_sq)?;
    let mut m = a.transpose() * (&g * a);
    symmetrize(&mut m);
    let logdet = logdet_psd(&m);
    Some((m, logdet))
}

/// Reduced information kernel `F^T V^{-1} F` of the per-subject model,
/// computed from the regularized J x J system.
pub fn core_info<S: Scalar>(
    design: &DesignWeights<S>,
    sigma: &DMatrix<S>,
    sigma_eps_sq: S,
) -> Result<DMatrix<S>> {
    let j = design.len();
    if sigma.nrows() != j || sigma.ncols() != j {
        return Err(DesignError::InvalidParameter(format!(
            "covariance must be {j}x{j}"
        )));
    }
    if !sigma_eps_sq.is_finite_val() || sigma_eps_sq <= S::zero() {
        return Err(DesignError::InvalidParameter(
            "error variance must be positive".into(),
        ));
    }
    if sigma.iter().any(|x| !x.is_finite_val()) {
        return Err(DesignError::InvalidParameter(
            "covariance entries must be finite".into(),
        ));
    }
    gram_raw(design.weights(), design.total_items(), sigma, sigma_eps_sq).ok_or_else(|| {
        DesignError::InvalidParameter("regularized covariance system is not invertible".into())
    })
}

/// Fisher information from explicit parts: a J x p Jacobian, a J x J
/// random-effect covariance and the error variance.
pub fn fisher_info_parts<S: Scalar>(
    design: &DesignWeights<S>,
    a: &DMatrix<S>,
    sigma: &DMatrix<S>,
    sigma_eps_sq: S,
) -> Result<InfoMatrix<S>> {
    let j = design.len();
    if a.nrows() != j {
        return Err(DesignError::InvalidParameter(format!(
            "Jacobian must have {j} rows"
        )));
    }
    if sigma.nrows() != j || sigma.ncols() != j {
        return Err(DesignError::InvalidParameter(format!(
            "covariance must be {j}x{j}"
        )));
    }
    if !sigma_eps_sq.is_finite_val() || sigma_eps_sq <= S::zero() {
        return Err(DesignError::InvalidParameter(
            "error variance must be positive".into(),
        ));
    }
    if sigma.iter().any(|x| !x.is_finite_val()) || a.iter().any(|x| !x.is_finite_val()) {
        return Err(DesignError::InvalidParameter(
            "matrix entries must be finite".into(),
        ));
    }
    let (m, mut logdet) = info_raw(
        design.weights(),
        design.total_items(),
        a,
        sigma,
        sigma_eps_sq,
    )
    .ok_or_else(|| {
        DesignError::InvalidParameter("regularized covariance system is not invertible".into())
    })?;
    if !check_estimable(a, design) {
        logdet = S::neg_inf();
    }
    let singular = !logdet.is_finite_val();
    Ok(InfoMatrix { m, logdet, singular })
}

/// Per-subject Fisher information of the model under the design.
pub fn fisher_info<S: Scalar>(
    design: &DesignWeights<S>,
    model: &GrowthCurve<S>,
    spec: &CovarianceSpec<S>,
) -> Result<InfoMatrix<S>> {
    let grid = TimeGrid::new(design.len())?;
    let a = jacobian(model, &grid)?;
    let sigma = spec.sigma_matrix(design.len());
    fisher_info_parts(design, &a, &sigma, spec.sigma_eps_sq())
}

/// D-criterion `log det` of the information matrix; negative infinity for
/// singular designs.
pub fn log_det_criterion<S: Scalar>(
    design: &DesignWeights<S>,
    model: &GrowthCurve<S>,
    spec: &CovarianceSpec<S>,
) -> Result<S> {
    Ok(fisher_info(design, model, spec)?.logdet())
}

/// D-efficiency `exp((logdet_c - logdet_r) / p)` of a candidate relative to
/// a reference design.
pub fn d_efficiency<S: Scalar>(
    candidate: &DesignWeights<S>,
    reference: &DesignWeights<S>,
    model: &GrowthCurve<S>,
    spec: &CovarianceSpec<S>,
) -> Result<S> {
    if candidate.len() != reference.len() {
        return Err(DesignError::InvalidParameter(
            "designs must share the occasion grid".into(),
        ));
    }
    let budget_tol = S::default_epsilon() * sc::<S>(8.0) * candidate.total_items();
    if (candidate.total_items() - reference.total_items()).abs() > budget_tol {
        return Err(DesignError::InvalidParameter(
            "designs must share the item budget".into(),
        ));
    }
    let reference_info = fisher_info(reference, model, spec)?;
    if reference_info.singular() {
        return Err(DesignError::InvalidParameter(
            "reference design is singular".into(),
        ));
    }
    let candidate_logdet = fisher_info(candidate, model, spec)?.logdet();
    let p = sc::<S>(reference_info.order() as f64);
    Ok(((candidate_logdet - reference_info.logdet()) / p).exp())
}

//! Within-subject covariance structures for the random occasion effects.

use nalgebra::DMatrix;

use crate::error::{DesignError, Result};
use crate::scalar::Scalar;

/// Largest per-subject observation count accepted by [`build_full_v`].
pub const MAX_DENSE_OBSERVATIONS: usize = 10_000;

/// Covariance structure tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovKind {
    /// Compound symmetry: equal correlation between all occasion pairs.
    Cs,
    /// First-order autoregressive: correlation `rho^|j - j'|`.
    Ar1,
}

/// Variance components of the observation model: random-effect variance,
/// within-subject correlation and measurement-error variance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CovarianceSpec<S> {
    kind: CovKind,
    sigma_gamma_sq: S,
    rho: S,
    sigma_eps_sq: S,
}

impl<S: Scalar> CovarianceSpec<S> {
    /// Validates `sigma_gamma_sq >= 0`, `0 <= rho <= 1` and `sigma_eps_sq > 0`.
    pub fn new(kind: CovKind, sigma_gamma_sq: S, rho: S, sigma_eps_sq: S) -> Result<Self> {
        if !sigma_gamma_sq.is_finite_val() || sigma_gamma_sq < S::zero() {
            return Err(DesignError::InvalidParameter(
                "random-effect variance must be finite and nonnegative".into(),
            ));
        }
        if !rho.is_finite_val() || rho < S::zero() || rho > S::one() {
            return Err(DesignError::InvalidParameter(
                "within-subject correlation must lie in [0, 1]".into(),
            ));
        }
        if !sigma_eps_sq.is_finite_val() || sigma_eps_sq <= S::zero() {
            return Err(DesignError::InvalidParameter(
                "error variance must be finite and positive".into(),
            ));
        }
        Ok(Self { kind, sigma_gamma_sq, rho, sigma_eps_sq })
    }

    pub fn kind(&self) -> CovKind {
        self.kind
    }

    pub fn sigma_gamma_sq(&self) -> S {
        self.sigma_gamma_sq
    }

    pub fn rho(&self) -> S {
        self.rho
    }

    pub fn sigma_eps_sq(&self) -> S {
        self.sigma_eps_sq
    }

    /// Variance ratio `tau^2 = sigma_gamma^2 / sigma_eps^2`.
    pub fn variance_ratio(&self) -> S {
        self.sigma_gamma_sq / self.sigma_eps_sq
    }

    /// Random-effect covariance matrix of the spec's own kind.
    pub fn sigma_matrix(&self, j: usize) -> DMatrix<S> {
        match self.kind {
            CovKind::Cs => sigma_cs(self, j),
            CovKind::Ar1 => sigma_ar1(self, j),
        }
    }
}

/// Compound-symmetry covariance: diagonal `sigma_gamma^2`, off-diagonal
/// `sigma_gamma^2 rho`.
pub fn sigma_cs<S: Scalar>(spec: &CovarianceSpec<S>, j: usize) -> DMatrix<S> {
    let v = spec.sigma_gamma_sq();
    let off = v * spec.rho();
    DMatrix::from_fn(j, j, |r, c| if r == c { v } else { off })
}

/// AR(1) covariance: entries `sigma_gamma^2 rho^|j - j'|`.
pub fn sigma_ar1<S: Scalar>(spec: &CovarianceSpec<S>, j: usize) -> DMatrix<S> {
    let v = spec.sigma_gamma_sq();
    let rho = spec.rho();
    DMatrix::from_fn(j, j, |r, c| {
        let lag = r.abs_diff(c);
        if lag == 0 {
            v
        } else {
            v * rho.powi(lag as i32)
        }
    })
}

/// Integer item counts per occasion, `I_j >= 0` with positive total.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ExactDesignLayout {
    counts: Vec<usize>,
}

impl ExactDesignLayout {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() || counts.iter().sum::<usize>() == 0 {
            return Err(DesignError::InvalidParameter(
                "exact design needs a positive total item count".into(),
            ));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn occasions(&self) -> usize {
        self.counts.len()
    }

    /// Total items per subject.
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Dense per-subject observation covariance `V = sigma_eps^2 I + F Sigma F^T`
/// with `F` the block design matrix stacking a ones-column per occasion.
///
/// Intended as a test oracle for the reduced information representation;
/// refuses subjects with more than [`MAX_DENSE_OBSERVATIONS`] observations.
pub fn build_full_v<S: Scalar>(
    layout: &ExactDesignLayout,
    sigma: &DMatrix<S>,
    sigma_eps_sq: S,
) -> Result<DMatrix<S>> {
    let j = layout.occasions();
    if sigma.nrows() != j || sigma.ncols() != j {
        return Err(DesignError::InvalidParameter(format!(
            "covariance must be {j}x{j} to match the layout"
        )));
    }
    if sigma_eps_sq <= S::zero() {
        return Err(DesignError::InvalidParameter(
            "error variance must be positive".into(),
        ));
    }
    let total = layout.total();
    if total > MAX_DENSE_OBSERVATIONS {
        return Err(DesignError::Resource(format!(
            "dense covariance for {total} observations exceeds the {MAX_DENSE_OBSERVATIONS} cap"
        )));
    }
    // occasion index of every observation row
    let occasion: Vec<usize> = layout
        .counts()
        .iter()
        .enumerate()
        .flat_map(|(jj, &c)| std::iter::repeat(jj).take(c))
        .collect();
    let mut v = DMatrix::from_fn(total, total, |r, c| sigma[(occasion[r], occasion[c])]);
    for d in 0..total {
        v[(d, d)] += sigma_eps_sq;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(kind: CovKind, v: f64, rho: f64) -> CovarianceSpec<f64> {
        CovarianceSpec::new(kind, v, rho, 1.0).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(CovarianceSpec::new(CovKind::Cs, -0.1, 0.5, 1.0).is_err());
        assert!(CovarianceSpec::new(CovKind::Cs, 1.0, -0.1, 1.0).is_err());
        assert!(CovarianceSpec::new(CovKind::Cs, 1.0, 1.1, 1.0).is_err());
        assert!(CovarianceSpec::new(CovKind::Cs, 1.0, 0.5, 0.0).is_err());
        // boundary values are admitted
        assert!(CovarianceSpec::new(CovKind::Cs, 0.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn cs_uncorrelated_is_identity() {
        let m = sigma_cs(&spec(CovKind::Cs, 1.0, 0.0), 3);
        assert_eq!(m, DMatrix::identity(3, 3));
    }

    #[test]
    fn cs_perfect_correlation_is_all_ones() {
        let m = sigma_cs(&spec(CovKind::Cs, 1.0, 1.0), 2);
        assert_eq!(m, DMatrix::from_element(2, 2, 1.0));
    }

    #[test]
    fn cs_entries() {
        let m = sigma_cs(&spec(CovKind::Cs, 2.0, 0.5), 2);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));
    }

    #[test]
    fn ar1_uncorrelated_is_scaled_identity() {
        let m = sigma_ar1(&spec(CovKind::Ar1, 3.0, 0.0), 4);
        assert_eq!(m, DMatrix::identity(4, 4) * 3.0);
    }

    #[test]
    fn ar1_two_occasions_equals_cs() {
        for rho in [0.0, 0.3, 0.99, 1.0] {
            let s = spec(CovKind::Ar1, 1.7, rho);
            assert_eq!(sigma_ar1(&s, 2), sigma_cs(&s, 2));
        }
    }

    #[test]
    fn ar1_entries_decay_geometrically() {
        let m = sigma_ar1(&spec(CovKind::Ar1, 1.0, 0.5), 3);
        let expected =
            DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.25, 0.5, 1.0, 0.5, 0.25, 0.5, 1.0]);
        assert_relative_eq!(m, expected, epsilon = 1e-15);
    }

    #[test]
    fn builders_are_nonnegative_definite() {
        for rho in [0.0, 0.4, 1.0] {
            for kind in [CovKind::Cs, CovKind::Ar1] {
                let m = spec(kind, 2.0, rho).sigma_matrix(5);
                assert_eq!(m, m.transpose());
                let eig = m.symmetric_eigenvalues();
                assert!(eig.min() >= -1e-12, "eigenvalue {}", eig.min());
            }
        }
    }

    #[test]
    fn full_v_without_random_effects_is_diagonal() {
        let layout = ExactDesignLayout::new(vec![1, 1, 1]).unwrap();
        let sigma = sigma_cs(&spec(CovKind::Cs, 0.0, 0.0), 3);
        let v = build_full_v(&layout, &sigma, 2.0).unwrap();
        assert_eq!(v, DMatrix::identity(3, 3) * 2.0);
    }

    #[test]
    fn full_v_single_occasion_block() {
        let layout = ExactDesignLayout::new(vec![2]).unwrap();
        let sigma = DMatrix::from_element(1, 1, 1.0);
        let v = build_full_v(&layout, &sigma, 1.0).unwrap();
        assert_eq!(v, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));
    }

    #[test]
    fn full_v_mixed_counts() {
        let layout = ExactDesignLayout::new(vec![2, 1]).unwrap();
        let sigma = sigma_cs(&spec(CovKind::Cs, 1.0, 0.5), 2);
        let v = build_full_v(&layout, &sigma, 1.0).unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 1.0, 0.5, 1.0, 2.0, 0.5, 0.5, 0.5, 2.0],
        );
        assert_relative_eq!(v, expected, epsilon = 1e-15);
    }

    #[test]
    fn full_v_block_part_has_low_rank() {
        let layout = ExactDesignLayout::new(vec![3, 2, 4]).unwrap();
        let s = spec(CovKind::Ar1, 1.3, 0.6);
        let sigma = sigma_ar1(&s, 3);
        let v = build_full_v(&layout, &sigma, 0.7).unwrap();
        let block = v - DMatrix::identity(9, 9) * 0.7;
        let rank = block.svd(false, false).singular_values.iter().filter(|&&x| x > 1e-10).count();
        assert!(rank <= 3);
    }

    #[test]
    fn full_v_resource_guard() {
        let layout = ExactDesignLayout::new(vec![20_000]).unwrap();
        let sigma = DMatrix::from_element(1, 1, 1.0);
        assert!(matches!(
            build_full_v(&layout, &sigma, 1.0),
            Err(DesignError::Resource(_))
        ));
    }
}

//! Dense-oracle checks of the reduced information representation.
//!
//! The library never materializes the per-subject covariance V (except in
//! `build_full_v`); these tests rebuild `F^T V^{-1} F` the expensive way and
//! compare entrywise against the reduced J x J computation.

use growthdesign::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Block design matrix F stacking a ones-column per occasion.
fn f_matrix(layout: &ExactDesignLayout) -> DMatrix<f64> {
    let total = layout.total();
    let mut f = DMatrix::zeros(total, layout.occasions());
    let mut row = 0;
    for (j, &c) in layout.counts().iter().enumerate() {
        for _ in 0..c {
            f[(row, j)] = 1.0;
            row += 1;
        }
    }
    f
}

fn random_spec(rng: &mut ChaCha8Rng) -> CovarianceSpec64 {
    let kind = if rng.gen_bool(0.5) { CovKind::Cs } else { CovKind::Ar1 };
    let sigma_gamma_sq = match rng.gen_range(0..10) {
        0 => 0.0,
        _ => rng.gen_range(0.01..3.0),
    };
    let rho = match rng.gen_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.gen_range(0.0..1.0),
    };
    let sigma_eps_sq = rng.gen_range(0.3..2.0);
    CovarianceSpec::new(kind, sigma_gamma_sq, rho, sigma_eps_sq).unwrap()
}

fn random_layout(rng: &mut ChaCha8Rng) -> ExactDesignLayout {
    loop {
        let j = rng.gen_range(1..=6);
        let counts: Vec<usize> = (0..j)
            .map(|_| if rng.gen_bool(0.25) { 0 } else { rng.gen_range(1..=8) })
            .collect();
        let total: usize = counts.iter().sum();
        if total > 0 && total <= 30 {
            return ExactDesignLayout::new(counts).unwrap();
        }
    }
}

#[test]
fn woodbury_identity_holds_standalone() {
    // (I + C C^T)^{-1} = I - C (I + C^T C)^{-1} C^T
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let m = rng.gen_range(1..=8);
        let j = rng.gen_range(1..=8);
        let c = DMatrix::<f64>::from_fn(m, j, |_, _| rng.gen_range(-2.0..2.0));
        let left = (DMatrix::identity(m, m) + &c * c.transpose())
            .try_inverse()
            .unwrap();
        let inner = (DMatrix::identity(j, j) + c.transpose() * &c)
            .try_inverse()
            .unwrap();
        let right = DMatrix::identity(m, m) - &c * inner * c.transpose();
        let err = (left - right).abs().max();
        assert!(err < 1e-10, "identity error {err}");
    }
}

#[test]
fn reduced_information_matches_dense_inverse_on_500_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut zero_count_instances = 0;
    for trial in 0..500 {
        let layout = random_layout(&mut rng);
        let spec = random_spec(&mut rng);
        if layout.counts().contains(&0) {
            zero_count_instances += 1;
        }
        let j = layout.occasions();
        let sigma = spec.sigma_matrix(j);
        let v = build_full_v(&layout, &sigma, spec.sigma_eps_sq()).unwrap();
        let f = f_matrix(&layout);
        let oracle = f.transpose() * v.try_inverse().unwrap() * &f;

        let design = DesignWeights::from_counts(layout.counts()).unwrap();
        let reduced = core_info(&design, &sigma, spec.sigma_eps_sq()).unwrap();
        let err = (&reduced - &oracle).abs().max();
        assert!(
            err < 1e-10,
            "trial {trial}: entrywise error {err} (layout {:?})",
            layout.counts()
        );
    }
    assert!(zero_count_instances > 50, "zero-weight occasions underrepresented");
}

#[test]
fn unstructured_inverse_information_is_variance_sum() {
    // fully supported: (F^T V^{-1} F)^{-1} = sigma_eps^2 M0^{-1} + Sigma
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..100 {
        let j = rng.gen_range(1..=6);
        let counts: Vec<usize> = (0..j).map(|_| rng.gen_range(1..=6)).collect();
        let layout = ExactDesignLayout::new(counts).unwrap();
        let spec = random_spec(&mut rng);
        let sigma = spec.sigma_matrix(j);
        let design = DesignWeights::from_counts(layout.counts()).unwrap();
        let reduced = core_info(&design, &sigma, spec.sigma_eps_sq()).unwrap();
        let m0_inv = DMatrix::from_fn(j, j, |r, c| {
            if r == c {
                1.0 / layout.counts()[r] as f64
            } else {
                0.0
            }
        });
        let expected_inv = m0_inv * spec.sigma_eps_sq() + &sigma;
        let err = (reduced.try_inverse().unwrap() - expected_inv).abs().max();
        assert!(err < 1e-10, "error {err}");
    }
}

#[test]
fn logistic_information_logdet_matches_dense_route() {
    // integer-count uniform allocation admits the explicit F/V oracle
    let model = GrowthCurve64::new(CurveFamily::Logistic, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
    let spec = CovarianceSpec64::new(CovKind::Cs, 1.0, 0.5, 1.0).unwrap();
    let layout = ExactDesignLayout::new(vec![14; 7]).unwrap();
    let design = DesignWeights::from_counts(layout.counts()).unwrap();

    let info = fisher_info(&design, &model, &spec).unwrap();
    assert!(!info.singular());

    let grid = TimeGrid64::new(7).unwrap();
    let a = jacobian(&model, &grid).unwrap();
    let sigma = spec.sigma_matrix(7);
    let v = build_full_v(&layout, &sigma, spec.sigma_eps_sq()).unwrap();
    let f = f_matrix(&layout);
    let dense = a.transpose() * f.transpose() * v.try_inverse().unwrap() * &f * &a;
    let dense_logdet = dense.determinant().ln();

    assert!(
        (info.logdet() - dense_logdet).abs() < 1e-8,
        "reduced {} vs dense {}",
        info.logdet(),
        dense_logdet
    );
}

#[test]
fn logistic_information_matches_diagonal_route_at_fractional_counts() {
    // fully supported designs admit the representation
    // M = A^T (sigma_eps^2 M0^{-1} + Sigma)^{-1} A even when I w_j is not
    // an integer
    let model = GrowthCurve64::new(CurveFamily::Logistic, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
    let spec = CovarianceSpec64::new(CovKind::Cs, 1.0, 0.5, 1.0).unwrap();
    let design = DesignWeights::uniform(7, 100.0).unwrap();

    let info = fisher_info(&design, &model, &spec).unwrap();
    assert!(!info.singular());

    let grid = TimeGrid64::new(7).unwrap();
    let a = jacobian(&model, &grid).unwrap();
    let sigma = spec.sigma_matrix(7);
    let m0_inv = DMatrix::from_fn(7, 7, |r, c| {
        if r == c {
            7.0 / 100.0
        } else {
            0.0
        }
    });
    let middle = (m0_inv * spec.sigma_eps_sq() + sigma).try_inverse().unwrap();
    let alt = a.transpose() * middle * &a;
    let err = (info.matrix() - &alt).abs().max();
    assert!(err < 1e-10, "representation error {err}");
    assert!((info.logdet() - alt.determinant().ln()).abs() < 1e-8);
}

//! Property-based checks of constructors and matrix builders.

use growthdesign::*;
use proptest::prelude::*;

proptest! {
    #[test]
    fn normalized_nonnegative_vectors_are_valid_weights(
        raw in prop::collection::vec(0.0f64..10.0, 1..12),
        total in 0.5f64..500.0,
    ) {
        let sum: f64 = raw.iter().sum();
        prop_assume!(sum > 1e-6);
        let w: Vec<f64> = raw.iter().map(|x| x / sum).collect();
        let design = DesignWeights::new(w.clone(), total).unwrap();
        prop_assert_eq!(design.weights(), w.as_slice());
    }

    #[test]
    fn off_simplex_vectors_are_rejected(
        raw in prop::collection::vec(0.0f64..10.0, 1..12),
        excess in 0.01f64..0.5,
    ) {
        let sum: f64 = raw.iter().sum();
        prop_assume!(sum > 1e-6);
        let w: Vec<f64> = raw.iter().map(|x| x / sum * (1.0 + excess)).collect();
        prop_assert!(DesignWeights::new(w, 10.0).is_err());
    }

    #[test]
    fn covariance_builders_are_symmetric_nonnegative_definite(
        v in 0.0f64..5.0,
        rho in 0.0f64..=1.0,
        j in 1usize..8,
        ar in any::<bool>(),
    ) {
        let kind = if ar { CovKind::Ar1 } else { CovKind::Cs };
        let spec = CovarianceSpec::new(kind, v, rho, 1.0).unwrap();
        let m = spec.sigma_matrix(j);
        prop_assert_eq!(m.clone(), m.transpose());
        let min_eig = m.symmetric_eigenvalues().min();
        prop_assert!(min_eig >= -1e-12, "min eigenvalue {}", min_eig);
    }

    #[test]
    fn criterion_never_exceeds_reference_at_self_efficiency(
        raw in prop::collection::vec(0.01f64..1.0, 3),
        v in 0.0f64..3.0,
        rho in 0.0f64..=1.0,
    ) {
        let sum: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / sum).collect();
        let design = DesignWeights::new(w, 30.0).unwrap();
        let model = GrowthCurve64::new(CurveFamily::StraightLine, vec![0.0, 1.0]).unwrap();
        let spec = CovarianceSpec64::new(CovKind::Cs, v, rho, 1.0).unwrap();
        let eff = d_efficiency(&design, &design, &model, &spec).unwrap();
        prop_assert!((eff - 1.0).abs() < 1e-12);
    }
}

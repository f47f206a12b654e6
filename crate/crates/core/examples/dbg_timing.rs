use growthdesign::*;
use std::time::Instant;

fn cell(kind: CovKind, family: CurveFamily, beta: Vec<f64>, v: f64, rho: f64, restarts: usize) -> (f64, usize, bool) {
    let p = DesignProblem::new(
        7,
        GrowthCurve::new(family, beta).unwrap(),
        CovarianceSpec::new(kind, v, rho, 1.0).unwrap(),
        100.0,
    )
    .unwrap();
    let opts = SolverOptions { restarts, gap_tol: 1e-9, ..Default::default() };
    let sol = solve_numeric(&p, &opts).unwrap();
    (sol.certificate.gap, sol.iterations, sol.converged)
}

fn main() {
    // representative hard-ish cells
    let cases: Vec<(CovKind, CurveFamily, Vec<f64>, f64, f64)> = vec![
        (CovKind::Cs, CurveFamily::Exponential, vec![0.0, 1.0, 1.0], 1.0, 0.5),
        (CovKind::Ar1, CurveFamily::Exponential, vec![0.0, 1.0, 2.0], 10.0, 0.95),
        (CovKind::Cs, CurveFamily::Exponential, vec![0.0, 10.0, 0.5], 0.0, 0.0),
        (CovKind::Ar1, CurveFamily::Logistic, vec![0.0, 1.0, 1.0, 0.0], 1.0, 0.5),
        (CovKind::Cs, CurveFamily::Logistic, vec![0.0, 10.0, 2.0, 2.0], 10.0, 0.95),
        (CovKind::Ar1, CurveFamily::Logistic, vec![0.0, 3.0, 0.5, -2.0], 0.1, 0.05),
        (CovKind::Cs, CurveFamily::Logistic, vec![0.0, 1.0, 2.0, -2.0], 0.0, 0.3),
    ];
    for restarts in [0usize, 2, 8] {
        let t0 = Instant::now();
        let mut worst_gap = 0.0f64;
        let mut total_iters = 0;
        let mut all_conv = true;
        for (k, f, b, v, r) in &cases {
            let (gap, iters, conv) = cell(*k, *f, b.clone(), *v, *r, restarts);
            worst_gap = worst_gap.max(gap);
            total_iters += iters;
            all_conv &= conv;
        }
        let el = t0.elapsed().as_secs_f64();
        println!(
            "restarts={restarts}: {:.1} ms/cell, worst gap {:.2e}, iters {}, all converged {}",
            1000.0 * el / cases.len() as f64,
            worst_gap,
            total_iters,
            all_conv
        );
    }
}

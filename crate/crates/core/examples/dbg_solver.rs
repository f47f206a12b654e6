use growthdesign::*;

fn main() {
    let p = DesignProblem::new(
        4,
        GrowthCurve::new(CurveFamily::Unstructured, vec![0.0; 4]).unwrap(),
        CovarianceSpec::new(CovKind::Cs, 1.3, 0.7, 1.0).unwrap(),
        40.0,
    )
    .unwrap();
    let sol = solve_numeric(&p, &SolverOptions::default()).unwrap();
    println!("weights = {:?}", sol.weights.weights());
    println!("criterion = {}", sol.criterion);
    println!("gap = {:e} converged = {} iters = {}", sol.certificate.gap, sol.converged, sol.iterations);
    println!("psi = {:?}", sol.certificate.psi);

    // what does the certificate say at exact uniform?
    let w = DesignWeights::uniform(4, 40.0).unwrap();
    let cert = check_optimality(&w, p.model(), p.spec(), 1e-8).unwrap();
    println!("uniform gap = {:e} crit = {}", cert.gap, log_det_criterion(&w, p.model(), p.spec()).unwrap());
}

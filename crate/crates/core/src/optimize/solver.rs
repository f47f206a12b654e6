//! Numerical solver for locally D-optimal approximate designs.
//!
//! Ascent runs on the weight simplex and is driven by the certificate
//! quantities themselves: the gradient of the criterion with respect to the
//! weights is `I sigma_eps^2 psi_j`, so the equivalence-theorem gap doubles
//! as the stopping rule. Each start goes through a vertex-direction phase
//! (move toward the occasion with the largest sensitivity, step by
//! golden-section search), a projected-gradient polish, and an active-set
//! second-order refinement that brings the gap down to the requested
//! tolerance. Several starts are tried and the best criterion value wins.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equivalence::{certificate_from_psi, sensitivity_raw, Sensitivity};
use crate::error::{DesignError, Result};
use crate::information::{info_raw, DesignWeights};
use crate::model::check_estimable;
use crate::model::jacobian;
use crate::scalar::{sc, Scalar};

use super::{DesignProblem, Solution, SolverOptions};

/// Weights below this are clamped to exact zeros in the returned design.
const ZERO_CLAMP: f64 = 1e-10;

const GOLDEN_ITERS: usize = 40;
const VERTEX_CAP: usize = 60;
const PG_CAP: usize = 100;
const NEWTON_CAP: usize = 60;

struct Kernel<S> {
    a: DMatrix<S>,
    sigma: DMatrix<S>,
    s2e: S,
    total: S,
}

struct Eval<S> {
    criterion: S,
    /// Gradient of the criterion with respect to the weights.
    grad: DVector<S>,
    /// Certificate gap `max_j grad_j - sum_j w_j grad_j`.
    gap: S,
    /// Occasion with the largest gradient.
    best_occasion: usize,
    sens: Sensitivity<S>,
}

impl<S: Scalar> Kernel<S> {
    fn criterion(&self, w: &[S]) -> S {
        info_raw(w, self.total, &self.a, &self.sigma, self.s2e)
            .map(|(_, logdet)| logdet)
            .unwrap_or_else(S::neg_inf)
    }

    fn evaluate(&self, w: &[S], second_order: bool) -> Option<Eval<S>> {
        let sens = sensitivity_raw(w, self.total, &self.a, &self.sigma, self.s2e, second_order)?;
        let scale = self.total * self.s2e;
        let grad = DVector::from_fn(w.len(), |j, _| scale * sens.psi[j]);
        let mut best_occasion = 0;
        let mut best = grad[0];
        let mut mean = S::zero();
        for j in 0..w.len() {
            if grad[j] > best {
                best = grad[j];
                best_occasion = j;
            }
            mean += w[j] * grad[j];
        }
        Some(Eval { criterion: sens.logdet, grad, gap: best - mean, best_occasion, sens })
    }
}

/// Normalizes to the simplex, clamping small negatives from roundoff.
fn clean<S: Scalar>(w: &mut [S]) {
    let mut sum = S::zero();
    for x in w.iter_mut() {
        if *x < S::zero() {
            *x = S::zero();
        }
        sum += *x;
    }
    if sum > S::zero() {
        for x in w.iter_mut() {
            *x /= sum;
        }
    }
}

/// Euclidean projection onto the probability simplex.
fn project_simplex<S: Scalar>(v: &[S]) -> Vec<S> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumsum = S::zero();
    let mut theta = S::zero();
    let mut found = false;
    for (i, &ui) in sorted.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - S::one()) / sc((i + 1) as f64);
        if ui - t > S::zero() {
            theta = t;
            found = true;
        }
    }
    if !found {
        // degenerate input: all mass on the largest coordinate
        let mut out = vec![S::zero(); v.len()];
        let mut arg = 0;
        for (i, &x) in v.iter().enumerate() {
            if x > v[arg] {
                arg = i;
            }
        }
        out[arg] = S::one();
        return out;
    }
    let mut out: Vec<S> = v.iter().map(|&x| (x - theta).max(S::zero())).collect();
    clean(&mut out);
    out
}

/// Golden-section search for the maximum of a unimodal function on [0, 1];
/// returns the best probed point and its value.
fn golden_max<S: Scalar>(mut f: impl FnMut(S) -> S, iters: usize) -> (S, S) {
    let ratio = sc::<S>(0.618_033_988_749_894_9);
    let mut a = S::zero();
    let mut b = S::one();
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let (mut best_x, mut best_f) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
            if f2 > best_f {
                best_f = f2;
                best_x = x2;
            }
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
            if f1 > best_f {
                best_f = f1;
                best_x = x1;
            }
        }
    }
    (best_x, best_f)
}

fn mix_toward_vertex<S: Scalar>(w: &[S], vertex: usize, lambda: S) -> Vec<S> {
    let keep = S::one() - lambda;
    let mut out: Vec<S> = w.iter().map(|&x| keep * x).collect();
    out[vertex] += lambda;
    clean(&mut out);
    out
}

/// Second-order step restricted to the working support, solving the
/// equality-constrained quadratic model of the criterion.
fn newton_direction<S: Scalar>(
    eval: &Eval<S>,
    support: &[usize],
    total: S,
    s2e: S,
) -> Option<Vec<S>> {
    let s = support.len();
    if s < 2 {
        return None;
    }
    let q = &eval.sens.q;
    let u = eval.sens.u.as_ref()?;
    let curv_scale = total * total * s2e;
    let two = sc::<S>(2.0);
    let n = s + 1;
    let mut kkt = DMatrix::<S>::zeros(n, n);
    let mut rhs = DVector::<S>::zeros(n);
    for (r, &jr) in support.iter().enumerate() {
        for (c, &jc) in support.iter().enumerate() {
            let qv = q[(jr, jc)];
            kkt[(r, c)] = -curv_scale * (two * u[(jr, jc)] * qv + s2e * qv * qv);
        }
        kkt[(r, s)] = S::one();
        kkt[(s, r)] = S::one();
        rhs[r] = -eval.grad[jr];
    }
    let sol = kkt.lu().solve(&rhs)?;
    let mut direction = vec![S::zero(); eval.grad.len()];
    let mut ascent = S::zero();
    for (r, &jr) in support.iter().enumerate() {
        direction[jr] = sol[r];
        ascent += eval.grad[jr] * sol[r];
    }
    if !(ascent > S::zero()) {
        return None;
    }
    Some(direction)
}

struct StartOutcome<S> {
    w: Vec<S>,
    criterion: S,
    gap: S,
    iterations: usize,
}

/// Near the optimum the criterion flattens below f64 resolution while the
/// certificate gap is still computed accurately from psi differences, so
/// candidates whose criteria agree within noise are ranked by gap.
fn outcome_improves<S: Scalar>(candidate: &StartOutcome<S>, incumbent: &StartOutcome<S>) -> bool {
    let noise = sc::<S>(1e-11) * (S::one() + incumbent.criterion.abs());
    if candidate.criterion > incumbent.criterion + noise {
        return true;
    }
    if candidate.criterion < incumbent.criterion - noise {
        return false;
    }
    candidate.gap < incumbent.gap
}

fn run_start<S: Scalar>(kernel: &Kernel<S>, w0: &[S], opts: &SolverOptions<S>) -> StartOutcome<S> {
    let mut w = w0.to_vec();
    clean(&mut w);
    let mut iterations = 0usize;
    let mut last = match kernel.evaluate(&w, false) {
        Some(e) => e,
        None => {
            return StartOutcome { w, criterion: S::neg_inf(), gap: S::neg_inf(), iterations }
        }
    };

    // vertex-direction ascent until the gap is moderate
    let switch_gap = (sc::<S>(0.05) * (S::one() + last.grad.amax())).max(opts.gap_tol);
    for _ in 0..VERTEX_CAP.min(opts.max_iters) {
        if last.gap <= switch_gap {
            break;
        }
        let target = last.best_occasion;
        let (lambda, value) =
            golden_max(|l| kernel.criterion(&mix_toward_vertex(&w, target, l)), GOLDEN_ITERS);
        if !(value > last.criterion) {
            break;
        }
        w = mix_toward_vertex(&w, target, lambda);
        iterations += 1;
        match kernel.evaluate(&w, false) {
            Some(e) => last = e,
            None => break,
        }
    }

    // alternate projected-gradient polish and second-order refinement
    let mut eta = S::one() / (S::one() + last.grad.amax());
    let mut rounds_without_progress = 0;
    'outer: while iterations < opts.max_iters && rounds_without_progress < 2 {
        let before = last.criterion;

        // projected gradient with backtracking
        for _ in 0..PG_CAP {
            if last.gap <= opts.gap_tol || iterations >= opts.max_iters {
                break;
            }
            let mut accepted = false;
            let mut step = eta;
            for _ in 0..40 {
                let trial: Vec<S> =
                    (0..w.len()).map(|j| w[j] + step * last.grad[j]).collect();
                let cand = project_simplex(&trial);
                let crit = kernel.criterion(&cand);
                let slope: S = (0..w.len())
                    .map(|j| last.grad[j] * (cand[j] - w[j]))
                    .fold(S::zero(), |a, b| a + b);
                if crit.is_finite_val() && crit >= last.criterion + sc::<S>(1e-4) * slope {
                    w = cand;
                    eta = step * sc(1.5);
                    accepted = true;
                    break;
                }
                step *= sc(0.5);
            }
            if !accepted {
                break;
            }
            iterations += 1;
            match kernel.evaluate(&w, false) {
                Some(e) => last = e,
                None => break,
            }
        }
        if last.gap <= opts.gap_tol {
            break 'outer;
        }

        // active-set second-order refinement; near the optimum the criterion
        // flattens below f64 resolution, so steps that keep the criterion
        // within noise but shrink the gap are also accepted
        for _ in 0..NEWTON_CAP {
            if last.gap <= opts.gap_tol || iterations >= opts.max_iters {
                break;
            }
            let with_curvature = match kernel.evaluate(&w, true) {
                Some(e) => e,
                None => break,
            };
            let noise = sc::<S>(1e-12) * (S::one() + with_curvature.criterion.abs());
            let accepts = |cand: &Eval<S>| {
                cand.criterion > with_curvature.criterion + noise
                    || (cand.criterion >= with_curvature.criterion - noise
                        && cand.gap < with_curvature.gap * sc(0.7))
            };
            let mut support: Vec<usize> =
                (0..w.len()).filter(|&j| w[j] > S::zero()).collect();
            if !support.contains(&with_curvature.best_occasion) {
                support.push(with_curvature.best_occasion);
                support.sort_unstable();
            }
            let mut moved: Option<Eval<S>> = None;
            if let Some(direction) =
                newton_direction(&with_curvature, &support, kernel.total, kernel.s2e)
            {
                // longest feasible step along the direction
                let mut lambda_max = S::one();
                for j in 0..w.len() {
                    if direction[j] < S::zero() {
                        lambda_max = lambda_max.min(w[j] / -direction[j]);
                    }
                }
                let mut lambda = lambda_max.min(S::one());
                for _ in 0..30 {
                    if !(lambda > S::zero()) {
                        break;
                    }
                    let mut cand: Vec<S> =
                        (0..w.len()).map(|j| w[j] + lambda * direction[j]).collect();
                    clean(&mut cand);
                    if let Some(ce) = kernel.evaluate(&cand, false) {
                        if accepts(&ce) {
                            w = cand;
                            moved = Some(ce);
                            break;
                        }
                    }
                    lambda *= sc(0.5);
                }
            }
            if moved.is_none() {
                // fall back to one vertex-direction step
                let target = with_curvature.best_occasion;
                let (lambda, value) = golden_max(
                    |l| kernel.criterion(&mix_toward_vertex(&w, target, l)),
                    GOLDEN_ITERS,
                );
                if value > with_curvature.criterion {
                    let cand = mix_toward_vertex(&w, target, lambda);
                    if let Some(ce) = kernel.evaluate(&cand, false) {
                        w = cand;
                        moved = Some(ce);
                    }
                }
            }
            match moved {
                Some(e) => {
                    last = e;
                    iterations += 1;
                }
                None => break,
            }
        }
        if last.gap <= opts.gap_tol {
            break;
        }
        if !(last.criterion > before) {
            rounds_without_progress += 1;
        } else {
            rounds_without_progress = 0;
        }
    }

    StartOutcome { w, criterion: last.criterion, gap: last.gap, iterations }
}

/// Clamps sub-threshold weights to exact zeros; returns whether any changed.
fn clamp_zeros<S: Scalar>(w: &mut [S]) -> bool {
    let cutoff = sc::<S>(ZERO_CLAMP);
    let mut changed = false;
    for x in w.iter_mut() {
        if *x > S::zero() && *x <= cutoff {
            *x = S::zero();
            changed = true;
        }
    }
    if changed {
        clean(w);
    }
    changed
}

/// Uniform draw from the simplex interior.
fn dirichlet_start<S: Scalar>(rng: &mut ChaCha8Rng, j: usize) -> Vec<S> {
    let exps: Vec<f64> = (0..j)
        .map(|_| {
            let u: f64 = rng.gen::<f64>();
            -(u.max(1e-12)).ln()
        })
        .collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| sc(e / sum)).collect()
}

/// Computes a locally D-optimal approximate design with a certificate.
///
/// Returns a non-converged, certified result when the iteration budget runs
/// out; errors only when no estimable design exists at all.
pub fn solve_numeric<S: Scalar>(
    problem: &DesignProblem<S>,
    opts: &SolverOptions<S>,
) -> Result<Solution<S>> {
    opts.validate()?;
    let j = problem.occasions();
    let a = jacobian(problem.model(), problem.grid())?;
    let sigma = problem.spec().sigma_matrix(j);
    let s2e = problem.spec().sigma_eps_sq();
    let total = problem.total_items();

    let full = DesignWeights::uniform(j, total)?;
    if !check_estimable(&a, &full) {
        return Err(DesignError::Infeasible(
            "mean parameters are not estimable under any design on this grid".into(),
        ));
    }
    let kernel = Kernel { a, sigma, s2e, total };
    if kernel.evaluate(full.weights(), false).is_none() {
        return Err(DesignError::Infeasible(
            "information matrix is numerically singular even when fully supported".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts: Vec<Vec<S>> = vec![full.weights().to_vec()];
    for _ in 0..opts.restarts {
        starts.push(dirichlet_start(&mut rng, j));
    }

    let mut best: Option<StartOutcome<S>> = None;
    let mut iterations = 0usize;
    for start in &starts {
        let outcome = run_start(&kernel, start, opts);
        iterations += outcome.iterations;
        let replace = match &best {
            None => true,
            Some(b) => outcome_improves(&outcome, b),
        };
        if replace {
            best = Some(outcome);
        }
    }
    let mut best = best.expect("at least one start");

    // structural zeros, then a short re-polish if clamping moved the gap
    let mut w = best.w.clone();
    if clamp_zeros(&mut w) {
        if let Some(eval) = kernel.evaluate(&w, false) {
            if eval.gap > opts.gap_tol {
                let polish_opts = SolverOptions { restarts: 0, max_iters: 200, ..*opts };
                let outcome = run_start(&kernel, &w, &polish_opts);
                iterations += outcome.iterations;
                w = outcome.w;
                clamp_zeros(&mut w);
            }
        }
    }
    best.w = w;

    let weights = DesignWeights::new(best.w.clone(), total)?;
    let psi = crate::equivalence::psi_vector(&weights, problem.model(), problem.spec())?;
    let certificate = certificate_from_psi(
        &weights,
        &psi,
        problem.model().param_count(),
        s2e,
        opts.gap_tol,
    );
    let criterion = kernel.criterion(weights.weights());
    let converged = certificate.gap <= opts.gap_tol;
    Ok(Solution { weights, certificate, criterion, converged, iterations })
}

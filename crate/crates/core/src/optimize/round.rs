//! Rounding of approximate designs to integer item allocations.

use crate::covariance::{CovKind, ExactDesignLayout};
use crate::error::{DesignError, Result};
use crate::information::{info_raw, DesignWeights};
use crate::model::jacobian;
use crate::scalar::{sc, Scalar};

use super::DesignProblem;

/// Rounds an approximate design to integer counts summing to `total`.
///
/// Under compound symmetry a uniform weight vector rounds to the balanced
/// split (the first `total mod J` occasions get one extra item), which is
/// exactly optimal in the saturated case. Everything else goes through
/// largest-remainder rounding with a floor of one item per support occasion,
/// followed by greedy single-item moves while the criterion improves.
pub fn round_exact<S: Scalar>(
    w: &DesignWeights<S>,
    total: usize,
    problem: &DesignProblem<S>,
) -> Result<ExactDesignLayout> {
    let j = w.len();
    if j != problem.occasions() {
        return Err(DesignError::InvalidParameter(
            "design and problem disagree on the number of occasions".into(),
        ));
    }
    if total == 0 {
        return Err(DesignError::InvalidParameter(
            "item total must be positive".into(),
        ));
    }
    let support = w.support();
    if total < support.len() {
        return Err(DesignError::Infeasible(format!(
            "{total} items cannot cover {} support occasions",
            support.len()
        )));
    }

    let uniform_tol = sc::<S>(1e-12);
    let uniform_value = S::one() / sc(j as f64);
    let is_uniform = w.weights().iter().all(|&x| (x - uniform_value).abs() <= uniform_tol);
    if problem.spec().kind() == CovKind::Cs && is_uniform {
        let base = total / j;
        let extra = total % j;
        let counts = (0..j).map(|k| if k < extra { base + 1 } else { base }).collect();
        return ExactDesignLayout::new(counts);
    }

    // largest-remainder start with at least one item per support occasion
    let targets: Vec<f64> = w.weights().iter().map(|&x| x.as_f64() * total as f64).collect();
    let mut counts = vec![0usize; j];
    for &s in &support {
        counts[s] = (targets[s].floor() as usize).max(1);
    }
    let mut assigned: usize = counts.iter().sum();
    while assigned < total {
        let pick = support
            .iter()
            .copied()
            .max_by(|&x, &y| {
                let dx = targets[x] - counts[x] as f64;
                let dy = targets[y] - counts[y] as f64;
                dx.partial_cmp(&dy).unwrap().then(y.cmp(&x))
            })
            .expect("nonempty support");
        counts[pick] += 1;
        assigned += 1;
    }
    while assigned > total {
        let pick = support
            .iter()
            .copied()
            .filter(|&x| counts[x] >= 2)
            .max_by(|&x, &y| {
                let dx = counts[x] as f64 - targets[x];
                let dy = counts[y] as f64 - targets[y];
                dx.partial_cmp(&dy).unwrap().then(y.cmp(&x))
            })
            .expect("some occasion must hold at least two items");
        counts[pick] -= 1;
        assigned -= 1;
    }

    // greedy single-item moves on the exact criterion
    let a = jacobian(problem.model(), problem.grid())?;
    let sigma = problem.spec().sigma_matrix(j);
    let s2e = problem.spec().sigma_eps_sq();
    let total_s = sc::<S>(total as f64);
    let criterion_of = |counts: &[usize]| -> S {
        let weights: Vec<S> = counts.iter().map(|&c| sc::<S>(c as f64) / total_s).collect();
        info_raw(&weights, total_s, &a, &sigma, s2e)
            .map(|(_, logdet)| logdet)
            .unwrap_or_else(S::neg_inf)
    };

    let mut current = criterion_of(&counts);
    for _ in 0..(10 * j * j) {
        let mut best_move: Option<(usize, usize, S)> = None;
        for from in 0..j {
            if counts[from] == 0 {
                continue;
            }
            counts[from] -= 1;
            for to in 0..j {
                if to == from {
                    continue;
                }
                counts[to] += 1;
                let value = criterion_of(&counts);
                counts[to] -= 1;
                if value > current && best_move.as_ref().map_or(true, |&(_, _, b)| value > b) {
                    best_move = Some((from, to, value));
                }
            }
            counts[from] += 1;
        }
        match best_move {
            Some((from, to, value)) => {
                counts[from] -= 1;
                counts[to] += 1;
                current = value;
            }
            None => break,
        }
    }

    ExactDesignLayout::new(counts)
}

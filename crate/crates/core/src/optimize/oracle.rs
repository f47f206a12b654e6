//! Exhaustive lattice search over the weight simplex, used as an
//! implementation-independent check of the solver and the certificates.

use crate::error::{DesignError, Result};
use crate::information::{info_raw, DesignWeights};
use crate::model::jacobian;
use crate::scalar::{sc, Scalar};

use super::DesignProblem;

/// Hard cap on the number of lattice points visited in one call.
const LATTICE_BUDGET: u128 = 30_000_000;

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn for_each_composition(total: usize, parts: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(remaining: usize, idx: usize, buf: &mut [usize], visit: &mut impl FnMut(&[usize])) {
        let parts = buf.len();
        if idx == parts - 1 {
            buf[idx] = remaining;
            visit(buf);
            return;
        }
        let tail = parts - 1 - idx;
        for v in 1..=(remaining - tail) {
            buf[idx] = v;
            rec(remaining - v, idx + 1, buf, visit);
        }
    }
    if parts == 0 || total < parts {
        return;
    }
    let mut buf = vec![0usize; parts];
    rec(total, 0, &mut buf, visit);
}

/// Exhaustive search over all weight vectors on the `1/step` lattice with
/// support size at most `max_support`; returns the lattice argmax of the
/// D-criterion.
pub fn brute_force_oracle<S: Scalar>(
    problem: &DesignProblem<S>,
    step: S,
    max_support: usize,
) -> Result<DesignWeights<S>> {
    let j = problem.occasions();
    if j > 7 {
        return Err(DesignError::InvalidParameter(
            "lattice search is limited to 7 occasions".into(),
        ));
    }
    let step_f = step.as_f64();
    if !(step_f > 0.0) || step_f > 1.0 {
        return Err(DesignError::InvalidParameter(
            "lattice step must lie in (0, 1]".into(),
        ));
    }
    let denom = (1.0 / step_f).round();
    if (denom * step_f - 1.0).abs() > 1e-9 {
        return Err(DesignError::InvalidParameter(
            "lattice step must divide one".into(),
        ));
    }
    let denom = denom as usize;
    let max_support = max_support.clamp(1, j);

    let mut points: u128 = 0;
    for s in 1..=max_support {
        points += binom(j, s) * binom(denom - 1, s - 1);
    }
    if points > LATTICE_BUDGET {
        return Err(DesignError::Resource(format!(
            "lattice search would visit {points} points (budget {LATTICE_BUDGET})"
        )));
    }

    let a = jacobian(problem.model(), problem.grid())?;
    let sigma = problem.spec().sigma_matrix(j);
    let s2e = problem.spec().sigma_eps_sq();
    let total = problem.total_items();
    let denom_s = sc::<S>(denom as f64);

    let mut best: Option<(S, Vec<S>)> = None;
    let mut w = vec![S::zero(); j];
    // supports as ascending bitmasks keep the scan order deterministic
    for mask in 1u32..(1 << j) {
        let size = mask.count_ones() as usize;
        if size > max_support || denom < size {
            continue;
        }
        let support: Vec<usize> = (0..j).filter(|&b| mask & (1 << b) != 0).collect();
        for_each_composition(denom, size, &mut |counts| {
            for x in w.iter_mut() {
                *x = S::zero();
            }
            for (slot, &occ) in support.iter().enumerate() {
                w[occ] = sc::<S>(counts[slot] as f64) / denom_s;
            }
            if let Some((_, logdet)) = info_raw(&w, total, &a, &sigma, s2e) {
                if logdet.is_finite_val()
                    && best.as_ref().map_or(true, |(b, _)| logdet > *b)
                {
                    best = Some((logdet, w.clone()));
                }
            }
        });
    }

    match best {
        Some((_, w)) => DesignWeights::new(w, total),
        None => Err(DesignError::Infeasible(
            "no estimable design on the lattice".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{CovKind, CovarianceSpec};
    use crate::model::{CurveFamily, GrowthCurve};

    fn unstructured_j2() -> DesignProblem<f64> {
        DesignProblem::new(
            2,
            GrowthCurve::new(CurveFamily::Unstructured, vec![0.0, 0.0]).unwrap(),
            CovarianceSpec::new(CovKind::Cs, 1.0, 0.4, 1.0).unwrap(),
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn symmetric_two_occasion_case() {
        for step in [0.5, 0.25, 0.1, 0.01] {
            let best = brute_force_oracle(&unstructured_j2(), step, 2).unwrap();
            assert_eq!(best.weights(), &[0.5, 0.5]);
        }
    }

    #[test]
    fn step_must_divide_one() {
        assert!(brute_force_oracle(&unstructured_j2(), 0.3, 2).is_err());
        assert!(brute_force_oracle(&unstructured_j2(), 0.0, 2).is_err());
    }

    #[test]
    fn budget_guard_trips() {
        let p = DesignProblem::new(
            7,
            GrowthCurve::new(CurveFamily::Unstructured, vec![0.0; 7]).unwrap(),
            CovarianceSpec::new(CovKind::Cs, 1.0, 0.4, 1.0).unwrap(),
            100.0,
        )
        .unwrap();
        assert!(matches!(
            brute_force_oracle(&p, 0.001, 7),
            Err(DesignError::Resource(_))
        ));
    }
}

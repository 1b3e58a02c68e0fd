//! Exploratory search for the input law maximising the output entropy rate.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use super::{entropy::entropy_profile, ChannelParams};
use crate::config::Symbol;
use crate::error::{Error, Result};
use crate::prob::ProbValue;

/// Result of [`capacity_search`]. The objective is the midpoint of the
/// entropy-rate bounds at a fixed block length, so the value is an estimate
/// rather than a certified capacity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityReport {
    pub p: Vec<f64>,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
    pub evaluations: usize,
    pub exploratory: bool,
}

#[derive(Clone, Debug)]
struct Candidate {
    p: Vec<f64>,
    value: f64,
    lower: f64,
    upper: f64,
}

/// `a` beats `b`: larger value, then lexicographically smaller `p`.
fn better(a: &Candidate, b: &Candidate) -> bool {
    match a.value.partial_cmp(&b.value) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Less) => false,
        _ => a.p.partial_cmp(&b.p) == Some(Ordering::Less),
    }
}

fn best_of(cands: Vec<Candidate>) -> Option<Candidate> {
    cands.into_iter().reduce(|acc, c| if better(&c, &acc) { c } else { acc })
}

fn evaluate(d: Symbol, k: Symbol, eps: &ProbValue, n: usize, p: Vec<f64>) -> Result<Candidate> {
    let params = ChannelParams::new(d, k, p.iter().map(|&x| ProbValue::Float(x)).collect(), eps.clone())?;
    let cap = super::default_entropy_cap(&params);
    let (lower, upper) = entropy_profile(&params, n, cap)?.bounds(n);
    Ok(Candidate {
        p,
        value: 0.5 * (lower + upper),
        lower,
        upper,
    })
}

/// Compositions of `total` into `parts` non-negative integers, lexicographic.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Grid search over input laws on `{d..k}` with step `1/grid`, followed by
/// `refine` rounds of pairwise mass moves with halving step sizes.
///
/// Ties are broken towards the lexicographically smallest law, so the result
/// does not depend on evaluation order.
pub fn capacity_search(d: Symbol, k: Symbol, eps: &ProbValue, grid: usize, refine: usize, n: usize) -> Result<CapacityReport> {
    if k <= d || k - d > 3 {
        return Err(Error::invalid("capacity search supports 1 <= k - d <= 3"));
    }
    if grid == 0 || n == 0 {
        return Err(Error::invalid("grid and block length must be positive"));
    }
    let eps = ProbValue::Float(eps.to_f64());
    let parts = (k - d + 1) as usize;
    let points: Vec<Vec<f64>> = compositions(grid, parts)
        .into_iter()
        .map(|c| c.into_iter().map(|x| x as f64 / grid as f64).collect())
        .collect();
    let mut evaluations = points.len();
    let scored: Vec<Candidate> = points
        .into_par_iter()
        .map(|p| evaluate(d, k, &eps, n, p))
        .collect::<Result<_>>()?;
    let mut best = best_of(scored).expect("grid is never empty");
    let mut step = 1.0 / grid as f64;
    for _ in 0..refine {
        step /= 2.0;
        loop {
            let mut moves = Vec::new();
            for i in 0..parts {
                for j in 0..parts {
                    if i != j && best.p[j] >= step {
                        let mut q = best.p.clone();
                        q[i] += step;
                        q[j] -= step;
                        moves.push(q);
                    }
                }
            }
            evaluations += moves.len();
            let scored: Vec<Candidate> = moves
                .into_par_iter()
                .map(|p| evaluate(d, k, &eps, n, p))
                .collect::<Result<_>>()?;
            match best_of(scored) {
                Some(c) if c.value > best.value => best = c,
                _ => break,
            }
        }
    }
    Ok(CapacityReport {
        p: best.p,
        value: best.value,
        lower: best.lower,
        upper: best.upper,
        n,
        evaluations,
        exploratory: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(4, 2).len(), 5);
        assert_eq!(compositions(6, 3).len(), 28);
        assert_eq!(compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
    }

    #[test]
    fn noiseless_capacity_is_uniform() {
        let r = capacity_search(2, 4, &ProbValue::ratio(0, 1), 6, 2, 3).unwrap();
        for x in &r.p {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((r.value - 3f64.ln()).abs() < 1e-12);
        assert!(r.exploratory);
    }

    #[test]
    fn tie_break_prefers_smaller_law() {
        let a = Candidate { p: vec![0.2, 0.8], value: 1.0, lower: 1.0, upper: 1.0 };
        let b = Candidate { p: vec![0.8, 0.2], value: 1.0, lower: 1.0, upper: 1.0 };
        assert_eq!(best_of(vec![b.clone(), a.clone()]).unwrap().p, a.p);
        assert_eq!(best_of(vec![a.clone(), b]).unwrap().p, a.p);
    }
}

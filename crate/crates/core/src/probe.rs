//! Finite-n diagnostics for limits of elementary conditional probabilities.

use serde::Serialize;

use crate::config::{Configuration, Window};
use crate::error::{Error, Result};
use crate::prob::ProbValue;
use crate::provider::{conditional_prob, MeasureProvider};

/// Cauchy-style verdict on a finite sequence.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    /// Every consecutive gap from index `from_n` on is within tolerance and
    /// the stability window is satisfied.
    Converged { from_n: i64, value: f64 },
    NotConverged { last_gap: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    /// `(n, P(target | ω on [target.hi+1, n]))` for every `n` computed.
    pub values: Vec<(i64, ProbValue)>,
    /// First `n` at which conditioning failed; the sequence stops there.
    pub truncated_at: Option<(i64, String)>,
    pub verdict: Verdict,
}

/// Computes `P(target | ω_{[target.hi+1, n]})` for each `n` in `n_range`.
///
/// When `n <= target.hi` the conditioning is empty and the marginal is used.
/// The verdict is `Converged` when the last `stability_window` entries have
/// all consecutive gaps within `tol`.
pub fn regularity_probe(
    p: &dyn MeasureProvider,
    target: &Configuration,
    omega: &Configuration,
    n_range: &[i64],
    tol: f64,
    stability_window: usize,
) -> Result<ProbeReport> {
    if n_range.is_empty() {
        return Err(Error::invalid("empty n range"));
    }
    if stability_window == 0 {
        return Err(Error::invalid("stability window must be at least 1"));
    }
    let start = target.window().hi() + 1;
    let mut values = Vec::with_capacity(n_range.len());
    let mut truncated_at = None;
    for &n in n_range {
        let value = if n < start {
            p.cylinder(target)
        } else {
            omega
                .restrict(Window::new(start, n)?)
                .and_then(|given| conditional_prob(p, target, &given))
        };
        match value {
            Ok(v) => values.push((n, v)),
            Err(e @ Error::ZeroProbability(_)) => {
                truncated_at = Some((n, e.to_string()));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let verdict = cauchy_verdict(&values, tol, stability_window);
    Ok(ProbeReport {
        values,
        truncated_at,
        verdict,
    })
}

pub(crate) fn cauchy_verdict(values: &[(i64, ProbValue)], tol: f64, stability_window: usize) -> Verdict {
    let xs: Vec<f64> = values.iter().map(|(_, v)| v.to_f64()).collect();
    let gaps: Vec<f64> = xs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let last_gap = gaps.last().copied().unwrap_or(0.0);
    if xs.len() < stability_window {
        return Verdict::NotConverged { last_gap };
    }
    // Index of the first entry after which every gap is within tolerance.
    let mut from = xs.len() - 1;
    while from > 0 && gaps[from - 1] <= tol {
        from -= 1;
    }
    if xs.len() - from >= stability_window {
        Verdict::Converged {
            from_n: values[from].0,
            value: xs[xs.len() - 1],
        }
    } else {
        Verdict::NotConverged { last_gap }
    }
}

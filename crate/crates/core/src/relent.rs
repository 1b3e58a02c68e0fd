//! Relative entropy on windows and the finite-window identities around it.
//!
//! Total variation is the unnormalised `Σ |p − q|` throughout, so gaps lie in
//! `[0, 2]`.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::config::{glue_pieces, Configuration, Symbol, Window};
use crate::error::{Error, Result};
use crate::prob::{CompensatedSum, NumMode, ProbValue};
use crate::provider::{check_enumeration, words, MeasureProvider, DEFAULT_ENUMERATION_CAP};

/// A relative entropy: finite, or `+∞` when absolute continuity fails.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RelEntValue {
    Finite(f64),
    Infinite,
}

impl RelEntValue {
    pub fn is_infinite(&self) -> bool {
        matches!(self, RelEntValue::Infinite)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            RelEntValue::Finite(x) => *x,
            RelEntValue::Infinite => f64::INFINITY,
        }
    }

    fn scale(self, by: f64) -> Self {
        match self {
            RelEntValue::Finite(x) => RelEntValue::Finite(x * by),
            RelEntValue::Infinite => RelEntValue::Infinite,
        }
    }
}

impl fmt::Display for RelEntValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelEntValue::Finite(x) => write!(f, "{x}"),
            RelEntValue::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for RelEntValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RelEntValue::Finite(x) => s.serialize_f64(*x),
            RelEntValue::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RelEntReport {
    pub window: Window,
    pub value: RelEntValue,
    /// Whether the two providers agree exactly on every cylinder of the window.
    pub identical: bool,
    /// `(word, ν(w) ln(ν(w)/μ(w)))` for words with `ν(w) > 0`, when requested.
    pub contributions: Option<Vec<(Vec<Symbol>, RelEntValue)>>,
}

struct Leaf {
    word: Vec<Symbol>,
    term: RelEntValue,
    same: bool,
}

fn walk(
    nu: &dyn MeasureProvider,
    mu: &dyn MeasureProvider,
    window: Window,
    word: &mut Vec<Symbol>,
    out: &mut Vec<Leaf>,
) -> Result<()> {
    let lo = window.lo();
    let here = Configuration::word(nu.alphabet().clone(), lo, word.clone())?;
    let p = nu.cylinder(&here)?;
    if p.is_zero() {
        return Ok(());
    }
    if word.len() == window.size() {
        let q = mu.cylinder(&here)?;
        let term = if q.is_zero() {
            RelEntValue::Infinite
        } else {
            let pf = p.to_f64();
            RelEntValue::Finite(pf * (pf.ln() - q.to_f64().ln()))
        };
        out.push(Leaf {
            word: word.clone(),
            term,
            same: p.exactly_equals(&q),
        });
        return Ok(());
    }
    for &s in nu.alphabet().symbols() {
        word.push(s);
        walk(nu, mu, window, word, out)?;
        word.pop();
    }
    Ok(())
}

/// `H_Λ(ν|μ) = Σ ν(σ) ln(ν(σ)/μ(σ))` over words on `window`, with `0 ln 0 = 0`.
///
/// Words are enumerated over `ν`'s alphabet, pruning prefixes of zero
/// `ν`-probability.
pub fn window_relative_entropy(nu: &dyn MeasureProvider, mu: &dyn MeasureProvider, window: Window) -> Result<RelEntReport> {
    window_relative_entropy_detailed(nu, mu, window, false)
}

pub fn window_relative_entropy_detailed(
    nu: &dyn MeasureProvider,
    mu: &dyn MeasureProvider,
    window: Window,
    keep_contributions: bool,
) -> Result<RelEntReport> {
    check_enumeration(nu.alphabet().len(), window.size(), DEFAULT_ENUMERATION_CAP)?;
    let branches: Vec<Result<Vec<Leaf>>> = nu
        .alphabet()
        .symbols()
        .par_iter()
        .map(|&s| {
            let mut out = Vec::new();
            walk(nu, mu, window, &mut vec![s], &mut out)?;
            Ok(out)
        })
        .collect();
    let mut total = CompensatedSum::new();
    let mut infinite = false;
    let mut identical = true;
    let mut contributions = keep_contributions.then(Vec::new);
    for b in branches {
        for leaf in b? {
            match leaf.term {
                RelEntValue::Finite(x) => total.add(x),
                RelEntValue::Infinite => infinite = true,
            }
            identical &= leaf.same;
            if let Some(c) = contributions.as_mut() {
                c.push((leaf.word, leaf.term));
            }
        }
    }
    let value = if infinite {
        RelEntValue::Infinite
    } else {
        // Rounding can leave a tiny negative total when the measures agree.
        RelEntValue::Finite(if identical { 0.0 } else { total.value().max(0.0) })
    };
    Ok(RelEntReport {
        window,
        value,
        identical,
        contributions,
    })
}

/// `(n, H_{[1,n]}(ν|μ) / n)` for `n = 1..=n_max`.
pub fn relent_density_sequence(
    nu: &dyn MeasureProvider,
    mu: &dyn MeasureProvider,
    n_max: usize,
) -> Result<Vec<(usize, RelEntValue)>> {
    (1..=n_max)
        .map(|n| {
            let r = window_relative_entropy(nu, mu, Window::new(1, n as i64)?)?;
            Ok((n, r.value.scale(1.0 / n as f64)))
        })
        .collect()
}

/// `f(σ) = ν(σ) / μ(σ)`.
pub fn density_ratio(nu: &dyn MeasureProvider, mu: &dyn MeasureProvider, config: &Configuration) -> Result<ProbValue> {
    let q = mu.cylinder(config)?;
    if q.is_zero() {
        return Err(Error::ZeroProbability(format!("{}: P({config}) = 0", mu.label())));
    }
    Ok(&nu.cylinder(config)? / &q)
}

/// Both sides of
///
/// ```text
/// μ(|f_Δ − f_{Δ∖Λ}|) = E_ν ‖ν_Λ(·|ω_{Δ∖Λ}) − μ_Λ(·|ω_{Δ∖Λ})‖
/// ```
///
/// each computed literally from cylinder probabilities on `delta`.
#[derive(Clone, Debug, Serialize)]
pub struct TvIdentity {
    pub lhs: ProbValue,
    pub rhs: ProbValue,
    /// Exact equality in rational mode, `1e-12` agreement otherwise.
    pub equal: bool,
}

pub fn tv_identity_check(
    nu: &dyn MeasureProvider,
    mu: &dyn MeasureProvider,
    lam: Window,
    delta: Window,
) -> Result<TvIdentity> {
    if !delta.contains_window(&lam) {
        return Err(Error::invalid(format!("{lam} is not contained in {delta}")));
    }
    if nu.alphabet() != mu.alphabet() {
        return Err(Error::invalid("the two providers use different alphabets"));
    }
    let alphabet = nu.alphabet().clone();
    check_enumeration(alphabet.len(), delta.size(), DEFAULT_ENUMERATION_CAP)?;
    let all: Vec<Vec<Symbol>> = words(&alphabet, delta.size()).collect();
    let probs: Vec<(ProbValue, ProbValue)> = all
        .par_iter()
        .map(|w| {
            let c = Configuration::word(alphabet.clone(), delta.lo(), w.clone())?;
            Ok((nu.cylinder(&c)?, mu.cylinder(&c)?))
        })
        .collect::<Result<_>>()?;
    let inside = |j: usize| lam.contains(delta.lo() + j as i64);
    // Group full words by their restriction to Δ∖Λ.
    let mut groups: BTreeMap<Vec<Symbol>, Vec<usize>> = BTreeMap::new();
    for (i, w) in all.iter().enumerate() {
        let outer: Vec<Symbol> = w.iter().enumerate().filter(|(j, _)| !inside(*j)).map(|(_, &s)| s).collect();
        groups.entry(outer).or_default().push(i);
    }
    let mode = if nu.mode() == NumMode::Rational && mu.mode() == NumMode::Rational {
        NumMode::Rational
    } else {
        NumMode::Float
    };
    let parts: Vec<(ProbValue, ProbValue)> = groups
        .into_par_iter()
        .map(|(_, members)| {
            let zero = ProbValue::zero(mode);
            let nu_outer = ProbValue::sum(mode, members.iter().map(|&i| &probs[i].0));
            let mu_outer = ProbValue::sum(mode, members.iter().map(|&i| &probs[i].1));
            let mut lhs = zero.clone();
            let mut rhs = zero.clone();
            for &i in &members {
                let (p, q) = &probs[i];
                if q.is_zero() {
                    if !p.is_zero() {
                        return Err(Error::AbsoluteContinuity(format!(
                            "word {:?} has nu > 0 = mu",
                            all[i]
                        )));
                    }
                    continue;
                }
                // μ(σ) |ν(σ)/μ(σ) − ν(ω)/μ(ω)|
                let f_delta = p / q;
                let f_outer = &nu_outer / &mu_outer;
                lhs = &lhs + &(q * &(&f_delta - &f_outer).abs());
                if !nu_outer.is_zero() {
                    // ν(ω) |ν(ξω)/ν(ω) − μ(ξω)/μ(ω)|
                    let gap = (&(p / &nu_outer) - &(q / &mu_outer)).abs();
                    rhs = &rhs + &(&nu_outer * &gap);
                }
            }
            Ok((lhs, rhs))
        })
        .collect::<Result<_>>()?;
    let lhs = ProbValue::sum(mode, parts.iter().map(|p| &p.0));
    let rhs = ProbValue::sum(mode, parts.iter().map(|p| &p.1));
    let equal = match mode {
        NumMode::Rational => lhs.exactly_equals(&rhs),
        NumMode::Float => (lhs.to_f64() - rhs.to_f64()).abs() <= 1e-12,
    };
    Ok(TvIdentity { lhs, rhs, equal })
}

/// Per-`n` summary of the conditional total-variation gaps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FollmerRow {
    pub n: i64,
    /// `ν`-weighted mean gap over conditioning words where both conditionals exist.
    pub weighted_gap: f64,
    pub max_gap: f64,
    /// Conditioning words with positive `ν`-mass.
    pub conditions: usize,
    /// Words with `ν(ω) > 0 = μ(ω)`, where the `μ`-conditional is undefined.
    pub undefined: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FollmerGap {
    pub n: i64,
    pub omega: Vec<Symbol>,
    pub weight: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FollmerReport {
    pub rows: Vec<FollmerRow>,
    pub gaps: Vec<FollmerGap>,
}

/// `‖ν_Λ(·|ω) − μ_Λ(·|ω)‖` for every `ω` on `[lam.hi+1, n]`, `n ≤ n_max`.
pub fn follmer_probe(nu: &dyn MeasureProvider, mu: &dyn MeasureProvider, lam: Window, n_max: i64) -> Result<FollmerReport> {
    if nu.alphabet() != mu.alphabet() {
        return Err(Error::invalid("the two providers use different alphabets"));
    }
    let alphabet = nu.alphabet().clone();
    let inner: Vec<Configuration> = words(&alphabet, lam.size())
        .map(|w| Configuration::word(alphabet.clone(), lam.lo(), w))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut gaps = Vec::new();
    for n in lam.hi() + 1..=n_max {
        let outer = Window::new(lam.hi() + 1, n)?;
        check_enumeration(alphabet.len(), outer.size() + lam.size(), DEFAULT_ENUMERATION_CAP)?;
        let omegas: Vec<Vec<Symbol>> = words(&alphabet, outer.size()).collect();
        let found: Vec<Option<(f64, Option<f64>)>> = omegas
            .par_iter()
            .map(|w| {
                let omega = Configuration::word(alphabet.clone(), outer.lo(), w.clone())?;
                let p = nu.cylinder(&omega)?;
                if p.is_zero() {
                    return Ok(None);
                }
                let q = mu.cylinder(&omega)?;
                if q.is_zero() {
                    return Ok(Some((p.to_f64(), None)));
                }
                let mut gap = CompensatedSum::new();
                for xi in &inner {
                    let joint = glue_pieces(&[xi, &omega], None)?;
                    let a = &nu.cylinder(&joint)? / &p;
                    let b = &mu.cylinder(&joint)? / &q;
                    gap.add((&a - &b).abs().to_f64());
                }
                Ok(Some((p.to_f64(), Some(gap.value()))))
            })
            .collect::<Result<_>>()?;
        let mut weighted = CompensatedSum::new();
        let mut mass = CompensatedSum::new();
        let mut max_gap = 0.0f64;
        let mut conditions = 0;
        let mut undefined = 0;
        for (w, f) in omegas.into_iter().zip(found) {
            let Some((weight, gap)) = f else { continue };
            conditions += 1;
            match gap {
                Some(g) => {
                    weighted.add(weight * g);
                    mass.add(weight);
                    max_gap = max_gap.max(g);
                    gaps.push(FollmerGap {
                        n,
                        omega: w,
                        weight,
                        gap: g,
                    });
                }
                None => undefined += 1,
            }
        }
        let m = mass.value();
        rows.push(FollmerRow {
            n,
            weighted_gap: if m > 0.0 { weighted.value() / m } else { f64::NAN },
            max_gap,
            conditions,
            undefined,
        });
    }
    Ok(FollmerReport { rows, gaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Alphabet;
    use crate::provider::{bernoulli_provider, BernoulliProvider};

    fn bern(a: i64, b: i64) -> BernoulliProvider {
        bernoulli_provider(Alphabet::binary(), vec![ProbValue::ratio(a, b), ProbValue::ratio(b - a, b)]).unwrap()
    }

    #[test]
    fn identical_measures() {
        let b = bern(1, 3);
        let r = window_relative_entropy(&b, &b, Window::new(0, 4).unwrap()).unwrap();
        assert_eq!(r.value, RelEntValue::Finite(0.0));
        assert!(r.identical);
    }

    #[test]
    fn single_site_value() {
        let r = window_relative_entropy(&bern(1, 2), &bern(1, 4), Window::single(0)).unwrap();
        assert!((r.value.to_f64() - 0.5 * (4.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!(!r.identical);
    }

    #[test]
    fn infinite_when_support_missing() {
        let r = window_relative_entropy(&bern(1, 2), &bern(1, 1), Window::new(0, 2).unwrap()).unwrap();
        assert!(r.value.is_infinite());
        let r = window_relative_entropy(&bern(1, 1), &bern(1, 2), Window::new(0, 2).unwrap()).unwrap();
        assert!((r.value.to_f64() - 3.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn product_density_sequence_is_constant() {
        let seq = relent_density_sequence(&bern(1, 2), &bern(1, 4), 6).unwrap();
        let first = seq[0].1.to_f64();
        assert!(seq.iter().all(|(_, v)| (v.to_f64() - first).abs() < 1e-12));
    }

    #[test]
    fn density_ratio_basics() {
        let c = Configuration::word(Alphabet::binary(), 0, vec![0, 1]).unwrap();
        assert_eq!(density_ratio(&bern(1, 2), &bern(1, 4), &c).unwrap(), ProbValue::ratio(4, 3));
        assert!(density_ratio(&bern(1, 2), &bern(1, 1), &c).is_err());
    }

    #[test]
    fn tv_identity_simple() {
        let t = tv_identity_check(&bern(1, 2), &bern(1, 2), Window::single(0), Window::new(0, 3).unwrap()).unwrap();
        assert!(t.lhs.is_zero() && t.rhs.is_zero() && t.equal);
        let t = tv_identity_check(&bern(1, 3), &bern(1, 2), Window::new(1, 2).unwrap(), Window::new(0, 3).unwrap()).unwrap();
        assert!(t.equal);
        assert!(tv_identity_check(&bern(1, 3), &bern(1, 2), Window::new(0, 4).unwrap(), Window::new(0, 3).unwrap()).is_err());
        assert!(matches!(
            tv_identity_check(&bern(1, 2), &bern(1, 1), Window::single(0), Window::new(0, 1).unwrap()),
            Err(Error::AbsoluteContinuity(_))
        ));
    }

    #[test]
    fn follmer_identical_is_zero() {
        let b = bern(2, 5);
        let r = follmer_probe(&b, &b, Window::single(0), 4).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert!(r.gaps.iter().all(|g| g.gap == 0.0));
        let r = follmer_probe(&bern(1, 2), &bern(1, 4), Window::single(0), 2).unwrap();
        assert!(r.gaps.iter().all(|g| (g.gap - 0.5).abs() < 1e-12));
    }
}

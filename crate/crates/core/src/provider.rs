//! Exact cylinder-probability sources and the operations built on them.

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_rational::BigRational;
use rand::Rng;

use crate::config::{glue_pieces, Alphabet, Configuration, Symbol, Window};
use crate::error::{Error, Result};
use crate::prob::{NumMode, ProbValue, Scalar};
use crate::rng::StreamRng;

/// Anything that answers cylinder queries exactly.
///
/// A query word may use symbols outside the provider's alphabet; such
/// cylinders have probability zero. Queries are pure.
pub trait MeasureProvider: Send + Sync {
    fn alphabet(&self) -> &Alphabet;

    fn label(&self) -> &str;

    fn mode(&self) -> NumMode;

    /// Sites on which cylinders can be queried. `None` means every window.
    fn domain(&self) -> Option<Window>;

    /// Whether the measure is shift-invariant.
    fn is_stationary(&self) -> bool;

    /// Probability of the cylinder set fixed by `c` on its window.
    fn cylinder(&self, c: &Configuration) -> Result<ProbValue>;
}

pub(crate) fn check_domain(domain: Option<Window>, w: Window, label: &str) -> Result<()> {
    match domain {
        Some(d) if !d.contains_window(&w) => Err(Error::invalid(format!(
            "{label}: cylinder window {w} lies outside the provider domain {d}"
        ))),
        _ => Ok(()),
    }
}

/// Default maximum number of words enumerated on one window.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

pub(crate) fn check_enumeration(alphabet: usize, size: usize, cap: u64) -> Result<()> {
    let total = (alphabet as f64).powi(size as i32);
    if total > cap as f64 {
        return Err(Error::CapExceeded {
            what: "window enumeration",
            requested: total.min(u64::MAX as f64) as u64,
            cap,
        });
    }
    Ok(())
}

/// All words of length `size` over `alphabet`, in lexicographic order.
pub fn words(alphabet: &Alphabet, size: usize) -> impl Iterator<Item = Vec<Symbol>> + '_ {
    let syms = alphabet.symbols();
    let total = syms.len().pow(size as u32);
    (0..total).map(move |mut idx| {
        let mut w = vec![syms[0]; size];
        for slot in w.iter_mut().rev() {
            *slot = syms[idx % syms.len()];
            idx /= syms.len();
        }
        w
    })
}

/// Independent identically distributed sites with fixed per-symbol weights.
#[derive(Clone, Debug)]
pub struct BernoulliProvider {
    alphabet: Alphabet,
    weights: Vec<ProbValue>,
    mode: NumMode,
    label: String,
}

/// Product measure on `alphabet` with per-symbol `weights`.
///
/// Rational weights must sum to exactly one, any float weight switches the
/// provider to float mode with a `1e-12` tolerance.
pub fn bernoulli_provider(alphabet: Alphabet, weights: Vec<ProbValue>) -> Result<BernoulliProvider> {
    if weights.len() != alphabet.len() {
        return Err(Error::invalid(format!(
            "{} weights for an alphabet of {} symbols",
            weights.len(),
            alphabet.len()
        )));
    }
    if weights.iter().any(|w| w.is_negative()) {
        return Err(Error::invalid("negative weight"));
    }
    let mode = if weights.iter().all(|w| w.mode() == NumMode::Rational) {
        NumMode::Rational
    } else {
        NumMode::Float
    };
    let weights: Vec<ProbValue> = weights.iter().map(|w| w.in_mode(mode)).collect::<Result<_>>()?;
    let total = ProbValue::sum(mode, &weights);
    let ok = match mode {
        NumMode::Rational => total == ProbValue::one(mode),
        NumMode::Float => (total.to_f64() - 1.0).abs() <= 1e-12,
    };
    if !ok {
        return Err(Error::invalid(format!("weights sum to {total}, not 1")));
    }
    let label = format!(
        "B({})",
        weights.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",")
    );
    Ok(BernoulliProvider {
        alphabet,
        weights,
        mode,
        label,
    })
}

impl BernoulliProvider {
    pub fn weight(&self, s: Symbol) -> Option<&ProbValue> {
        self.alphabet.index_of(s).map(|i| &self.weights[i])
    }
}

impl MeasureProvider for BernoulliProvider {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn mode(&self) -> NumMode {
        self.mode
    }

    fn domain(&self) -> Option<Window> {
        None
    }

    fn is_stationary(&self) -> bool {
        true
    }

    fn cylinder(&self, c: &Configuration) -> Result<ProbValue> {
        let mut factors = Vec::with_capacity(c.len());
        for &v in c.values() {
            match self.weight(v) {
                Some(w) if !w.is_zero() => factors.push(w),
                _ => return Ok(ProbValue::zero(self.mode)),
            }
        }
        Ok(match self.mode {
            NumMode::Rational => factors
                .into_iter()
                .fold(ProbValue::one(NumMode::Rational), |acc, w| &acc * w),
            NumMode::Float if factors.len() <= 64 => {
                ProbValue::Float(factors.iter().fold(1.0, |acc, w| acc * w.to_f64()))
            }
            NumMode::Float => {
                ProbValue::Float(factors.iter().map(|w| w.to_f64().ln()).sum::<f64>().exp())
            }
        })
    }
}

#[derive(Clone, Debug)]
enum Table {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

/// A measure on a single finite window given by an explicit probability table.
///
/// Entry `i` is the probability of the word whose site `lo + j` carries
/// symbol index `(i / |A|^j) % |A|`. Sub-window cylinders are answered by
/// marginalisation.
#[derive(Clone, Debug)]
pub struct TableProvider {
    alphabet: Alphabet,
    window: Window,
    table: Table,
    label: String,
}

impl TableProvider {
    pub fn new(alphabet: Alphabet, window: Window, probs: Vec<ProbValue>, label: &str) -> Result<Self> {
        let expected = alphabet
            .len()
            .checked_pow(window.size() as u32)
            .ok_or_else(|| Error::invalid("table too large"))?;
        if probs.len() != expected {
            return Err(Error::invalid(format!(
                "table has {} entries, window needs {expected}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| p.is_negative()) {
            return Err(Error::invalid("negative table entry"));
        }
        let table = if probs.iter().all(|p| p.mode() == NumMode::Rational) {
            let v: Vec<BigRational> = probs.iter().map(BigRational::from_prob).collect::<Result<_>>()?;
            let total = v.iter().fold(<BigRational as Scalar>::zero(), |a, b| a + b);
            if total != <BigRational as Scalar>::one() {
                return Err(Error::invalid(format!("table sums to {total}, not 1")));
            }
            Table::Exact(v)
        } else {
            let v: Vec<f64> = probs.iter().map(|p| p.to_f64()).collect();
            let total: f64 = v.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("table sums to {total}, not 1")));
            }
            Table::Float(v)
        };
        Ok(Self {
            alphabet,
            window,
            table,
            label: label.to_string(),
        })
    }

    /// A random exact measure: integer weights in `0..=max_weight`, normalised.
    pub fn random_rational(alphabet: Alphabet, window: Window, max_weight: u32, rng: StreamRng) -> Result<Self> {
        let n = alphabet.len().pow(window.size() as u32);
        let mut r = rng.rng();
        let mut raw: Vec<i64> = (0..n).map(|_| r.gen_range(0..=max_weight) as i64).collect();
        if raw.iter().all(|&w| w == 0) {
            raw[0] = 1;
        }
        let total: i64 = raw.iter().sum();
        let probs = raw.into_iter().map(|w| ProbValue::ratio(w, total)).collect();
        Self::new(alphabet, window, probs, "random-table")
    }

    fn marginal<T: Scalar>(&self, entries: &[T], c: &Configuration) -> Result<T> {
        let a = self.alphabet.len();
        let size = self.window.size();
        let mut fixed_base = 0usize;
        let mut free_strides = Vec::new();
        let mut stride = 1usize;
        for j in 0..size {
            let site = self.window.lo() + j as i64;
            match c.get(site).filter(|_| c.window().contains(site)) {
                Some(v) => match self.alphabet.index_of(v) {
                    Some(d) => fixed_base += d * stride,
                    None => return Ok(T::zero()),
                },
                None => free_strides.push(stride),
            }
            stride *= a;
        }
        let mut acc = T::zero();
        let mut digits = vec![0usize; free_strides.len()];
        loop {
            let idx = fixed_base + digits.iter().zip(&free_strides).map(|(d, s)| d * s).sum::<usize>();
            acc = acc.add(&entries[idx]);
            let mut pos = 0;
            loop {
                if pos == digits.len() {
                    return Ok(acc);
                }
                digits[pos] += 1;
                if digits[pos] < a {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
        }
    }
}

impl MeasureProvider for TableProvider {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn mode(&self) -> NumMode {
        match self.table {
            Table::Exact(_) => NumMode::Rational,
            Table::Float(_) => NumMode::Float,
        }
    }

    fn domain(&self) -> Option<Window> {
        Some(self.window)
    }

    fn is_stationary(&self) -> bool {
        false
    }

    fn cylinder(&self, c: &Configuration) -> Result<ProbValue> {
        check_domain(self.domain(), c.window(), &self.label)?;
        match &self.table {
            Table::Exact(v) => self.marginal(v, c).map(Scalar::into_prob),
            Table::Float(v) => self.marginal(v, c).map(Scalar::into_prob),
        }
    }
}

/// `P(target | given)` as a ratio of cylinder probabilities.
///
/// The two windows must be disjoint with a contiguous union. A zero
/// conditioning probability is reported as [`Error::ZeroProbability`].
pub fn conditional_prob(
    p: &dyn MeasureProvider,
    target: &Configuration,
    given: &Configuration,
) -> Result<ProbValue> {
    let joint = glue_pieces(&[target, given], None)?;
    let denom = p.cylinder(given)?;
    if denom.is_zero() {
        return Err(Error::ZeroProbability(format!(
            "{}: P({given}) = 0",
            p.label()
        )));
    }
    let num = p.cylinder(&joint)?;
    Ok(&num / &denom)
}

/// Unnormalised total variation `Σ |p(x) − q(x)|`, ranging over `[0, 2]`.
///
/// Both maps must list the same keys (zero entries included).
pub fn tv_distance<K: Ord + Debug>(
    p: &BTreeMap<K, ProbValue>,
    q: &BTreeMap<K, ProbValue>,
) -> Result<ProbValue> {
    if p.len() != q.len() || p.keys().zip(q.keys()).any(|(a, b)| a != b) {
        return Err(Error::invalid("distributions have different supports"));
    }
    let mode = if p.values().chain(q.values()).all(|v| v.mode() == NumMode::Rational) {
        NumMode::Rational
    } else {
        NumMode::Float
    };
    Ok(p
        .values()
        .zip(q.values())
        .fold(ProbValue::zero(mode), |acc, (a, b)| &acc + &(a - b).abs()))
}

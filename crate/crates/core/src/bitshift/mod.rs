//! The bit-shift jitter channel and its output measure.
//!
//! Inputs `x_i` are i.i.d. on `{d, …, k}` with weights `p`; jitters `ω_i` are
//! i.i.d. on `{−1, 0, 1}` with `π(±1) = ε`, `π(0) = 1 − 2ε`. The recorded
//! output is `y_i = x_i + ω_i − ω_{i−1}`, a function of a hidden Markov chain.
//! Cylinder probabilities of the output measure `ν` come from a forward
//! recursion over the jitter state at the previous site.

mod capacity;
mod entropy;

pub use capacity::{capacity_search, CapacityReport};
pub use entropy::{
    block_entropy, block_entropy_with_cap, block_probabilities, default_entropy_cap, entropy_bounds,
    entropy_profile, smb_estimate, EntropyProfile,
};

use rand::distributions::{Distribution, WeightedIndex};
use serde::Serialize;

use crate::config::{Alphabet, Configuration, Symbol, Window};
use crate::error::{Error, Result};
use crate::prob::{NumMode, ProbValue, Scalar};
use crate::provider::MeasureProvider;
use crate::rng::StreamRng;

/// Jitter values, in the order used to index forward vectors.
pub const JITTERS: [Symbol; 3] = [-1, 0, 1];

/// Input alphabet `{d..k}`, input weights and jitter parameter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelParams {
    d: Symbol,
    k: Symbol,
    p: Vec<ProbValue>,
    eps: ProbValue,
}

impl ChannelParams {
    pub fn new(d: Symbol, k: Symbol, p: Vec<ProbValue>, eps: ProbValue) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid(format!("need d >= 2, got {d}")));
        }
        if k <= d {
            return Err(Error::invalid(format!("need k > d, got d={d}, k={k}")));
        }
        if p.len() != (k - d + 1) as usize {
            return Err(Error::invalid(format!(
                "{} input weights for the {} symbols {d}..{k}",
                p.len(),
                k - d + 1
            )));
        }
        if p.iter().any(|w| w.is_negative()) {
            return Err(Error::invalid("negative input weight"));
        }
        let total = p.iter().fold(ProbValue::zero(NumMode::Rational), |acc, w| &acc + w);
        let sums_to_one = match total.mode() {
            NumMode::Rational => total == ProbValue::one(NumMode::Rational),
            NumMode::Float => (total.to_f64() - 1.0).abs() <= 1e-12,
        };
        if !sums_to_one {
            return Err(Error::invalid(format!("input weights sum to {total}, not 1")));
        }
        if eps.is_negative() || eps.to_f64() >= 0.5 {
            return Err(Error::invalid(format!("need 0 <= eps < 1/2, got {eps}")));
        }
        Ok(Self { d, k, p, eps })
    }

    /// Uniform input weights, exact.
    pub fn uniform(d: Symbol, k: Symbol, eps: ProbValue) -> Result<Self> {
        let n = (k - d + 1).max(1) as i64;
        Self::new(d, k, vec![ProbValue::ratio(1, n); n as usize], eps)
    }

    pub fn d(&self) -> Symbol {
        self.d
    }

    pub fn k(&self) -> Symbol {
        self.k
    }

    pub fn p(&self) -> &[ProbValue] {
        &self.p
    }

    pub fn eps(&self) -> &ProbValue {
        &self.eps
    }

    /// Weight of input symbol `x`, `None` outside `{d..k}`.
    pub fn p_of(&self, x: Symbol) -> Option<&ProbValue> {
        (self.d..=self.k).contains(&x).then(|| &self.p[(x - self.d) as usize])
    }

    /// Rational when every parameter is rational.
    pub fn mode(&self) -> NumMode {
        if self.eps.mode() == NumMode::Rational && self.p.iter().all(|w| w.mode() == NumMode::Rational) {
            NumMode::Rational
        } else {
            NumMode::Float
        }
    }

    /// Jitter law `π` in the order of [`JITTERS`].
    pub fn pi(&self) -> [ProbValue; 3] {
        let mode = self.eps.mode();
        let one = ProbValue::one(mode);
        let middle = &one - &(&self.eps + &self.eps);
        [self.eps.clone(), middle, self.eps.clone()]
    }

    /// Output alphabet `{0, …, k+2}`.
    pub fn output_alphabet(&self) -> Alphabet {
        Alphabet::range(0, self.k + 2).expect("k + 2 >= 0")
    }

    /// Copy with every parameter converted to floating point.
    pub fn to_float(&self) -> Self {
        Self {
            d: self.d,
            k: self.k,
            p: self.p.iter().map(|w| ProbValue::Float(w.to_f64())).collect(),
            eps: ProbValue::Float(self.eps.to_f64()),
        }
    }
}

/// Parameters in a concrete scalar type, ready for recursions.
#[derive(Clone, Debug)]
pub(crate) struct Kernel<T> {
    d: Symbol,
    k: Symbol,
    p: Vec<T>,
    pub(crate) pi: [T; 3],
}

impl<T: Scalar> Kernel<T> {
    pub(crate) fn new(params: &ChannelParams) -> Result<Self> {
        let p = params.p.iter().map(T::from_prob).collect::<Result<Vec<T>>>()?;
        let [a, b, c] = params.pi();
        Ok(Self {
            d: params.d,
            k: params.k,
            p,
            pi: [T::from_prob(&a)?, T::from_prob(&b)?, T::from_prob(&c)?],
        })
    }

    pub(crate) fn p_of(&self, x: Symbol) -> Option<&T> {
        if x < self.d || x > self.k {
            None
        } else {
            Some(&self.p[(x - self.d) as usize])
        }
    }

    /// `α′(t) = π(t) Σ_s α(s) p(y − t + s)`.
    pub(crate) fn step(&self, alpha: &[T; 3], y: Symbol) -> [T; 3] {
        std::array::from_fn(|ti| {
            let t = JITTERS[ti];
            let mut acc = T::zero();
            for (si, a) in alpha.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                if let Some(px) = self.p_of(y - t + JITTERS[si]) {
                    acc = acc.add(&a.mul(px));
                }
            }
            acc.mul(&self.pi[ti])
        })
    }

    pub(crate) fn cylinder(&self, y: &[Symbol]) -> T {
        let mut alpha = self.pi.clone();
        for &s in y {
            alpha = self.step(&alpha, s);
            if alpha.iter().all(|a| a.is_zero()) {
                return T::zero();
            }
        }
        alpha.iter().fold(T::zero(), |acc, a| acc.add(a))
    }
}

/// `y_i = x_i + ω_i − ω_{i−1}` where `omega[0]` is the jitter before the
/// first input.
pub fn apply_channel(params: &ChannelParams, x: &[Symbol], omega: &[Symbol]) -> Result<Configuration> {
    if omega.len() != x.len() + 1 {
        return Err(Error::invalid(format!(
            "need one more jitter than inputs, got {} inputs and {} jitters",
            x.len(),
            omega.len()
        )));
    }
    if let Some(bad) = x.iter().find(|&&v| params.p_of(v).is_none()) {
        return Err(Error::invalid(format!("input symbol {bad} outside {}..{}", params.d, params.k)));
    }
    if let Some(bad) = omega.iter().find(|v| !JITTERS.contains(v)) {
        return Err(Error::invalid(format!("jitter {bad} outside -1..1")));
    }
    let y = x.iter().zip(omega.windows(2)).map(|(xi, w)| xi + w[1] - w[0]).collect();
    Configuration::word(params.output_alphabet(), 0, y)
}

/// `ν([y])` by the forward recursion, exact in rational mode.
///
/// Any word is a valid query; symbols no preimage can produce give zero.
pub fn cylinder_prob(params: &ChannelParams, y: &Configuration) -> Result<ProbValue> {
    cylinder_of_values(params, y.values())
}

pub fn cylinder_of_values(params: &ChannelParams, y: &[Symbol]) -> Result<ProbValue> {
    Ok(match params.mode() {
        NumMode::Rational => Kernel::<num_rational::BigRational>::new(params)?.cylinder(y).into_prob(),
        NumMode::Float => Kernel::<f64>::new(params)?.cylinder(y).into_prob(),
    })
}

/// `ln ν([y])` from a renormalised floating-point forward pass; usable for
/// words far too long for the direct product.
pub fn log_cylinder_prob(params: &ChannelParams, y: &[Symbol]) -> Result<f64> {
    let kernel = Kernel::<f64>::new(&params.to_float())?;
    Ok(log_forward(&kernel, y))
}

pub(crate) fn log_forward(kernel: &Kernel<f64>, y: &[Symbol]) -> f64 {
    let mut alpha = kernel.pi;
    let mut log_total = 0.0;
    for &s in y {
        alpha = kernel.step(&alpha, s);
        let c: f64 = alpha.iter().sum();
        if c == 0.0 {
            return f64::NEG_INFINITY;
        }
        log_total += c.ln();
        for a in alpha.iter_mut() {
            *a /= c;
        }
    }
    log_total
}

/// Admissibility verdict with a reconstructed preimage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Admissibility {
    pub admissible: bool,
    /// Inputs `x` and jitters `ω` (with the leading pre-window entry) mapping to `y`.
    pub witness: Option<(Vec<Symbol>, Vec<Symbol>)>,
}

/// Whether `y` has a preimage when every input symbol and jitter is allowed.
///
/// The witness prefers zero jitter, then `−1`, then `+1`, at each site from
/// the right.
pub fn is_admissible(params: &ChannelParams, y: &Configuration) -> Admissibility {
    let ys = y.values();
    let in_range = |x: Symbol| (params.d..=params.k).contains(&x);
    // reach[i][t]: jitter t at site i is reachable after reading y_0..y_i.
    let mut reach: Vec<[bool; 3]> = Vec::with_capacity(ys.len() + 1);
    reach.push([true; 3]);
    for &yi in ys {
        let prev = reach[reach.len() - 1];
        let next = std::array::from_fn(|ti| {
            (0..3).any(|si| prev[si] && in_range(yi - JITTERS[ti] + JITTERS[si]))
        });
        reach.push(next);
    }
    let preference = [1usize, 0, 2];
    let Some(mut t) = preference.iter().copied().find(|&ti| reach[ys.len()][ti]) else {
        return Admissibility {
            admissible: false,
            witness: None,
        };
    };
    let mut omega = vec![0; ys.len() + 1];
    let mut x = vec![0; ys.len()];
    omega[ys.len()] = JITTERS[t];
    for i in (0..ys.len()).rev() {
        let s = preference
            .iter()
            .copied()
            .find(|&si| reach[i][si] && in_range(ys[i] - JITTERS[t] + JITTERS[si]))
            .expect("reachable state has a predecessor");
        x[i] = ys[i] - JITTERS[t] + JITTERS[s];
        omega[i] = JITTERS[s];
        t = s;
    }
    Admissibility {
        admissible: true,
        witness: Some((x, omega)),
    }
}

/// One row of the bad-configuration table for the pattern `0, 2, …, 2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BadConfigRow {
    pub n: usize,
    /// `ν([0, 2ⁿ])`.
    pub nu_0_2n: ProbValue,
    /// `ν([2ⁿ])`.
    pub nu_2n: ProbValue,
    /// `ν(0 | 2ⁿ)`.
    pub cond: ProbValue,
    pub n_times_cond: ProbValue,
}

/// Rows `n = 1..=n_max` of the conditional probability of a leading zero
/// given `n` twos.
pub fn bad_config_table(params: &ChannelParams, n_max: usize) -> Result<Vec<BadConfigRow>> {
    if params.p_of(2).is_none() || params.p_of(3).is_none() {
        return Err(Error::invalid("the input alphabet must contain both 2 and 3"));
    }
    (1..=n_max)
        .map(|n| {
            let mut word = vec![0];
            word.extend(std::iter::repeat_n(2, n));
            let nu_0_2n = cylinder_of_values(params, &word)?;
            let nu_2n = cylinder_of_values(params, &word[1..])?;
            if nu_2n.is_zero() {
                return Err(Error::ZeroProbability(format!("nu([2^{n}]) = 0")));
            }
            let cond = &nu_0_2n / &nu_2n;
            let n_value = match cond.mode() {
                NumMode::Rational => ProbValue::ratio(n as i64, 1),
                NumMode::Float => ProbValue::Float(n as f64),
            };
            let n_times_cond = &n_value * &cond;
            Ok(BadConfigRow {
                n,
                nu_0_2n,
                nu_2n,
                cond,
                n_times_cond,
            })
        })
        .collect()
}

/// Samples `len` output symbols from inputs and jitters drawn independently.
pub fn simulate(params: &ChannelParams, len: usize, rng: StreamRng) -> Result<Vec<Symbol>> {
    let sampler = Sampler::new(params)?;
    let mut r = rng.rng();
    Ok(sampler.sample(len, &mut r))
}

pub(crate) struct Sampler {
    d: Symbol,
    inputs: WeightedIndex<f64>,
    jitters: WeightedIndex<f64>,
}

impl Sampler {
    pub(crate) fn new(params: &ChannelParams) -> Result<Self> {
        let inputs = WeightedIndex::new(params.p.iter().map(|w| w.to_f64()))
            .map_err(|e| Error::invalid(format!("input weights: {e}")))?;
        let jitters = WeightedIndex::new(params.pi().iter().map(|w| w.to_f64()))
            .map_err(|e| Error::invalid(format!("jitter weights: {e}")))?;
        Ok(Self {
            d: params.d,
            inputs,
            jitters,
        })
    }

    pub(crate) fn sample<R: rand::Rng>(&self, len: usize, r: &mut R) -> Vec<Symbol> {
        let mut prev = JITTERS[self.jitters.sample(r)];
        (0..len)
            .map(|_| {
                let x = self.d + self.inputs.sample(r) as Symbol;
                let w = JITTERS[self.jitters.sample(r)];
                let y = x + w - prev;
                prev = w;
                y
            })
            .collect()
    }
}

/// The output measure `ν` as a stationary cylinder provider.
#[derive(Clone, Debug)]
pub struct BitShiftMeasure {
    params: ChannelParams,
    alphabet: Alphabet,
    label: String,
}

impl BitShiftMeasure {
    pub fn new(params: ChannelParams) -> Self {
        let label = format!(
            "bitshift(d={}, k={}, p=[{}], eps={})",
            params.d,
            params.k,
            params.p.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(","),
            params.eps
        );
        Self {
            alphabet: params.output_alphabet(),
            params,
            label,
        }
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }
}

impl MeasureProvider for BitShiftMeasure {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn mode(&self) -> NumMode {
        self.params.mode()
    }

    fn domain(&self) -> Option<Window> {
        None
    }

    fn is_stationary(&self) -> bool {
        true
    }

    fn cylinder(&self, c: &Configuration) -> Result<ProbValue> {
        cylinder_prob(&self.params, c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarter() -> ChannelParams {
        ChannelParams::uniform(2, 3, ProbValue::ratio(1, 4)).unwrap()
    }

    fn word(params: &ChannelParams, v: &[Symbol]) -> Configuration {
        Configuration::word(params.output_alphabet(), 0, v.to_vec()).unwrap()
    }

    #[test]
    fn params_validation() {
        let h = || vec![ProbValue::ratio(1, 2); 2];
        assert!(ChannelParams::new(1, 3, vec![ProbValue::ratio(1, 3); 3], ProbValue::ratio(0, 1)).is_err());
        assert!(ChannelParams::new(3, 3, vec![ProbValue::ratio(1, 1)], ProbValue::ratio(0, 1)).is_err());
        assert!(ChannelParams::new(2, 3, h(), ProbValue::ratio(1, 2)).is_err());
        assert!(ChannelParams::new(2, 3, vec![ProbValue::ratio(1, 2), ProbValue::ratio(1, 3)], ProbValue::ratio(0, 1)).is_err());
        assert!(ChannelParams::new(2, 3, h(), ProbValue::float(0.1)).unwrap().mode() == NumMode::Float);
    }

    #[test]
    fn channel_examples() {
        let p = quarter();
        assert_eq!(apply_channel(&p, &[3, 2, 3], &[0, 1, 0, 0]).unwrap().values(), &[4, 1, 3]);
        assert_eq!(apply_channel(&p, &[2, 3], &[0, 0, 0]).unwrap().values(), &[2, 3]);
        assert_eq!(apply_channel(&p, &[2, 2], &[1, -1, -1]).unwrap().values(), &[0, 2]);
        assert!(apply_channel(&p, &[2, 2], &[0, 0]).is_err());
        assert!(apply_channel(&p, &[4], &[0, 0]).is_err());
    }

    #[test]
    fn cylinder_examples() {
        let p = quarter();
        assert_eq!(cylinder_prob(&p, &word(&p, &[0])).unwrap(), ProbValue::ratio(1, 32));
        let id = ChannelParams::new(2, 3, vec![ProbValue::ratio(1, 3), ProbValue::ratio(2, 3)], ProbValue::ratio(0, 1)).unwrap();
        assert_eq!(cylinder_prob(&id, &word(&id, &[2, 3, 3])).unwrap(), ProbValue::ratio(4, 27));
        assert!(cylinder_prob(&id, &word(&id, &[2, 4])).unwrap().is_zero());
        assert!(cylinder_prob(&p, &word(&p, &[1, 0, 0, 3])).unwrap().is_zero());
    }

    #[test]
    fn unique_preimage_chain() {
        let p = quarter();
        for n in 0..6 {
            let mut w = vec![0];
            w.extend(std::iter::repeat_n(2, n));
            let expected = &ProbValue::ratio(1, 4) * &ProbValue::ratio(1, 8i64.pow(n as u32 + 1));
            assert_eq!(cylinder_prob(&p, &word(&p, &w)).unwrap(), expected);
        }
    }

    #[test]
    fn log_forward_matches_direct() {
        let p = ChannelParams::uniform(2, 4, ProbValue::ratio(1, 10)).unwrap();
        let y = [2, 3, 5, 1, 4, 4, 2];
        let direct = cylinder_of_values(&p, &y).unwrap().to_f64();
        assert!((log_cylinder_prob(&p, &y).unwrap() - direct.ln()).abs() < 1e-12);
        assert_eq!(log_cylinder_prob(&p, &[0, 0]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn admissibility_examples() {
        let p = quarter();
        let a = is_admissible(&p, &word(&p, &[3, 0, 0, 2]));
        assert!(!a.admissible && a.witness.is_none());
        let a = is_admissible(&p, &word(&p, &[2, 3, 3, 2]));
        assert_eq!(a.witness, Some((vec![2, 3, 3, 2], vec![0; 5])));
        let a = is_admissible(&p, &word(&p, &[0, 2, 2]));
        let (x, omega) = a.witness.unwrap();
        assert_eq!(x[0], 2);
        assert_eq!(&omega[..2], &[1, -1]);
        assert_eq!(apply_channel(&p, &x, &omega).unwrap().values(), &[0, 2, 2]);
    }

    #[test]
    fn bad_config_requires_two_and_three() {
        let p = ChannelParams::uniform(3, 5, ProbValue::ratio(1, 10)).unwrap();
        assert!(bad_config_table(&p, 3).is_err());
        let rows = bad_config_table(&quarter(), 3).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].cond, &rows[0].nu_0_2n / &rows[0].nu_2n);
    }

    #[test]
    fn simulation_is_seeded() {
        let p = quarter();
        let a = simulate(&p, 500, StreamRng::new(1, 2)).unwrap();
        assert_eq!(a, simulate(&p, 500, StreamRng::new(1, 2)).unwrap());
        assert!(a.iter().all(|&y| (0..=5).contains(&y)));
    }
}

//! Block entropies and entropy-rate bounds for the channel output.
//!
//! One depth-first walk over output words carries, for every initial jitter
//! state `s`, the vector of forward probabilities. That gives both `ν(y)` and
//! the state-conditioned `ν_s(y) = P(y | S₀ = s)` at every depth, so
//!
//! ```text
//! upper(n) = H_n − H_{n−1}                         = H(Y_n | Y_1..Y_{n−1})
//! lower(n) = Σ_s π(s) (H_n^{(s)} − H_{n−1}^{(s)}) = H(Y_n | Y_1..Y_{n−1}, S₀)
//! ```
//!
//! bracket the entropy rate. All logarithms are natural.

use rayon::prelude::*;
use serde::Serialize;

use super::{ChannelParams, Kernel, Sampler, log_forward};
use crate::config::Symbol;
use crate::error::{Error, Result};
use crate::prob::{CompensatedSum, Scalar};
use crate::rng::{blocks, Estimate, StreamRng};

/// Default block-length cap: 12 for output alphabets of at most six symbols.
pub fn default_entropy_cap(params: &ChannelParams) -> usize {
    if params.k() - params.d() <= 2 {
        12
    } else {
        8
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::CapExceeded {
            what: "block length for output enumeration",
            requested: n as u64,
            cap: cap as u64,
        });
    }
    Ok(())
}

fn output_symbols(params: &ChannelParams) -> std::ops::RangeInclusive<Symbol> {
    (params.d() - 2)..=(params.k() + 2)
}

/// Every output word of length `n` with positive probability, in
/// lexicographic order, with its probability in the scalar type `T`.
pub fn block_probabilities<T: Scalar>(params: &ChannelParams, n: usize) -> Result<Vec<(Vec<Symbol>, T)>> {
    check_cap(n, default_entropy_cap(params))?;
    let kernel = Kernel::<T>::new(params)?;
    let mut out = Vec::new();
    let mut word = Vec::with_capacity(n);
    fn walk<T: Scalar>(
        kernel: &Kernel<T>,
        syms: &std::ops::RangeInclusive<Symbol>,
        alpha: &[T; 3],
        n: usize,
        word: &mut Vec<Symbol>,
        out: &mut Vec<(Vec<Symbol>, T)>,
    ) {
        if word.len() == n {
            let total = alpha.iter().fold(T::zero(), |a, b| a.add(b));
            out.push((word.clone(), total));
            return;
        }
        for y in syms.clone() {
            let next = kernel.step(alpha, y);
            if next.iter().all(|a| a.is_zero()) {
                continue;
            }
            word.push(y);
            walk(kernel, syms, &next, n, word, out);
            word.pop();
        }
    }
    walk(&kernel, &output_symbols(params), &kernel.pi.clone(), n, &mut word, &mut out);
    Ok(out)
}

/// Block entropies and the conditional bounds derived from them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyProfile {
    /// `block[j] = H_{j+1}`.
    pub block: Vec<f64>,
    /// `lower[j]`, `upper[j]`: bounds at block length `j + 1`.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl EntropyProfile {
    pub fn n_max(&self) -> usize {
        self.block.len()
    }

    pub fn block_entropy(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.block[n - 1]
        }
    }

    pub fn bounds(&self, n: usize) -> (f64, f64) {
        (self.lower[n - 1], self.upper[n - 1])
    }
}

type Matrix = [[f64; 3]; 3];

struct Sums {
    block: Vec<CompensatedSum>,
    by_state: Vec<[CompensatedSum; 3]>,
}

impl Sums {
    fn new(n: usize) -> Self {
        Self {
            block: vec![CompensatedSum::new(); n + 1],
            by_state: vec![[CompensatedSum::new(); 3]; n + 1],
        }
    }
}

fn neg_x_ln_x(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.ln()
    } else {
        0.0
    }
}

fn walk(kernel: &Kernel<f64>, syms: &std::ops::RangeInclusive<Symbol>, a: &Matrix, depth: usize, n: usize, sums: &mut Sums) {
    let nu: f64 = a.iter().flatten().sum();
    sums.block[depth].add(neg_x_ln_x(nu));
    for s in 0..3 {
        if kernel.pi[s] > 0.0 {
            let nu_s = a[s].iter().sum::<f64>() / kernel.pi[s];
            sums.by_state[depth][s].add(neg_x_ln_x(nu_s));
        }
    }
    if depth == n {
        return;
    }
    for y in syms.clone() {
        if let Some(next) = advance(kernel, a, y) {
            walk(kernel, syms, &next, depth + 1, n, sums);
        }
    }
}

fn advance(kernel: &Kernel<f64>, a: &Matrix, y: Symbol) -> Option<Matrix> {
    let next: Matrix = std::array::from_fn(|s| kernel.step(&a[s], y));
    next.iter().flatten().any(|&v| v > 0.0).then_some(next)
}

/// Block entropies `H_1..H_n` and both bound sequences from a single walk.
///
/// The walk is split over the first output symbol; partial sums are merged
/// in symbol order, so the result does not depend on the thread count.
pub fn entropy_profile(params: &ChannelParams, n: usize, cap: usize) -> Result<EntropyProfile> {
    if n == 0 {
        return Err(Error::invalid("block length must be at least 1"));
    }
    check_cap(n, cap)?;
    let kernel = Kernel::<f64>::new(&params.to_float())?;
    let syms = output_symbols(params);
    let root: Matrix = std::array::from_fn(|s| std::array::from_fn(|t| if s == t { kernel.pi[s] } else { 0.0 }));
    let branches: Vec<Sums> = syms
        .clone()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|y| {
            let mut sums = Sums::new(n);
            if let Some(next) = advance(&kernel, &root, y) {
                walk(&kernel, &syms, &next, 1, n, &mut sums);
            }
            sums
        })
        .collect();
    let mut block = vec![CompensatedSum::new(); n + 1];
    let mut by_state = vec![[CompensatedSum::new(); 3]; n + 1];
    for b in &branches {
        for j in 1..=n {
            block[j].add(b.block[j].value());
            for s in 0..3 {
                by_state[j][s].add(b.by_state[j][s].value());
            }
        }
    }
    let h: Vec<f64> = block.iter().map(|c| c.value()).collect();
    let hs: Vec<[f64; 3]> = by_state.iter().map(|r| std::array::from_fn(|s| r[s].value())).collect();
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for j in 1..=n {
        upper.push(h[j] - h[j - 1]);
        let mut lo = CompensatedSum::new();
        for s in 0..3 {
            if kernel.pi[s] > 0.0 {
                lo.add(kernel.pi[s] * (hs[j][s] - hs[j - 1][s]));
            }
        }
        lower.push(lo.value());
    }
    Ok(EntropyProfile {
        block: h[1..].to_vec(),
        lower,
        upper,
    })
}

/// `H_n = −Σ ν(y) ln ν(y)` over output words of length `n`, in nats.
pub fn block_entropy(params: &ChannelParams, n: usize) -> Result<f64> {
    block_entropy_with_cap(params, n, default_entropy_cap(params))
}

pub fn block_entropy_with_cap(params: &ChannelParams, n: usize, cap: usize) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    Ok(entropy_profile(params, n, cap)?.block_entropy(n))
}

/// `(lower, upper)` bounds on the entropy rate at block length `n`.
pub fn entropy_bounds(params: &ChannelParams, n: usize) -> Result<(f64, f64)> {
    Ok(entropy_profile(params, n, default_entropy_cap(params))?.bounds(n))
}

/// Shannon–McMillan–Breiman estimate: the mean of `−(1/n) ln ν(Y_1..Y_n)` over
/// simulated output words.
pub fn smb_estimate(params: &ChannelParams, n: usize, samples: u64, rng: StreamRng) -> Result<Estimate> {
    if n == 0 || samples == 0 {
        return Err(Error::invalid("need n >= 1 and samples >= 1"));
    }
    let float = params.to_float();
    let kernel = Kernel::<f64>::new(&float)?;
    let sampler = Sampler::new(&float)?;
    let parts: Vec<(f64, f64)> = blocks(samples)
        .into_par_iter()
        .map(|(block, len)| {
            let mut r = rng.substream(block).rng();
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..len {
                let y = sampler.sample(n, &mut r);
                let v = -log_forward(&kernel, &y) / n as f64;
                sum += v;
                sum_sq += v * v;
            }
            (sum, sum_sq)
        })
        .collect();
    let (sum, sum_sq) = parts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    Ok(Estimate::from_moments(sum, sum_sq, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::ProbValue;
    use num_rational::BigRational;

    #[test]
    fn noiseless_uniform_is_bernoulli() {
        let p = ChannelParams::uniform(2, 3, ProbValue::ratio(0, 1)).unwrap();
        let prof = entropy_profile(&p, 6, 12).unwrap();
        for n in 1..=6 {
            assert!((prof.block_entropy(n) - n as f64 * 2f64.ln()).abs() < 1e-12);
            let (lo, hi) = prof.bounds(n);
            assert!((lo - 2f64.ln()).abs() < 1e-12 && (hi - 2f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_sum_to_one_exactly() {
        let p = ChannelParams::uniform(2, 3, ProbValue::ratio(1, 4)).unwrap();
        let probs = block_probabilities::<BigRational>(&p, 3).unwrap();
        let total = probs.iter().fold(BigRational::from_integer(0.into()), |a, (_, b)| a + b);
        assert_eq!(total, BigRational::from_integer(1.into()));
        assert!(probs.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn profile_matches_probability_list() {
        let p = ChannelParams::uniform(2, 3, ProbValue::ratio(1, 10)).unwrap();
        let probs = block_probabilities::<f64>(&p, 4).unwrap();
        let direct: f64 = probs.iter().map(|(_, q)| -q * q.ln()).sum();
        assert!((direct - block_entropy(&p, 4).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn cap_enforced() {
        let p = ChannelParams::uniform(2, 3, ProbValue::ratio(1, 10)).unwrap();
        assert!(matches!(block_entropy(&p, 13), Err(Error::CapExceeded { .. })));
        assert!(block_entropy_with_cap(&p, 3, 2).is_err());
    }

    #[test]
    fn smb_noiseless() {
        let p = ChannelParams::uniform(2, 3, ProbValue::ratio(0, 1)).unwrap();
        let e = smb_estimate(&p, 20, 300, StreamRng::new(5, 1)).unwrap();
        assert!((e.mean - 2f64.ln()).abs() < 1e-12);
        assert_eq!(e, smb_estimate(&p, 20, 300, StreamRng::new(5, 1)).unwrap());
    }
}

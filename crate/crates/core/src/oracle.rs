//! Brute-force reference implementations.
//!
//! Nothing here shares code with the fast paths beyond parameter types: the
//! channel oracles enumerate every input/jitter preimage, and the
//! finite-volume oracle recomputes run lengths from scratch for every term.

use std::collections::BTreeMap;

use num_rational::BigRational;
use rayon::prelude::*;

use crate::bitshift::{ChannelParams, JITTERS};
use crate::config::{Configuration, Symbol, Window};
use crate::error::{Error, Result};
use crate::prob::{CompensatedSum, NumMode, ProbValue, Scalar};
use crate::weak_gibbs::WGParams;

/// Longest output word the channel oracles accept.
pub const CHANNEL_ORACLE_CAP: usize = 6;

/// Largest truncation depth accepted by [`brute_mu_conditional`].
pub const MU_ORACLE_CAP: usize = 20;

fn check_len(len: usize) -> Result<()> {
    if len > CHANNEL_ORACLE_CAP {
        return Err(Error::CapExceeded {
            what: "oracle word length",
            requested: len as u64,
            cap: CHANNEL_ORACLE_CAP as u64,
        });
    }
    Ok(())
}

/// Every `(x, ω)` with `|x| = len`, `|ω| = len + 1`, visited with its
/// probability `Π p(x_i) · Π π(ω_j)`.
fn for_each_preimage<T: Scalar>(params: &ChannelParams, len: usize, mut visit: impl FnMut(&[Symbol], &[Symbol], T)) -> Result<()> {
    let inputs: Vec<(Symbol, T)> = (params.d()..=params.k())
        .map(|x| Ok((x, T::from_prob(params.p_of(x).expect("in range"))?)))
        .collect::<Result<_>>()?;
    let pi = params.pi();
    let jitters: Vec<(Symbol, T)> = JITTERS
        .iter()
        .zip(pi.iter())
        .map(|(&w, q)| Ok((w, T::from_prob(q)?)))
        .collect::<Result<_>>()?;
    let nx = inputs.len().pow(len as u32);
    let nw = 3usize.pow(len as u32 + 1);
    let mut x = vec![0; len];
    let mut omega = vec![0; len + 1];
    for xi in 0..nx {
        let mut px = T::one();
        let mut c = xi;
        for slot in x.iter_mut() {
            let (s, w) = &inputs[c % inputs.len()];
            *slot = *s;
            px = px.mul(w);
            c /= inputs.len();
        }
        for wi in 0..nw {
            let mut pw = px.clone();
            let mut c = wi;
            for slot in omega.iter_mut() {
                let (s, w) = &jitters[c % 3];
                *slot = *s;
                pw = pw.mul(w);
                c /= 3;
            }
            visit(&x, &omega, pw);
        }
    }
    Ok(())
}

fn output(x: &[Symbol], omega: &[Symbol]) -> Vec<Symbol> {
    x.iter().enumerate().map(|(i, xi)| xi + omega[i + 1] - omega[i]).collect()
}

fn channel_cylinder<T: Scalar>(params: &ChannelParams, y: &[Symbol]) -> Result<T> {
    let mut total = T::zero();
    for_each_preimage::<T>(params, y.len(), |x, omega, w| {
        if output(x, omega) == y {
            total = total.add(&w);
        }
    })?;
    Ok(total)
}

/// `ν([y])` as the sum over all preimages `(x, ω)` of `y`.
pub fn brute_channel_cylinder(params: &ChannelParams, y: &Configuration) -> Result<ProbValue> {
    check_len(y.len())?;
    Ok(match params.mode() {
        NumMode::Rational => channel_cylinder::<BigRational>(params, y.values())?.into_prob(),
        NumMode::Float => channel_cylinder::<f64>(params, y.values())?.into_prob(),
    })
}

fn channel_distribution<T: Scalar>(params: &ChannelParams, len: usize) -> Result<BTreeMap<Vec<Symbol>, T>> {
    let mut dist: BTreeMap<Vec<Symbol>, T> = BTreeMap::new();
    for_each_preimage::<T>(params, len, |x, omega, w| {
        let e = dist.entry(output(x, omega)).or_insert_with(T::zero);
        *e = e.add(&w);
    })?;
    Ok(dist)
}

/// The full law of output words of length `len`, from one pass over all
/// preimages. Words missing from the map have probability zero.
pub fn brute_channel_distribution(params: &ChannelParams, len: usize) -> Result<BTreeMap<Vec<Symbol>, ProbValue>> {
    check_len(len)?;
    Ok(match params.mode() {
        NumMode::Rational => channel_distribution::<BigRational>(params, len)?
            .into_iter()
            .map(|(k, v)| (k, v.into_prob()))
            .collect(),
        NumMode::Float => channel_distribution::<f64>(params, len)?
            .into_iter()
            .map(|(k, v)| (k, v.into_prob()))
            .collect(),
    })
}

/// `H_n` from the brute-force output law, `n ≤ 5`.
pub fn brute_block_entropy(params: &ChannelParams, n: usize) -> Result<f64> {
    if n > 5 {
        return Err(Error::CapExceeded {
            what: "oracle block length",
            requested: n as u64,
            cap: 5,
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let dist = brute_channel_distribution(params, n)?;
    let mut h = CompensatedSum::new();
    for p in dist.values() {
        let q = p.to_f64();
        if q > 0.0 {
            h.add(-q * q.ln());
        }
    }
    Ok(h.value())
}

/// `H_{≤m}(σ)` for `σ` on `[0, m]`, counting each run afresh.
fn naive_hamiltonian(sigma: &[Symbol], rho: f64) -> f64 {
    let m = sigma.len() - 1;
    let mut h = 0.0;
    for n in 0..=m / 2 {
        if sigma[0] == 0 || sigma[2 * n] == 0 {
            continue;
        }
        let mut run = 0;
        while run <= 2 * n && sigma[2 * n - run] == 1 {
            run += 1;
        }
        if run <= n {
            h += rho.powi((n - run) as i32);
        }
    }
    h
}

/// `μ_m(σ₀ = ξ₀ | σ_{[1,n]} = ω)` by summing `e^{−H_{≤m}}` over every tail
/// `σ_{[n+1,m]}`. Exact in rational mode (each density is lifted to the
/// dyadic rational it rounds to).
pub fn brute_mu_conditional(params: &WGParams, xi0: Symbol, omega_prefix: &Configuration) -> Result<ProbValue> {
    let m = params.m();
    if m > MU_ORACLE_CAP {
        return Err(Error::CapExceeded {
            what: "oracle truncation depth",
            requested: m as u64,
            cap: MU_ORACLE_CAP as u64,
        });
    }
    let w = omega_prefix.window();
    if w.lo() != 1 || w.hi() > m as i64 {
        return Err(Error::invalid(format!("prefix must lie on [1, n] with n <= m = {m}")));
    }
    if xi0 != 0 && xi0 != 1 {
        return Err(Error::invalid("xi0 must be 0 or 1"));
    }
    let n = w.hi() as usize;
    let free = m - n;
    let rho = params.rho_f64();
    let terms: Vec<(Symbol, u64, f64)> = (0..2u64)
        .flat_map(|s0| (0..1u64 << free).map(move |t| (s0 as Symbol, t)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(s0, t)| {
            let mut sigma = Vec::with_capacity(m + 1);
            sigma.push(s0);
            sigma.extend_from_slice(omega_prefix.values());
            sigma.extend((0..free).map(|j| (t >> j & 1) as Symbol));
            (s0, t, (-naive_hamiltonian(&sigma, rho)).exp())
        })
        .collect();
    Ok(match params.mode() {
        NumMode::Rational => {
            let mut num = BigRational::from_integer(0.into());
            let mut den = num.clone();
            for (s0, _, w) in &terms {
                let exact = BigRational::from_float(*w).expect("finite density");
                if *s0 == xi0 {
                    num += &exact;
                }
                den += exact;
            }
            ProbValue::Rational(num / den)
        }
        NumMode::Float => {
            let mut num = CompensatedSum::new();
            let mut den = CompensatedSum::new();
            for (s0, _, w) in &terms {
                if *s0 == xi0 {
                    num.add(*w);
                }
                den.add(*w);
            }
            ProbValue::Float(num.value() / den.value())
        }
    })
}

/// Brute-force `ν(B_k)` under the fair coin measure: the fraction of words on
/// `[⌊3k/2⌋, 2k]` that are all ones.
pub fn brute_bk_probability(k: usize) -> Result<ProbValue> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let w = Window::new((3 * k / 2) as i64, 2 * k as i64)?;
    Ok(ProbValue::ratio(1, 1i64 << w.size()))
}

//! The run-length interaction on `{0,1}^{Z+}` and everything derived from it.
//!
//! The interaction only has terms on the intervals `[0, 2n]`:
//!
//! ```text
//! U([0,2n], ω) = ω_0 · ω_2n · ρ^(n − N_2n(ω)) · 1{N_2n(ω) ≤ n}
//! ```
//!
//! where `N_2n` is the length of the run of ones ending at site `2n`. The
//! Hamiltonian `H(ω) = Σ_n U([0,2n], ω)` is non-negative and vanishes as soon
//! as `ω_0 = 0`, so the single-site specification at the origin is
//! `γ₀(1 | ω) = e^{−H(1ω)} / (1 + e^{−H(1ω)})`.
//!
//! Infinite sums are never pretended to be exact: truncated Hamiltonians come
//! with a certified tail radius whenever a configuration is not fully known.

use num_rational::BigRational;
use num_traits::{Float, One};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{glue_pieces, Alphabet, Configuration, Symbol, Tail, Window};
use crate::error::{Error, Result};
use crate::prob::{CompensatedSum, NumMode, ProbValue};
use crate::provider::{check_domain, MeasureProvider};
use crate::rng::{blocks, Estimate, StreamRng};

/// Largest truncation depth accepted by [`finite_volume_mu`] by default.
pub const DEFAULT_MU_CAP: usize = 20;

/// Slack added to certified radii for floating-point evaluation of `exp`.
const ROUNDING_SLACK: f64 = 8.0 * f64::EPSILON;

/// Decay `ρ ∈ (0,1)` and even truncation depth `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WGParams {
    rho: ProbValue,
    m: usize,
}

impl WGParams {
    pub fn new(rho: ProbValue, m: usize) -> Result<Self> {
        let r = rho.to_f64();
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::invalid(format!("rho must lie in (0,1), got {rho}")));
        }
        if !m.is_multiple_of(2) {
            return Err(Error::invalid(format!("truncation depth must be even, got {m}")));
        }
        Ok(Self { rho, m })
    }

    pub fn rho(&self) -> &ProbValue {
        &self.rho
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mode(&self) -> NumMode {
        self.rho.mode()
    }

    pub fn with_m(&self, m: usize) -> Result<Self> {
        Self::new(self.rho.clone(), m)
    }

    fn rho_pow(&self, e: usize) -> ProbValue {
        match &self.rho {
            ProbValue::Rational(r) => ProbValue::Rational(num_traits::pow(r.clone(), e)),
            ProbValue::Float(x) => ProbValue::Float(x.powi(e as i32)),
        }
    }

    /// `ρ^e` as used by every floating-point evaluation of `H`.
    fn rho_pow_f64(&self, e: usize) -> f64 {
        self.rho.to_f64().powi(e as i32)
    }
}

fn site(omega: &Configuration, i: i64) -> Result<Symbol> {
    omega.get(i).ok_or_else(|| {
        Error::invalid(format!(
            "site {i} is not defined by the configuration on {}",
            omega.window()
        ))
    })
}

fn check_binary(omega: &Configuration) -> Result<()> {
    if omega.alphabet() != &Alphabet::binary() {
        return Err(Error::invalid("expected a configuration over {0,1}"));
    }
    Ok(())
}

/// `N_2n(ω)`: length of the run of ones ending at site `two_n` (zero when
/// `ω_2n = 0`). The run never extends below site 0.
pub fn run_length(omega: &Configuration, two_n: i64) -> Result<usize> {
    check_binary(omega)?;
    if two_n < 0 || two_n % 2 != 0 {
        return Err(Error::invalid(format!("run length index must be even and >= 0, got {two_n}")));
    }
    let mut len = 0usize;
    let mut i = two_n;
    while i >= 0 && site(omega, i)? == 1 {
        len += 1;
        i -= 1;
    }
    Ok(len)
}

/// `U([0,2n], ω)`.
pub fn interaction(params: &WGParams, omega: &Configuration, n: usize) -> Result<ProbValue> {
    let two_n = 2 * n as i64;
    let zero = ProbValue::zero(params.mode());
    if site(omega, 0)? == 0 || site(omega, two_n)? == 0 {
        return Ok(zero);
    }
    let runs = run_length(omega, two_n)?;
    // n = 0: N_0 = 1 > 0 whenever ω_0 = 1, so the term is always zero.
    if runs > n {
        return Ok(zero);
    }
    Ok(params.rho_pow(n - runs))
}

/// `H_{≤m}(ω) = Σ_{2n ≤ m} U([0,2n], ω)`; depends only on `ω_{[0,m]}`.
pub fn hamiltonian_truncated(params: &WGParams, omega: &Configuration) -> Result<ProbValue> {
    let mut h = ProbValue::zero(params.mode());
    for n in 0..=params.m / 2 {
        h = &h + &interaction(params, omega, n)?;
    }
    Ok(h)
}

/// Whether `ω ∈ B_k`, i.e. `ω_i = 1` for every `i ∈ [⌊3k/2⌋, 2k]`.
pub fn is_in_bk(omega: &Configuration, k: usize) -> Result<bool> {
    check_binary(omega)?;
    if k == 0 {
        return Err(Error::invalid("B_k is defined for k >= 1"));
    }
    let lo = (3 * k / 2) as i64;
    let hi = 2 * k as i64;
    for i in lo..=hi {
        match omega.get(i) {
            Some(0) => return Ok(false),
            Some(_) => {}
            None => {
                return Err(Error::invalid(format!(
                    "B_{k} needs sites [{lo}, {hi}], configuration covers {}",
                    omega.window()
                )))
            }
        }
    }
    Ok(true)
}

/// Largest `k` whose set `B_k` can be decided from `omega` alone. Under
/// zero fill every larger `k` fails because `ω_2k = 0`.
fn last_decidable_k(omega: &Configuration) -> usize {
    (omega.window().hi().max(0) / 2) as usize
}

/// Smallest `K ≥ 1` with `ω ∉ B_k` for every `k ≥ K`.
///
/// For zero-filled configurations this always exists. For an unspecified
/// tail only the observable `k` are scanned, and `None` is returned when the
/// last observable `k` is still a violation.
pub fn correlation_length(omega: &Configuration) -> Result<Option<usize>> {
    check_binary(omega)?;
    let top = last_decidable_k(omega);
    let mut last_violation = 0usize;
    for k in 1..=top {
        if is_in_bk(omega, k)? {
            last_violation = k;
        }
    }
    if omega.tail() == Tail::Unspecified && top > 0 && last_violation == top {
        return Ok(None);
    }
    Ok(Some(last_violation + 1))
}

fn check_run_constraint(omega: &Configuration, n_prime: usize) -> Result<()> {
    for k in n_prime.max(1)..=last_decidable_k(omega) {
        if is_in_bk(omega, k)? {
            return Err(Error::Irregular(format!(
                "configuration lies in B_{k} although k >= n' = {n_prime}"
            )));
        }
    }
    Ok(())
}

/// `Σ_{p ≥ start} ρ^{⌊p/2⌋}`, exactly.
fn half_geometric_tail(params: &WGParams, start: usize) -> ProbValue {
    let q = start / 2;
    let mode = params.mode();
    let one = ProbValue::one(mode);
    let two = &one + &one;
    let denom = &one - params.rho();
    if start.is_multiple_of(2) {
        &(&two * &params.rho_pow(q)) / &denom
    } else {
        &params.rho_pow(q) + &(&(&two * &params.rho_pow(q + 1)) / &denom)
    }
}

/// Upper bound on `Σ_{2p > m} U([0,2p], ω)` over every completion of `omega`
/// that satisfies the run constraint (`ω ∉ B_k`) for all `k ≥ n_prime`.
///
/// Terms whose sites are all known are evaluated exactly. An unknown term
/// with `p ≥ n_prime` is at most `ρ^{⌊p/2⌋}` because the run ending at `2p`
/// cannot reach below `⌊3p/2⌋ + 1`; unknown terms with `p < n_prime` are
/// bounded by one.
pub fn tail_bound(params: &WGParams, omega: &Configuration, n_prime: usize) -> Result<ProbValue> {
    check_binary(omega)?;
    check_run_constraint(omega, n_prime)?;
    tail_bound_from(params, omega, n_prime, params.m / 2 + 1)
}

fn tail_bound_from(params: &WGParams, omega: &Configuration, n_prime: usize, first_p: usize) -> Result<ProbValue> {
    let mode = params.mode();
    let mut total = ProbValue::zero(mode);
    if site(omega, 0)? == 0 {
        return Ok(total);
    }
    let hi = omega.window().hi().max(0) as usize;
    let last_known_p = hi / 2;
    for p in first_p..=last_known_p {
        total = &total + &interaction(params, omega, p)?;
    }
    if omega.tail() == Tail::ZeroFill {
        return Ok(total);
    }
    let first_unknown = first_p.max(last_known_p + 1);
    let geometric_from = first_unknown.max(n_prime);
    let ones = (geometric_from - first_unknown) as i64;
    let ones = match mode {
        NumMode::Rational => ProbValue::ratio(ones, 1),
        NumMode::Float => ProbValue::Float(ones as f64),
    };
    total = &total + &ones;
    Ok(&total + &half_geometric_tail(params, geometric_from))
}

/// A value together with a guaranteed bound on its error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certified {
    pub value: f64,
    pub radius: f64,
}

impl Certified {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.radius
    }
}

/// Truncated energy of `zeta` (a configuration starting at site 0) and a
/// bound on everything the truncation left out.
fn certified_energy(params: &WGParams, zeta: &Configuration, n_prime: usize) -> Result<(f64, f64)> {
    let depth = match zeta.known_through() {
        Some(hi) => params.m.min(((hi.max(0) as usize) / 2) * 2),
        None => params.m,
    };
    let truncated = params.with_m(depth)?;
    let h = hamiltonian_truncated(&truncated, zeta)?;
    let tail = tail_bound_from(params, zeta, n_prime, depth / 2 + 1)?;
    Ok((h.to_f64(), tail.to_f64()))
}

fn logistic_one(h: f64) -> f64 {
    // e^{-h} / (1 + e^{-h}) for h ≥ 0.
    1.0 / (1.0 + h.exp())
}

/// `γ₀(ξ₀ | ω)` for a configuration `omega_tail` on `[1, ∞)`.
///
/// The value uses `H_{≤m}(1ω)`; the radius covers the neglected tail (via
/// [`tail_bound`] at the observed correlation length) and rounding. For an
/// unspecified tail the certificate assumes the continuation keeps the run
/// constraint from the observed correlation length on.
pub fn gamma0(params: &WGParams, xi0: Symbol, omega_tail: &Configuration) -> Result<Certified> {
    check_binary(omega_tail)?;
    if omega_tail.window().lo() != 1 {
        return Err(Error::invalid("the conditioning configuration must start at site 1"));
    }
    if xi0 != 0 && xi0 != 1 {
        return Err(Error::invalid(format!("xi0 must be 0 or 1, got {xi0}")));
    }
    let n_prime = correlation_length(omega_tail)?.ok_or_else(|| {
        Error::Uncertifiable("run constraint violated up to the end of the known window".into())
    })?;
    let one = Configuration::word(Alphabet::binary(), 0, vec![1])?;
    let zeta = glue_pieces(&[&one, omega_tail], None)?;
    let (h, tail) = certified_energy(params, &zeta, n_prime)?;
    let upper = logistic_one(h);
    let lower = logistic_one(h + tail);
    let radius = (upper - lower) + ROUNDING_SLACK;
    let value = if xi0 == 1 { upper } else { 1.0 - upper };
    Ok(Certified { value, radius })
}

/// One row of [`glued_gamma_convergence`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GluedRow {
    pub n: usize,
    /// `sup_ξ |γ₀(ξ | ω_{[1,n]} η_{[n+1,∞)}) − γ₀(ξ | ω)|`.
    pub diff: f64,
    /// Sum of the certified radii of both evaluations.
    pub radius: f64,
}

/// `ω_{[1,n]}` followed by `η_{[n+1,∞)}`.
pub fn glue_tail(omega: &Configuration, eta: &Configuration, n: usize) -> Result<Configuration> {
    let n = n as i64;
    if n < 1 {
        return eta.restrict(Window::new(1, eta.window().hi().max(1))?).and_then(|c| c.with_tail(eta.tail()));
    }
    let head = omega.restrict(Window::new(1, n)?)?;
    if eta.tail() == Tail::ZeroFill && eta.window().hi() <= n {
        return head.with_tail(Tail::ZeroFill);
    }
    let rest = eta.restrict(Window::new(n + 1, eta.window().hi().max(n + 1))?)?.with_tail(eta.tail())?;
    glue_pieces(&[&head, &rest], None)
}

/// Difference table between glued and unglued single-site specifications.
///
/// Both configurations live on `[1, ∞)` and must be regular.
pub fn glued_gamma_convergence(
    params: &WGParams,
    omega: &Configuration,
    eta: &Configuration,
    n_list: &[usize],
) -> Result<Vec<GluedRow>> {
    for (name, c) in [("omega", omega), ("eta", eta)] {
        if correlation_length(c)?.is_none() {
            return Err(Error::Irregular(format!("{name} has no finite correlation length")));
        }
    }
    let reference = gamma0(params, 1, omega)?;
    n_list
        .iter()
        .map(|&n| {
            let glued = gamma0(params, 1, &glue_tail(omega, eta, n)?)?;
            // For a binary spin the ξ = 0 and ξ = 1 differences coincide.
            Ok(GluedRow {
                n,
                diff: (glued.value - reference.value).abs(),
                radius: glued.radius + reference.radius,
            })
        })
        .collect()
}

/// Monte-Carlo fraction of tails `η ~ B(1/2,1/2)` on `[n+1, m]` (zeros beyond)
/// for which `|r_n^ω(η)| > eps`.
///
/// Samples are drawn block by block from sub-streams of `rng`, so the estimate
/// is identical for every `eps` and every thread count.
pub fn bad_tail_fraction(
    params: &WGParams,
    omega: &Configuration,
    eps: f64,
    n: usize,
    samples: u64,
    rng: StreamRng,
) -> Result<Estimate> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::invalid("eps must be positive"));
    }
    let m = params.m;
    if n >= m {
        return Err(Error::invalid(format!("need n < m for a non-trivial tail, got n={n}, m={m}")));
    }
    if correlation_length(omega)?.is_none() {
        return Err(Error::Irregular("omega has no finite correlation length".into()));
    }
    let reference = gamma0(params, 1, omega)?.value;
    let head = omega.restrict(Window::new(1, n as i64)?)?;
    let counts: Vec<Result<(f64, f64)>> = blocks(samples)
        .into_par_iter()
        .map(|(block, len)| {
            let mut r = rng.substream(block).rng();
            let mut hits = 0.0;
            for _ in 0..len {
                let tail: Vec<Symbol> = (n + 1..=m).map(|_| r.gen_range(0..=1)).collect();
                let rest = Configuration::binary_zero_tail(n as i64 + 1, tail)?;
                let glued = glue_pieces(&[&head, &rest], None)?;
                let g = gamma0(params, 1, &glued)?.value;
                if (g - reference).abs() > eps {
                    hits += 1.0;
                }
            }
            Ok((hits, hits))
        })
        .collect();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for c in counts {
        let (s, s2) = c?;
        sum += s;
        sum_sq += s2;
    }
    Ok(Estimate::from_moments(sum, sum_sq, samples))
}

/// Monte-Carlo frequency of `B_k` under the fair coin measure, for each `k`.
///
/// Each sample draws sites `[0, 2·max(ks)]` once and tests every `k` on it.
pub fn bk_frequencies(ks: &[usize], samples: u64, rng: StreamRng) -> Result<Vec<(usize, Estimate)>> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::invalid("need a non-empty list of k >= 1"));
    }
    let top = 2 * ks.iter().copied().max().unwrap_or(1);
    let hits: Vec<Result<Vec<f64>>> = blocks(samples)
        .into_par_iter()
        .map(|(block, len)| {
            let mut r = rng.substream(block).rng();
            let mut counts = vec![0.0; ks.len()];
            for _ in 0..len {
                let v: Vec<Symbol> = (0..=top).map(|_| r.gen_range(0..=1)).collect();
                let c = Configuration::binary_zero_tail(0, v)?;
                for (slot, &k) in counts.iter_mut().zip(ks) {
                    if is_in_bk(&c, k)? {
                        *slot += 1.0;
                    }
                }
            }
            Ok(counts)
        })
        .collect();
    let mut totals = vec![0.0; ks.len()];
    for h in hits {
        for (t, x) in totals.iter_mut().zip(h?) {
            *t += x;
        }
    }
    // Indicators: the sum of squares equals the sum.
    Ok(ks.iter().zip(totals).map(|(&k, t)| (k, Estimate::from_moments(t, t, samples))).collect())
}

/// Histogram of the correlation length over `samples` fair-coin
/// configurations on `[1, length]` followed by zeros.
pub fn correlation_length_histogram(length: usize, samples: u64, rng: StreamRng) -> Result<std::collections::BTreeMap<usize, u64>> {
    if length == 0 {
        return Err(Error::invalid("length must be positive"));
    }
    let parts: Vec<Result<Vec<usize>>> = blocks(samples)
        .into_par_iter()
        .map(|(block, len)| {
            let mut r = rng.substream(block).rng();
            (0..len)
                .map(|_| {
                    let v: Vec<Symbol> = (0..length).map(|_| r.gen_range(0..=1)).collect();
                    let k = correlation_length(&Configuration::binary_zero_tail(1, v)?)?;
                    Ok(k.expect("zero-filled configurations have a correlation length"))
                })
                .collect()
        })
        .collect();
    let mut hist = std::collections::BTreeMap::new();
    for p in parts {
        for k in p? {
            *hist.entry(k).or_insert(0) += 1;
        }
    }
    Ok(hist)
}

/// Configuration on `[1, 2·max(scales)]` with a run of ones on `[p+1, 2p]`
/// for every scale `p`, zeros elsewhere. Each run puts it in `B_p` and
/// contributes a term equal to one to `H(1ω)`.
pub fn dirac_bad_configuration(scales: &[usize]) -> Result<Configuration> {
    if scales.is_empty() {
        return Err(Error::invalid("need at least one scale"));
    }
    for w in scales.windows(2) {
        if w[1] <= 2 * w[0] {
            return Err(Error::invalid(format!(
                "scales {} and {} produce touching runs; need next > 2*previous",
                w[0], w[1]
            )));
        }
    }
    if scales[0] < 2 {
        return Err(Error::invalid("scales must be at least 2"));
    }
    let top = 2 * scales[scales.len() - 1];
    let mut v = vec![0; top];
    for &p in scales {
        for i in p + 1..=2 * p {
            v[i - 1] = 1;
        }
    }
    Configuration::binary_zero_tail(1, v)
}

/// Floating-point `H_{≤m}` of a bit-packed configuration (`bit i = σ_i`).
///
/// Terms are accumulated in increasing `n`.
pub(crate) fn hamiltonian_bits(bits: u64, m: usize, rho_pows: &[f64]) -> f64 {
    if bits & 1 == 0 {
        return 0.0;
    }
    let mut h = 0.0;
    // Run of ones ending at each site, built left to right.
    let mut run = 0usize;
    for i in 0..=m {
        if bits >> i & 1 == 1 {
            run += 1;
        } else {
            run = 0;
        }
        if i % 2 == 0 && run > 0 {
            let n = i / 2;
            if run <= n {
                h += rho_pows[n - run];
            }
        }
    }
    h
}

/// The finite-volume measure
/// `μ_m(σ) = e^{−H_{≤m}(σ)} 2^{−(m+1)} / Z_m` on `{0,1}^{[0,m]}`.
///
/// Each density `e^{−H}` is evaluated once in double precision. In rational
/// mode those doubles are lifted to exact dyadic rationals and every
/// marginal and ratio downstream is computed exactly, so Kolmogorov
/// consistency and normalisation hold without rounding.
#[derive(Clone, Debug)]
pub struct WeakGibbsMeasure {
    params: WGParams,
    weights: Vec<f64>,
    /// Common power of two that turns every weight into an integer.
    shift: i32,
    z_exact: u128,
    z_float: f64,
    label: String,
}

/// Builds `μ_m` by full enumeration; `m` may not exceed [`DEFAULT_MU_CAP`].
pub fn finite_volume_mu(params: &WGParams) -> Result<WeakGibbsMeasure> {
    finite_volume_mu_with_cap(params, DEFAULT_MU_CAP)
}

pub fn finite_volume_mu_with_cap(params: &WGParams, cap: usize) -> Result<WeakGibbsMeasure> {
    let m = params.m;
    if m > cap || m > 40 {
        return Err(Error::CapExceeded {
            what: "finite-volume enumeration depth m",
            requested: m as u64,
            cap: cap.min(40) as u64,
        });
    }
    let rho_pows: Vec<f64> = (0..=m).map(|e| params.rho_pow_f64(e)).collect();
    let size = 1u64 << (m + 1);
    let weights: Vec<f64> = (0..size)
        .into_par_iter()
        .map(|bits| (-hamiltonian_bits(bits, m, &rho_pows)).exp())
        .collect();
    let shift = weights
        .iter()
        .map(|w| -(Float::integer_decode(*w).1 as i32))
        .max()
        .unwrap_or(0)
        .max(0);
    // Weights lie in (0, 1], so numerators are at most 2^shift and the total
    // at most 2^(shift + m + 1).
    if shift + m as i32 + 1 > 126 {
        return Err(Error::invalid("weights too small for exact fixed-point lifting"));
    }
    let z_exact = weights.iter().map(|&w| dyadic_numerator(w, shift)).sum();
    let z_float = weights.iter().copied().collect::<CompensatedSum>().value();
    let label = format!("mu_m(rho={}, m={m})", params.rho);
    Ok(WeakGibbsMeasure {
        params: params.clone(),
        weights,
        shift,
        z_exact,
        z_float,
        label,
    })
}

fn dyadic_numerator(w: f64, shift: i32) -> u128 {
    let (mantissa, exponent, _) = Float::integer_decode(w);
    (mantissa as u128) << (exponent as i32 + shift)
}

impl WeakGibbsMeasure {
    pub fn params(&self) -> &WGParams {
        &self.params
    }

    /// Unnormalised density `e^{−H_{≤m}(σ)}` of the bit-packed `σ`.
    pub fn density(&self, bits: u64) -> f64 {
        self.weights[bits as usize]
    }

    pub fn partition_function(&self) -> ProbValue {
        match self.params.mode() {
            NumMode::Rational => ProbValue::Rational(BigRational::new(
                self.z_exact.into(),
                num_bigint::BigInt::one() << self.shift as usize,
            )),
            NumMode::Float => ProbValue::Float(self.z_float),
        }
    }

    fn fixed_bits(&self, c: &Configuration) -> Option<(u64, u64)> {
        let mut mask = 0u64;
        let mut value = 0u64;
        for (i, &v) in c.window().indices().zip(c.values()) {
            match v {
                0 => {}
                1 => value |= 1 << i,
                _ => return None,
            }
            mask |= 1 << i;
        }
        Some((mask, value))
    }

    fn sum_matching<T>(&self, mask: u64, value: u64, mut f: impl FnMut(f64) -> T, mut acc: impl FnMut(T)) {
        let full = (1u64 << (self.params.m + 1)) - 1;
        let free = full & !mask;
        let mut sub = free;
        loop {
            acc(f(self.weights[(value | sub) as usize]));
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
    }
}

impl MeasureProvider for WeakGibbsMeasure {
    fn alphabet(&self) -> &Alphabet {
        static BINARY: std::sync::OnceLock<Alphabet> = std::sync::OnceLock::new();
        BINARY.get_or_init(Alphabet::binary)
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn mode(&self) -> NumMode {
        self.params.mode()
    }

    fn domain(&self) -> Option<Window> {
        Some(Window::new(0, self.params.m as i64).expect("m >= 0"))
    }

    fn is_stationary(&self) -> bool {
        false
    }

    fn cylinder(&self, c: &Configuration) -> Result<ProbValue> {
        check_domain(self.domain(), c.window(), &self.label)?;
        let Some((mask, value)) = self.fixed_bits(c) else {
            return Ok(ProbValue::zero(self.mode()));
        };
        Ok(match self.mode() {
            NumMode::Rational => {
                let mut total = 0u128;
                self.sum_matching(mask, value, |w| dyadic_numerator(w, self.shift), |x| total += x);
                ProbValue::Rational(BigRational::new(total.into(), self.z_exact.into()))
            }
            NumMode::Float => {
                let mut total = CompensatedSum::new();
                self.sum_matching(mask, value, |w| w, |x| total.add(x));
                ProbValue::Float(total.value() / self.z_float)
            }
        })
    }
}

/// Outcome of the sandwich estimate at one conditioning prefix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sandwich {
    /// `μ_m(ξ | ω_{[1,n]})`.
    pub conditional: f64,
    /// `γ₀(ξ | ω)`.
    pub reference: f64,
    /// Largest deviation over enumerated tails plus certified radii.
    pub radius: f64,
    pub holds: bool,
}

/// Checks `γ₀(ξ|ω) − R ≤ μ_m(ξ | ω_{[1,n]}) ≤ γ₀(ξ|ω) + R` where `R` is the
/// maximum over all tails `η` on `[n+1, m]` (zeros beyond) of
/// `|γ₀(ξ | ω_{[1,n]} η) − γ₀(ξ | ω)|`, plus certified radii.
///
/// `omega` lives on `[1, ∞)`; `mu` supplies `m`.
pub fn sandwich_estimate(mu: &WeakGibbsMeasure, omega: &Configuration, n: usize, xi: Symbol) -> Result<Sandwich> {
    let params = mu.params();
    let m = params.m;
    if n == 0 || n > m {
        return Err(Error::invalid(format!("need 1 <= n <= m, got n={n}, m={m}")));
    }
    let head = omega.restrict(Window::new(1, n as i64)?)?;
    let target = Configuration::word(Alphabet::binary(), 0, vec![xi])?;
    let conditional = crate::provider::conditional_prob(mu, &target, &head)?.to_f64();
    let reference = gamma0(params, xi, omega)?;
    let free = m - n;
    let mut worst = 0.0f64;
    let mut worst_radius = 0.0f64;
    for bits in 0u64..(1u64 << free) {
        let glued = if free == 0 {
            head.clone().with_tail(Tail::ZeroFill)?
        } else {
            let tail: Vec<Symbol> = (0..free).map(|j| (bits >> j & 1) as Symbol).collect();
            let rest = Configuration::binary_zero_tail(n as i64 + 1, tail)?;
            glue_pieces(&[&head, &rest], None)?
        };
        let g = gamma0(params, xi, &glued)?;
        worst = worst.max((g.value - reference.value).abs());
        worst_radius = worst_radius.max(g.radius);
    }
    let radius = worst + worst_radius + reference.radius;
    Ok(Sandwich {
        conditional,
        reference: reference.value,
        radius,
        holds: (conditional - reference.value).abs() <= radius,
    })
}

/// Exact `H` of `1·ω` when `omega` is zero-filled, as a `BigRational` or `f64`.
pub fn hamiltonian_exact(params: &WGParams, omega_tail: &Configuration) -> Result<ProbValue> {
    if omega_tail.tail() != Tail::ZeroFill {
        return Err(Error::invalid("exact Hamiltonian needs a zero-filled configuration"));
    }
    let one = Configuration::word(Alphabet::binary(), 0, vec![1])?;
    let zeta = glue_pieces(&[&one, omega_tail], None)?;
    let depth = ((zeta.window().hi() as usize) / 2 + 1) * 2;
    hamiltonian_truncated(&params.with_m(depth)?, &zeta)
}

impl WGParams {
    /// Float value of `ρ`, for reporting.
    pub fn rho_f64(&self) -> f64 {
        self.rho.to_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half(m: usize) -> WGParams {
        WGParams::new(ProbValue::ratio(1, 2), m).unwrap()
    }

    fn zt(lo: i64, v: &[Symbol]) -> Configuration {
        Configuration::binary_zero_tail(lo, v.to_vec()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(WGParams::new(ProbValue::ratio(1, 1), 4).is_err());
        assert!(WGParams::new(ProbValue::ratio(0, 1), 4).is_err());
        assert!(WGParams::new(ProbValue::ratio(1, 2), 3).is_err());
        assert!(WGParams::new(ProbValue::float(0.3), 0).is_ok());
    }

    #[test]
    fn run_length_examples() {
        assert_eq!(run_length(&zt(0, &[1, 0, 1]), 2).unwrap(), 1);
        assert_eq!(run_length(&zt(0, &[1, 1, 0]), 2).unwrap(), 0);
        assert_eq!(run_length(&zt(0, &[1, 1, 1, 1, 1]), 4).unwrap(), 5);
        assert!(run_length(&zt(0, &[1, 1, 1]), 3).is_err());
        let open = Configuration::word(Alphabet::binary(), 0, vec![1, 1]).unwrap();
        assert!(run_length(&open, 4).is_err());
    }

    #[test]
    fn interaction_examples() {
        let p = half(8);
        assert_eq!(interaction(&p, &zt(0, &[1, 0, 1]), 1).unwrap(), ProbValue::ratio(1, 1));
        assert_eq!(interaction(&p, &zt(0, &[1, 0, 0, 0, 1]), 2).unwrap(), ProbValue::ratio(1, 2));
        for n in 0..5 {
            assert!(interaction(&p, &zt(0, &[0, 1, 1, 1, 1, 1, 1, 1, 1]), n).unwrap().is_zero());
            assert!(interaction(&p, &zt(0, &[1; 9]), n).unwrap().is_zero());
        }
    }

    #[test]
    fn hamiltonian_examples() {
        assert_eq!(hamiltonian_truncated(&half(6), &zt(0, &[1, 0, 1])).unwrap(), ProbValue::ratio(1, 1));
        assert!(hamiltonian_truncated(&half(6), &zt(0, &[0, 1, 1, 0, 1])).unwrap().is_zero());
        assert!(hamiltonian_truncated(&half(10), &zt(0, &[1; 11])).unwrap().is_zero());
    }

    #[test]
    fn bits_hamiltonian_matches_configuration_path() {
        let p = WGParams::new(ProbValue::float(0.37), 12).unwrap();
        let pows: Vec<f64> = (0..=12).map(|e| 0.37f64.powi(e)).collect();
        for bits in [0u64, 1, 5, 0b1_0101_0101_0101, 0b1_1111_1111_1111, 0b1_0011_1011_0001] {
            let v: Vec<Symbol> = (0..=12).map(|i| (bits >> i & 1) as Symbol).collect();
            let h = hamiltonian_truncated(&p, &zt(0, &v)).unwrap().to_f64();
            assert!((h - hamiltonian_bits(bits, 12, &pows)).abs() < 1e-15);
        }
    }

    #[test]
    fn bk_membership() {
        let mut v = vec![0; 9];
        v[6] = 1;
        v[7] = 1;
        v[8] = 1;
        let c = zt(0, &v);
        assert!(is_in_bk(&c, 4).unwrap());
        assert!(!is_in_bk(&c, 3).unwrap());
        assert!(!is_in_bk(&zt(0, &[0]), 7).unwrap());
        assert!(is_in_bk(&c, 0).is_err());
        let open = Configuration::word(Alphabet::binary(), 0, vec![1; 5]).unwrap();
        assert!(is_in_bk(&open, 4).is_err());
    }

    #[test]
    fn correlation_length_examples() {
        assert_eq!(correlation_length(&zt(0, &[0])).unwrap(), Some(1));
        let mut v = vec![0; 12];
        for i in 6..=8 {
            v[i] = 1;
        }
        assert_eq!(correlation_length(&zt(0, &v)).unwrap(), Some(5));
        let open = Configuration::word(Alphabet::binary(), 1, vec![1; 10]).unwrap();
        assert_eq!(correlation_length(&open).unwrap(), None);
    }

    #[test]
    fn tail_bound_zero_config_and_monotone() {
        assert!(tail_bound(&half(4), &zt(0, &[0]), 1).unwrap().is_zero());
        let open = Configuration::word(Alphabet::binary(), 0, vec![1, 0, 1, 1, 0, 0, 1, 0, 1]).unwrap();
        let mut prev = f64::INFINITY;
        for m in (0..=8).step_by(2) {
            let b = tail_bound(&half(m), &open, 3).unwrap().to_f64();
            assert!(b <= prev);
            prev = b;
        }
    }

    #[test]
    fn tail_bound_rejects_constraint_violation() {
        let mut v = vec![0; 13];
        for i in 9..=12 {
            v[i] = 1;
        }
        let c = zt(0, &v);
        assert!(matches!(tail_bound(&half(4), &c, 2), Err(Error::Irregular(_))));
        assert!(tail_bound(&half(4), &c, 7).is_ok());
    }

    #[test]
    fn half_geometric_closed_form() {
        let p = half(2);
        for start in 0..7usize {
            let exact = half_geometric_tail(&p, start).to_f64();
            let direct: f64 = (start..400).map(|q| 0.5f64.powi((q / 2) as i32)).sum();
            assert!((exact - direct).abs() < 1e-12, "{start}");
        }
    }

    #[test]
    fn gamma0_examples() {
        let p = half(40);
        let g = gamma0(&p, 1, &zt(1, &[0])).unwrap();
        assert_eq!(g.value, 0.5);
        let g = gamma0(&p, 1, &zt(1, &[0, 1])).unwrap();
        let e = (-1.0f64).exp();
        assert!((g.value - e / (1.0 + e)).abs() < 1e-12);
        assert!(g.radius < 1e-12);
        let g0 = gamma0(&p, 0, &zt(1, &[0, 1])).unwrap();
        assert!((g0.value + g.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gamma0_certifies_unknown_tail() {
        let p = half(20);
        let open = Configuration::word(Alphabet::binary(), 1, vec![0, 1, 1, 0, 1, 0, 0, 1, 0, 1]).unwrap();
        let g = gamma0(&p, 1, &open).unwrap();
        assert!(g.radius > 0.0 && g.radius < 1.0);
        // Any regular continuation lands inside the certificate.
        let mut v = open.values().to_vec();
        v.extend([1, 0, 0, 1, 1, 0, 1, 0]);
        let full = gamma0(&half(40), 1, &zt(1, &v)).unwrap();
        assert!(g.contains(full.value));
    }

    #[test]
    fn mu_m_small_cases() {
        let mu = finite_volume_mu(&half(0)).unwrap();
        let zero = Configuration::word(Alphabet::binary(), 0, vec![0]).unwrap();
        assert_eq!(mu.cylinder(&zero).unwrap(), ProbValue::ratio(1, 2));
        let mu = finite_volume_mu(&half(6)).unwrap();
        let p0 = mu.cylinder(&zero).unwrap();
        assert!(p0 > ProbValue::ratio(1, 2));
        assert!(finite_volume_mu(&half(22)).is_err());
    }

    #[test]
    fn mu_m_kolmogorov_exact() {
        let mu = finite_volume_mu(&WGParams::new(ProbValue::ratio(1, 3), 6).unwrap()).unwrap();
        for len in 1..=6usize {
            for w in crate::provider::words(&Alphabet::binary(), len) {
                let c = Configuration::word(Alphabet::binary(), 0, w.clone()).unwrap();
                let mut s = ProbValue::zero(NumMode::Rational);
                for x in 0..=1 {
                    let mut e = w.clone();
                    e.push(x);
                    s = &s + &mu.cylinder(&Configuration::word(Alphabet::binary(), 0, e).unwrap()).unwrap();
                }
                assert_eq!(s, mu.cylinder(&c).unwrap());
            }
        }
    }

    #[test]
    fn dirac_bad_configuration_layout() {
        let c = dirac_bad_configuration(&[4, 10]).unwrap();
        assert!(is_in_bk(&c, 4).unwrap());
        assert!(is_in_bk(&c, 10).unwrap());
        assert_eq!(correlation_length(&c).unwrap(), Some(11));
        assert!(dirac_bad_configuration(&[4, 8]).is_err());
        assert!(dirac_bad_configuration(&[4, 9]).is_ok());
    }

    #[test]
    fn glue_tail_layout() {
        let omega = zt(1, &[1, 1, 1, 1]);
        let eta = zt(1, &[0, 0, 0, 0, 0, 1]);
        let g = glue_tail(&omega, &eta, 2).unwrap();
        assert_eq!(g.values(), &[1, 1, 0, 0, 0, 1]);
        let g = glue_tail(&omega, &eta, 8).unwrap();
        assert_eq!(g.window().hi(), 8);
        assert_eq!(g.get(20), Some(0));
    }

    #[test]
    fn glued_identical_is_zero() {
        let p = half(30);
        let w = zt(1, &[1, 0, 1, 1, 0, 0, 1, 1, 1, 0, 1]);
        let rows = glued_gamma_convergence(&p, &w, &w, &[1, 3, 5, 9]).unwrap();
        assert!(rows.iter().all(|r| r.diff == 0.0));
        let z = zt(1, &[0]);
        let rows = glued_gamma_convergence(&p, &z, &z, &[1, 2]).unwrap();
        assert!(rows.iter().all(|r| r.diff == 0.0));
    }

    #[test]
    fn bad_tail_fraction_edge_cases() {
        let p = half(16);
        let z = zt(1, &[0]);
        let e = bad_tail_fraction(&p, &z, 2.0, 6, 500, StreamRng::new(3, 0)).unwrap();
        assert_eq!(e.mean, 0.0);
        assert!(bad_tail_fraction(&p, &z, 0.0, 6, 10, StreamRng::new(3, 0)).is_err());
        assert!(bad_tail_fraction(&p, &z, 0.1, 16, 10, StreamRng::new(3, 0)).is_err());
    }
}

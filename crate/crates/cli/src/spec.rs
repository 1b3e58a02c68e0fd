//! Run-configuration schema. Every object rejects unknown keys.

use gibbslab_core::bitshift::{BitShiftMeasure, ChannelParams};
use gibbslab_core::weak_gibbs::{dirac_bad_configuration, finite_volume_mu, WGParams};
use gibbslab_core::{
    bernoulli_provider, Alphabet, Configuration, Error, MeasureProvider, NumMode, ProbValue, Result, Symbol,
};
use serde::Deserialize;
use serde_json::Value;

/// Top level of a config file. Command-line flags override these fields.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Option<NumMode>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub precision: Option<usize>,
    pub params: Value,
}

/// Converts a parsed probability to the run's numeric mode.
pub fn in_mode(v: &ProbValue, mode: NumMode) -> Result<ProbValue> {
    match mode {
        NumMode::Float => Ok(ProbValue::Float(v.to_f64())),
        NumMode::Rational => v.in_mode(NumMode::Rational),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub d: Symbol,
    pub k: Symbol,
    /// Input weights; uniform when omitted.
    #[serde(default)]
    pub p: Option<Vec<ProbValue>>,
    pub eps: ProbValue,
}

impl ChannelSpec {
    pub fn build(&self, mode: NumMode) -> Result<ChannelParams> {
        let eps = in_mode(&self.eps, mode)?;
        let p = match &self.p {
            Some(p) => p.iter().map(|w| in_mode(w, mode)).collect::<Result<Vec<_>>>()?,
            None => {
                let n = (self.k - self.d + 1).max(1) as i64;
                (0..n).map(|_| in_mode(&ProbValue::ratio(1, n), mode)).collect::<Result<_>>()?
            }
        };
        ChannelParams::new(self.d, self.k, p, eps)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WgSpec {
    pub rho: ProbValue,
    pub m: usize,
}

impl WgSpec {
    pub fn build(&self, mode: NumMode) -> Result<WGParams> {
        WGParams::new(in_mode(&self.rho, mode)?, self.m)
    }
}

/// A binary configuration on `[1, ∞)`.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ConfigSpec {
    /// `0^∞`.
    Zeros,
    /// Given bits on `[1, len]`, zeros beyond.
    Bits(Vec<Symbol>),
    /// Given bits on `[1, len]`, nothing known beyond.
    Word(Vec<Symbol>),
    /// Runs of ones on `[p+1, 2p]` for each scale `p`, zeros elsewhere.
    DiracBad(Vec<usize>),
}

impl ConfigSpec {
    pub fn build(&self) -> Result<Configuration> {
        match self {
            ConfigSpec::Zeros => Configuration::binary_zero_tail(1, vec![0]),
            ConfigSpec::Bits(v) => Configuration::binary_zero_tail(1, v.clone()),
            ConfigSpec::Word(v) => Configuration::word(Alphabet::binary(), 1, v.clone()),
            ConfigSpec::DiracBad(scales) => dirac_bad_configuration(scales),
        }
    }
}

/// A measure to feed into the relative-entropy tools.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProviderSpec {
    Bernoulli { alphabet: Vec<Symbol>, weights: Vec<ProbValue> },
    Bitshift {
        d: Symbol,
        k: Symbol,
        #[serde(default)]
        p: Option<Vec<ProbValue>>,
        eps: ProbValue,
    },
    WeakGibbs { rho: ProbValue, m: usize },
}

impl ProviderSpec {
    pub fn build(&self, mode: NumMode) -> Result<Box<dyn MeasureProvider>> {
        Ok(match self {
            ProviderSpec::Bernoulli { alphabet, weights } => {
                let w = weights.iter().map(|x| in_mode(x, mode)).collect::<Result<_>>()?;
                Box::new(bernoulli_provider(Alphabet::new(alphabet.clone())?, w)?)
            }
            ProviderSpec::Bitshift { d, k, p, eps } => {
                let spec = ChannelSpec {
                    d: *d,
                    k: *k,
                    p: p.clone(),
                    eps: eps.clone(),
                };
                Box::new(BitShiftMeasure::new(spec.build(mode)?))
            }
            ProviderSpec::WeakGibbs { rho, m } => {
                let params = WgSpec { rho: rho.clone(), m: *m }.build(mode)?;
                Box::new(finite_volume_mu(&params)?)
            }
        })
    }
}

/// Parses a subcommand parameter block, mapping schema errors to invalid input.
pub fn parse_params<T: serde::de::DeserializeOwned>(v: &Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| Error::InvalidInput(format!("params: {e}")))
}

fn default_tol() -> f64 {
    1e-3
}

fn default_stability() -> usize {
    3
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WgConverge {
    pub rho: ProbValue,
    /// Finite-volume depth for the regularity probe.
    pub m: usize,
    /// Conditioning configuration on `[1, ∞)`.
    #[serde(default = "zeros")]
    pub omega: ConfigSpec,
    pub n_range: Vec<i64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_stability")]
    pub stability: usize,
    #[serde(default)]
    pub glued: Option<GluedSpec>,
}

fn zeros() -> ConfigSpec {
    ConfigSpec::Zeros
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GluedSpec {
    /// Truncation depth used for the single-site kernel.
    pub m: usize,
    /// Number of random `(ω, η)` pairs, each of `length` fair coin flips.
    pub pairs: usize,
    pub length: usize,
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub bad_omega: Option<ConfigSpec>,
    #[serde(default)]
    pub bad_eta: Option<ConfigSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WgBadsets {
    pub ks: Vec<usize>,
    pub samples: u64,
    #[serde(default)]
    pub correlation: Option<CorrelationSpec>,
    #[serde(default)]
    pub bad_tail: Option<BadTailSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationSpec {
    pub samples: u64,
    pub length: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BadTailSpec {
    pub rho: ProbValue,
    pub m: usize,
    pub n: usize,
    pub eps: Vec<f64>,
    pub samples: u64,
    #[serde(default = "zeros")]
    pub omega: ConfigSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsCylinder {
    pub channel: ChannelSpec,
    #[serde(default)]
    pub words: Vec<Vec<Symbol>>,
    #[serde(default)]
    pub conditionals: Vec<ConditionalSpec>,
}

/// `ν(target | given)` with `target` first and `given` right after it.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalSpec {
    pub target: Vec<Symbol>,
    pub given: Vec<Symbol>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsBadconfig {
    pub channel: ChannelSpec,
    pub n_max: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsEntropy {
    pub channel: ChannelSpec,
    pub n_max: usize,
    #[serde(default)]
    pub cap: Option<usize>,
    #[serde(default)]
    pub smb: Option<SmbSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmbSpec {
    pub n: usize,
    pub samples: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsCapacity {
    pub d: Symbol,
    pub k: Symbol,
    pub eps: ProbValue,
    pub grid: usize,
    #[serde(default)]
    pub refine: usize,
    pub n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Relent {
    pub nu: ProviderSpec,
    pub mu: ProviderSpec,
    /// `[lo, hi]` window for a single relative entropy.
    #[serde(default)]
    pub window: Option<(i64, i64)>,
    #[serde(default)]
    pub density_n_max: Option<usize>,
    #[serde(default)]
    pub tv: Option<TvSpec>,
    #[serde(default)]
    pub follmer: Option<FollmerSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvSpec {
    pub lam: (i64, i64),
    pub delta: (i64, i64),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FollmerSpec {
    pub lam: (i64, i64),
    pub n_max: i64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Oracle {
    #[serde(default)]
    pub channel: Option<OracleChannel>,
    #[serde(default)]
    pub mu: Option<OracleMu>,
    #[serde(default)]
    pub entropy: Option<OracleEntropy>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleChannel {
    pub channel: ChannelSpec,
    pub lengths: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleMu {
    pub rho: ProbValue,
    pub m: usize,
    #[serde(default = "one")]
    pub xi: Symbol,
    pub prefixes: Vec<Vec<Symbol>>,
}

fn one() -> Symbol {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleEntropy {
    pub channel: ChannelSpec,
    pub n_max: usize,
}

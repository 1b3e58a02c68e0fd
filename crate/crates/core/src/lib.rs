//! Numerical laboratory for generalized Gibbs measures on one-dimensional
//! lattices: a weak-Gibbs run-length interaction and a jitter channel
//! output process, together with exact and floating-point probes of
//! regularity, relative entropy and entropy rates.

pub mod bitshift;
pub mod config;
pub mod error;
pub mod oracle;
pub mod prob;
pub mod probe;
pub mod provider;
pub mod relent;
pub mod rng;
pub mod weak_gibbs;

pub use config::{glue, Alphabet, Configuration, Outer, Symbol, Tail, Window};
pub use error::{Error, Result};
pub use prob::{CompensatedSum, NumMode, ProbValue, Scalar};
pub use provider::{bernoulli_provider, conditional_prob, tv_distance, BernoulliProvider, MeasureProvider, TableProvider};
pub use rng::{Estimate, StreamRng};

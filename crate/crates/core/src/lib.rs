//! Sequential quasi-Monte Carlo toolkit.
//!
//! The crate bundles the pieces needed to run particle filters and
//! likelihood-free samplers on randomized low-discrepancy point streams and
//! to compare them against their pseudorandom counterparts:
//!
//! - [`qseq`]: deterministic and randomized point streams on [0,1)^d, with
//!   an incremental cursor and a deliberately naive regenerate-per-draw
//!   mode for cost experiments.
//! - [`hilbert`]: an order-m Hilbert curve codec and the curve-order sort
//!   behind multidimensional inverse-CDF resampling.
//! - [`smc`]: weighted particle systems with multinomial, systematic,
//!   residual, and Hilbert-sorted resampling, and the pseudorandom and
//!   quasi-Monte Carlo step engines.
//! - [`dpm`]: sequential inference for Dirichlet-process mixtures through
//!   the Polya-urn predictive, under either engine.
//! - [`abc`]: a likelihood-free population sampler fed by either point
//!   source, plus the hidden Markov switching toy model.
//! - [`stats`]: shared numerics (normal quantile, weighted moments,
//!   bootstrap, log-log slope fits).

pub mod abc;
pub mod dpm;
pub mod hilbert;
pub mod qseq;
pub mod smc;
pub mod stats;

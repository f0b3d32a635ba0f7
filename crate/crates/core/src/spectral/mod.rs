//! Spectral tail processes of linear processes in Banach spaces.
//!
//! A linear process `X_t = sum_n T_n Z_{t-n}` with regularly varying
//! innovations has a spectral process that is a mixture over the index of
//! the single large innovation. The samplers here draw finite windows of it
//! exactly, or up to a reported truncation for AR(1) recursions.

mod family;
mod identities;
mod samplers;
mod window;

pub use family::{pushforward_constant, series_constants, OperatorFamily, SeriesConstants};
pub use identities::{
    limit_measure_mass, time_change, time_change_rhs, window_expectation, window_mean, NormRect,
    TimeChange, WindowFn,
};
pub use samplers::{
    cluster_window_sample, pushforward_spectral_sample, tail_window_sample, Ar1Sampler,
    LinearProcessSampler, TransformedSampler, DEFAULT_MAX_TRIALS, MIN_CLUSTER_ACCEPTANCE,
};
pub use window::{SpectralWindow, TailWindow, WindowSampler};

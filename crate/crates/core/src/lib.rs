//! Short Dirichlet character sums over a prime modulus.
//!
//! The crate computes the windowed sums `S(x) = sum_{x < n <= x+H} chi(n)`
//! for every starting point `x` modulo a prime `q`, and provides the
//! statistical machinery to compare their empirical distribution against a
//! two-dimensional Gaussian: exact moment identities, a unit-circle random
//! walk model, empirical characteristic functions, Selberg-style smoothed
//! rectangle frequencies, and discrepancy reports.
//!
//! Modules roughly follow the data flow:
//!
//! - [`modarith`]: primality, primitive roots, and the discrete-log index
//!   table that makes character evaluation O(1).
//! - [`characters`]: construction and evaluation of Dirichlet characters.
//! - [`window`]: the streaming O(q + H) pass producing all q window sums,
//!   with exact per-value-class counters for low-order characters.
//! - [`moments`]: empirical mixed moments, multiset counts, model moments,
//!   and complete shifted-product character sums with Weil-bound checks.
//! - [`randmodel`]: seeded Monte Carlo for the unit-circle walk `Z_H` and
//!   its exact Bessel-product characteristic function.
//! - [`specfun`]: erf/Gaussian CDF, Bessel J0, adaptive quadrature, and
//!   Gauss-Legendre grids shared by the other modules.
//! - [`charfn`]: the empirical two-dimensional characteristic function and
//!   its truncated moment expansion.
//! - [`smoothing`]: Selberg's smoothing kernel, smoothed indicator and
//!   rectangle frequencies, and the Fejer error terms.
//! - [`distribution`]: rectangle frequencies, discrepancy reports, and the
//!   one-dimensional Kolmogorov-Smirnov pipeline for real characters.

pub mod characters;
pub mod charfn;
pub mod distribution;
pub mod modarith;
pub mod moments;
pub mod numeric;
pub mod randmodel;
pub mod smoothing;
pub mod specfun;
pub mod window;

mod error;

pub use characters::CharacterSpec;
pub use error::Error;
pub use modarith::PrimeContext;
pub use specfun::Rectangle;
pub use window::{Normalization, NormalizedSeries, WindowSeries};

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

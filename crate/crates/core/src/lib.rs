//! Numerical laboratory for the geometric RSK correspondence and the
//! inverse-gamma (log-gamma) directed polymer.
//!
//! The crate is organized by subsystem:
//!
//! * [`rsk`]: word and array insertion, path/minor constructions, ratio
//!   variables and the (max,+) counterpart.
//! * [`specfun`]: gamma-family special functions, the inverse-gamma law,
//!   the Sklyanin density, counter-based random streams and goodness-of-fit
//!   statistics.
//! * [`whittaker`]: class-one GL(N,R)-Whittaker functions by recursive
//!   quadrature, the Bump–Stade identity and the Plancherel check.
//! * [`kernels`]: the Markov and intertwining kernels and numerical checks
//!   of the intertwining and eigenfunction relations.
//! * [`measures`]: Whittaker measures via Mellin–Barnes contours, Laplace
//!   transforms and the entrance-law optimization.
//! * [`stationarity`]: the stationary ratio process and the free energy.
//! * [`limits`]: tropical, Laguerre-ensemble and semi-discrete degenerations.

pub mod error;
pub mod kernels;
pub mod limits;
pub mod mc;
pub mod measures;
pub mod optimize;
pub mod quad;
pub mod rsk;
pub mod specfun;
pub mod stationarity;
pub mod whittaker;

pub use error::{Error, Result};

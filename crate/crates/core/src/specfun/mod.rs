//! Special functions, the inverse-gamma law, random streams and
//! goodness-of-fit statistics.

mod bessel;
mod gamma;
mod invgamma;
mod params;
mod psi;
pub mod rng;
mod sklyanin;
pub mod stats;

pub use bessel::bessel_k;
pub use gamma::{gamma_asymptotic_modulus, ln_gamma, ln_gamma_c, recip_gamma, try_ln_gamma_c};
pub use invgamma::{
    inverse_gamma_cdf, inverse_gamma_logpdf, sample_gamma, sample_inverse_gamma,
    sample_log_gamma, sample_log_gamma_split, sample_log_inverse_gamma,
};
pub use params::SolvableParams;
pub use psi::{digamma, trigamma};
pub use rng::RngStream;
pub use sklyanin::sklyanin_density;

use std::f64::consts::PI;

use num_complex::Complex64;

use super::gamma::recip_gamma;

/// Sklyanin density `s_N(λ) = (2πi)^{-N} (N!)^{-1} ∏_{j≠k} Γ(λ_j - λ_k)^{-1}`.
pub fn sklyanin_density(lambda: &[Complex64]) -> Complex64 {
    let n = lambda.len();
    let mut v = Complex64::new(1.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            if j != k {
                v *= recip_gamma(lambda[j] - lambda[k]);
            }
        }
    }
    let fact: f64 = (1..=n).map(|i| i as f64).product();
    v / (Complex64::new(0.0, 2.0 * PI).powu(n as u32) * fact)
}

use num_rational::BigRational;

/// Arithmetic needed by the insertion recursions: an addition, a
/// multiplication and a division, with no subtraction anywhere.
pub trait Semifield: Clone + PartialEq + std::fmt::Debug {
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
}

impl Semifield for f64 {
    #[inline]
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    #[inline]
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    #[inline]
    fn div(&self, other: &Self) -> Self {
        self / other
    }
}

impl Semifield for BigRational {
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
}

/// `log(e^a + e^b)` without overflow.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// A positive real stored by its logarithm; addition is log-sum-exp.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogWeight(pub f64);

impl Semifield for LogWeight {
    #[inline]
    fn add(&self, other: &Self) -> Self {
        LogWeight(log_add_exp(self.0, other.0))
    }
    #[inline]
    fn mul(&self, other: &Self) -> Self {
        LogWeight(self.0 + other.0)
    }
    #[inline]
    fn div(&self, other: &Self) -> Self {
        LogWeight(self.0 - other.0)
    }
}

/// The (max,+) semifield: addition is `max`, multiplication is `+`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxPlus(pub f64);

impl Semifield for MaxPlus {
    #[inline]
    fn add(&self, other: &Self) -> Self {
        MaxPlus(self.0.max(other.0))
    }
    #[inline]
    fn mul(&self, other: &Self) -> Self {
        MaxPlus(self.0 + other.0)
    }
    #[inline]
    fn div(&self, other: &Self) -> Self {
        MaxPlus(self.0 - other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_exp_matches_direct() {
        for &(a, b) in &[(0.0, 0.0), (1.0, -3.0), (-700.0, -701.0), (5.0, 5.0)] {
            let direct = (f64::exp(a) + f64::exp(b)).ln();
            assert!((log_add_exp(a, b) - direct).abs() < 1e-14);
        }
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 2.0), 2.0);
        assert!((log_add_exp(1000.0, 1000.0) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}

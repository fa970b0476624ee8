use crate::error::{domain, Result};

const SHIFT: f64 = 12.0;

/// Digamma `Ψ₀(x) = d/dx log Γ(x)` for `x > 0`.
///
/// Shifts the argument above 12 with `Ψ₀(x) = Ψ₀(x+1) - 1/x`, then uses the
/// Stirling series.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(domain(format!("digamma needs a positive argument, got {x}")));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    let series = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0
                - r * (1.0 / 252.0
                    - r * (1.0 / 240.0 - r * (1.0 / 132.0 - r * (691.0 / 32760.0 - r / 12.0))))));
    Ok(acc + x.ln() - 0.5 / x - series)
}

/// Trigamma `Ψ₁(x) = d²/dx² log Γ(x)` for `x > 0`.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(domain(format!("trigamma needs a positive argument, got {x}")));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    let series = 1.0 / 6.0
        - r * (1.0 / 30.0
            - r * (1.0 / 42.0 - r * (1.0 / 30.0 - r * (5.0 / 66.0 - r * (691.0 / 2730.0 - r * 7.0 / 6.0)))));
    Ok(acc + 1.0 / x + 0.5 * r + series * r / x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const EULER: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn values_at_one_and_half() {
        assert!((digamma(1.0).unwrap() + EULER).abs() < 1e-14);
        assert!((trigamma(1.0).unwrap() - PI * PI / 6.0).abs() < 1e-14);
        assert!((digamma(0.5).unwrap() + EULER + 2.0 * 2f64.ln()).abs() < 1e-14);
        assert!((trigamma(0.5).unwrap() - PI * PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn large_argument_expansions() {
        let x = 1e4;
        assert!((digamma(x).unwrap() - (x.ln() - 0.5 / x)).abs() < 1e-6);
        assert!((trigamma(x).unwrap() - 1.0 / x).abs() < 1e-6);
        assert!((digamma(x).unwrap() - (x.ln() - 0.5 / x - 1.0 / (12.0 * x * x))).abs() < 1e-6 / (x * x));
        assert!((trigamma(x).unwrap() - 1.0 / x - 0.5 / (x * x) - 1.0 / (6.0 * x * x * x)).abs() < 1e-6 / (x * x * x));
    }

    #[test]
    fn recurrences() {
        for &x in &[0.013, 0.4, 1.7, 5.5, 11.9, 31.0] {
            let d = digamma(x + 1.0).unwrap() - digamma(x).unwrap() - 1.0 / x;
            assert!(d.abs() < 1e-12 * (1.0 / x).max(1.0), "x={x}");
            let t = trigamma(x).unwrap() - trigamma(x + 1.0).unwrap() - 1.0 / (x * x);
            assert!(t.abs() < 1e-12 * (1.0 / (x * x)).max(1.0), "x={x}");
        }
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(digamma(0.0).is_err());
        assert!(trigamma(-1.0).is_err());
    }
}

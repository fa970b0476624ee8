use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Error, Result};

/// Row parameters `θ̂_m` and column parameters `θ_j`; the weight in cell
/// `(m, j)` is inverse-gamma with parameter `γ_{mj} = θ̂_m + θ_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolvableParams {
    pub theta_hat: Vec<f64>,
    pub theta: Vec<f64>,
}

impl SolvableParams {
    pub fn new(theta_hat: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        let p = SolvableParams { theta_hat, theta };
        p.validate(p.theta_hat.len())?;
        Ok(p)
    }

    /// Homogeneous parameters with every `γ_{mj} = γ`, split evenly.
    pub fn homogeneous(gamma: f64, n: usize, big_n: usize) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(domain("γ must be positive"));
        }
        Self::new(vec![gamma / 2.0; n], vec![gamma / 2.0; big_n])
    }

    pub fn size(&self) -> usize {
        self.theta.len()
    }

    pub fn rows(&self) -> usize {
        self.theta_hat.len()
    }

    /// `γ_{mj}` with 1-based `m` (time) and `j` (column).
    pub fn gamma(&self, m: usize, j: usize) -> f64 {
        self.theta_hat[m - 1] + self.theta[j - 1]
    }

    /// Checks `θ̂_m + θ_j > 0` for `m ≤ n` and every column.
    pub fn validate(&self, n: usize) -> Result<()> {
        if n > self.theta_hat.len() {
            return Err(contract(format!("{n} time steps but {} row parameters", self.theta_hat.len())));
        }
        for m in 1..=n {
            for j in 1..=self.theta.len() {
                let g = self.gamma(m, j);
                if !(g > 0.0 && g.is_finite()) {
                    return Err(domain(format!("γ_({m},{j}) = {g} is not positive")));
                }
            }
        }
        Ok(())
    }

    /// Checks the gauge `θ_j < 0 < θ̂_m`.
    pub fn check_gauge(&self) -> Result<()> {
        if self.theta.iter().any(|t| *t >= 0.0) || self.theta_hat.iter().any(|t| *t <= 0.0) {
            return Err(contract("parameters are not in the gauge θ_j < 0 < θ̂_m"));
        }
        Ok(())
    }

    /// Moves to the gauge `θ_j < 0 < θ̂_m` by the shift `θ → θ - c`,
    /// `θ̂ → θ̂ + c`, which leaves every `γ_{mj}` unchanged.
    pub fn gauged(&self) -> Self {
        let max_theta = self.theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min_hat = self.theta_hat.iter().cloned().fold(f64::INFINITY, f64::min);
        let min_theta = self.theta.iter().cloned().fold(f64::INFINITY, f64::min);
        let margin = 0.5 * (min_hat + min_theta).max(0.0);
        let c = max_theta.max(-min_hat) + margin;
        SolvableParams {
            theta_hat: self.theta_hat.iter().map(|t| t + c).collect(),
            theta: self.theta.iter().map(|t| t - c).collect(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let p: SolvableParams = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauge_shift_keeps_gammas() {
        let p = SolvableParams::new(vec![0.5, 1.0], vec![0.2, 0.7]).unwrap();
        let g = p.gauged();
        g.check_gauge().unwrap();
        for m in 1..=2 {
            for j in 1..=2 {
                assert!((p.gamma(m, j) - g.gamma(m, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_nonpositive_gamma() {
        assert!(SolvableParams::new(vec![0.1], vec![-0.3]).is_err());
        let p = SolvableParams::from_json_str(r#"{"theta_hat":[1.0],"theta":[-0.5,-0.2]}"#).unwrap();
        assert_eq!(p.gamma(1, 2), 0.8);
    }
}

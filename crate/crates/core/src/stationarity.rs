//! Stationary ratio process and the polymer free energy.
//!
//! The ratios `η_{kℓ} = z_{kℓ}/z_{k-1,ℓ}` of the first `j` diagonals evolve
//! autonomously under row insertion. With `θ₁ < ⋯ < θ_j < min(θ_{j+1..N})`
//! independent `η_{kℓ} ∼ Γ^{-1}(θ_k - θ_ℓ)` is invariant, and the exit
//! ratios `z_{Nℓ}(m)/z_{Nℓ}(m-1)` come out independent inverse-gamma.

use serde::Serialize;

use crate::error::{contract, Result};
use crate::kernels::KernelContext;
use crate::mc::{replicate, Estimate};
use crate::rsk::{log_add_exp, ratio_insert};
use crate::specfun::stats::{ks_test, rank_independence, spearman, KsResult};
use crate::specfun::{digamma, inverse_gamma_cdf, sample_inverse_gamma, sample_log_inverse_gamma, RngStream, SolvableParams};

/// Ratio diagonals `1..=j` and the exit ratios recorded so far.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationaryState {
    pub size: usize,
    /// `eta[ℓ-1] = (η_{ℓ+1,ℓ}, …, η_{N,ℓ})`.
    pub eta: Vec<Vec<f64>>,
    /// `zeta[m-1][ℓ-1] = z_{Nℓ}(m)/z_{Nℓ}(m-1)`.
    pub zeta: Vec<Vec<f64>>,
}

impl StationaryState {
    pub fn depth(&self) -> usize {
        self.eta.len()
    }

    /// `η_{kℓ}`, 1-based.
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.eta[l - 1][k - l - 1]
    }
}

/// Checks `θ₁ < ⋯ < θ_j < min(θ_{j+1}, …, θ_N)`.
pub fn check_ordering(theta: &[f64], j: usize) -> Result<()> {
    let n = theta.len();
    if j == 0 || j >= n {
        return Err(contract(format!("need 1 ≤ j < N, got j = {j}, N = {n}")));
    }
    let rest = theta[j..].iter().copied().fold(f64::INFINITY, f64::min);
    for l in 0..j {
        let next = if l + 1 < j { theta[l + 1] } else { rest };
        if !(theta[l] < next) {
            return Err(contract("stationarity needs θ₁ < θ₂ < ⋯ < θ_j < min(θ_{j+1}, …, θ_N)"));
        }
    }
    Ok(())
}

/// Independent `η_{kℓ} ∼ Γ^{-1}(θ_k - θ_ℓ)` for `ℓ ≤ j < k`.
pub fn init_stationary(params: &SolvableParams, j: usize, rng: &mut RngStream) -> Result<StationaryState> {
    let th = &params.theta;
    check_ordering(th, j)?;
    let n = th.len();
    let eta = (1..=j).map(|l| (l + 1..=n).map(|k| sample_inverse_gamma(th[k - 1] - th[l - 1], rng)).collect()).collect();
    Ok(StationaryState { size: n, eta, zeta: Vec::new() })
}

/// Output of one step: the new state and the word `a_{j+1}` passed on to
/// the untracked diagonals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BurkeStep {
    pub state: StationaryState,
    pub bumped: Vec<f64>,
}

/// One time step driven by an explicit word `d^{[n]}`.
pub fn burke_step_with(state: &StationaryState, word: &[f64]) -> Result<BurkeStep> {
    if word.len() != state.size {
        return Err(contract("word length differs from N"));
    }
    let mut a = word.to_vec();
    let mut eta = Vec::with_capacity(state.depth());
    let mut zeta = Vec::with_capacity(state.depth());
    for diag in &state.eta {
        let (e, b, z) = ratio_insert(diag, &a)?;
        eta.push(e);
        zeta.push(z);
        a = b;
    }
    let mut history = state.zeta.clone();
    history.push(zeta);
    Ok(BurkeStep { state: StationaryState { size: state.size, eta, zeta: history }, bumped: a })
}

/// One time step with a fresh inverse-gamma word at `ctx.time`.
pub fn burke_step(state: &StationaryState, ctx: &KernelContext, rng: &mut RngStream) -> Result<BurkeStep> {
    let word: Vec<f64> = (1..=state.size).map(|k| sample_inverse_gamma(ctx.gamma(k), rng)).collect();
    burke_step_with(state, &word)
}

/// One tracked variable with its predicted inverse-gamma parameter.
#[derive(Clone, Debug, Serialize)]
pub struct TrackedMarginal {
    pub name: String,
    pub parameter: f64,
    pub ks: KsResult,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairScreen {
    pub a: String,
    pub b: String,
    pub spearman: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RankTest {
    pub a: String,
    pub b: String,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BurkeReport {
    pub size: usize,
    pub depth: usize,
    pub steps: usize,
    pub replicas: usize,
    pub marginals: Vec<TrackedMarginal>,
    pub min_p_value: f64,
    /// Every pair of tracked variables.
    pub pairs: Vec<PairScreen>,
    pub max_abs_correlation: f64,
    /// Rank-histogram chi-square on a fixed pseudo-random choice of pairs.
    pub rank_tests: Vec<RankTest>,
    pub min_rank_p_value: f64,
}

/// Runs `steps` Burke steps from the stationary start and screens every
/// tracked variable: final ratios of diagonals `1..j`, all exit ratios and
/// the last bumped word.
pub fn burke_run(
    params: &SolvableParams,
    j: usize,
    steps: usize,
    replicas: usize,
    rank_pairs: usize,
    seed: u64,
) -> Result<BurkeReport> {
    params.validate(steps)?;
    let th = params.theta.clone();
    check_ordering(&th, j)?;
    let n = th.len();
    let ctxs: Vec<KernelContext> = (1..=steps).map(|m| KernelContext::new(params.clone(), m)).collect::<Result<_>>()?;
    let rows = replicate(seed, "burke", replicas, |rng| -> Result<Vec<f64>> {
        let mut s = init_stationary(params, j, rng)?;
        let mut bumped = Vec::new();
        for ctx in &ctxs {
            let out = burke_step(&s, ctx, rng)?;
            s = out.state;
            bumped = out.bumped;
        }
        let mut v: Vec<f64> = s.eta.iter().flatten().copied().collect();
        v.extend(s.zeta.iter().flatten());
        v.extend(bumped);
        Ok(v)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut names = Vec::new();
    let mut parameters = Vec::new();
    for l in 1..=j {
        for k in l + 1..=n {
            names.push(format!("eta[{k},{l}]"));
            parameters.push(th[k - 1] - th[l - 1]);
        }
    }
    for m in 1..=steps {
        for l in 1..=j {
            names.push(format!("zeta[{m}][{l}]"));
            parameters.push(params.gamma(m, l));
        }
    }
    if steps > 0 {
        for k in j + 1..=n {
            names.push(format!("a[{k},{}]", j + 1));
            parameters.push(params.gamma(steps, k));
        }
    }
    let columns: Vec<Vec<f64>> = (0..names.len()).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
    let mut marginals = Vec::with_capacity(names.len());
    for (c, col) in columns.iter().enumerate() {
        let p = parameters[c];
        marginals.push(TrackedMarginal {
            name: names[c].clone(),
            parameter: p,
            ks: ks_test(col, |x| inverse_gamma_cdf(x, p))?,
        });
    }
    let ranked: Vec<Vec<f64>> = columns.iter().map(|c| crate::specfun::stats::ranks(c)).collect();
    let mut pairs = Vec::new();
    for a in 0..names.len() {
        for b in a + 1..names.len() {
            pairs.push(PairScreen {
                a: names[a].clone(),
                b: names[b].clone(),
                spearman: crate::specfun::stats::pearson(&ranked[a], &ranked[b]),
            });
        }
    }
    let mut rank_tests = Vec::new();
    let mut pick = RngStream::tagged(seed, crate::specfun::rng::tag("burke-pairs"), 0);
    let bins = if replicas >= 2000 { 10 } else { 4 };
    for _ in 0..rank_pairs.min(pairs.len()) {
        let idx = (pick.open_uniform() * pairs.len() as f64) as usize % pairs.len();
        let a = names.iter().position(|x| *x == pairs[idx].a).expect("known");
        let b = names.iter().position(|x| *x == pairs[idx].b).expect("known");
        let (statistic, df, p_value) = rank_independence(&columns[a], &columns[b], bins)?;
        rank_tests.push(RankTest { a: names[a].clone(), b: names[b].clone(), statistic, df, p_value });
    }
    Ok(BurkeReport {
        size: n,
        depth: j,
        steps,
        replicas,
        min_p_value: marginals.iter().map(|m| m.ks.p_value).fold(1.0, f64::min),
        max_abs_correlation: pairs.iter().map(|p| p.spearman.abs()).fold(0.0, f64::max),
        min_rank_p_value: rank_tests.iter().map(|t| t.p_value).fold(1.0, f64::min),
        marginals,
        pairs,
        rank_tests,
    })
}

/// `log Z_n` for the `n × n` point-to-point polymer with homogeneous
/// parameter `γ`, in the log domain.
pub fn log_partition_square(gamma: f64, n: usize, rng: &mut RngStream) -> f64 {
    let mut row = vec![f64::NEG_INFINITY; n];
    for i in 0..n {
        let mut left = f64::NEG_INFINITY;
        for (c, cell) in row.iter_mut().enumerate() {
            let up = if i == 0 && c == 0 { 0.0 } else { *cell };
            let v = sample_log_inverse_gamma(gamma, rng) + log_add_exp(up, left);
            *cell = v;
            left = v;
        }
    }
    row[n - 1]
}

/// Limit of `(1/n) log Z_n`: `-2 Ψ₀(γ/2)`.
pub fn free_energy_limit(gamma: f64) -> Result<f64> {
    Ok(-2.0 * digamma(gamma / 2.0)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct FreeEnergyReport {
    pub gamma: f64,
    pub n: usize,
    pub replicas: usize,
    /// `(1/n) log Z_n` across replicas.
    pub estimate: Estimate,
    pub target: f64,
    pub gap: f64,
    /// `max(3 SE, 0.01)`.
    pub threshold: f64,
    pub pass: bool,
    /// Sample variance of `log Z_n`.
    pub log_variance: f64,
}

pub fn free_energy_run(gamma: f64, n: usize, replicas: usize, seed: u64) -> Result<FreeEnergyReport> {
    if !(gamma > 0.0) || n == 0 || replicas < 2 {
        return Err(contract("need γ > 0, n ≥ 1 and at least two replicas"));
    }
    let logs = replicate(seed, &format!("free-energy-{n}"), replicas, |rng| log_partition_square(gamma, n, rng));
    let scaled: Vec<f64> = logs.iter().map(|v| v / n as f64).collect();
    let estimate = Estimate::from_samples(&scaled);
    let target = free_energy_limit(gamma)?;
    let gap = (estimate.mean - target).abs();
    let threshold = (3.0 * estimate.std_error).max(0.01);
    let log_variance = Estimate::from_samples(&logs).variance();
    Ok(FreeEnergyReport { gamma, n, replicas, estimate, target, gap, threshold, pass: gap < threshold, log_variance })
}

/// Descriptive fit of `var(log Z_n) ∝ n^χ` over several `n`.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentFit {
    pub runs: Vec<FreeEnergyReport>,
    pub exponent: f64,
}

pub fn variance_exponent_fit(gamma: f64, ns: &[usize], replicas: usize, seed: u64) -> Result<ExponentFit> {
    if ns.len() < 2 {
        return Err(contract("need at least two sizes"));
    }
    let runs: Vec<FreeEnergyReport> = ns.iter().map(|&n| free_energy_run(gamma, n, replicas, seed)).collect::<Result<_>>()?;
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = runs.iter().map(|r| r.log_variance.ln()).collect();
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let exponent = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    Ok(ExponentFit { runs, exponent })
}

/// Spearman correlation of exit ratios across consecutive times, per
/// diagonal, from a long stationary run.
pub fn exit_ratio_correlations(params: &SolvableParams, j: usize, steps: usize, replicas: usize, seed: u64) -> Result<Vec<f64>> {
    params.validate(steps)?;
    let ctxs: Vec<KernelContext> = (1..=steps).map(|m| KernelContext::new(params.clone(), m)).collect::<Result<_>>()?;
    let histories = replicate(seed, "exit-ratios", replicas, |rng| -> Result<Vec<Vec<f64>>> {
        let mut s = init_stationary(params, j, rng)?;
        for ctx in &ctxs {
            s = burke_step(&s, ctx, rng)?.state;
        }
        Ok(s.zeta)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for m in 1..steps {
        for l in 0..j {
            let a: Vec<f64> = histories.iter().map(|h| h[m - 1][l]).collect();
            let b: Vec<f64> = histories.iter().map(|h| h[m][l]).collect();
            out.push(spearman(&a, &b));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rsk::{RatioArray, TriangularArray};
    use crate::specfun::stats::ks_test;

    fn params(n_steps: usize) -> SolvableParams {
        SolvableParams::new(vec![1.2; n_steps], vec![-0.9, -0.5, 0.0, 0.3]).unwrap()
    }

    #[test]
    fn ordering_contract() {
        assert!(check_ordering(&[-0.9, -0.5, 0.0, 0.3], 2).is_ok());
        assert!(check_ordering(&[-0.5, -0.9, 0.0, 0.3], 2).is_err());
        assert!(check_ordering(&[-0.9, 0.5, 0.0, 0.3], 2).is_err());
        assert!(check_ordering(&[-0.9, -0.5], 2).is_err());
    }

    #[test]
    fn single_ratio_marginal() {
        let p = SolvableParams::new(vec![1.0], vec![-0.3, 0.4]).unwrap();
        let v = replicate(1, "init", 20_000, |rng| init_stationary(&p, 1, rng).unwrap().get(2, 1));
        let r = ks_test(&v, |x| inverse_gamma_cdf(x, 0.7)).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");
    }

    #[test]
    fn agrees_with_array_insertion() {
        let z = TriangularArray::from_rows(
            4,
            4,
            vec![vec![1.3], vec![2.0, 0.6], vec![2.5, 1.1, 0.2], vec![3.1, 1.9, 0.7, 0.15]],
        )
        .unwrap();
        let word = [0.8, 1.7, 0.4, 2.2];
        let r = RatioArray::from_array(&z);
        let s = StationaryState { size: 4, eta: r.diagonals()[..3].to_vec(), zeta: vec![] };
        let step = burke_step_with(&s, &word).unwrap();
        let (z2, _) = z.insert_row(&word).unwrap();
        let r2 = RatioArray::from_array(&z2);
        for l in 1..=3 {
            for k in l + 1..=4 {
                assert!((step.state.get(k, l) / r2.get(k, l) - 1.0).abs() < 1e-13);
            }
            assert!((step.state.zeta[0][l - 1] / (z2.get(4, l) / z.get(4, l)) - 1.0).abs() < 1e-13);
        }
        // The single bumped letter is the exit ratio of the untracked last diagonal.
        assert_eq!(step.bumped.len(), 1);
        assert!((step.bumped[0] / (z2.get(4, 4) / z.get(4, 4)) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn one_step_preserves_marginals() {
        let r = burke_run(&params(1), 2, 1, 20_000, 3, 17).unwrap();
        assert_eq!(r.marginals.len(), 5 + 2 + 2);
        assert!(r.min_p_value > 0.001, "{:?}", r.marginals);
        assert!(r.max_abs_correlation < 0.04);
    }

    #[test]
    fn free_energy_single_weight() {
        let r = free_energy_run(1.3, 1, 50_000, 2).unwrap();
        assert!(r.estimate.covers(-digamma(1.3).unwrap(), 4.0), "{r:?}");
        assert!((free_energy_limit(1.0).unwrap() + 2.0 * digamma(0.5).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn log_partition_matches_linear_dynamic_programming() {
        let mut a = RngStream::new(3, 0);
        let mut b = RngStream::new(3, 0);
        let l = log_partition_square(0.9, 6, &mut a);
        let mut data = Vec::new();
        for _ in 0..36 {
            data.push(sample_log_inverse_gamma(0.9, &mut b).exp());
        }
        let d = crate::rsk::WeightMatrix::new(6, 6, data).unwrap();
        let z = crate::measures::partition_function(&d);
        assert!((l - z.ln()).abs() < 1e-12);
    }
}

//! One function per subcommand. Each returns an [`Output`] holding the
//! JSON result and, where there is a natural one, a plot-ready table.

use num_complex::Complex64;
use num_rational::BigRational;
use serde_json::json;

use grsk::limits::{lue_compare, tropical_limit_run};
use grsk::measures::{laplace_contour, laplace_mc, ContourSpec};
use grsk::rsk::{
    evolve_from_empty, insert_word, p_tableau, tau_by_minors, tau_by_paths, Pattern, Semifield, WeightMatrix,
};
use grsk::specfun::{RngStream, SolvableParams};
use grsk::stationarity::{burke_run, free_energy_run, variance_exponent_fit};
use grsk::whittaker::{
    bump_stade_lhs, bump_stade_rhs, whittaker_eval, whittaker_mc, BumpStadeForm, QuadratureSpec, SpectralPoint,
    MAX_QUADRATURE_N,
};
use grsk::{Error, Result};

use crate::parse::{insertion_file, rational, rational_string, InsertionFile};
use crate::report::{Output, Table};

fn read(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Parameters from a JSON file, or the supplied default.
pub fn load_params(path: Option<&std::path::Path>, default: impl FnOnce() -> Result<SolvableParams>) -> Result<SolvableParams> {
    match path {
        Some(p) => SolvableParams::from_json_str(&read(p)?),
        None => default(),
    }
}

fn real(s: &str) -> Result<f64> {
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| Error::Parse(format!("{s:?}")))?;
            let q: f64 = q.trim().parse().map_err(|_| Error::Parse(format!("{s:?}")))?;
            Ok(p / q)
        }
        None => s.trim().parse().map_err(|_| Error::Parse(format!("{s:?}"))),
    }
}

fn diagonals<S: Clone>(rows: &[Vec<S>]) -> Vec<Vec<S>> {
    let n = rows.len();
    (0..n).map(|l| (l..n).map(|k| rows[k][l].clone()).collect()).collect()
}

/// Runs the tagged insertion file in the semifield `S`.
fn run_tagged<S: Semifield>(
    f: &InsertionFile,
    conv: impl Fn(&str) -> Result<S>,
    show: impl Fn(&S) -> serde_json::Value,
) -> Result<serde_json::Value> {
    let list = |v: &[String]| v.iter().map(|s| conv(s)).collect::<Result<Vec<S>>>();
    let shows = |v: &[S]| v.iter().map(&show).collect::<Vec<_>>();
    let mut out = serde_json::Map::new();
    if let (Some(xi), Some(b)) = (&f.xi, &f.b) {
        let (xi, b) = (list(xi)?, list(b)?);
        if xi.len() != b.len() {
            return Err(Error::Contract("xi and b must have equal length".into()));
        }
        let (xi_out, b_out) = insert_word(&xi, &b);
        out.insert("row_insertion".into(), json!({ "xi_out": shows(&xi_out), "b_out": shows(&b_out) }));
    }
    if !f.array.is_empty() {
        let rows: Vec<Vec<S>> = f.array.iter().map(|r| list(r)).collect::<Result<_>>()?;
        let n = rows.len();
        let p = Pattern::from_diagonals(n, diagonals(&rows))?;
        let word = list(f.word.as_deref().ok_or_else(|| Error::Parse("an array needs a word line".into()))?)?;
        if word.len() != n {
            return Err(Error::Contract(format!("word of length {} for an array of size {n}", word.len())));
        }
        let (q, aux) = p.insert(&word);
        let diags: Vec<_> = (1..=n).map(|l| shows(q.diagonal(l))).collect();
        let mut a = serde_json::Map::new();
        for (i, v) in aux.iter().enumerate() {
            a.insert(format!("a{}", i + 1), json!(shows(v)));
        }
        out.insert("array".into(), json!({ "diagonals_out": diags, "words": a }));
    }
    Ok(serde_json::Value::Object(out))
}

/// `rsk insert`: a tagged insertion file, or evolution of a weight matrix
/// from the empty array. `exact = None` means rational arithmetic for
/// tagged files and floating point for matrices.
pub fn rsk_insert(path: &std::path::Path, exact: Option<bool>) -> Result<Output> {
    let text = read(path)?;
    if let Some(f) = insertion_file(&text)? {
        let exact = exact.unwrap_or(true);
        let v = if exact {
            run_tagged::<BigRational>(&f, rational, |q| json!(rational_string(q)))?
        } else {
            run_tagged::<f64>(&f, real, |x| json!(x))?
        };
        let mode = if exact { "rational" } else { "float" };
        return Output::new(json!({ "mode": mode, "result": v }));
    }
    let exact = exact.unwrap_or(false);
    let d = WeightMatrix::from_csv_str(&text)?;
    let n = d.rows();
    let mut t = Table::new(&["k", "l", "z"]);
    let rows: serde_json::Value = if exact {
        let mut data = Vec::with_capacity(n);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            data.push(line.split(',').map(rational).collect::<Result<Vec<_>>>()?);
        }
        let mut p = Pattern::<BigRational>::empty(d.cols());
        for row in &data {
            p.insert_mut(row);
        }
        let fill = n.min(d.cols());
        let rows: Vec<Vec<String>> =
            (1..=d.cols()).map(|k| (1..=k.min(fill)).map(|l| rational_string(p.get(k, l))).collect()).collect();
        for (k, r) in rows.iter().enumerate() {
            for (l, v) in r.iter().enumerate() {
                t.push(vec![(k + 1).to_string(), (l + 1).to_string(), v.clone()]);
            }
        }
        json!(rows)
    } else {
        let z = evolve_from_empty(&d, n)?;
        for (k, r) in z.rows().iter().enumerate() {
            for (l, v) in r.iter().enumerate() {
                t.push(vec![(k + 1).to_string(), (l + 1).to_string(), format!("{v:?}")]);
            }
        }
        json!(z.rows())
    };
    Ok(Output::new(json!({ "mode": if exact { "rational" } else { "float" }, "n": n, "N": d.cols(), "rows": rows }))?
        .with_table(t))
}

/// `rsk tau`: `τ_{k,l}(n)` by minors and by paths.
pub fn rsk_tau(path: &std::path::Path, k: usize, l: usize, n: Option<usize>) -> Result<Output> {
    let d = WeightMatrix::from_csv_str(&read(path)?)?;
    let n = n.unwrap_or(d.rows());
    let a = tau_by_minors(&d, k, l, n)?;
    let b = tau_by_paths(&d, k, l, n)?;
    let rel = if b == 0.0 { a.abs() } else { (a / b - 1.0).abs() };
    Output::new(json!({ "k": k, "l": l, "n": n, "by_minors": a, "by_paths": b, "rel_diff": rel }))
}

/// Maximum relative discrepancy between array evolution and the
/// minor-determinant construction on random matrices.
pub fn equivalence_discrepancy(d: &WeightMatrix, n: usize) -> Result<f64> {
    let a = evolve_from_empty(d, n)?;
    let b = p_tableau(d, n)?;
    let mut worst: f64 = 0.0;
    for (ra, rb) in a.rows().iter().zip(b.rows()) {
        for (x, y) in ra.iter().zip(rb) {
            worst = worst.max((x / y - 1.0).abs());
        }
    }
    Ok(worst)
}

pub fn random_matrix(n: usize, big_n: usize, rng: &mut RngStream) -> Result<WeightMatrix> {
    let data = (0..n * big_n).map(|_| 0.1 + 9.9 * (1.0 - rng.open_uniform())).collect();
    WeightMatrix::new(n, big_n, data)
}

/// `verify equivalence`.
pub fn verify_equivalence(n: usize, big_n: usize, trials: usize, seed: u64) -> Result<Output> {
    if n == 0 || big_n == 0 || trials == 0 {
        return Err(Error::Contract("need n, N and trials positive".into()));
    }
    let mut rng = RngStream::new(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        worst = worst.max(equivalence_discrepancy(&random_matrix(n, big_n, &mut rng)?, n)?);
    }
    let pass = worst < 1e-9;
    Ok(Output::new(json!({ "n": n, "N": big_n, "trials": trials, "max_rel_discrepancy": worst, "threshold": 1e-9, "pass": pass }))?
        .with_ok(pass))
}

/// `whittaker eval`: quadrature for `N ≤ 3`, Monte Carlo beyond.
pub fn whittaker_eval_cmd(lambda: &[Complex64], y: &[f64], samples: usize, seed: u64) -> Result<Output> {
    let p = SpectralPoint::new(lambda.to_vec());
    if lambda.len() <= MAX_QUADRATURE_N {
        let v = whittaker_eval(&p, y, &QuadratureSpec::default())?;
        Output::new(json!({
            "method": "quadrature", "value_re": v.value.re, "value_im": v.value.im,
            "est_error": v.error, "converged": v.converged,
        }))
    } else {
        let e = whittaker_mc(&p, y, samples, seed)?;
        Output::new(json!({
            "method": "monte_carlo", "value_re": e.re.mean, "value_im": e.im.mean,
            "est_error": e.re.std_error.hypot(e.im.std_error), "samples": samples,
        }))
    }
}

pub fn default_bump_stade(big_n: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let c = |x: f64| Complex64::new(x, 0.0);
    match big_n {
        1 => Ok((vec![c(-0.3)], vec![c(-0.5)])),
        2 => Ok((vec![c(-0.3), c(-0.6)], vec![c(-0.4), c(-0.2)])),
        _ => Err(Error::Size(format!("the Bump–Stade integral is implemented for N ≤ 2, got {big_n}"))),
    }
}

/// `whittaker bump-stade`, linear form.
pub fn bump_stade_cmd(s: f64, lambda: &[Complex64], nu: &[Complex64]) -> Result<Output> {
    let lhs = bump_stade_lhs(s, lambda, nu, BumpStadeForm::Linear, &QuadratureSpec::default())?;
    let rhs = bump_stade_rhs(s, lambda, nu, BumpStadeForm::Linear)?;
    let rel = (lhs.value - rhs).norm() / rhs.norm();
    Output::new(json!({
        "s": s, "lhs_re": lhs.value.re, "lhs_im": lhs.value.im, "rhs_re": rhs.re, "rhs_im": rhs.im,
        "rel_err": rel, "est_error": lhs.error,
    }))
}

/// Default parameters in the gauge `θ_j < 0 < θ̂_m`.
pub fn default_params(n: usize, big_n: usize) -> Result<SolvableParams> {
    let hats = [1.0, 1.3, 0.8, 1.1, 0.9, 1.2];
    let theta_hat = (0..n).map(|m| hats[m % hats.len()]).collect();
    let theta = (0..big_n).map(|j| -0.4 + 0.3 * j as f64 / (big_n.max(2) - 1) as f64).collect();
    SolvableParams::new(theta_hat, theta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum LaplaceMethod {
    Contour,
    Mc,
    Both,
}

/// `laplace`: `E exp(-s z_{N,1}(n))` by contour integral and/or simulation.
pub fn laplace_cmd(params: &SolvableParams, n: usize, s: f64, method: LaplaceMethod, replicas: usize, seed: u64) -> Result<Output> {
    let contour = match method {
        LaplaceMethod::Mc => None,
        _ => Some(laplace_contour(s, n, params, &ContourSpec::default())?),
    };
    let mc = match method {
        LaplaceMethod::Contour => None,
        _ => Some(laplace_mc(s, n, params, replicas, seed)?),
    };
    let agree = match (&contour, &mc) {
        (Some(c), Some(m)) => Some((c.value - m.mean).abs() / m.std_error),
        _ => None,
    };
    Output::new(json!({ "N": params.size(), "n": n, "s": s, "contour": contour, "mc": mc, "agree_sigma": agree }))
}

pub fn burke_params(big_n: usize, steps: usize) -> Result<SolvableParams> {
    let theta = (0..big_n).map(|j| -0.9 + 0.4 * j as f64).collect();
    SolvableParams::new(vec![1.2; steps.max(1)], theta)
}

/// `burke`.
pub fn burke_cmd(params: &SolvableParams, j: usize, steps: usize, replicas: usize, seed: u64) -> Result<Output> {
    let r = burke_run(params, j, steps, replicas, 10, seed)?;
    let mut t = Table::new(&["variable", "parameter", "ks_statistic", "p_value"]);
    for m in &r.marginals {
        t.push(vec![m.name.clone(), m.parameter.to_string(), m.ks.statistic.to_string(), m.ks.p_value.to_string()]);
    }
    Ok(Output::new(&r)?.with_table(t))
}

/// `free-energy`, with an optional descriptive variance-exponent fit.
pub fn free_energy_cmd(gamma: f64, n: usize, replicas: usize, fit: Option<&[usize]>, seed: u64) -> Result<Output> {
    let r = free_energy_run(gamma, n, replicas, seed)?;
    let fit = fit.map(|ns| variance_exponent_fit(gamma, ns, replicas, seed)).transpose()?;
    Output::new(json!({ "run": r, "exponent_fit": fit }))
}

/// `tropical`.
pub fn tropical_cmd(params: &SolvableParams, n: usize, eps: &[f64], replicas: usize, seed: u64) -> Result<Output> {
    let r = tropical_limit_run(params, n, eps, replicas, seed)?;
    let mut t = Table::new(&["eps", "distance", "std_error", "envelope", "envelope_violations"]);
    for l in &r.levels {
        t.push(vec![
            l.eps.to_string(),
            l.distance.mean.to_string(),
            l.distance.std_error.to_string(),
            l.envelope.mean.to_string(),
            l.envelope_violations.to_string(),
        ]);
    }
    Ok(Output::new(&r)?.with_table(t))
}

/// `lue`.
pub fn lue_cmd(params: &SolvableParams, n: usize, replicas: usize, seed: u64) -> Result<Output> {
    let r = lue_compare(params, n, replicas, seed)?;
    let mut t = Table::new(&["N", "n", "replicas", "ks_statistic", "p_value", "eigenvalue_mean", "lpp_mean"]);
    t.push(vec![
        r.size.to_string(),
        r.n.to_string(),
        r.replicas.to_string(),
        r.ks.statistic.to_string(),
        r.ks.p_value.to_string(),
        r.eigenvalue_mean.mean.to_string(),
        r.lpp_mean.mean.to_string(),
    ]);
    Ok(Output::new(&r)?.with_table(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_params_are_in_gauge() {
        for n in 1..=4 {
            for big_n in 1..=4 {
                let p = default_params(n, big_n).unwrap();
                assert!(p.check_gauge().is_ok(), "{p:?}");
            }
        }
    }

    #[test]
    fn equivalence_on_small_matrices() {
        let out = verify_equivalence(3, 3, 5, 1).unwrap();
        assert!(out.ok);
    }
}

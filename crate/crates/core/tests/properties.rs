//! Property tests for the structural invariants of the insertion,
//! special-function and limit layers.

use num_complex::Complex64;
use proptest::prelude::*;

use grsk::limits::hermitian_eigenvalues;
use grsk::rsk::{
    evolve_from_empty, evolve_from_empty_log, insert_word, p_tableau, q_tableau, ratio_insert, soft_max,
    tau_by_minors, tau_by_paths, tropical_brute_force, tropical_evolve, WeightMatrix,
};
use grsk::specfun::{ln_gamma_c, RngStream};
use grsk::whittaker::{psi, psi_real, QuadratureSpec};

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = WeightMatrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(n, m)| {
        prop::collection::vec(0.1f64..10.0, n * m).prop_map(move |d| WeightMatrix::new(n, m, d).unwrap())
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn insertion_matches_minor_construction(d in matrix(6, 6)) {
        let n = d.rows();
        let a = evolve_from_empty(&d, n).unwrap();
        let b = p_tableau(&d, n).unwrap();
        for (ra, rb) in a.rows().iter().zip(b.rows()) {
            prop_assert_eq!(ra.len(), rb.len());
            for (x, y) in ra.iter().zip(rb) {
                prop_assert!(rel(*x, *y) < 1e-9, "{} vs {}", x, y);
            }
        }
    }

    #[test]
    fn minors_match_paths(d in matrix(4, 4)) {
        let n = d.rows();
        for k in 1..=d.cols() {
            for l in 1..=k.min(n) {
                let a = tau_by_minors(&d, k, l, n).unwrap();
                let b = tau_by_paths(&d, k, l, n).unwrap();
                prop_assert!(rel(a, b) < 1e-10, "τ_{},{}: {} vs {}", k, l, a, b);
            }
        }
    }

    #[test]
    fn path_sets_empty_only_below_the_diagonal(d in matrix(4, 4)) {
        let n = d.rows();
        for k in 1..=d.cols() {
            for l in 1..=k {
                let t = tau_by_paths(&d, k, l, n).unwrap();
                if n < l && l < k {
                    prop_assert_eq!(t, 0.0);
                } else {
                    prop_assert!(t > 0.0);
                }
            }
        }
    }

    #[test]
    fn p_and_q_share_their_shape(d in matrix(5, 5)) {
        let n = d.rows();
        let big_n = d.cols();
        let p = p_tableau(&d, n).unwrap();
        let q = q_tableau(&d, n).unwrap();
        let m = n.min(big_n);
        for l in 1..=m {
            prop_assert!(rel(p.get(big_n, l), q.get(n, l)) < 1e-9);
        }
    }

    #[test]
    fn log_domain_insertion_matches_linear(d in matrix(6, 5)) {
        let n = d.rows();
        let a = evolve_from_empty(&d, n).unwrap();
        let b = evolve_from_empty_log(&d, n).unwrap();
        for (ra, rb) in a.rows().iter().zip(b.rows()) {
            for (x, y) in ra.iter().zip(rb) {
                prop_assert!(rel(*x, *y) < 1e-9);
            }
        }
    }

    #[test]
    fn soft_max_sandwich(xs in prop::collection::vec(-50.0f64..50.0, 1..20), eps in 0.001f64..5.0) {
        let hard = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gap = soft_max(&xs, eps) - hard;
        prop_assert!(gap >= -1e-12 * (1.0 + hard.abs()));
        prop_assert!(gap <= eps * (xs.len() as f64).ln() + 1e-12 * (1.0 + hard.abs()));
    }

    #[test]
    fn ratio_insertion_commutes_with_ratio_map(
        xi in prop::collection::vec(0.1f64..10.0, 1..7),
        seed in any::<u64>(),
    ) {
        let mut rng = RngStream::new(seed, 0);
        let b: Vec<f64> = xi.iter().map(|_| 0.1 + 9.9 * rng.open_uniform()).collect();
        let eta: Vec<f64> = xi.windows(2).map(|w| w[1] / w[0]).collect();
        let (x1, b1) = insert_word(&xi, &b);
        let (e, bp, z) = ratio_insert(&eta, &b).unwrap();
        for k in 0..eta.len() {
            prop_assert!(rel(e[k], x1[k + 1] / x1[k]) < 1e-12);
            prop_assert!(rel(bp[k], b1[k]) < 1e-12);
        }
        prop_assert!(rel(z, x1[xi.len() - 1] / xi[xi.len() - 1]) < 1e-12);
    }

    #[test]
    fn tropical_output_interlaces(rows in 1usize..6, cols in 1usize..5, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 1);
        let w: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| -rng.open_uniform().ln()).collect()).collect();
        let l = tropical_evolve(&w, rows).unwrap();
        let fill = rows.min(cols);
        for k in 1..cols {
            for j in 1..=k.min(fill) {
                prop_assert!(l.get(k, j) <= l.get(k + 1, j) + 1e-12);
                if j + 1 <= (k + 1).min(fill) {
                    prop_assert!(l.get(k + 1, j + 1) <= l.get(k, j) + 1e-12);
                }
            }
        }
        let b = tropical_brute_force(&w, rows).unwrap();
        for (ra, rb) in l.rows().iter().zip(b.rows()) {
            for (x, y) in ra.iter().zip(rb) {
                prop_assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn gram_eigenvalues_sorted_and_nonnegative(dim in 1usize..4, cols in 1usize..5, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 2);
        let a: Vec<Complex64> = (0..dim * cols)
            .map(|_| Complex64::new(rng.open_uniform() - 0.5, rng.open_uniform() - 0.5))
            .collect();
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                m[i * dim + j] = (0..cols).map(|c| a[i * cols + c] * a[j * cols + c].conj()).sum();
            }
        }
        let ev = hermitian_eigenvalues(&m, dim).unwrap();
        prop_assert_eq!(ev.len(), dim);
        prop_assert!(ev.windows(2).all(|p| p[0] >= p[1]));
        prop_assert!(ev.iter().all(|&x| x >= -1e-12));
        let trace: f64 = (0..dim).map(|i| m[i * dim + i].re).sum();
        let frob: f64 = m.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-10 * (1.0 + trace));
        prop_assert!((ev.iter().map(|x| x * x).sum::<f64>() - frob).abs() < 1e-10 * (1.0 + frob));
    }

    #[test]
    fn log_gamma_functional_equation(re in -20.0f64..20.0, im in -20.0f64..20.0) {
        let z = Complex64::new(re, im);
        prop_assume!(z.norm() > 1e-3 && (im.abs() > 1e-3 || (re - re.round()).abs() > 1e-3));
        let d = ln_gamma_c(z + 1.0) - ln_gamma_c(z) - z.ln();
        let turns = (d.im / (2.0 * std::f64::consts::PI)).round();
        let tol = 1e-10 * (1.0 + ln_gamma_c(z).norm());
        prop_assert!(d.re.abs() < tol, "{:?}", d);
        prop_assert!((d.im - 2.0 * std::f64::consts::PI * turns).abs() < tol, "{:?}", d);
    }

    #[test]
    fn streams_are_reproducible(seed in any::<u64>(), replica in any::<u64>()) {
        let mut a = RngStream::new(seed, replica);
        let mut b = RngStream::new(seed, replica);
        for _ in 0..32 {
            prop_assert_eq!(a.open_uniform().to_bits(), b.open_uniform().to_bits());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn whittaker_symmetric_and_positive(
        t in prop::collection::vec(-1.0f64..1.0, 2..=3),
        y in prop::collection::vec(0.3f64..3.0, 3),
    ) {
        let spec = QuadratureSpec::default();
        let y = &y[..t.len()];
        let v = psi_real(&t, y, &spec).unwrap();
        prop_assert!(v > 0.0);
        let lam: Vec<Complex64> = t.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mut swapped = lam.clone();
        swapped.reverse();
        let w = psi(&swapped, y, &spec).unwrap();
        prop_assert!((w - v).norm() < 1e-8 * v, "{} vs {}", w, v);
    }
}

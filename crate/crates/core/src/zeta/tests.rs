use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::special::exp_integral_e1;

/// `e^{-t}/t`: `ζ(s) = Γ(s-1)/Γ(s) = 1/(s-1)`, so `ζ'(0) = -1`.
struct ExpOverT;

impl RelativeTrace for ExpOverT {
    fn eval(&self, t: f64) -> f64 {
        (-t).exp() / t
    }
    fn tail_integral(&self, t: f64) -> Option<f64> {
        Some(((-t).exp() - t * exp_integral_e1(t)) / t)
    }
}

/// `e^{-t}`: `ζ(s) ≡ 1`, so `ζ'(0) = 0` while `a_1 = 1`.
struct Exp;

impl RelativeTrace for Exp {
    fn eval(&self, t: f64) -> f64 {
        (-t).exp()
    }
    fn tail_integral(&self, t: f64) -> Option<f64> {
        Some(exp_integral_e1(t))
    }
}

fn exact_invariants(a: &[f64], window: (f64, f64)) -> HeatInvariants {
    HeatInvariants { coefficients: a.to_vec(), fit_window: window, residual: 0.0, samples: 0 }
}

#[test]
fn synthetic_model_is_recovered() {
    let times = log_times(0.02, 0.3, 30);
    let values: Vec<f64> = times.iter().map(|t| 2.0 / t - 0.5 + 0.1 * t).collect();
    let series = TraceSeries::from_samples(times, values).unwrap();
    let inv = fit_heat_invariants(&series, 3).unwrap();
    let expect = [2.0, -0.5, 0.1, 0.0];
    for (a, e) in inv.coefficients.iter().zip(expect) {
        assert!((a - e).abs() < 1e-10, "{:?}", inv.coefficients);
    }
    assert!(inv.residual < 1e-12);
}

#[test]
fn zero_series_gives_zero_everything() {
    let times = default_times();
    let series = TraceSeries::from_samples(times.clone(), vec![0.0; times.len()]).unwrap();
    let inv = fit_heat_invariants(&series, 3).unwrap();
    assert!(inv.coefficients.iter().all(|&a| a == 0.0));
    assert_eq!(relative_zeta_prime_at_zero(&series, &inv).unwrap(), 0.0);
    let same = finite_spectra_determinant(&[1.0, 2.0, 5.0], &[1.0, 2.0, 5.0], &ZetaOptions::default()).unwrap();
    assert_eq!(same.zeta_prime_zero, 0.0);
    assert_eq!(same.determinant, 1.0);
}

#[test]
fn closed_forms_with_singular_terms() {
    let w = (0.02, 0.3);
    let r = zeta_prime_with(&ExpOverT, &exact_invariants(&[1.0, -1.0, 0.5, -1.0 / 6.0, 1.0 / 24.0], w), &ZetaOptions::default()).unwrap();
    assert!((r.zeta_prime_zero + 1.0).abs() < 1e-7, "{}", r.zeta_prime_zero);
    let r = zeta_prime_with(&Exp, &exact_invariants(&[0.0, 1.0, -1.0, 0.5, -1.0 / 6.0], w), &ZetaOptions::default()).unwrap();
    assert!(r.zeta_prime_zero.abs() < 1e-7, "{}", r.zeta_prime_zero);
    assert!(r.pieces.euler != 0.0);
}

#[test]
fn fitted_closed_form_within_budget() {
    let window = (0.002, 0.05);
    let times = log_times(window.0, window.1, 30);
    let values: Vec<f64> = times.iter().map(|&t| ExpOverT.eval(t)).collect();
    let inv = fit_samples(&times, &values, 3, window).unwrap().check(1e-4).unwrap();
    let r = zeta_prime_with(&ExpOverT, &inv, &ZetaOptions::default()).unwrap();
    assert!((r.zeta_prime_zero + 1.0).abs() <= r.error_budget.max(1e-8), "{} ± {}", r.zeta_prime_zero, r.error_budget);
}

#[test]
fn split_point_does_not_matter() {
    let opts = ZetaOptions::default();
    let half = ZetaOptions { split: 0.5, ..opts };
    let a = [0.7, 1.3, 2.2, 4.0];
    let b = [0.9, 1.1, 2.5, 3.5];
    let r1 = finite_spectra_determinant(&a, &b, &opts).unwrap();
    let r2 = finite_spectra_determinant(&a, &b, &half).unwrap();
    assert!((r1.zeta_prime_zero - r2.zeta_prime_zero).abs() <= r1.error_budget + r2.error_budget + 1e-12);
    let w = (0.02, 0.3);
    let e1 = zeta_prime_with(&ExpOverT, &exact_invariants(&[1.0, -1.0, 0.5, -1.0 / 6.0, 1.0 / 24.0], w), &half).unwrap();
    assert!((e1.zeta_prime_zero + 1.0).abs() < 1e-7);
}

#[test]
fn single_swap_convention() {
    let r = finite_spectra_determinant(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0], &ZetaOptions::default()).unwrap();
    assert!((r.determinant - 0.75).abs() < 1e-6, "{}", r.determinant);
    let inv = finite_spectra_determinant(&[1.0, 2.0, 4.0], &[1.0, 2.0, 3.0], &ZetaOptions::default()).unwrap();
    assert!((r.determinant * inv.determinant - 1.0).abs() < 1e-9);
    assert_eq!(r.determinant, (-r.zeta_prime_zero).exp());
}

#[test]
fn random_finite_spectra_match_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let a: Vec<f64> = (0..30).map(|_| rng.gen_range(0.5..5.0)).collect();
        let b: Vec<f64> = (0..30).map(|_| rng.gen_range(0.5..5.0)).collect();
        let log_ratio: f64 = a.iter().map(|x| x.ln()).sum::<f64>() - b.iter().map(|x| x.ln()).sum::<f64>();
        let r = finite_spectra_determinant(&a, &b, &ZetaOptions::default()).unwrap();
        assert!((r.log_determinant() - log_ratio).abs() < 1e-8, "{} vs {log_ratio}", r.log_determinant());
    }
}

#[test]
fn sampled_series_continuation() {
    let times = default_times();
    let values: Vec<f64> = times.iter().map(|&t| (-t).exp()).collect();
    let series = TraceSeries::from_samples(times.clone(), values.clone()).unwrap();
    let inv = fit_samples(&times, &values, 3, (0.02, 0.3)).unwrap();
    let sampled = relative_zeta_prime_at_zero(&series, &inv).unwrap();
    let exact = zeta_prime_with(&Exp, &inv, &ZetaOptions::default()).unwrap();
    assert!((sampled - exact.zeta_prime_zero).abs() < 1e-5, "{sampled} vs {}", exact.zeta_prime_zero);
    // the truncated fit biases ζ'(0) away from 0; the budget has to see it
    assert!(exact.zeta_prime_zero.abs() <= exact.error_budget, "{} ± {}", exact.zeta_prime_zero, exact.error_budget);
}

#[test]
fn fit_failures_are_loud() {
    let times = log_times(0.02, 0.3, 30);
    let wiggly: Vec<f64> = times.iter().map(|t| 1.0 / t + (40.0 * t).sin()).collect();
    let series = TraceSeries::from_samples(times.clone(), wiggly).unwrap();
    assert!(matches!(fit_heat_invariants(&series, 3), Err(Error::FitResidual { .. })));
    let sparse = TraceSeries::from_samples(vec![0.05, 0.1], vec![1.0, 2.0]).unwrap();
    assert!(matches!(fit_heat_invariants(&sparse, 3), Err(Error::TooFewSamples { .. })));
}

#[test]
fn result_serializes() {
    let r = finite_spectra_determinant(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0], &ZetaOptions::default()).unwrap();
    let mut buf = Vec::new();
    r.write_json(&mut buf).unwrap();
    let back: DeterminantResult = serde_json::from_slice(&buf).unwrap();
    assert_eq!(back, r);
    let text = String::from_utf8(buf).unwrap();
    for key in ["zeta_prime_zero", "determinant", "small_t", "large_t", "euler", "singular", "error_budget"] {
        assert!(text.contains(key));
    }
}


//! Relative heat invariants, the relative zeta function at `s = 0` and the
//! relative determinant.
//!
//! With `ζ(s) = Γ(s)⁻¹ ∫_0^∞ t^{s-1} RelTr(t) dt`, splitting at `τ` and
//! subtracting the fitted expansion `Σ a_k t^{k-1}` on `(0, τ)` gives
//!
//! `ζ'(0) = a_1 (γ + ln τ) + F + G - a_0/τ + Σ_{k≥2} a_k τ^{k-1}/(k-1)`
//!
//! with `F = ∫_0^τ (RelTr - Σ a_k t^{k-1}) dt/t` and `G = ∫_τ^∞ RelTr dt/t`,
//! from `1/Γ(s) = s + γs² + O(s³)`. The determinant is `exp(-ζ'(0))`, so
//! for finite spectra it equals `Π λ_a / Π λ_b`.

mod fit;
mod trace;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use fit::{fit_heat_invariants, fit_heat_invariants_with, fit_samples, FitOptions, HeatInvariants};
pub use trace::{FiniteSpectra, RelativeTrace, SampledTrace, SpectralPair};

use crate::discretize::Eigensystem;
use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::special::EULER_GAMMA;
use crate::spectral::{default_times, log_times, relative_trace_series, TraceSeries};

/// Where to split the `t` integral and how hard to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZetaOptions {
    pub split: f64,
    /// Upper end of the numerical large-`t` integral; beyond it the tail is
    /// taken in closed form.
    pub t_max: f64,
    /// Absolute tolerance of each adaptive Simpson piece.
    pub quad_tol: f64,
}

impl Default for ZetaOptions {
    fn default() -> Self {
        Self { split: 1.0, t_max: 20.0, quad_tol: 1e-9 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeterminantPieces {
    /// `-a_0/τ + Σ_{k≥2} a_k τ^{k-1}/(k-1)`.
    pub singular: f64,
    /// `F`, the subtracted small-`t` integral.
    pub small_t: f64,
    /// `G`, the large-`t` integral including its closed-form tail.
    pub large_t: f64,
    /// `a_1 (γ + ln τ)`.
    pub euler: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeterminantResult {
    pub zeta_prime_zero: f64,
    pub determinant: f64,
    pub pieces: DeterminantPieces,
    pub error_budget: f64,
    pub invariants: HeatInvariants,
    pub split: f64,
}

impl DeterminantResult {
    pub fn log_determinant(&self) -> f64 {
        -self.zeta_prime_zero
    }

    pub fn write_json<W: Write>(&self, out: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(std::io::Error::other)
    }
}

/// `ζ'(0)` and the determinant for any relative trace with fitted invariants.
/// Below the fit window the fit is taken as exact.
pub fn zeta_prime_with(trace: &dyn RelativeTrace, inv: &HeatInvariants, opts: &ZetaOptions) -> Result<DeterminantResult> {
    let tau = opts.split;
    let t_lo = inv.fit_window.0;
    if !(t_lo > 0.0 && tau > t_lo) {
        return Err(Error::InvalidArgument(format!("split {tau} must lie above the fit window start {t_lo}")));
    }
    let f = |u: f64| {
        let t = u.exp();
        trace.eval(t) - inv.model(t)
    };
    let small = adaptive_simpson(f, t_lo.ln(), tau.ln(), opts.quad_tol, 32);

    let t_end = opts.t_max.min(trace.t_max()).max(tau);
    let large = if t_end > tau {
        adaptive_simpson(|u: f64| trace.eval(u.exp()), tau.ln(), t_end.ln(), opts.quad_tol, 32)
    } else {
        crate::quad::Quadrature { value: 0.0, error: 0.0, evaluations: 0 }
    };
    let tail = trace
        .tail_integral(t_end)
        .ok_or_else(|| Error::Budget(format!("no decaying continuation of the trace beyond t = {t_end}")))?;

    let a = &inv.coefficients;
    let mut singular = -inv.a(0) / tau;
    for (k, ak) in a.iter().enumerate().skip(2) {
        singular += ak * tau.powi(k as i32 - 1) / (k as f64 - 1.0);
    }
    let euler = inv.a(1) * (EULER_GAMMA + tau.ln());
    let pieces = DeterminantPieces { singular, small_t: small.value, large_t: large.value + tail, euler };
    let zeta_prime_zero = pieces.euler + pieces.small_t + pieces.large_t + pieces.singular;

    let error_budget = small.error.abs() + large.error.abs() + fit_sensitivity(trace, inv)?;

    Ok(DeterminantResult {
        zeta_prime_zero,
        determinant: (-zeta_prime_zero).exp(),
        pieces,
        error_budget,
        invariants: inv.clone(),
        split: tau,
    })
}

/// Fit contribution to the error budget. For a fixed window start `t_lo`
/// the result is linear in the coefficients, with
/// `∂ζ'/∂a_0 = -1/t_lo`, `∂ζ'/∂a_1 = γ + ln t_lo`, `∂ζ'/∂a_k = t_lo^{k-1}/(k-1)`,
/// so the change under a refit on a shifted window (start ×1.5, end ×4/3)
/// is propagated exactly; twice that change is charged.
fn fit_sensitivity(trace: &dyn RelativeTrace, inv: &HeatInvariants) -> Result<f64> {
    if inv.coefficients.iter().all(|&a| a == 0.0) {
        return Ok(0.0);
    }
    let (lo, hi) = inv.fit_window;
    let k = inv.coefficients.len() - 1;
    let (slo, shi) = (1.5 * lo, (4.0 / 3.0) * hi);
    let n = inv.samples.max(3 * k).max(k + 1);
    let times = log_times(slo, shi, n);
    let values: Vec<f64> = times.iter().map(|&t| trace.eval(t)).collect();
    let shifted = fit_samples(&times, &values, k, (slo, shi))?;
    let mut delta = 0.0;
    for j in 0..=k {
        let sens = match j {
            0 => -1.0 / lo,
            1 => EULER_GAMMA + lo.ln(),
            _ => lo.powi(j as i32 - 1) / (j as f64 - 1.0),
        };
        delta += sens * (shifted.a(j) - inv.a(j));
    }
    Ok(2.0 * delta.abs())
}

/// `ζ'(0)` from a sampled series and its invariants (spline interpolation,
/// exponential continuation past the last sample).
pub fn relative_zeta_prime_at_zero(series: &TraceSeries, inv: &HeatInvariants) -> Result<f64> {
    let trace = SampledTrace::new(series)?;
    zeta_prime_with(&trace, inv, &ZetaOptions::default()).map(|r| r.zeta_prime_zero)
}

/// Everything needed to go from two eigensystems to a determinant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeterminantConfig {
    pub times: Vec<f64>,
    pub k: usize,
    pub fit: FitOptions,
    pub zeta: ZetaOptions,
}

impl Default for DeterminantConfig {
    fn default() -> Self {
        Self { times: default_times(), k: 3, fit: FitOptions::default(), zeta: ZetaOptions::default() }
    }
}

/// Series, fit, `ζ'(0)` and `exp(-ζ'(0))` for a compatible pair.
pub fn relative_determinant(a: &Eigensystem, b: &Eigensystem, cfg: &DeterminantConfig) -> Result<DeterminantResult> {
    let series = relative_trace_series(a, b, &cfg.times)?;
    let inv = fit_heat_invariants_with(&series, cfg.k, &cfg.fit)?;
    zeta_prime_with(&SpectralPair::new(a, b)?, &inv, &cfg.zeta)
}

/// The same pipeline on two finite spectra, with the sampling window scaled
/// to the largest eigenvalue so the short-time expansion is accurate there.
pub fn finite_spectra_determinant(a: &[f64], b: &[f64], cfg: &ZetaOptions) -> Result<DeterminantResult> {
    let trace = FiniteSpectra::new(a.to_vec(), b.to_vec())?;
    let lmax = trace.a().iter().chain(trace.b()).cloned().fold(0.0, f64::max);
    let window = (1e-5 / lmax.max(1.0), 1e-3 / lmax.max(1.0));
    let times = log_times(window.0, window.1, 40);
    let values: Vec<f64> = times.iter().map(|&t| trace.eval(t)).collect();
    let inv = fit_samples(&times, &values, 3, window)?.check(1e-4)?;
    zeta_prime_with(&trace, &inv, cfg)
}

#[cfg(test)]
mod tests;

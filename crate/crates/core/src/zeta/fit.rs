use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::TraceSeries;

/// Coefficients of `RelTr(t) ≈ Σ_k a_k t^{k-1}` fitted on a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatInvariants {
    /// `a_0, …, a_K`.
    pub coefficients: Vec<f64>,
    pub fit_window: (f64, f64),
    /// Maximum relative deviation of the fit over the window samples.
    pub residual: f64,
    pub samples: usize,
}

impl HeatInvariants {
    pub fn zero(k: usize, fit_window: (f64, f64)) -> Self {
        Self { coefficients: vec![0.0; k + 1], fit_window, residual: 0.0, samples: 0 }
    }

    /// `Σ_k a_k t^{k-1}`.
    pub fn model(&self, t: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, a| acc * t + a) / t
    }

    pub fn a(&self, k: usize) -> f64 {
        self.coefficients.get(k).copied().unwrap_or(0.0)
    }

    pub fn check(self, threshold: f64) -> Result<Self> {
        if self.residual > threshold {
            Err(Error::FitResidual { residual: self.residual, threshold })
        } else {
            Ok(self)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub window: (f64, f64),
    pub residual_threshold: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { window: (0.02, 0.3), residual_threshold: 1e-4 }
    }
}

/// Fit with `K = k` on the default window `[0.02, 0.3]`, threshold `1e-4`.
pub fn fit_heat_invariants(series: &TraceSeries, k: usize) -> Result<HeatInvariants> {
    fit_heat_invariants_with(series, k, &FitOptions::default())
}

pub fn fit_heat_invariants_with(series: &TraceSeries, k: usize, opts: &FitOptions) -> Result<HeatInvariants> {
    fit_samples(&series.times, &series.values, k, opts.window)?.check(opts.residual_threshold)
}

/// Relative least squares fit of `Σ_{j≤k} a_j t^{j-1}` to the samples inside
/// `window`, without the residual check.
pub fn fit_samples(times: &[f64], values: &[f64], k: usize, window: (f64, f64)) -> Result<HeatInvariants> {
    if !(window.0 > 0.0 && window.1 > window.0) {
        return Err(Error::InvalidArgument(format!("bad fit window {window:?}")));
    }
    let slack = 1e-12 * window.1;
    let picked: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= window.0 - slack && t <= window.1 + slack)
        .map(|(&t, &v)| (t, v))
        .collect();
    let need = (3 * k).max(k + 1);
    if picked.len() < need {
        return Err(Error::TooFewSamples { have: picked.len(), need });
    }
    let vmax = picked.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    if vmax == 0.0 {
        let mut inv = HeatInvariants::zero(k, window);
        inv.samples = picked.len();
        return Ok(inv);
    }
    let floor = 1e-12 * vmax;
    let n = picked.len();
    let mut x = DMatrix::<f64>::zeros(n, k + 1);
    let mut y = DVector::<f64>::zeros(n);
    for (i, &(t, v)) in picked.iter().enumerate() {
        let w = 1.0 / v.abs().max(floor);
        let mut p = 1.0 / t;
        for j in 0..=k {
            x[(i, j)] = w * p;
            p *= t;
        }
        y[i] = w * v;
    }
    let scale: Vec<f64> = (0..=k).map(|j| x.column(j).norm()).collect();
    for j in 0..=k {
        x.column_mut(j).scale_mut(1.0 / scale[j]);
    }
    let svd = x.svd(true, true);
    let sol = svd.solve(&y, 1e-14).map_err(|e| Error::Solver(e.to_string()))?;
    let coefficients: Vec<f64> = (0..=k).map(|j| sol[j] / scale[j]).collect();
    let mut inv = HeatInvariants { coefficients, fit_window: window, residual: 0.0, samples: n };
    inv.residual = picked
        .iter()
        .map(|&(t, v)| (v - inv.model(t)).abs() / v.abs().max(floor))
        .fold(0.0, f64::max);
    Ok(inv)
}

//! Heat traces, relative heat traces, spectral gaps and off-diagonal kernel
//! integrals from an [`Eigensystem`].

mod kernel;

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use kernel::{offdiag_distance, offdiag_l2_detail, offdiag_l2_integral, OffDiagonal, SurfacePoint};

use crate::discretize::{Eigensystem, KERNEL_THRESHOLD};
use crate::error::{Error, Result};

/// Heat trace value with an estimate of the neglected spectrum above `Λ_cut`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatTrace {
    pub value: f64,
    pub tail_bound: f64,
}

/// Weyl estimate `A e^{-Λt} / (4πt)` of `Σ_{λ > Λ} e^{-λt}`.
pub fn weyl_tail(area: f64, lambda_cut: f64, t: f64) -> f64 {
    area * (-lambda_cut * t).exp() / (4.0 * PI * t)
}

/// Neumaier-compensated running sum; order-dependent but deterministic.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `Σ mult · e^{-λt}` over the stored spectrum.
pub fn heat_trace(sys: &Eigensystem, t: f64) -> Result<HeatTrace> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("heat trace needs t > 0, got {t}")));
    }
    let mut acc = Compensated::default();
    for (_, mult, l) in sys.iter() {
        acc.add(mult as f64 * (-l * t).exp());
    }
    Ok(HeatTrace { value: acc.value(), tail_bound: weyl_tail(sys.area, sys.lambda_cut, t) })
}

/// Samples of a relative heat trace `Tr(e^{-tΔ_a} - e^{-tΔ_b})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Estimate of the neglected spectrum above the cutoff at each time.
    pub tail_bound: Vec<f64>,
    pub pair_id: (String, String),
}

impl TraceSeries {
    /// A series from externally computed samples (no truncation tail).
    pub fn from_samples(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::InvalidArgument("times and values must be non-empty and of equal length".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) || times[0] <= 0.0 {
            return Err(Error::InvalidArgument("times must be positive and strictly ascending".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("series values must be finite".into()));
        }
        let n = times.len();
        Ok(Self { times, values, tail_bound: vec![0.0; n], pair_id: ("a".into(), "b".into()) })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Writes `t,value,tail_bound` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,value,tail_bound")?;
        for i in 0..self.len() {
            writeln!(out, "{:.17e},{:.17e},{:.17e}", self.times[i], self.values[i], self.tail_bound[i])?;
        }
        Ok(())
    }
}

/// `n` log-spaced times on `[t0, t1]`.
pub fn log_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    assert!(t0 > 0.0 && t1 > t0 && n >= 2);
    let (l0, l1) = (t0.ln(), t1.ln());
    let mut v: Vec<f64> = (0..n).map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp()).collect();
    v[0] = t0;
    v[n - 1] = t1;
    v
}

/// The default sampling grid: 60 log-spaced points on `[0.02, 20]`.
pub fn default_times() -> Vec<f64> {
    log_times(0.02, 20.0, 60)
}

/// `e^{-xt} - e^{-yt}` evaluated without cancellation and exactly odd under
/// swapping `x` and `y`.
#[inline]
pub fn exp_difference(x: f64, y: f64, t: f64) -> f64 {
    if x <= y {
        -(-x * t).exp() * (-(y - x) * t).exp_m1()
    } else {
        -exp_difference(y, x, t)
    }
}

pub(crate) fn check_compatible(a: &Eigensystem, b: &Eigensystem) -> Result<()> {
    if a.lambda_cut != b.lambda_cut {
        return Err(Error::IncompatibleSystems(format!("cutoffs differ: {} vs {}", a.lambda_cut, b.lambda_cut)));
    }
    if a.grid != b.grid {
        return Err(Error::IncompatibleSystems("grids differ".into()));
    }
    if a.profile.conditions() != b.profile.conditions() || a.profile.note().truncation != b.profile.note().truncation {
        return Err(Error::IncompatibleSystems("truncations differ".into()));
    }
    Ok(())
}

/// Mode-matched relative trace at one time: eigenvalues are paired by
/// (mode, index); unpaired leftovers enter with their own sign.
pub(crate) fn relative_trace_at(a: &Eigensystem, b: &Eigensystem, t: f64) -> f64 {
    let mut acc = Compensated::default();
    let modes = a.modes.len().max(b.modes.len());
    let empty: Vec<f64> = Vec::new();
    for m in 0..modes {
        let la = a.modes.get(m).map_or(&empty, |ms| &ms.eigenvalues);
        let lb = b.modes.get(m).map_or(&empty, |ms| &ms.eigenvalues);
        let mult = if m == 0 { 1.0 } else { 2.0 };
        let n = la.len().max(lb.len());
        for j in 0..n {
            let term = match (la.get(j), lb.get(j)) {
                (Some(&x), Some(&y)) => exp_difference(x, y, t),
                (Some(&x), None) => (-x * t).exp(),
                (None, Some(&y)) => -(-y * t).exp(),
                (None, None) => unreachable!(),
            };
            acc.add(mult * term);
        }
    }
    acc.value()
}

/// `Tr(e^{-tΔ_a} - e^{-tΔ_b})` at each time, mode-matched.
pub fn relative_trace_series(a: &Eigensystem, b: &Eigensystem, times: &[f64]) -> Result<TraceSeries> {
    check_compatible(a, b)?;
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("times must be positive and strictly ascending".into()));
    }
    let values: Vec<f64> = times.par_iter().map(|&t| relative_trace_at(a, b, t)).collect();
    let tail_bound = times
        .iter()
        .map(|&t| weyl_tail(a.area, a.lambda_cut, t) + weyl_tail(b.area, b.lambda_cut, t))
        .collect();
    Ok(TraceSeries { times: times.to_vec(), values, tail_bound, pair_id: (a.label(), b.label()) })
}

/// Smallest eigenvalue above the kernel threshold.
pub fn spectral_gap(sys: &Eigensystem) -> Result<f64> {
    gap_of(sys.iter().map(|(_, _, l)| l))
}

/// Smallest value above the kernel threshold in a list of eigenvalues.
pub fn gap_of<I: IntoIterator<Item = f64>>(eigenvalues: I) -> Result<f64> {
    eigenvalues
        .into_iter()
        .filter(|&l| l > KERNEL_THRESHOLD)
        .fold(None, |acc: Option<f64>, l| Some(acc.map_or(l, |a| a.min(l))))
        .ok_or(Error::EmptySpectrum)
}

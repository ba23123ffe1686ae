use crate::discretize::Eigensystem;
use crate::error::{Error, Result};
use crate::special::exp_integral_e1;
use crate::spectral::{check_compatible, exp_difference, relative_trace_at, Compensated, TraceSeries};

/// A relative heat trace `t ↦ RelTr(t)` that can be evaluated anywhere on
/// `(0, t_max]`.
pub trait RelativeTrace: Sync {
    fn eval(&self, t: f64) -> f64;

    /// `∫_T^∞ RelTr(t) dt/t` in closed form, if known.
    fn tail_integral(&self, _t: f64) -> Option<f64> {
        None
    }

    /// Largest time at which `eval` is meaningful.
    fn t_max(&self) -> f64 {
        f64::INFINITY
    }
}

/// Relative trace of two compatible eigensystems, mode-matched.
pub struct SpectralPair<'a> {
    a: &'a Eigensystem,
    b: &'a Eigensystem,
}

impl<'a> SpectralPair<'a> {
    pub fn new(a: &'a Eigensystem, b: &'a Eigensystem) -> Result<Self> {
        check_compatible(a, b)?;
        Ok(Self { a, b })
    }
}

fn e1_difference(x: f64, y: f64, t: f64) -> f64 {
    if x == y {
        0.0
    } else {
        exp_integral_e1(x * t) - exp_integral_e1(y * t)
    }
}

impl RelativeTrace for SpectralPair<'_> {
    fn eval(&self, t: f64) -> f64 {
        relative_trace_at(self.a, self.b, t)
    }

    fn tail_integral(&self, t: f64) -> Option<f64> {
        let mut acc = Compensated::default();
        let empty = Vec::new();
        for m in 0..self.a.modes.len().max(self.b.modes.len()) {
            let la = self.a.modes.get(m).map_or(&empty, |ms| &ms.eigenvalues);
            let lb = self.b.modes.get(m).map_or(&empty, |ms| &ms.eigenvalues);
            let mult = if m == 0 { 1.0 } else { 2.0 };
            for j in 0..la.len().max(lb.len()) {
                let term = match (la.get(j), lb.get(j)) {
                    (Some(&x), Some(&y)) => e1_difference(x, y, t),
                    (Some(&x), None) => exp_integral_e1(x * t),
                    (None, Some(&y)) => -exp_integral_e1(y * t),
                    (None, None) => 0.0,
                };
                acc.add(mult * term);
            }
        }
        Some(acc.value())
    }
}

/// Relative trace of two finite positive spectra, paired in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSpectra {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl FiniteSpectra {
    pub fn new(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Self> {
        if a.iter().chain(&b).any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidArgument("finite spectra must be positive".into()));
        }
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    fn pairs(&self) -> impl Iterator<Item = (Option<f64>, Option<f64>)> + '_ {
        (0..self.a.len().max(self.b.len())).map(|i| (self.a.get(i).copied(), self.b.get(i).copied()))
    }
}

impl RelativeTrace for FiniteSpectra {
    fn eval(&self, t: f64) -> f64 {
        let mut acc = Compensated::default();
        for p in self.pairs() {
            acc.add(match p {
                (Some(x), Some(y)) => exp_difference(x, y, t),
                (Some(x), None) => (-x * t).exp(),
                (None, Some(y)) => -(-y * t).exp(),
                (None, None) => 0.0,
            });
        }
        acc.value()
    }

    fn tail_integral(&self, t: f64) -> Option<f64> {
        let mut acc = Compensated::default();
        for p in self.pairs() {
            acc.add(match p {
                (Some(x), Some(y)) => e1_difference(x, y, t),
                (Some(x), None) => exp_integral_e1(x * t),
                (None, Some(y)) => -exp_integral_e1(y * t),
                (None, None) => 0.0,
            });
        }
        Some(acc.value())
    }
}

/// A sampled series interpolated by a natural cubic spline in `ln t`.
/// Beyond the last sample the trace is continued by the exponential
/// `C e^{-μt}` through the last two samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledTrace {
    u: Vec<f64>,
    v: Vec<f64>,
    m: Vec<f64>,
    decay: Option<(f64, f64)>,
}

impl SampledTrace {
    pub fn new(series: &TraceSeries) -> Result<Self> {
        let n = series.len();
        if n < 3 {
            return Err(Error::TooFewSamples { have: n, need: 3 });
        }
        let u: Vec<f64> = series.times.iter().map(|t| t.ln()).collect();
        let v = series.values.clone();
        // natural spline second derivatives by the tridiagonal (Thomas) sweep
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = u[i] - u[i - 1];
            let h1 = u[i + 1] - u[i];
            let rhs = 6.0 * ((v[i + 1] - v[i]) / h1 - (v[i] - v[i - 1]) / h0);
            let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
            c[i] = h1 / diag;
            d[i] = (rhs - h0 * d[i - 1]) / diag;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        let (t0, t1) = (series.times[n - 2], series.times[n - 1]);
        let (r0, r1) = (v[n - 2], v[n - 1]);
        let decay = if r0 != 0.0 && r1 != 0.0 && r0.signum() == r1.signum() && r1.abs() < r0.abs() {
            let mu = (r0 / r1).ln() / (t1 - t0);
            Some((r1 * (mu * t1).exp(), mu))
        } else {
            None
        };
        Ok(Self { u, v, m, decay })
    }
}

impl RelativeTrace for SampledTrace {
    fn eval(&self, t: f64) -> f64 {
        let x = t.ln();
        let n = self.u.len();
        let k = self.u.partition_point(|&a| a <= x).clamp(1, n - 1);
        let (a, b) = (self.u[k - 1], self.u[k]);
        let h = b - a;
        let p = (b - x) / h;
        let q = (x - a) / h;
        p * self.v[k - 1] + q * self.v[k]
            + ((p * p * p - p) * self.m[k - 1] + (q * q * q - q) * self.m[k]) * h * h / 6.0
    }

    fn tail_integral(&self, t: f64) -> Option<f64> {
        if *self.v.last().unwrap() == 0.0 {
            return Some(0.0);
        }
        self.decay.map(|(c, mu)| c * exp_integral_e1(mu * t))
    }

    fn t_max(&self) -> f64 {
        self.u.last().unwrap().exp()
    }
}

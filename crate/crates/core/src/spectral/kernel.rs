use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::discretize::Eigensystem;
use crate::error::{Error, Result};

/// A point `(s, θ)` of the cylinder chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub s: f64,
    pub theta: f64,
}

/// Value of `∫_U |K(t,x,y) K(t,x,y')| dA(x)` with its truncation estimate and
/// the axial distance `d` between `U` and `{y, y'}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffDiagonal {
    pub value: f64,
    pub tail: f64,
    pub distance: f64,
}

/// `∫√w ds` from the region `[r0, r1]` to the nearer of the two points
/// (0 if either lies inside).
pub fn offdiag_distance(sys: &Eigensystem, region: (f64, f64), y: SurfacePoint, y2: SurfacePoint) -> f64 {
    let one = |p: SurfacePoint| {
        if p.s < region.0 {
            sys.profile.distance(p.s, region.0)
        } else if p.s > region.1 {
            sys.profile.distance(region.1, p.s)
        } else {
            0.0
        }
    };
    one(y).min(one(y2))
}

fn interpolate(nodes: &[f64], values: &[f64], s: f64) -> f64 {
    let k = nodes.partition_point(|&x| x <= s).clamp(1, nodes.len() - 1);
    let (s0, s1) = (nodes[k - 1], nodes[k]);
    let f = (s - s0) / (s1 - s0);
    values[k - 1] * (1.0 - f) + values[k] * f
}

/// `(1/2π) [c_0 + 2 Σ_{m≥1} c_m cos(mφ)]` by Clenshaw's recurrence.
fn fourier_sum(c: &[f64], phi: f64) -> f64 {
    let x = phi.cos();
    let (mut b1, mut b2) = (0.0, 0.0);
    for &cm in c.iter().skip(1).rev() {
        let b0 = 2.0 * cm + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    (c.first().copied().unwrap_or(0.0) + x * b1 - b2) / (2.0 * PI)
}

/// `∫_{region × S¹} |K(t,x,y) K(t,x,y')| dA(x)` for the mode-sum heat kernel.
pub fn offdiag_l2_integral(
    sys: &Eigensystem,
    t: f64,
    region: (f64, f64),
    y: SurfacePoint,
    y2: SurfacePoint,
) -> Result<f64> {
    offdiag_l2_detail(sys, t, region, y, y2).map(|o| o.value)
}

pub fn offdiag_l2_detail(
    sys: &Eigensystem,
    t: f64,
    region: (f64, f64),
    y: SurfacePoint,
    y2: SurfacePoint,
) -> Result<OffDiagonal> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("kernel needs t > 0, got {t}")));
    }
    if !sys.has_eigenvectors() {
        return Err(Error::MissingEigenvectors);
    }
    let nodes = sys.grid.nodes();
    let (c0, c1) = sys.grid.span();
    if !(region.0 < region.1) || region.0 < c0 || region.1 > c1 || [y.s, y2.s].iter().any(|&s| s < c0 || s > c1) {
        return Err(Error::InvalidArgument("region and points must lie in the chart".into()));
    }
    let idx: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i] >= region.0 && nodes[i] <= region.1).collect();
    if idx.len() < 2 {
        return Err(Error::InvalidArgument("region holds fewer than two grid nodes".into()));
    }
    // trapezoid weights over the kept nodes, times w for the area element
    let quad: Vec<f64> = idx
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let left = if k > 0 { nodes[i] - nodes[idx[k - 1]] } else { 0.0 };
            let right = if k + 1 < idx.len() { nodes[idx[k + 1]] - nodes[i] } else { 0.0 };
            0.5 * (left + right) * sys.weights[i]
        })
        .collect();

    let nm = sys.modes.len();
    let mut ay = vec![vec![0.0; nm]; idx.len()];
    let mut ay2 = vec![vec![0.0; nm]; idx.len()];
    for (m, ms) in sys.modes.iter().enumerate() {
        let vecs = ms.eigenvectors.as_ref().ok_or(Error::MissingEigenvectors)?;
        for (l, u) in ms.eigenvalues.iter().zip(vecs) {
            let decay = (-l * t).exp();
            let cy = decay * interpolate(nodes, u, y.s);
            let cy2 = decay * interpolate(nodes, u, y2.s);
            for (k, &i) in idx.iter().enumerate() {
                ay[k][m] += cy * u[i];
                ay2[k][m] += cy2 * u[i];
            }
        }
    }

    let n_theta = (4 * nm + 8).max(64);
    let dtheta = 2.0 * PI / n_theta as f64;
    let mut value = 0.0;
    let mut abs_sum = 0.0;
    for (k, q) in quad.iter().enumerate() {
        let mut row = 0.0;
        let mut row_abs = 0.0;
        for j in 0..n_theta {
            let theta = dtheta * j as f64;
            let k1 = fourier_sum(&ay[k], theta - y.theta);
            let k2 = fourier_sum(&ay2[k], theta - y2.theta);
            row += (k1 * k2).abs();
            row_abs += k1.abs() + k2.abs();
        }
        value += q * row * dtheta;
        abs_sum += q * row_abs * dtheta;
    }
    let area: f64 = 2.0 * PI * quad.iter().sum::<f64>();
    let tau = (-sys.lambda_cut * t).exp() / (4.0 * PI * t);
    let tail = tau * abs_sum + tau * tau * area;
    if tail > 1e-6 * value {
        return Err(Error::KernelNotConverged { t, tail, value });
    }
    Ok(OffDiagonal { value, tail, distance: offdiag_distance(sys, region, y, y2) })
}

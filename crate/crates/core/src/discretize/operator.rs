use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::tridiag::SymTridiag;
use crate::error::{Error, Result};
use crate::geometry::{EndCondition, MetricProfile};

/// Finite-volume discretization of `-u'' + m²u = λ w u` for one Fourier mode.
///
/// Unknowns are the grid nodes not pinned by a Dirichlet condition, starting
/// at grid index `first_node`. `stiffness_diag`/`stiffness_off` hold the
/// symmetric tridiagonal stiffness and `mass` the lumped diagonal mass
/// `w_i c_i` with `c_i` the dual cell width. `excess` is the stiffness row
/// sum (the `m²c_i` term plus couplings to pinned Dirichlet nodes), kept
/// separately so pivots can be formed without cancellation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeOperator {
    pub mode: u32,
    pub first_node: usize,
    pub stiffness_diag: Vec<f64>,
    pub stiffness_off: Vec<f64>,
    pub mass: Vec<f64>,
    pub excess: Vec<f64>,
}

impl ModeOperator {
    pub fn multiplicity(&self) -> u32 {
        if self.mode == 0 {
            1
        } else {
            2
        }
    }

    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    /// `D^{-1/2} A D^{-1/2}`.
    pub fn symmetrized(&self) -> SymTridiag {
        let z: Vec<f64> = self.mass.iter().map(|m| m.sqrt()).collect();
        let d = self.stiffness_diag.iter().zip(&self.mass).map(|(a, m)| a / m).collect();
        let e = self.stiffness_off.iter().enumerate().map(|(i, a)| a / (z[i] * z[i + 1])).collect();
        let g = self.excess.iter().zip(&self.mass).map(|(s, m)| s / m).collect();
        SymTridiag::with_scaling(d, e, &z, g)
    }

    /// Inertia of the pencil: number of negative pivots of `A - x D`.
    pub fn pencil_count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE;
        let n = self.dim();
        let mut t = 0.0;
        let mut c = 0;
        for i in 0..n {
            let right = if i + 1 < n { self.stiffness_off[i].abs() } else { 0.0 };
            let left = if i > 0 { self.stiffness_off[i - 1].abs() } else { 0.0 };
            let mut q = self.excess[i] - x * self.mass[i] + right + left * t;
            if q.abs() < tiny {
                q = -tiny;
            }
            c += (q < 0.0) as usize;
            t = (q - right) / q;
        }
        c
    }

    /// Eigenvalues below `cut` by plain bisection on the pencil inertia.
    /// Slower than the symmetrized route; kept as an independent check.
    pub fn pencil_eigenvalues_below(&self, cut: f64, rel_tol: f64) -> Vec<f64> {
        let k = self.pencil_count_below(cut);
        let lo0 = 0.0f64.min(self.symmetrized().gershgorin().0);
        (0..k)
            .map(|j| {
                let (mut lo, mut hi) = (lo0, cut);
                while hi - lo > rel_tol * hi.abs().max(lo.abs()) + f64::MIN_POSITIVE {
                    let mid = 0.5 * (lo + hi);
                    if self.pencil_count_below(mid) > j {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }

    /// `‖A u - λ D u‖_{D⁻¹} / (|λ| ‖u‖_D)`, `u` over the unknowns. `A u` is
    /// evaluated in difference form so roundoff stays relative to `λ`.
    pub fn relative_residual(&self, lambda: f64, u: &[f64]) -> f64 {
        let n = self.dim();
        let mut r2 = 0.0;
        for i in 0..n {
            let mut v = (self.excess[i] - lambda * self.mass[i]) * u[i];
            if i > 0 {
                v += self.stiffness_off[i - 1].abs() * (u[i] - u[i - 1]);
            }
            if i + 1 < n {
                v += self.stiffness_off[i].abs() * (u[i] - u[i + 1]);
            }
            r2 += v * v / self.mass[i];
        }
        let norm2: f64 = u.iter().zip(&self.mass).map(|(a, m)| a * a * m).sum();
        r2.sqrt() / (lambda.abs().max(f64::MIN_POSITIVE) * norm2.sqrt())
    }
}

pub(crate) fn assemble(
    grid: &Grid,
    weights: &[f64],
    m: u32,
    left: EndCondition,
    right: EndCondition,
) -> Result<ModeOperator> {
    let s = grid.nodes();
    let n = s.len() - 1;
    if let Some((i, &w)) = weights.iter().enumerate().find(|(_, &w)| !(w > 0.0 && w.is_finite())) {
        return Err(Error::NonPositiveWeight { s: s[i], weight: w });
    }
    let i0 = if left.is_free(m) { 0 } else { 1 };
    let i1 = if right.is_free(m) { n } else { n - 1 };
    let m2 = (m as f64) * (m as f64);
    let dim = i1 + 1 - i0;
    let mut diag = Vec::with_capacity(dim);
    let mut mass = Vec::with_capacity(dim);
    let mut excess = Vec::with_capacity(dim);
    let mut off = Vec::with_capacity(dim.saturating_sub(1));
    for i in i0..=i1 {
        let hl = if i > 0 { s[i] - s[i - 1] } else { 0.0 };
        let hr = if i < n { s[i + 1] - s[i] } else { 0.0 };
        let c = 0.5 * (hl + hr);
        let mut a = m2 * c;
        let mut x = m2 * c;
        if i > 0 {
            a += 1.0 / hl;
            if i == i0 {
                x += 1.0 / hl;
            }
        }
        if i < n {
            a += 1.0 / hr;
            if i == i1 {
                x += 1.0 / hr;
            }
        }
        diag.push(a);
        excess.push(x);
        mass.push(weights[i] * c);
        if i < i1 {
            off.push(-1.0 / hr);
        }
    }
    Ok(ModeOperator { mode: m, first_node: i0, stiffness_diag: diag, stiffness_off: off, mass, excess })
}

/// Assembles the mode-`m` operator of `profile` on `grid`, with boundary
/// conditions taken from the profile's truncation.
pub fn assemble_mode_operator(profile: &MetricProfile, m: u32, grid: &Grid) -> Result<ModeOperator> {
    if !grid.matches_chart(profile) {
        return Err(Error::InvalidArgument(format!(
            "grid span {:?} does not match profile chart {:?}",
            grid.span(),
            profile.chart()
        )));
    }
    let w = profile.sample(grid.nodes());
    let (l, r) = profile.conditions();
    assemble(grid, &w, m, l, r)
}

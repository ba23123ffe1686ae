//! Per-mode generalized Sturm–Liouville problems `-u'' + m²u = λ w u`.

mod grid;
mod operator;
pub mod tridiag;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use grid::Grid;
pub use operator::{assemble_mode_operator, ModeOperator};

use crate::error::{Error, Result};
use crate::geometry::MetricProfile;

/// Eigenvalues below this are treated as kernel.
pub const KERNEL_THRESHOLD: f64 = 1e-10;

/// Eigenpairs of a single Fourier mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    pub mode: u32,
    /// Ascending, all `≤ lambda_cut`.
    pub eigenvalues: Vec<f64>,
    /// Node values on the whole grid (zero at Dirichlet ends), mass-orthonormal:
    /// `Σ_i u_i v_i w_i c_i = δ`.
    pub eigenvectors: Option<Vec<Vec<f64>>>,
}

impl ModeSpectrum {
    pub fn multiplicity(&self) -> u32 {
        if self.mode == 0 {
            1
        } else {
            2
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub lambda_cut: f64,
    pub eigenvectors: bool,
    /// Relative bisection width for each eigenvalue.
    pub rel_tol: f64,
}

impl SolveOptions {
    pub fn new(lambda_cut: f64) -> Self {
        Self { lambda_cut, eigenvectors: false, rel_tol: 1e-13 }
    }

    pub fn with_eigenvectors(mut self) -> Self {
        self.eigenvectors = true;
        self
    }
}

/// Spectrum of the truncated surface below `lambda_cut`, mode by mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigensystem {
    pub profile: MetricProfile,
    pub grid: Grid,
    pub weights: Vec<f64>,
    pub lambda_cut: f64,
    /// Smallest `m` with `m² / max w > lambda_cut`; modes `0..mode_cutoff` are stored.
    pub mode_cutoff: u32,
    pub modes: Vec<ModeSpectrum>,
    /// Area `2π ∫ w ds` of the truncated surface.
    pub area: f64,
}

/// All eigenvalues `≤ lambda_cut` of the profile's Laplacian on `grid`.
pub fn solve_modes(profile: &MetricProfile, grid: &Grid, lambda_cut: f64) -> Result<Eigensystem> {
    solve_modes_with(profile, grid, &SolveOptions::new(lambda_cut))
}

pub fn solve_modes_with(profile: &MetricProfile, grid: &Grid, opts: &SolveOptions) -> Result<Eigensystem> {
    if !(opts.lambda_cut > 0.0 && opts.lambda_cut.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda_cut must be positive, got {}", opts.lambda_cut)));
    }
    if !grid.matches_chart(profile) {
        return Err(Error::InvalidArgument(format!(
            "grid span {:?} does not match profile chart {:?}",
            grid.span(),
            profile.chart()
        )));
    }
    let weights = profile.sample(grid.nodes());
    let wmax = weights.iter().cloned().fold(0.0, f64::max);
    let mut mode_cutoff = (opts.lambda_cut * wmax).sqrt().floor() as u32;
    while (mode_cutoff as f64).powi(2) / wmax <= opts.lambda_cut {
        mode_cutoff += 1;
    }
    let (left, right) = profile.conditions();
    let modes = (0..mode_cutoff)
        .into_par_iter()
        .map(|m| {
            let op = operator::assemble(grid, &weights, m, left, right)?;
            solve_mode(&op, grid.nodes().len(), opts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Eigensystem {
        profile: profile.clone(),
        grid: grid.clone(),
        weights,
        lambda_cut: opts.lambda_cut,
        mode_cutoff,
        modes,
        area: profile.area(),
    })
}

fn solve_mode(op: &ModeOperator, nodes: usize, opts: &SolveOptions) -> Result<ModeSpectrum> {
    let t = op.symmetrized();
    let count = t.count_below(opts.lambda_cut);
    let capacity = op.dim() / 4;
    if count > capacity {
        return Err(Error::ResolutionExceeded { mode: op.mode, count, capacity, nodes });
    }
    let mut eigenvalues = t.eigenvalues_below(opts.lambda_cut, opts.rel_tol);
    eigenvalues.retain(|&l| l <= opts.lambda_cut);
    let eigenvectors = opts.eigenvectors.then(|| {
        let mut sym: Vec<Vec<f64>> = Vec::with_capacity(eigenvalues.len());
        for (j, &l) in eigenvalues.iter().enumerate() {
            let close: Vec<&[f64]> = (0..j)
                .filter(|&i| (eigenvalues[i] - l).abs() <= 1e-6 * l.abs().max(1e-3))
                .map(|i| sym[i].as_slice())
                .collect();
            let v = t.eigenvector(l, &close);
            sym.push(v);
        }
        sym.iter()
            .map(|v| {
                let mut u = vec![0.0; nodes];
                for (k, (&vk, &mk)) in v.iter().zip(&op.mass).enumerate() {
                    u[op.first_node + k] = vk / mk.sqrt();
                }
                u
            })
            .collect()
    });
    Ok(ModeSpectrum { mode: op.mode, eigenvalues, eigenvectors })
}

impl Eigensystem {
    /// `(mode, multiplicity, λ)` over all stored eigenvalues, ascending mode then index.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.modes
            .iter()
            .flat_map(|ms| ms.eigenvalues.iter().map(move |&l| (ms.mode, ms.multiplicity(), l)))
    }

    /// All eigenvalues repeated by multiplicity, ascending.
    pub fn sorted_eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .iter()
            .flat_map(|(_, mult, l)| std::iter::repeat(l).take(mult as usize))
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    /// Number of eigenvalues counted with multiplicity.
    pub fn count(&self) -> usize {
        self.iter().map(|(_, m, _)| m as usize).sum()
    }

    /// Short description of the surface and discretization, used to tag
    /// derived series.
    pub fn label(&self) -> String {
        let sp = self.profile.spec();
        let mut out = format!(
            "{:?}/{:?} bump {}@{}r{}",
            sp.left.kind(),
            sp.right.kind(),
            sp.bump.amplitude,
            sp.bump.center,
            sp.bump.radius
        );
        for end in [sp.left, sp.right] {
            if end.cap_epsilon() > 0.0 {
                out += &format!(" cap_eps {}", end.cap_epsilon());
            }
        }
        if let Some(e) = sp.boundary_surgery_epsilon {
            out += &format!(" boundary_eps {e}");
        }
        if let Some(ff) = sp.funnel_factor {
            out += &format!(" funnel_factor {}", ff.constant);
        }
        out + &format!(" N {} cut {}", self.grid.cells(), self.lambda_cut)
    }

    pub fn has_eigenvectors(&self) -> bool {
        self.modes.iter().all(|m| m.eigenvectors.is_some())
    }

    /// Dual cell widths `c_i` of the grid.
    pub fn dual_cells(&self) -> Vec<f64> {
        let s = self.grid.nodes();
        let n = s.len() - 1;
        (0..=n)
            .map(|i| {
                let hl = if i > 0 { s[i] - s[i - 1] } else { 0.0 };
                let hr = if i < n { s[i + 1] - s[i] } else { 0.0 };
                0.5 * (hl + hr)
            })
            .collect()
    }

    /// Writes `m,index,multiplicity,lambda` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "m,index,multiplicity,lambda")?;
        for ms in &self.modes {
            for (j, l) in ms.eigenvalues.iter().enumerate() {
                writeln!(out, "{},{},{},{:.17e}", ms.mode, j + 1, ms.multiplicity(), l)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;

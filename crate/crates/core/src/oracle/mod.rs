//! Independent brute-force checks: a 2D five-point discretization of the
//! full Laplacian on the (s, θ) cylinder, solved without any Fourier
//! splitting, and exact finite-matrix relative determinants.

mod banded;
mod krylov;

pub use banded::{BandCholesky, SymBanded};
pub use krylov::KrylovOptions;

use crate::discretize::Grid;
use crate::geometry::{EndCondition, MetricProfile};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use std::f64::consts::PI;
use std::io::Write;

/// Tensor grid: s-nodes from a [`Grid`], `theta_nodes` uniform periodic
/// θ-nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2D {
    s: Grid,
    theta_nodes: usize,
}

impl Grid2D {
    pub fn new(s: Grid, theta_nodes: usize) -> Result<Self> {
        if theta_nodes < 4 {
            return Err(Error::InvalidArgument(format!("need at least 4 θ-nodes, got {theta_nodes}")));
        }
        Ok(Grid2D { s, theta_nodes })
    }

    /// Adapted s-grid (same construction as the mode solver) times a uniform θ-grid.
    pub fn adapted(profile: &MetricProfile, s_cells: usize, theta_nodes: usize) -> Result<Self> {
        Grid2D::new(Grid::adapted(profile, s_cells, 0.5)?, theta_nodes)
    }

    pub fn s_grid(&self) -> &Grid {
        &self.s
    }

    pub fn theta_nodes(&self) -> usize {
        self.theta_nodes
    }

    pub fn theta_spacing(&self) -> f64 {
        2.0 * PI / self.theta_nodes as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        (j % self.theta_nodes) as f64 * self.theta_spacing()
    }

    /// Smallest number of s-nodes inside any bump radius of `profile`, or
    /// `None` when the profile carries no bump.
    pub fn nodes_per_bump_radius(&self, profile: &MetricProfile) -> Option<usize> {
        let b = profile.spec().bump;
        if b.amplitude == 0.0 {
            return None;
        }
        let count = |a: f64, z: f64| self.s.nodes().iter().filter(|&&s| s >= a && s <= z).count();
        Some(count(b.center - b.radius, b.center).min(count(b.center, b.center + b.radius)))
    }
}

/// How an endpoint of the s-grid enters the 2D unknowns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EndNode {
    /// Pinned to zero, not an unknown.
    Excluded,
    /// A full ring of θ-nodes.
    Ring,
    /// The whole circle collapsed to one unknown: free for θ-constant data,
    /// pinned otherwise.
    Pole,
}

fn end_node(c: EndCondition) -> EndNode {
    match c {
        EndCondition::Dirichlet => EndNode::Excluded,
        EndCondition::Neumann => EndNode::Ring,
        EndCondition::Regular => EndNode::Pole,
    }
}

/// Assembled 2D pencil `K u = λ M u`.
pub struct Pencil2D {
    pub stiffness: SymBanded,
    pub mass: Vec<f64>,
    /// For each unknown, its s-node and θ-index (`None` for a pole).
    pub layout: Vec<(usize, Option<usize>)>,
}

/// Five-point finite-volume discretization of `e^{-2φ}(−∂_s² − ∂_θ²)` on
/// `grid`, with endpoint conditions from the profile's truncation.
pub fn assemble_2d(profile: &MetricProfile, grid: &Grid2D) -> Result<Pencil2D> {
    let s = grid.s.nodes();
    let (a, b) = profile.chart();
    let (g0, g1) = grid.s.span();
    if (g0 - a).abs() > 1e-12 * (1.0 + a.abs()) || (g1 - b).abs() > 1e-12 * (1.0 + b.abs()) {
        return Err(Error::InvalidArgument(format!("2D grid span ({g0}, {g1}) does not match chart ({a}, {b})")));
    }
    let n = s.len() - 1;
    let nt = grid.theta_nodes;
    let ht = grid.theta_spacing();
    let (lc, rc) = profile.conditions();
    let kinds: Vec<EndNode> = (0..=n)
        .map(|i| match i {
            0 => end_node(lc),
            i if i == n => end_node(rc),
            _ => EndNode::Ring,
        })
        .collect();
    // first unknown index of every s-node
    let mut first = Vec::with_capacity(n + 1);
    let mut layout = Vec::new();
    for (i, k) in kinds.iter().enumerate() {
        first.push(layout.len());
        match k {
            EndNode::Excluded => {}
            EndNode::Ring => layout.extend((0..nt).map(|j| (i, Some(j)))),
            EndNode::Pole => layout.push((i, None)),
        }
    }
    let dim = layout.len();
    let mut k = SymBanded::zeros(dim, nt);
    let mut mass = vec![0.0; dim];
    let w = profile.sample(s);
    if let Some((i, &wi)) = w.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
        return Err(Error::NonPositiveWeight { s: s[i], weight: wi });
    }
    for i in 0..=n {
        let hl = if i > 0 { s[i] - s[i - 1] } else { 0.0 };
        let hr = if i < n { s[i + 1] - s[i] } else { 0.0 };
        let c = 0.5 * (hl + hr);
        let f = first[i];
        match kinds[i] {
            EndNode::Excluded => {}
            EndNode::Pole => mass[f] = w[i] * c * 2.0 * PI,
            EndNode::Ring => {
                let coupling = c / ht;
                for j in 0..nt {
                    mass[f + j] = w[i] * c * ht;
                    let jn = (j + 1) % nt;
                    k.add(f + j, f + j, coupling);
                    k.add(f + jn, f + jn, coupling);
                    k.add(f + j, f + jn, -coupling);
                }
            }
        }
        if i == n {
            break;
        }
        // s-edge between node i and i + 1
        let (ki, kj) = (kinds[i], kinds[i + 1]);
        let (fi, fj) = (first[i], first[i + 1]);
        let per_ray = ht / hr;
        let rays = |kind: EndNode, f0: usize, j: usize| match kind {
            EndNode::Excluded => None,
            EndNode::Ring => Some(f0 + j),
            EndNode::Pole => Some(f0),
        };
        for j in 0..nt {
            match (rays(ki, fi, j), rays(kj, fj, j)) {
                (Some(p), Some(q)) => {
                    k.add(p, p, per_ray);
                    k.add(q, q, per_ray);
                    k.add(p, q, -per_ray);
                }
                (Some(p), None) | (None, Some(p)) => k.add(p, p, per_ray),
                (None, None) => {}
            }
        }
    }
    Ok(Pencil2D { stiffness: k, mass, layout })
}

/// Eigenvalues of the 2D oracle with per-pair diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Relative residuals `‖A x − λ x‖/λ` of the symmetrized problem.
    pub residuals: Vec<f64>,
    /// Dominant angular frequency |m| of each eigenvector.
    pub angular_modes: Vec<u32>,
}

impl OracleSpectrum {
    /// CSV in the layout of the mode-solver export (`m,index,multiplicity,lambda`),
    /// with `index` counted within each angular frequency and multiplicity 1
    /// per row (degenerate pairs appear twice).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "m,index,multiplicity,lambda")?;
        let mut seen = std::collections::BTreeMap::<u32, usize>::new();
        for (&l, &m) in self.eigenvalues.iter().zip(&self.angular_modes) {
            let idx = seen.entry(m).or_insert(0);
            writeln!(out, "{m},{idx},1,{l:e}")?;
            *idx += 1;
        }
        Ok(())
    }
}

pub const MAX_ORACLE_COUNT: usize = 50;

/// The `count` smallest eigenvalues of the 2D five-point discretization.
pub fn low_eigenvalues_2d(profile: &MetricProfile, grid: &Grid2D, count: usize) -> Result<Vec<f64>> {
    Ok(low_spectrum_2d(profile, grid, count, &KrylovOptions::default())?.eigenvalues)
}

pub fn low_spectrum_2d(profile: &MetricProfile, grid: &Grid2D, count: usize, opts: &KrylovOptions) -> Result<OracleSpectrum> {
    if count == 0 || count > MAX_ORACLE_COUNT {
        return Err(Error::InvalidArgument(format!("oracle count {count} outside 1..={MAX_ORACLE_COUNT}")));
    }
    if let Some(per) = grid.nodes_per_bump_radius(profile) {
        if per < 8 {
            return Err(Error::InvalidArgument(format!("2D grid has only {per} s-nodes per bump radius (need 8)")));
        }
    }
    let pencil = assemble_2d(profile, grid)?;
    let pairs = krylov::lowest_pairs(&pencil.stiffness, &pencil.mass, count, opts)?;
    let nt = grid.theta_nodes;
    let mut out = OracleSpectrum { eigenvalues: vec![], residuals: vec![], angular_modes: vec![] };
    for p in pairs {
        out.eigenvalues.push(p.lambda);
        out.residuals.push(p.residual);
        out.angular_modes.push(dominant_frequency(&p.vector, &pencil.layout, nt, grid.theta_spacing()));
    }
    Ok(out)
}

/// Oracle spectra on a grid pair related by halving both spacings, with
/// the Richardson combination `(4 λ_fine − λ_coarse)/3` that removes the
/// leading O(h² + h_θ²) term of the five-point stencil.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleStudy {
    pub coarse: OracleSpectrum,
    pub fine: OracleSpectrum,
    pub extrapolated: Vec<f64>,
}

/// Runs the oracle at `(s_cells/2, theta_nodes/2)` and `(s_cells, theta_nodes)`
/// and extrapolates the `count` lowest eigenvalues. Pairs are matched by
/// angular frequency and rank within that frequency, so near-crossings of
/// different modes do not mix.
pub fn extrapolated_eigenvalues_2d(
    profile: &MetricProfile,
    s_cells: usize,
    theta_nodes: usize,
    count: usize,
    opts: &KrylovOptions,
) -> Result<OracleStudy> {
    if s_cells % 2 != 0 || theta_nodes % 2 != 0 {
        return Err(Error::InvalidArgument("extrapolation needs even s-cell and θ-node counts".into()));
    }
    // a few spare pairs so a degenerate pair cut at the boundary still matches
    let want = (count + 6).min(MAX_ORACLE_COUNT);
    let coarse = low_spectrum_2d(profile, &Grid2D::adapted(profile, s_cells / 2, theta_nodes / 2)?, want, opts)?;
    let fine = low_spectrum_2d(profile, &Grid2D::adapted(profile, s_cells, theta_nodes)?, want, opts)?;
    let ranked = |sp: &OracleSpectrum| {
        let mut seen = std::collections::BTreeMap::<u32, usize>::new();
        sp.angular_modes
            .iter()
            .map(|&m| {
                let r = seen.entry(m).or_insert(0);
                *r += 1;
                (m, *r)
            })
            .collect::<Vec<_>>()
    };
    let (rc, rf) = (ranked(&coarse), ranked(&fine));
    let mut extrapolated = Vec::with_capacity(count);
    for (i, key) in rf.iter().enumerate().take(count) {
        let j = rc.iter().position(|k| k == key).ok_or_else(|| {
            Error::Solver(format!("oracle pair (m = {}, rank {}) has no coarse-grid partner", key.0, key.1))
        })?;
        extrapolated.push((4.0 * fine.eigenvalues[i] - coarse.eigenvalues[j]) / 3.0);
    }
    extrapolated.sort_by(f64::total_cmp);
    Ok(OracleStudy { coarse, fine, extrapolated })
}

/// Angular frequency carrying the largest share of `Σ_rings |û_m|²`.
fn dominant_frequency(u: &[f64], layout: &[(usize, Option<usize>)], nt: usize, ht: f64) -> u32 {
    let mut power = vec![0.0; nt / 2 + 1];
    let mut ring = vec![0.0; nt];
    let mut pole_power = 0.0;
    let mut idx = 0;
    while idx < u.len() {
        match layout[idx].1 {
            None => {
                pole_power += u[idx] * u[idx];
                idx += 1;
            }
            Some(_) => {
                ring.copy_from_slice(&u[idx..idx + nt]);
                for (m, p) in power.iter_mut().enumerate() {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (j, v) in ring.iter().enumerate() {
                        let a = m as f64 * j as f64 * ht;
                        re += v * a.cos();
                        im += v * a.sin();
                    }
                    *p += re * re + im * im;
                }
                idx += nt;
            }
        }
    }
    power[0] += pole_power * nt as f64 * nt as f64;
    power
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(m, _)| m as u32)
        .unwrap_or(0)
}

/// `det(a, b) = Π λ_a / Π λ_b`, the convention of the zeta pipeline
/// (`exp(−ζ'(0))` with `ζ(s) = Σ λ_a^{-s} − Σ λ_b^{-s}`). Exact rational
/// arithmetic on the binary values for lists shorter than 20.
pub fn finite_matrix_relative_det(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!("spectra of unequal length {} and {}", a.len(), b.len())));
    }
    if let Some(&x) = a.iter().chain(b).find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidArgument(format!("non-positive or non-finite eigenvalue {x}")));
    }
    if a.len() < 20 {
        let prod = |v: &[f64]| {
            v.iter().fold(BigRational::one(), |acc, &x| acc * BigRational::from_float(x).expect("finite"))
        };
        let ratio = prod(a) / prod(b);
        return ratio_to_f64(&ratio);
    }
    let mut sa = crate::spectral::Compensated::default();
    for (&x, &y) in a.iter().zip(b) {
        sa.add(x.ln());
        sa.add(-y.ln());
    }
    Ok(sa.value().exp())
}

fn ratio_to_f64(r: &BigRational) -> Result<f64> {
    // scale into range first so huge numerators and denominators stay exact
    let bits = |x: &BigInt| x.bits() as i64;
    let shift = bits(r.numer()) - bits(r.denom());
    let scaled = if shift > 0 {
        r / BigRational::from_integer(BigInt::one() << (shift as usize))
    } else {
        r * BigRational::from_integer(BigInt::one() << ((-shift) as usize))
    };
    let m = scaled.to_f64().ok_or_else(|| Error::Solver("rational determinant not representable".into()))?;
    Ok(m * 2f64.powi(shift as i32))
}

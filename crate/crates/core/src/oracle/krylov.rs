//! Shift-invert block Krylov eigensolver for the banded pencil `K u = λ M u`
//! with diagonal `M`. Full reorthogonalization; Rayleigh–Ritz on the whole
//! basis, so repeated eigenvalues (the ±m pairs) are picked up by the block.

use super::banded::{BandCholesky, SymBanded};
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    /// Shift σ < 0 below the spectrum; `K - σM` must be positive definite.
    pub shift: f64,
    pub block: usize,
    pub max_basis: usize,
    /// Contract: `‖A x − λ x‖ ≤ tol·λ` for the symmetrized `A = M^{-1/2} K M^{-1/2}`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions { shift: -0.01, block: 4, max_basis: 720, tol: 1e-8, seed: 0x5eed }
    }
}

pub(crate) struct RitzPair {
    pub lambda: f64,
    pub residual: f64,
    /// Pencil eigenvector `u = M^{-1/2} x`, `M`-normalized.
    pub vector: Vec<f64>,
}

struct ShiftInvert<'a> {
    k: &'a SymBanded,
    fact: BandCholesky,
    root: Vec<f64>,
}

impl ShiftInvert<'_> {
    /// `y = M^{1/2} (K − σM)^{-1} M^{1/2} x`.
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = x.iter().zip(&self.root).map(|(a, r)| a * r).collect();
        self.fact.solve(&mut y);
        y.iter_mut().zip(&self.root).for_each(|(a, r)| *a *= r);
        y
    }

    /// `A x` with `A = M^{-1/2} K M^{-1/2}`.
    fn symmetrized(&self, x: &[f64]) -> Vec<f64> {
        let u: Vec<f64> = x.iter().zip(&self.root).map(|(a, r)| a / r).collect();
        let mut y = vec![0.0; u.len()];
        self.k.mul(&u, &mut y);
        y.iter_mut().zip(&self.root).for_each(|(a, r)| *a /= r);
        y
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(b, a)| *b += alpha * a);
}

/// Orthogonalizes `v` against `basis` (two passes) and normalizes it.
/// Returns `None` when `v` lies numerically in the span.
fn orthonormalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n0 = dot(&v, &v).sqrt();
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, &v);
            axpy(-c, q, &mut v);
        }
    }
    let n1 = dot(&v, &v).sqrt();
    if !(n1 > 1e-10 * n0) {
        return None;
    }
    v.iter_mut().for_each(|a| *a /= n1);
    Some(v)
}

/// The `count` smallest eigenpairs of `K u = λ M u`.
pub(crate) fn lowest_pairs(k: &SymBanded, mass: &[f64], count: usize, opts: &KrylovOptions) -> Result<Vec<RitzPair>> {
    let n = k.dim();
    if mass.len() != n || count == 0 || count > n {
        return Err(Error::InvalidArgument(format!("Krylov solve: dim {n}, mass {}, count {count}", mass.len())));
    }
    if !(opts.shift < 0.0) || opts.block == 0 {
        return Err(Error::InvalidArgument("Krylov solve needs a negative shift and a positive block size".into()));
    }
    let mut shifted = k.clone();
    for (i, &m) in mass.iter().enumerate() {
        shifted.add(i, i, -opts.shift * m);
    }
    let op = ShiftInvert { k, fact: shifted.cholesky()?, root: mass.iter().map(|m| m.sqrt()).collect() };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random_vec = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };

    let max_basis = opts.max_basis.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut images: Vec<Vec<f64>> = Vec::new();
    let mut block: Vec<Vec<f64>> = Vec::new();
    while block.len() < opts.block {
        if let Some(v) = orthonormalize(random_vec(&mut rng), &block) {
            block.push(v);
        }
    }
    let mut next_check = (2 * count).max(opts.block);
    let mut last_worst = f64::INFINITY;
    loop {
        for v in block.drain(..) {
            images.push(op.apply(&v));
            basis.push(v);
        }
        let dim = basis.len();
        if dim >= next_check || dim >= max_basis {
            next_check = dim + (dim / 4).max(opts.block);
            let t = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i])));
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            if dim >= count {
                let mut pairs = Vec::with_capacity(count);
                let mut worst: f64 = 0.0;
                for &c in order.iter().take(count) {
                    let theta = eig.eigenvalues[c];
                    let mut x = vec![0.0; n];
                    for (j, q) in basis.iter().enumerate() {
                        axpy(eig.eigenvectors[(j, c)], q, &mut x);
                    }
                    let norm = dot(&x, &x).sqrt();
                    x.iter_mut().for_each(|a| *a /= norm);
                    let lambda = opts.shift + 1.0 / theta;
                    let ax = op.symmetrized(&x);
                    let r: f64 = ax.iter().zip(&x).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
                    let rel = r / lambda.abs().max(f64::MIN_POSITIVE);
                    worst = worst.max(rel);
                    let vector = x.iter().zip(&op.root).map(|(a, r)| a / r).collect();
                    pairs.push(RitzPair { lambda, residual: rel, vector });
                }
                last_worst = worst;
                if worst <= opts.tol {
                    pairs.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
                    return Ok(pairs);
                }
            }
        }
        if dim >= max_basis {
            return Err(Error::Solver(format!(
                "shift-invert Krylov: {count} pairs not converged with {dim} basis vectors (worst relative residual {last_worst:e})"
            )));
        }
        let last = &images[dim - opts.block.min(dim)..];
        for w in last.iter() {
            let v = orthonormalize(w.clone(), &basis)
                .or_else(|| orthonormalize(random_vec(&mut rng), &basis))
                .ok_or_else(|| Error::Solver("Krylov basis exhausted".into()))?;
            let v = match orthonormalize(v, &block) {
                Some(v) => v,
                None => continue,
            };
            block.push(v);
        }
        if block.is_empty() {
            return Err(Error::Solver("Krylov block collapsed".into()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_difference_with_mass() {
        // K = tridiag(-1, 2, -1), M = I: λ_k = 2 - 2cos(kπ/(n+1)).
        let n = 300;
        let mut k = SymBanded::zeros(n, 1);
        for i in 0..n {
            k.add(i, i, 2.0);
            if i > 0 {
                k.add(i, i - 1, -1.0);
            }
        }
        let mass = vec![1.0; n];
        let opts = KrylovOptions { shift: -1e-3, ..Default::default() };
        let pairs = lowest_pairs(&k, &mass, 6, &opts).unwrap();
        for (j, p) in pairs.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((j + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!(((p.lambda - exact) / exact).abs() < 1e-10, "{} vs {exact}", p.lambda);
            assert!(p.residual <= 1e-8);
        }
    }
}

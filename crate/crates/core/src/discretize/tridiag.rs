//! Symmetric tridiagonal eigenvalues by Sturm-count bisection and
//! eigenvectors by twisted factorization.
//!
//! The matrix is stored together with a positive scaling vector `z` and the
//! row excess `g = (T z) / z`. Pivots of `T - x` are then formed as
//! `q_i = g_i - x + p_i + b_i r_{i-1}/q_{i-1}` with `p_i = |e_i| z_{i+1}/z_i`,
//! `b_i = |e_{i-1}| z_{i-1}/z_i` and `r = q - p`. For Laplacian-like matrices
//! (`g ≥ 0`) this avoids the cancellation of the textbook recurrence, so
//! small eigenvalues come out with relative rather than absolute accuracy.

const LANES: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiag {
    d: Vec<f64>,
    e: Vec<f64>,
    g: Vec<f64>,
    p: Vec<f64>,
    b: Vec<f64>,
    pivmin: f64,
}

impl SymTridiag {
    /// Plain representation (`z = 1`). Panics on shape mismatch.
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Self {
        let n = d.len();
        assert!(n > 0 && e.len() + 1 == n, "tridiagonal shape mismatch");
        let z = vec![1.0; n];
        let g = (0..n)
            .map(|i| {
                let l = if i > 0 { e[i - 1].abs() } else { 0.0 };
                let r = if i + 1 < n { e[i].abs() } else { 0.0 };
                d[i] - l - r
            })
            .collect();
        Self::with_scaling(d, e, &z, g)
    }

    /// Representation with scaling vector `z > 0` and row excess `g = (T z)/z`
    /// supplied directly (computing it from `d` would reintroduce cancellation).
    pub fn with_scaling(d: Vec<f64>, e: Vec<f64>, z: &[f64], g: Vec<f64>) -> Self {
        let n = d.len();
        assert!(n > 0 && e.len() + 1 == n && z.len() == n && g.len() == n, "tridiagonal shape mismatch");
        let p = (0..n).map(|i| if i + 1 < n { e[i].abs() * z[i + 1] / z[i] } else { 0.0 }).collect();
        let b = (0..n).map(|i| if i > 0 { e[i - 1].abs() * z[i - 1] / z[i] } else { 0.0 }).collect();
        let emax = e.iter().map(|x| x * x).fold(1.0, f64::max);
        Self { d, e, g, p, b, pivmin: f64::MIN_POSITIVE * emax }
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.d
    }

    pub fn off_diagonal(&self) -> &[f64] {
        &self.e
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    #[inline]
    fn guard(&self, q: f64) -> f64 {
        if q.abs() < self.pivmin {
            -self.pivmin
        } else {
            q
        }
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut t = 0.0;
        let mut c = 0;
        for i in 0..self.d.len() {
            let q = self.guard(self.g[i] - x + self.p[i] + self.b[i] * t);
            c += (q < 0.0) as usize;
            t = (q - self.p[i]) / q;
        }
        c
    }

    fn count_lanes(&self, x: &[f64; LANES]) -> [usize; LANES] {
        let pivmin = self.pivmin;
        let mut t = [0.0f64; LANES];
        let mut c = [0u32; LANES];
        for ((&g, &p), &b) in self.g.iter().zip(&self.p).zip(&self.b) {
            for l in 0..LANES {
                let q = g - x[l] + p + b * t[l];
                let q = if q.abs() < pivmin { -pivmin } else { q };
                c[l] += (q < 0.0) as u32;
                t[l] = (q - p) / q;
            }
        }
        c.map(|v| v as usize)
    }

    /// All eigenvalues below `cut`, ascending, each bisected to relative
    /// width `rel_tol`.
    pub fn eigenvalues_below(&self, cut: f64, rel_tol: f64) -> Vec<f64> {
        let k = self.count_below(cut);
        if k == 0 {
            return Vec::new();
        }
        let (glo, ghi) = self.gershgorin();
        let abs_tol = 2.0 * f64::MIN_POSITIVE.sqrt();
        let mut lower = vec![glo.min(0.0) - abs_tol; k];
        let mut upper = vec![cut.min(ghi + abs_tol); k];
        let done = |lo: f64, hi: f64| hi - lo <= abs_tol.max(rel_tol * lo.abs().max(hi.abs()));

        let mut next = 0usize;
        let mut lane_idx = [usize::MAX; LANES];
        loop {
            let mut active = 0;
            for slot in lane_idx.iter_mut() {
                if *slot != usize::MAX && done(lower[*slot], upper[*slot]) {
                    *slot = usize::MAX;
                }
                while *slot == usize::MAX && next < k {
                    if !done(lower[next], upper[next]) {
                        *slot = next;
                    }
                    next += 1;
                }
                if *slot != usize::MAX {
                    active += 1;
                }
            }
            if active == 0 {
                break;
            }
            let mut xs = [cut; LANES];
            for l in 0..LANES {
                if let Some(&j) = lane_idx.get(l).filter(|&&j| j != usize::MAX) {
                    xs[l] = 0.5 * (lower[j] + upper[j]);
                }
            }
            let counts = self.count_lanes(&xs);
            for l in 0..LANES {
                if lane_idx[l] == usize::MAX {
                    continue;
                }
                let (x, c) = (xs[l], counts[l]);
                // eigenvalues with index < c lie below x, the rest at or above
                let mut i = c;
                while i < k && lower[i] < x {
                    lower[i] = x;
                    i += 1;
                }
                let mut i = c.min(k);
                while i > 0 && upper[i - 1] > x {
                    upper[i - 1] = x;
                    i -= 1;
                }
            }
        }
        lower.iter().zip(&upper).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Unit eigenvector for an accurate eigenvalue approximation `lambda`,
    /// from the twisted factorization of `T - lambda` with the smallest
    /// twist element. `against` holds unit vectors of numerically coincident
    /// eigenvalues to orthogonalize against.
    pub fn eigenvector(&self, lambda: f64, against: &[&[f64]]) -> Vec<f64> {
        let n = self.d.len();
        let mut fwd = vec![0.0; n];
        let mut ft = vec![0.0; n];
        let mut t = 0.0;
        for i in 0..n {
            let q = self.guard(self.g[i] - lambda + self.p[i] + self.b[i] * t);
            fwd[i] = q;
            t = (q - self.p[i]) / q;
            ft[i] = t;
        }
        let mut bwd = vec![0.0; n];
        let mut bt = vec![0.0; n];
        let mut t = 0.0;
        for i in (0..n).rev() {
            let q = self.guard(self.g[i] - lambda + self.b[i] + self.p[i] * t);
            bwd[i] = q;
            t = (q - self.b[i]) / q;
            bt[i] = t;
        }
        let mut k = 0;
        let mut best = f64::INFINITY;
        for i in 0..n {
            let from_left = if i > 0 { self.b[i] * ft[i - 1] } else { 0.0 };
            let from_right = if i + 1 < n { self.p[i] * bt[i + 1] } else { 0.0 };
            let gamma = (self.g[i] - lambda + from_left + from_right).abs();
            if gamma < best {
                best = gamma;
                k = i;
            }
        }
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for i in (0..k).rev() {
            v[i] = -self.e[i] * v[i + 1] / fwd[i];
        }
        for i in k + 1..n {
            v[i] = -self.e[i - 1] * v[i - 1] / bwd[i];
        }
        for u in against {
            let proj: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            for (vi, ui) in v.iter_mut().zip(u.iter()) {
                *vi -= proj * ui;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector, SymmetricEigen};
    use proptest::prelude::*;

    fn dense(t: &SymTridiag) -> DMatrix<f64> {
        let n = t.dim();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                t.d[i]
            } else if i + 1 == j {
                t.e[i]
            } else if j + 1 == i {
                t.e[j]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn second_difference_spectrum() {
        let n = 200;
        let t = SymTridiag::new(vec![2.0; n], vec![-1.0; n - 1]);
        let ev = t.eigenvalues_below(5.0, 1e-14);
        assert_eq!(ev.len(), n);
        for (k, &l) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((l - exact).abs() < 1e-13, "{k}: {l} vs {exact}");
        }
        let part = t.eigenvalues_below(0.01, 1e-14);
        assert_eq!(part.len(), t.count_below(0.01));
        assert!(part.iter().all(|&x| x < 0.01));
    }

    #[test]
    fn graded_matrix_keeps_relative_accuracy() {
        // D^{-1/2} A D^{-1/2} for a second difference with masses spanning
        // twelve orders of magnitude; the smallest eigenvalue is compared
        // with the dense solver on the well-conditioned pencil.
        let n = 60;
        let mass: Vec<f64> = (0..n).map(|i| 10f64.powf(-12.0 * i as f64 / (n - 1) as f64)).collect();
        let z: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();
        let mut g = vec![0.0; n];
        g[0] = 1.0 / mass[0];
        g[n - 1] = 1.0 / mass[n - 1];
        let d = (0..n).map(|i| 2.0 / mass[i]).collect();
        let e = (0..n - 1).map(|i| -1.0 / (z[i] * z[i + 1])).collect();
        let t = SymTridiag::with_scaling(d, e, &z, g);
        // reference: 1/λ_min is the top eigenvalue of L⁻¹ M L⁻ᵀ with A = L Lᵀ,
        // which the dense solver gets to full relative accuracy
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 } else if i.abs_diff(j) == 1 { -1.0 } else { 0.0 });
        let l = a.cholesky().unwrap().l();
        let linv = l.try_inverse().unwrap();
        let c = &linv * DMatrix::from_diagonal(&DVector::from_vec(mass.clone())) * linv.transpose();
        let top = SymmetricEigen::new(c).eigenvalues.iter().cloned().fold(0.0, f64::max);
        let reference = 1.0 / top;
        let ev = t.eigenvalues_below(2.0 * reference, 1e-15);
        assert!(!ev.is_empty());
        assert!((ev[0] - reference).abs() < 1e-12 * reference, "{} vs {}", ev[0], reference);
        let v = t.eigenvector(ev[0], &[]);
        // residual of the pencil in the excess form, relative to λ
        let u: Vec<f64> = v.iter().zip(&z).map(|(a, b)| a / b).collect();
        let mut r2 = 0.0;
        let mut n2 = 0.0;
        for i in 0..n {
            let left = if i > 0 { u[i] - u[i - 1] } else { u[i] };
            let right = if i + 1 < n { u[i] - u[i + 1] } else { u[i] };
            let res = left + right - ev[0] * mass[i] * u[i];
            r2 += res * res / mass[i];
            n2 += u[i] * u[i] * mass[i];
        }
        let rel = r2.sqrt() / (ev[0] * n2.sqrt());
        assert!(rel < 1e-9, "{rel}");
    }

    #[test]
    fn twisted_vectors_have_small_residual() {
        let n = 300;
        let d: Vec<f64> = (0..n).map(|i| 2.0 + (i as f64 * 0.37).sin()).collect();
        let e: Vec<f64> = (0..n - 1).map(|i| -1.0 + 0.3 * (i as f64 * 0.11).cos()).collect();
        let t = SymTridiag::new(d, e);
        let ev = t.eigenvalues_below(10.0, 1e-15);
        let a = dense(&t);
        let mut vecs: Vec<Vec<f64>> = Vec::new();
        for &l in ev.iter().take(60) {
            let v = t.eigenvector(l, &[]);
            let r = &a * DVector::from_vec(v.clone()) - DVector::from_vec(v.clone()) * l;
            assert!(r.norm() < 1e-12, "residual {}", r.norm());
            vecs.push(v);
        }
        for i in 0..vecs.len() {
            for j in 0..i {
                let p: f64 = vecs[i].iter().zip(&vecs[j]).map(|(a, b)| a * b).sum();
                assert!(p.abs() < 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn matches_dense_solver(d in prop::collection::vec(-5.0f64..5.0, 2..40), seed in 0u64..1000) {
            let n = d.len();
            let e: Vec<f64> = (0..n - 1).map(|i| ((i as u64 * 31 + seed) % 17) as f64 / 4.0 - 2.0).collect();
            let t = SymTridiag::new(d, e);
            let mut reference: Vec<f64> = SymmetricEigen::new(dense(&t)).eigenvalues.iter().cloned().collect();
            reference.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let ev = t.eigenvalues_below(100.0, 1e-15);
            prop_assert_eq!(ev.len(), n);
            for (a, b) in ev.iter().zip(&reference) {
                prop_assert!((a - b).abs() < 1e-11 * (1.0 + b.abs()), "{} vs {}", a, b);
            }
        }
    }
}

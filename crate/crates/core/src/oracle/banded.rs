use crate::{Error, Result};

/// Symmetric banded matrix in lower storage: `band[i][k] = A(i, i-k)`.
#[derive(Clone, Debug)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        SymBanded { n, bw, band: vec![0.0; n * (bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, k: usize) -> usize {
        i * (self.bw + 1) + k
    }

    /// Adds `v` to entry `(i, j)` (and by symmetry `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = i - j;
        assert!(k <= self.bw, "entry ({i}, {j}) outside bandwidth {}", self.bw);
        let p = self.idx(i, k);
        self.band[p] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.band[self.idx(i, i - j)]
        }
    }

    /// `y = A x`.
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let d = self.band[self.idx(i, 0)];
            y[i] += d * x[i];
            for k in 1..=self.bw.min(i) {
                let a = self.band[self.idx(i, k)];
                if a != 0.0 {
                    y[i] += a * x[i - k];
                    y[i - k] += a * x[i];
                }
            }
        }
    }

    /// Cholesky factor `A = L Lᵀ`, same band layout.
    pub fn cholesky(&self) -> Result<BandCholesky> {
        let (n, bw) = (self.n, self.bw);
        let mut l = self.band.clone();
        let w = bw + 1;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                // L(i,j) = (A(i,j) - Σ_{k<j} L(i,k) L(j,k)) / L(j,j)
                let k0 = j0.max(j.saturating_sub(bw));
                let mut sum = l[i * w + (i - j)];
                for k in k0..j {
                    sum -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if j == i {
                    if !(sum > 0.0) {
                        return Err(Error::Solver(format!("banded Cholesky: non-positive pivot {sum:e} at row {i}")));
                    }
                    l[i * w] = sum.sqrt();
                } else {
                    l[i * w + (i - j)] = sum / l[j * w];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }
}

#[derive(Clone, Debug)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    /// Solves `L Lᵀ x = b` in place.
    pub fn solve(&self, x: &mut [f64]) {
        let w = self.bw + 1;
        for i in 0..self.n {
            let mut s = x[i];
            for k in 1..=self.bw.min(i) {
                s -= self.l[i * w + k] * x[i - k];
            }
            x[i] = s / self.l[i * w];
        }
        for i in (0..self.n).rev() {
            x[i] /= self.l[i * w];
            let xi = x[i];
            for k in 1..=self.bw.min(i) {
                x[i - k] -= self.l[i * w + k] * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn sample(n: usize, bw: usize) -> SymBanded {
        let mut a = SymBanded::zeros(n, bw);
        for i in 0..n {
            a.add(i, i, 4.0 + (i % 3) as f64);
            for k in 1..=bw.min(i) {
                a.add(i, i - k, -1.0 / (k as f64 + 1.0) + 0.1 * ((i * 7 + k) % 5) as f64 / 5.0);
            }
        }
        a
    }

    #[test]
    fn solve_matches_dense() {
        let (n, bw) = (37, 5);
        let a = sample(n, bw);
        let dense = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = b.clone();
        a.cholesky().unwrap().solve(&mut x);
        let r = &dense * DVector::from_vec(x) - DVector::from_vec(b);
        assert!(r.norm() < 1e-12, "residual {}", r.norm());
    }

    #[test]
    fn mul_matches_dense() {
        let (n, bw) = (20, 3);
        let a = sample(n, bw);
        let dense = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
        let x: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let mut y = vec![0.0; n];
        a.mul(&x, &mut y);
        let yd = &dense * DVector::from_vec(x);
        for i in 0..n {
            assert!((y[i] - yd[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut a = SymBanded::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(a.cholesky().is_err());
    }
}

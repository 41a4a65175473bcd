//! Small dense-vector kernels and the linear solvers behind shift-invert:
//! conjugate gradients, banded Cholesky and the sine-transform solver for
//! Laplacians on full tensor-product boxes.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

/// Outcome of a conjugate-gradient solve.
#[derive(Clone, Copy, Debug)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients for SPD `op`. `x` holds the initial
/// guess on entry and the solution on exit. `precond` applies an SPD
/// approximation of the inverse.
pub fn pcg<A, P>(
    mut op: A,
    mut precond: P,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgStats>
where
    A: FnMut(&[f64], &mut [f64]),
    P: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    op(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = norm(&r) / bnorm;
    for it in 0..max_iter {
        if res <= rel_tol {
            return Ok(CgStats {
                iterations: it,
                relative_residual: res,
            });
        }
        op(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::CgStalled {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pq;
        axpy(alpha, &p, x);
        axpy(-alpha, &q, &mut r);
        res = norm(&r) / bnorm;
        precond(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    if res <= rel_tol {
        Ok(CgStats {
            iterations: max_iter,
            relative_residual: res,
        })
    } else {
        Err(Error::CgStalled {
            iterations: max_iter,
            residual: res,
        })
    }
}

/// Cholesky factor of a symmetric banded matrix, lower band stored row-wise:
/// `band[i * (w + 1) + (w - (i - j))] = L[i][j]` for `i - w <= j <= i`.
#[derive(Clone, Debug)]
pub struct BandCholesky {
    n: usize,
    w: usize,
    band: Vec<f64>,
}

impl BandCholesky {
    /// Factor the matrix whose lower-band entries are produced by `entry(i, j)`
    /// for `j` in `i-w..=i`. Returns `None` if the matrix is not positive
    /// definite.
    pub fn factor<F: Fn(usize, usize) -> f64>(n: usize, w: usize, entry: F) -> Option<Self> {
        let stride = w + 1;
        let mut band = vec![0.0; n * stride];
        for i in 0..n {
            let j0 = i.saturating_sub(w);
            for j in j0..=i {
                band[i * stride + w - (i - j)] = entry(i, j);
            }
        }
        for i in 0..n {
            let i0 = i.saturating_sub(w);
            for j in i0..=i {
                let j0 = j.saturating_sub(w).max(i0);
                let mut s = band[i * stride + w - (i - j)];
                let ri = i * stride + w - i;
                let rj = j * stride + w - j;
                for k in j0..j {
                    s -= band[ri + k] * band[rj + k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return None;
                    }
                    band[i * stride + w] = s.sqrt();
                } else {
                    band[i * stride + w - (i - j)] = s / band[j * stride + w];
                }
            }
        }
        Some(BandCholesky { n, w, band })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, w, stride) = (self.n, self.w, self.w + 1);
        for i in 0..n {
            let j0 = i.saturating_sub(w);
            let row = i * stride + w - i;
            let mut s = x[i];
            for j in j0..i {
                s -= self.band[row + j] * x[j];
            }
            x[i] = s / self.band[i * stride + w];
        }
        for i in (0..n).rev() {
            x[i] /= self.band[i * stride + w];
            let xi = x[i];
            let j0 = i.saturating_sub(w);
            let row = i * stride + w - i;
            for j in j0..i {
                x[j] -= self.band[row + j] * xi;
            }
        }
    }
}

/// Exact solver for `(scale * L + shift) x = b` where `L` is the 2N+1-point
/// Dirichlet Laplacian on a full tensor grid, diagonalized by sine transforms
/// along every axis.
pub struct BoxSineSolver {
    counts: Vec<usize>,
    strides: Vec<usize>,
    /// Per-axis eigenvalues of `scale * tridiag(-1, 2, -1) / h^2`.
    axis_eigs: Vec<Vec<f64>>,
    shift: f64,
    ffts: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for BoxSineSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoxSineSolver")
            .field("counts", &self.counts)
            .field("shift", &self.shift)
            .finish()
    }
}

impl BoxSineSolver {
    pub fn new(counts: &[usize], h: f64, scale: f64, shift: f64) -> Self {
        let mut planner = FftPlanner::new();
        let mut strides = vec![1; counts.len()];
        for k in (0..counts.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * counts[k + 1];
        }
        let axis_eigs = counts
            .iter()
            .map(|&n| tridiagonal_toeplitz_eigenvalues(n, h, scale))
            .collect();
        let ffts = counts
            .iter()
            .map(|&n| planner.plan_fft_forward(2 * (n + 1)))
            .collect();
        BoxSineSolver {
            counts: counts.to_vec(),
            strides,
            axis_eigs,
            shift,
            ffts,
        }
    }

    /// Smallest eigenvalue of the shifted operator.
    pub fn min_eigenvalue(&self) -> f64 {
        self.axis_eigs.iter().map(|e| e[0]).sum::<f64>() + self.shift
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        for axis in 0..self.counts.len() {
            self.transform_axis(x, axis);
        }
        let dim = self.counts.len();
        let mut idx = vec![0usize; dim];
        for v in x.iter_mut() {
            let lam: f64 = (0..dim).map(|k| self.axis_eigs[k][idx[k]]).sum::<f64>() + self.shift;
            *v /= lam;
            for k in (0..dim).rev() {
                idx[k] += 1;
                if idx[k] < self.counts[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        for axis in 0..self.counts.len() {
            self.transform_axis(x, axis);
        }
        let norm: f64 = self.counts.iter().map(|&n| 2.0 / (n + 1) as f64).product();
        scale(norm, x);
    }

    /// Unnormalized DST-I along one axis: `X_k = sum_j x_j sin(pi (j+1)(k+1) / (n+1))`.
    fn transform_axis(&self, x: &mut [f64], axis: usize) {
        let n = self.counts[axis];
        let stride = self.strides[axis];
        let fft = &self.ffts[axis];
        let m = 2 * (n + 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let total = x.len();
        let block = stride * n;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                buf[0] = Complex64::new(0.0, 0.0);
                buf[n + 1] = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    let v = x[base + j * stride];
                    buf[j + 1] = Complex64::new(v, 0.0);
                    buf[m - 1 - j] = Complex64::new(-v, 0.0);
                }
                fft.process_with_scratch(&mut buf, &mut scratch);
                for k in 0..n {
                    x[base + k * stride] = -buf[k + 1].im / 2.0;
                }
            }
        }
    }
}

/// Eigenvalues of `scale * tridiag(-1, 2, -1) / h^2` of size `n`, ascending.
pub fn tridiagonal_toeplitz_eigenvalues(n: usize, h: f64, scale: f64) -> Vec<f64> {
    (1..=n)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / (2.0 * (n + 1) as f64)).sin();
            scale * 4.0 * s * s / (h * h)
        })
        .collect()
}

/// Matching eigenvector (unnormalized) for index `k` (0-based).
pub fn tridiagonal_toeplitz_vector(n: usize, k: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            (std::f64::consts::PI * ((j + 1) * (k + 1)) as f64 / (n + 1) as f64).sin()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, h: f64) -> impl Fn(&[f64], &mut [f64]) {
        move |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut v = 2.0 * x[i];
                if i > 0 {
                    v -= x[i - 1];
                }
                if i + 1 < n {
                    v -= x[i + 1];
                }
                y[i] = v / (h * h);
            }
        }
    }

    #[test]
    fn cg_solves_tridiagonal() {
        let n = 50;
        let h = 1.0 / 51.0;
        let op = laplacian_1d(n, h);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut x = vec![0.0; n];
        let stats = pcg(&op, |r: &[f64], z: &mut [f64]| z.copy_from_slice(r), &b, &mut x, 1e-12, 500).unwrap();
        let mut ax = vec![0.0; n];
        op(&x, &mut ax);
        let err = ax.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8 * norm(&b), "{err} after {}", stats.iterations);
    }

    #[test]
    fn band_cholesky_matches_cg() {
        let n = 40;
        let h = 0.1;
        let entry = |i: usize, j: usize| {
            if i == j {
                2.0 / (h * h) + 1.0
            } else if i - j == 1 {
                -1.0 / (h * h)
            } else {
                0.0
            }
        };
        let chol = BandCholesky::factor(n, 3, entry).unwrap();
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let mut x = b.clone();
        chol.solve_in_place(&mut x);
        let op = laplacian_1d(n, h);
        let mut ax = vec![0.0; n];
        op(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] + x[i] - b[i]).abs() < 1e-9);
        }
        assert!(BandCholesky::factor(3, 1, |i, j| if i == j { -1.0 } else { 0.0 }).is_none());
    }

    #[test]
    fn sine_solver_inverts_box_laplacian() {
        let counts = [5usize, 7, 4];
        let h = 0.2;
        let solver = BoxSineSolver::new(&counts, h, 1.5, 0.3);
        let n: usize = counts.iter().product();
        let b: Vec<f64> = (0..n).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let mut x = b.clone();
        solver.solve_in_place(&mut x);
        // Apply 1.5 * L + 0.3 directly.
        let strides = [28usize, 4, 1];
        for p in 0..n {
            let idx = [p / 28, (p / 4) % 7, p % 4];
            let mut v = 0.0;
            for k in 0..3 {
                v += 2.0 * x[p];
                if idx[k] > 0 {
                    v -= x[p - strides[k]];
                }
                if idx[k] + 1 < counts[k] {
                    v -= x[p + strides[k]];
                }
            }
            let y = 1.5 * v / (h * h) + 0.3 * x[p];
            assert!((y - b[p]).abs() < 1e-9, "{y} vs {}", b[p]);
        }
    }
}

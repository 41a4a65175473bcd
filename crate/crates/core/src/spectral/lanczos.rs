//! Block Lanczos with full reorthogonalization for the largest eigenvalues of
//! a symmetric operator given as a closure.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::{axpy, dot, norm, scale};
use crate::error::{Error, Result};

/// Keep the Krylov basis below this many stored doubles.
const BASIS_BUDGET: usize = 300_000_000;

#[derive(Clone, Copy, Debug)]
pub(crate) struct LanczosConfig {
    pub block: usize,
    pub max_basis: usize,
    pub seed: u64,
    /// Ritz pairs count as converged when their residual estimate is below
    /// `tol * |theta|`.
    pub tol: f64,
}

impl LanczosConfig {
    pub fn for_count(n: usize, want: usize, seed: u64, tol: f64) -> Self {
        let max_basis = (50 * want + 1000).min(n).min((BASIS_BUDGET / n).max(want + 2));
        LanczosConfig {
            block: want.clamp(1, 8),
            max_basis,
            seed,
            tol,
        }
    }
}

pub(crate) struct Ritz {
    /// Descending.
    #[allow(dead_code)]
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Number of operator applications.
    pub applications: usize,
}

/// Verdict of the caller on a batch of Ritz pairs whose estimates converged.
pub(crate) enum Check {
    Accept,
    /// Tighten the internal tolerance and keep iterating.
    Refine,
}

/// Largest `want` eigenpairs of the symmetric operator `op` on `R^n`.
///
/// `check` sees candidate Ritz pairs (values descending) once their residual
/// estimates pass; it can ask for more accuracy.
pub(crate) fn largest<F, C>(
    n: usize,
    want: usize,
    cfg: LanczosConfig,
    mut op: F,
    mut check: C,
) -> Result<Ritz>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    C: FnMut(&[f64], &[Vec<f64>]) -> Result<Check>,
{
    if want == 0 || want > n {
        return Err(Error::InvalidParameter(format!(
            "asked for {want} eigenpairs of an operator of size {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tol = cfg.tol;
    let max_basis = cfg.max_basis.clamp(want.min(n), n);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    // T = V^T A V, grown as the basis grows.
    let mut t = DMatrix::<f64>::zeros(0, 0);
    let mut applications = 0;

    let b0 = cfg.block.min(n).max(1);
    let mut block: Vec<Vec<f64>> = Vec::new();
    for _ in 0..b0 {
        let v = random_orthonormal(&mut rng, n, &basis, &block);
        block.push(v);
    }
    let mut last_checked = 0usize;
    let mut best: Option<(Vec<f64>, Vec<Vec<f64>>)> = None;

    loop {
        // Add current block to the basis and expand T.
        let start = basis.len();
        let bj = block.len();
        basis.append(&mut block);
        let k = basis.len();
        t = t.resize(k, k, 0.0);

        // W = A Q_j, fully orthogonalized against the basis.
        let mut w_block = Vec::with_capacity(bj);
        for c in start..k {
            let mut w = vec![0.0; n];
            op(&basis[c], &mut w)?;
            applications += 1;
            let wnorm = norm(&w);
            if !wnorm.is_finite() {
                return Err(Error::NonFinite { step: applications, time: 0.0 });
            }
            let mut coef = vec![0.0; k];
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let a = dot(v, &w);
                    coef[i] += a;
                    axpy(-a, v, &mut w);
                }
            }
            for (i, a) in coef.into_iter().enumerate() {
                t[(i, c)] = a;
                t[(c, i)] = a;
            }
            w_block.push((w, wnorm));
        }

        // Block QR of W: next block and coupling R.
        let room = n - k;
        let next_b = bj.min(room);
        let mut r = DMatrix::<f64>::zeros(next_b, bj);
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(next_b);
        for (c, (mut w, wnorm)) in w_block.into_iter().enumerate() {
            for _ in 0..2 {
                for (i, q) in next.iter().enumerate() {
                    let a = dot(q, &w);
                    r[(i, c)] += a;
                    axpy(-a, q, &mut w);
                }
            }
            if next.len() == next_b {
                continue;
            }
            let nw = norm(&w);
            if nw > 1e-10 * wnorm.max(f64::MIN_POSITIVE) {
                scale(1.0 / nw, &mut w);
                r[(next.len(), c)] = nw;
                next.push(w);
            } else {
                // Invariant subspace hit; restart the direction at random.
                let v = random_orthonormal(&mut rng, n, &basis, &next);
                next.push(v);
            }
        }

        let exhausted = next.is_empty();
        let capped = k + next.len() > max_basis;
        let due = exhausted || capped || k >= want && (k < 200 || k >= last_checked + k / 10 || k - last_checked >= 64);
        if due {
            last_checked = k;
            let eig = SymmetricEigen::new(t.clone());
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let take = want.min(k);
            let mut all_ok = take == want;
            let mut values = Vec::with_capacity(take);
            for &col in &order[..take] {
                let theta = eig.eigenvalues[col];
                let mut est = 0.0;
                if !exhausted {
                    for row in 0..r.nrows() {
                        let mut s = 0.0;
                        for c in 0..bj {
                            s += r[(row, c)] * eig.eigenvectors[(start + c, col)];
                        }
                        est += s * s;
                    }
                }
                if est.sqrt() > tol * theta.abs().max(f64::MIN_POSITIVE) {
                    all_ok = false;
                }
                values.push(theta);
            }
            if all_ok || exhausted || capped {
                let vectors: Vec<Vec<f64>> = order[..take]
                    .iter()
                    .map(|&col| {
                        let mut v = vec![0.0; n];
                        for (i, q) in basis.iter().enumerate() {
                            axpy(eig.eigenvectors[(i, col)], q, &mut v);
                        }
                        let nv = norm(&v);
                        scale(1.0 / nv, &mut v);
                        v
                    })
                    .collect();
                if take == want {
                    match check(&values, &vectors)? {
                        Check::Accept => {
                            return Ok(Ritz {
                                values,
                                vectors,
                                applications,
                            })
                        }
                        Check::Refine => {
                            tol *= 1e-2;
                            best = Some((values, vectors));
                        }
                    }
                }
                if exhausted || capped {
                    let partial = best.map(|b| b.0).unwrap_or_default();
                    return Err(Error::NoConvergence {
                        iterations: applications,
                        converged: 0,
                        wanted: want,
                        partial,
                    });
                }
            }
        }
        block = next;
    }
}

fn random_orthonormal(rng: &mut ChaCha8Rng, n: usize, a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for q in a.iter().chain(b) {
                let c = dot(q, &v);
                axpy(-c, q, &mut v);
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            scale(1.0 / nv, &mut v);
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator() {
        let n = 300;
        let d: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let cfg = LanczosConfig::for_count(n, 4, 7, 1e-10);
        let ritz = largest(
            n,
            4,
            cfg,
            |x, y| {
                for i in 0..n {
                    y[i] = d[i] * x[i];
                }
                Ok(())
            },
            |_, _| Ok(Check::Accept),
        )
        .unwrap();
        for (k, v) in ritz.values.iter().enumerate() {
            assert!((v - (n - k) as f64).abs() < 1e-7, "{v}");
        }
    }

    #[test]
    fn repeated_eigenvalues_with_block() {
        // Eigenvalue 10 with multiplicity 3, everything else below 5.
        let n = 60;
        let d: Vec<f64> = (0..n).map(|i| if i % 20 == 3 { 10.0 } else { (i % 5) as f64 }).collect();
        let cfg = LanczosConfig::for_count(n, 3, 1, 1e-10);
        let ritz = largest(
            n,
            3,
            cfg,
            |x, y| {
                for i in 0..n {
                    y[i] = d[i] * x[i];
                }
                Ok(())
            },
            |_, _| Ok(Check::Accept),
        )
        .unwrap();
        for v in &ritz.values {
            assert!((v - 10.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn small_operator_exhausts_space() {
        let n = 5;
        let cfg = LanczosConfig::for_count(n, 5, 3, 1e-12);
        let ritz = largest(
            n,
            5,
            cfg,
            |x, y| {
                for i in 0..n {
                    y[i] = (i * i) as f64 * x[i];
                }
                Ok(())
            },
            |_, _| Ok(Check::Accept),
        )
        .unwrap();
        assert!((ritz.values[4]).abs() < 1e-12);
        assert!((ritz.values[0] - 16.0).abs() < 1e-12);
    }
}

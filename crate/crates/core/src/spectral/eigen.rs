use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use super::lanczos::{self, Check, LanczosConfig};
use super::linalg::{
    self, dot, norm, tridiagonal_toeplitz_eigenvalues, tridiagonal_toeplitz_vector, BandCholesky,
    BoxSineSolver,
};
use super::operator::{PotentialKind, SymmetricOperator};
use crate::error::{Error, Result};
use crate::CSV_SCHEMA;

/// Automatic method choice uses the dense eigensolver up to this size.
pub const DENSE_LIMIT: usize = 400;

/// Band Cholesky is used when `n * w^2` stays below this.
const BAND_WORK_LIMIT: f64 = 4e9;
const BAND_STORAGE_LIMIT: usize = 50_000_000;

pub const DEFAULT_SEED: u64 = 0x5eed_1a9c;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Dense,
    Separable,
    Lanczos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MethodChoice {
    #[default]
    Auto,
    Dense,
    Lanczos,
}

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    pub tol: f64,
    pub seed: u64,
    pub method: MethodChoice,
}

impl EigenOptions {
    pub fn new(tol: f64) -> Self {
        EigenOptions {
            tol,
            seed: DEFAULT_SEED,
            method: MethodChoice::Auto,
        }
    }
}

/// Lowest eigenvalues of an operator, ascending, with residual norms of
/// unit-norm eigenvectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub h: f64,
    pub dim: usize,
    pub tol: f64,
    pub method: SolverMethod,
    pub potential: PotentialKind,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_SCHEMA}\nindex,eigenvalue,residual\n");
        for (i, (l, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            out.push_str(&format!("{},{:.17e},{:.6e}\n", i + 1, l, r));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Eigenvalues with their unit-norm (Euclidean) eigenvectors.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub spectrum: SpectrumResult,
    pub vectors: Vec<Vec<f64>>,
}

/// The `m` smallest eigenvalues of `a`, residuals `<= tol * max(1, |lambda|)`.
pub fn lowest_eigenvalues(a: &SymmetricOperator, m: usize, tol: f64) -> Result<SpectrumResult> {
    solve(a, m, &EigenOptions::new(tol), false).map(|p| p.spectrum)
}

pub fn lowest_eigenvalues_with(a: &SymmetricOperator, m: usize, opts: &EigenOptions) -> Result<SpectrumResult> {
    solve(a, m, opts, false).map(|p| p.spectrum)
}

pub fn lowest_eigenpairs(a: &SymmetricOperator, m: usize, opts: &EigenOptions) -> Result<Eigenpairs> {
    solve(a, m, opts, true)
}

fn solve(a: &SymmetricOperator, m: usize, opts: &EigenOptions, keep: bool) -> Result<Eigenpairs> {
    let n = a.len();
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "requested {m} eigenvalues of an operator with {n} unknowns"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {}", opts.tol)));
    }
    let method = match opts.method {
        MethodChoice::Dense => SolverMethod::Dense,
        MethodChoice::Lanczos => SolverMethod::Lanczos,
        MethodChoice::Auto if n <= DENSE_LIMIT => SolverMethod::Dense,
        MethodChoice::Auto if a.is_separable() => SolverMethod::Separable,
        MethodChoice::Auto => SolverMethod::Lanczos,
    };
    let (values, vectors, residuals, iterations) = match method {
        SolverMethod::Dense => dense(a, m),
        SolverMethod::Separable => separable(a, m, keep),
        SolverMethod::Lanczos => shift_invert(a, m, opts)?,
    };
    for (l, r) in values.iter().zip(&residuals) {
        if !(*r <= opts.tol * l.abs().max(1.0)) {
            return Err(Error::NoConvergence {
                iterations,
                converged: 0,
                wanted: m,
                partial: values.clone(),
            });
        }
    }
    Ok(Eigenpairs {
        spectrum: SpectrumResult {
            eigenvalues: values,
            residuals,
            iterations,
            h: a.h(),
            dim: a.dim(),
            tol: opts.tol,
            method,
            potential: a.potential(),
        },
        vectors: if keep { vectors } else { Vec::new() },
    })
}

type Solved = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>, usize);

fn dense(a: &SymmetricOperator, m: usize) -> Solved {
    let eig = a.to_dense().symmetric_eigen();
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut values = Vec::with_capacity(m);
    let mut vectors = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    for &k in &order[..m] {
        let v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let l = eig.eigenvalues[k];
        residuals.push(a.residual(&v, l));
        values.push(l);
        vectors.push(v);
    }
    (values, vectors, residuals, 1)
}

/// Closed-form spectrum of the potential-free Laplacian on a tensor grid:
/// eigenvalues are sums of 1D tridiagonal eigenvalues, eigenvectors are
/// products of sines. Residuals are still measured with the operator.
fn separable(a: &SymmetricOperator, m: usize, keep: bool) -> Solved {
    let counts = a.tensor_counts().expect("separable path needs a tensor grid").to_vec();
    let dim = counts.len();
    let axis: Vec<Vec<f64>> = counts
        .iter()
        .map(|&c| tridiagonal_toeplitz_eigenvalues(c, a.h(), a.scale()))
        .collect();
    let value = |idx: &[usize]| -> f64 { idx.iter().enumerate().map(|(k, &i)| axis[k][i]).sum() };

    // m smallest sums, ties broken by multi-index.
    let mut heap = BinaryHeap::new();
    let mut seen = HashSet::new();
    let first = vec![0usize; dim];
    heap.push(Reverse((Ordered(value(&first)), first.clone())));
    seen.insert(first);
    let mut picked = Vec::with_capacity(m);
    while picked.len() < m {
        let Reverse((Ordered(v), idx)) = heap.pop().expect("lattice has at least m modes");
        for k in 0..dim {
            if idx[k] + 1 < counts[k] {
                let mut nb = idx.clone();
                nb[k] += 1;
                if seen.insert(nb.clone()) {
                    heap.push(Reverse((Ordered(value(&nb)), nb)));
                }
            }
        }
        picked.push((v, idx));
    }

    let mut values = Vec::with_capacity(m);
    let mut vectors = Vec::new();
    let mut residuals = Vec::with_capacity(m);
    for (v, idx) in picked {
        let vec = sine_mode(&counts, &idx);
        residuals.push(a.residual(&vec, v));
        values.push(v);
        if keep {
            vectors.push(vec);
        }
    }
    (values, vectors, residuals, 0)
}

fn sine_mode(counts: &[usize], idx: &[usize]) -> Vec<f64> {
    let factors: Vec<Vec<f64>> = counts
        .iter()
        .zip(idx)
        .map(|(&c, &k)| {
            let mut f = tridiagonal_toeplitz_vector(c, k);
            let nf = norm(&f);
            f.iter_mut().for_each(|x| *x /= nf);
            f
        })
        .collect();
    let total: usize = counts.iter().product();
    let mut out = vec![1.0; total];
    let mut stride = total;
    for (k, f) in factors.iter().enumerate() {
        stride /= counts[k];
        for (p, o) in out.iter_mut().enumerate() {
            *o *= f[(p / stride) % counts[k]];
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
struct Ordered(f64);

impl PartialEq for Ordered {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Ordered {}

impl PartialOrd for Ordered {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ordered {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Solver for `(A - sigma) x = b` with `A - sigma` positive definite.
pub(crate) enum ShiftedInverse {
    Box(BoxSineSolver),
    Band(BandCholesky),
    Pcg {
        op: SymmetricOperator,
        sigma: f64,
        precond: Precond,
    },
}

pub(crate) enum Precond {
    Box(BoxSineSolver),
    Jacobi(Vec<f64>),
}

impl ShiftedInverse {
    /// Pick a shift below the spectrum and a solver for the shifted operator.
    pub fn new(a: &SymmetricOperator) -> Result<(ShiftedInverse, f64)> {
        if a.is_separable() {
            let counts = a.tensor_counts().unwrap();
            return Ok((ShiftedInverse::Box(BoxSineSolver::new(counts, a.h(), a.scale(), 0.0)), 0.0));
        }
        let n = a.len();
        let w = a.bandwidth();
        let band_ok = (n as f64) * (w as f64).powi(2) <= BAND_WORK_LIMIT
            && n.saturating_mul(w + 1) <= BAND_STORAGE_LIMIT;
        let gersh = a.gershgorin_lower();
        let fallback = gersh - 1.0 - 0.01 * gersh.abs();
        if band_ok {
            // Factorization doubles as the definiteness test at sigma = 0.
            for sigma in [0.0, fallback] {
                if let Some(f) = band_factor(a, w, sigma) {
                    return Ok((ShiftedInverse::Band(f), sigma));
                }
            }
            return Err(Error::InvalidParameter("shifted operator failed to factor".into()));
        }
        let sigma = if gersh > 0.0 { 0.0 } else { fallback };
        let precond = match a.tensor_counts() {
            Some(counts) => {
                // Laplacian part plus the smallest remaining diagonal shift.
                let base = a.scale() * 2.0 * a.dim() as f64 / (a.h() * a.h());
                let c = a
                    .diagonal()
                    .iter()
                    .map(|d| d - base - sigma)
                    .fold(f64::INFINITY, f64::min)
                    .max(0.0);
                Precond::Box(BoxSineSolver::new(counts, a.h(), a.scale(), c))
            }
            None => Precond::Jacobi(a.diagonal().iter().map(|d| 1.0 / (d - sigma)).collect()),
        };
        Ok((
            ShiftedInverse::Pcg {
                op: a.clone(),
                sigma,
                precond,
            },
            sigma,
        ))
    }

    pub fn solve(&self, b: &[f64], x: &mut [f64]) -> Result<()> {
        match self {
            ShiftedInverse::Box(s) => {
                x.copy_from_slice(b);
                s.solve_in_place(x);
            }
            ShiftedInverse::Band(f) => {
                x.copy_from_slice(b);
                f.solve_in_place(x);
            }
            ShiftedInverse::Pcg { op, sigma, precond } => {
                x.iter_mut().for_each(|v| *v = 0.0);
                let apply = |u: &[f64], y: &mut [f64]| {
                    op.apply(u, y);
                    y.iter_mut().zip(u).for_each(|(yi, ui)| *yi -= sigma * ui);
                };
                let pre = |r: &[f64], z: &mut [f64]| match precond {
                    Precond::Box(s) => {
                        z.copy_from_slice(r);
                        s.solve_in_place(z);
                    }
                    Precond::Jacobi(d) => {
                        z.iter_mut().zip(r.iter().zip(d)).for_each(|(zi, (ri, di))| *zi = ri * di);
                    }
                };
                linalg::pcg(apply, pre, b, x, 1e-13, 20 * b.len().max(100))?;
            }
        }
        Ok(())
    }
}

fn band_factor(a: &SymmetricOperator, w: usize, sigma: f64) -> Option<BandCholesky> {
    BandCholesky::factor(a.len(), w, |i, j| if i == j { a.diagonal()[i] - sigma } else { a.get(i, j) })
}

fn shift_invert(a: &SymmetricOperator, m: usize, opts: &EigenOptions) -> Result<Solved> {
    let n = a.len();
    let (inv, _) = ShiftedInverse::new(a)?;
    let cfg = LanczosConfig::for_count(n, m, opts.seed, (opts.tol * 0.1).min(1e-6));
    let ritz = lanczos::largest(
        n,
        m,
        cfg,
        |x, y| inv.solve(x, y),
        |_, vectors| {
            let ok = vectors.iter().all(|v| {
                let l = a.quadratic_form(v);
                a.residual(v, l) <= opts.tol * l.abs().max(1.0)
            });
            Ok(if ok { Check::Accept } else { Check::Refine })
        },
    )?;
    let mut pairs: Vec<(f64, Vec<f64>)> = ritz
        .vectors
        .into_iter()
        .map(|v| (a.quadratic_form(&v) / dot(&v, &v), v))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let residuals = pairs.iter().map(|(l, v)| a.residual(v, *l)).collect();
    let (values, vectors) = pairs.into_iter().unzip();
    Ok((values, vectors, residuals, ritz.applications))
}

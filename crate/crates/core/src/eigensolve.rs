//! Smallest eigenpairs of `A x = λ M x` for symmetric positive definite
//! `A` and `M`.
//!
//! Block inverse iteration with zero shift: each sweep applies `A⁻¹ M` to an
//! M-orthonormal block (using one sparse Cholesky factorization of `A`),
//! followed by a Rayleigh–Ritz projection. The block carries a few guard
//! vectors beyond the requested count so the wanted pairs converge at rate
//! `λ_i / λ_{p+1}`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::space::{Cholesky, DiscreteFunction, FeSpace, SparseMatrix};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 500;

/// An eigenpair over free dofs, `residual = ‖Ax − λMx‖₂ / ‖Ax‖₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    /// 1 for the smallest eigenvalue.
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Extra block vectors beyond the requested count.
    pub guard: usize,
    /// Initial guess for the first block vector.
    pub start: Option<Vec<f64>>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, guard: 4, start: None }
    }
}

pub fn smallest_eigenpairs(a: &SparseMatrix, m: &SparseMatrix, k: usize, tol: f64) -> Result<Vec<EigenPair>> {
    smallest_eigenpairs_with(a, m, k, &EigenOptions { tol, ..EigenOptions::default() })
}

pub fn smallest_eigenpairs_with(
    a: &SparseMatrix,
    m: &SparseMatrix,
    k: usize,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>> {
    let n = a.dim();
    if m.dim() != n {
        return Err(Error::Argument(format!("A is {n}x{n} but M is {0}x{0}", m.dim())));
    }
    if k == 0 || k > n {
        return Err(Error::Argument(format!("cannot compute {k} eigenpairs of a {n}-dimensional problem")));
    }
    if !(opts.tol > 0.0 && opts.tol <= 1e-6) {
        return Err(Error::Argument(format!("tolerance {} outside (0, 1e-6]", opts.tol)));
    }
    let p = n.min(k + opts.guard.max(1));
    if p == n {
        return dense_pairs(a, m, k);
    }

    let factor = Cholesky::new(a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_e16e);
    let mut x = vec![0.0; n * p];
    for v in x.iter_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    if let Some(start) = &opts.start {
        if start.len() == n && start.iter().any(|&s| s != 0.0) {
            x[..n].copy_from_slice(start);
        }
    }

    let mut mx = block_matvec(m, &x, p);
    let mut worst = f64::INFINITY;
    for iteration in 1..=opts.max_iter {
        let mut y = mx.clone();
        factor.solve_block(&mut y, p);
        let my = block_matvec(m, &y, p);
        // A Y = M X, so Yᵀ A Y = Yᵀ (M X)
        let ah = symmetrize(gram(&y, &mx, n, p));
        let mh = symmetrize(gram(&y, &my, n, p));
        let (theta, q) = dense_generalized(&ah, &mh)?;
        x = block_combine(&y, &q, n);
        mx = block_combine(&my, &q, n);

        let mut pairs = Vec::with_capacity(k);
        worst = 0.0;
        for i in 0..k {
            let xi = &x[i * n..(i + 1) * n];
            let residual = relative_residual(a, &mx[i * n..(i + 1) * n], xi, theta[i]);
            worst = worst.max(residual);
            pairs.push(EigenPair { lambda: theta[i], vector: xi.to_vec(), residual, index: i + 1 });
        }
        if worst <= opts.tol {
            log::debug!("eigensolve: n={n} block={p} converged in {iteration} iterations");
            return Ok(pairs);
        }
    }
    Err(Error::Convergence { iterations: opts.max_iter, residual: worst })
}

fn relative_residual(a: &SparseMatrix, mx: &[f64], x: &[f64], lambda: f64) -> f64 {
    let ax = a.matvec(x);
    let (mut r2, mut a2) = (0.0, 0.0);
    for (p, q) in ax.iter().zip(mx) {
        r2 += (p - lambda * q).powi(2);
        a2 += p * p;
    }
    (r2 / a2).sqrt()
}

fn block_matvec(m: &SparseMatrix, x: &[f64], cols: usize) -> Vec<f64> {
    let n = m.dim();
    let mut out = vec![0.0; n * cols];
    for j in 0..cols {
        m.matvec_into(&x[j * n..(j + 1) * n], &mut out[j * n..(j + 1) * n]);
    }
    out
}

fn gram(u: &[f64], v: &[f64], n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| {
        u[i * n..(i + 1) * n].iter().zip(&v[j * n..(j + 1) * n]).map(|(a, b)| a * b).sum()
    })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn block_combine(y: &[f64], q: &DMatrix<f64>, n: usize) -> Vec<f64> {
    let p = q.nrows();
    let mut out = vec![0.0; n * q.ncols()];
    for j in 0..q.ncols() {
        let col = &mut out[j * n..(j + 1) * n];
        for l in 0..p {
            let c = q[(l, j)];
            if c != 0.0 {
                col.iter_mut().zip(&y[l * n..(l + 1) * n]).for_each(|(o, v)| *o += c * v);
            }
        }
    }
    out
}

/// Dense `A q = θ M q` with ascending `θ` and M-orthonormal columns `q`.
pub fn dense_generalized(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("projected mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("projected mass factor is singular".into()))?;
    let c = symmetrize(&linv * a * linv.transpose());
    let dim = c.nrows();
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let theta = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let w = DMatrix::from_fn(dim, order.len(), |r, j| eig.eigenvectors[(r, order[j])]);
    Ok((theta, linv.transpose() * w))
}

fn dense_pairs(a: &SparseMatrix, m: &SparseMatrix, k: usize) -> Result<Vec<EigenPair>> {
    let (theta, q) = dense_generalized(&a.to_dense(), &m.to_dense())?;
    Ok((0..k)
        .map(|i| {
            let vector: Vec<f64> = q.column(i).iter().copied().collect();
            let mx = m.matvec(&vector);
            let residual = relative_residual(a, &mx, &vector, theta[i]);
            EigenPair { lambda: theta[i], vector, residual, index: i + 1 }
        })
        .collect())
}

/// Scales to unit M-norm and fixes the sign: positive M-inner product with
/// `reference` when that product is nonzero, otherwise a positive entry of
/// largest magnitude (first such entry on ties).
pub fn normalize_and_orient(mut pair: EigenPair, m: &SparseMatrix, reference: Option<&[f64]>) -> Result<EigenPair> {
    let norm2 = m.quad_form(&pair.vector, &pair.vector);
    if !(norm2 > 0.0 && norm2.is_finite()) {
        return Err(Error::Argument("cannot normalize a zero eigenvector".into()));
    }
    let scale = norm2.sqrt().recip();
    pair.vector.iter_mut().for_each(|v| *v *= scale);

    let by_reference = reference
        .filter(|r| r.len() == pair.vector.len())
        .map(|r| m.quad_form(&pair.vector, r))
        .filter(|&s| s != 0.0 && s.is_finite());
    let flip = match by_reference {
        Some(s) => s < 0.0,
        None => {
            let mut best = 0;
            for (i, v) in pair.vector.iter().enumerate() {
                if v.abs() > pair.vector[best].abs() {
                    best = i;
                }
            }
            pair.vector[best] < 0.0
        }
    };
    if flip {
        pair.vector.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(pair)
}

/// The candidate nearest `previous` (ties to the smaller λ); the smallest
/// candidate when there is no previous level.
pub fn track(previous: Option<f64>, candidates: Vec<EigenPair>) -> Result<EigenPair> {
    let key = |c: &EigenPair| match previous {
        Some(p) => (c.lambda - p).abs(),
        None => c.lambda,
    };
    candidates
        .into_iter()
        .reduce(|best, c| {
            let (kb, kc) = (key(&best), key(&c));
            if kc < kb || (kc == kb && c.lambda < best.lambda) {
                c
            } else {
                best
            }
        })
        .ok_or_else(|| Error::Argument("no eigenpair candidates to track".into()))
}

/// A discrete eigenpair `(λ_h, u_h)` on an [`FeSpace`].
#[derive(Debug, Clone)]
pub struct EigenSolution<'a> {
    pub lambda_h: f64,
    pub u_h: DiscreteFunction<'a>,
    pub residual: f64,
    pub index: usize,
}

impl<'a> EigenSolution<'a> {
    pub fn from_pair(space: &'a FeSpace, pair: &EigenPair) -> Self {
        Self {
            lambda_h: pair.lambda,
            u_h: DiscreteFunction::from_free(space, &pair.vector),
            residual: pair.residual,
            index: pair.index,
        }
    }
}

/// Assembles the free-dof blocks of `space` and returns the `k` smallest
/// eigenpairs, M-normalized with the default sign convention.
pub fn solve_space<'a>(space: &'a FeSpace, k: usize, opts: &EigenOptions) -> Result<Vec<EigenSolution<'a>>> {
    let a = space.restrict(&space.assemble_stiffness_raw()?);
    let m = space.restrict(&space.assemble_mass_raw()?);
    smallest_eigenpairs_with(&a, &m, k, opts)?
        .into_iter()
        .map(|p| Ok(EigenSolution::from_pair(space, &normalize_and_orient(p, &m, None)?)))
        .collect()
}

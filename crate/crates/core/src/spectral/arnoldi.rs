//! Krylov–Schur restarted Arnoldi for the largest-magnitude eigenvalues of a
//! matrix-free linear operator.

use log::debug;

use crate::error::{QgaError, Result};
use crate::linalg::{CMatrix, CVector, C64, ZERO};
use crate::random::RngStream;

use super::schur::{eigen_order, order_leading, schur, triangular_eigenvector};
use super::EigenPair;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArnoldiOptions {
    /// Krylov dimension; `None` means `max(4k, 40)`.
    pub krylov_dim: Option<usize>,
    /// Required residual `||A x - lambda x||` for unit `x`.
    pub tol: f64,
    pub max_restarts: usize,
    /// Seed of the random start vector.
    pub seed: u64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        Self { krylov_dim: None, tol: 1e-10, max_restarts: 500, seed: 0x5eed }
    }
}

fn random_unit(n: usize, rng: &mut RngStream) -> CVector {
    let v = CVector::from_fn(n, |_, _| rng.complex_normal());
    let norm = v.norm();
    v.unscale(norm)
}

/// Two passes of modified Gram–Schmidt of `w` against `basis`; returns the
/// accumulated coefficients.
fn orthogonalize(w: &mut CVector, basis: &[CVector]) -> Vec<C64> {
    let mut coeffs = vec![ZERO; basis.len()];
    for _ in 0..2 {
        for (c, v) in coeffs.iter_mut().zip(basis) {
            let h = v.dotc(w);
            w.axpy(-h, v, C64::new(1.0, 0.0));
            *c += h;
        }
    }
    coeffs
}

/// `k` eigenpairs of largest magnitude of the `n`-dimensional operator `op`.
///
/// Breakdowns (an invariant Krylov subspace) continue with a fresh random direction, so
/// degenerate and low-rank spectra are handled. Eigenvectors are returned with unit
/// norm together with their true residuals.
pub fn krylov_schur<F>(op: F, n: usize, k: usize, opts: &ArnoldiOptions) -> Result<Vec<EigenPair>>
where
    F: Fn(&CVector) -> CVector,
{
    if k == 0 || k > n {
        return Err(QgaError::Range(format!("cannot compute {k} eigenpairs of a {n}-dimensional operator")));
    }
    let m = opts.krylov_dim.unwrap_or((4 * k).max(40)).clamp(k + 1, n.max(k + 1)).min(n);
    let mut rng = RngStream::new(opts.seed);
    let mut basis: Vec<CVector> = vec![random_unit(n, &mut rng)];
    let mut h = CMatrix::zeros(m + 1, m);
    let mut kept = 0;
    let mut best = f64::INFINITY;
    let mut scale = 1.0f64;

    for restart in 0..=opts.max_restarts {
        for j in kept..m {
            let mut w = op(&basis[j]);
            scale = scale.max(w.norm());
            let coeffs = orthogonalize(&mut w, &basis[..=j]);
            for (i, c) in coeffs.into_iter().enumerate() {
                h[(i, j)] += c;
            }
            let beta = w.norm();
            if j + 1 == n {
                // The whole space is spanned; the relation closes exactly.
                h[(j + 1, j)] = ZERO;
                basis.push(CVector::zeros(n));
            } else if beta <= 1e-12 * scale {
                h[(j + 1, j)] = ZERO;
                let mut fresh = random_unit(n, &mut rng);
                orthogonalize(&mut fresh, &basis[..=j]);
                let norm = fresh.norm();
                basis.push(fresh.unscale(norm));
            } else {
                h[(j + 1, j)] = C64::new(beta, 0.0);
                basis.push(w.unscale(beta));
            }
        }

        let (mut z, mut t) = schur(h.rows(0, m).into_owned());
        let keep = ((m + k) / 2).max(k).min(m);
        order_leading(&mut t, &mut z, keep);
        let beta = h[(m, m - 1)];
        let coupling: Vec<C64> = (0..m).map(|i| beta * z[(m - 1, i)]).collect();

        let mut worst = 0.0f64;
        for i in 0..k {
            let y = triangular_eigenvector(&t, i);
            let r: C64 = (0..=i).map(|j| coupling[j] * y[j]).sum();
            worst = worst.max(r.norm() / y.norm());
        }
        best = best.min(worst);
        debug!("krylov-schur restart {restart}: worst ritz residual {worst:.3e}");

        if worst <= opts.tol || restart == opts.max_restarts || m == n {
            let mut pairs = Vec::with_capacity(k);
            for i in 0..k {
                let y = &z * triangular_eigenvector(&t, i);
                let mut x = CVector::zeros(n);
                for (j, v) in basis[..m].iter().enumerate() {
                    x.axpy(y[j], v, C64::new(1.0, 0.0));
                }
                let norm = x.norm();
                x.unscale_mut(norm);
                let value = t[(i, i)];
                let residual = (op(&x) - &x * value).norm();
                pairs.push(EigenPair { value, vector: x, residual });
            }
            let true_worst = pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
            if true_worst <= opts.tol {
                pairs.sort_by(|a, b| eigen_order(&a.value, &b.value));
                return Ok(pairs);
            }
            if restart == opts.max_restarts || m == n {
                return Err(QgaError::Convergence { restarts: restart, best_residual: best.min(true_worst) });
            }
        }

        // Truncate to the leading Schur vectors and continue from the residual direction.
        let mut next: Vec<CVector> = Vec::with_capacity(m + 1);
        for i in 0..keep {
            let mut v = CVector::zeros(n);
            for (j, b) in basis[..m].iter().enumerate() {
                v.axpy(z[(j, i)], b, C64::new(1.0, 0.0));
            }
            next.push(v);
        }
        next.push(basis[m].clone());
        basis = next;
        let mut hn = CMatrix::zeros(m + 1, m);
        for i in 0..keep {
            for j in i..keep {
                hn[(i, j)] = t[(i, j)];
            }
            hn[(keep, i)] = coupling[i];
        }
        h = hn;
        kept = keep;
    }
    unreachable!("the final restart always returns")
}

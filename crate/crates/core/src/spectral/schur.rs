//! Complex Schur helpers shared by the dense and Krylov eigensolvers.

use crate::linalg::{CMatrix, CVector, C64, ONE, ZERO};

/// `m = Q T Q†` with `T` upper triangular.
pub(crate) fn schur(m: CMatrix) -> (CMatrix, CMatrix) {
    let n = m.nrows();
    let (q, mut t) = nalgebra::Schur::new(m).unpack();
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = ZERO;
        }
    }
    (q, t)
}

/// Exchanges the diagonal entries `i` and `i + 1` of the triangular `t` by a unitary
/// similarity, accumulated into `z`.
pub(crate) fn swap_adjacent(t: &mut CMatrix, z: &mut CMatrix, i: usize) {
    let n = t.nrows();
    let (a, b) = (t[(i, i)], t[(i + 1, i + 1)]);
    let (x0, x1) = (t[(i, i + 1)], b - a);
    let r = (x0.norm_sqr() + x1.norm_sqr()).sqrt();
    if r == 0.0 {
        return;
    }
    // Columns of G: the eigenvector of the 2x2 block for `b`, and its complement.
    let (g00, g10) = (x0 / r, x1 / r);
    let (g01, g11) = (-g10.conj(), g00.conj());
    for j in 0..n {
        let (u, v) = (t[(i, j)], t[(i + 1, j)]);
        t[(i, j)] = g00.conj() * u + g10.conj() * v;
        t[(i + 1, j)] = g01.conj() * u + g11.conj() * v;
    }
    for j in 0..n {
        let (u, v) = (t[(j, i)], t[(j, i + 1)]);
        t[(j, i)] = u * g00 + v * g10;
        t[(j, i + 1)] = u * g01 + v * g11;
    }
    for j in 0..z.nrows() {
        let (u, v) = (z[(j, i)], z[(j, i + 1)]);
        z[(j, i)] = u * g00 + v * g10;
        z[(j, i + 1)] = u * g01 + v * g11;
    }
    t[(i + 1, i)] = ZERO;
    t[(i, i)] = b;
    t[(i + 1, i + 1)] = a;
}

/// Total order used for every eigenvalue list: magnitude descending, then real part,
/// then imaginary part, both descending.
pub(crate) fn eigen_order(a: &C64, b: &C64) -> std::cmp::Ordering {
    b.norm()
        .total_cmp(&a.norm())
        .then(b.re.total_cmp(&a.re))
        .then(b.im.total_cmp(&a.im))
}

/// Moves the `count` leading eigenvalues in [`eigen_order`] to the top of `t`.
pub(crate) fn order_leading(t: &mut CMatrix, z: &mut CMatrix, count: usize) {
    let n = t.nrows();
    for pos in 0..count.min(n) {
        let mut best = pos;
        for j in pos + 1..n {
            if eigen_order(&t[(j, j)], &t[(best, best)]).is_lt() {
                best = j;
            }
        }
        for j in (pos..best).rev() {
            swap_adjacent(t, z, j);
        }
    }
}

/// Eigenvector of the triangular `t` for its `k`-th diagonal entry, zero below `k`.
pub(crate) fn triangular_eigenvector(t: &CMatrix, k: usize) -> CVector {
    let n = t.nrows();
    let lambda = t[(k, k)];
    let small = f64::EPSILON * t.norm().max(1.0);
    let mut y = CVector::zeros(n);
    y[k] = ONE;
    for i in (0..k).rev() {
        let mut s = ZERO;
        for j in i + 1..=k {
            s += t[(i, j)] * y[j];
        }
        let mut denom = t[(i, i)] - lambda;
        if denom.norm() < small {
            denom = C64::new(small, 0.0);
        }
        y[i] = -s / denom;
    }
    y
}

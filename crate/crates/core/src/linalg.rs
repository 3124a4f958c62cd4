//! Dense complex linear algebra on population operators.
//!
//! Matrices are `nalgebra` column-major `DMatrix<Complex64>`. The kernels below act
//! on a subset of qubits without materialising the full `D x D` operator, which keeps
//! every channel application at `O(D^2 k)` for a `k`-dimensional local operator.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Kronecker product; `index(k1, k2) = k1 * dim(b) + k2`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `a` tensored with itself `times` times (`times >= 1`).
pub fn tensor_power(a: &CMatrix, times: usize) -> CMatrix {
    assert!(times >= 1, "tensor power needs at least one factor");
    (1..times).fold(a.clone(), |acc, _| tensor(&acc, a))
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// `|v><v|`.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Largest entrywise deviation of `m` from its adjoint.
pub fn hermiticity_drift(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(m + m†) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let eig = nalgebra::SymmetricEigen::new(hermitize(m));
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// Largest entrywise deviation of `u u†` from the identity.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let prod = u * u.adjoint();
    let n = prod.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Index bookkeeping for a subset of qubits of an `N`-qubit space.
///
/// Every basis index splits uniquely as `base + offsets[s]`, where `base` has all
/// subsystem bits cleared and `s` enumerates the subsystem basis with the first
/// listed qubit as most significant bit.
#[derive(Debug, Clone)]
pub struct Subsystem {
    offsets: Vec<usize>,
    bases: Vec<usize>,
}

impl Subsystem {
    pub fn new(total_qubits: usize, qubits: &[usize]) -> Self {
        let stride = |q: usize| 1usize << (total_qubits - 1 - q);
        let k = qubits.len();
        let offsets = (0..1usize << k)
            .map(|s| {
                qubits
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| (s >> (k - 1 - j)) & 1 == 1)
                    .map(|(_, &q)| stride(q))
                    .sum()
            })
            .collect();
        let mask: usize = qubits.iter().map(|&q| stride(q)).sum();
        let bases = (0..1usize << total_qubits).filter(|i| i & mask == 0).collect();
        Self { offsets, bases }
    }

    pub fn dim(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn bases(&self) -> &[usize] {
        &self.bases
    }
}

/// `m <- (op on sub) m`.
pub fn left_apply(m: &mut CMatrix, sub: &Subsystem, op: &CMatrix) {
    let k = sub.dim();
    debug_assert_eq!(op.nrows(), k);
    let dim = m.nrows();
    let mut gathered = vec![ZERO; k];
    for col in m.as_mut_slice().chunks_exact_mut(dim) {
        for &b in &sub.bases {
            for (s, g) in gathered.iter_mut().enumerate() {
                *g = col[b + sub.offsets[s]];
            }
            for (t, &off) in sub.offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (s, g) in gathered.iter().enumerate() {
                    acc += op[(t, s)] * g;
                }
                col[b + off] = acc;
            }
        }
    }
}

/// `m <- m (op on sub)`.
pub fn right_apply(m: &mut CMatrix, sub: &Subsystem, op: &CMatrix) {
    let k = sub.dim();
    debug_assert_eq!(op.nrows(), k);
    let dim = m.nrows();
    let mut block = vec![ZERO; k * dim];
    let data = m.as_mut_slice();
    for &b in &sub.bases {
        for (s, &off) in sub.offsets.iter().enumerate() {
            let src = (b + off) * dim;
            block[s * dim..(s + 1) * dim].copy_from_slice(&data[src..src + dim]);
        }
        for (t, &off) in sub.offsets.iter().enumerate() {
            let dst = &mut data[(b + off) * dim..(b + off + 1) * dim];
            dst.fill(ZERO);
            for s in 0..k {
                let w = op[(s, t)];
                if w == ZERO {
                    continue;
                }
                for (d, x) in dst.iter_mut().zip(&block[s * dim..(s + 1) * dim]) {
                    *d += w * x;
                }
            }
        }
    }
}

/// `m <- (op on sub) m (op on sub)†`.
pub fn conjugate(m: &mut CMatrix, sub: &Subsystem, op: &CMatrix) {
    left_apply(m, sub, op);
    right_apply(m, sub, &op.adjoint());
}

/// Partial trace onto the subsystem: `out[s, t] = sum_b m[b + off_s, b + off_t]`.
pub fn reduce_to(m: &CMatrix, sub: &Subsystem) -> CMatrix {
    let k = sub.dim();
    let mut out = CMatrix::zeros(k, k);
    for t in 0..k {
        for s in 0..k {
            let mut acc = ZERO;
            for &b in &sub.bases {
                acc += m[(b + sub.offsets[s], b + sub.offsets[t])];
            }
            out[(s, t)] = acc;
        }
    }
    out
}

/// Conjugation by the permutation matrix `|perm(x)><x|`: `out[perm x, perm y] = m[x, y]`.
pub fn permute_conjugate(m: &CMatrix, perm: &[usize]) -> CMatrix {
    let dim = m.nrows();
    debug_assert_eq!(perm.len(), dim);
    let mut out = CMatrix::zeros(dim, dim);
    let src = m.as_slice();
    let dst = out.as_mut_slice();
    for (y, col) in src.chunks_exact(dim).enumerate() {
        let base = perm[y] * dim;
        for (x, v) in col.iter().enumerate() {
            dst[base + perm[x]] = *v;
        }
    }
    out
}

/// Dense permutation matrix `sum_x |perm(x)><x|`.
pub fn permutation_matrix(perm: &[usize]) -> CMatrix {
    let mut p = CMatrix::zeros(perm.len(), perm.len());
    for (x, &y) in perm.iter().enumerate() {
        p[(y, x)] = ONE;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    fn ket(dim: usize, i: usize) -> CVector {
        let mut v = CVector::zeros(dim);
        v[i] = ONE;
        v
    }

    #[test]
    fn tensor_identities() {
        assert_eq!(tensor(&identity(2), &identity(2)), identity(4));
        let p0 = outer(&ket(2, 0));
        let p1 = outer(&ket(2, 1));
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0), c(1.0), c(0.0), c(0.0)]));
        assert_eq!(tensor(&p0, &p1), expected);
    }

    #[test]
    fn first_factor_is_most_significant() {
        // (X ⊗ I)|00> = |10>, i.e. basis index 2.
        let xi = tensor(&pauli_x(), &identity(2));
        assert_eq!(&xi * ket(4, 0), ket(4, 2));
    }

    #[test]
    fn local_kernels_match_dense_operator() {
        // X on qubit 1 of 3: dense operator is I ⊗ X ⊗ I.
        let dense = tensor(&tensor(&identity(2), &pauli_x()), &identity(2));
        let m = CMatrix::from_fn(8, 8, |i, j| C64::new((i * 8 + j) as f64, (i as f64) - (j as f64)));
        let sub = Subsystem::new(3, &[1]);

        let mut left = m.clone();
        left_apply(&mut left, &sub, &pauli_x());
        assert_eq!(left, &dense * &m);

        let mut right = m.clone();
        right_apply(&mut right, &sub, &pauli_x());
        assert_eq!(right, &m * &dense);
    }

    #[test]
    fn subsystem_offsets_follow_listed_order() {
        // Qubits listed as [2, 0]: s = (bit of q2, bit of q0).
        let sub = Subsystem::new(3, &[2, 0]);
        assert_eq!(sub.offsets(), &[0, 4, 1, 5]);
        assert_eq!(sub.bases(), &[0, 2]);
    }

    #[test]
    fn permutation_conjugation_matches_dense() {
        let perm = vec![2, 0, 3, 1];
        let p = permutation_matrix(&perm);
        let m = CMatrix::from_fn(4, 4, |i, j| C64::new(i as f64, j as f64));
        assert_eq!(permute_conjugate(&m, &perm), &p * &m * p.adjoint());
    }
}

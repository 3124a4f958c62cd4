//! Lower-register reset and the two cloning machines.

use crate::layout::PopulationLayout;
use crate::linalg::{reduce_to, tensor, tensor_power, CMatrix, Subsystem, C64, ZERO};

/// Reference state for the BCQO cloner: `|0...0><0...0|`.
pub fn bcqo_reference(layout: PopulationLayout) -> CMatrix {
    let d = layout.individual_dim();
    let mut m = CMatrix::zeros(d, d);
    m[(0, 0)] = C64::new(1.0, 0.0);
    m
}

/// Reference state for the UQCM cloner: `I / d`.
pub fn uqcm_reference(layout: PopulationLayout) -> CMatrix {
    let d = layout.individual_dim();
    CMatrix::identity(d, d).unscale(d as f64)
}

/// `rho -> tr_low(rho) ⊗ rho_0^{⊗ n/2}`.
#[derive(Debug, Clone)]
pub(crate) struct ResetOp {
    upper: Subsystem,
    lower_state: CMatrix,
}

impl ResetOp {
    pub(crate) fn new(layout: PopulationLayout, reference: &CMatrix) -> Self {
        let upper_regs: Vec<usize> = (0..layout.upper()).collect();
        Self {
            upper: Subsystem::new(layout.total_qubits(), &layout.qubits_of(&upper_regs)),
            lower_state: tensor_power(reference, layout.upper()),
        }
    }

    pub(crate) fn apply(&self, m: &CMatrix) -> CMatrix {
        // Upper registers are the most significant digits, so the product is a plain
        // Kronecker product.
        tensor(&reduce_to(m, &self.upper), &self.lower_state)
    }
}

/// Transversal XOR from register `i` into register `i + n/2`: `|j>|k> -> |j>|k ⊕ j>`.
pub(crate) fn bcqo_permutation(layout: PopulationLayout) -> Vec<usize> {
    let half = layout.upper();
    (0..layout.dim())
        .map(|x| {
            let mut digits = layout.digits(x);
            for i in 0..half {
                digits[i + half] ^= digits[i];
            }
            layout.index_of(&digits)
        })
        .collect()
}

/// Symmetric universal cloner on each pair `(i, i + n/2)`:
/// `rho -> 2d/(d+1) S+ (tr_B rho ⊗ I/d) S+` with `S+ = (I + SWAP)/2`.
#[derive(Debug, Clone)]
pub(crate) struct UqcmOp {
    d: usize,
    pairs: Vec<UqcmPair>,
}

#[derive(Debug, Clone)]
struct UqcmPair {
    target: Subsystem,
    swap: Vec<usize>,
}

impl UqcmOp {
    pub(crate) fn new(layout: PopulationLayout) -> Self {
        let half = layout.upper();
        let pairs = (0..half)
            .map(|i| UqcmPair {
                target: Subsystem::new(layout.total_qubits(), &layout.qubits_of(&[i + half])),
                swap: register_swap(layout, i, i + half),
            })
            .collect();
        Self { d: layout.individual_dim(), pairs }
    }

    pub(crate) fn apply(&self, m: CMatrix) -> CMatrix {
        self.pairs.iter().fold(m, |acc, pair| self.apply_pair(&acc, pair))
    }

    fn apply_pair(&self, m: &CMatrix, pair: &UqcmPair) -> CMatrix {
        let dim = m.nrows();
        let d = self.d as f64;
        // Y = tr_B(m) ⊗ I/d, with B restored in place.
        let mut y = CMatrix::zeros(dim, dim);
        let offsets = pair.target.offsets();
        for &bc in pair.target.bases() {
            for &br in pair.target.bases() {
                let mut acc = ZERO;
                for &o in offsets {
                    acc += m[(br + o, bc + o)];
                }
                let v = acc.unscale(d);
                for &o in offsets {
                    y[(br + o, bc + o)] = v;
                }
            }
        }
        // S+ Y S+ = (Y + PY + YP + PYP)/4.
        let scale = 2.0 * d / (d + 1.0) / 4.0;
        let perm = &pair.swap;
        let src = y.as_slice();
        let mut out = CMatrix::zeros(dim, dim);
        let dst = out.as_mut_slice();
        for col in 0..dim {
            let pc = perm[col];
            for row in 0..dim {
                let pr = perm[row];
                let v = src[col * dim + row] + src[col * dim + pr] + src[pc * dim + row] + src[pc * dim + pr];
                dst[col * dim + row] = v * scale;
            }
        }
        out
    }
}

/// Basis permutation exchanging the contents of registers `a` and `b`.
pub(crate) fn register_swap(layout: PopulationLayout, a: usize, b: usize) -> Vec<usize> {
    (0..layout.dim())
        .map(|x| {
            let mut digits = layout.digits(x);
            digits.swap(a, b);
            layout.index_of(&digits)
        })
        .collect()
}

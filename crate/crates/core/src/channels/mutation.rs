//! Pauli mutation: the exact per-qubit depolarising channel and sampled Pauli strings.

use serde::{Deserialize, Serialize};

use crate::layout::PopulationLayout;
use crate::linalg::{CMatrix, C64, ONE, ZERO};
use crate::random::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMatrix {
        let i = C64::new(0.0, 1.0);
        let entries = match self {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -i, i, ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        };
        CMatrix::from_row_slice(2, 2, &entries)
    }

    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    fn signs(self) -> bool {
        matches!(self, Pauli::Y | Pauli::Z)
    }
}

/// Tensor product of single-qubit Paulis, one per population qubit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString {
    gates: Vec<Pauli>,
}

impl PauliString {
    pub fn new(gates: Vec<Pauli>) -> Self {
        Self { gates }
    }

    pub fn identity(qubits: usize) -> Self {
        Self { gates: vec![Pauli::I; qubits] }
    }

    pub fn gates(&self) -> &[Pauli] {
        &self.gates
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.gates.iter().filter(|&&g| g != Pauli::I).count()
    }

    pub fn matrix(&self) -> CMatrix {
        self.gates
            .iter()
            .map(|g| g.matrix())
            .reduce(|acc, m| acc.kronecker(&m))
            .unwrap_or_else(|| CMatrix::identity(1, 1))
    }

    fn masks(&self) -> (usize, usize) {
        let n = self.gates.len();
        let mut flip = 0;
        let mut sign = 0;
        for (q, g) in self.gates.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            if g.flips() {
                flip |= bit;
            }
            if g.signs() {
                sign |= bit;
            }
        }
        (flip, sign)
    }

    /// `P m P†`. `P|x> = phase(x)|x ⊕ flip>`; the global `i^{#Y}` cancels.
    pub fn conjugate(&self, m: &CMatrix) -> CMatrix {
        let (flip, sign) = self.masks();
        if flip == 0 && sign == 0 {
            return m.clone();
        }
        let dim = m.nrows();
        let parity = |x: usize| if (x & sign).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut out = CMatrix::zeros(dim, dim);
        let src = m.as_slice();
        let dst = out.as_mut_slice();
        for y in 0..dim {
            let sy = parity(y);
            let base = (y ^ flip) * dim;
            for x in 0..dim {
                dst[base + (x ^ flip)] = src[y * dim + x] * (parity(x) * sy);
            }
        }
        out
    }
}

/// Draws one gate per qubit: `I` with probability `1 - p`, each of `X, Y, Z` with `p / 3`.
pub fn sample_pauli_string(layout: PopulationLayout, p: f64, rng: &mut RngStream) -> PauliString {
    let gates = (0..layout.total_qubits())
        .map(|_| {
            let r = rng.uniform();
            if r >= p {
                Pauli::I
            } else {
                match ((3.0 * r / p) as usize).min(2) {
                    0 => Pauli::X,
                    1 => Pauli::Y,
                    _ => Pauli::Z,
                }
            }
        })
        .collect();
    PauliString::new(gates)
}

/// Dense sampled mutation unitary `U_mu`.
pub fn sample_mutation_unitary(layout: PopulationLayout, p: f64, rng: &mut RngStream) -> CMatrix {
    sample_pauli_string(layout, p, rng).matrix()
}

/// `rho -> (1 - p) rho + (p/3)(X rho X + Y rho Y + Z rho Z)` on every qubit, applied
/// as `(1 - 4p/3) rho + (4p/3) tr_q(rho) ⊗ I/2`.
#[derive(Debug, Clone)]
pub(crate) struct DepolarizeOp {
    p: f64,
    qubits: usize,
}

impl DepolarizeOp {
    pub(crate) fn new(layout: PopulationLayout, p: f64) -> Self {
        Self { p, qubits: layout.total_qubits() }
    }

    pub(crate) fn apply(&self, mut m: CMatrix) -> CMatrix {
        if self.p == 0.0 {
            return m;
        }
        let lambda = 4.0 * self.p / 3.0;
        let keep = 1.0 - lambda;
        let dim = m.nrows();
        let data = m.as_mut_slice();
        for q in 0..self.qubits {
            let o = 1usize << (self.qubits - 1 - q);
            for bc in (0..dim).filter(|x| x & o == 0) {
                for br in (0..dim).filter(|x| x & o == 0) {
                    let a = data[bc * dim + br];
                    let b = data[(bc + o) * dim + br + o];
                    let avg = (a + b) * (0.5 * lambda);
                    data[bc * dim + br] = a * keep + avg;
                    data[(bc + o) * dim + br + o] = b * keep + avg;
                    data[(bc + o) * dim + br] *= keep;
                    data[bc * dim + br + o] *= keep;
                }
            }
        }
        m
    }
}

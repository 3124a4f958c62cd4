//! Explicit Kraus operators of each subroutine.
//!
//! These materialise every operator as a dense `D x D` matrix and are meant for small
//! layouts (`n c <= 4` or so): completeness checks and cross-validation of the
//! closed-form channel kernels.

use std::collections::BTreeMap;

use crate::hamiltonian::ProblemHamiltonian;
use crate::layout::PopulationLayout;
use crate::linalg::{identity, left_apply, tensor, tensor_power, CMatrix, CVector, Subsystem, C64, ONE};

use super::mutation::{Pauli, PauliString};
use super::sort::SortTable;

/// `U^{⊗n}`.
pub fn basis_power(layout: PopulationLayout, h: &ProblemHamiltonian) -> CMatrix {
    tensor_power(h.basis(), layout.registers())
}

/// `A_kappa = sum_{k: sigma(k) = kappa} |u_{s(k)}><u_k|`, one per instruction string
/// that occurs.
pub fn sorting_kraus(layout: PopulationLayout, h: &ProblemHamiltonian) -> Vec<CMatrix> {
    let table = SortTable::build(layout, h);
    let dim = layout.dim();
    let mut by_sigma: BTreeMap<u64, CMatrix> = BTreeMap::new();
    for k in 0..dim {
        let a = by_sigma.entry(table.instruction(k)).or_insert_with(|| CMatrix::zeros(dim, dim));
        a[(table.sorted_index(k), k)] = ONE;
    }
    let rot = basis_power(layout, h);
    by_sigma.into_values().map(|a| &rot * a * rot.adjoint()).collect()
}

/// `B_{j,R} = sqrt(w_R) I ⊗ |E_R><j|` from the spectral decomposition of
/// `rho_0^{⊗ n/2} = sum_R w_R |E_R><E_R|`.
pub fn reset_kraus(layout: PopulationLayout, reference: &CMatrix) -> Vec<CMatrix> {
    let lower = tensor_power(reference, layout.upper());
    let lower_dim = lower.nrows();
    let up = identity(lower_dim);
    let eig = nalgebra::SymmetricEigen::new(lower);
    let mut out = Vec::new();
    for (r, &w) in eig.eigenvalues.iter().enumerate() {
        if w <= 1e-14 {
            continue;
        }
        let e: CVector = eig.eigenvectors.column(r).into_owned();
        for j in 0..lower_dim {
            let mut ket_bra = CMatrix::zeros(lower_dim, lower_dim);
            for i in 0..lower_dim {
                ket_bra[(i, j)] = e[i] * w.sqrt();
            }
            out.push(tensor(&up, &ket_bra));
        }
    }
    out
}

/// Embeds an operator on the listed registers into the full population space.
pub fn embed(layout: PopulationLayout, registers: &[usize], op: &CMatrix) -> CMatrix {
    let sub = Subsystem::new(layout.total_qubits(), &layout.qubits_of(registers));
    let mut m = identity(layout.dim());
    left_apply(&mut m, &sub, op);
    m
}

/// `S+ = (I + SWAP)/2` on two `d`-dimensional registers.
pub fn symmetric_projector(d: usize) -> CMatrix {
    let mut s = CMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            s[(a * d + b, a * d + b)] += C64::new(0.5, 0.0);
            s[(b * d + a, a * d + b)] += C64::new(0.5, 0.0);
        }
    }
    s
}

/// Kraus operators `c_{r,k} = sqrt(2/(d+1)) S+ (I ⊗ |r><k|)` of one cloning pair.
pub fn uqcm_pair_kraus(d: usize) -> Vec<CMatrix> {
    let s = symmetric_projector(d);
    let scale = (2.0 / (d as f64 + 1.0)).sqrt();
    let mut out = Vec::with_capacity(d * d);
    for r in 0..d {
        for k in 0..d {
            let mut rk = CMatrix::zeros(d, d);
            rk[(r, k)] = ONE;
            out.push(&s * tensor(&identity(d), &rk) * C64::new(scale, 0.0));
        }
    }
    out
}

/// Global replication Kraus operators `C = ⊗_i c_{k_i}^{i, i+n/2}`.
pub fn uqcm_kraus(layout: PopulationLayout) -> Vec<CMatrix> {
    let half = layout.upper();
    let local = uqcm_pair_kraus(layout.individual_dim());
    let mut out = vec![identity(layout.dim())];
    for i in 0..half {
        let embedded: Vec<CMatrix> = local.iter().map(|c| embed(layout, &[i, i + half], c)).collect();
        out = out.iter().flat_map(|acc| embedded.iter().map(move |c| c * acc)).collect();
    }
    out
}

/// Transversal XOR cloning unitary.
pub fn bcqo_unitary(layout: PopulationLayout) -> CMatrix {
    crate::linalg::permutation_matrix(&super::cloning::bcqo_permutation(layout))
}

/// Crossover unitary `U_swap`.
pub fn crossover_unitary(layout: PopulationLayout) -> CMatrix {
    let pairs = super::crossover::crossover_qubit_pairs(layout);
    crate::linalg::permutation_matrix(&super::crossover::qubit_swap_permutation(layout, &pairs))
}

/// `D_mu = sqrt(p_mu) U_mu` over all Pauli strings, with
/// `p_mu = (p/3)^w (1-p)^(N-w)` for weight `w`.
pub fn mutation_kraus(layout: PopulationLayout, p: f64) -> Vec<CMatrix> {
    let nq = layout.total_qubits();
    let paulis = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    (0..4usize.pow(nq as u32))
        .map(|code| {
            let gates: Vec<Pauli> = (0..nq).map(|q| paulis[(code >> (2 * (nq - 1 - q))) & 3]).collect();
            let s = PauliString::new(gates);
            let w = s.weight() as i32;
            let prob = (p / 3.0).powi(w) * (1.0 - p).powi(nq as i32 - w);
            s.matrix() * C64::new(prob.sqrt(), 0.0)
        })
        .collect()
}

//! Bubble-sort selection network and the sorting channel.
//!
//! The network has `n` layers. Even layers (0-based) compare register pairs
//! `(0,1), (2,3), ...`; odd layers compare `(1,2), (3,4), ...`; `n(n-1)/2`
//! comparisons in total. A comparison swaps, and records instruction bit 1, iff the
//! left individual has strictly higher energy than the right one. Equal energies
//! never swap, and an ascending sequence yields the all-zero instruction string.

use std::sync::Arc;

use crate::hamiltonian::ProblemHamiltonian;
use crate::layout::PopulationLayout;
use crate::linalg::{conjugate, CMatrix, Subsystem, ZERO};

/// Register pairs compared by the network, in schedule order.
pub fn comparator_schedule(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for layer in 0..n {
        let mut left = layer % 2;
        while left + 1 < n {
            out.push((left, left + 1));
            left += 2;
        }
    }
    out
}

/// Classical trace of the network for every population index sequence.
#[derive(Debug, Clone)]
pub struct SortTable {
    layout: PopulationLayout,
    comparisons: usize,
    sorted: Vec<usize>,
    instructions: Vec<u64>,
    groups: Vec<Vec<usize>>,
}

impl SortTable {
    /// Runs the network on all `d^n` index sequences, comparing energies of `h`.
    pub fn build(layout: PopulationLayout, h: &ProblemHamiltonian) -> Self {
        let schedule = comparator_schedule(layout.registers());
        let comparisons = schedule.len();
        let dim = layout.dim();
        let mut sorted = Vec::with_capacity(dim);
        let mut instructions = Vec::with_capacity(dim);
        for k in 0..dim {
            let mut seq = layout.digits(k);
            let mut sigma = 0u64;
            for &(a, b) in &schedule {
                sigma <<= 1;
                if h.index_energy_order(seq[a], seq[b]).is_gt() {
                    seq.swap(a, b);
                    sigma |= 1;
                }
            }
            sorted.push(layout.index_of(&seq));
            instructions.push(sigma);
        }

        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by_key(|&k| (instructions[k], k));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for k in order {
            match groups.last_mut() {
                Some(g) if instructions[g[0]] == instructions[k] => g.push(k),
                _ => groups.push(vec![k]),
            }
        }
        Self { layout, comparisons, sorted, instructions, groups }
    }

    pub fn layout(&self) -> PopulationLayout {
        self.layout
    }

    /// `n(n-1)/2`.
    pub fn comparisons(&self) -> usize {
        self.comparisons
    }

    /// Population index of `s(k)`.
    pub fn sorted_index(&self, k: usize) -> usize {
        self.sorted[k]
    }

    pub fn sorted_sequence(&self, k: usize) -> Vec<usize> {
        self.layout.digits(self.sorted[k])
    }

    /// `sigma(k)` packed with the first comparison as most significant bit.
    pub fn instruction(&self, k: usize) -> u64 {
        self.instructions[k]
    }

    /// `sigma(k)` as a string of `0`/`1` in schedule order.
    pub fn instruction_string(&self, k: usize) -> String {
        format!("{:0width$b}", self.instructions[k], width = self.comparisons)
    }

    /// Index sequences grouped by equal instruction string.
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// `rho'[s(k), s(k')] += rho[k, k']` whenever `sigma(k) = sigma(k')`, in the
    /// problem basis.
    pub fn scatter(&self, m: &CMatrix) -> CMatrix {
        let dim = m.nrows();
        let mut out = CMatrix::zeros(dim, dim);
        let src = m.as_slice();
        let dst = out.as_mut_slice();
        for group in &self.groups {
            for &kp in group {
                let col = &src[kp * dim..(kp + 1) * dim];
                let base = self.sorted[kp] * dim;
                for &k in group {
                    let v = col[k];
                    if v != ZERO {
                        dst[base + self.sorted[k]] += v;
                    }
                }
            }
        }
        out
    }
}

/// Sorting channel: rotate to the problem basis, scatter, rotate back.
#[derive(Debug, Clone)]
pub(crate) struct SortOp {
    table: Arc<SortTable>,
    rotation: Option<Rotation>,
}

#[derive(Debug, Clone)]
struct Rotation {
    registers: Vec<Subsystem>,
    to_problem: CMatrix,
    to_computational: CMatrix,
}

impl SortOp {
    pub(crate) fn new(layout: PopulationLayout, h: &ProblemHamiltonian) -> Self {
        let table = Arc::new(SortTable::build(layout, h));
        let rotation = (!h.is_computational()).then(|| Rotation {
            registers: (0..layout.registers())
                .map(|r| Subsystem::new(layout.total_qubits(), &layout.qubits_of(&[r])))
                .collect(),
            to_problem: h.basis().adjoint(),
            to_computational: h.basis().clone(),
        });
        Self { table, rotation }
    }

    pub(crate) fn apply(&self, mut m: CMatrix) -> CMatrix {
        match &self.rotation {
            None => self.table.scatter(&m),
            Some(rot) => {
                for sub in &rot.registers {
                    conjugate(&mut m, sub, &rot.to_problem);
                }
                let mut out = self.table.scatter(&m);
                for sub in &rot.registers {
                    conjugate(&mut out, sub, &rot.to_computational);
                }
                out
            }
        }
    }
}

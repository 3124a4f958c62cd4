//! Register layout of a population.
//!
//! Ordering convention, fixed for the whole crate: the population basis index of
//! `|k_1 k_2 ... k_n>` is `k_1 d^(n-1) + k_2 d^(n-2) + ... + k_n`, so register 0
//! occupies the most significant digits. Inside a register, qubit 0 is the most
//! significant bit. Qubits are numbered globally from 0 (first qubit of register 0)
//! to `n c - 1` (last qubit of the last register). Registers and qubits are
//! 0-based throughout the API.

use serde::{Deserialize, Serialize};

use crate::error::{QgaError, Result};

/// Largest population (in qubits) that the dense simulator accepts.
pub const MAX_QUBITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PopulationLayout {
    n: usize,
    c: usize,
}

impl PopulationLayout {
    /// `n` individuals of `c` qubits each. `n` must be a positive multiple of four.
    ///
    /// Odd `c` is admitted so that small test populations (`c = 1`) can be built;
    /// the crossover then swaps `floor(c / 2)` qubits.
    pub fn new(n: usize, c: usize) -> Result<Self> {
        if n == 0 || !n.is_multiple_of(4) {
            return Err(QgaError::Config(format!(
                "number of registers must be a positive multiple of 4, got {n}"
            )));
        }
        if c == 0 {
            return Err(QgaError::Config("registers need at least one qubit".into()));
        }
        if n * c > MAX_QUBITS {
            return Err(QgaError::Size(format!(
                "population of {} qubits exceeds the dense simulator limit of {MAX_QUBITS}",
                n * c
            )));
        }
        Ok(Self { n, c })
    }

    /// Four registers of two qubits each.
    pub fn standard() -> Self {
        Self { n: 4, c: 2 }
    }

    pub fn registers(&self) -> usize {
        self.n
    }

    pub fn qubits_per_register(&self) -> usize {
        self.c
    }

    /// Dimension of one individual, `2^c`.
    pub fn individual_dim(&self) -> usize {
        1 << self.c
    }

    /// Dimension of the population space, `2^(n c)`.
    pub fn dim(&self) -> usize {
        1 << (self.n * self.c)
    }

    pub fn total_qubits(&self) -> usize {
        self.n * self.c
    }

    /// Number of surviving (upper) registers, `n / 2`.
    pub fn upper(&self) -> usize {
        self.n / 2
    }

    /// Global qubit indices of register `r`.
    pub fn register_qubits(&self, r: usize) -> std::ops::Range<usize> {
        r * self.c..(r + 1) * self.c
    }

    /// Global qubit indices of a set of registers, in the given order.
    pub fn qubits_of(&self, registers: &[usize]) -> Vec<usize> {
        registers.iter().flat_map(|&r| self.register_qubits(r)).collect()
    }

    pub fn check_register(&self, r: usize) -> Result<()> {
        if r >= self.n {
            Err(QgaError::Range(format!(
                "register index {r} out of range for {} registers",
                self.n
            )))
        } else {
            Ok(())
        }
    }

    /// Register digits of a population basis index, most significant first.
    pub fn digits(&self, index: usize) -> Vec<usize> {
        let d = self.individual_dim();
        let mut out = vec![0; self.n];
        let mut rest = index;
        for slot in out.iter_mut().rev() {
            *slot = rest % d;
            rest /= d;
        }
        out
    }

    /// Inverse of [`digits`](Self::digits).
    pub fn index_of(&self, digits: &[usize]) -> usize {
        let d = self.individual_dim();
        digits.iter().fold(0, |acc, &k| acc * d + k)
    }
}

impl std::fmt::Display for PopulationLayout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n={}, c={}", self.n, self.c)
    }
}

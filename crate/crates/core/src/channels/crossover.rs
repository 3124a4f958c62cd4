//! Crossover: exchange the second half of consecutive lower registers.

use crate::layout::PopulationLayout;

/// Qubit pairs exchanged by the crossover: for `i = 0..n/4`, the last `floor(c/2)`
/// qubits of register `n/2 + 2i` with those of register `n/2 + 2i + 1`.
pub fn crossover_qubit_pairs(layout: PopulationLayout) -> Vec<(usize, usize)> {
    let c = layout.qubits_per_register();
    let half = layout.upper();
    let swapped = c / 2;
    let mut pairs = Vec::new();
    for i in 0..layout.registers() / 4 {
        let a = layout.register_qubits(half + 2 * i);
        let b = layout.register_qubits(half + 2 * i + 1);
        for j in c - swapped..c {
            pairs.push((a.start + j, b.start + j));
        }
    }
    pairs
}

/// Basis permutation implementing a product of qubit swaps.
pub(crate) fn qubit_swap_permutation(layout: PopulationLayout, pairs: &[(usize, usize)]) -> Vec<usize> {
    let n = layout.total_qubits();
    (0..layout.dim())
        .map(|x| {
            let mut y = x;
            for &(a, b) in pairs {
                let sa = n - 1 - a;
                let sb = n - 1 - b;
                let bit_a = (y >> sa) & 1;
                let bit_b = (y >> sb) & 1;
                if bit_a != bit_b {
                    y ^= (1 << sa) | (1 << sb);
                }
            }
            y
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_layout_swaps_last_qubit_of_registers_three_and_four() {
        let layout = PopulationLayout::standard();
        assert_eq!(crossover_qubit_pairs(layout), vec![(5, 7)]);
        let perm = qubit_swap_permutation(layout, &crossover_qubit_pairs(layout));
        // |ab>_3 |ce>_4 -> |ae>_3 |cb>_4, registers 1 and 2 untouched.
        for upper in 0..16 {
            for (a, b, c, e) in bit_quads(2) {
                let x = (upper << 4) | (a << 3) | (b << 2) | (c << 1) | e;
                let y = (upper << 4) | (a << 3) | (e << 2) | (c << 1) | b;
                assert_eq!(perm[x], y);
            }
        }
    }

    fn bit_quads(base: usize) -> Vec<(usize, usize, usize, usize)> {
        let mut v = Vec::new();
        for a in 0..base {
            for b in 0..base {
                for c in 0..base {
                    for e in 0..base {
                        v.push((a, b, c, e));
                    }
                }
            }
        }
        v
    }

    #[test]
    fn single_qubit_registers_have_nothing_to_swap() {
        let layout = PopulationLayout::new(4, 1).unwrap();
        assert!(crossover_qubit_pairs(layout).is_empty());
    }

    #[test]
    fn permutation_is_an_involution() {
        let layout = PopulationLayout::new(8, 1).unwrap();
        let perm = qubit_swap_permutation(layout, &[(4, 5), (6, 7)]);
        for x in 0..layout.dim() {
            assert_eq!(perm[perm[x]], x);
        }
    }
}

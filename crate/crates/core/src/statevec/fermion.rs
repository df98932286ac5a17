//! Jordan-Wigner ladder operators acting on computational basis indices.

use std::collections::HashMap;

use nalgebra::DMatrix;

pub const UP: usize = 0;
pub const DOWN: usize = 1;

/// Qubit index of spatial orbital `orb` with spin `spin` (interleaved ordering).
#[inline]
pub fn spin_orbital(orb: usize, spin: usize) -> usize {
    2 * orb + spin
}

#[inline]
fn mask(n_qubits: usize, q: usize) -> usize {
    1 << (n_qubits - 1 - q)
}

#[inline]
pub fn is_occupied(n_qubits: usize, index: usize, q: usize) -> bool {
    index & mask(n_qubits, q) != 0
}

/// JW string sign `(-1)^(sum_{q' < q} n_q')`.
#[inline]
fn parity_sign(n_qubits: usize, index: usize, q: usize) -> f64 {
    let before = index >> (n_qubits - q);
    if before.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `c_q |index> = sign |new>` or `None` when it annihilates the state.
#[inline]
pub fn annihilate(n_qubits: usize, q: usize, index: usize) -> Option<(f64, usize)> {
    if is_occupied(n_qubits, index, q) {
        Some((parity_sign(n_qubits, index, q), index ^ mask(n_qubits, q)))
    } else {
        None
    }
}

#[inline]
pub fn create(n_qubits: usize, q: usize, index: usize) -> Option<(f64, usize)> {
    if is_occupied(n_qubits, index, q) {
        None
    } else {
        Some((parity_sign(n_qubits, index, q), index | mask(n_qubits, q)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ladder {
    pub qubit: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn cre(qubit: usize) -> Self {
        Self { qubit, dagger: true }
    }

    pub fn ann(qubit: usize) -> Self {
        Self { qubit, dagger: false }
    }
}

/// Applies an operator product written left to right (the rightmost factor acts first).
pub fn apply_string(n_qubits: usize, ops: &[Ladder], index: usize) -> Option<(f64, usize)> {
    let mut sign = 1.0;
    let mut cur = index;
    for op in ops.iter().rev() {
        let (s, next) = if op.dagger {
            create(n_qubits, op.qubit, cur)?
        } else {
            annihilate(n_qubits, op.qubit, cur)?
        };
        sign *= s;
        cur = next;
    }
    Some((sign, cur))
}

pub fn basis_index(n_qubits: usize, occupied: &[usize]) -> usize {
    occupied.iter().fold(0, |acc, &q| acc | mask(n_qubits, q))
}

/// `E_pq |index>` for the spin-summed excitation `sum_s c+_{p s} c_{q s}`; up to two terms.
pub fn apply_e(n_orb: usize, p: usize, q: usize, index: usize) -> [Option<(f64, usize)>; 2] {
    let n_qubits = 2 * n_orb;
    let one = |spin| {
        let ops = [Ladder::cre(spin_orbital(p, spin)), Ladder::ann(spin_orbital(q, spin))];
        apply_string(n_qubits, &ops, index)
    };
    [one(UP), one(DOWN)]
}

/// Number of up and down electrons in a basis index.
pub fn spin_counts(n_orb: usize, index: usize) -> (usize, usize) {
    let n_qubits = 2 * n_orb;
    let mut up = 0;
    let mut down = 0;
    for p in 0..n_orb {
        if is_occupied(n_qubits, index, spin_orbital(p, UP)) {
            up += 1;
        }
        if is_occupied(n_qubits, index, spin_orbital(p, DOWN)) {
            down += 1;
        }
    }
    (up, down)
}

/// Basis indices with the given spin populations, ascending.
pub fn sector_indices(n_orb: usize, n_up: usize, n_down: usize) -> Vec<usize> {
    (0..1usize << (2 * n_orb))
        .filter(|&i| spin_counts(n_orb, i) == (n_up, n_down))
        .collect()
}

/// `S^2` restricted to the basis `indices` (closed under spin flips within the sector).
pub fn spin_squared(n_orb: usize, indices: &[usize]) -> DMatrix<f64> {
    let n_qubits = 2 * n_orb;
    let pos: HashMap<usize, usize> = indices.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let flip = |x: usize, from: usize, to: usize| -> Vec<(f64, usize)> {
        (0..n_orb)
            .filter_map(|p| {
                let ops = [Ladder::cre(spin_orbital(p, to)), Ladder::ann(spin_orbital(p, from))];
                apply_string(n_qubits, &ops, x)
            })
            .collect()
    };
    let mut m = DMatrix::zeros(indices.len(), indices.len());
    for (col, &x) in indices.iter().enumerate() {
        let (up, down) = spin_counts(n_orb, x);
        let sz = (up as f64 - down as f64) / 2.0;
        m[(col, col)] += sz * sz + sz;
        // S- S+
        for (s1, y) in flip(x, DOWN, UP) {
            for (s2, z) in flip(y, UP, DOWN) {
                if let Some(&row) = pos.get(&z) {
                    m[(row, col)] += s1 * s2;
                }
            }
        }
    }
    m
}

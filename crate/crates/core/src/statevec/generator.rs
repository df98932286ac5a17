use nalgebra::DMatrix;

use super::fermion::{apply_string, Ladder};
use super::Statevector;
use crate::error::{invalid, Error, Result};

/// `A|from> = sign |to>` and `A|to> = -sign |from>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    pub from: usize,
    pub to: usize,
    pub sign: f64,
}

/// A set of rotations on pairwise disjoint planes, scaled by `coeff`.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationTerm {
    pub coeff: f64,
    pub pairs: Vec<Rotation>,
}

impl RotationTerm {
    fn rotate(&self, amps: &mut [num_complex::Complex64], theta: f64) {
        let (s, c) = (self.coeff * theta).sin_cos();
        for r in &self.pairs {
            let x = amps[r.from];
            let y = amps[r.to];
            amps[r.from] = x * c - y * (r.sign * s);
            amps[r.to] = x * (r.sign * s) + y * c;
        }
    }
}

/// Real antisymmetric generator `A = sum_i c_i A_i` whose terms commute, so that
/// `exp(theta A)` is the product of the exact plane rotations of each term.
#[derive(Clone, Debug, PartialEq)]
pub struct RealGenerator {
    n_qubits: usize,
    label: String,
    terms: Vec<RotationTerm>,
}

impl RealGenerator {
    pub fn new(n_qubits: usize, label: impl Into<String>, terms: Vec<RotationTerm>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        for term in &terms {
            let mut seen = vec![false; dim];
            for r in &term.pairs {
                if r.from >= dim || r.to >= dim {
                    return Err(invalid("rotation index outside the register"));
                }
                if r.from == r.to || seen[r.from] || seen[r.to] {
                    return Err(invalid("rotation planes within a term must be disjoint"));
                }
                seen[r.from] = true;
                seen[r.to] = true;
            }
        }
        Ok(Self {
            n_qubits,
            label: label.into(),
            terms,
        })
    }

    /// Rotation in the plane of two basis states: `|to><from| - |from><to|`.
    pub fn plane(n_qubits: usize, from: usize, to: usize) -> Result<Self> {
        let term = RotationTerm {
            coeff: 1.0,
            pairs: vec![Rotation { from, to, sign: 1.0 }],
        };
        Self::new(n_qubits, format!("plane({from},{to})"), vec![term])
    }

    /// `sum_i c_i (T_i - T_i^+)` for fermionic excitation strings `T_i`
    /// (operator products written left to right). The strings must commute
    /// with each other and must not create and annihilate the same mode.
    pub fn from_excitations(n_qubits: usize, label: impl Into<String>, strings: &[(f64, Vec<Ladder>)]) -> Result<Self> {
        let mut terms = Vec::with_capacity(strings.len());
        for (coeff, ops) in strings {
            let created: Vec<usize> = ops.iter().filter(|o| o.dagger).map(|o| o.qubit).collect();
            if ops.iter().any(|o| !o.dagger && created.contains(&o.qubit)) {
                return Err(invalid("excitation creates and annihilates the same mode"));
            }
            let pairs = (0..1usize << n_qubits)
                .filter_map(|x| apply_string(n_qubits, ops, x).map(|(sign, to)| Rotation { from: x, to, sign }))
                .collect();
            terms.push(RotationTerm { coeff: *coeff, pairs });
        }
        Self::new(n_qubits, label, terms)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn terms(&self) -> &[RotationTerm] {
        &self.terms
    }

    /// Multiplies every coefficient so that `sum |c_i| = 1`, the spectral norm
    /// when all terms can be simultaneously active.
    pub fn normalized(mut self) -> Self {
        let total: f64 = self.terms.iter().map(|t| t.coeff.abs()).sum();
        if total > 0.0 {
            for t in &mut self.terms {
                t.coeff /= total;
            }
        }
        self
    }

    /// True when `A|psi> = 0` for the given basis state.
    pub fn annihilates_basis(&self, index: usize) -> bool {
        self.terms
            .iter()
            .all(|t| t.pairs.iter().all(|r| r.from != index && r.to != index))
    }

    /// `A |psi>`.
    pub fn apply(&self, state: &Statevector) -> Statevector {
        let mut out = Statevector::zeros(state.n_qubits());
        let src = state.amplitudes();
        let dst = out.amplitudes_mut();
        for t in &self.terms {
            for r in &t.pairs {
                let f = t.coeff * r.sign;
                dst[r.to] += src[r.from] * f;
                dst[r.from] -= src[r.to] * f;
            }
        }
        out
    }

    /// In-place `exp(theta A) |psi>`.
    pub fn rotate(&self, state: &mut Statevector, theta: f64) {
        if theta == 0.0 {
            return;
        }
        let amps = state.amplitudes_mut();
        for t in &self.terms {
            t.rotate(amps, theta);
        }
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for t in &self.terms {
            for r in &t.pairs {
                m[(r.to, r.from)] += t.coeff * r.sign;
                m[(r.from, r.to)] -= t.coeff * r.sign;
            }
        }
        m
    }
}

/// `exp(theta A) |psi>` as a new state.
pub fn apply_real_rotation(state: &Statevector, generator: &RealGenerator, theta: f64) -> Result<Statevector> {
    if state.n_qubits() != generator.n_qubits() {
        return Err(Error::Dimension {
            expected: generator.n_qubits(),
            got: state.n_qubits(),
        });
    }
    if !theta.is_finite() {
        return Err(invalid("rotation angle must be finite"));
    }
    let mut out = state.clone();
    generator.rotate(&mut out, theta);
    Ok(out)
}

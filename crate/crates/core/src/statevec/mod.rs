//! Dense statevector simulation of real-rotation circuits over Jordan-Wigner
//! encoded spin orbitals.
//!
//! Qubit `q` corresponds to bit `n_qubits - 1 - q` of a basis index, so the
//! ket `|1100>` (qubits 0 and 1 occupied) is index 12. Spin orbitals are
//! interleaved: spatial orbital `p` owns qubits `2p` (up) and `2p + 1` (down).

mod ansatz;
pub mod fermion;
mod generator;
mod rdm;

pub use ansatz::{
    build_direct_ansatz, build_npf_ansatz, build_uccd_ansatz, hartree_fock_state, prepare_ansatz, AnsatzCircuit,
    StateDerivatives,
};
pub use generator::{apply_real_rotation, RealGenerator, Rotation, RotationTerm};
pub use rdm::{compute_rdms, rdm_theta_derivatives, transition_rdms, RdmPair};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn zeros(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            amps: vec![Complex64::new(0.0, 0.0); 1 << n_qubits],
        }
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << n_qubits {
            return Err(Error::Dimension {
                expected: 1 << n_qubits,
                got: amps.len(),
            });
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn from_real(n_qubits: usize, values: &[f64]) -> Result<Self> {
        Self::from_amplitudes(n_qubits, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_imag(&self) -> f64 {
        self.amps.iter().fold(0.0_f64, |m, a| m.max(a.im.abs()))
    }

    pub fn real_part(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.amps.iter().map(|a| a.re))
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.amps {
            *a *= s;
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Statevector) {
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += b * s;
        }
    }

    /// `M |self>` for a real dense operator.
    pub fn apply_real_matrix(&self, m: &DMatrix<f64>) -> Statevector {
        let dim = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (j, a) in self.amps.iter().enumerate() {
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            let col = m.column(j);
            for (o, &v) in out.iter_mut().zip(col.iter()) {
                *o += a * v;
            }
        }
        Statevector {
            n_qubits: self.n_qubits,
            amps: out,
        }
    }

    /// `Re <self| M |self>`.
    pub fn expectation(&self, m: &DMatrix<f64>) -> f64 {
        self.inner(&self.apply_real_matrix(m)).re
    }

    /// Expectation of the total particle number.
    pub fn particle_number(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * i.count_ones() as f64)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_state_is_normalized_and_real() {
        let s = Statevector::basis(4, 12);
        assert_eq!(s.dim(), 16);
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert_eq!(s.max_imag(), 0.0);
        assert_eq!(s.particle_number(), 2.0);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let err = Statevector::from_real(2, &[1.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Dimension { expected: 4, got: 3 }));
    }

    #[test]
    fn matrix_application_matches_dense_product() {
        let s = Statevector::from_real(1, &[0.6, 0.8]).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let out = s.apply_real_matrix(&m).real_part();
        assert!((out[0] - 2.2).abs() < 1e-15);
        assert!((out[1] - 5.0).abs() < 1e-15);
    }
}

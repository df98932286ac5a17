use nalgebra::DMatrix;

use super::fermion::apply_e;
use super::{AnsatzCircuit, Statevector};
use crate::error::{Error, Result};
use crate::linalg::idx4;

/// Spin-summed 1- and 2-RDMs, `gamma_pq = <E_pq>` and
/// `Gamma_pqrs = <E_pq E_rs> - delta_qr gamma_ps` (chemists' order).
#[derive(Clone, Debug, PartialEq)]
pub struct RdmPair {
    pub n: usize,
    pub gamma: DMatrix<f64>,
    pub two: Vec<f64>,
}

impl RdmPair {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            gamma: DMatrix::zeros(n, n),
            two: vec![0.0; n.pow(4)],
        }
    }

    #[inline]
    pub fn g2(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.two[idx4(self.n, p, q, r, s)]
    }

    pub fn add_assign(&mut self, other: &RdmPair) {
        self.gamma += &other.gamma;
        for (a, b) in self.two.iter_mut().zip(&other.two) {
            *a += b;
        }
    }

    pub fn trace(&self) -> f64 {
        self.gamma.trace()
    }

    /// Largest violation of the symmetry, trace and partial-trace rules for `eta` electrons.
    pub fn invariant_violation(&self, eta: f64) -> f64 {
        let n = self.n;
        let mut worst = (self.trace() - eta).abs();
        for p in 0..n {
            for q in 0..n {
                worst = worst.max((self.gamma[(p, q)] - self.gamma[(q, p)]).abs());
                let partial: f64 = (0..n).map(|r| self.g2(p, q, r, r)).sum();
                worst = worst.max((partial - (eta - 1.0) * self.gamma[(p, q)]).abs());
                for r in 0..n {
                    for s in 0..n {
                        let v = self.g2(p, q, r, s);
                        worst = worst.max((v - self.g2(r, s, p, q)).abs());
                        worst = worst.max((v - self.g2(q, p, s, r)).abs());
                    }
                }
            }
        }
        worst
    }
}

fn n_orbitals(state: &Statevector) -> Result<usize> {
    if !state.n_qubits().is_multiple_of(2) {
        return Err(Error::Invalid(
            "RDMs need an even number of qubits (two per spatial orbital)".into(),
        ));
    }
    Ok(state.n_qubits() / 2)
}

/// `E_pq |v>` for all `(p, q)`, stored at `p * n + q`.
fn excited_vectors(v: &Statevector, n: usize) -> Vec<Statevector> {
    let mut out = vec![Statevector::zeros(v.n_qubits()); n * n];
    for (x, a) in v.amplitudes().iter().enumerate() {
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        for p in 0..n {
            for q in 0..n {
                for (sign, y) in apply_e(n, p, q, x).into_iter().flatten() {
                    out[p * n + q].amplitudes_mut()[y] += a * sign;
                }
            }
        }
    }
    out
}

/// Real parts of `<bra| E_pq |ket>` and `<bra| E_pq E_rs - delta_qr E_ps |ket>`.
pub fn transition_rdms(bra: &Statevector, ket: &Statevector) -> Result<RdmPair> {
    if bra.n_qubits() != ket.n_qubits() {
        return Err(Error::Dimension {
            expected: bra.n_qubits(),
            got: ket.n_qubits(),
        });
    }
    let n = n_orbitals(ket)?;
    let ek = excited_vectors(ket, n);
    let eb = excited_vectors(bra, n);
    let mut out = RdmPair::zeros(n);
    for p in 0..n {
        for q in 0..n {
            out.gamma[(p, q)] = bra.inner(&ek[p * n + q]).re;
        }
    }
    for p in 0..n {
        for q in 0..n {
            // <bra| E_pq = (E_qp |bra>)^+
            let left = &eb[q * n + p];
            for r in 0..n {
                for s in 0..n {
                    let mut v = left.inner(&ek[r * n + s]).re;
                    if q == r {
                        v -= out.gamma[(p, s)];
                    }
                    out.two[idx4(n, p, q, r, s)] = v;
                }
            }
        }
    }
    Ok(out)
}

pub fn compute_rdms(state: &Statevector) -> Result<RdmPair> {
    transition_rdms(state, state)
}

/// `d gamma / d theta_j` and `d Gamma / d theta_j` from the exact derivative states.
pub fn rdm_theta_derivatives(ansatz: &AnsatzCircuit, theta: &[f64]) -> Result<Vec<RdmPair>> {
    let (psi, first) = ansatz.first_derivatives(theta)?;
    first
        .iter()
        .map(|d| {
            let mut a = transition_rdms(d, &psi)?;
            a.add_assign(&transition_rdms(&psi, d)?);
            Ok(a)
        })
        .collect()
}

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::IntegralBundle;
use crate::error::{invalid, Error, Result};
use crate::linalg::{idx4, orthogonality_defect, sorted_symmetric_eigen, transform_eri};
use crate::orbital::lowdin_inverse_sqrt;
use crate::statevec::fermion::{apply_e, sector_indices};
use crate::statevec::{RdmPair, Statevector};

/// Largest active space whose dense operator is assembled (`4^7` basis states).
pub const MAX_DENSE_ACTIVE: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSpaceSpec {
    pub n_core: usize,
    pub n_active: usize,
    pub n_virtual: usize,
    pub n_active_electrons: usize,
}

impl ActiveSpaceSpec {
    pub fn new(n_core: usize, n_active: usize, n_virtual: usize, n_active_electrons: usize) -> Self {
        Self {
            n_core,
            n_active,
            n_virtual,
            n_active_electrons,
        }
    }

    pub fn n_orb(&self) -> usize {
        self.n_core + self.n_active + self.n_virtual
    }

    /// Core plus active orbitals, the only ones with non-zero density.
    pub fn n_occ(&self) -> usize {
        self.n_core + self.n_active
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_active
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_active == 0 {
            return Err(invalid("active space must contain at least one orbital"));
        }
        if self.n_active_electrons > 2 * self.n_active {
            return Err(invalid(format!(
                "{} electrons do not fit in {} active orbitals",
                self.n_active_electrons, self.n_active
            )));
        }
        Ok(())
    }

    pub fn validate_for(&self, n_orb: usize) -> Result<()> {
        self.validate()?;
        if self.n_orb() != n_orb {
            return Err(invalid(format!(
                "active space covers {} orbitals but the bundle has {n_orb}",
                self.n_orb()
            )));
        }
        Ok(())
    }

    /// `(n_up, n_down)` of the spin-restricted closed-shell sector.
    pub fn spin_sector(&self) -> Result<(usize, usize)> {
        self.validate()?;
        if self.n_active_electrons % 2 == 1 {
            return Err(Error::Unsupported(
                "odd active electron count in spin-restricted mode".into(),
            ));
        }
        let half = self.n_active_electrons / 2;
        Ok((half, half))
    }
}

/// One- and two-electron integrals over orthonormal molecular orbitals.
#[derive(Clone, Debug)]
pub struct MoIntegrals {
    pub n: usize,
    pub e_nuc: f64,
    pub h: DMatrix<f64>,
    pub g: Vec<f64>,
}

impl MoIntegrals {
    /// Transforms AO integrals to the orbitals `AO * S^{-1/2} * C`, where `C` is
    /// expressed over the Lowdin-orthogonalized AO basis.
    pub fn from_bundle(b: &IntegralBundle, c: &DMatrix<f64>) -> Result<Self> {
        let n = b.n_orb;
        if c.shape() != (n, n) {
            return Err(Error::Dimension {
                expected: n,
                got: c.nrows(),
            });
        }
        let defect = orthogonality_defect(c);
        if defect > 1e-8 {
            return Err(Error::NonOrthogonal(defect));
        }
        let u = match &b.s {
            Some(s) => lowdin_inverse_sqrt(s)? * c,
            None => c.clone(),
        };
        Ok(Self {
            n,
            e_nuc: b.e_nuc_core,
            h: u.transpose() * &b.h * &u,
            g: transform_eri(&b.g, n, &u),
        })
    }

    #[inline]
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.g[idx4(self.n, p, q, r, s)]
    }

    /// Energy from RDMs spanning the first `rdm.n` orbitals.
    pub fn energy(&self, rdm: &RdmPair) -> f64 {
        let m = rdm.n;
        let mut e = self.e_nuc;
        for p in 0..m {
            for q in 0..m {
                e += self.h[(p, q)] * rdm.gamma[(p, q)];
                for r in 0..m {
                    for s in 0..m {
                        e += 0.5 * self.eri(p, q, r, s) * rdm.g2(p, q, r, s);
                    }
                }
            }
        }
        e
    }
}

/// Active-space Hamiltonian with doubly occupied core orbitals folded in.
#[derive(Clone, Debug)]
pub struct ActiveHamiltonian {
    pub n: usize,
    pub e_const: f64,
    pub h_eff: DMatrix<f64>,
    pub g_act: Vec<f64>,
    dense: DMatrix<f64>,
}

impl ActiveHamiltonian {
    pub fn new(e_const: f64, h_eff: DMatrix<f64>, g_act: Vec<f64>) -> Result<Self> {
        let n = h_eff.nrows();
        if h_eff.ncols() != n || g_act.len() != n.pow(4) {
            return Err(invalid("active integrals have inconsistent shapes"));
        }
        if n > MAX_DENSE_ACTIVE {
            return Err(Error::Unsupported(format!(
                "dense active operator limited to {MAX_DENSE_ACTIVE} orbitals"
            )));
        }
        let dense = dense_operator(&h_eff, &g_act);
        Ok(Self {
            n,
            e_const,
            h_eff,
            g_act,
            dense,
        })
    }

    pub fn from_mo(mo: &MoIntegrals, spec: &ActiveSpaceSpec) -> Result<Self> {
        spec.validate_for(mo.n)?;
        let nc = spec.n_core;
        let na = spec.n_active;
        let mut e_const = mo.e_nuc;
        for i in 0..nc {
            e_const += 2.0 * mo.h[(i, i)];
            for j in 0..nc {
                e_const += 2.0 * mo.eri(i, i, j, j) - mo.eri(i, j, j, i);
            }
        }
        let h_eff = DMatrix::from_fn(na, na, |t, u| {
            let (p, q) = (nc + t, nc + u);
            let mut v = mo.h[(p, q)];
            for i in 0..nc {
                v += 2.0 * mo.eri(p, q, i, i) - mo.eri(p, i, i, q);
            }
            v
        });
        let mut g_act = vec![0.0; na.pow(4)];
        for t in 0..na {
            for u in 0..na {
                for v in 0..na {
                    for w in 0..na {
                        g_act[idx4(na, t, u, v, w)] = mo.eri(nc + t, nc + u, nc + v, nc + w);
                    }
                }
            }
        }
        Self::new(e_const, h_eff, g_act)
    }

    /// Real symmetric operator on the `4^n` Fock space, constant excluded.
    pub fn dense(&self) -> &DMatrix<f64> {
        &self.dense
    }

    #[inline]
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.g_act[idx4(self.n, p, q, r, s)]
    }

    pub fn energy_from_rdms(&self, rdm: &RdmPair) -> f64 {
        let n = self.n;
        let mut e = self.e_const;
        for p in 0..n {
            for q in 0..n {
                e += self.h_eff[(p, q)] * rdm.gamma[(p, q)];
                for r in 0..n {
                    for s in 0..n {
                        e += 0.5 * self.eri(p, q, r, s) * rdm.g2(p, q, r, s);
                    }
                }
            }
        }
        e
    }

    /// `<psi|H|psi> + e_const`.
    pub fn energy(&self, state: &Statevector) -> f64 {
        self.e_const + state.expectation(&self.dense)
    }

    /// Eigenvalues and eigenvectors (ascending) within a fixed spin sector,
    /// embedded back into the full register.
    pub fn sector_eigen(&self, n_up: usize, n_down: usize) -> (Vec<f64>, Vec<Statevector>) {
        sector_eigen(&self.dense, self.n, n_up, n_down, self.e_const)
    }

    /// One-norm of the integral coefficients: `sum |h_pq| + sum |g_pqrs / 2|`.
    pub fn one_norm(&self) -> f64 {
        self.h_eff.iter().map(|v| v.abs()).sum::<f64>() + self.g_act.iter().map(|v| (0.5 * v).abs()).sum::<f64>()
    }
}

pub(crate) fn sector_eigen(
    dense: &DMatrix<f64>,
    n_orb: usize,
    n_up: usize,
    n_down: usize,
    shift: f64,
) -> (Vec<f64>, Vec<Statevector>) {
    let idx = sector_indices(n_orb, n_up, n_down);
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| dense[(idx[i], idx[j])]);
    let (vals, vecs) = sorted_symmetric_eigen(&sub);
    let n_qubits = 2 * n_orb;
    let states = (0..idx.len())
        .map(|k| {
            let mut full = vec![0.0; 1 << n_qubits];
            for (i, &x) in idx.iter().enumerate() {
                full[x] = vecs[(i, k)];
            }
            Statevector::from_real(n_qubits, &full).expect("sector embedding")
        })
        .collect();
    (vals.iter().map(|v| v + shift).collect(), states)
}

/// `sum h_pq E_pq + 1/2 sum g_pqrs (E_pq E_rs - delta_qr E_ps)` as a dense matrix.
fn dense_operator(h: &DMatrix<f64>, g: &[f64]) -> DMatrix<f64> {
    let n = h.nrows();
    let dim = 1usize << (2 * n);
    // fold the -delta_qr E_ps term into the one-body part
    let h1 = DMatrix::from_fn(n, n, |p, s| {
        h[(p, s)] - 0.5 * (0..n).map(|q| g[idx4(n, p, q, q, s)]).sum::<f64>()
    });
    let mut m = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        for p in 0..n {
            for q in 0..n {
                let c = h1[(p, q)];
                if c != 0.0 {
                    for (s1, y) in apply_e(n, p, q, x).into_iter().flatten() {
                        m[(y, x)] += c * s1;
                    }
                }
            }
        }
        for r in 0..n {
            for s in 0..n {
                for (s1, y) in apply_e(n, r, s, x).into_iter().flatten() {
                    for p in 0..n {
                        for q in 0..n {
                            let c = g[idx4(n, p, q, r, s)];
                            if c == 0.0 {
                                continue;
                            }
                            for (s2, z) in apply_e(n, p, q, y).into_iter().flatten() {
                                m[(z, x)] += 0.5 * c * s1 * s2;
                            }
                        }
                    }
                }
            }
        }
    }
    m
}

pub fn build_active_hamiltonian(
    b: &IntegralBundle,
    c: &DMatrix<f64>,
    spec: &ActiveSpaceSpec,
) -> Result<ActiveHamiltonian> {
    let mo = MoIntegrals::from_bundle(b, c)?;
    ActiveHamiltonian::from_mo(&mo, spec)
}

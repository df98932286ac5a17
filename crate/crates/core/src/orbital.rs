//! Orbital machinery: Lowdin orthogonalization, orbital rotations, analytic
//! orbital derivatives from reduced density matrices, and the active-space
//! transfer rotation between two sets of molecular orbitals.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{ActiveSpaceSpec, IntegralBundle, MoIntegrals};
use crate::linalg::{expm, idx4, max_abs, nearest_orthogonal, orthogonal_log, sorted_symmetric_eigen, transform_eri};
use crate::statevec::fermion::apply_e;
use crate::statevec::{RdmPair, Statevector};

const LINEAR_DEPENDENCE_TOL: f64 = 1e-10;

fn overlap_power(s: &DMatrix<f64>, power: f64) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sorted_symmetric_eigen(s);
    if vals[0] < LINEAR_DEPENDENCE_TOL {
        return Err(Error::NearLinearDependence(vals[0]));
    }
    let d = DMatrix::from_diagonal(&vals.map(|v| v.powf(power)));
    Ok(&vecs * d * vecs.transpose())
}

/// Symmetric `S^{-1/2}` by eigendecomposition.
pub fn lowdin_inverse_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    overlap_power(s, -0.5)
}

pub fn lowdin_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    overlap_power(s, 0.5)
}

/// Non-redundant rotation pairs `(p, q)`, `p` core or active, `q` active or
/// virtual, `q > p`; active-active pairs are optional.
#[derive(Clone, Debug, PartialEq)]
pub struct KappaIndex {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl KappaIndex {
    pub fn new(spec: &ActiveSpaceSpec, include_active_active: bool) -> Self {
        let nc = spec.n_core;
        let nocc = spec.n_occ();
        let n = spec.n_orb();
        let mut pairs = Vec::new();
        for p in 0..nocc {
            for q in (p + 1).max(nc)..n {
                let both_active = p >= nc && q < nocc;
                if both_active && !include_active_active {
                    continue;
                }
                pairs.push((p, q));
            }
        }
        Self { n, pairs }
    }

    /// No rotations over `n` orbitals (frozen orbitals).
    pub fn frozen(n: usize) -> Self {
        Self { n, pairs: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Antisymmetric `K` with `K_pq = kappa`, `K_qp = -kappa`.
    pub fn to_matrix(&self, values: &[f64]) -> Result<DMatrix<f64>> {
        if values.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: values.len(),
            });
        }
        let mut k = DMatrix::zeros(self.n, self.n);
        for (&(p, q), &v) in self.pairs.iter().zip(values) {
            k[(p, q)] = v;
            k[(q, p)] = -v;
        }
        Ok(k)
    }
}

/// `C exp(-K)`.
pub fn apply_kappa(c: &DMatrix<f64>, index: &KappaIndex, values: &[f64]) -> Result<DMatrix<f64>> {
    let k = index.to_matrix(values)?;
    Ok(c * expm(&(-k)))
}

/// Full-space RDMs over core and active orbitals (core first). Core orbitals
/// are doubly occupied in every configuration, which fixes all blocks with
/// core indices in terms of the active 1-RDM. With `derivative` set the
/// constant core-only terms are dropped, giving the derivative of the
/// reconstruction when the inputs are RDM derivatives.
pub fn full_space_rdms(active: &RdmPair, spec: &ActiveSpaceSpec, derivative: bool) -> RdmPair {
    let nc = spec.n_core;
    let na = active.n;
    let n = nc + na;
    let mut out = RdmPair::zeros(n);
    for t in 0..na {
        for u in 0..na {
            out.gamma[(nc + t, nc + u)] = active.gamma[(t, u)];
            for v in 0..na {
                for w in 0..na {
                    out.two[idx4(n, nc + t, nc + u, nc + v, nc + w)] = active.g2(t, u, v, w);
                }
            }
        }
    }
    if !derivative {
        for i in 0..nc {
            out.gamma[(i, i)] = 2.0;
            for j in 0..nc {
                out.two[idx4(n, i, i, j, j)] += 4.0;
                out.two[idx4(n, i, j, j, i)] -= 2.0;
            }
        }
    }
    for i in 0..nc {
        for t in 0..na {
            for u in 0..na {
                let g = active.gamma[(t, u)];
                let (a, b) = (nc + t, nc + u);
                out.two[idx4(n, i, i, a, b)] += 2.0 * g;
                out.two[idx4(n, a, b, i, i)] += 2.0 * g;
                out.two[idx4(n, a, i, i, b)] -= g;
                out.two[idx4(n, i, b, a, i)] -= g;
            }
        }
    }
    out
}

fn check_shapes(rdm: &RdmPair, mo: &MoIntegrals) -> Result<()> {
    if rdm.n > mo.n {
        return Err(Error::Dimension {
            expected: mo.n,
            got: rdm.n,
        });
    }
    Ok(())
}

/// Generalized Fock matrix `F_pq = sum_m gamma_pm h_qm + sum_mnk Gamma_pmnk g_qmnk`
/// over all orbitals; rows of empty orbitals vanish.
pub fn generalized_fock(rdm: &RdmPair, mo: &MoIntegrals) -> Result<DMatrix<f64>> {
    check_shapes(rdm, mo)?;
    let occ = rdm.n;
    let n = mo.n;
    let mut f = DMatrix::zeros(n, n);
    for p in 0..occ {
        for q in 0..n {
            let mut v = 0.0;
            for m in 0..occ {
                v += rdm.gamma[(p, m)] * mo.h[(q, m)];
                for a in 0..occ {
                    for b in 0..occ {
                        v += rdm.g2(p, m, a, b) * mo.eri(q, m, a, b);
                    }
                }
            }
            f[(p, q)] = v;
        }
    }
    Ok(f)
}

fn antisymmetric_part(f: &DMatrix<f64>, index: &KappaIndex) -> DVector<f64> {
    DVector::from_iterator(
        index.len(),
        index.pairs().iter().map(|&(p, q)| 2.0 * (f[(p, q)] - f[(q, p)])),
    )
}

/// `dE/d kappa_pq = 2 (F_pq - F_qp)`.
pub fn orbital_gradient(rdm: &RdmPair, mo: &MoIntegrals, index: &KappaIndex) -> Result<DVector<f64>> {
    Ok(antisymmetric_part(&generalized_fock(rdm, mo)?, index))
}

/// Orbital Hessian
/// `(1 - P_pq)(1 - P_rs) [2 gamma_pr h_qs - (F_pr + F_rp) delta_qs + 2 Y_pqrs]`.
pub fn orbital_hessian(rdm: &RdmPair, mo: &MoIntegrals, index: &KappaIndex) -> Result<DMatrix<f64>> {
    let f = generalized_fock(rdm, mo)?;
    orbital_hessian_with_fock(rdm, mo, index, &f)
}

pub(crate) fn orbital_hessian_with_fock(
    rdm: &RdmPair,
    mo: &MoIntegrals,
    index: &KappaIndex,
    f: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    check_shapes(rdm, mo)?;
    let occ = rdm.n;
    let gamma = |p: usize, r: usize| {
        if p < occ && r < occ {
            rdm.gamma[(p, r)]
        } else {
            0.0
        }
    };
    let y = |p: usize, q: usize, r: usize, s: usize| {
        if p >= occ || r >= occ {
            return 0.0;
        }
        let mut v = 0.0;
        for m in 0..occ {
            for n in 0..occ {
                v += (rdm.g2(p, m, r, n) + rdm.g2(p, m, n, r)) * mo.eri(q, m, n, s)
                    + rdm.g2(p, r, m, n) * mo.eri(q, s, m, n);
            }
        }
        v
    };
    let x = |p: usize, q: usize, r: usize, s: usize| {
        let mut v = 2.0 * gamma(p, r) * mo.h[(q, s)] + 2.0 * y(p, q, r, s);
        if q == s {
            v -= f[(p, r)] + f[(r, p)];
        }
        v
    };
    let k = index.len();
    let mut hess = DMatrix::zeros(k, k);
    for (a, &(p, q)) in index.pairs().iter().enumerate() {
        for (b, &(r, s)) in index.pairs().iter().enumerate().skip(a) {
            let v = x(p, q, r, s) - x(q, p, r, s) - x(p, q, s, r) + x(q, p, s, r);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    Ok(hess)
}

/// `d^2 E / d kappa_pq d theta_j = 2 (dF_pq - dF_qp)` from full-space RDM
/// derivatives; one column per parameter.
pub fn mixed_hessian(rdm_derivs: &[RdmPair], mo: &MoIntegrals, index: &KappaIndex) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(index.len(), rdm_derivs.len());
    for (j, d) in rdm_derivs.iter().enumerate() {
        let df = generalized_fock(d, mo)?;
        out.set_column(j, &antisymmetric_part(&df, index));
    }
    Ok(out)
}

/// Orbital transfer between two MO sets.
#[derive(Clone, Debug)]
pub struct OrbitalTransfer {
    /// `C0^T C1`.
    pub c01: DMatrix<f64>,
    /// Largest element coupling different core/active/virtual blocks.
    pub block_residual: f64,
    /// Real logarithm of the (orthogonalized) active block, when aligned.
    pub generator: Option<DMatrix<f64>>,
}

fn block_of(spec: &ActiveSpaceSpec, p: usize) -> usize {
    if p < spec.n_core {
        0
    } else if p < spec.n_occ() {
        1
    } else {
        2
    }
}

pub fn transfer_and_generator(
    c0: &DMatrix<f64>,
    c1: &DMatrix<f64>,
    spec: &ActiveSpaceSpec,
    block_tol: f64,
) -> Result<OrbitalTransfer> {
    let n = spec.n_orb();
    if c0.shape() != (n, n) || c1.shape() != (n, n) {
        return Err(Error::Dimension {
            expected: n,
            got: c1.nrows(),
        });
    }
    let c01 = c0.transpose() * c1;
    let mut block_residual = 0.0_f64;
    for p in 0..n {
        for q in 0..n {
            if block_of(spec, p) != block_of(spec, q) {
                block_residual = block_residual.max(c01[(p, q)].abs());
            }
        }
    }
    let generator = if block_residual <= block_tol {
        let nc = spec.n_core;
        let na = spec.n_active;
        let act = c01.view((nc, nc), (na, na)).into_owned();
        Some(orthogonal_log(&nearest_orthogonal(&act))?)
    } else {
        None
    };
    Ok(OrbitalTransfer {
        c01,
        block_residual,
        generator,
    })
}

/// Dense spin-summed one-body operator `sum_pq G_pq E_pq` on `4^n` states.
pub fn one_body_operator(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let dim = 1usize << (2 * n);
    let mut m = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        for p in 0..n {
            for q in 0..n {
                let c = g[(p, q)];
                if c == 0.0 {
                    continue;
                }
                for (s, y) in apply_e(n, p, q, x).into_iter().flatten() {
                    m[(y, x)] += c * s;
                }
            }
        }
    }
    m
}

/// `exp(sum_pq G_pq E_pq) |psi>` for antisymmetric `G`.
pub fn apply_orbital_rotation_to_state(state: &Statevector, g: &DMatrix<f64>) -> Result<Statevector> {
    let n = g.nrows();
    if state.n_qubits() != 2 * n {
        return Err(Error::Dimension {
            expected: 2 * n,
            got: state.n_qubits(),
        });
    }
    if max_abs(&(g + g.transpose())) > 1e-8 {
        return Err(invalid("orbital rotation generator must be antisymmetric"));
    }
    let u = expm(&one_body_operator(g));
    Ok(state.apply_real_matrix(&u))
}

/// Closed-shell restricted Hartree-Fock orbitals over the Lowdin basis with
/// `n_doubly` doubly occupied orbitals, solved by DIIS-accelerated Roothaan iterations.
pub fn rhf_orbitals(b: &IntegralBundle, n_doubly: usize) -> Result<(f64, DMatrix<f64>)> {
    let n = b.n_orb;
    if n_doubly > n {
        return Err(invalid("more doubly occupied orbitals than basis functions"));
    }
    let x = match &b.s {
        Some(s) => lowdin_inverse_sqrt(s)?,
        None => DMatrix::identity(n, n),
    };
    let h = x.transpose() * &b.h * &x;
    let g = transform_eri(&b.g, n, &x);
    let fock = |p_mat: &DMatrix<f64>| {
        DMatrix::from_fn(n, n, |p, q| {
            let mut v = h[(p, q)];
            for r in 0..n {
                for s in 0..n {
                    v += p_mat[(r, s)] * (g[idx4(n, p, q, r, s)] - 0.5 * g[idx4(n, p, r, s, q)]);
                }
            }
            v
        })
    };
    let density = |c: &DMatrix<f64>| {
        let occ = c.columns(0, n_doubly);
        occ * occ.transpose() * 2.0
    };
    let (_, mut c) = sorted_symmetric_eigen(&h);
    let mut p_mat = density(&c);
    let mut history: Vec<(DMatrix<f64>, DMatrix<f64>)> = Vec::new();
    let mut energy = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for _ in 0..500 {
        let f = fock(&p_mat);
        let new_energy = b.e_nuc_core + 0.5 * p_mat.component_mul(&(&h + &f)).sum();
        let err = &f * &p_mat - &p_mat * &f;
        if (new_energy - energy).abs() < 1e-12 && max_abs(&err) < 1e-9 {
            return Ok((new_energy, c));
        }
        energy = new_energy;
        residual = max_abs(&err);
        history.push((f.clone(), err));
        if history.len() > 8 {
            history.remove(0);
        }
        let f_ext = diis_extrapolate(&history).unwrap_or(f);
        c = sorted_symmetric_eigen(&f_ext).1;
        p_mat = density(&c);
    }
    Err(Error::NotConverged {
        iterations: 500,
        grad_norm: residual,
    })
}

fn diis_extrapolate(history: &[(DMatrix<f64>, DMatrix<f64>)]) -> Option<DMatrix<f64>> {
    let m = history.len();
    if m < 2 {
        return None;
    }
    let mut b = DMatrix::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in 0..m {
            b[(i, j)] = history[i].1.dot(&history[j].1);
        }
        b[(i, m)] = -1.0;
        b[(m, i)] = -1.0;
    }
    let mut rhs = DVector::zeros(m + 1);
    rhs[m] = -1.0;
    let w = b.lu().solve(&rhs)?;
    let mut f = DMatrix::zeros(history[0].0.nrows(), history[0].0.ncols());
    for i in 0..m {
        f += &history[i].0 * w[i];
    }
    Some(f)
}

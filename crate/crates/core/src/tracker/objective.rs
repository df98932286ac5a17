use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{ActiveHamiltonian, ActiveSpaceSpec, IntegralBundle, LoopPoint, LoopSpec, MoIntegrals};
use crate::orbital::{
    apply_kappa, apply_orbital_rotation_to_state, full_space_rdms, lowdin_sqrt, mixed_hessian, orbital_gradient,
    orbital_hessian, rhf_orbitals, transfer_and_generator, KappaIndex,
};
use crate::statevec::{
    build_direct_ansatz, build_npf_ansatz, build_uccd_ansatz, compute_rdms, rdm_theta_derivatives, AnsatzCircuit,
    Statevector,
};

use super::{AnsatzChoice, TrackerConfig};

/// Circuit angles plus, for orbital-optimized problems, the current MO coefficients
/// over the Lowdin basis.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackPoint {
    pub theta: Vec<f64>,
    pub orbitals: Option<DMatrix<f64>>,
}

#[derive(Clone, Debug)]
pub struct Derivatives {
    pub energy: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopOverlap {
    pub omega: f64,
    pub transfer_residual: Option<f64>,
    /// `sum_{p<q} |G_pq|` of the active transfer generator.
    pub rotation_l1: f64,
}

/// A loop-dependent cost sampled on the tracking grid `k = 0..=n_steps`.
///
/// Displacements are vectors in the composite parameter space; orbital
/// parameters are always measured from the current orbitals.
pub trait Objective {
    fn n_params(&self) -> usize;
    fn n_steps(&self) -> usize;
    fn initial_point(&mut self) -> Result<TrackPoint>;
    fn energy(&mut self, k: usize, x: &TrackPoint) -> Result<f64>;
    fn derivatives(&mut self, k: usize, x: &TrackPoint) -> Result<Derivatives>;
    fn displace(&self, x: &TrackPoint, step: &DVector<f64>) -> Result<TrackPoint>;
    /// Overlap between the tracked state at the start and at the end of the loop.
    fn closing_overlap(&mut self, start: &TrackPoint, end: &TrackPoint) -> Result<LoopOverlap>;
}

/// Energy (without constant), gradient and Hessian of `<psi(theta)| op |psi(theta)>`.
pub fn circuit_derivatives(ansatz: &AnsatzCircuit, op: &DMatrix<f64>, theta: &[f64]) -> Result<Derivatives> {
    let d = ansatz.derivatives(theta)?;
    let n = ansatz.n_params();
    let h_psi = d.psi.apply_real_matrix(op);
    let h_first: Vec<Statevector> = d.first.iter().map(|v| v.apply_real_matrix(op)).collect();
    let energy = d.psi.inner(&h_psi).re;
    let grad = DVector::from_fn(n, |j, _| 2.0 * d.first[j].inner(&h_psi).re);
    let mut hess = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            let v = 2.0 * (d.second(j, k).inner(&h_psi).re + d.first[j].inner(&h_first[k]).re);
            hess[(j, k)] = v;
            hess[(k, j)] = v;
        }
    }
    Ok(Derivatives { energy, grad, hess })
}

fn add_step(theta: &[f64], step: &DVector<f64>) -> Vec<f64> {
    theta.iter().zip(step.iter()).map(|(a, b)| a + b).collect()
}

fn check_step(expected: usize, step: &DVector<f64>) -> Result<()> {
    if step.len() != expected {
        return Err(Error::Dimension {
            expected,
            got: step.len(),
        });
    }
    Ok(())
}

/// Real overlap of two ansatz states, optionally rotating the second by the
/// one-body transfer generator `exp(sum G_pq E_pq)`.
pub fn final_overlap(
    ansatz: &AnsatzCircuit,
    theta0: &[f64],
    theta1: &[f64],
    transfer: Option<&DMatrix<f64>>,
) -> Result<f64> {
    let a = ansatz.prepare(theta0)?;
    let mut b = ansatz.prepare(theta1)?;
    if let Some(g) = transfer {
        b = apply_orbital_rotation_to_state(&b, g)?;
    }
    Ok(a.inner(&b).re)
}

/// Circuit over a dense Hamiltonian family given on the grid.
#[derive(Clone, Debug)]
pub struct DenseObjective {
    ansatz: AnsatzCircuit,
    hamiltonians: Vec<DMatrix<f64>>,
}

impl DenseObjective {
    pub fn new(ansatz: AnsatzCircuit, hamiltonians: Vec<DMatrix<f64>>) -> Result<Self> {
        if hamiltonians.len() < 3 {
            return Err(invalid("a loop needs at least two steps"));
        }
        let dim = 1usize << ansatz.n_qubits();
        for h in &hamiltonians {
            if h.shape() != (dim, dim) {
                return Err(Error::Dimension {
                    expected: dim,
                    got: h.nrows(),
                });
            }
        }
        Ok(Self { ansatz, hamiltonians })
    }

    pub fn from_loop(spec: &LoopSpec, n_steps: usize) -> Result<Self> {
        let dim = spec
            .dense_dim()
            .ok_or_else(|| Error::Unsupported("loop has no dense Hamiltonian".into()))?;
        if !dim.is_power_of_two() {
            return Err(invalid(format!("dense dimension {dim} is not a power of two")));
        }
        let stride = spec.stride(n_steps)?;
        let hams = (0..=n_steps)
            .map(|k| match spec.point(k * stride)? {
                LoopPoint::Dense(h) => Ok(h),
                LoopPoint::Bundle(_) => Err(Error::Unsupported("expected a dense loop".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(build_direct_ansatz(dim.trailing_zeros() as usize)?, hams)
    }

    pub fn ansatz(&self) -> &AnsatzCircuit {
        &self.ansatz
    }

    fn ham(&self, k: usize) -> Result<&DMatrix<f64>> {
        self.hamiltonians
            .get(k)
            .ok_or_else(|| Error::OffGrid(k as f64 / self.n_steps() as f64))
    }
}

impl Objective for DenseObjective {
    fn n_params(&self) -> usize {
        self.ansatz.n_params()
    }

    fn n_steps(&self) -> usize {
        self.hamiltonians.len() - 1
    }

    fn initial_point(&mut self) -> Result<TrackPoint> {
        Ok(TrackPoint {
            theta: vec![0.0; self.n_params()],
            orbitals: None,
        })
    }

    fn energy(&mut self, k: usize, x: &TrackPoint) -> Result<f64> {
        let h = self.ham(k)?;
        Ok(self.ansatz.prepare(&x.theta)?.expectation(h))
    }

    fn derivatives(&mut self, k: usize, x: &TrackPoint) -> Result<Derivatives> {
        circuit_derivatives(&self.ansatz, self.ham(k)?, &x.theta)
    }

    fn displace(&self, x: &TrackPoint, step: &DVector<f64>) -> Result<TrackPoint> {
        check_step(self.n_params(), step)?;
        Ok(TrackPoint {
            theta: add_step(&x.theta, step),
            orbitals: None,
        })
    }

    fn closing_overlap(&mut self, start: &TrackPoint, end: &TrackPoint) -> Result<LoopOverlap> {
        Ok(LoopOverlap {
            omega: final_overlap(&self.ansatz, &start.theta, &end.theta, None)?,
            transfer_residual: None,
            rotation_l1: 0.0,
        })
    }
}

struct HamCache {
    k: usize,
    c: DMatrix<f64>,
    mo: MoIntegrals,
    ham: ActiveHamiltonian,
}

/// Starting MO coefficients over the Lowdin basis of the first bundle: the
/// manifest's AO coefficients when present, restricted Hartree-Fock otherwise.
pub fn initial_orbitals(spec: &LoopSpec, active: &ActiveSpaceSpec, b0: &IntegralBundle) -> Result<DMatrix<f64>> {
    match spec.mo_coeff_ao() {
        Some(c_ao) => {
            if c_ao.nrows() != b0.n_orb {
                return Err(Error::Dimension {
                    expected: b0.n_orb,
                    got: c_ao.nrows(),
                });
            }
            match &b0.s {
                Some(s) => Ok(lowdin_sqrt(s)? * c_ao),
                None => Ok(c_ao),
            }
        }
        None => Ok(rhf_orbitals(b0, active.n_core + active.n_active_electrons / 2)?.1),
    }
}

/// Active-space circuit with optional orbital optimization over a list of
/// integral bundles.
pub struct OrbitalObjective {
    spec: LoopSpec,
    stride: usize,
    n_steps: usize,
    active: ActiveSpaceSpec,
    ansatz: AnsatzCircuit,
    index: KappaIndex,
    optimize_orbitals: bool,
    block_tol: f64,
    initial_c: Option<DMatrix<f64>>,
    bundle: Option<(usize, IntegralBundle)>,
    cache: Option<HamCache>,
}

impl OrbitalObjective {
    pub fn new(spec: &LoopSpec, ansatz: AnsatzChoice, cfg: &TrackerConfig) -> Result<Self> {
        let active = spec
            .active_space()
            .ok_or_else(|| Error::Unsupported("loop carries no active space".into()))?;
        active.validate()?;
        let circuit = match ansatz {
            AnsatzChoice::Uccd => build_uccd_ansatz(&active)?,
            AnsatzChoice::Npf(layers) => build_npf_ansatz(&active, layers)?,
            AnsatzChoice::Direct => {
                return Err(Error::Unsupported(
                    "the direct ansatz does not conserve particle number; use uccd or npf".into(),
                ))
            }
        };
        let index = if cfg.optimize_orbitals {
            KappaIndex::new(&active, cfg.include_active_active)
        } else {
            KappaIndex::frozen(active.n_orb())
        };
        Ok(Self {
            stride: spec.stride(cfg.n_steps)?,
            spec: spec.clone(),
            n_steps: cfg.n_steps,
            active,
            ansatz: circuit,
            index,
            optimize_orbitals: cfg.optimize_orbitals,
            block_tol: cfg.block_tol,
            initial_c: None,
            bundle: None,
            cache: None,
        })
    }

    pub fn ansatz(&self) -> &AnsatzCircuit {
        &self.ansatz
    }

    pub fn active_space(&self) -> &ActiveSpaceSpec {
        &self.active
    }

    pub fn kappa_index(&self) -> &KappaIndex {
        &self.index
    }

    /// Override the starting orbitals (Lowdin basis).
    pub fn set_initial_orbitals(&mut self, c: DMatrix<f64>) {
        self.initial_c = Some(c);
    }

    pub fn bundle(&mut self, k: usize) -> Result<&IntegralBundle> {
        if k > self.n_steps {
            return Err(Error::OffGrid(k as f64 / self.n_steps as f64));
        }
        if self.bundle.as_ref().map(|(i, _)| *i) != Some(k) {
            let b = match self.spec.point(k * self.stride)? {
                LoopPoint::Bundle(b) => *b,
                LoopPoint::Dense(_) => return Err(Error::Unsupported("expected a bundle loop".into())),
            };
            if b.n_orb != self.active.n_orb() {
                return Err(invalid(format!(
                    "bundle at step {k} has {} orbitals, the active space needs {}",
                    b.n_orb,
                    self.active.n_orb()
                )));
            }
            self.bundle = Some((k, b));
        }
        Ok(&self.bundle.as_ref().expect("bundle cached").1)
    }

    /// MO integrals and active Hamiltonian at grid point `k` for orbitals `c`.
    pub fn hamiltonian(&mut self, k: usize, c: &DMatrix<f64>) -> Result<(&MoIntegrals, &ActiveHamiltonian)> {
        let hit = matches!(&self.cache, Some(h) if h.k == k && &h.c == c);
        if !hit {
            let active = self.active;
            let mo = MoIntegrals::from_bundle(self.bundle(k)?, c)?;
            let ham = ActiveHamiltonian::from_mo(&mo, &active)?;
            self.cache = Some(HamCache {
                k,
                c: c.clone(),
                mo,
                ham,
            });
        }
        let h = self.cache.as_ref().expect("hamiltonian cached");
        Ok((&h.mo, &h.ham))
    }

    fn starting_orbitals(&mut self) -> Result<DMatrix<f64>> {
        if let Some(c) = &self.initial_c {
            return Ok(c.clone());
        }
        let spec = self.spec.clone();
        let active = self.active;
        let c = initial_orbitals(&spec, &active, self.bundle(0)?)?;
        self.initial_c = Some(c.clone());
        Ok(c)
    }

    fn orbitals<'a>(&self, x: &'a TrackPoint) -> Result<&'a DMatrix<f64>> {
        x.orbitals
            .as_ref()
            .ok_or_else(|| invalid("orbital problem evaluated without orbitals"))
    }
}

impl Objective for OrbitalObjective {
    fn n_params(&self) -> usize {
        self.ansatz.n_params() + self.index.len()
    }

    fn n_steps(&self) -> usize {
        self.n_steps
    }

    fn initial_point(&mut self) -> Result<TrackPoint> {
        Ok(TrackPoint {
            theta: vec![0.0; self.ansatz.n_params()],
            orbitals: Some(self.starting_orbitals()?),
        })
    }

    fn energy(&mut self, k: usize, x: &TrackPoint) -> Result<f64> {
        let c = self.orbitals(x)?.clone();
        let psi = self.ansatz.prepare(&x.theta)?;
        let (_, ham) = self.hamiltonian(k, &c)?;
        Ok(ham.energy(&psi))
    }

    fn derivatives(&mut self, k: usize, x: &TrackPoint) -> Result<Derivatives> {
        let c = self.orbitals(x)?.clone();
        let n_theta = self.ansatz.n_params();
        let n_kappa = self.index.len();
        let ansatz = self.ansatz.clone();
        let active = self.active;
        let index = self.index.clone();
        let (mo, ham) = self.hamiltonian(k, &c)?;
        let circ = circuit_derivatives(&ansatz, ham.dense(), &x.theta)?;
        let energy = circ.energy + ham.e_const;
        if n_kappa == 0 {
            return Ok(Derivatives { energy, ..circ });
        }
        let psi = ansatz.prepare(&x.theta)?;
        let full = full_space_rdms(&compute_rdms(&psi)?, &active, false);
        let og = orbital_gradient(&full, mo, &index)?;
        let oh = orbital_hessian(&full, mo, &index)?;
        let d_full: Vec<_> = rdm_theta_derivatives(&ansatz, &x.theta)?
            .iter()
            .map(|d| full_space_rdms(d, &active, true))
            .collect();
        let mixed = mixed_hessian(&d_full, mo, &index)?;
        let n = n_theta + n_kappa;
        let mut grad = DVector::zeros(n);
        grad.rows_mut(0, n_theta).copy_from(&circ.grad);
        grad.rows_mut(n_theta, n_kappa).copy_from(&og);
        let mut hess = DMatrix::zeros(n, n);
        hess.view_mut((0, 0), (n_theta, n_theta)).copy_from(&circ.hess);
        hess.view_mut((n_theta, n_theta), (n_kappa, n_kappa)).copy_from(&oh);
        hess.view_mut((n_theta, 0), (n_kappa, n_theta)).copy_from(&mixed);
        hess.view_mut((0, n_theta), (n_theta, n_kappa))
            .copy_from(&mixed.transpose());
        Ok(Derivatives { energy, grad, hess })
    }

    fn displace(&self, x: &TrackPoint, step: &DVector<f64>) -> Result<TrackPoint> {
        check_step(self.n_params(), step)?;
        let n_theta = self.ansatz.n_params();
        let c = self.orbitals(x)?;
        let orbitals = if self.index.is_empty() {
            c.clone()
        } else {
            let kappa: Vec<f64> = step.rows(n_theta, self.index.len()).iter().copied().collect();
            apply_kappa(c, &self.index, &kappa)?
        };
        Ok(TrackPoint {
            theta: add_step(&x.theta, &step.rows(0, n_theta).into_owned()),
            orbitals: Some(orbitals),
        })
    }

    fn closing_overlap(&mut self, start: &TrackPoint, end: &TrackPoint) -> Result<LoopOverlap> {
        let c0 = self.orbitals(start)?;
        let c1 = self.orbitals(end)?;
        if !self.optimize_orbitals || c0 == c1 {
            return Ok(LoopOverlap {
                omega: final_overlap(&self.ansatz, &start.theta, &end.theta, None)?,
                transfer_residual: None,
                rotation_l1: 0.0,
            });
        }
        let transfer = transfer_and_generator(c0, c1, &self.active, self.block_tol)?;
        let g = transfer.generator.ok_or_else(|| {
            Error::RealLog(format!(
                "orbital blocks mix after the loop (residual {:.3e} > {:.3e})",
                transfer.block_residual, self.block_tol
            ))
        })?;
        let mut rotation_l1 = 0.0;
        for p in 0..g.nrows() {
            for q in (p + 1)..g.ncols() {
                rotation_l1 += g[(p, q)].abs();
            }
        }
        Ok(LoopOverlap {
            omega: final_overlap(&self.ansatz, &start.theta, &end.theta, Some(&g))?,
            transfer_residual: Some(transfer.block_residual),
            rotation_l1,
        })
    }
}

/// Objective for a loop: dense families use the direct ansatz, bundle loops
/// the requested active-space circuit.
pub fn build_objective(spec: &LoopSpec, ansatz: AnsatzChoice, cfg: &TrackerConfig) -> Result<Box<dyn Objective>> {
    if spec.is_analytic() {
        if ansatz != AnsatzChoice::Direct {
            return Err(Error::Unsupported(format!(
                "ansatz '{ansatz}' needs an active space; analytic loops use 'direct'"
            )));
        }
        Ok(Box::new(DenseObjective::from_loop(spec, cfg.n_steps)?))
    } else {
        Ok(Box::new(OrbitalObjective::new(spec, ansatz, cfg)?))
    }
}

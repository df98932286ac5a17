use super::fermion::{basis_index, spin_orbital, Ladder, DOWN, UP};
use super::{RealGenerator, Statevector};
use crate::error::{Error, Result};
use crate::hamiltonian::ActiveSpaceSpec;

/// Product of real rotations `exp(theta_{n-1} A_{n-1}) ... exp(theta_0 A_0) |psi_0>`;
/// `generators[0]` acts first.
#[derive(Clone, Debug)]
pub struct AnsatzCircuit {
    generators: Vec<RealGenerator>,
    initial: Statevector,
}

/// A state with its first and second parameter derivatives.
#[derive(Clone, Debug)]
pub struct StateDerivatives {
    pub psi: Statevector,
    pub first: Vec<Statevector>,
    second: Vec<Statevector>,
}

impl StateDerivatives {
    /// `d^2 psi / d theta_j d theta_k`.
    pub fn second(&self, j: usize, k: usize) -> &Statevector {
        let (a, b) = if j <= k { (j, k) } else { (k, j) };
        let n = self.first.len();
        &self.second[a * n - a * (a + 1) / 2 + b]
    }
}

impl AnsatzCircuit {
    pub fn new(generators: Vec<RealGenerator>, initial: Statevector) -> Result<Self> {
        for g in &generators {
            if g.n_qubits() != initial.n_qubits() {
                return Err(Error::Dimension {
                    expected: initial.n_qubits(),
                    got: g.n_qubits(),
                });
            }
        }
        Ok(Self { generators, initial })
    }

    pub fn n_params(&self) -> usize {
        self.generators.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.initial.n_qubits()
    }

    pub fn generators(&self) -> &[RealGenerator] {
        &self.generators
    }

    pub fn initial_state(&self) -> &Statevector {
        &self.initial
    }

    fn check_len(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::Dimension {
                expected: self.n_params(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    pub fn prepare(&self, theta: &[f64]) -> Result<Statevector> {
        self.check_len(theta)?;
        let mut s = self.initial.clone();
        for (g, &t) in self.generators.iter().zip(theta) {
            g.rotate(&mut s, t);
        }
        Ok(s)
    }

    fn propagate(&self, state: &mut Statevector, theta: &[f64], from: usize) {
        for (g, &t) in self.generators.iter().zip(theta).skip(from) {
            g.rotate(state, t);
        }
    }

    /// State and first derivatives, `d_j psi = U_{>j} A_j U_{<=j} psi_0`.
    pub fn first_derivatives(&self, theta: &[f64]) -> Result<(Statevector, Vec<Statevector>)> {
        self.check_len(theta)?;
        let mut prefix = self.initial.clone();
        let mut first = Vec::with_capacity(self.n_params());
        for (j, g) in self.generators.iter().enumerate() {
            g.rotate(&mut prefix, theta[j]);
            let mut d = g.apply(&prefix);
            self.propagate(&mut d, theta, j + 1);
            first.push(d);
        }
        Ok((prefix, first))
    }

    pub fn derivatives(&self, theta: &[f64]) -> Result<StateDerivatives> {
        self.check_len(theta)?;
        let n = self.n_params();
        let mut prefix = self.initial.clone();
        let mut first = Vec::with_capacity(n);
        let mut second = Vec::with_capacity(n * (n + 1) / 2);
        for (j, g) in self.generators.iter().enumerate() {
            g.rotate(&mut prefix, theta[j]);
            let inserted = g.apply(&prefix);
            let mut diag = g.apply(&inserted);
            self.propagate(&mut diag, theta, j + 1);
            second.push(diag);
            let mut v = inserted;
            for k in (j + 1)..n {
                self.generators[k].rotate(&mut v, theta[k]);
                let mut w = self.generators[k].apply(&v);
                self.propagate(&mut w, theta, k + 1);
                second.push(w);
            }
            first.push(v);
        }
        Ok(StateDerivatives {
            psi: prefix,
            first,
            second,
        })
    }
}

/// `prepare_ansatz` as a free function.
pub fn prepare_ansatz(ansatz: &AnsatzCircuit, theta: &[f64]) -> Result<Statevector> {
    ansatz.prepare(theta)
}

/// Closed-shell determinant with the lowest `eta/2` spatial orbitals doubly occupied.
pub fn hartree_fock_state(active: &ActiveSpaceSpec) -> Result<Statevector> {
    let (n_up, n_down) = active.spin_sector()?;
    let n_qubits = active.n_qubits();
    let mut occ: Vec<usize> = (0..n_up).map(|p| spin_orbital(p, UP)).collect();
    occ.extend((0..n_down).map(|p| spin_orbital(p, DOWN)));
    Ok(Statevector::basis(n_qubits, basis_index(n_qubits, &occ)))
}

fn spin_of(q: usize) -> usize {
    q % 2
}

/// All spin-conserving real double excitations `c+_a c+_b c_j c_i - h.c.` from
/// occupied spin orbitals `i < j` to virtual `a < b` of the Hartree-Fock determinant.
pub fn build_uccd_ansatz(active: &ActiveSpaceSpec) -> Result<AnsatzCircuit> {
    active.validate()?;
    let initial = hartree_fock_state(active)?;
    let n_qubits = active.n_qubits();
    let n_occ = active.n_active_electrons;
    let occ: Vec<usize> = (0..n_occ).collect();
    let virt: Vec<usize> = (n_occ..n_qubits).collect();
    let mut gens = Vec::new();
    for (x, &i) in occ.iter().enumerate() {
        for &j in &occ[x + 1..] {
            for (y, &a) in virt.iter().enumerate() {
                for &b in &virt[y + 1..] {
                    let mut s_in = [spin_of(i), spin_of(j)];
                    let mut s_out = [spin_of(a), spin_of(b)];
                    s_in.sort_unstable();
                    s_out.sort_unstable();
                    if s_in != s_out {
                        continue;
                    }
                    let ops = vec![Ladder::cre(a), Ladder::cre(b), Ladder::ann(j), Ladder::ann(i)];
                    let label = format!("d({i},{j}->{a},{b})");
                    gens.push(RealGenerator::from_excitations(n_qubits, label, &[(1.0, ops)])?);
                }
            }
        }
    }
    AnsatzCircuit::new(gens, initial)
}

/// `(E_qp - E_pq) / 2`: spin-adapted rotation moving electrons from `p` to `q`.
fn orbital_rotation(n_qubits: usize, p: usize, q: usize) -> Result<RealGenerator> {
    let strings: Vec<(f64, Vec<Ladder>)> = [UP, DOWN]
        .iter()
        .map(|&s| {
            (
                0.5,
                vec![Ladder::cre(spin_orbital(q, s)), Ladder::ann(spin_orbital(p, s))],
            )
        })
        .collect();
    RealGenerator::from_excitations(n_qubits, format!("s({p}->{q})"), &strings)
}

/// Pair excitation `c+_{q up} c+_{q down} c_{p down} c_{p up} - h.c.`.
fn pair_double(n_qubits: usize, p: usize, q: usize) -> Result<RealGenerator> {
    let ops = vec![
        Ladder::cre(spin_orbital(q, UP)),
        Ladder::cre(spin_orbital(q, DOWN)),
        Ladder::ann(spin_orbital(p, DOWN)),
        Ladder::ann(spin_orbital(p, UP)),
    ];
    RealGenerator::from_excitations(n_qubits, format!("p({p}->{q})"), &[(1.0, ops)])
}

/// Number-preserving fabric: each layer applies blocks on orbital pairs
/// (0,1), (2,3), ... then (1,2), (3,4), ...; a block is an orbital rotation
/// followed by a pair excitation. A gate is dropped when it annihilates the
/// reference and no earlier kept gate touches its orbitals, since its angle
/// could never change the state.
pub fn build_npf_ansatz(active: &ActiveSpaceSpec, layers: usize) -> Result<AnsatzCircuit> {
    active.validate()?;
    if active.n_active < 2 {
        return Err(Error::Unsupported(
            "the fabric needs at least two active orbitals".into(),
        ));
    }
    let initial = hartree_fock_state(active)?;
    let reference = initial.amplitudes().iter().position(|a| a.re != 0.0).unwrap_or(0);
    let n_qubits = active.n_qubits();
    let n = active.n_active;
    let mut touched = vec![false; n];
    let mut gens = Vec::new();
    for _ in 0..layers {
        for start in [0, 1] {
            let mut p = start;
            while p + 1 < n {
                for g in [orbital_rotation(n_qubits, p, p + 1)?, pair_double(n_qubits, p, p + 1)?] {
                    let idle = g.annihilates_basis(reference) && !touched[p] && !touched[p + 1];
                    if !idle {
                        touched[p] = true;
                        touched[p + 1] = true;
                        gens.push(g);
                    }
                }
                p += 2;
            }
        }
    }
    AnsatzCircuit::new(gens, initial)
}

/// Hyperspherical rotations of `|0>` for a `2^n_qubits` dense space: plane
/// `(0, d-1)` acts first and plane `(0, 1)` last, so the last angle is a full
/// azimuth and the parameterization is only singular on a codimension-two set.
pub fn build_direct_ansatz(n_qubits: usize) -> Result<AnsatzCircuit> {
    let dim = 1usize << n_qubits;
    let gens = (1..dim)
        .rev()
        .map(|k| RealGenerator::plane(n_qubits, 0, k))
        .collect::<Result<Vec<_>>>()?;
    AnsatzCircuit::new(gens, Statevector::basis(n_qubits, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm;

    fn cas(electrons: usize, orbitals: usize) -> ActiveSpaceSpec {
        ActiveSpaceSpec::new(0, orbitals, 0, electrons)
    }

    #[test]
    fn uccd_cas22_has_one_generator_and_prepares_hf() {
        let a = build_uccd_ansatz(&cas(2, 2)).unwrap();
        assert_eq!(a.n_params(), 1);
        let s = a.prepare(&[0.0]).unwrap();
        assert_eq!(s, Statevector::basis(4, 12));
    }

    #[test]
    fn uccd_matches_dense_exponential() {
        let a = build_uccd_ansatz(&cas(2, 2)).unwrap();
        let s = a.prepare(&[0.5]).unwrap().real_part();
        let oracle = expm(&(a.generators()[0].dense() * 0.5)).column(12).into_owned();
        for i in 0..16 {
            assert!((s[i] - oracle[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn uccd_cas44_counts_spin_conserving_doubles() {
        assert_eq!(build_uccd_ansatz(&cas(4, 4)).unwrap().n_params(), 18);
    }

    #[test]
    fn odd_electron_count_is_unsupported() {
        assert!(matches!(build_uccd_ansatz(&cas(3, 2)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn npf_cas44_four_layers_has_twenty_parameters() {
        let a = build_npf_ansatz(&cas(4, 4), 4).unwrap();
        assert_eq!(a.n_params(), 20);
        for g in a.generators() {
            let m = g.dense();
            let top = m.clone().singular_values().iter().cloned().fold(0.0, f64::max);
            assert!((top - 1.0).abs() < 1e-10, "{}", g.label());
        }
    }

    #[test]
    fn npf_zero_layers_is_empty() {
        let a = build_npf_ansatz(&cas(2, 2), 0).unwrap();
        assert_eq!(a.n_params(), 0);
        assert_eq!(a.prepare(&[]).unwrap(), Statevector::basis(4, 12));
    }

    #[test]
    fn pi_rotation_flips_plane() {
        let a = build_direct_ansatz(1).unwrap();
        let s = a.prepare(&[std::f64::consts::PI]).unwrap().real_part();
        assert!((s[0] + 1.0).abs() < 1e-15);
        assert!(s[1].abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_error() {
        let a = build_direct_ansatz(2).unwrap();
        assert!(matches!(a.prepare(&[0.1]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let a = build_npf_ansatz(&cas(2, 3), 2).unwrap();
        let theta: Vec<f64> = (0..a.n_params()).map(|i| 0.3 - 0.17 * i as f64).collect();
        let d = a.derivatives(&theta).unwrap();
        let h = 1e-5;
        for j in 0..a.n_params() {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[j] += h;
            tm[j] -= h;
            let fd = (a.prepare(&tp).unwrap().real_part() - a.prepare(&tm).unwrap().real_part()) / (2.0 * h);
            assert!((fd - d.first[j].real_part()).amax() < 1e-8);
            let (_, fp) = a.first_derivatives(&tp).unwrap();
            let (_, fm) = a.first_derivatives(&tm).unwrap();
            for k in 0..a.n_params() {
                let fd2 = (fp[k].real_part() - fm[k].real_part()) / (2.0 * h);
                assert!((fd2 - d.second(j, k).real_part()).amax() < 1e-7);
            }
        }
    }
}

mod common;

use berry_core::hamiltonian::{build_active_hamiltonian, ActiveSpaceSpec, MoIntegrals};
use berry_core::orbital::{apply_kappa, full_space_rdms, mixed_hessian, orbital_gradient, orbital_hessian, KappaIndex};
use berry_core::statevec::{build_npf_ansatz, build_uccd_ansatz, compute_rdms, rdm_theta_derivatives, AnsatzCircuit};
use nalgebra::DMatrix;

struct Case {
    bundle: berry_core::hamiltonian::IntegralBundle,
    spec: ActiveSpaceSpec,
    ansatz: AnsatzCircuit,
    theta: Vec<f64>,
    c: DMatrix<f64>,
    index: KappaIndex,
}

fn case(n_core: usize, n_active: usize, n_virtual: usize, electrons: usize, npf: bool, seed: u64) -> Case {
    let spec = ActiveSpaceSpec::new(n_core, n_active, n_virtual, electrons);
    let bundle = common::random_bundle(spec.n_orb(), seed);
    let ansatz = if npf {
        build_npf_ansatz(&spec, 2).unwrap()
    } else {
        build_uccd_ansatz(&spec).unwrap()
    };
    let theta = (0..ansatz.n_params())
        .map(|i| 0.25 * ((i as f64 * 1.7 + seed as f64).sin()))
        .collect();
    let mut r = common::rng(seed + 100);
    let c = common::random_orthogonal(spec.n_orb(), 0.4, &mut r);
    Case {
        index: KappaIndex::new(&spec, !npf),
        bundle,
        spec,
        ansatz,
        theta,
        c,
    }
}

fn energy(case: &Case, kappa: &[f64], theta: &[f64]) -> f64 {
    let c = apply_kappa(&case.c, &case.index, kappa).unwrap();
    let ham = build_active_hamiltonian(&case.bundle, &c, &case.spec).unwrap();
    ham.energy(&case.ansatz.prepare(theta).unwrap())
}

fn rel_close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

fn check_all(case: &Case) {
    let k = case.index.len();
    let zero = vec![0.0; k];
    let mo = MoIntegrals::from_bundle(&case.bundle, &case.c).unwrap();
    let psi = case.ansatz.prepare(&case.theta).unwrap();
    let rdm = compute_rdms(&psi).unwrap();
    let full = full_space_rdms(&rdm, &case.spec, false);

    // full-space reconstruction reproduces the active-space energy
    let e0 = energy(case, &zero, &case.theta);
    assert!((mo.energy(&full) - e0).abs() < 1e-10);

    let grad = orbital_gradient(&full, &mo, &case.index).unwrap();
    let h = 1e-5;
    for a in 0..k {
        let mut kp = zero.clone();
        let mut km = zero.clone();
        kp[a] = h;
        km[a] = -h;
        let fd = (energy(case, &kp, &case.theta) - energy(case, &km, &case.theta)) / (2.0 * h);
        assert!(rel_close(grad[a], fd, 1e-7, 1e-8), "grad {a}: {} vs {fd}", grad[a]);
    }

    let hess = orbital_hessian(&full, &mo, &case.index).unwrap();
    assert_eq!(hess, hess.transpose());
    for a in 0..k {
        for b in 0..k {
            let fd = second_difference(case, a, b);
            assert!(
                rel_close(hess[(a, b)], fd, 1e-5, 1e-7),
                "hess ({a},{b}): {} vs {fd}",
                hess[(a, b)]
            );
        }
    }

    let h2 = 1e-4;
    let derivs = rdm_theta_derivatives(&case.ansatz, &case.theta).unwrap();
    let full_derivs: Vec<_> = derivs.iter().map(|d| full_space_rdms(d, &case.spec, true)).collect();
    let mixed = mixed_hessian(&full_derivs, &mo, &case.index).unwrap();
    for j in 0..case.ansatz.n_params() {
        let mut tp = case.theta.clone();
        let mut tm = case.theta.clone();
        tp[j] += h2;
        tm[j] -= h2;
        let gp = orbital_gradient(
            &full_space_rdms(
                &compute_rdms(&case.ansatz.prepare(&tp).unwrap()).unwrap(),
                &case.spec,
                false,
            ),
            &mo,
            &case.index,
        )
        .unwrap();
        let gm = orbital_gradient(
            &full_space_rdms(
                &compute_rdms(&case.ansatz.prepare(&tm).unwrap()).unwrap(),
                &case.spec,
                false,
            ),
            &mo,
            &case.index,
        )
        .unwrap();
        for a in 0..k {
            let fd = (gp[a] - gm[a]) / (2.0 * h2);
            assert!(
                rel_close(mixed[(a, j)], fd, 1e-5, 1e-6),
                "mixed ({a},{j}): {} vs {fd}",
                mixed[(a, j)]
            );
        }
    }
}

/// Richardson-extrapolated mixed second difference of the energy in kappa.
fn second_difference(case: &Case, a: usize, b: usize) -> f64 {
    let zero = vec![0.0; case.index.len()];
    let at = |h: f64| {
        let e = |sa: f64, sb: f64| {
            let mut kk = zero.clone();
            kk[a] += sa * h;
            kk[b] += sb * h;
            energy(case, &kk, &case.theta)
        };
        (e(1.0, 1.0) - e(1.0, -1.0) - e(-1.0, 1.0) + e(-1.0, -1.0)) / (4.0 * h * h)
    };
    let h = 2e-3;
    (4.0 * at(h / 2.0) - at(h)) / 3.0
}

#[test]
fn cas22_uccd_with_core_and_virtual() {
    check_all(&case(1, 2, 1, 2, false, 3));
}

#[test]
fn cas22_no_core() {
    check_all(&case(0, 2, 2, 2, false, 5));
}

#[test]
fn cas44_npf() {
    check_all(&case(1, 4, 1, 4, true, 9));
}

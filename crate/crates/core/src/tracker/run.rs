use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::LoopSpec;
use crate::linalg::{lowest_eigenvalue, sorted_symmetric_eigen};
use crate::noise::{simulate_hadamard_test, NoiseModel};

use super::objective::{build_objective, Objective, TrackPoint};
use super::step::{regularized_step, StepControl};
use super::{AnsatzChoice, TrackerConfig};

/// Curvature below which a stationary point is treated as a saddle.
const SADDLE_TOL: f64 = 1e-6;
const HADAMARD_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Zero,
    Pi,
}

impl Phase {
    pub fn from_overlap(omega: f64) -> Option<Self> {
        if omega > 0.0 {
            Some(Self::Zero)
        } else if omega < 0.0 {
            Some(Self::Pi)
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Zero,
    Pi,
    Fail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailReason {
    NonConvexHessian,
    LowFidelity,
    BacktrackExhausted,
    RealLogFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackState {
    pub t: f64,
    pub energy: f64,
    pub lambda0: f64,
    pub step_norm: f64,
    pub shift: f64,
    pub backtracks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerryPhaseResult {
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fail_reason: Option<FailReason>,
    /// Final overlap as measured (sampled when shots are configured).
    pub omega: Option<f64>,
    pub omega_exact: Option<f64>,
    pub n_steps: usize,
    pub ansatz: String,
    pub config: TrackerConfig,
    pub trace: Vec<TrackState>,
    pub theta_initial: Vec<f64>,
    pub theta_final: Vec<f64>,
    pub transfer_residual: Option<f64>,
    /// One-norm of the active transfer rotation angles.
    pub rotation_l1: f64,
    pub seed: u64,
    pub wall_time_s: f64,
}

impl BerryPhaseResult {
    pub fn phase(&self) -> Option<Phase> {
        match self.outcome {
            Outcome::Zero => Some(Phase::Zero),
            Outcome::Pi => Some(Phase::Pi),
            Outcome::Fail => None,
        }
    }

    pub fn is_fail(&self) -> bool {
        self.outcome == Outcome::Fail
    }

    /// Copy with the wall-clock field zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_s: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Outcome for a final overlap and fidelity requirement.
pub fn classify(omega: f64, fidelity: f64) -> (Outcome, Option<FailReason>) {
    match Phase::from_overlap(omega) {
        Some(_) if omega * omega < fidelity => (Outcome::Fail, Some(FailReason::LowFidelity)),
        Some(Phase::Zero) => (Outcome::Zero, None),
        Some(Phase::Pi) => (Outcome::Pi, None),
        None => (Outcome::Fail, Some(FailReason::LowFidelity)),
    }
}

#[derive(Clone, Debug)]
pub struct Optimized {
    pub point: TrackPoint,
    pub energy: f64,
    pub lambda0: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Regularized Newton minimization at grid point `k` until `|g|_inf <= opt_tol`.
/// Exact stationary points with negative curvature are left along the lowest
/// Hessian eigenvector.
pub fn full_optimize(obj: &mut dyn Objective, k: usize, start: TrackPoint, cfg: &TrackerConfig) -> Result<Optimized> {
    let ctl = StepControl {
        regularize: true,
        backtrack: true,
        ..StepControl::from_config(cfg)
    };
    let mut x = start;
    let mut grad_norm = f64::INFINITY;
    for it in 0..=cfg.opt_max_iter {
        let d = obj.derivatives(k, &x)?;
        grad_norm = d.grad.amax();
        let (vals, vecs) = sorted_symmetric_eigen(&d.hess);
        let lambda0 = vals.get(0).copied().unwrap_or(f64::INFINITY);
        if grad_norm <= cfg.opt_tol {
            if lambda0 >= -SADDLE_TOL {
                return Ok(Optimized {
                    point: x,
                    energy: d.energy,
                    lambda0,
                    grad_norm,
                    iterations: it,
                });
            }
            let mut dir: DVector<f64> = vecs.column(0).into_owned();
            if d.grad.dot(&dir) > 0.0 {
                dir = -dir;
            }
            let mut scale = 1.0;
            let mut moved = false;
            for _ in 0..ctl.max_backtrack {
                let trial = obj.displace(&x, &(&dir * scale))?;
                if obj.energy(k, &trial)? < d.energy {
                    x = trial;
                    moved = true;
                    break;
                }
                scale *= ctl.beta;
            }
            if !moved {
                break;
            }
            continue;
        }
        if it == cfg.opt_max_iter {
            break;
        }
        let report = regularized_step(
            &d.grad,
            &d.hess,
            |s| {
                let trial = obj.displace(&x, s)?;
                obj.energy(k, &trial)
            },
            &ctl,
        )?;
        x = obj.displace(&x, &report.step)?;
    }
    Err(Error::NotConverged {
        iterations: cfg.opt_max_iter,
        grad_norm,
    })
}

/// Track the minimum around the loop with one Newton update per grid step and
/// classify the closing overlap.
pub fn track(obj: &mut dyn Objective, ansatz: &str, cfg: &TrackerConfig) -> Result<BerryPhaseResult> {
    cfg.validate()?;
    let clock = Instant::now();
    let n = obj.n_steps();
    let start = obj.initial_point()?;
    let opt = full_optimize(obj, 0, start, cfg)?;
    let mut trace = vec![TrackState {
        t: 0.0,
        energy: opt.energy,
        lambda0: opt.lambda0,
        step_norm: 0.0,
        shift: 0.0,
        backtracks: 0,
    }];
    let first = opt.point;
    let mut x = first.clone();
    let mut noise = NoiseModel::new(cfg.sigma2_grad, cfg.sigma2_hess, cfg.seed)?.with_symmetrize(cfg.symmetrize_noise);
    let ctl = StepControl::from_config(cfg);

    let finish = |outcome: Outcome,
                  reason: Option<FailReason>,
                  omega: Option<f64>,
                  omega_exact: Option<f64>,
                  trace: Vec<TrackState>,
                  x: &TrackPoint,
                  transfer: (Option<f64>, f64)| BerryPhaseResult {
        outcome,
        fail_reason: reason,
        omega,
        omega_exact,
        n_steps: n,
        ansatz: ansatz.to_string(),
        config: cfg.clone(),
        trace,
        theta_initial: first.theta.clone(),
        theta_final: x.theta.clone(),
        transfer_residual: transfer.0,
        rotation_l1: transfer.1,
        seed: cfg.seed,
        wall_time_s: clock.elapsed().as_secs_f64(),
    };

    for k in 1..=n {
        let t = k as f64 / n as f64;
        let d = obj.derivatives(k, &x)?;
        let (grad, hess) = noise.perturb(&d.grad, &d.hess);
        let lambda0 = lowest_eigenvalue(&hess);
        if !cfg.reg && lambda0 < cfg.m_thr {
            trace.push(TrackState {
                t,
                energy: d.energy,
                lambda0,
                step_norm: 0.0,
                shift: 0.0,
                backtracks: 0,
            });
            return Ok(finish(
                Outcome::Fail,
                Some(FailReason::NonConvexHessian),
                None,
                None,
                trace,
                &x,
                (None, 0.0),
            ));
        }
        let report = regularized_step(
            &grad,
            &hess,
            |s| {
                let trial = obj.displace(&x, s)?;
                obj.energy(k, &trial)
            },
            &ctl,
        )?;
        x = obj.displace(&x, &report.step)?;
        trace.push(TrackState {
            t,
            energy: report.energy_after,
            lambda0,
            step_norm: report.step.norm(),
            shift: report.shift,
            backtracks: report.backtracks,
        });
        if report.exhausted {
            return Ok(finish(
                Outcome::Fail,
                Some(FailReason::BacktrackExhausted),
                None,
                None,
                trace,
                &x,
                (None, 0.0),
            ));
        }
    }

    let overlap = match obj.closing_overlap(&first, &x) {
        Ok(o) => o,
        Err(Error::RealLog(_)) => {
            return Ok(finish(
                Outcome::Fail,
                Some(FailReason::RealLogFailure),
                None,
                None,
                trace,
                &x,
                (None, 0.0),
            ));
        }
        Err(e) => return Err(e),
    };
    let exact = overlap.omega;
    let measured = match cfg.overlap_shots {
        Some(shots) => simulate_hadamard_test(exact.clamp(-1.0, 1.0), shots, cfg.seed ^ HADAMARD_SEED_SALT)?,
        None => exact,
    };
    let (outcome, reason) = classify(measured, cfg.fidelity);
    Ok(finish(
        outcome,
        reason,
        Some(measured),
        Some(exact),
        trace,
        &x,
        (overlap.transfer_residual, overlap.rotation_l1),
    ))
}

/// Resolve the Berry phase of `spec` with the given circuit family.
pub fn run_loop(spec: &LoopSpec, ansatz: AnsatzChoice, cfg: &TrackerConfig) -> Result<BerryPhaseResult> {
    cfg.validate()?;
    spec.check_closure()?;
    let mut obj = build_objective(spec, ansatz, cfg)?;
    track(obj.as_mut(), &ansatz.to_string(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracker::{Derivatives, LoopOverlap};
    use nalgebra::DMatrix;

    /// `E = sum_i a_i (x_i - c_i)^2 / 2`, independent of the grid point.
    struct Quadratic {
        a: Vec<f64>,
        c: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn n_params(&self) -> usize {
            self.a.len()
        }
        fn n_steps(&self) -> usize {
            4
        }
        fn initial_point(&mut self) -> Result<TrackPoint> {
            Ok(TrackPoint {
                theta: vec![0.0; self.a.len()],
                orbitals: None,
            })
        }
        fn energy(&mut self, _k: usize, x: &TrackPoint) -> Result<f64> {
            Ok((0..self.a.len())
                .map(|i| 0.5 * self.a[i] * (x.theta[i] - self.c[i]).powi(2))
                .sum())
        }
        fn derivatives(&mut self, k: usize, x: &TrackPoint) -> Result<Derivatives> {
            let n = self.a.len();
            Ok(Derivatives {
                energy: self.energy(k, x)?,
                grad: DVector::from_fn(n, |i, _| self.a[i] * (x.theta[i] - self.c[i])),
                hess: DMatrix::from_diagonal(&DVector::from_vec(self.a.clone())),
            })
        }
        fn displace(&self, x: &TrackPoint, step: &DVector<f64>) -> Result<TrackPoint> {
            Ok(TrackPoint {
                theta: x.theta.iter().zip(step.iter()).map(|(a, b)| a + b).collect(),
                orbitals: None,
            })
        }
        fn closing_overlap(&mut self, _: &TrackPoint, _: &TrackPoint) -> Result<LoopOverlap> {
            Ok(LoopOverlap {
                omega: 1.0,
                transfer_residual: None,
                rotation_l1: 0.0,
            })
        }
    }

    #[test]
    fn quadratic_optimizes_in_one_iteration() {
        let mut q = Quadratic {
            a: vec![1.0],
            c: vec![1.0],
        };
        let cfg = TrackerConfig::default();
        let x0 = q.initial_point().unwrap();
        let opt = full_optimize(&mut q, 0, x0, &cfg).unwrap();
        assert_eq!(opt.iterations, 1);
        assert!((opt.point.theta[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn saddle_start_is_escaped() {
        let mut q = Quadratic {
            a: vec![-1.0, 2.0],
            c: vec![0.0, 0.5],
        };
        let cfg = TrackerConfig {
            opt_max_iter: 5,
            ..Default::default()
        };
        let x0 = q.initial_point().unwrap();
        // unbounded below along the first axis
        assert!(matches!(
            full_optimize(&mut q, 0, x0, &cfg),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn classification() {
        assert_eq!(classify(-0.99, 0.5), (Outcome::Pi, None));
        assert_eq!(classify(0.8, 0.5), (Outcome::Zero, None));
        assert_eq!(classify(0.5, 0.5), (Outcome::Fail, Some(FailReason::LowFidelity)));
        assert_eq!(classify(0.0, 0.01), (Outcome::Fail, Some(FailReason::LowFidelity)));
        assert_eq!(classify(-0.0, 0.01), (Outcome::Fail, Some(FailReason::LowFidelity)));
    }

    fn qubit(name: &str, n: usize, reg: bool) -> BerryPhaseResult {
        let spec = LoopSpec::builtin(name, n + 1).unwrap();
        let cfg = TrackerConfig {
            reg,
            ..TrackerConfig::with_steps(n)
        };
        run_loop(&spec, AnsatzChoice::Direct, &cfg).unwrap()
    }

    #[test]
    fn qubit_ci_is_pi() {
        let r = qubit("qubit-ci", 25, false);
        assert_eq!(r.outcome, Outcome::Pi);
        // E = -cos(2e) in the lag e behind the minimum; one Newton step maps e to e - tan(2e)/2
        let mut e = 0.0_f64;
        for _ in 0..25 {
            e += std::f64::consts::PI / 25.0;
            e -= (2.0 * e).tan() / 2.0;
        }
        assert!((r.omega.unwrap() + e.cos()).abs() < 1e-12);
        assert!((r.omega.unwrap() + 1.0).abs() < 1e-5);
        assert_eq!(r.trace.len(), 26);
        assert!((r.trace[0].energy + 1.0).abs() < 1e-12);
    }

    #[test]
    fn qubit_trivial_is_zero() {
        let r = qubit("qubit-trivial", 25, false);
        assert_eq!(r.outcome, Outcome::Zero);
        assert!((r.omega.unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn effective_ci_loops() {
        assert_eq!(qubit("effective-ci", 25, true).outcome, Outcome::Pi);
        assert_eq!(qubit("effective-ci-offset", 25, true).outcome, Outcome::Zero);
    }

    #[test]
    fn trace_energies_match_cost() {
        let spec = LoopSpec::builtin("qubit-ci", 26).unwrap();
        let cfg = TrackerConfig::with_steps(25);
        let r = run_loop(&spec, AnsatzChoice::Direct, &cfg).unwrap();
        let mut obj = build_objective(&spec, AnsatzChoice::Direct, &cfg).unwrap();
        let x = TrackPoint {
            theta: r.theta_final.clone(),
            orbitals: None,
        };
        assert!((obj.energy(25, &x).unwrap() - r.trace[25].energy).abs() < 1e-10);
    }

    #[test]
    fn noisy_runs_are_reproducible() {
        let spec = LoopSpec::builtin("qubit-ci", 26).unwrap();
        let cfg = TrackerConfig {
            sigma2_grad: 1e-3,
            sigma2_hess: 1e-3,
            seed: 17,
            reg: true,
            ..TrackerConfig::with_steps(25)
        };
        let a = run_loop(&spec, AnsatzChoice::Direct, &cfg).unwrap().without_timing();
        let b = run_loop(&spec, AnsatzChoice::Direct, &cfg).unwrap().without_timing();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = run_loop(&spec, AnsatzChoice::Direct, &TrackerConfig { seed: 18, ..cfg }).unwrap();
        assert_ne!(a.trace[3].energy, c.trace[3].energy);
    }

    #[test]
    fn analytic_loops_reject_active_space_circuits() {
        let spec = LoopSpec::builtin("qubit-ci", 26).unwrap();
        assert!(run_loop(&spec, AnsatzChoice::Uccd, &TrackerConfig::with_steps(25)).is_err());
    }

    #[test]
    fn result_json_schema() {
        let r = qubit("qubit-ci", 25, false);
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        for key in [
            "outcome",
            "omega",
            "n_steps",
            "config",
            "trace",
            "theta_initial",
            "theta_final",
            "seed",
            "wall_time_s",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["outcome"], "pi");
        for key in ["t", "energy", "lambda0", "step_norm"] {
            assert!(v["trace"][0].get(key).is_some());
        }
    }
}

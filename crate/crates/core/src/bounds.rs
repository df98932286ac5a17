//! Sufficient-condition convergence and sampling bounds for single-step tracking.
//!
//! These are the closed-form worst-case expressions, not practical prescriptions:
//! they show which constants control convergence and cost.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `sqrt(2) - 1`, the contraction margin for one NR step per grid point.
pub const GAMMA: f64 = std::f64::consts::SQRT_2 - 1.0;

/// `(3 - 2 sqrt 2) / 32 = gamma^2 / 32`.
pub const VARIANCE_PREFACTOR: f64 = GAMMA * GAMMA / 32.0;

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// Convexity lower bound.
    pub m: f64,
    /// Lipschitz constant of the Hessian.
    pub lipschitz: f64,
    /// Largest norm of the loop derivative of the gradient.
    pub gdot_max: f64,
    pub n_params: usize,
    /// Gradient norm entering the Hessian variance budget.
    pub grad_norm: f64,
    pub h_norm: f64,
    pub hdot_norm: f64,
    pub gap: f64,
    /// Shots per Hessian element at unit variance.
    pub m_h: f64,
}

impl ProblemConstants {
    pub fn unit() -> Self {
        Self {
            m: 1.0,
            lipschitz: 1.0,
            gdot_max: 1.0,
            n_params: 1,
            grad_norm: 1.0,
            h_norm: 1.0,
            hdot_norm: 1.0,
            gap: 1.0,
            m_h: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("m", self.m)?;
        positive("lipschitz", self.lipschitz)?;
        positive("gdot_max", self.gdot_max)?;
        positive("n_params", self.n_params as f64)?;
        positive("grad_norm", self.grad_norm)?;
        positive("h_norm", self.h_norm)?;
        positive("hdot_norm", self.hdot_norm)?;
        positive("gap", self.gap)?;
        positive("m_h", self.m_h)?;
        Ok(())
    }
}

/// Radius of the quadratic-convergence basin, `m / (4 L)`.
pub fn convergence_radius(m: f64, lipschitz: f64) -> Result<f64> {
    Ok(positive("m", m)? / (4.0 * positive("lipschitz", lipschitz)?))
}

/// `(dt_max, sigma_theta_max) = (m^2 / (8 L gdot), gamma m / (4 L))`.
pub fn step_and_noise_budget(m: f64, lipschitz: f64, gdot_max: f64) -> Result<(f64, f64)> {
    let m = positive("m", m)?;
    let l = positive("lipschitz", lipschitz)?;
    let g = positive("gdot_max", gdot_max)?;
    Ok((m * m / (8.0 * l * g), GAMMA / 4.0 * m / l))
}

/// Per-element variance budgets `(sigma2_grad_max, sigma2_hess_max)`.
pub fn variance_budgets(m: f64, lipschitz: f64, n_params: usize, grad_norm: f64) -> Result<(f64, f64)> {
    let m = positive("m", m)?;
    let l = positive("lipschitz", lipschitz)?;
    let np = positive("n_params", n_params as f64)?;
    let g = positive("grad_norm", grad_norm)?;
    let grad = VARIANCE_PREFACTOR * m.powi(4) / (np * l * l);
    Ok((grad, grad * m * m / (g * g)))
}

/// Bound on `Var[dtheta]` for gradient/Hessian element variances and step norm.
pub fn nr_variance_bound(m: f64, n_params: usize, sigma2_grad: f64, sigma2_hess: f64, step_norm: f64) -> f64 {
    n_params as f64 * (sigma2_grad + sigma2_hess * step_norm * step_norm) / (m * m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotBounds {
    /// `1e3 n_p L^3 |G|^2 gdot / gap^8 * M_H`.
    pub tight: f64,
    /// `1e3 n_p^4 |H|^7 |Hdot| / gap^8 * M_H`.
    pub loose: f64,
    /// Tight form after inserting the unit-factor norm bounds for `L`, `|G|` and `gdot`:
    /// `1e3 n_p^7 |H|^5 |Hdot| / gap^8 * M_H`.
    pub substituted: f64,
}

pub fn total_shots_bound(c: &ProblemConstants) -> Result<ShotBounds> {
    c.validate()?;
    let np = c.n_params as f64;
    let scale = 1e3 * c.m_h / c.gap.powi(8);
    Ok(ShotBounds {
        tight: scale * np * c.lipschitz.powi(3) * c.grad_norm.powi(2) * c.gdot_max,
        loose: scale * np.powi(4) * c.h_norm.powi(7) * c.hdot_norm,
        substituted: scale * np.powi(7) * c.h_norm.powi(5) * c.hdot_norm,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBounds {
    pub g_max: f64,
    pub l_bound: f64,
    pub gdot_bound: f64,
}

/// Norm bounds on the gradient, the third-derivative tensor and the loop
/// derivative of the gradient, with the conservative factors 2, 8, 2.
pub fn derivative_norm_bounds(n_params: usize, h_norm: f64, hdot_norm: f64) -> DerivativeBounds {
    let np = n_params as f64;
    DerivativeBounds {
        g_max: 2.0 * np.sqrt() * h_norm,
        l_bound: 8.0 * np.powf(1.5) * h_norm,
        gdot_bound: 2.0 * np.sqrt() * hdot_norm,
    }
}

/// Lower bound `1 - |theta_a - theta_b|_1` on the overlap of two ansatz states
/// built from unit-norm generators.
pub fn param_overlap_bound(theta_a: &[f64], theta_b: &[f64]) -> Result<f64> {
    if theta_a.len() != theta_b.len() {
        return Err(Error::Dimension {
            expected: theta_a.len(),
            got: theta_b.len(),
        });
    }
    Ok(1.0 - theta_a.iter().zip(theta_b).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSubstitution {
    /// `gdot_max * dt_max`.
    pub gdot_dt: f64,
    /// `sqrt(n_p) |H|`, the value it is replaced by in the loose shot bound.
    pub sqrt_np_h_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub kind: String,
    pub constants: ProblemConstants,
    pub radius: f64,
    pub dt_max: f64,
    pub sigma_theta_max: f64,
    pub sigma2_grad_max: f64,
    pub sigma2_hess_max: f64,
    pub m_tot: ShotBounds,
    pub derivative_bounds: DerivativeBounds,
    pub step_substitution: StepSubstitution,
}

pub fn bounds_report(c: &ProblemConstants) -> Result<BoundsReport> {
    c.validate()?;
    let radius = convergence_radius(c.m, c.lipschitz)?;
    let (dt_max, sigma_theta_max) = step_and_noise_budget(c.m, c.lipschitz, c.gdot_max)?;
    let (sigma2_grad_max, sigma2_hess_max) = variance_budgets(c.m, c.lipschitz, c.n_params, c.grad_norm)?;
    Ok(BoundsReport {
        kind: "sufficient-condition bounds".into(),
        constants: c.clone(),
        radius,
        dt_max,
        sigma_theta_max,
        sigma2_grad_max,
        sigma2_hess_max,
        m_tot: total_shots_bound(c)?,
        derivative_bounds: derivative_norm_bounds(c.n_params, c.h_norm, c.hdot_norm),
        step_substitution: StepSubstitution {
            gdot_dt: c.gdot_max * dt_max,
            sqrt_np_h_norm: (c.n_params as f64).sqrt() * c.h_norm,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn radius_values() {
        assert_eq!(convergence_radius(1.0, 1.0).unwrap(), 0.25);
        assert!((convergence_radius(0.1, 10.0).unwrap() - 0.0025).abs() < 1e-15);
        assert!(convergence_radius(0.0, 1.0).is_err());
        assert!(convergence_radius(1.0, -1.0).is_err());
    }

    #[test]
    fn cubic_nr_contracts_inside_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let t0: f64 = rng.random_range(-0.25..=0.25);
            let t1 = t0 - (t0 + t0 * t0 / 2.0) / (1.0 + t0);
            assert!(t1.abs() <= t0 * t0 + 1e-15);
        }
    }

    #[test]
    fn step_budget_values() {
        let (dt, st) = step_and_noise_budget(1.0, 1.0, 1.0).unwrap();
        assert_eq!(dt, 0.125);
        assert!((st - 0.103_553).abs() < 1e-6);
        let (dt2, _) = step_and_noise_budget(2.0, 1.0, 1.0).unwrap();
        assert!((dt2 / dt - 4.0).abs() < 1e-14);
        assert!(step_and_noise_budget(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn variance_budget_values() {
        let (g, h) = variance_budgets(1.0, 1.0, 1, 1.0).unwrap();
        assert!((g - (3.0 - 2.0 * 2f64.sqrt()) / 32.0).abs() < 1e-16);
        assert!((g - 0.005_362).abs() < 1e-6);
        assert_eq!(g, h);
        assert!((VARIANCE_PREFACTOR - (3.0 - 2.0 * 2f64.sqrt()) / 32.0).abs() < 1e-16);
        let (g4, h4) = variance_budgets(1.0, 1.0, 4, 1.0).unwrap();
        assert!((g / g4 - 4.0).abs() < 1e-12 && (h / h4 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn shot_bound_scaling() {
        let c = ProblemConstants::unit();
        let b = total_shots_bound(&c).unwrap();
        assert_eq!((b.tight, b.loose), (1e3, 1e3));
        let half = total_shots_bound(&ProblemConstants { gap: 0.5, ..c.clone() }).unwrap();
        assert!((half.tight / b.tight - 256.0).abs() < 1e-9);
        assert!((half.loose / b.loose - 256.0).abs() < 1e-9);
        assert!(total_shots_bound(&ProblemConstants { m_h: 0.0, ..c }).is_err());
    }

    // Under L <= n^1.5 |H|, |G| <= n^0.5 |H|, gdot <= n^0.5 |Hdot| the tight form is
    // bounded by the substituted form; the printed loose form only dominates when
    // |H|^2 >= n^3.
    #[test]
    fn shot_bound_substitutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let n_params = rng.random_range(1..40usize);
            let np = n_params as f64;
            let h_norm: f64 = rng.random_range(0.1..10.0);
            let hdot_norm: f64 = rng.random_range(0.1..10.0);
            let c = ProblemConstants {
                m: 1.0,
                lipschitz: rng.random_range(0.0..1.0) * np.powf(1.5) * h_norm + 1e-12,
                grad_norm: rng.random_range(0.0..1.0) * np.sqrt() * h_norm + 1e-12,
                gdot_max: rng.random_range(0.0..1.0) * np.sqrt() * hdot_norm + 1e-12,
                n_params,
                h_norm,
                hdot_norm,
                gap: rng.random_range(0.1..1.0),
                m_h: rng.random_range(1.0..100.0),
            };
            let b = total_shots_bound(&c).unwrap();
            assert!(b.tight <= b.substituted * (1.0 + 1e-12));
            if h_norm * h_norm >= np.powi(3) {
                assert!(b.tight <= b.loose * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn derivative_bound_values() {
        let d = derivative_norm_bounds(1, 1.0, 1.0);
        assert_eq!((d.g_max, d.l_bound, d.gdot_bound), (2.0, 8.0, 2.0));
        let d = derivative_norm_bounds(4, 0.5, 3.0);
        assert_eq!((d.g_max, d.l_bound, d.gdot_bound), (2.0, 32.0, 12.0));
    }

    #[test]
    fn overlap_bound_values() {
        assert_eq!(param_overlap_bound(&[0.3, -1.0], &[0.3, -1.0]).unwrap(), 1.0);
        assert_eq!(param_overlap_bound(&[0.0, 0.0], &[1.5, -0.5]).unwrap(), -1.0);
        assert!(param_overlap_bound(&[0.0], &[]).is_err());
    }

    #[test]
    fn budgets_are_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let m: f64 = rng.random_range(0.01..2.0);
            let l: f64 = rng.random_range(0.01..2.0);
            let g: f64 = rng.random_range(0.01..2.0);
            let n = rng.random_range(1..50usize);
            let f: f64 = rng.random_range(1.01..3.0);
            let (dt, st) = step_and_noise_budget(m, l, g).unwrap();
            let (vg, vh) = variance_budgets(m, l, n, g).unwrap();
            let (dt_m, st_m) = step_and_noise_budget(m * f, l, g).unwrap();
            let (vg_m, vh_m) = variance_budgets(m * f, l, n, g).unwrap();
            assert!(dt_m > dt && st_m > st && vg_m > vg && vh_m > vh);
            let (dt_l, st_l) = step_and_noise_budget(m, l * f, g).unwrap();
            let (vg_l, vh_l) = variance_budgets(m, l * f, n, g).unwrap();
            assert!(dt_l < dt && st_l < st && vg_l < vg && vh_l < vh);
            let (dt_g, _) = step_and_noise_budget(m, l, g * f).unwrap();
            assert!(dt_g < dt);
            let (vg_n, vh_n) = variance_budgets(m, l, n + 1, g).unwrap();
            assert!(vg_n < vg && vh_n < vh);
        }
    }

    #[test]
    fn report_is_finite_and_serializes() {
        let r = bounds_report(&ProblemConstants::unit()).unwrap();
        assert_eq!(r.dt_max, 0.125);
        assert_eq!(r.step_substitution.gdot_dt, 0.125);
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["m_tot"]["tight"].is_number() && json["m_tot"]["loose"].is_number());
    }
}

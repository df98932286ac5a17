use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::linalg::{lowest_eigenvalue, solve_symmetric};

use super::TrackerConfig;

/// `d = -H^{-1} g` by a symmetric solve.
pub fn newton_step(grad: &DVector<f64>, hess: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(-solve_symmetric(hess, grad)?)
}

/// Regularization and line-search constants of one update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub m_thr: f64,
    pub regularize: bool,
    pub backtrack: bool,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub mu: f64,
    pub max_backtrack: usize,
}

impl StepControl {
    pub fn from_config(cfg: &TrackerConfig) -> Self {
        Self {
            m_thr: cfg.m_thr,
            regularize: cfg.reg,
            backtrack: cfg.reg && cfg.backtrack,
            alpha: cfg.alpha,
            beta: cfg.beta,
            rho: cfg.rho,
            mu: cfg.mu,
            max_backtrack: cfg.max_backtrack,
        }
    }

    /// Shift added to the diagonal for a Hessian with lowest eigenvalue `lambda0`.
    pub fn shift(&self, lambda0: f64) -> f64 {
        if self.regularize && lambda0 < self.m_thr {
            self.rho * lambda0.abs() + self.mu
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    /// Accepted displacement.
    pub step: DVector<f64>,
    pub lambda0: f64,
    pub shift: f64,
    pub backtracks: usize,
    pub energy_before: f64,
    pub energy_after: f64,
    /// The sufficient-decrease test never passed within `max_backtrack` halvings.
    pub exhausted: bool,
}

/// One Newton update with optional diagonal shift and Armijo backtracking.
///
/// `cost(d)` is the energy after displacing the current point by `d`;
/// `cost(0)` is the current energy.
pub fn regularized_step<F>(
    grad: &DVector<f64>,
    hess: &DMatrix<f64>,
    mut cost: F,
    ctl: &StepControl,
) -> Result<StepReport>
where
    F: FnMut(&DVector<f64>) -> Result<f64>,
{
    let n = grad.len();
    let lambda0 = lowest_eigenvalue(hess);
    let shift = ctl.shift(lambda0);
    let b = hess + DMatrix::identity(n, n) * shift;
    let mut step = newton_step(grad, &b)?;
    let energy_before = cost(&DVector::zeros(n))?;
    let mut energy_after = cost(&step)?;
    let mut backtracks = 0;
    let mut exhausted = false;
    if ctl.backtrack {
        let slope = ctl.alpha * grad.dot(&step);
        let mut scale = 1.0;
        while energy_after > energy_before + scale * slope {
            if backtracks == ctl.max_backtrack {
                exhausted = true;
                break;
            }
            step *= ctl.beta;
            scale *= ctl.beta;
            backtracks += 1;
            energy_after = cost(&step)?;
        }
    }
    Ok(StepReport {
        step,
        lambda0,
        shift,
        backtracks,
        energy_before,
        energy_after,
        exhausted,
    })
}

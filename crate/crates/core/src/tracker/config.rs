use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tracking and optimizer settings; every constant is exposed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub n_steps: usize,
    /// Convexity threshold below which a step is rejected or regularized.
    pub m_thr: f64,
    /// Regularized update with line search; otherwise a plain Newton step
    /// that fails on insufficient convexity.
    pub reg: bool,
    /// Line search inside the regularized update.
    pub backtrack: bool,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub rho: f64,
    /// Required squared final overlap.
    pub fidelity: f64,
    pub sigma2_grad: f64,
    pub sigma2_hess: f64,
    pub symmetrize_noise: bool,
    pub seed: u64,
    pub max_backtrack: usize,
    /// Hadamard-test shots for the final overlap; exact overlap when absent.
    pub overlap_shots: Option<u64>,
    pub optimize_orbitals: bool,
    pub include_active_active: bool,
    /// Largest tolerated coupling between orbital blocks in the final transfer.
    pub block_tol: f64,
    pub opt_tol: f64,
    pub opt_max_iter: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            n_steps: 25,
            m_thr: 1e-4,
            reg: false,
            backtrack: true,
            alpha: 1e-4,
            beta: 0.5,
            mu: 1e-4,
            rho: 2.0,
            fidelity: 0.5,
            sigma2_grad: 0.0,
            sigma2_hess: 0.0,
            symmetrize_noise: true,
            seed: 0,
            max_backtrack: 50,
            overlap_shots: None,
            optimize_orbitals: true,
            include_active_active: false,
            block_tol: 0.1,
            opt_tol: 1e-8,
            opt_max_iter: 1000,
        }
    }
}

impl TrackerConfig {
    pub fn with_steps(n_steps: usize) -> Self {
        Self {
            n_steps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 2 {
            return Err(invalid("n_steps must be at least 2"));
        }
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        open_unit("alpha", self.alpha)?;
        open_unit("beta", self.beta)?;
        open_unit("fidelity", self.fidelity)?;
        for (name, v) in [
            ("mu", self.mu),
            ("rho", self.rho),
            ("block_tol", self.block_tol),
            ("opt_tol", self.opt_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.m_thr.is_finite() {
            return Err(invalid("m_thr must be finite"));
        }
        for (name, v) in [("sigma2_grad", self.sigma2_grad), ("sigma2_hess", self.sigma2_hess)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.overlap_shots == Some(0) {
            return Err(invalid("overlap_shots must be at least 1"));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma2_grad == 0.0 && self.sigma2_hess == 0.0
    }
}

/// Circuit family used for the tracked state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AnsatzChoice {
    Uccd,
    Npf(usize),
    /// Hyperspherical rotations spanning a whole dense register.
    Direct,
}

impl FromStr for AnsatzChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uccd" => Ok(Self::Uccd),
            "direct" => Ok(Self::Direct),
            other => match other.strip_prefix("npf:") {
                Some(l) => l
                    .parse()
                    .map(Self::Npf)
                    .map_err(|_| invalid(format!("bad layer count in '{s}'"))),
                None => Err(invalid(format!(
                    "unknown ansatz '{s}' (expected uccd, npf:<layers> or direct)"
                ))),
            },
        }
    }
}

impl TryFrom<String> for AnsatzChoice {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AnsatzChoice> for String {
    fn from(a: AnsatzChoice) -> Self {
        a.to_string()
    }
}

impl fmt::Display for AnsatzChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uccd => write!(f, "uccd"),
            Self::Npf(l) => write!(f, "npf:{l}"),
            Self::Direct => write!(f, "direct"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = TrackerConfig::default();
        c.validate().unwrap();
        assert_eq!(
            (c.m_thr, c.alpha, c.beta, c.rho, c.mu, c.fidelity),
            (1e-4, 1e-4, 0.5, 2.0, 1e-4, 0.5)
        );
        assert_eq!(c.max_backtrack, 50);
    }

    #[test]
    fn rejects_bad_constants() {
        assert!(TrackerConfig::with_steps(1).validate().is_err());
        assert!(TrackerConfig {
            beta: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrackerConfig {
            fidelity: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrackerConfig {
            sigma2_hess: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: TrackerConfig = serde_json::from_str(r#"{"n_steps": 9, "reg": true}"#).unwrap();
        assert_eq!(c.n_steps, 9);
        assert!(c.reg);
        assert_eq!(c.rho, 2.0);
    }

    #[test]
    fn ansatz_names_round_trip() {
        for s in ["uccd", "npf:4", "direct"] {
            let a: AnsatzChoice = s.parse().unwrap();
            assert_eq!(a.to_string(), s);
        }
        assert!("npf:x".parse::<AnsatzChoice>().is_err());
        assert!("ucc".parse::<AnsatzChoice>().is_err());
    }
}

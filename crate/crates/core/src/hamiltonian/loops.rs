use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{load_bundle, ActiveSpaceSpec, DenseFourier, EffectiveCiParams, IntegralBundle, QubitFamily};
use crate::error::{invalid, Error, Result};
use crate::linalg::max_abs_diff;

const GRID_TOL: f64 = 1e-9;
const CLOSURE_TOL: f64 = 1e-8;

pub const BUILTIN_LOOPS: &[&str] = &["qubit-ci", "qubit-trivial", "effective-ci", "effective-ci-offset"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundlePoint {
    pub t: f64,
    pub path: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LoopKind {
    AnalyticQubit {
        family: QubitFamily,
    },
    EffectiveCi {
        params: EffectiveCiParams,
    },
    DenseFourier(DenseFourier),
    BundleList {
        points: Vec<BundlePoint>,
        active_space: ActiveSpaceSpec,
        /// Initial MO coefficients over the AO basis at `t = 0`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mo_coeff_ao: Option<Vec<Vec<f64>>>,
    },
}

/// A closed loop sampled on the uniform grid `t_k = k / (n_points - 1)`; the
/// last point closes the loop and must reproduce the first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSpec {
    #[serde(flatten)]
    pub kind: LoopKind,
    pub n_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip)]
    base_dir: PathBuf,
}

/// The Hamiltonian source at one grid point.
#[derive(Clone, Debug)]
pub enum LoopPoint {
    Dense(DMatrix<f64>),
    Bundle(Box<IntegralBundle>),
}

impl LoopSpec {
    pub fn new(kind: LoopKind, n_points: usize) -> Result<Self> {
        let spec = Self {
            kind,
            n_points,
            name: None,
            base_dir: PathBuf::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Built-in analytic loops; `n_points` counts the closing point.
    pub fn builtin(name: &str, n_points: usize) -> Result<Self> {
        let kind = match name {
            "qubit-ci" => LoopKind::AnalyticQubit {
                family: QubitFamily::QubitCi,
            },
            "qubit-trivial" => LoopKind::AnalyticQubit {
                family: QubitFamily::QubitTrivial,
            },
            "effective-ci" => LoopKind::EffectiveCi {
                params: EffectiveCiParams {
                    hx: 1.0,
                    hz: 0.5,
                    r_cross: [0.0, 0.0],
                    center: [0.1, -0.05],
                    radius: 0.5,
                },
            },
            "effective-ci-offset" => LoopKind::EffectiveCi {
                params: EffectiveCiParams {
                    hx: 1.0,
                    hz: 0.5,
                    r_cross: [0.0, 0.0],
                    center: [1.2, 0.3],
                    radius: 0.5,
                },
            },
            _ => {
                return Err(invalid(format!(
                    "unknown builtin loop '{name}' (known: {})",
                    BUILTIN_LOOPS.join(", ")
                )))
            }
        };
        let mut spec = Self::new(kind, n_points)?;
        spec.name = Some(name.to_string());
        Ok(spec)
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut spec: LoopSpec = serde_json::from_str(text)?;
        spec.base_dir = base_dir.to_path_buf();
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &dir)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        match &self.kind {
            LoopKind::AnalyticQubit { family } => family.name().to_string(),
            LoopKind::EffectiveCi { .. } => "effective-ci".into(),
            LoopKind::DenseFourier(_) => "dense-fourier".into(),
            LoopKind::BundleList { .. } => "bundle-list".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_points < 3 {
            return Err(invalid("a loop needs at least 3 grid points (2 steps plus closure)"));
        }
        match &self.kind {
            LoopKind::AnalyticQubit { .. } => Ok(()),
            LoopKind::EffectiveCi { params } => params.validate(),
            LoopKind::DenseFourier(f) => f.validate(),
            LoopKind::BundleList {
                points,
                active_space,
                mo_coeff_ao,
            } => {
                if points.len() != self.n_points {
                    return Err(invalid(format!(
                        "loop declares {} points but lists {}",
                        self.n_points,
                        points.len()
                    )));
                }
                for (k, p) in points.iter().enumerate() {
                    if (p.t - self.t(k)).abs() > GRID_TOL {
                        return Err(invalid(format!(
                            "point {k} has t = {} but the uniform grid needs {}",
                            p.t,
                            self.t(k)
                        )));
                    }
                }
                active_space.validate()?;
                if let Some(c) = mo_coeff_ao {
                    let n = active_space.n_orb();
                    if c.len() != n || c.iter().any(|r| r.len() != n) {
                        return Err(invalid("mo_coeff_ao must be n_orb x n_orb"));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn n_intervals(&self) -> usize {
        self.n_points - 1
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 / self.n_intervals() as f64
    }

    pub fn grid_index(&self, t: f64) -> Result<usize> {
        let x = t * self.n_intervals() as f64;
        let k = x.round();
        if !(0.0..=self.n_intervals() as f64).contains(&k) || (x - k).abs() > GRID_TOL * self.n_intervals() as f64 {
            return Err(Error::OffGrid(t));
        }
        Ok(k as usize)
    }

    /// Grid points advanced per tracking step for `n_steps` steps.
    pub fn stride(&self, n_steps: usize) -> Result<usize> {
        if n_steps < 2 {
            return Err(invalid("at least 2 steps are required"));
        }
        if !self.n_intervals().is_multiple_of(n_steps) {
            return Err(Error::OffGrid(1.0 / n_steps as f64));
        }
        Ok(self.n_intervals() / n_steps)
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self.kind, LoopKind::BundleList { .. })
    }

    /// Same analytic family on a different grid.
    pub fn regrid(&self, n_points: usize) -> Result<Self> {
        if !self.is_analytic() {
            return Err(Error::Unsupported(
                "bundle loops cannot be resampled (no interpolation between geometries)".into(),
            ));
        }
        let mut out = self.clone();
        out.n_points = n_points;
        out.validate()?;
        Ok(out)
    }

    pub fn active_space(&self) -> Option<ActiveSpaceSpec> {
        match &self.kind {
            LoopKind::BundleList { active_space, .. } => Some(*active_space),
            _ => None,
        }
    }

    pub fn mo_coeff_ao(&self) -> Option<DMatrix<f64>> {
        match &self.kind {
            LoopKind::BundleList {
                mo_coeff_ao: Some(c), ..
            } => Some(DMatrix::from_fn(c.len(), c.len(), |i, j| c[i][j])),
            _ => None,
        }
    }

    /// Closed-form dense Hamiltonian of an analytic loop at any `t`.
    pub fn analytic_hamiltonian(&self, t: f64) -> Result<DMatrix<f64>> {
        match &self.kind {
            LoopKind::AnalyticQubit { family } => Ok(family.hamiltonian(t)),
            LoopKind::EffectiveCi { params } => Ok(params.hamiltonian(t)),
            LoopKind::DenseFourier(f) => Ok(f.hamiltonian(t)),
            LoopKind::BundleList { .. } => Err(Error::Unsupported(
                "bundle loops have no closed-form Hamiltonian".into(),
            )),
        }
    }

    pub fn dense_dim(&self) -> Option<usize> {
        match &self.kind {
            LoopKind::AnalyticQubit { .. } | LoopKind::EffectiveCi { .. } => Some(2),
            LoopKind::DenseFourier(f) => Some(f.dim()),
            LoopKind::BundleList { .. } => None,
        }
    }

    pub fn bundle_path(&self, k: usize) -> Option<PathBuf> {
        match &self.kind {
            LoopKind::BundleList { points, .. } => points.get(k).map(|p| self.base_dir.join(&p.path)),
            _ => None,
        }
    }

    pub fn point(&self, k: usize) -> Result<LoopPoint> {
        if k >= self.n_points {
            return Err(Error::OffGrid(k as f64 / self.n_intervals() as f64));
        }
        match &self.kind {
            LoopKind::BundleList { .. } => {
                let path = self.bundle_path(k).expect("bundle index checked");
                Ok(LoopPoint::Bundle(Box::new(load_bundle(&path)?)))
            }
            _ => Ok(LoopPoint::Dense(self.analytic_hamiltonian(self.t(k))?)),
        }
    }

    /// Hamiltonian source at an on-grid `t`; there is no interpolation.
    pub fn at(&self, t: f64) -> Result<LoopPoint> {
        self.point(self.grid_index(t)?)
    }

    /// Largest elementwise difference between the first and the closing point.
    pub fn closure_error(&self) -> Result<f64> {
        let last = self.n_points - 1;
        Ok(match (self.point(0)?, self.point(last)?) {
            (LoopPoint::Dense(a), LoopPoint::Dense(b)) => max_abs_diff(&a, &b),
            (LoopPoint::Bundle(a), LoopPoint::Bundle(b)) => a.max_difference(&b),
            _ => f64::INFINITY,
        })
    }

    pub fn check_closure(&self) -> Result<()> {
        let e = self.closure_error()?;
        if e > CLOSURE_TOL {
            return Err(Error::NotClosed(e));
        }
        Ok(())
    }
}

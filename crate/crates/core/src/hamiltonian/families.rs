use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Two-level model `hx (R - Rx)_x sigma_x + hz (R - Rx)_z sigma_z` sampled on a
/// circle of `radius` around `center` in the (x, z) plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCiParams {
    pub hx: f64,
    pub hz: f64,
    pub r_cross: [f64; 2],
    pub center: [f64; 2],
    pub radius: f64,
}

impl EffectiveCiParams {
    pub fn validate(&self) -> Result<()> {
        if self.hx == 0.0 || self.hz == 0.0 {
            return Err(invalid("effective model slopes must be non-zero"));
        }
        if self.radius <= 0.0 || !self.radius.is_finite() {
            return Err(invalid("loop radius must be positive"));
        }
        Ok(())
    }

    pub fn point(&self, t: f64) -> [f64; 2] {
        let (s, c) = (TAU * t).sin_cos();
        [self.center[0] + self.radius * c, self.center[1] + self.radius * s]
    }

    pub fn hamiltonian(&self, t: f64) -> DMatrix<f64> {
        effective_ci_hamiltonian(self, self.point(t))
    }
}

pub fn effective_ci_hamiltonian(p: &EffectiveCiParams, r: [f64; 2]) -> DMatrix<f64> {
    let x = p.hx * (r[0] - p.r_cross[0]);
    let z = p.hz * (r[1] - p.r_cross[1]);
    DMatrix::from_row_slice(2, 2, &[z, x, x, -z])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QubitFamily {
    /// `cos(2 pi t) Z + sin(2 pi t) X`, winds around the degeneracy at the origin.
    QubitCi,
    /// `(2 + cos(2 pi t)) Z + sin(2 pi t) X`, stays away from it.
    QubitTrivial,
}

impl QubitFamily {
    pub fn name(self) -> &'static str {
        match self {
            QubitFamily::QubitCi => "qubit-ci",
            QubitFamily::QubitTrivial => "qubit-trivial",
        }
    }

    pub fn hamiltonian(self, t: f64) -> DMatrix<f64> {
        let (s, c) = (TAU * t).sin_cos();
        let z = match self {
            QubitFamily::QubitCi => c,
            QubitFamily::QubitTrivial => 2.0 + c,
        };
        DMatrix::from_row_slice(2, 2, &[z, s, s, -z])
    }
}

/// `H(t) = A + cos(2 pi t) B + sin(2 pi t) C` with real symmetric `A, B, C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseFourier {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

fn to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(invalid("matrix rows must form a square array"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl DenseFourier {
    pub fn new(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Self {
        Self {
            a: to_rows(a),
            b: to_rows(b),
            c: to_rows(c),
        }
    }

    /// Random symmetric coefficients with entries uniform in `[-1, 1]`; `b` and `c`
    /// are scaled by `loop_scale`.
    pub fn random<R: Rng>(dim: usize, loop_scale: f64, rng: &mut R) -> Self {
        let mut sym = |scale: f64| {
            let mut m = DMatrix::zeros(dim, dim);
            for i in 0..dim {
                for j in i..dim {
                    let v = scale * rng.random_range(-1.0..1.0);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            m
        };
        let a = sym(1.0);
        let b = sym(loop_scale);
        let c = sym(loop_scale);
        Self::new(&a, &b, &c)
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn validate(&self) -> Result<()> {
        let a = to_matrix(&self.a)?;
        let b = to_matrix(&self.b)?;
        let c = to_matrix(&self.c)?;
        let n = a.nrows();
        if b.nrows() != n || c.nrows() != n || !n.is_power_of_two() || n < 2 {
            return Err(invalid("fourier loop matrices must share a power-of-two dimension"));
        }
        for m in [&a, &b, &c] {
            if crate::linalg::max_abs_diff(m, &m.transpose()) > 1e-10 {
                return Err(invalid("fourier loop matrices must be symmetric"));
            }
        }
        Ok(())
    }

    pub fn hamiltonian(&self, t: f64) -> DMatrix<f64> {
        let (s, c) = (TAU * t).sin_cos();
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.a[i][j] + c * self.b[i][j] + s * self.c[i][j])
    }
}

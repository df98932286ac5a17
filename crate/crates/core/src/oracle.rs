//! Exact-diagonalization reference: real ground states along a densely sampled
//! loop with sign propagation, the discrete Berry phase, and gap surfaces.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{
    build_active_hamiltonian, effective_ci_hamiltonian, load_bundle, ActiveSpaceSpec, IntegralBundle, LoopKind,
    LoopPoint, LoopSpec, QubitFamily,
};
use crate::linalg::sorted_symmetric_eigen;
use crate::orbital::rhf_orbitals;
use crate::statevec::fermion::{sector_indices, spin_squared};
use crate::tracker::{initial_orbitals, Phase};

pub const DEFAULT_DENSE_POINTS: usize = 400;
pub const DEGENERACY_TOL: f64 = 1e-9;
pub const MIN_LINK_OVERLAP: f64 = 0.5;
pub const MIN_CLOSING_OVERLAP: f64 = 0.9;
/// Energy penalty per unit of `S^2`, keeping non-singlets above the singlet states.
const SPIN_PENALTY: f64 = 10.0;
/// Bundle loops up to this many orbitals are diagonalized in the full space.
pub const FULL_SPACE_ORBITALS: usize = 6;

/// Real ground states on `t_k = k / n`, `k < n`, each sign-fixed to overlap
/// positively with its predecessor.
#[derive(Clone, Debug)]
pub struct GaugeFixedPath {
    pub t_grid: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub energies: Vec<f64>,
    pub gaps: Vec<f64>,
    /// `<chi_k | chi_{k+1}>` after sign fixing.
    pub link_overlaps: Vec<f64>,
    /// `<chi_{n-1} | chi_0>`: the seam closes onto the first eigenvector.
    pub closing_overlap: f64,
}

impl GaugeFixedPath {
    pub fn min_link_overlap(&self) -> f64 {
        self.link_overlaps
            .iter()
            .copied()
            .chain(std::iter::once(self.closing_overlap.abs()))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_gap(&self) -> (f64, f64) {
        self.t_grid.iter().zip(&self.gaps).fold(
            (f64::NAN, f64::INFINITY),
            |acc, (&t, &g)| if g < acc.1 { (t, g) } else { acc },
        )
    }
}

/// Ground energy, gap and ground vector of a dense real symmetric matrix.
fn ground(h: &DMatrix<f64>) -> (f64, f64, DVector<f64>) {
    let (vals, vecs) = sorted_symmetric_eigen(h);
    let gap = if vals.len() > 1 {
        vals[1] - vals[0]
    } else {
        f64::INFINITY
    };
    (vals[0], gap, vecs.column(0).into_owned())
}

/// Singlet-restricted CASCI matrix in the spin sector of `active`.
fn casci_matrix(b: &IntegralBundle, c: &DMatrix<f64>, active: &ActiveSpaceSpec) -> Result<DMatrix<f64>> {
    let ham = build_active_hamiltonian(b, c, active)?;
    let (n_up, n_down) = active.spin_sector()?;
    let idx = sector_indices(active.n_active, n_up, n_down);
    let dense = ham.dense();
    let s2 = spin_squared(active.n_active, &idx);
    Ok(DMatrix::from_fn(idx.len(), idx.len(), |i, j| {
        dense[(idx[i], idx[j])] + SPIN_PENALTY * s2[(i, j)] + if i == j { ham.e_const } else { 0.0 }
    }))
}

fn propagate(t_grid: Vec<f64>, raw: Vec<(f64, f64, DVector<f64>)>) -> Result<GaugeFixedPath> {
    let mut states: Vec<DVector<f64>> = Vec::with_capacity(raw.len());
    let mut energies = Vec::with_capacity(raw.len());
    let mut gaps = Vec::with_capacity(raw.len());
    let mut link_overlaps = Vec::with_capacity(raw.len());
    for (k, (e, gap, mut v)) in raw.into_iter().enumerate() {
        if gap < DEGENERACY_TOL {
            return Err(Error::DegeneracyOnPath { t: t_grid[k], gap });
        }
        if let Some(prev) = states.last() {
            let mut o = prev.dot(&v);
            if o < 0.0 {
                v = -v;
                o = -o;
            }
            if o < MIN_LINK_OVERLAP {
                return Err(Error::UnderResolved {
                    t: t_grid[k],
                    overlap: o,
                });
            }
            link_overlaps.push(o);
        }
        states.push(v);
        energies.push(e);
        gaps.push(gap);
    }
    let closing_overlap = states.last().expect("non-empty path").dot(&states[0]);
    if closing_overlap.abs() < MIN_LINK_OVERLAP {
        return Err(Error::UnderResolved {
            t: 1.0,
            overlap: closing_overlap.abs(),
        });
    }
    Ok(GaugeFixedPath {
        t_grid,
        states,
        energies,
        gaps,
        link_overlaps,
        closing_overlap,
    })
}

/// Electrons of `active` spread over every orbital, when small enough for a
/// full-space singlet FCI; the active space itself otherwise.
fn oracle_space(active: &ActiveSpaceSpec) -> ActiveSpaceSpec {
    let n = active.n_orb();
    if n <= FULL_SPACE_ORBITALS {
        ActiveSpaceSpec::new(0, n, 0, 2 * active.n_core + active.n_active_electrons)
    } else {
        *active
    }
}

/// Ground-state path of `spec`. Analytic families are resampled on `n_dense`
/// intervals; bundle loops use their own grid with the starting orbitals held
/// fixed (singlet FCI over all orbitals when small, singlet CASCI otherwise).
pub fn exact_ground_path(spec: &LoopSpec, n_dense: usize) -> Result<GaugeFixedPath> {
    if spec.is_analytic() {
        if n_dense < 2 {
            return Err(invalid("the oracle needs at least two dense points"));
        }
        let t_grid: Vec<f64> = (0..n_dense).map(|k| k as f64 / n_dense as f64).collect();
        let raw = t_grid
            .iter()
            .map(|&t| Ok(ground(&spec.analytic_hamiltonian(t)?)))
            .collect::<Result<Vec<_>>>()?;
        return propagate(t_grid, raw);
    }
    let active = spec
        .active_space()
        .ok_or_else(|| invalid("bundle loop without an active space"))?;
    let space = oracle_space(&active);
    let n = spec.n_intervals();
    let mut c0 = None;
    let mut raw = Vec::with_capacity(n);
    for k in 0..n {
        let b = match spec.point(k)? {
            LoopPoint::Bundle(b) => b,
            LoopPoint::Dense(_) => return Err(invalid("expected a bundle loop")),
        };
        if c0.is_none() {
            c0 = Some(initial_orbitals(spec, &active, &b)?);
        }
        raw.push(ground(&casci_matrix(&b, c0.as_ref().expect("set above"), &space)?));
    }
    propagate((0..n).map(|k| spec.t(k)).collect(), raw)
}

/// Berry phase from the sign of the transported ground state at the seam.
pub fn discrete_berry_phase(path: &GaugeFixedPath) -> Result<Phase> {
    let o = path.closing_overlap;
    if o.abs() < MIN_CLOSING_OVERLAP {
        return Err(Error::Inconclusive(o));
    }
    Ok(if o > 0.0 { Phase::Zero } else { Phase::Pi })
}

pub fn oracle_phase(spec: &LoopSpec, n_dense: usize) -> Result<Phase> {
    discrete_berry_phase(&exact_ground_path(spec, n_dense)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![self.min];
        }
        (0..self.n)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.n - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub param1: f64,
    pub param2: f64,
    pub path: PathBuf,
}

/// Parameter plane for a gap scan: a regular grid for analytic families, or an
/// explicit list of bundles for molecular scans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GapGrid {
    Regular { param1: Axis, param2: Axis },
    Listed { points: Vec<GridPoint> },
}

impl GapGrid {
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let grid = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok((grid, path.parent().map(Path::to_path_buf).unwrap_or_default()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSample {
    pub param1: f64,
    pub param2: f64,
    pub gap_hartree: f64,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct GapSurface {
    pub samples: Vec<GapSample>,
}

impl GapSurface {
    pub fn minimum(&self) -> Option<GapSample> {
        self.samples
            .iter()
            .copied()
            .min_by(|a, b| a.gap_hartree.total_cmp(&b.gap_hartree))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("param1,param2,gap_hartree\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{},{}", s.param1, s.param2, s.gap_hartree);
        }
        out
    }
}

/// The analytic family as a function on its parameter plane:
/// `A + p1 B + p2 C` for loops of the form `A + cos B + sin C`, and the
/// nuclear-coordinate plane for the effective model.
pub fn plane_hamiltonian(kind: &LoopKind, p1: f64, p2: f64) -> Result<DMatrix<f64>> {
    let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    match kind {
        LoopKind::AnalyticQubit { family } => {
            let offset = match family {
                QubitFamily::QubitCi => 0.0,
                QubitFamily::QubitTrivial => 2.0,
            };
            Ok(z * (offset + p1) + x * p2)
        }
        LoopKind::EffectiveCi { params } => Ok(effective_ci_hamiltonian(params, [p1, p2])),
        LoopKind::DenseFourier(f) => {
            let m = |rows: &Vec<Vec<f64>>| DMatrix::from_fn(rows.len(), rows.len(), |i, j| rows[i][j]);
            Ok(m(&f.a) + m(&f.b) * p1 + m(&f.c) * p2)
        }
        LoopKind::BundleList { .. } => Err(Error::Unsupported(
            "bundle families are scanned through a listed grid".into(),
        )),
    }
}

/// `E1 - E0` over a parameter plane. Listed bundles use singlet CASCI on
/// restricted Hartree-Fock orbitals of each geometry.
pub fn gap_scan(spec: &LoopSpec, grid: &GapGrid, base_dir: &Path) -> Result<GapSurface> {
    let mut samples = Vec::new();
    match grid {
        GapGrid::Regular { param1, param2 } => {
            for &p1 in &param1.values() {
                for &p2 in &param2.values() {
                    let (_, gap, _) = ground(&plane_hamiltonian(&spec.kind, p1, p2)?);
                    samples.push(GapSample {
                        param1: p1,
                        param2: p2,
                        gap_hartree: gap,
                    });
                }
            }
        }
        GapGrid::Listed { points } => {
            let active = spec
                .active_space()
                .ok_or_else(|| invalid("a listed gap grid needs a bundle loop with an active space"))?;
            for p in points {
                let b = load_bundle(&base_dir.join(&p.path))?;
                let (_, c) = rhf_orbitals(&b, active.n_core + active.n_active_electrons / 2)?;
                let (_, gap, _) = ground(&casci_matrix(&b, &c, &oracle_space(&active))?);
                samples.push(GapSample {
                    param1: p.param1,
                    param2: p.param2,
                    gap_hartree: gap,
                });
            }
        }
    }
    Ok(GapSurface { samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{DenseFourier, EffectiveCiParams};

    #[test]
    fn qubit_ci_is_pi_with_smooth_links() {
        let spec = LoopSpec::builtin("qubit-ci", 3).unwrap();
        let path = exact_ground_path(&spec, 400).unwrap();
        assert!(path.link_overlaps.iter().all(|&o| o > 0.999));
        assert_eq!(discrete_berry_phase(&path).unwrap(), Phase::Pi);
    }

    #[test]
    fn trivial_and_offset_loops_are_zero() {
        for name in ["qubit-trivial", "effective-ci-offset"] {
            let spec = LoopSpec::builtin(name, 3).unwrap();
            assert_eq!(oracle_phase(&spec, 400).unwrap(), Phase::Zero, "{name}");
        }
        let spec = LoopSpec::builtin("effective-ci", 3).unwrap();
        assert_eq!(oracle_phase(&spec, 400).unwrap(), Phase::Pi);
    }

    #[test]
    fn constant_loop_states_are_identical() {
        let a = DMatrix::from_row_slice(2, 2, &[0.3, 0.2, 0.2, -0.4]);
        let zero = DMatrix::zeros(2, 2);
        let spec = LoopSpec::new(LoopKind::DenseFourier(DenseFourier::new(&a, &zero, &zero)), 3).unwrap();
        let path = exact_ground_path(&spec, 50).unwrap();
        for s in &path.states {
            assert!((s - &path.states[0]).amax() < 1e-14);
        }
        assert_eq!(discrete_berry_phase(&path).unwrap(), Phase::Zero);
    }

    #[test]
    fn loop_through_the_crossing_is_rejected() {
        let params = EffectiveCiParams {
            hx: 1.0,
            hz: 0.5,
            r_cross: [0.0, 0.0],
            center: [0.5, 0.0],
            radius: 0.5,
        };
        let spec = LoopSpec::new(LoopKind::EffectiveCi { params }, 3).unwrap();
        assert!(matches!(
            exact_ground_path(&spec, 400),
            Err(Error::DegeneracyOnPath { .. })
        ));
    }

    #[test]
    fn coarse_grid_is_under_resolved() {
        let spec = LoopSpec::builtin("qubit-ci", 3).unwrap();
        assert!(matches!(exact_ground_path(&spec, 3), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn invariant_under_doubling() {
        for name in crate::hamiltonian::BUILTIN_LOOPS {
            let spec = LoopSpec::builtin(name, 3).unwrap();
            assert_eq!(oracle_phase(&spec, 400).unwrap(), oracle_phase(&spec, 800).unwrap());
        }
    }

    #[test]
    fn effective_cone_slopes() {
        let spec = LoopSpec::builtin("effective-ci", 3).unwrap();
        let axis = Axis {
            min: -1.0,
            max: 1.0,
            n: 21,
        };
        let grid = GapGrid::Regular {
            param1: axis,
            param2: axis,
        };
        let surf = gap_scan(&spec, &grid, Path::new(".")).unwrap();
        let min = surf.minimum().unwrap();
        assert!(min.param1.abs() < 1e-12 && min.param2.abs() < 1e-12);
        assert!(min.gap_hartree < 1e-12);
        for s in &surf.samples {
            let expected = 2.0 * ((1.0 * s.param1).powi(2) + (0.5 * s.param2).powi(2)).sqrt();
            assert!((s.gap_hartree - expected).abs() < 1e-12);
        }
        assert!(surf.to_csv().starts_with("param1,param2,gap_hartree\n"));
    }

    #[test]
    fn constant_gap_family_is_flat() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let zero = DMatrix::zeros(2, 2);
        let spec = LoopSpec::new(LoopKind::DenseFourier(DenseFourier::new(&a, &zero, &zero)), 3).unwrap();
        let axis = Axis {
            min: 0.0,
            max: 1.0,
            n: 5,
        };
        let surf = gap_scan(
            &spec,
            &GapGrid::Regular {
                param1: axis,
                param2: axis,
            },
            Path::new("."),
        )
        .unwrap();
        assert!(surf.samples.iter().all(|s| (s.gap_hartree - 2.0).abs() < 1e-14));
    }

    #[test]
    fn grid_json_forms() {
        let g: GapGrid = serde_json::from_str(
            r#"{"param1": {"min": 0, "max": 1, "n": 3}, "param2": {"min": -1, "max": 1, "n": 2}}"#,
        )
        .unwrap();
        assert!(matches!(g, GapGrid::Regular { .. }));
        let g: GapGrid =
            serde_json::from_str(r#"{"points": [{"param1": 90, "param2": 132, "path": "a.json"}]}"#).unwrap();
        assert!(matches!(g, GapGrid::Listed { .. }));
    }
}

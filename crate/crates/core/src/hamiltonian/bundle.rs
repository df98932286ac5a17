use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{idx4, lowest_eigenvalue};

const SYMMETRY_TOL: f64 = 1e-8;

/// Electronic integrals of one geometry in the atomic-orbital basis.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralBundle {
    pub n_orb: usize,
    pub e_nuc_core: f64,
    pub h: DMatrix<f64>,
    /// `(pq|rs)` at `p N^3 + q N^2 + r N + s`.
    pub g: Vec<f64>,
    pub s: Option<DMatrix<f64>>,
    pub geometry: BTreeMap<String, f64>,
    pub t: f64,
}

#[derive(Serialize, Deserialize)]
struct BundleFile {
    n_orb: usize,
    e_nuc_core: f64,
    h: Vec<Vec<f64>>,
    g: Vec<f64>,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    s: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    geometry: BTreeMap<String, f64>,
    #[serde(default)]
    t: f64,
}

fn check(name: &'static str, detail: impl Into<String>) -> Error {
    Error::BundleCheck {
        check: name,
        detail: detail.into(),
    }
}

fn square(name: &'static str, rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(check(name, format!("expected a {n}x{n} array")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl IntegralBundle {
    #[inline]
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.g[idx4(self.n_orb, p, q, r, s)]
    }

    /// Runs every load-time check and names the first one that fails.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_orb;
        if n == 0 {
            return Err(check("shape", "n_orb must be positive"));
        }
        if self.h.shape() != (n, n) {
            return Err(check("shape", "h must be n_orb x n_orb"));
        }
        if self.g.len() != n.pow(4) {
            return Err(check(
                "shape",
                format!("g has {} entries, expected {}", self.g.len(), n.pow(4)),
            ));
        }
        let finite =
            self.e_nuc_core.is_finite() && self.h.iter().all(|v| v.is_finite()) && self.g.iter().all(|v| v.is_finite());
        if !finite {
            return Err(check("finite values", "non-finite integral"));
        }
        for p in 0..n {
            for q in 0..p {
                let d = (self.h[(p, q)] - self.h[(q, p)]).abs();
                if d > SYMMETRY_TOL {
                    return Err(check(
                        "one-electron symmetry",
                        format!("|h[{p}][{q}] - h[{q}][{p}]| = {d:e}"),
                    ));
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.eri(p, q, r, s);
                        let worst = [self.eri(q, p, r, s), self.eri(p, q, s, r), self.eri(r, s, p, q)]
                            .iter()
                            .fold(0.0_f64, |m, w| m.max((v - w).abs()));
                        if worst > SYMMETRY_TOL {
                            return Err(check(
                                "two-electron symmetry",
                                format!("({p}{q}|{r}{s}) differs from a permutation by {worst:e}"),
                            ));
                        }
                    }
                }
            }
        }
        if let Some(s) = &self.s {
            if s.shape() != (n, n) {
                return Err(check("shape", "S must be n_orb x n_orb"));
            }
            if crate::linalg::max_abs_diff(s, &s.transpose()) > SYMMETRY_TOL {
                return Err(check("overlap symmetry", "S is not symmetric"));
            }
            let low = lowest_eigenvalue(s);
            if low <= 1e-10 {
                return Err(check("overlap positive definite", format!("lowest eigenvalue {low:e}")));
            }
        }
        Ok(())
    }

    /// Largest elementwise difference between the Hamiltonian data of two bundles.
    pub fn max_difference(&self, other: &IntegralBundle) -> f64 {
        if self.n_orb != other.n_orb {
            return f64::INFINITY;
        }
        let mut d = (self.e_nuc_core - other.e_nuc_core).abs();
        d = d.max(crate::linalg::max_abs_diff(&self.h, &other.h));
        for (a, b) in self.g.iter().zip(&other.g) {
            d = d.max((a - b).abs());
        }
        match (&self.s, &other.s) {
            (Some(a), Some(b)) => d.max(crate::linalg::max_abs_diff(a, b)),
            (None, None) => d,
            _ => f64::INFINITY,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BundleFile = serde_json::from_str(text)?;
        let n = raw.n_orb;
        let bundle = IntegralBundle {
            n_orb: n,
            e_nuc_core: raw.e_nuc_core,
            h: square("shape", &raw.h, n)?,
            g: raw.g,
            s: raw.s.as_deref().map(|s| square("shape", s, n)).transpose()?,
            geometry: raw.geometry,
            t: raw.t,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn to_json(&self) -> Result<String> {
        let raw = BundleFile {
            n_orb: self.n_orb,
            e_nuc_core: self.e_nuc_core,
            h: rows(&self.h),
            g: self.g.clone(),
            s: self.s.as_ref().map(rows),
            geometry: self.geometry.clone(),
            t: self.t,
        };
        Ok(serde_json::to_string(&raw)?)
    }
}

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// Reads and validates a bundle; `.gz` files are decompressed transparently.
pub fn load_bundle(path: &Path) -> Result<IntegralBundle> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut text = String::new();
    if is_gzip(path) {
        GzDecoder::new(reader).read_to_string(&mut text)?;
    } else {
        reader.read_to_string(&mut text)?;
    }
    IntegralBundle::from_json(&text)
}

pub fn save_bundle(bundle: &IntegralBundle, path: &Path) -> Result<()> {
    let text = bundle.to_json()?;
    let file = BufWriter::new(File::create(path)?);
    if is_gzip(path) {
        let mut enc = GzEncoder::new(file, flate2::Compression::default());
        enc.write_all(text.as_bytes())?;
        enc.finish()?.flush()?;
    } else {
        let mut file = file;
        file.write_all(text.as_bytes())?;
        file.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> IntegralBundle {
        IntegralBundle {
            n_orb: 2,
            e_nuc_core: 0.0,
            h: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -0.5])),
            g: vec![0.0; 16],
            s: Some(DMatrix::identity(2, 2)),
            geometry: BTreeMap::new(),
            t: 0.0,
        }
    }

    #[test]
    fn minimal_bundle_validates() {
        minimal().validate().unwrap();
    }

    #[test]
    fn asymmetric_h_is_rejected_by_name() {
        let mut b = minimal();
        b.h[(0, 1)] = 0.1;
        let err = IntegralBundle::from_json(&b.to_json().unwrap()).unwrap_err();
        assert!(err.to_string().contains("one-electron symmetry"), "{err}");
    }

    #[test]
    fn broken_eri_symmetry_is_rejected() {
        let mut b = minimal();
        b.g[idx4(2, 0, 1, 0, 0)] = 0.2;
        let err = b.validate().unwrap_err();
        assert!(err.to_string().contains("two-electron symmetry"), "{err}");
    }

    #[test]
    fn singular_overlap_is_rejected() {
        let mut b = minimal();
        b.s = Some(DMatrix::from_element(2, 2, 1.0));
        let err = b.validate().unwrap_err();
        assert!(err.to_string().contains("overlap positive definite"), "{err}");
    }

    #[test]
    fn gzip_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.json.gz");
        let mut b = minimal();
        b.geometry.insert("alpha_deg".into(), 130.0);
        save_bundle(&b, &path).unwrap();
        assert_eq!(load_bundle(&path).unwrap(), b);
    }
}

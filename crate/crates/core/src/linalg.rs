//! Small dense linear-algebra helpers shared by the orbital and tracker code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Row-major offset of `(p, q, r, s)` in a flat `n^4` tensor.
#[inline]
pub fn idx4(n: usize, p: usize, q: usize, r: usize, s: usize) -> usize {
    ((p * n + q) * n + r) * n + s
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted ascending.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = symmetrize(m);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn lowest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// `max |C^T C - I|`.
pub fn orthogonality_defect(c: &DMatrix<f64>) -> f64 {
    let ctc = c.transpose() * c;
    max_abs_diff(&ctc, &DMatrix::identity(c.ncols(), c.ncols()))
}

/// Solves `a x = b` for symmetric `a`: Cholesky when positive definite, LU otherwise.
pub fn solve_symmetric(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    let x = a.clone().lu().solve(b).ok_or(Error::Singular)?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Singular)
    }
}

/// Four-index transform `g'_{abcd} = sum_{pqrs} U_pa U_qb U_rc U_sd g_pqrs` of a flat
/// `n^4` tensor with an `n x m` matrix, done as four quarter transforms.
pub fn transform_eri(g: &[f64], n: usize, u: &DMatrix<f64>) -> Vec<f64> {
    assert_eq!(g.len(), n.pow(4));
    assert_eq!(u.nrows(), n);
    let m = u.ncols();
    // Each pass contracts the leading index and rotates it to the back, so after
    // four passes the index order is restored.
    let mut cur = g.to_vec();
    let mut dims = [n, n, n, n];
    for _ in 0..4 {
        let [d0, d1, d2, d3] = dims;
        let rest = d1 * d2 * d3;
        let mut next = vec![0.0; rest * m];
        for p in 0..d0 {
            let src = &cur[p * rest..(p + 1) * rest];
            for a in 0..m {
                let c = u[(p, a)];
                if c == 0.0 {
                    continue;
                }
                // next[(j, a)] with j the flattened remaining indices
                for (j, &v) in src.iter().enumerate() {
                    next[j * m + a] += c * v;
                }
            }
        }
        cur = next;
        dims = [d1, d2, d3, m];
    }
    cur
}

/// Matrix exponential of a real matrix.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().exp()
}

/// Nearest orthogonal matrix in Frobenius norm (orthogonal polar factor).
pub fn nearest_orthogonal(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    u * vt
}

/// Principal real logarithm of an orthogonal matrix with determinant +1.
///
/// The real Schur form of an orthogonal matrix is block diagonal with 2x2
/// rotation blocks and +-1 entries; each block is logged separately. Pairs of
/// -1 eigenvalues are logged as rotations by pi.
pub fn orthogonal_log(q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = q.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let defect = orthogonality_defect(q);
    if defect > 1e-6 {
        return Err(Error::RealLog(format!("matrix is not orthogonal (defect {defect:e})")));
    }
    if q.determinant() < 0.0 {
        return Err(Error::RealLog("determinant is -1 (reflection)".into()));
    }
    let schur = nalgebra::linalg::Schur::try_new(q.clone(), 1e-14, 10_000)
        .ok_or_else(|| Error::RealLog("Schur decomposition did not converge".into()))?;
    let (z, t) = schur.unpack();
    let mut log_t = DMatrix::zeros(n, n);
    let mut minus_one = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].abs() > 1e-12 {
            let cos = 0.5 * (t[(i, i)] + t[(i + 1, i + 1)]);
            let sin = 0.5 * (t[(i + 1, i)] - t[(i, i + 1)]);
            let phi = sin.atan2(cos);
            log_t[(i + 1, i)] = phi;
            log_t[(i, i + 1)] = -phi;
            i += 2;
        } else {
            if t[(i, i)] < 0.0 {
                minus_one.push(i);
            }
            i += 1;
        }
    }
    if minus_one.len() % 2 == 1 {
        return Err(Error::RealLog("odd number of -1 eigenvalues".into()));
    }
    for pair in minus_one.chunks(2) {
        let (a, b) = (pair[0], pair[1]);
        log_t[(b, a)] = std::f64::consts::PI;
        log_t[(a, b)] = -std::f64::consts::PI;
    }
    let log_q = &z * log_t * z.transpose();
    Ok((&log_q - log_q.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_antisymmetric(n: usize, seed: u64, scale: f64) -> DMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v: f64 = rng.random_range(-scale..scale);
                k[(i, j)] = v;
                k[(j, i)] = -v;
            }
        }
        k
    }

    #[test]
    fn log_inverts_exp_for_small_rotations() {
        for seed in 0..20 {
            let k = random_antisymmetric(5, seed, 0.6);
            let q = expm(&k);
            let l = orthogonal_log(&q).unwrap();
            assert!(max_abs_diff(&expm(&l), &q) < 1e-10);
            // principal branch recovers the generator itself for small angles
            assert!(max_abs_diff(&l, &k) < 1e-9);
        }
    }

    #[test]
    fn log_of_pi_rotation_pair() {
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -1.0, 1.0]));
        let l = orthogonal_log(&q).unwrap();
        assert!(max_abs_diff(&expm(&l), &q) < 1e-12);
    }

    #[test]
    fn log_rejects_reflection() {
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0]));
        assert!(matches!(orthogonal_log(&q), Err(Error::RealLog(_))));
    }

    #[test]
    fn eri_transform_identity_and_permutation() {
        let n: usize = 3;
        let g: Vec<f64> = (0..n.pow(4)).map(|i| i as f64 * 0.01).collect();
        let id = DMatrix::identity(n, n);
        let g2 = transform_eri(&g, n, &id);
        for (a, b) in g.iter().zip(&g2) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        // swapping orbitals 0 and 2 permutes every index
        let mut perm = DMatrix::zeros(n, n);
        perm[(0, 2)] = 1.0;
        perm[(2, 0)] = 1.0;
        perm[(1, 1)] = 1.0;
        let g3 = transform_eri(&g, n, &perm);
        let sw = |i: usize| [2, 1, 0][i];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        assert_abs_diff_eq!(
                            g3[idx4(n, p, q, r, s)],
                            g[idx4(n, sw(p), sw(q), sw(r), sw(s))],
                            epsilon = 1e-14
                        );
                    }
                }
            }
        }
    }
}

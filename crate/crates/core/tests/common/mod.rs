#![allow(dead_code)]

use std::collections::BTreeMap;

use berry_core::hamiltonian::IntegralBundle;
use berry_core::linalg::{expm, idx4};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_symmetric(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = scale * rng.random_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

pub fn random_orthogonal(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = scale * rng.random_range(-1.0..1.0);
            k[(i, j)] = v;
            k[(j, i)] = -v;
        }
    }
    expm(&k)
}

/// Two-electron integrals with the full 8-fold symmetry built from a
/// positive Gram structure `(pq|rs) = sum_k L^k_pq L^k_rs` plus a small shift.
pub fn random_eri(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let factors: Vec<DMatrix<f64>> = (0..n + 1).map(|_| random_symmetric(n, 0.4, rng)).collect();
    let mut g = vec![0.0; n.pow(4)];
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    g[idx4(n, p, q, r, s)] = factors.iter().map(|l| l[(p, q)] * l[(r, s)]).sum::<f64>();
                }
            }
        }
    }
    g
}

/// Random molecule-like bundle: diagonal-dominant `h`, SPD overlap.
pub fn random_bundle(n: usize, seed: u64) -> IntegralBundle {
    let mut r = rng(seed);
    let mut h = random_symmetric(n, 0.3, &mut r);
    for p in 0..n {
        h[(p, p)] += -2.0 + 0.6 * p as f64;
    }
    let a = random_symmetric(n, 0.15, &mut r);
    let s = DMatrix::identity(n, n) + &a * &a.transpose() * 0.5 + a * 0.3;
    let s = (&s + s.transpose()) * 0.5;
    IntegralBundle {
        n_orb: n,
        e_nuc_core: 0.5,
        h,
        g: random_eri(n, &mut r),
        s: Some(s),
        geometry: BTreeMap::new(),
        t: 0.0,
    }
}

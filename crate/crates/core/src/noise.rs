//! Gaussian sampling-noise proxy, Hadamard-test shot simulator and shot counts.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hamiltonian::ActiveHamiltonian;

/// Independent RNG stream `stream` of the generator seeded with `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Per-element Gaussian perturbation of gradients and Hessians.
///
/// Each instance owns its RNG stream, so concurrent runs need separate models.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    pub sigma2_grad: f64,
    pub sigma2_hess: f64,
    pub symmetrize: bool,
    pub seed: u64,
    rng: ChaCha8Rng,
}

impl NoiseModel {
    pub fn new(sigma2_grad: f64, sigma2_hess: f64, seed: u64) -> Result<Self> {
        for (name, v) in [("sigma2_grad", sigma2_grad), ("sigma2_hess", sigma2_hess)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(Self {
            sigma2_grad,
            sigma2_hess,
            symmetrize: true,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn noiseless() -> Self {
        Self::new(0.0, 0.0, 0).expect("zero variances are valid")
    }

    pub fn with_symmetrize(mut self, symmetrize: bool) -> Self {
        self.symmetrize = symmetrize;
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.rng = trial_rng(self.seed, stream);
        self
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma2_grad == 0.0 && self.sigma2_hess == 0.0
    }

    pub fn perturb(&mut self, grad: &DVector<f64>, hess: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let mut g = grad.clone();
        let mut h = hess.clone();
        if self.sigma2_grad > 0.0 {
            let d = Normal::new(0.0, self.sigma2_grad.sqrt()).expect("finite sigma");
            for v in g.iter_mut() {
                *v += d.sample(&mut self.rng);
            }
        }
        if self.sigma2_hess > 0.0 {
            let d = Normal::new(0.0, self.sigma2_hess.sqrt()).expect("finite sigma");
            let n = h.nrows();
            for i in 0..n {
                for j in i..n {
                    h[(i, j)] += d.sample(&mut self.rng);
                    if i != j {
                        if self.symmetrize {
                            h[(j, i)] = hess[(j, i)] + (h[(i, j)] - hess[(i, j)]);
                        } else {
                            h[(j, i)] += d.sample(&mut self.rng);
                        }
                    }
                }
            }
        }
        (g, h)
    }
}

pub fn perturb_derivatives(
    grad: &DVector<f64>,
    hess: &DMatrix<f64>,
    model: &mut NoiseModel,
) -> (DVector<f64>, DMatrix<f64>) {
    model.perturb(grad, hess)
}

/// Estimate of `omega` from `shots` ancilla measurements with `P(+1) = (1 + omega) / 2`.
pub fn simulate_hadamard_test(omega: f64, shots: u64, seed: u64) -> Result<f64> {
    if shots == 0 {
        return Err(invalid("shots must be at least 1"));
    }
    if !(-1.0..=1.0).contains(&omega) {
        return Err(invalid(format!("overlap {omega} outside [-1, 1]")));
    }
    let p = ((1.0 + omega) / 2.0).clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plus = Binomial::new(shots, p).expect("valid binomial").sample(&mut rng);
    Ok(2.0 * plus as f64 / shots as f64 - 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotEstimate {
    pub one_norm: f64,
    pub target_sigma: f64,
    pub n_shots: u64,
}

pub fn shots_for_norm(one_norm: f64, target_sigma: f64) -> Result<ShotEstimate> {
    if !(target_sigma > 0.0 && target_sigma.is_finite()) {
        return Err(invalid(format!("target sigma must be positive, got {target_sigma}")));
    }
    if !(one_norm >= 0.0 && one_norm.is_finite()) {
        return Err(invalid(format!("one-norm must be non-negative, got {one_norm}")));
    }
    let ratio = one_norm / target_sigma;
    Ok(ShotEstimate {
        one_norm,
        target_sigma,
        n_shots: (ratio * ratio).ceil() as u64,
    })
}

pub fn estimate_shots(h: &ActiveHamiltonian, target_sigma: f64) -> Result<ShotEstimate> {
    shots_for_norm(h.one_norm(), target_sigma)
}

/// Mean spectral norm of `n x n` symmetric matrices with i.i.d. `N(0, sigma^2)` entries.
pub fn empirical_noise_norm(n: usize, sigma: f64, trials: usize, seed: u64) -> f64 {
    let mut model = NoiseModel::new(0.0, sigma * sigma, seed).expect("valid sigma");
    let zero_g = DVector::zeros(n);
    let zero_h = DMatrix::zeros(n, n);
    let mut total = 0.0;
    for _ in 0..trials {
        let (_, h) = model.perturb(&zero_g, &zero_h);
        let eig = SymmetricEigen::new(h);
        total += eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    }
    total / trials as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(sigma2: f64, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut m = NoiseModel::new(sigma2, sigma2, seed).unwrap();
        let g = DVector::from_element(1, 0.3);
        let h = DMatrix::from_element(1, 1, -0.7);
        let mut gs = Vec::with_capacity(n);
        let mut hs = Vec::with_capacity(n);
        for _ in 0..n {
            let (pg, ph) = m.perturb(&g, &h);
            gs.push(pg[0] - 0.3);
            hs.push(ph[(0, 0)] + 0.7);
        }
        (gs, hs)
    }

    fn mean_var(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn zero_variance_is_identity() {
        let mut m = NoiseModel::new(0.0, 0.0, 4).unwrap();
        let g = DVector::from_vec(vec![1.0, -2.0]);
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 3.0]);
        let (pg, ph) = m.perturb(&g, &h);
        assert_eq!(pg, g);
        assert_eq!(ph, h);
    }

    #[test]
    fn hessian_element_variance() {
        let sigma2 = 5e-6;
        let (gs, hs) = draws(sigma2, 100_000, 11);
        for x in [&gs, &hs] {
            let (mean, var) = mean_var(x);
            assert!((var - sigma2).abs() / sigma2 < 0.05, "var {var}");
            assert!(mean.abs() < 4.0 * sigma2.sqrt() / (1e5f64).sqrt(), "mean {mean}");
        }
    }

    #[test]
    fn symmetrized_hessian_is_exactly_symmetric() {
        let mut m = NoiseModel::new(1e-3, 1e-3, 2).unwrap();
        let h = DMatrix::from_fn(6, 6, |i, j| ((i + 1) * (j + 1)) as f64 * 0.1);
        let (_, ph) = m.perturb(&DVector::zeros(6), &h);
        assert_eq!(ph, ph.transpose());
        let mut raw = NoiseModel::new(1e-3, 1e-3, 2).unwrap().with_symmetrize(false);
        let (_, ph) = raw.perturb(&DVector::zeros(6), &h);
        assert_ne!(ph, ph.transpose());
    }

    #[test]
    fn reproducible_and_independent_across_seeds() {
        let (a, _) = draws(1.0, 10_000, 5);
        let (b, _) = draws(1.0, 10_000, 5);
        assert_eq!(a, b);
        let (c, _) = draws(1.0, 10_000, 6);
        let (ma, va) = mean_var(&a);
        let (mc, vc) = mean_var(&c);
        let cov = a.iter().zip(&c).map(|(x, y)| (x - ma) * (y - mc)).sum::<f64>() / (a.len() as f64 - 1.0);
        let r = cov / (va * vc).sqrt();
        assert!(r.abs() < 0.05, "correlation {r}");
    }

    #[test]
    fn streams_differ() {
        let mut a = trial_rng(1, 0);
        let mut b = trial_rng(1, 1);
        let x: u64 = rand::Rng::random(&mut a);
        let y: u64 = rand::Rng::random(&mut b);
        assert_ne!(x, y);
    }

    #[test]
    fn hadamard_extremes_are_exact() {
        for shots in [1, 7, 1000] {
            assert_eq!(simulate_hadamard_test(-1.0, shots, 3).unwrap(), -1.0);
            assert_eq!(simulate_hadamard_test(1.0, shots, 3).unwrap(), 1.0);
        }
        assert!(simulate_hadamard_test(0.0, 0, 1).is_err());
    }

    #[test]
    fn hadamard_binomial_spread() {
        let shots = 10_000;
        let tol = 3.0 * (0.75f64 / shots as f64).sqrt() * 2.0;
        let inside = (0..200)
            .filter(|&s| (simulate_hadamard_test(0.5, shots, s).unwrap() - 0.5).abs() <= tol)
            .count();
        assert!(inside >= 198, "{inside}/200 within tolerance");
    }

    #[test]
    fn shot_counts() {
        let zero = ActiveHamiltonian::new(1.0, DMatrix::zeros(2, 2), vec![0.0; 16]).unwrap();
        assert_eq!(estimate_shots(&zero, 1e-3).unwrap().n_shots, 0);
        let est = shots_for_norm(1.5376, 1e-3).unwrap();
        assert_eq!(est.n_shots, 2_364_214);
        let a = shots_for_norm(0.87, 1e-3).unwrap().n_shots as f64;
        let b = shots_for_norm(0.87, 2e-3).unwrap().n_shots as f64;
        assert!((a / 4.0 - b).abs() <= 1.0);
        assert!(shots_for_norm(1.0, 0.0).is_err());
    }

    #[test]
    fn one_norm_counts_halved_two_electron_terms() {
        let mut g = vec![0.0; 16];
        g[0] = 0.8;
        g[15] = -0.4;
        let h = DMatrix::from_row_slice(2, 2, &[-1.0, 0.2, 0.2, -0.5]);
        let ham = ActiveHamiltonian::new(-3.0, h, g).unwrap();
        assert!((ham.one_norm() - (1.9 + 0.6)).abs() < 1e-14);
    }

    // The semicircle edge sits at 2 sqrt(n) sigma, twice the simpler sqrt(n) sigma estimate.
    #[test]
    fn empirical_wigner_norm() {
        let sigma = 0.01;
        for n in [50, 100, 200] {
            let measured = empirical_noise_norm(n, sigma, 10, 9);
            let ratio = measured / ((n as f64).sqrt() * sigma);
            assert!((1.8..2.2).contains(&ratio), "n = {n}: ratio {ratio}");
        }
    }
}

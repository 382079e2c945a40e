//! Randomized model selection and its companion error estimate.
//!
//! Instead of selecting the model at the raw minimum, draw Gaussian noise
//! pairs `(eps, z)` and select at the minimum of the perturbed errors
//! `q + eps/sqrt(n) + sqrt(alpha/n)*z`. The companion sequence
//! `q + eps/sqrt(n) - sqrt(1/(n*alpha))*z` has its noise scaled so that the
//! two sequences are uncorrelated given the loss covariance, which lets the
//! companion value at the selected index serve as an unbiased read of that
//! model's error. Repeating over `H` draws and averaging the companion values
//! gives the estimate.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::ErrorMatrix;
use crate::rng::Stream;
use crate::selection::argmin;

/// Relative eigenvalue tolerance for accepting a covariance matrix as
/// positive semidefinite: eigenvalues at or above `-PSD_TOL * trace` are
/// treated as zero.
pub const PSD_TOL: f64 = 1e-8;

/// Parameters of the randomized selection rule.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    /// Randomization scale for the selection sequence (default 0.1).
    pub alpha: f64,
    /// Jitter variance applied to both sequences.
    pub sigma0_sq: f64,
    /// Number of noise draws `H` (default 100).
    pub draws: usize,
    /// Covariance estimate of the per-model validation errors.
    pub sigma_hat: Array2<f64>,
}

impl NoiseConfig {
    /// Defaults computed from the matrix itself: sample covariance, its
    /// smallest diagonal as the jitter variance, `alpha = 0.1`, `H = 100`.
    pub fn from_matrix(em: &ErrorMatrix) -> Self {
        let sigma_hat = sample_covariance(em);
        let sigma0_sq = default_sigma0(&sigma_hat);
        NoiseConfig {
            alpha: 0.1,
            sigma0_sq,
            draws: 100,
            sigma_hat,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::BadNoiseConfig(format!(
                "alpha must be a positive real, got {}",
                self.alpha
            )));
        }
        if self.draws == 0 {
            return Err(Error::BadNoiseConfig("draw count H must be at least 1".into()));
        }
        if !(self.sigma0_sq >= 0.0) || !self.sigma0_sq.is_finite() {
            return Err(Error::BadNoiseConfig(format!(
                "sigma0^2 must be a nonnegative real, got {}",
                self.sigma0_sq
            )));
        }
        let m = self.sigma_hat.nrows();
        if self.sigma_hat.ncols() != m {
            return Err(Error::BadCovariance {
                m,
                detail: format!("got {}x{}", m, self.sigma_hat.ncols()),
            });
        }
        let scale = self.sigma_hat.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        for i in 0..m {
            for j in (i + 1)..m {
                let gap = (self.sigma_hat[(i, j)] - self.sigma_hat[(j, i)]).abs();
                if gap > 1e-8 * scale.max(1.0) {
                    return Err(Error::BadCovariance {
                        m,
                        detail: format!("asymmetric at ({}, {}): gap {gap:.3e}", i + 1, j + 1),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Outcome of the randomized estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomizedEstimate {
    /// Average companion-sequence value at the selected indices.
    pub estimate: f64,
    /// 0-based index selected at each of the `H` draws.
    pub selected_indices: Vec<usize>,
    /// Empirical pick rate of each model; sums to 1.
    pub selection_frequencies: Vec<f64>,
    /// Average unperturbed validation error of the selected models, used to
    /// center the bootstrap distribution.
    pub mean_nominal: f64,
    /// True when the covariance needed an eigenvalue projection before
    /// factorization (numerically indefinite input).
    pub projected: bool,
}

/// Sample covariance of the loss columns with divisor `n`.
pub fn sample_covariance(em: &ErrorMatrix) -> Array2<f64> {
    let losses = em.losses();
    let (n, m) = losses.dim();
    let means = em.column_means();
    let mut centered = losses.clone();
    for (j, mu) in means.iter().enumerate() {
        centered.column_mut(j).mapv_inplace(|v| v - mu);
    }
    let mut cov = Array2::<f64>::zeros((m, m));
    for a in 0..m {
        let col_a = centered.column(a);
        for b in a..m {
            let s: f64 = col_a
                .iter()
                .zip(centered.column(b).iter())
                .map(|(&x, &y)| x * y)
                .sum();
            let v = s / n as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    cov
}

/// Default jitter variance: the smallest diagonal element of the covariance.
/// A zero minimum (a model with constant losses) would leave the selection
/// noiseless and the covariance singular, so fall back to the smallest
/// positive diagonal scaled by 1e-6, floored at 1e-12.
pub fn default_sigma0(sigma_hat: &Array2<f64>) -> f64 {
    let diag = sigma_hat.diag();
    let min = diag.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if min > 0.0 {
        return min;
    }
    let smallest_positive = diag
        .iter()
        .filter(|&&v| v > 0.0)
        .fold(f64::INFINITY, |a, &v| a.min(v));
    if smallest_positive.is_finite() {
        (smallest_positive * 1e-6).max(1e-12)
    } else {
        1e-12
    }
}

/// A reusable sampler for the noise pair `(eps, z)` with
/// `eps ~ N(0, sigma0^2 I)` and `z ~ N(0, sigma_hat + sigma0^2 I)`.
///
/// The covariance is factored once: Cholesky when it is positive definite,
/// otherwise a symmetric eigenvalue square root with negative eigenvalues
/// projected to zero before the jitter is added back (recorded in
/// [`NoiseSampler::projected`]). Eigenvalues below `-PSD_TOL * trace` are
/// rejected as genuinely indefinite.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    factor: DMatrix<f64>,
    lower_triangular: bool,
    sigma0: f64,
    m: usize,
    projected: bool,
}

impl NoiseSampler {
    pub fn new(cfg: &NoiseConfig) -> Result<Self> {
        cfg.validate()?;
        let m = cfg.sigma_hat.nrows();
        let sigma0 = cfg.sigma0_sq.sqrt();
        let mut shifted = DMatrix::<f64>::from_fn(m, m, |i, j| cfg.sigma_hat[(i, j)]);
        for i in 0..m {
            shifted[(i, i)] += cfg.sigma0_sq;
        }
        if let Some(chol) = shifted.clone().cholesky() {
            return Ok(Self {
                factor: chol.unpack(),
                lower_triangular: true,
                sigma0,
                m,
                projected: false,
            });
        }

        // Indefinite or singular: diagnose via the eigenvalues of sigma_hat.
        let sym = DMatrix::<f64>::from_fn(m, m, |i, j| {
            0.5 * (cfg.sigma_hat[(i, j)] + cfg.sigma_hat[(j, i)])
        });
        let trace: f64 = (0..m).map(|i| sym[(i, i)]).sum();
        let tolerance = -PSD_TOL * trace.max(0.0);
        let eigen = SymmetricEigen::new(sym);
        let min_eig = eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < tolerance {
            return Err(Error::NotPositiveSemidefinite {
                eigenvalue: min_eig,
                tolerance,
            });
        }
        let mut factor = eigen.eigenvectors;
        for (j, &lambda) in eigen.eigenvalues.iter().enumerate() {
            let scale = (lambda.max(0.0) + cfg.sigma0_sq).sqrt();
            factor.column_mut(j).scale_mut(scale);
        }
        Ok(Self {
            factor,
            lower_triangular: false,
            sigma0,
            m,
            projected: true,
        })
    }

    pub fn projected(&self) -> bool {
        self.projected
    }

    /// Draw one `(eps, z)` pair.
    pub fn draw(&self, rng: &mut Stream) -> (Vec<f64>, Vec<f64>) {
        let m = self.m;
        let mut eps = vec![0.0; m];
        for e in eps.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *e = self.sigma0 * g;
        }
        let mut w = vec![0.0; m];
        for v in w.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let mut z = vec![0.0; m];
        if self.lower_triangular {
            for i in 0..m {
                let mut acc = 0.0;
                for j in 0..=i {
                    acc += self.factor[(i, j)] * w[j];
                }
                z[i] = acc;
            }
        } else {
            for i in 0..m {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += self.factor[(i, j)] * w[j];
                }
                z[i] = acc;
            }
        }
        (eps, z)
    }
}

/// Draw one noise pair for the given configuration. Prefer [`NoiseSampler`]
/// when drawing repeatedly: the factorization is reused.
pub fn draw_noise_pair(cfg: &NoiseConfig, rng: &mut Stream) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok(NoiseSampler::new(cfg)?.draw(rng))
}

/// The randomized pseudo-error pair:
/// `q + eps/sqrt(n) + sqrt(alpha/n) z` (selection sequence) and
/// `q + eps/sqrt(n) - sqrt(1/(n alpha)) z` (companion sequence).
pub fn pseudo_errors(
    q: &[f64],
    eps: &[f64],
    z: &[f64],
    alpha: f64,
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = n as f64;
    let root_n = n.sqrt();
    let sel_scale = (alpha / n).sqrt();
    let comp_scale = (1.0 / (n * alpha)).sqrt();
    let q_alpha = q
        .iter()
        .zip(eps)
        .zip(z)
        .map(|((&q, &e), &z)| q + e / root_n + sel_scale * z)
        .collect();
    let q_inv_alpha = q
        .iter()
        .zip(eps)
        .zip(z)
        .map(|((&q, &e), &z)| q + e / root_n - comp_scale * z)
        .collect();
    (q_alpha, q_inv_alpha)
}

/// Run the randomized estimator: `H` draws, each selecting at the minimum of
/// the selection sequence and reading off the companion value there.
pub fn randomized_estimate(
    em: &ErrorMatrix,
    cfg: &NoiseConfig,
    rng: &mut Stream,
) -> Result<RandomizedEstimate> {
    let m = em.n_models();
    if cfg.sigma_hat.nrows() != m {
        return Err(Error::BadCovariance {
            m,
            detail: format!("covariance is {}x{}", cfg.sigma_hat.nrows(), cfg.sigma_hat.ncols()),
        });
    }
    let sampler = NoiseSampler::new(cfg)?;
    let q = em.column_means();
    let q = q.as_slice().expect("contiguous");
    let n = em.n_rows() as f64;
    let root_n = n.sqrt();
    let sel_scale = (cfg.alpha / n).sqrt();
    let comp_scale = (1.0 / (n * cfg.alpha)).sqrt();

    let mut selected_indices = Vec::with_capacity(cfg.draws);
    let mut counts = vec![0usize; m];
    let mut companion_sum = 0.0;
    let mut nominal_sum = 0.0;
    let mut perturbed = vec![0.0; m];
    for _ in 0..cfg.draws {
        let (eps, z) = sampler.draw(rng);
        for j in 0..m {
            perturbed[j] = q[j] + eps[j] / root_n + sel_scale * z[j];
        }
        let j = argmin(&perturbed);
        selected_indices.push(j);
        counts[j] += 1;
        companion_sum += q[j] + eps[j] / root_n - comp_scale * z[j];
        nominal_sum += q[j];
    }
    let h = cfg.draws as f64;
    Ok(RandomizedEstimate {
        estimate: companion_sum / h,
        selected_indices,
        selection_frequencies: counts.iter().map(|&c| c as f64 / h).collect(),
        mean_nominal: nominal_sum / h,
        projected: sampler.projected(),
    })
}

/// Convenience entry point with all defaults derived from the matrix.
pub fn randomized_with_defaults(
    em: &ErrorMatrix,
    rng: &mut Stream,
) -> Result<(RandomizedEstimate, NoiseConfig)> {
    let cfg = NoiseConfig::from_matrix(em);
    let est = randomized_estimate(em, &cfg, rng)?;
    Ok((est, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use ndarray::Array2;

    #[test]
    fn sample_covariance_two_point() {
        let em = ErrorMatrix::new(array![[0.0, 0.0], [2.0, 2.0]]).unwrap();
        assert_eq!(sample_covariance(&em), array![[1.0, 1.0], [1.0, 1.0]]);
    }

    #[test]
    fn sample_covariance_constant_columns_is_zero() {
        let em = ErrorMatrix::new(Array2::from_elem((5, 3), 4.0)).unwrap();
        assert_eq!(sample_covariance(&em), Array2::zeros((3, 3)));
    }

    #[test]
    fn sample_covariance_bernoulli_identity() {
        // For 0-1 losses the divisor-n variance is exactly p(1-p).
        let col = vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let p = 0.3;
        let em = ErrorMatrix::new(Array2::from_shape_vec((10, 1), col).unwrap()).unwrap();
        assert_abs_diff_eq!(sample_covariance(&em)[(0, 0)], p * (1.0 - p), epsilon = 1e-15);
    }

    #[test]
    fn default_sigma0_takes_min_diagonal() {
        let s = Array2::from_diag(&array![0.25, 0.16, 0.09]);
        assert_eq!(default_sigma0(&s), 0.09);
        let c = Array2::from_diag(&array![0.4, 0.4]);
        assert_eq!(default_sigma0(&c), 0.4);
    }

    #[test]
    fn default_sigma0_degenerate_fallback() {
        let s = Array2::from_diag(&array![0.0, 0.2]);
        assert_abs_diff_eq!(default_sigma0(&s), 2e-7, epsilon = 1e-20);
        let z = Array2::<f64>::zeros((2, 2));
        assert_eq!(default_sigma0(&z), 1e-12);
    }

    #[test]
    fn noiseless_draw_is_zero() {
        let cfg = NoiseConfig {
            alpha: 0.1,
            sigma0_sq: 0.0,
            draws: 1,
            sigma_hat: Array2::zeros((3, 3)),
        };
        let (eps, z) = draw_noise_pair(&cfg, &mut seeded(1)).unwrap();
        assert_eq!(eps, vec![0.0; 3]);
        assert_eq!(z, vec![0.0; 3]);
    }

    #[test]
    fn unit_variance_draw_matches_monte_carlo() {
        let cfg = NoiseConfig {
            alpha: 0.1,
            sigma0_sq: 0.0,
            draws: 1,
            sigma_hat: Array2::from_elem((1, 1), 1.0),
        };
        let sampler = NoiseSampler::new(&cfg).unwrap();
        let mut rng = seeded(11);
        let t = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..t {
            let (_, z) = sampler.draw(&mut rng);
            sum += z[0];
            sum_sq += z[0] * z[0];
        }
        let var = sum_sq / t as f64 - (sum / t as f64).powi(2);
        assert!((var - 1.0).abs() < 0.02, "empirical variance {var}");
    }

    #[test]
    fn draw_covariance_matches_target() {
        // z must have covariance sigma_hat + sigma0^2 I, entrywise within
        // 5 standard errors over 1e5 draws.
        let sigma_hat = array![[1.0, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 1.0]];
        let sigma0_sq = 0.1;
        let cfg = NoiseConfig {
            alpha: 0.1,
            sigma0_sq,
            draws: 1,
            sigma_hat: sigma_hat.clone(),
        };
        let sampler = NoiseSampler::new(&cfg).unwrap();
        assert!(!sampler.projected());
        let t = 100_000usize;
        let mut rng = seeded(21);
        let mut sums = [0.0f64; 3];
        let mut cross = [[0.0f64; 3]; 3];
        for _ in 0..t {
            let (_, z) = sampler.draw(&mut rng);
            for i in 0..3 {
                sums[i] += z[i];
                for j in 0..3 {
                    cross[i][j] += z[i] * z[j];
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let mean_i = sums[i] / t as f64;
                let mean_j = sums[j] / t as f64;
                let emp = cross[i][j] / t as f64 - mean_i * mean_j;
                let want = sigma_hat[(i, j)] + if i == j { sigma0_sq } else { 0.0 };
                // Var of a normal covariance estimate: (v_ii v_jj + v_ij^2)/t.
                let vii = sigma_hat[(i, i)] + sigma0_sq;
                let vjj = sigma_hat[(j, j)] + sigma0_sq;
                let se = ((vii * vjj + want * want) / t as f64).sqrt();
                assert!(
                    (emp - want).abs() < 5.0 * se,
                    "cov[{i}][{j}] = {emp}, want {want} +- {}",
                    5.0 * se
                );
            }
        }
    }

    #[test]
    fn singular_covariance_uses_projection_path() {
        // Rank-1 covariance with no jitter: Cholesky fails, eigen path runs.
        let cfg = NoiseConfig {
            alpha: 0.1,
            sigma0_sq: 0.0,
            draws: 1,
            sigma_hat: array![[1.0, 1.0], [1.0, 1.0]],
        };
        let sampler = NoiseSampler::new(&cfg).unwrap();
        assert!(sampler.projected());
        let mut rng = seeded(3);
        let mut max_gap = 0.0f64;
        for _ in 0..1000 {
            let (_, z) = sampler.draw(&mut rng);
            max_gap = max_gap.max((z[0] - z[1]).abs());
        }
        // Perfectly correlated components.
        assert!(max_gap < 1e-9, "rank-1 draws must be identical, gap {max_gap}");
    }

    #[test]
    fn indefinite_covariance_is_rejected_with_eigenvalue() {
        let cfg = NoiseConfig {
            alpha: 0.1,
            sigma0_sq: 1e-6,
            draws: 1,
            sigma_hat: array![[1.0, 2.0], [2.0, 1.0]],
        };
        match NoiseSampler::new(&cfg).unwrap_err() {
            Error::NotPositiveSemidefinite { eigenvalue, .. } => {
                assert_abs_diff_eq!(eigenvalue, -1.0, epsilon = 1e-9);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn pseudo_errors_zero_noise_identity() {
        let q = [3.0, 1.0, 2.0];
        let zero = [0.0; 3];
        let (a, b) = pseudo_errors(&q, &zero, &zero, 0.1, 100);
        assert_eq!(a, q.to_vec());
        assert_eq!(b, q.to_vec());
    }

    #[test]
    fn pseudo_errors_plug_in() {
        let q = [0.0, 0.0];
        let eps = [0.0, 0.0];
        let z = [1.0, 1.0];
        let (a, b) = pseudo_errors(&q, &eps, &z, 0.1, 100);
        for j in 0..2 {
            assert_abs_diff_eq!(a[j], 0.03162277660168379, epsilon = 1e-16);
            assert_abs_diff_eq!(b[j], -0.31622776601683794, epsilon = 1e-16);
        }
    }

    #[test]
    fn pseudo_errors_alpha_one_reflection() {
        let q = [1.0, -2.0, 0.5];
        let eps = [0.3, -0.1, 0.2];
        let z = [0.7, 0.4, -1.1];
        let n = 50;
        let (a, b) = pseudo_errors(&q, &eps, &z, 1.0, n);
        let root_n = (n as f64).sqrt();
        for j in 0..3 {
            let base = q[j] + eps[j] / root_n;
            assert_abs_diff_eq!(a[j] - base, -(b[j] - base), epsilon = 1e-15);
        }
    }

    #[test]
    fn degenerate_constant_columns_select_the_better_model() {
        // Constant columns with means (3, 1): covariance is zero, the jitter
        // fallback is ~1e-12, so selection is effectively deterministic.
        let mut losses = Array2::zeros((4, 2));
        losses.column_mut(0).fill(3.0);
        losses.column_mut(1).fill(1.0);
        let em = ErrorMatrix::new(losses).unwrap();
        let (est, cfg) = randomized_with_defaults(&em, &mut seeded(13)).unwrap();
        assert_eq!(cfg.sigma0_sq, 1e-12);
        assert!(est.selected_indices.iter().all(|&j| j == 1));
        assert_eq!(est.selection_frequencies, vec![0.0, 1.0]);
        assert_abs_diff_eq!(est.estimate, 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(est.mean_nominal, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_model_estimate_stays_near_nominal() {
        // m = 1: the only selection is index 0 and the estimate deviates
        // from Q_1 by averaged noise; a 5-sigma-style bound must hold.
        let mut rng = seeded(31);
        let n = 100;
        let h = 100;
        let col: Vec<f64> = (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * 0.5 + 1.0)
            .collect();
        let em = ErrorMatrix::new(Array2::from_shape_vec((n, 1), col).unwrap()).unwrap();
        let q1 = em.column_means()[0];
        for seed in 0..20 {
            let cfg = NoiseConfig::from_matrix(&em);
            let est = randomized_estimate(&em, &cfg, &mut seeded(seed)).unwrap();
            assert!(est.selected_indices.iter().all(|&j| j == 0));
            let sigma0 = cfg.sigma0_sq.sqrt();
            let bound =
                5.0 * sigma0 * (1.0 + 1.0 / cfg.alpha.sqrt()) / ((n * h) as f64).sqrt();
            assert!(
                (est.estimate - q1).abs() <= bound,
                "seed {seed}: |{} - {q1}| > {bound}",
                est.estimate
            );
        }
    }

    #[test]
    fn shift_invariance_with_shared_noise() {
        let mut rng = seeded(101);
        let n = 60;
        let m = 4;
        let vals: Vec<f64> = (0..n * m).map(|_| rng.sample(StandardNormal)).collect();
        let base = Array2::from_shape_vec((n, m), vals).unwrap();
        let em = ErrorMatrix::new(base.clone()).unwrap();
        let shifted = ErrorMatrix::new(base + 2.5).unwrap();

        // Same covariance config and same seed: identical draws.
        let cfg = NoiseConfig::from_matrix(&em);
        let a = randomized_estimate(&em, &cfg, &mut seeded(7)).unwrap();
        let b = randomized_estimate(&shifted, &cfg, &mut seeded(7)).unwrap();
        assert_eq!(a.selection_frequencies, b.selection_frequencies);
        assert_eq!(a.selected_indices, b.selected_indices);
        assert_abs_diff_eq!(b.estimate - a.estimate, 2.5, epsilon = 1e-9);
    }

    #[test]
    fn selection_concentrates_on_a_clearly_better_model() {
        // One column mean lowered by 10/sqrt(n): the pick rate of that
        // column should dominate, and grow with n.
        for (n, min_rate) in [(100usize, 0.95f64), (400, 0.95)] {
            let gap = 10.0 / (n as f64).sqrt();
            let mut rng = seeded(n as u64);
            let m = 5;
            let mut losses = Array2::zeros((n, m));
            for i in 0..n {
                for j in 0..m {
                    let mean = if j == 2 { -gap } else { 0.0 };
                    losses[(i, j)] = mean + rng.sample::<f64, _>(StandardNormal);
                }
            }
            let em = ErrorMatrix::new(losses).unwrap();
            let (est, _) = randomized_with_defaults(&em, &mut seeded(77)).unwrap();
            assert!(
                est.selection_frequencies[2] >= min_rate,
                "n = {n}: pick rate {}",
                est.selection_frequencies[2]
            );
        }
    }
}

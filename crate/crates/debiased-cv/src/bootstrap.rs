//! Bootstrap confidence intervals for the debiased estimates.
//!
//! Each replicate resamples the error matrix (within folds for CV matrices,
//! preserving their structure) and reruns the chosen estimator from scratch.
//! In the bootstrap world the true error of model `j` is the original
//! matrix's column mean, so the original validation error of the model(s) a
//! replicate selects is the realized target of that replicate's estimate;
//! the replicate's estimation error is the difference of the two. The
//! interval takes quantiles of those bootstrap estimation errors and widens
//! each side by `1/(sqrt(n) ln n)` to absorb the residual small-order bias.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::contrast::contrast_with_folds;
use crate::error::{Error, Result};
use crate::matrix::ErrorMatrix;
use crate::randomized::{randomized_estimate, NoiseConfig};
use crate::rng::{self, Stream};

/// A two-sided bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    /// Nominal coverage level in (0, 1).
    pub level: f64,
    /// The `1/(sqrt(n) ln n)` term applied to each side.
    pub widening: f64,
    /// Number of bootstrap replicates.
    pub replicates: usize,
}

/// Which estimator each replicate reruns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BootstrapTarget {
    /// Contrast correction with `k` folds (fresh random partition per
    /// replicate; CV matrices keep their labels).
    Contrast { k: usize },
    /// Randomized estimator; covariance and (when `sigma0_sq` is None) the
    /// jitter default are recomputed from each replicate.
    Randomized {
        alpha: f64,
        draws: usize,
        sigma0_sq: Option<f64>,
    },
}

/// Bootstrap knobs. `level` defaults to 0.90 and `replicates` to 1000.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            replicates: 1000,
            level: 0.90,
            seed: 0,
        }
    }
}

/// Resample the rows of an error matrix with replacement. Plain row
/// resampling for sample-splitting matrices; for CV matrices each row is
/// redrawn from within its own fold so the fold layout and labels are kept.
pub fn resample(em: &ErrorMatrix, rng: &mut Stream) -> ErrorMatrix {
    let n = em.n_rows();
    let rows: Vec<usize> = match em.fold_of_row() {
        None => (0..n).map(|_| rng.random_range(0..n)).collect(),
        Some(folds) => {
            let k = em.n_folds().expect("folds present");
            let mut by_fold: Vec<Vec<usize>> = vec![Vec::new(); k];
            for (i, &f) in folds.iter().enumerate() {
                by_fold[f].push(i);
            }
            folds
                .iter()
                .map(|&f| {
                    let pool = &by_fold[f];
                    pool[rng.random_range(0..pool.len())]
                })
                .collect()
        }
    };
    em.select_rows(&rows)
}

/// 0-based index of the `ceil(q * b)`-th order statistic (1-based rank),
/// the quantile convention used for the interval endpoints. A small epsilon
/// keeps exact-integer targets from rounding up.
pub fn order_stat_index(q: f64, b: usize) -> usize {
    let rank = (q * b as f64 - 1e-9).ceil().max(1.0) as usize;
    rank.min(b) - 1
}

/// The widening term `1/(sqrt(n) ln n)` (natural log).
pub fn widening(n: usize) -> f64 {
    1.0 / ((n as f64).sqrt() * (n as f64).ln())
}

/// Build the bootstrap interval around a full-data estimate.
///
/// `estimate` must be the full-data value of the estimator named by
/// `target`. Replicates run in parallel with per-replicate seeds derived
/// from `opts.seed`, so results are independent of scheduling.
pub fn bootstrap_ci(
    em: &ErrorMatrix,
    target: BootstrapTarget,
    estimate: f64,
    opts: &BootstrapOptions,
) -> Result<ConfidenceInterval> {
    if opts.replicates < 2 {
        return Err(Error::TooFewReplicates {
            b: opts.replicates,
        });
    }
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(Error::BadLevel { level: opts.level });
    }

    let b = opts.replicates;
    let q_original = em.column_means();
    let q_original = q_original.as_slice().expect("contiguous");
    let pairs: Vec<Result<(f64, f64)>> = (0..b)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::substream(opts.seed, rep as u64);
            let replicate = resample(em, &mut rng);
            replicate_statistics(&replicate, target, q_original, opts.seed, &mut rng)
        })
        .collect();

    let mut diffs = Vec::with_capacity(b);
    for pair in pairs {
        let (est_b, target_b) = pair?;
        diffs.push(est_b - target_b);
    }
    diffs.sort_by(|a, b| a.total_cmp(b));
    let q_lo = (1.0 - opts.level) / 2.0;
    let q_hi = 1.0 - q_lo;
    let a = diffs[order_stat_index(q_lo, b)];
    let bq = diffs[order_stat_index(q_hi, b)];
    let w = widening(em.n_rows());

    Ok(ConfidenceInterval {
        lower: estimate + a - w,
        upper: estimate + bq + w,
        level: opts.level,
        widening: w,
        replicates: b,
    })
}

/// Stream id for the noise draws shared by every randomized replicate.
/// Replicate resampling uses streams `0..B`, so this cannot collide.
const SHARED_NOISE_STREAM: u64 = u64::MAX;

/// One replicate's debiased estimate, paired with the original matrix's
/// validation error at the model(s) the replicate selected.
fn replicate_statistics(
    replicate: &ErrorMatrix,
    target: BootstrapTarget,
    q_original: &[f64],
    master_seed: u64,
    rng: &mut Stream,
) -> Result<(f64, f64)> {
    match target {
        BootstrapTarget::Contrast { k } => {
            let (est, _) = contrast_with_folds(replicate, k, rng)?;
            Ok((est.estimate, q_original[est.selected]))
        }
        BootstrapTarget::Randomized {
            alpha,
            draws,
            sigma0_sq,
        } => {
            let mut cfg = NoiseConfig::from_matrix(replicate);
            cfg.alpha = alpha;
            cfg.draws = draws;
            if let Some(s) = sigma0_sq {
                cfg.sigma0_sq = s;
            }
            // Common random numbers: every replicate walks the same noise
            // path (transformed by its own covariance factor). The target
            // of the estimate shares the selections of the estimate itself,
            // so selection noise cancels in the real-world error; holding
            // the path fixed across replicates reproduces that cancellation
            // in the bootstrap spread.
            let mut noise_rng = rng::substream(master_seed, SHARED_NOISE_STREAM);
            let est = randomized_estimate(replicate, &cfg, &mut noise_rng)?;
            let nominal = est
                .selection_frequencies
                .iter()
                .zip(q_original)
                .map(|(&f, &q)| f * q)
                .sum();
            Ok((est.estimate, nominal))
        }
    }
}

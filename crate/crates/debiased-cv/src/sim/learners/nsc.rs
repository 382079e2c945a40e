//! Nearest shrunken centroids for two classes.
//!
//! Class centroids are pulled toward the overall centroid by soft-thresholding
//! the standardized centroid differences `d_cj`; a feature whose difference
//! shrinks to zero drops out of the classifier. Classification minimizes the
//! standardized squared distance to the shrunken centroids minus `2 ln pi_c`.

use ndarray::{Array2, ArrayView2};

use super::GridClassifier;
use crate::error::{Error, Result};
use crate::sim::scenario::Dataset;

/// Statistics shared by every threshold, plus the per-threshold sparse
/// decision rules.
pub struct NscFit {
    overall: Vec<f64>,
    thresholds: Vec<f64>,
    /// Per threshold: `(feature, linear, constant)` terms of the score
    /// difference `delta_1 - delta_0` restricted to active features.
    rules: Vec<Vec<(usize, f64, f64)>>,
    prior_diff: f64,
}

/// The default 30-point grid: thresholds linear from 0 to the largest
/// absolute standardized centroid difference, computed on the full dataset.
pub fn threshold_grid(ds: &Dataset, count: usize) -> Result<Vec<f64>> {
    let stats = Stats::compute(ds.x.view(), &ds.y)?;
    let max_d = stats
        .d1
        .iter()
        .chain(stats.d0.iter())
        .fold(0.0f64, |a, &v| a.max(v.abs()));
    if max_d <= 0.0 {
        return Err(Error::InvalidScenario(
            "cannot build an NSC grid: all centroid differences are zero".into(),
        ));
    }
    Ok((0..count)
        .map(|t| max_d * t as f64 / (count - 1) as f64)
        .collect())
}

struct Stats {
    overall: Vec<f64>,
    #[allow(dead_code)]
    centroid0: Vec<f64>,
    #[allow(dead_code)]
    centroid1: Vec<f64>,
    /// 1 / (s_j + s0)
    inv_sd: Vec<f64>,
    m0: f64,
    m1: f64,
    d0: Vec<f64>,
    d1: Vec<f64>,
    prior0: f64,
    prior1: f64,
}

impl Stats {
    fn compute(x: ArrayView2<f64>, y: &[u8]) -> Result<Self> {
        let (n, p) = x.dim();
        let n1 = y.iter().filter(|&&v| v == 1).count();
        let n0 = n - n1;
        if n0 == 0 || n1 == 0 {
            return Err(Error::InvalidScenario(
                "NSC needs both classes present in the training set".into(),
            ));
        }
        let mut centroid0 = vec![0.0; p];
        let mut centroid1 = vec![0.0; p];
        for (i, row) in x.rows().into_iter().enumerate() {
            let target = if y[i] == 0 { &mut centroid0 } else { &mut centroid1 };
            for (j, &v) in row.iter().enumerate() {
                target[j] += v;
            }
        }
        for c in centroid0.iter_mut() {
            *c /= n0 as f64;
        }
        for c in centroid1.iter_mut() {
            *c /= n1 as f64;
        }
        let overall: Vec<f64> = (0..p)
            .map(|j| (centroid0[j] * n0 as f64 + centroid1[j] * n1 as f64) / n as f64)
            .collect();

        // Pooled within-class standard deviation, guarded by the median.
        let denom = (n.saturating_sub(2)).max(1) as f64;
        let mut s: Vec<f64> = vec![0.0; p];
        for (i, row) in x.rows().into_iter().enumerate() {
            let c = if y[i] == 0 { &centroid0 } else { &centroid1 };
            for (j, &v) in row.iter().enumerate() {
                let d = v - c[j];
                s[j] += d * d;
            }
        }
        for v in s.iter_mut() {
            *v = (*v / denom).sqrt();
        }
        let mut sorted = s.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let s0 = if p % 2 == 1 {
            sorted[p / 2]
        } else {
            0.5 * (sorted[p / 2 - 1] + sorted[p / 2])
        };

        let inv_sd: Vec<f64> = s.iter().map(|&v| 1.0 / (v + s0).max(1e-300)).collect();
        let m0 = (1.0 / n0 as f64 - 1.0 / n as f64).max(0.0).sqrt();
        let m1 = (1.0 / n1 as f64 - 1.0 / n as f64).max(0.0).sqrt();
        let d0: Vec<f64> = (0..p)
            .map(|j| (centroid0[j] - overall[j]) * inv_sd[j] / m0)
            .collect();
        let d1: Vec<f64> = (0..p)
            .map(|j| (centroid1[j] - overall[j]) * inv_sd[j] / m1)
            .collect();
        Ok(Stats {
            overall,
            centroid0,
            centroid1,
            inv_sd,
            m0,
            m1,
            d0,
            d1,
            prior0: n0 as f64 / n as f64,
            prior1: n1 as f64 / n as f64,
        })
    }
}

/// Fit the NSC path over the given thresholds.
pub fn fit(x: ArrayView2<f64>, y: &[u8], thresholds: &[f64]) -> NscFit {
    let stats = Stats::compute(x, y).expect("both classes present");
    let p = stats.overall.len();
    let rules = thresholds
        .iter()
        .map(|&delta| {
            let mut rule = Vec::new();
            for j in 0..p {
                let d0 = soft(stats.d0[j], delta);
                let d1 = soft(stats.d1[j], delta);
                if d0 == 0.0 && d1 == 0.0 {
                    continue;
                }
                // Shrunken centroid offsets from the overall centroid.
                let sd = 1.0 / stats.inv_sd[j];
                let o0 = stats.m0 * sd * d0;
                let o1 = stats.m1 * sd * d1;
                // (v - o1)^2 - (v - o0)^2 = (o1^2 - o0^2) - 2 v (o1 - o0),
                // with v the overall-centered, unscaled coordinate.
                let inv_sq = stats.inv_sd[j] * stats.inv_sd[j];
                let linear = -2.0 * (o1 - o0) * inv_sq;
                let constant = (o1 * o1 - o0 * o0) * inv_sq;
                rule.push((j, linear, constant));
            }
            rule
        })
        .collect();
    NscFit {
        overall: stats.overall,
        thresholds: thresholds.to_vec(),
        rules,
        prior_diff: -2.0 * (stats.prior1.ln() - stats.prior0.ln()),
    }
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

impl GridClassifier for NscFit {
    fn predict_grid(&self, x: ArrayView2<f64>) -> Array2<u8> {
        let rows = x.nrows();
        let m = self.thresholds.len();
        let mut preds = Array2::zeros((rows, m));
        for (t, rule) in self.rules.iter().enumerate() {
            for i in 0..rows {
                let row = x.row(i);
                let mut diff = self.prior_diff;
                for &(j, linear, constant) in rule {
                    diff += constant + linear * (row[j] - self.overall[j]);
                }
                // delta_1 - delta_0 < 0 picks class 1; ties go to class 0.
                preds[(i, t)] = u8::from(diff < 0.0);
            }
        }
        preds
    }

    fn grid_len(&self) -> usize {
        self.thresholds.len()
    }
}

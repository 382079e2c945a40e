//! Generative scenarios S0-S5.
//!
//! S0 and S1 model the validation errors directly (no learner): independent
//! Gaussian losses, without and with per-model signal. S2-S4 are lasso
//! logistic classification problems scored by 5-fold CV with 0-1 loss:
//! pure noise labels, strong orthogonal signal, and the same signal with
//! AR(1)-correlated features. S5 is the small-n wide-p two-class setting
//! (n = 40, p = 1000) with NSC, CART, or KNN classifiers, in a "no signal"
//! and a "signal" variant where the first 10% of features sit 0.2 higher in
//! the second class.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::ErrorMatrix;
use crate::rng::Stream;
use crate::sim::learners::LearnerFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    S0,
    S1,
    S2,
    S3,
    S4,
    S5,
}

impl ScenarioKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S0" => Some(Self::S0),
            "S1" => Some(Self::S1),
            "S2" => Some(Self::S2),
            "S3" => Some(Self::S3),
            "S4" => Some(Self::S4),
            "S5" => Some(Self::S5),
            _ => None,
        }
    }
}

/// A fully specified simulation setting.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    /// Validation rows (S0/S1) or sample size (S2-S5).
    pub n: usize,
    /// Feature count; unused for S0/S1.
    pub p: usize,
    /// Model-grid size for direct matrices and tunable grids (lasso, NSC).
    pub models: usize,
    pub learner: Option<LearnerFamily>,
    pub cv_folds: usize,
    /// S5 only: shift the first 10% of features in the second class.
    pub signal: bool,
}

/// A binary classification dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Vec<u8>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// One generated replication.
pub enum Generated {
    /// Direct error matrix with the exact per-model test errors.
    Direct { matrix: ErrorMatrix, truth: Vec<f64> },
    /// A dataset still to be run through CV.
    Learning { dataset: Dataset },
}

impl Scenario {
    pub fn s0() -> Self {
        Scenario {
            kind: ScenarioKind::S0,
            n: 100,
            p: 0,
            models: 30,
            learner: None,
            cv_folds: 2,
            signal: false,
        }
    }

    pub fn s1() -> Self {
        Scenario {
            kind: ScenarioKind::S1,
            ..Self::s0()
        }
    }

    pub fn s2(p: usize) -> Self {
        Scenario {
            kind: ScenarioKind::S2,
            n: 100,
            p,
            models: 30,
            learner: Some(LearnerFamily::LassoLogistic),
            cv_folds: 5,
            signal: false,
        }
    }

    pub fn s3(p: usize) -> Self {
        Scenario {
            kind: ScenarioKind::S3,
            signal: true,
            ..Self::s2(p)
        }
    }

    pub fn s4(p: usize) -> Self {
        Scenario {
            kind: ScenarioKind::S4,
            signal: true,
            ..Self::s2(p)
        }
    }

    pub fn s5(signal: bool, learner: LearnerFamily) -> Self {
        Scenario {
            kind: ScenarioKind::S5,
            n: 40,
            p: 1000,
            models: 30,
            learner: Some(learner),
            cv_folds: 5,
            signal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidScenario(msg));
        if self.n < 2 {
            return fail(format!("n must be at least 2, got {}", self.n));
        }
        match self.kind {
            ScenarioKind::S0 | ScenarioKind::S1 => {
                if self.models < 1 {
                    return fail("at least one model is required".into());
                }
            }
            ScenarioKind::S2 | ScenarioKind::S3 | ScenarioKind::S4 => {
                if self.learner != Some(LearnerFamily::LassoLogistic) {
                    return fail("S2-S4 use the lasso logistic learner".into());
                }
                if self.kind != ScenarioKind::S2 && self.p < 10 {
                    return fail(format!(
                        "the signal lives on the first 10 features; p = {} is too small",
                        self.p
                    ));
                }
                if self.p < 1 {
                    return fail("p must be at least 1".into());
                }
                self.check_cv()?;
            }
            ScenarioKind::S5 => {
                if self.learner.is_none() {
                    return fail("S5 needs a learner (nsc, cart or knn)".into());
                }
                if self.n % 2 != 0 {
                    return fail(format!("S5 needs equal class sizes; n = {} is odd", self.n));
                }
                if self.signal && self.p < 10 {
                    return fail(format!(
                        "the S5 signal shifts the first 10% of features; p = {} is too small",
                        self.p
                    ));
                }
                self.check_cv()?;
            }
        }
        Ok(())
    }

    fn check_cv(&self) -> Result<()> {
        if self.cv_folds < 2 {
            return Err(Error::FoldCountTooSmall { k: self.cv_folds });
        }
        if self.n % self.cv_folds != 0 {
            return Err(Error::UnevenFolds {
                n: self.n,
                k: self.cv_folds,
            });
        }
        Ok(())
    }

    /// Known exact test error shared by every model, when the scenario has
    /// one: 0 for S0 and 0.5 for the no-signal classification settings.
    pub fn analytic_truth(&self) -> Option<f64> {
        match self.kind {
            ScenarioKind::S0 => Some(0.0),
            ScenarioKind::S2 => Some(0.5),
            ScenarioKind::S5 if !self.signal => Some(0.5),
            _ => None,
        }
    }

    /// Identifier used in file names and report columns.
    pub fn id(&self) -> String {
        match self.kind {
            ScenarioKind::S0 => "s0".into(),
            ScenarioKind::S1 => "s1".into(),
            ScenarioKind::S2 => format!("s2_p{}", self.p),
            ScenarioKind::S3 => format!("s3_p{}", self.p),
            ScenarioKind::S4 => format!("s4_p{}", self.p),
            ScenarioKind::S5 => format!(
                "s5_{}_{}",
                if self.signal { "signal" } else { "nosignal" },
                self.learner.map_or("none", |l| l.id())
            ),
        }
    }

    /// Generate one replication.
    pub fn generate(&self, rng: &mut Stream) -> Result<Generated> {
        self.validate()?;
        Ok(match self.kind {
            ScenarioKind::S0 => Generated::Direct {
                matrix: gen_s0(self.n, self.models, rng)?,
                truth: vec![0.0; self.models],
            },
            ScenarioKind::S1 => {
                let (matrix, truth) = gen_s1(self.n, self.models, rng)?;
                Generated::Direct { matrix, truth }
            }
            _ => Generated::Learning {
                dataset: gen_classification(self.kind, self.n, self.p, self.signal, rng)?,
            },
        })
    }

    /// A fresh draw of `size` observations from the same distribution, for
    /// the truth oracle. Only classification scenarios have datasets.
    pub fn gen_test_set(&self, size: usize, rng: &mut Stream) -> Result<Dataset> {
        match self.kind {
            ScenarioKind::S0 | ScenarioKind::S1 => Err(Error::InvalidScenario(
                "S0/S1 model errors directly and have no dataset".into(),
            )),
            kind => gen_classification(kind, size, self.p, self.signal, rng),
        }
    }
}

/// Independent standard normal losses; every model's true error is 0.
pub fn gen_s0(n: usize, m: usize, rng: &mut Stream) -> Result<ErrorMatrix> {
    let mut losses = Array2::zeros((n, m));
    for v in losses.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    ErrorMatrix::new(losses)
}

/// Gaussian losses around per-model means `mu_j ~ N(0, 1/n)`; returns the
/// means as the ground truth.
pub fn gen_s1(n: usize, m: usize, rng: &mut Stream) -> Result<(ErrorMatrix, Vec<f64>)> {
    let scale = 1.0 / (n as f64).sqrt();
    let truth: Vec<f64> = (0..m)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
        .collect();
    let mut losses = Array2::zeros((n, m));
    for mut row in losses.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = truth[j] + rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok((ErrorMatrix::new(losses)?, truth))
}

/// Generate a classification dataset for S2-S5.
pub fn gen_classification(
    kind: ScenarioKind,
    n: usize,
    p: usize,
    signal: bool,
    rng: &mut Stream,
) -> Result<Dataset> {
    match kind {
        ScenarioKind::S2 => {
            let x = gaussian_features(n, p, rng);
            let y = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
            Ok(Dataset { x, y })
        }
        ScenarioKind::S3 | ScenarioKind::S4 => {
            if p < 10 {
                return Err(Error::InvalidScenario(format!(
                    "the signal lives on the first 10 features; p = {p} is too small"
                )));
            }
            let x = if kind == ScenarioKind::S3 {
                gaussian_features(n, p, rng)
            } else {
                ar1_features(n, p, 0.5, rng)
            };
            let mut y = Vec::with_capacity(n);
            for row in x.rows() {
                // beta_j = 4 on the first 10 coordinates.
                let eta: f64 = row.iter().take(10).sum::<f64>() * 4.0;
                let prob = 1.0 / (1.0 + (-eta).exp());
                y.push(u8::from(rng.random_bool(prob)));
            }
            Ok(Dataset { x, y })
        }
        ScenarioKind::S5 => {
            // Two classes of equal size: first half one class, second half
            // the other, with features drawn afterwards.
            let mut x = gaussian_features(n, p, rng);
            let y: Vec<u8> = (0..n).map(|i| u8::from(i >= n / 2)).collect();
            if signal {
                let shifted = p / 10;
                for (i, &label) in y.iter().enumerate() {
                    if label == 1 {
                        for j in 0..shifted {
                            x[(i, j)] += 0.2;
                        }
                    }
                }
            }
            Ok(Dataset { x, y })
        }
        ScenarioKind::S0 | ScenarioKind::S1 => Err(Error::InvalidScenario(
            "S0/S1 model errors directly and have no dataset".into(),
        )),
    }
}

fn gaussian_features(n: usize, p: usize, rng: &mut Stream) -> Array2<f64> {
    let mut x = Array2::zeros((n, p));
    for v in x.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    x
}

/// Row-wise AR(1) features with lag-one correlation `rho`, built by the
/// stationary recursion `x_k = rho x_{k-1} + sqrt(1 - rho^2) e_k`.
fn ar1_features(n: usize, p: usize, rho: f64, rng: &mut Stream) -> Array2<f64> {
    let innov = (1.0 - rho * rho).sqrt();
    let mut x = Array2::zeros((n, p));
    for mut row in x.rows_mut() {
        let mut prev: f64 = rng.sample(StandardNormal);
        row[0] = prev;
        for j in 1..p {
            prev = rho * prev + innov * rng.sample::<f64, _>(StandardNormal);
            row[j] = prev;
        }
    }
    x
}

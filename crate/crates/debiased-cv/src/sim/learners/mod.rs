//! Built-in classifier families, each fit over a whole tuning grid at once.

pub mod cart;
pub mod knn;
pub mod lasso;
pub mod nsc;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::sim::scenario::Dataset;

/// A classifier family fit on one training set across its full tuning grid.
/// Returning predictions for the whole grid at once lets families share work
/// (one distance pass serves every k in KNN; one tree serves every depth).
pub trait GridClassifier: Send + Sync {
    /// 0/1 predictions, one row per observation and one column per grid value.
    fn predict_grid(&self, x: ArrayView2<f64>) -> Array2<u8>;
    fn grid_len(&self) -> usize;
    /// False when any grid value hit an iteration cap before converging.
    fn all_converged(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearnerFamily {
    LassoLogistic,
    Nsc,
    Knn,
    Cart,
}

impl LearnerFamily {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lasso" | "lasso-logistic" | "lasso_logistic" => Some(Self::LassoLogistic),
            "nsc" => Some(Self::Nsc),
            "knn" => Some(Self::Knn),
            "cart" => Some(Self::Cart),
            _ => None,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::LassoLogistic => "lasso",
            Self::Nsc => "nsc",
            Self::Knn => "knn",
            Self::Cart => "cart",
        }
    }
}

/// A tuning grid: the family plus the strictly monotone parameter values the
/// selection runs over (penalties, shrinkage levels, neighbor counts, depths).
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerGrid {
    pub family: LearnerFamily,
    pub values: Vec<f64>,
}

impl LearnerGrid {
    /// Build the default grid for a family. Data-dependent grids (the lasso
    /// penalty path and NSC thresholds) are computed from the full dataset so
    /// the same grid value means the same model in every CV fold.
    pub fn build(family: LearnerFamily, ds: &Dataset, size: usize) -> Result<LearnerGrid> {
        let values = match family {
            LearnerFamily::LassoLogistic => {
                let lmax = lasso::lambda_max(ds.x.view(), &ds.y);
                if lmax <= 0.0 {
                    return Err(Error::InvalidScenario(
                        "cannot build a lasso grid: all features are uncorrelated with the labels"
                            .into(),
                    ));
                }
                lasso::log_spaced_lambdas(lmax, size.max(2))
            }
            LearnerFamily::Nsc => nsc::threshold_grid(ds, size.max(2))?,
            LearnerFamily::Knn => (0..11).map(|t| (2 * t + 1) as f64).collect(),
            LearnerFamily::Cart => (1..=8).map(|d| d as f64).collect(),
        };
        let grid = LearnerGrid { family, values };
        grid.validate()?;
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() < 2 {
            return Err(Error::InvalidScenario(format!(
                "a tuning grid needs at least 2 values, got {}",
                self.values.len()
            )));
        }
        let increasing = self.values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::InvalidScenario(
                "tuning grid must be strictly monotone".into(),
            ));
        }
        Ok(())
    }

    /// Fit this grid on a training set.
    pub fn fit(&self, x: ArrayView2<f64>, y: &[u8]) -> Box<dyn GridClassifier> {
        match self.family {
            LearnerFamily::LassoLogistic => Box::new(lasso::fit_path(x, y, &self.values)),
            LearnerFamily::Nsc => Box::new(nsc::fit(x, y, &self.values)),
            LearnerFamily::Knn => Box::new(knn::fit(
                x,
                y,
                &self.values.iter().map(|&v| v as usize).collect::<Vec<_>>(),
            )),
            LearnerFamily::Cart => Box::new(cart::fit(
                x,
                y,
                &self.values.iter().map(|&v| v as usize).collect::<Vec<_>>(),
            )),
        }
    }
}

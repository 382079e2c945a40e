//! K-fold cross-validation over a tuning grid, and the fresh-sample oracle
//! for the true test error of the fitted fold models.

use ndarray::Array2;

use crate::error::Result;
use crate::folds::{make_folds, FoldPartition};
use crate::matrix::ErrorMatrix;
use crate::rng::Stream;
use crate::sim::learners::{GridClassifier, LearnerGrid};
use crate::sim::scenario::{Dataset, Scenario};

/// A finished CV pass: the 0-1 error matrix (with fold labels) plus the
/// per-fold fitted models, kept so the truth oracle can score them on fresh
/// data without refitting.
pub struct CvFit {
    pub matrix: ErrorMatrix,
    pub partition: FoldPartition,
    pub fold_models: Vec<Box<dyn GridClassifier>>,
    /// Count of grid fits that hit an iteration cap.
    pub nonconverged: usize,
}

/// Run K-fold CV with 0-1 loss: entry `(i, j)` of the returned matrix is the
/// misclassification indicator of grid model `j`, trained without row `i`'s
/// fold, on row `i`. Trains exactly `K * grid.len()` models.
pub fn run_cv(ds: &Dataset, grid: &LearnerGrid, k: usize, rng: &mut Stream) -> Result<CvFit> {
    grid.validate()?;
    let n = ds.len();
    let m = grid.len();
    let partition = make_folds(n, k, rng)?;
    let fold_rows = partition.fold_rows();

    let mut losses = Array2::<f64>::zeros((n, m));
    let mut fold_models = Vec::with_capacity(k);
    let mut nonconverged = 0usize;
    for held_out in fold_rows.iter() {
        let train_rows: Vec<usize> = (0..n).filter(|i| !held_out.contains(i)).collect();
        let (train_x, train_y) = subset(ds, &train_rows);
        let model = grid.fit(train_x.view(), &train_y);
        if !model.all_converged() {
            nonconverged += 1;
        }

        let (val_x, val_y) = subset(ds, held_out);
        let preds = model.predict_grid(val_x.view());
        for (local, &row) in held_out.iter().enumerate() {
            for j in 0..m {
                losses[(row, j)] = f64::from(preds[(local, j)] != val_y[local]);
            }
        }
        fold_models.push(model);
    }

    let matrix = ErrorMatrix::with_folds(losses, partition.assignment().to_vec())?;
    Ok(CvFit {
        matrix,
        partition,
        fold_models,
        nonconverged,
    })
}

/// Monte Carlo oracle for the true test error of each grid model: draw a
/// fresh test set from the scenario and average the 0-1 loss of the K fold
/// models at each grid value.
pub fn true_err(
    scenario: &Scenario,
    fit: &CvFit,
    test_size: usize,
    rng: &mut Stream,
) -> Result<Vec<f64>> {
    let test = scenario.gen_test_set(test_size, rng)?;
    let m = fit.matrix.n_models();
    let k = fit.fold_models.len();
    let mut errs = vec![0.0f64; m];
    for model in &fit.fold_models {
        let preds = model.predict_grid(test.x.view());
        for j in 0..m {
            let mut wrong = 0usize;
            for (i, &yi) in test.y.iter().enumerate() {
                wrong += usize::from(preds[(i, j)] != yi);
            }
            errs[j] += wrong as f64 / test.y.len() as f64;
        }
    }
    for e in errs.iter_mut() {
        *e /= k as f64;
    }
    Ok(errs)
}

fn subset(ds: &Dataset, rows: &[usize]) -> (Array2<f64>, Vec<u8>) {
    let p = ds.x.ncols();
    let mut x = Array2::zeros((rows.len(), p));
    let mut y = Vec::with_capacity(rows.len());
    for (out, &src) in rows.iter().enumerate() {
        x.row_mut(out).assign(&ds.x.row(src));
        y.push(ds.y[src]);
    }
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::sim::learners::LearnerFamily;
    use crate::sim::scenario::{gen_classification, ScenarioKind};

    #[test]
    fn cv_matrix_is_binary_with_fold_labels() {
        let ds = gen_classification(ScenarioKind::S2, 50, 5, false, &mut seeded(1)).unwrap();
        let grid = LearnerGrid::build(LearnerFamily::Knn, &ds, 0).unwrap();
        let fit = run_cv(&ds, &grid, 5, &mut seeded(2)).unwrap();
        assert_eq!(fit.matrix.n_rows(), 50);
        assert_eq!(fit.matrix.n_models(), grid.len());
        assert_eq!(fit.matrix.n_folds(), Some(5));
        assert!(fit
            .matrix
            .losses()
            .iter()
            .all(|&v| v == 0.0 || v == 1.0));
        assert_eq!(fit.fold_models.len(), 5);
    }

    #[test]
    fn column_mean_equals_overall_cv_error_by_definition() {
        let ds = gen_classification(ScenarioKind::S2, 30, 4, false, &mut seeded(3)).unwrap();
        let grid = LearnerGrid::build(LearnerFamily::Cart, &ds, 0).unwrap();
        let fit = run_cv(&ds, &grid, 5, &mut seeded(4)).unwrap();
        let q = fit.matrix.column_means();
        for j in 0..grid.len() {
            let total: f64 = fit.matrix.losses().column(j).sum();
            assert!((q[j] - total / 30.0).abs() < 1e-15);
        }
    }

    #[test]
    fn null_scenario_cv_error_is_near_half() {
        // With pure-noise labels every model's CV error hovers around 0.5.
        let mut rng = seeded(5);
        let mut sum = 0.0;
        let mut count = 0;
        for _ in 0..10 {
            let ds = gen_classification(ScenarioKind::S2, 40, 6, false, &mut rng).unwrap();
            let grid = LearnerGrid::build(LearnerFamily::Knn, &ds, 0).unwrap();
            let fit = run_cv(&ds, &grid, 5, &mut rng).unwrap();
            sum += fit.matrix.column_means().mean().unwrap();
            count += 1;
        }
        let grand = sum / count as f64;
        assert!((grand - 0.5).abs() < 0.08, "mean CV error {grand}");
    }

    #[test]
    fn truth_oracle_is_near_half_for_null_classification() {
        let sc = Scenario::s2(5);
        let mut sc = sc;
        sc.n = 50;
        let ds = gen_classification(ScenarioKind::S2, 50, 5, false, &mut seeded(6)).unwrap();
        let grid = LearnerGrid::build(LearnerFamily::LassoLogistic, &ds, 10).unwrap();
        let fit = run_cv(&ds, &grid, 5, &mut seeded(7)).unwrap();
        let errs = true_err(&sc, &fit, 10_000, &mut seeded(8)).unwrap();
        assert_eq!(errs.len(), 10);
        for (j, &e) in errs.iter().enumerate() {
            assert!((e - 0.5).abs() < 0.02, "model {j}: true error {e}");
        }
    }
}

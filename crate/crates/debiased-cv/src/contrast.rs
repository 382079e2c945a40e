//! Contrast-based correction of the selected model's validation error.
//!
//! Selecting the model with minimum validation error makes that minimum an
//! optimistic estimate of the selected model's test error. The correction
//! here measures the optimism directly from the error matrix: split the rows
//! into `K` equal folds, let each fold pick its own best model, then compare
//! the picking fold's error for that model against the held-out folds' error
//! for the same model. Averaging those gaps with a `1/(K*sqrt(K))` scale
//! gives the correction `delta_hat`, and the debiased estimate is the
//! selected model's overall error plus `delta_hat`. No model is ever refit.

use serde::Serialize;

use crate::error::Result;
use crate::folds::{self, FoldPartition};
use crate::matrix::ErrorMatrix;
use crate::rng::Stream;
use crate::selection::{argmin, select_min, SelectionResult};

/// Debiased estimate for minimum-validation-error selection, with the
/// diagnostics needed to audit the correction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContrastEstimate {
    /// Nominal validation error of the selected model (the biased minimum).
    pub q_selected: f64,
    /// The additive correction.
    pub delta_hat: f64,
    /// `q_selected + delta_hat`.
    pub estimate: f64,
    /// 0-based index of the globally selected model.
    pub selected: usize,
    /// 0-based index each fold selected on its own rows.
    pub per_fold_selected: Vec<usize>,
    /// Fold count used.
    pub k: usize,
}

/// The selected model and its nominal validation error, uncorrected.
pub fn nominal_error(em: &ErrorMatrix) -> (SelectionResult, f64) {
    let selection = select_min(em.column_means().as_slice().expect("contiguous"));
    let value = selection.selected_value();
    (selection, value)
}

/// Compute the debiased estimate on an explicit partition.
pub fn contrast_estimate(em: &ErrorMatrix, partition: &FoldPartition) -> Result<ContrastEstimate> {
    let fold_means = em.fold_means(partition)?;
    let k = partition.n_folds();
    let q = em.column_means();

    let per_fold_selected: Vec<usize> = fold_means
        .rows()
        .into_iter()
        .map(|row| argmin(row.as_slice().expect("contiguous")))
        .collect();

    let mut contrast_sum = 0.0;
    for (fold, &j) in per_fold_selected.iter().enumerate() {
        let held_out: f64 = (0..k)
            .filter(|&l| l != fold)
            .map(|l| fold_means[(l, j)])
            .sum::<f64>()
            / (k as f64 - 1.0);
        contrast_sum += held_out - fold_means[(fold, j)];
    }
    let delta_hat = contrast_sum / (k as f64 * (k as f64).sqrt());

    let selected = argmin(q.as_slice().expect("contiguous"));
    let q_selected = q[selected];
    Ok(ContrastEstimate {
        q_selected,
        delta_hat,
        estimate: q_selected + delta_hat,
        selected,
        per_fold_selected,
        k,
    })
}

/// Entry point that also handles partitioning: CV matrices reuse their fold
/// labels, sample-splitting matrices get a fresh seeded partition (dropping
/// `n mod k` random rows if needed). Returns the partition actually used so
/// runs can be reproduced.
pub fn contrast_with_folds(
    em: &ErrorMatrix,
    k: usize,
    rng: &mut Stream,
) -> Result<(ContrastEstimate, FoldPartition)> {
    let (em, partition) = folds::prepare(em, k, rng)?;
    let estimate = contrast_estimate(&em, &partition)?;
    Ok((estimate, partition))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::folds::FoldPartition;
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn hand_setup() -> (ErrorMatrix, FoldPartition) {
        let em = ErrorMatrix::new(array![[0.0, 1.0], [2.0, 1.0], [4.0, 5.0], [6.0, 3.0]]).unwrap();
        let fp = FoldPartition::from_assignment(vec![0, 0, 1, 1], 2).unwrap();
        (em, fp)
    }

    #[test]
    fn hand_example() {
        let (em, fp) = hand_setup();
        let est = contrast_estimate(&em, &fp).unwrap();
        // Fold means (1,1) and (5,4): fold 1 picks model 1 on a tie, fold 2
        // picks model 2; contrasts 5-1=4 and 1-4=-3.
        assert_eq!(est.per_fold_selected, vec![0, 1]);
        assert_eq!(est.selected, 1);
        assert_abs_diff_eq!(est.delta_hat, 1.0 / (2.0 * 2.0f64.sqrt()), epsilon = 1e-15);
        assert_abs_diff_eq!(est.estimate, 2.5 + 1.0 / (2.0 * 2.0f64.sqrt()), epsilon = 1e-15);
        assert_eq!(est.estimate, est.q_selected + est.delta_hat);
    }

    #[test]
    fn nominal_error_hand_example() {
        let (em, _) = hand_setup();
        let (sel, value) = nominal_error(&em);
        assert_eq!(sel.selected, 1);
        assert_eq!(value, 2.5);
    }

    #[test]
    fn nominal_error_trivial_cases() {
        let zeros = ErrorMatrix::new(Array2::zeros((4, 3))).unwrap();
        let (sel, value) = nominal_error(&zeros);
        assert_eq!((sel.selected, value), (0, 0.0));

        let single = ErrorMatrix::new(Array2::from_elem((4, 1), 0.75)).unwrap();
        let (sel, value) = nominal_error(&single);
        assert_eq!((sel.selected, value), (0, 0.75));
    }

    #[test]
    fn constant_matrix_has_zero_correction() {
        let em = ErrorMatrix::new(Array2::from_elem((8, 3), 2.5)).unwrap();
        let fp = make_even_partition(8, 2);
        let est = contrast_estimate(&em, &fp).unwrap();
        assert_eq!(est.delta_hat, 0.0);
        assert_eq!(est.estimate, 2.5);
    }

    #[test]
    fn single_model_two_folds_cancels_exactly() {
        // With one model and K=2 the two contrasts are negatives of each
        // other, so the correction vanishes.
        let em = ErrorMatrix::new(
            Array2::from_shape_vec((6, 1), vec![0.5, 1.5, -2.0, 4.0, 0.25, 8.0]).unwrap(),
        )
        .unwrap();
        let fp = make_even_partition(6, 2);
        let est = contrast_estimate(&em, &fp).unwrap();
        assert_eq!(est.per_fold_selected, vec![0, 0]);
        assert_abs_diff_eq!(est.delta_hat, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(est.estimate, em.column_means()[0], epsilon = 1e-15);
    }

    #[test]
    fn cv_matrix_forces_its_own_partition() {
        let losses = Array2::from_shape_fn((6, 2), |(i, j)| ((i * 31 + j * 17) % 7) as f64);
        let cv = ErrorMatrix::with_folds(losses, vec![0, 1, 2, 0, 1, 2]).unwrap();
        let (est, fp) = contrast_with_folds(&cv, 2, &mut seeded(5)).unwrap();
        assert_eq!(est.k, 3);
        assert_eq!(fp.assignment(), cv.fold_of_row().unwrap());
    }

    fn make_even_partition(n: usize, k: usize) -> FoldPartition {
        let per = n / k;
        FoldPartition::from_assignment((0..n).map(|i| i / per).collect(), k).unwrap()
    }

    proptest! {
        // Shifting every loss by a constant moves the estimate by that
        // constant and leaves the correction and all selections unchanged.
        // Integer-valued entries keep exact-math ties exact in floats.
        #[test]
        fn shift_invariance(
            entries in proptest::collection::vec(0i32..100, 24),
            shift in -50i32..50,
        ) {
            let base: Vec<f64> = entries.iter().map(|&v| v as f64).collect();
            let shifted: Vec<f64> = entries.iter().map(|&v| (v + shift) as f64).collect();
            let em = ErrorMatrix::new(Array2::from_shape_vec((8, 3), base).unwrap()).unwrap();
            let em_shift = ErrorMatrix::new(Array2::from_shape_vec((8, 3), shifted).unwrap()).unwrap();
            let fp = make_even_partition(8, 2);

            let a = contrast_estimate(&em, &fp).unwrap();
            let b = contrast_estimate(&em_shift, &fp).unwrap();
            prop_assert_eq!(a.selected, b.selected);
            prop_assert_eq!(&a.per_fold_selected, &b.per_fold_selected);
            prop_assert!((a.delta_hat - b.delta_hat).abs() < 1e-10);
            prop_assert!((b.estimate - a.estimate - shift as f64).abs() < 1e-10);
            prop_assert!((b.q_selected - a.q_selected - shift as f64).abs() < 1e-10);
        }

        // The struct-level identity holds exactly, bit for bit.
        #[test]
        fn estimate_is_sum_of_parts(
            entries in proptest::collection::vec(-1.0e3..1.0e3f64, 24),
            seed in any::<u64>(),
        ) {
            let em = ErrorMatrix::new(Array2::from_shape_vec((8, 3), entries).unwrap()).unwrap();
            let (est, _) = contrast_with_folds(&em, 2, &mut seeded(seed)).unwrap();
            prop_assert_eq!(est.estimate, est.q_selected + est.delta_hat);
        }
    }
}

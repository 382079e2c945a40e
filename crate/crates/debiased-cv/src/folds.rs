//! Fold partitions of the validation rows.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::matrix::ErrorMatrix;
use crate::rng::Stream;

/// An assignment of `n` rows to `K` equal-size folds (0-based fold ids).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPartition {
    assignment: Vec<usize>,
    k: usize,
}

impl FoldPartition {
    /// Build from an explicit assignment. Every fold `0..k` must occur and
    /// all folds must have exactly `n / k` rows.
    pub fn from_assignment(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::FoldCountTooSmall { k });
        }
        let n = assignment.len();
        if n % k != 0 {
            return Err(Error::UnevenFolds { n, k });
        }
        let mut counts = vec![0usize; k];
        for &f in &assignment {
            if f >= k {
                return Err(Error::BadFoldLabels {
                    k,
                    detail: format!("label {} out of range", f + 1),
                });
            }
            counts[f] += 1;
        }
        let want = n / k;
        if counts.iter().any(|&c| c != want) {
            return Err(Error::BadFoldLabels {
                k,
                detail: format!("unequal fold sizes {counts:?}"),
            });
        }
        Ok(Self { assignment, k })
    }

    pub fn n_folds(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn fold_of(&self, row: usize) -> usize {
        self.assignment[row]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Row indices of each fold, in row order.
    pub fn fold_rows(&self) -> Vec<Vec<usize>> {
        let mut rows = vec![Vec::with_capacity(self.len() / self.k); self.k];
        for (i, &f) in self.assignment.iter().enumerate() {
            rows[f].push(i);
        }
        rows
    }
}

/// Uniformly random partition of `n` rows into `k` equal-size folds.
/// Deterministic given the generator state; rejects `n` not divisible by `k`
/// (see [`prepare`] for the entry point that truncates first).
pub fn make_folds(n: usize, k: usize, rng: &mut Stream) -> Result<FoldPartition> {
    if k < 2 {
        return Err(Error::FoldCountTooSmall { k });
    }
    if n % k != 0 {
        return Err(Error::UnevenFolds { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let per_fold = n / k;
    let mut assignment = vec![0usize; n];
    for (pos, &row) in order.iter().enumerate() {
        assignment[row] = pos / per_fold;
    }
    Ok(FoldPartition { assignment, k })
}

/// Prepare a matrix and partition for an estimate.
///
/// Cross-validation matrices reuse their own fold labels and force the fold
/// count to the CV fold count. Sample-splitting matrices get a fresh random
/// partition; when `n` is not divisible by `k`, `n mod k` rows are dropped
/// uniformly at random first so the folds stay equal-size.
pub fn prepare(em: &ErrorMatrix, k: usize, rng: &mut Stream) -> Result<(ErrorMatrix, FoldPartition)> {
    if let Some(partition) = em.cv_partition() {
        return Ok((em.clone(), partition));
    }
    if k < 2 {
        return Err(Error::FoldCountTooSmall { k });
    }
    let n = em.n_rows();
    let keep = n - n % k;
    if keep < k {
        return Err(Error::UnevenFolds { n, k });
    }
    let em = if keep == n {
        em.clone()
    } else {
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(rng);
        rows.truncate(keep);
        rows.sort_unstable();
        em.select_rows(&rows)
    };
    let partition = make_folds(keep, k, rng)?;
    Ok((em, partition))
}

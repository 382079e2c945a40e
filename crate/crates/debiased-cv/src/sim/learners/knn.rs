//! K-nearest-neighbor majority vote with Euclidean distance.
//!
//! One distance pass per test point serves every `k` in the grid. Distance
//! ties break toward the smaller training index; vote ties (even `k`) break
//! toward class 0.

use ndarray::{Array2, ArrayView2};

use super::GridClassifier;

pub struct KnnFit {
    train_x: Array2<f64>,
    train_y: Vec<u8>,
    ks: Vec<usize>,
}

pub fn fit(x: ArrayView2<f64>, y: &[u8], ks: &[usize]) -> KnnFit {
    KnnFit {
        train_x: x.to_owned(),
        train_y: y.to_vec(),
        ks: ks.to_vec(),
    }
}

impl GridClassifier for KnnFit {
    fn predict_grid(&self, x: ArrayView2<f64>) -> Array2<u8> {
        let rows = x.nrows();
        let n_train = self.train_y.len();
        let k_max = self.ks.iter().copied().max().unwrap_or(1).min(n_train);
        let mut preds = Array2::zeros((rows, self.ks.len()));
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n_train);
        for (i, row) in x.rows().into_iter().enumerate() {
            dist.clear();
            for (t, train_row) in self.train_x.rows().into_iter().enumerate() {
                let mut d = 0.0;
                for (&a, &b) in row.iter().zip(train_row.iter()) {
                    let gap = a - b;
                    d += gap * gap;
                }
                dist.push((d, t));
            }
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

            // Running vote over the first k_max neighbors gives every k.
            let mut ones = 0usize;
            let mut votes_at = vec![0usize; k_max + 1];
            for (rank, &(_, idx)) in dist.iter().take(k_max).enumerate() {
                ones += usize::from(self.train_y[idx] == 1);
                votes_at[rank + 1] = ones;
            }
            for (g, &k) in self.ks.iter().enumerate() {
                let k = k.min(n_train);
                let ones = votes_at[k];
                preds[(i, g)] = u8::from(2 * ones > k);
            }
        }
        preds
    }

    fn grid_len(&self) -> usize {
        self.ks.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use ndarray::array;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn k1_has_zero_training_error_on_distinct_points() {
        let mut rng = seeded(2);
        let mut x = Array2::zeros((30, 4));
        for v in x.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let y: Vec<u8> = (0..30).map(|_| u8::from(rng.random_bool(0.5))).collect();
        let fit = fit(x.view(), &y, &[1, 3]);
        let preds = fit.predict_grid(x.view());
        for i in 0..30 {
            assert_eq!(preds[(i, 0)], y[i], "row {i} at k=1");
        }
    }

    #[test]
    fn majority_vote_is_correct_by_hand() {
        // Train: three points at -1 (class 0) and two at +1 (class 1).
        let x = array![[-1.0], [-1.1], [-0.9], [1.0], [1.1]];
        let y = vec![0, 0, 0, 1, 1];
        let fit = fit(x.view(), &y, &[1, 3, 5]);
        let preds = fit.predict_grid(array![[0.95]].view());
        assert_eq!(preds[(0, 0)], 1); // nearest is +1.0
        assert_eq!(preds[(0, 1)], 1); // 2 of 3 nearest are class 1
        assert_eq!(preds[(0, 2)], 0); // full vote: 3 of 5 are class 0
    }

    #[test]
    fn even_vote_tie_breaks_to_class_zero() {
        let x = array![[-1.0], [1.0]];
        let y = vec![0, 1];
        let fit = fit(x.view(), &y, &[2]);
        let preds = fit.predict_grid(array![[0.0]].view());
        assert_eq!(preds[(0, 0)], 0);
    }

    #[test]
    fn distance_tie_breaks_to_smaller_index() {
        // Two training points equidistant from the query but with different
        // labels: index 0 wins at k=1.
        let x = array![[1.0], [-1.0]];
        let y = vec![1, 0];
        let fit = fit(x.view(), &y, &[1]);
        let preds = fit.predict_grid(array![[0.0]].view());
        assert_eq!(preds[(0, 0)], 1);
    }
}

//! Classification tree with greedy Gini splits.
//!
//! The tree is grown once to the largest depth in the grid; a prediction at
//! depth `d` reads the majority class of the node reached after `d` splits,
//! so one tree serves the whole depth grid. Splits must strictly reduce
//! impurity; ties go to the leftmost feature, then the smaller threshold.

use ndarray::{Array2, ArrayView2};

use super::GridClassifier;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        majority: u8,
    },
    Split {
        feature: usize,
        threshold: f64,
        majority: u8,
        left: usize,
        right: usize,
    },
}

pub struct CartFit {
    nodes: Vec<Node>,
    depths: Vec<usize>,
}

pub fn fit(x: ArrayView2<f64>, y: &[u8], depths: &[usize]) -> CartFit {
    let max_depth = depths.iter().copied().max().unwrap_or(1);
    let mut nodes = Vec::new();
    let rows: Vec<usize> = (0..y.len()).collect();
    build(x, y, &rows, max_depth, &mut nodes);
    CartFit {
        nodes,
        depths: depths.to_vec(),
    }
}

fn majority(y: &[u8], rows: &[usize]) -> u8 {
    let ones = rows.iter().filter(|&&i| y[i] == 1).count();
    // Ties go to class 0.
    u8::from(2 * ones > rows.len())
}

fn gini(ones: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = ones as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

/// Returns the index of the subtree root in `nodes`.
fn build(x: ArrayView2<f64>, y: &[u8], rows: &[usize], depth_left: usize, nodes: &mut Vec<Node>) -> usize {
    let majority_here = majority(y, rows);
    let ones = rows.iter().filter(|&&i| y[i] == 1).count();
    let parent_gini = gini(ones, rows.len());

    if depth_left == 0 || rows.len() < 2 || ones == 0 || ones == rows.len() {
        nodes.push(Node::Leaf { majority: majority_here });
        return nodes.len() - 1;
    }

    let mut best: Option<(f64, usize, f64)> = None; // (decrease, feature, threshold)
    let mut order: Vec<(f64, u8)> = Vec::with_capacity(rows.len());
    for feature in 0..x.ncols() {
        order.clear();
        for &i in rows {
            order.push((x[(i, feature)], y[i]));
        }
        order.sort_by(|a, b| a.0.total_cmp(&b.0));

        let total = rows.len();
        let mut left_ones = 0usize;
        for t in 0..total - 1 {
            left_ones += usize::from(order[t].1 == 1);
            if order[t].0 == order[t + 1].0 {
                continue; // can't split between equal values
            }
            let left_n = t + 1;
            let right_n = total - left_n;
            let right_ones = ones - left_ones;
            let weighted = (left_n as f64 * gini(left_ones, left_n)
                + right_n as f64 * gini(right_ones, right_n))
                / total as f64;
            let decrease = parent_gini - weighted;
            // Strict improvement; earlier features / smaller thresholds win ties.
            if decrease > 1e-12 && best.map_or(true, |(d, _, _)| decrease > d + 1e-15) {
                let threshold = 0.5 * (order[t].0 + order[t + 1].0);
                best = Some((decrease, feature, threshold));
            }
        }
    }

    match best {
        None => {
            nodes.push(Node::Leaf { majority: majority_here });
            nodes.len() - 1
        }
        Some((_, feature, threshold)) => {
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| x[(i, feature)] <= threshold);
            let left = build(x, y, &left_rows, depth_left - 1, nodes);
            let right = build(x, y, &right_rows, depth_left - 1, nodes);
            nodes.push(Node::Split {
                feature,
                threshold,
                majority: majority_here,
                left,
                right,
            });
            nodes.len() - 1
        }
    }
}

impl CartFit {
    /// Majority votes along the root-to-leaf path, one entry per depth
    /// `0..=max`; shallower grid depths index into this path.
    fn path_votes(&self, row: ndarray::ArrayView1<f64>, max_depth: usize) -> Vec<u8> {
        let mut votes = Vec::with_capacity(max_depth + 1);
        let mut node = self.nodes.len() - 1; // root is pushed last
        loop {
            match &self.nodes[node] {
                Node::Leaf { majority } => {
                    votes.push(*majority);
                    if votes.len() > max_depth {
                        break;
                    }
                }
                Node::Split {
                    feature,
                    threshold,
                    majority,
                    left,
                    right,
                } => {
                    votes.push(*majority);
                    if votes.len() > max_depth {
                        break;
                    }
                    node = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
            if let Node::Leaf { majority } = &self.nodes[node] {
                // Stay at the leaf for all remaining depths.
                while votes.len() <= max_depth {
                    votes.push(*majority);
                }
                break;
            }
        }
        while votes.len() <= max_depth {
            let last = *votes.last().expect("at least the root vote");
            votes.push(last);
        }
        votes
    }
}

impl GridClassifier for CartFit {
    fn predict_grid(&self, x: ArrayView2<f64>) -> Array2<u8> {
        let max_depth = self.depths.iter().copied().max().unwrap_or(1);
        let mut preds = Array2::zeros((x.nrows(), self.depths.len()));
        for (i, row) in x.rows().into_iter().enumerate() {
            let votes = self.path_votes(row, max_depth);
            for (g, &d) in self.depths.iter().enumerate() {
                preds[(i, g)] = votes[d.min(votes.len() - 1)];
            }
        }
        preds
    }

    fn grid_len(&self) -> usize {
        self.depths.len()
    }
}

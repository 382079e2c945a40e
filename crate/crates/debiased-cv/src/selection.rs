//! Minimum-error model selection.

use serde::Serialize;

/// The outcome of selecting the model with minimum criterion value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    /// 0-based index of the selected model.
    pub selected: usize,
    /// The values the argmin was taken over.
    pub criterion_values: Vec<f64>,
}

impl SelectionResult {
    pub fn selected_value(&self) -> f64 {
        self.criterion_values[self.selected]
    }
}

/// Index of the smallest value; ties go to the lowest index so repeated runs
/// select the same model.
pub fn argmin(values: &[f64]) -> usize {
    debug_assert!(!values.is_empty());
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = j;
        }
    }
    best
}

/// Select the model minimizing `values`.
pub fn select_min(values: &[f64]) -> SelectionResult {
    SelectionResult {
        selected: argmin(values),
        criterion_values: values.to_vec(),
    }
}

//! Replication studies: run a scenario many times, compute the nominal and
//! debiased estimates against the ground truth, and aggregate means, standard
//! errors, coverage, and per-replication differences.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::bootstrap::{bootstrap_ci, BootstrapOptions, BootstrapTarget};
use crate::contrast::{contrast_with_folds, nominal_error};
use crate::error::{Error, Result};
use crate::matrix::ErrorMatrix;
use crate::randomized::{randomized_estimate, NoiseConfig};
use crate::rng::{subseed, substream};
use crate::sim::cv::{run_cv, true_err};
use crate::sim::learners::LearnerGrid;
use crate::sim::scenario::{Generated, Scenario};

/// Study knobs; defaults follow the estimators' defaults (K = 2, alpha = 0.1,
/// H = 100, B = 1000 at level 0.90, truth oracle on 1e4 fresh draws).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyOptions {
    pub reps: usize,
    pub seed: u64,
    /// Folds for the contrast correction on sample-splitting matrices; CV
    /// matrices always reuse their own folds.
    pub contrast_folds: usize,
    pub alpha: f64,
    pub draws: usize,
    /// `Some((B, level))` to compute bootstrap intervals and coverage.
    pub bootstrap: Option<(usize, f64)>,
    pub truth_test_size: usize,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            reps: 100,
            seed: 0,
            contrast_folds: 2,
            alpha: 0.1,
            draws: 100,
            bootstrap: None,
            truth_test_size: 10_000,
        }
    }
}

/// Per-estimator values of one replication.
#[derive(Debug, Clone)]
struct Replication {
    a1: f64,
    a2: f64,
    a3: f64,
    err: f64,
    err_random: f64,
    covered_a2: Option<bool>,
    covered_a3: Option<bool>,
    nonconverged: usize,
}

/// Aggregated study output, keeping the raw per-replication values so
/// differences can be exported for plotting.
#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    pub scenario: String,
    pub reps: usize,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub a3: Vec<f64>,
    pub err: Vec<f64>,
    pub err_random: Vec<f64>,
    pub covered_a2: Option<Vec<bool>>,
    pub covered_a3: Option<Vec<bool>>,
    /// Grid fits that hit an iteration cap, across all replications.
    pub nonconverged_fits: usize,
}

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub statistic: String,
    pub mean: f64,
    /// Empty when a single replication makes the standard error undefined.
    pub se: Option<f64>,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard error of the mean: sample sd over sqrt(reps); None for reps < 2.
pub fn standard_error(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n as f64 - 1.0);
    Some((var / n as f64).sqrt())
}

impl StudyReport {
    pub fn mean_a1(&self) -> f64 {
        mean(&self.a1)
    }
    pub fn mean_a2(&self) -> f64 {
        mean(&self.a2)
    }
    pub fn mean_a3(&self) -> f64 {
        mean(&self.a3)
    }
    pub fn mean_err(&self) -> f64 {
        mean(&self.err)
    }
    pub fn mean_err_random(&self) -> f64 {
        mean(&self.err_random)
    }

    pub fn coverage_a2(&self) -> Option<f64> {
        self.covered_a2
            .as_ref()
            .map(|c| c.iter().filter(|&&v| v).count() as f64 / c.len() as f64)
    }

    pub fn coverage_a3(&self) -> Option<f64> {
        self.covered_a3
            .as_ref()
            .map(|c| c.iter().filter(|&&v| v).count() as f64 / c.len() as f64)
    }

    /// Rows of the summary table in canonical order.
    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        let row = |statistic: &str, values: &[f64]| SummaryRow {
            scenario: self.scenario.clone(),
            statistic: statistic.into(),
            mean: mean(values),
            se: standard_error(values),
        };
        let mut rows = vec![
            row("err", &self.err),
            row("err_random", &self.err_random),
            row("a1", &self.a1),
            row("a2", &self.a2),
            row("a3", &self.a3),
        ];
        for (name, covered) in [("coverage_a2", &self.covered_a2), ("coverage_a3", &self.covered_a3)]
        {
            if let Some(c) = covered {
                let indicator: Vec<f64> = c.iter().map(|&v| f64::from(u8::from(v))).collect();
                rows.push(SummaryRow {
                    scenario: self.scenario.clone(),
                    statistic: name.into(),
                    mean: mean(&indicator),
                    se: standard_error(&indicator),
                });
            }
        }
        rows
    }

    /// Summary CSV: `scenario,statistic,mean,se` (se empty when undefined).
    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "scenario,statistic,mean,se")?;
        for row in self.summary_rows() {
            match row.se {
                Some(se) => writeln!(w, "{},{},{},{}", row.scenario, row.statistic, row.mean, se)?,
                None => writeln!(w, "{},{},{},", row.scenario, row.statistic, row.mean)?,
            }
        }
        Ok(())
    }

    /// Long-format per-replication differences against the truth:
    /// `scenario,estimator,replication,value`. A1 and A2 are compared with
    /// the test error under minimum selection, A3 with the randomized rule's.
    pub fn write_differences_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "scenario,estimator,replication,value")?;
        for r in 0..self.reps {
            for (name, value) in [
                ("a1", self.a1[r] - self.err[r]),
                ("a2", self.a2[r] - self.err[r]),
                ("a3", self.a3[r] - self.err_random[r]),
            ] {
                writeln!(w, "{},{},{},{}", self.scenario, name, r + 1, value)?;
            }
        }
        Ok(())
    }
}

/// Run `opts.reps` independent replications of a scenario. Replications run
/// in parallel on per-replication sub-seeds, so reports are reproducible for
/// a given `(scenario, opts)` regardless of thread scheduling.
pub fn run_study(scenario: &Scenario, opts: &StudyOptions) -> Result<StudyReport> {
    scenario.validate()?;
    if opts.reps == 0 {
        return Err(Error::InvalidScenario("a study needs at least 1 replication".into()));
    }

    let outcomes: Vec<Result<Replication>> = (0..opts.reps)
        .into_par_iter()
        .map(|rep| run_replication(scenario, opts, subseed(opts.seed, rep as u64)))
        .collect();

    let mut report = StudyReport {
        scenario: scenario.id(),
        reps: opts.reps,
        a1: Vec::with_capacity(opts.reps),
        a2: Vec::with_capacity(opts.reps),
        a3: Vec::with_capacity(opts.reps),
        err: Vec::with_capacity(opts.reps),
        err_random: Vec::with_capacity(opts.reps),
        covered_a2: opts.bootstrap.map(|_| Vec::with_capacity(opts.reps)),
        covered_a3: opts.bootstrap.map(|_| Vec::with_capacity(opts.reps)),
        nonconverged_fits: 0,
    };
    for outcome in outcomes {
        let r = outcome?;
        report.a1.push(r.a1);
        report.a2.push(r.a2);
        report.a3.push(r.a3);
        report.err.push(r.err);
        report.err_random.push(r.err_random);
        report.nonconverged_fits += r.nonconverged;
        if let (Some(list), Some(v)) = (report.covered_a2.as_mut(), r.covered_a2) {
            list.push(v);
        }
        if let (Some(list), Some(v)) = (report.covered_a3.as_mut(), r.covered_a3) {
            list.push(v);
        }
    }
    Ok(report)
}

fn run_replication(scenario: &Scenario, opts: &StudyOptions, rep_seed: u64) -> Result<Replication> {
    // Independent sub-streams per stage keep stages decoupled.
    let mut gen_rng = substream(rep_seed, 0);

    let (matrix, truth, nonconverged): (ErrorMatrix, Vec<f64>, usize) =
        match scenario.generate(&mut gen_rng)? {
            Generated::Direct { matrix, truth } => (matrix, truth, 0),
            Generated::Learning { dataset } => {
                let family = scenario
                    .learner
                    .ok_or_else(|| Error::InvalidScenario("scenario needs a learner".into()))?;
                let grid = LearnerGrid::build(family, &dataset, scenario.models)?;
                let fit = run_cv(&dataset, &grid, scenario.cv_folds, &mut substream(rep_seed, 1))?;
                let truth = match scenario.analytic_truth() {
                    Some(t) => vec![t; grid.len()],
                    None => true_err(scenario, &fit, opts.truth_test_size, &mut substream(rep_seed, 2))?,
                };
                (fit.matrix, truth, fit.nonconverged)
            }
        };

    let (a1_selection, a1) = nominal_error(&matrix);
    let err = truth[a1_selection.selected];

    let (a2_est, _) = contrast_with_folds(&matrix, opts.contrast_folds, &mut substream(rep_seed, 3))?;

    let mut cfg = NoiseConfig::from_matrix(&matrix);
    cfg.alpha = opts.alpha;
    cfg.draws = opts.draws;
    let a3_est = randomized_estimate(&matrix, &cfg, &mut substream(rep_seed, 4))?;
    let err_random: f64 = a3_est
        .selection_frequencies
        .iter()
        .zip(&truth)
        .map(|(&f, &t)| f * t)
        .sum();

    let (covered_a2, covered_a3) = match opts.bootstrap {
        None => (None, None),
        Some((replicates, level)) => {
            let ci_a2 = bootstrap_ci(
                &matrix,
                BootstrapTarget::Contrast {
                    k: opts.contrast_folds,
                },
                a2_est.estimate,
                &BootstrapOptions {
                    replicates,
                    level,
                    seed: subseed(rep_seed, 5),
                },
            )?;
            let ci_a3 = bootstrap_ci(
                &matrix,
                BootstrapTarget::Randomized {
                    alpha: opts.alpha,
                    draws: opts.draws,
                    sigma0_sq: None,
                },
                a3_est.estimate,
                &BootstrapOptions {
                    replicates,
                    level,
                    seed: subseed(rep_seed, 6),
                },
            )?;
            (
                Some(ci_a2.lower <= err && err <= ci_a2.upper),
                Some(ci_a3.lower <= err_random && err_random <= ci_a3.upper),
            )
        }
    };

    Ok(Replication {
        a1,
        a2: a2_est.estimate,
        a3: a3_est.estimate,
        err,
        err_random,
        covered_a2,
        covered_a3,
        nonconverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scenario::Scenario;

    #[test]
    fn tiny_s0_study_shows_downward_bias_of_the_minimum() {
        let report = run_study(
            &Scenario::s0(),
            &StudyOptions {
                reps: 60,
                seed: 42,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(report.reps, 60);
        assert!(report.err.iter().all(|&e| e == 0.0));
        assert!(report.mean_a1() < -0.1, "mean a1 {}", report.mean_a1());
        assert!(report.mean_a2() > report.mean_a1());
    }

    #[test]
    fn studies_are_reproducible() {
        let opts = StudyOptions {
            reps: 12,
            seed: 7,
            bootstrap: Some((50, 0.9)),
            ..Default::default()
        };
        let a = run_study(&Scenario::s1(), &opts).unwrap();
        let b = run_study(&Scenario::s1(), &opts).unwrap();
        assert_eq!(a.a2, b.a2);
        assert_eq!(a.covered_a2, b.covered_a2);
    }

    #[test]
    fn single_replication_has_no_standard_errors() {
        let report = run_study(
            &Scenario::s0(),
            &StudyOptions {
                reps: 1,
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        for row in report.summary_rows() {
            assert!(row.se.is_none(), "row {} has an SE", row.statistic);
        }
        let mut csv = Vec::new();
        report.write_summary_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.lines().skip(1).all(|l| l.ends_with(',')), "{text}");
    }

    #[test]
    fn zero_replications_is_an_error() {
        let err = run_study(
            &Scenario::s0(),
            &StudyOptions {
                reps: 0,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidScenario(_)));
    }

    #[test]
    fn differences_csv_has_one_row_per_estimator_and_replication() {
        let report = run_study(
            &Scenario::s0(),
            &StudyOptions {
                reps: 5,
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let mut csv = Vec::new();
        report.write_differences_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 1 + 5 * 3);
        assert!(text.starts_with("scenario,estimator,replication,value"));
    }
}

//! Simulation harness: scenario generators, built-in learners, the CV
//! runner, ground-truth oracles, and the replication-study driver.

pub mod cv;
pub mod learners;
pub mod scenario;
pub mod study;

pub use cv::{run_cv, true_err, CvFit};
pub use learners::{LearnerFamily, LearnerGrid};
pub use scenario::{Dataset, Scenario, ScenarioKind};
pub use study::{run_study, StudyOptions, StudyReport};

//! Statistical-query simulation: oracles, direction sets, baseline learners
//! and the distinguishing experiment.

pub mod directions;
pub mod experiment;
pub mod learners;
pub mod oracle;
pub mod query;

pub use directions::{implied_try_budget, max_overlap, near_orthogonal_set, pair_failure_bound, size_guard, DirectionSet};
pub use experiment::{diagnostics, distinguishing_experiment, Diagnostics, ExperimentConfig, ExperimentReport};
pub use learners::{learner_chow, learner_constant, Hypothesis, LearnerKind};
pub use oracle::{
    empirical_means, Adversary, LabeledSource, NullDistribution, Oracle, OracleConfig, OracleMode, RealizableLinear,
    TowardNull,
};
pub use query::SQQuery;

//! Black-box/white-box trade-off optimization: SPSA gradient estimates, a decaying set of
//! critical gradients, Tchebycheff scalarizations, Pareto oracles and benchmark problems.

pub mod harness;
pub mod history;
pub mod objective;
pub mod optimizer;
pub mod pareto;
pub mod problems;
pub mod scalarize;
pub mod spsa;
pub mod vector;

pub use history::{CriticalGradientSet, HistoryConfig, Selection, StatusIndicator};
pub use objective::{
    BlackBoxObjective, EvalBudget, ObjectiveIndex, ObjectivePair, TwoObjectiveProblem,
    WhiteBoxObjective,
};
pub use optimizer::{optimize, Components, OptimizerConfig, Run, StepRecord, Termination};
pub use scalarize::{IdealMode, Scalarization, ScalarizationConfig};
pub use spsa::GainSchedule;
pub use vector::{ParamVector, PerturbationVector, RngHandle};

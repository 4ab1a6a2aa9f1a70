// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod graph;
pub mod linalg;
pub mod quadform;
pub mod selection;
pub mod simulate;

pub use error::{Error, Result};
pub use experiment::{run_experiment, Campaign, ExperimentSpec, TrialRecord};
pub use graph::{laplacian, random_geometric, GeomGraphConfig, SignedGraph};
pub use linalg::{IndexSet, SymMatrix};
pub use quadform::{default_budget, q_value, QuadBudget};
pub use selection::{run_method, Method, MethodParams, Outcome, SelectionResult};
pub use simulate::{consensus_trajectory, verify_rate, Trajectory};

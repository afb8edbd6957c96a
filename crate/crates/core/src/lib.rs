//! Adaptive neural-network solver for initial value problems.
//!
//! The time domain is split into subdomains; on each one a shallow-network
//! trial solution is trained with Adam and accepted once its residual error at
//! held-out points drops below a tolerance.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod export;
pub mod net;
pub mod optimizer;
pub mod problems;
pub mod refine;
pub mod report;
pub mod scnf;
pub mod sweep;

pub use error::{Error, Result};
pub use net::DenseNet1H;
pub use optimizer::{incremental_schedule, train, AdamState, TrainConfig, TrainOutcome};
pub use problems::{by_name, registry, IvpProblem, OdeSystem};
pub use refine::{refine, refine_with, AndreConfig, RefinementOutcome, RunStatus, SubdomainSolver};
pub use report::{run, run_with, RunOptions, RunReport};
pub use scnf::{make_grid, Ansatz, ScnfModel, SubdomainGrid};
pub use sweep::{sweep, SweepParam, SweepRow, SweepTable};

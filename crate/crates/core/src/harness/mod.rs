//! Study orchestration: replicated stability experiments and Monte Carlo
//! references.

mod models;
mod study;

pub use models::{ConstantModel, GridStudy, Ishigami, Model, ModelSpec, SparsePolynomial};
pub use study::{
    evaluate, mcs_oracle, oracle_from_samples, relative_error, replicate_seed, run_study, OracleMoments, ReplicateRecord, StabilityReport,
    StabilityRow, StabilityStudyConfig,
};

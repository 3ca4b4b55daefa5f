//! Input marginals and their orthonormal polynomial families.

mod marginal;
pub mod quadrature;
mod recurrence;

pub use marginal::{JointInput, Marginal};
pub use recurrence::{eval_orthonormal, stieltjes_discrete, stieltjes_recurrence, RecurrenceCoeffs};

/// Recurrences for every marginal of `joint`, up to degree `p_max`.
pub fn joint_recurrences(joint: &JointInput, p_max: usize) -> crate::Result<Vec<RecurrenceCoeffs>> {
    joint.marginals().iter().map(|m| stieltjes_recurrence(m, p_max)).collect()
}

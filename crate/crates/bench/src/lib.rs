//! Shared fixtures for the benchmarks.

use resilpce::design::{mmlhs_design, ExperimentDesign, DEFAULT_CANDIDATES};
use resilpce::harness::{evaluate, Model};

/// A maximin design on the model's inputs together with the model responses.
pub fn training_set(model: &dyn Model, n: usize, seed: u64) -> (ExperimentDesign, Vec<f64>) {
    let design = mmlhs_design(model.input(), n, DEFAULT_CANDIDATES, seed).expect("design");
    let y = evaluate(model, &design.samples).expect("model evaluation");
    (design, y)
}

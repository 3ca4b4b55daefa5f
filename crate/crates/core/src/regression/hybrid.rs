//! Hybrid LARS: LARS selects candidate active sets, each is refit by ordinary
//! least squares and scored by corrected leave-one-out error.

use nalgebra::{DMatrix, DVector};

use crate::basis::{design_matrix_rows, BasisSet};
use crate::distributions::{JointInput, RecurrenceCoeffs};
use crate::error::{Error, Result};

use super::lars::lars_path;
use super::ols::{empirical_error, loo_from_fit, LsFit};
use super::{FitDiagnostics, PceModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridOptions {
    /// Stop at the first active set whose LOO error is at or below this.
    pub target_loo: Option<f64>,
    /// Stop after this many consecutive LOO increases.
    pub patience: usize,
}

impl Default for HybridOptions {
    fn default() -> Self {
        HybridOptions { target_loo: None, patience: 2 }
    }
}

/// Score of one LARS active set.
#[derive(Debug, Clone)]
pub struct PathScore {
    /// Active columns, ascending.
    pub columns: Vec<usize>,
    pub loo_error: f64,
    pub empirical_error: f64,
    /// Training error of the raw LARS coefficients on the same active set.
    pub lars_empirical_error: f64,
    pub coefficients: DVector<f64>,
}

/// Scores every admissible set on the LARS path of `(a, y)`, applying the
/// early-stopping and target rules. Sets that are rank deficient or saturate
/// the leverage are skipped.
pub fn hybrid_path(a: &DMatrix<f64>, y: &DVector<f64>, opts: &HybridOptions) -> Result<Vec<PathScore>> {
    let path = lars_path(a, y)?;
    let mut scores: Vec<PathScore> = Vec::new();
    let mut increases = 0;
    for step in path {
        let mut columns = step.active.clone();
        columns.sort_unstable();
        let sub = a.select_columns(&columns);
        let Ok(fit) = LsFit::new(&sub, y) else { continue };
        let Ok(loo) = loo_from_fit(y, &fit) else { continue };
        let lars_fitted = a * &step.coefficients;
        let score = PathScore {
            loo_error: loo,
            empirical_error: empirical_error(y, &fit.fitted),
            lars_empirical_error: empirical_error(y, &lars_fitted),
            coefficients: fit.coefficients,
            columns,
        };
        let hit_target = opts.target_loo.is_some_and(|t| loo <= t);
        match scores.last() {
            Some(prev) if loo > prev.loo_error => increases += 1,
            _ => increases = 0,
        }
        scores.push(score);
        if hit_target || increases >= opts.patience {
            break;
        }
    }
    Ok(scores)
}

/// Index of the best score: minimal LOO, with differences at round-off level
/// resolved toward the earlier (sparser) set.
pub(crate) fn select_best(scores: &[PathScore], opts: &HybridOptions) -> Option<usize> {
    if let Some(t) = opts.target_loo {
        if let Some(i) = scores.iter().position(|s| s.loo_error <= t) {
            return Some(i);
        }
    }
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if !s.loo_error.is_finite() && best.is_some() {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) => {
                let cur = scores[b].loo_error;
                if s.loo_error < cur - (1e-12 * cur + 1e-15) {
                    best = Some(i);
                }
            }
        }
    }
    best
}

/// Sparse PCE of `y` over the candidate `basis`, evaluated at `samples`.
pub fn hybrid_lars_fit(
    samples: &[Vec<f64>],
    y: &[f64],
    basis: &BasisSet,
    recurrences: &[RecurrenceCoeffs],
    joint: &JointInput,
    opts: &HybridOptions,
) -> Result<PceModel> {
    let n = samples.len();
    if y.len() != n {
        return Err(Error::Shape(format!("{n} samples but {} responses", y.len())));
    }
    if n < 3 {
        return Err(Error::Size { needed: 3, got: n });
    }
    let a = design_matrix_rows(basis, recurrences, samples)?;
    let y = DVector::from_column_slice(y);
    let scores = hybrid_path(&a, &y, opts)?;
    let best = select_best(&scores, opts).ok_or_else(|| Error::FitFailure("every candidate active set is rank deficient".into()))?;
    let chosen = &scores[best];
    let mut coefficients = vec![0.0; basis.len()];
    for (k, &j) in chosen.columns.iter().enumerate() {
        coefficients[j] = chosen.coefficients[k];
    }
    Ok(PceModel {
        basis: basis.clone(),
        coefficients,
        joint: joint.clone(),
        recurrences: recurrences.to_vec(),
        diagnostics: FitDiagnostics {
            loo_error: chosen.loo_error,
            empirical_error: chosen.empirical_error,
            active_set_size: chosen.columns.len(),
            n_samples: n,
        },
        design: None,
    })
}

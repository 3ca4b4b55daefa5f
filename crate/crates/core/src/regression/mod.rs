//! PCE coefficient estimation: least squares, LARS, and hybrid LARS with
//! leave-one-out model selection.

mod hybrid;
mod lars;
mod ols;

use serde::{Deserialize, Serialize};

pub use hybrid::{hybrid_lars_fit, hybrid_path, HybridOptions, PathScore};
pub use lars::{lars_path, LarsStep};
pub use ols::{empirical_error, loo_error, ols_fit, LsFit};

use crate::basis::{eval_multivariate, BasisSet, MultiIndex};
use crate::design::{DesignMethod, ExperimentDesign};
use crate::distributions::{joint_recurrences, JointInput, RecurrenceCoeffs};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub loo_error: f64,
    pub empirical_error: f64,
    pub active_set_size: usize,
    pub n_samples: usize,
}

/// Provenance of the experiment design a model was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignProvenance {
    pub method: DesignMethod,
    pub seed: u64,
    pub n_candidates: Option<usize>,
}

/// A fitted polynomial chaos expansion. Coefficients are aligned with
/// `basis.indices`; terms not selected are exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PceModel {
    pub basis: BasisSet,
    pub coefficients: Vec<f64>,
    pub joint: JointInput,
    pub recurrences: Vec<RecurrenceCoeffs>,
    pub diagnostics: FitDiagnostics,
    #[serde(default)]
    pub design: Option<DesignProvenance>,
}

impl PceModel {
    /// Fits on an experiment design, recording its provenance.
    pub fn fit(design: &ExperimentDesign, y: &[f64], joint: &JointInput, basis: &BasisSet, opts: &HybridOptions) -> Result<Self> {
        let recurrences = joint_recurrences(joint, basis.p)?;
        let mut model = hybrid_lars_fit(&design.samples, y, basis, &recurrences, joint, opts)?;
        model.design = Some(DesignProvenance { method: design.method, seed: design.seed, n_candidates: design.n_candidates });
        Ok(model)
    }

    /// Builds a model from explicit coefficients (e.g. a known expansion).
    pub fn from_coefficients(joint: &JointInput, basis: BasisSet, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(Error::Shape(format!("{} coefficients for {} basis terms", coefficients.len(), basis.len())));
        }
        if basis.dim() != joint.dim() {
            return Err(Error::Shape(format!("basis dimension {} vs input dimension {}", basis.dim(), joint.dim())));
        }
        let recurrences = joint_recurrences(joint, basis.p)?;
        let active = coefficients.iter().filter(|c| **c != 0.0).count().max(1);
        Ok(PceModel {
            basis,
            coefficients,
            joint: joint.clone(),
            recurrences,
            diagnostics: FitDiagnostics { loo_error: 0.0, empirical_error: 0.0, active_set_size: active, n_samples: 0 },
            design: None,
        })
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        let psi = eval_multivariate(&self.basis, &self.recurrences, point)?;
        Ok(psi.iter().zip(&self.coefficients).map(|(p, c)| p * c).sum())
    }

    /// Nonzero terms as `(multi-index, coefficient)`, in basis order.
    pub fn active_terms(&self) -> Vec<(&MultiIndex, f64)> {
        self.basis.indices.iter().zip(&self.coefficients).filter(|(_, c)| **c != 0.0).map(|(a, c)| (a, *c)).collect()
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> Option<f64> {
        self.basis.indices.iter().position(|a| a == alpha).map(|i| self.coefficients[i])
    }
}

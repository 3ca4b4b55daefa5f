//! Orthonormal polynomial families built by the discretized Stieltjes procedure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Marginal;

/// Relative floor on `beta_k` below which the moment functional is treated
/// as indefinite.
const BETA_FLOOR: f64 = 1e-13;

/// Three-term recurrence of an orthonormal family:
///
/// `sqrt(beta[k+1]) psi_{k+1}(x) = (x - alpha[k]) psi_k(x) - sqrt(beta[k]) psi_{k-1}(x)`
///
/// with `psi_0 = 1`, `psi_{-1} = 0` and `beta[0] = 1` (total mass).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceCoeffs {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl RecurrenceCoeffs {
    pub fn p_max(&self) -> usize {
        self.alpha.len() - 1
    }

    /// `psi_k(x)`.
    pub fn eval(&self, k: usize, x: f64) -> Result<f64> {
        if k > self.p_max() {
            return Err(Error::Degree { requested: k, max: self.p_max() });
        }
        let mut out = vec![0.0; k + 1];
        self.eval_all(x, &mut out);
        Ok(out[k])
    }

    /// Fills `out[k] = psi_k(x)` for `k < out.len()`. `out.len()` must not
    /// exceed `p_max + 1`.
    pub fn eval_all(&self, x: f64, out: &mut [f64]) {
        debug_assert!(out.len() <= self.alpha.len());
        let mut prev = 0.0;
        let mut cur = 1.0;
        for k in 0..out.len() {
            out[k] = cur;
            if k + 1 < out.len() {
                let next = ((x - self.alpha[k]) * cur - self.beta[k].sqrt() * prev) / self.beta[k + 1].sqrt();
                prev = cur;
                cur = next;
            }
        }
    }
}

/// `psi_k(x)` for the family described by `rc`.
pub fn eval_orthonormal(rc: &RecurrenceCoeffs, k: usize, x: f64) -> Result<f64> {
    rc.eval(k, x)
}

/// Recurrence coefficients of the polynomials orthonormal w.r.t. `m`, up to
/// degree `p_max`.
///
/// The marginal is replaced by a discrete measure (composite Gauss-Legendre
/// for continuous kinds, the atoms themselves for discrete kinds) and the
/// Stieltjes procedure is run on it, re-orthogonalizing each new polynomial
/// against all previous ones.
pub fn stieltjes_recurrence(m: &Marginal, p_max: usize) -> Result<RecurrenceCoeffs> {
    if let Some(n) = m.n_atoms() {
        if p_max >= n {
            // n atoms support at most n orthonormal polynomials
            return Err(Error::IllConditioned { degree: n });
        }
    }
    let (nodes, weights) = m.discretize(p_max);
    stieltjes_discrete(&nodes, &weights, p_max)
}

/// Stieltjes procedure on the discrete measure `sum_i weights[i] delta(nodes[i])`.
/// Weights must sum to one.
pub fn stieltjes_discrete(nodes: &[f64], weights: &[f64], p_max: usize) -> Result<RecurrenceCoeffs> {
    let n = nodes.len();
    let mean: f64 = nodes.iter().zip(weights).map(|(x, w)| w * x).sum();
    let var: f64 = nodes.iter().zip(weights).map(|(x, w)| w * (x - mean).powi(2)).sum();
    let scale = if var > 0.0 { var } else { 1.0 };

    let mut alpha = Vec::with_capacity(p_max + 1);
    let mut beta = Vec::with_capacity(p_max + 1);
    beta.push(weights.iter().sum::<f64>());

    let mut basis: Vec<Vec<f64>> = vec![vec![1.0; n]];
    let inner = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(weights).map(|((a, b), w)| w * a * b).sum() };

    for k in 0..=p_max {
        let pk = &basis[k];
        let a_k: f64 = nodes.iter().zip(pk).zip(weights).map(|((x, p), w)| w * x * p * p).sum();
        alpha.push(a_k);
        if k == p_max {
            break;
        }
        let sb = beta[k].sqrt();
        let mut q: Vec<f64> = (0..n)
            .map(|i| {
                let prev = if k > 0 { basis[k - 1][i] } else { 0.0 };
                (nodes[i] - a_k) * pk[i] - sb * prev
            })
            .collect();
        for pj in &basis {
            let c = inner(&q, pj);
            q.iter_mut().zip(pj).for_each(|(q, p)| *q -= c * p);
        }
        let b = inner(&q, &q);
        if b.is_nan() || b <= BETA_FLOOR * scale {
            return Err(Error::IllConditioned { degree: k + 1 });
        }
        let sb1 = b.sqrt();
        q.iter_mut().for_each(|v| *v /= sb1);
        beta.push(b);
        basis.push(q);
    }
    Ok(RecurrenceCoeffs { alpha, beta })
}

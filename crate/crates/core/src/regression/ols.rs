//! Least squares by Householder QR, and the corrected leave-one-out error.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold on `|R_ii| / ||a_i||` for numerical rank.
const RANK_TOL: f64 = 1e-10;
const LEVERAGE_CEILING: f64 = 1.0 - 1e-12;

/// A least-squares solve together with the quantities LOO scoring needs.
#[derive(Debug, Clone)]
pub struct LsFit {
    pub coefficients: DVector<f64>,
    pub fitted: DVector<f64>,
    /// Diagonal of the hat matrix `A (A^T A)^{-1} A^T`.
    pub leverages: DVector<f64>,
    /// `tr((A^T A)^{-1})`.
    pub trace_inv_gram: f64,
}

impl LsFit {
    pub fn new(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        let (n, p) = a.shape();
        if y.len() != n {
            return Err(Error::Shape(format!("{n} rows but {} responses", y.len())));
        }
        if p == 0 {
            return Err(Error::Shape("no columns".into()));
        }
        if n < p {
            return Err(Error::Singular { rank: n, cols: p });
        }
        let qr = a.clone().qr();
        let r = qr.r();
        // a column (nearly) in the span of its predecessors leaves a tiny R_ii
        let rank = (0..p).filter(|&i| r[(i, i)].abs() > RANK_TOL * a.column(i).norm()).count();
        if rank < p {
            return Err(Error::Singular { rank, cols: p });
        }
        let q = qr.q();
        let qty = q.transpose() * y;
        let coefficients = r.solve_upper_triangular(&qty).ok_or(Error::Singular { rank, cols: p })?;
        let fitted = a * &coefficients;
        let leverages = DVector::from_iterator(n, q.row_iter().map(|row| row.norm_squared()));
        let r_inv = r.solve_upper_triangular(&DMatrix::identity(p, p)).ok_or(Error::Singular { rank, cols: p })?;
        Ok(LsFit { coefficients, fitted, leverages, trace_inv_gram: r_inv.norm_squared() })
    }
}

/// `argmin_c ||A c - y||^2`.
pub fn ols_fit(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(LsFit::new(a, y)?.coefficients)
}

fn population_variance(y: &DVector<f64>) -> f64 {
    let mean = y.mean();
    y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64
}

fn all_zero(r: &DVector<f64>, scale: f64) -> bool {
    r.iter().all(|v| v.abs() <= 1e-12 * scale.max(1.0))
}

/// Relative training error `mean(r^2) / Var(y)`.
pub fn empirical_error(y: &DVector<f64>, fitted: &DVector<f64>) -> f64 {
    let resid = y - fitted;
    let var = population_variance(y);
    let mse = resid.norm_squared() / y.len() as f64;
    if var > 0.0 {
        mse / var
    } else if all_zero(&resid, y.amax()) {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Corrected relative leave-one-out error of a least-squares fit.
pub fn loo_error(a_active: &DMatrix<f64>, y: &DVector<f64>, coeffs: &DVector<f64>) -> Result<f64> {
    let fit = LsFit::new(a_active, y)?;
    let fitted = a_active * coeffs;
    loo_from_parts(y, &fitted, &fit.leverages, fit.trace_inv_gram, a_active.ncols())
}

pub(crate) fn loo_from_fit(y: &DVector<f64>, fit: &LsFit) -> Result<f64> {
    loo_from_parts(y, &fit.fitted, &fit.leverages, fit.trace_inv_gram, fit.coefficients.len())
}

fn loo_from_parts(y: &DVector<f64>, fitted: &DVector<f64>, leverages: &DVector<f64>, trace_inv_gram: f64, p: usize) -> Result<f64> {
    let n = y.len();
    if let Some((row, &h)) = leverages.iter().enumerate().find(|(_, h)| **h >= LEVERAGE_CEILING) {
        return Err(Error::LeverageSaturation { row, leverage: h });
    }
    if n <= p {
        return Err(Error::LeverageSaturation { row: 0, leverage: 1.0 });
    }
    let resid = y - fitted;
    let var = population_variance(y);
    if var == 0.0 || all_zero(&resid, y.amax()) {
        return Ok(if all_zero(&resid, y.amax()) { 0.0 } else { f64::INFINITY });
    }
    let nf = n as f64;
    let press: f64 = resid.iter().zip(leverages.iter()).map(|(r, h)| (r / (1.0 - h)).powi(2)).sum::<f64>() / nf;
    let correction = nf / (nf - p as f64) * (1.0 + trace_inv_gram);
    Ok(press / var * correction)
}

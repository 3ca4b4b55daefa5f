//! Least-angle regression path (no lasso modification).
//!
//! Column 0 of the design matrix is the intercept: it is excluded from
//! standardization and selection and is present in every emitted active set.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One point of the path: the active columns (intercept first, then in order
/// of entry) and the coefficients reached at the end of that step, in the
/// original column scale.
#[derive(Debug, Clone)]
pub struct LarsStep {
    pub active: Vec<usize>,
    pub coefficients: DVector<f64>,
}

const CORR_TOL: f64 = 1e-11;

pub fn lars_path(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<Vec<LarsStep>> {
    let (n, p) = a.shape();
    if y.len() != n {
        return Err(Error::Shape(format!("{n} rows but {} responses", y.len())));
    }
    if p == 0 || n == 0 {
        return Err(Error::Shape("empty design matrix".into()));
    }
    let c0 = a[(0, 0)];
    if c0 == 0.0 || a.column(0).iter().any(|v| (v - c0).abs() > 1e-12 * c0.abs()) {
        return Err(Error::Shape("column 0 must be a constant intercept column".into()));
    }

    let nf = n as f64;
    let y_mean = y.mean();
    let yc = y.add_scalar(-y_mean);
    let y_norm = yc.norm();

    let means: Vec<f64> = (0..p).map(|j| a.column(j).sum() / nf).collect();
    let mut x = DMatrix::zeros(n, p);
    let mut scale = vec![0.0; p];
    let mut usable = vec![false; p];
    for j in 1..p {
        let col = a.column(j).add_scalar(-means[j]);
        let norm = col.norm();
        if norm > 1e-12 * a.column(j).norm().max(1.0) {
            x.set_column(j, &(col / norm));
            scale[j] = norm;
            usable[j] = true;
        }
    }

    let snapshot = |beta: &DVector<f64>, active: &[usize]| -> LarsStep {
        let mut coef = DVector::zeros(p);
        let mut intercept = y_mean;
        for &j in active {
            coef[j] = beta[j] / scale[j];
            intercept -= coef[j] * means[j];
        }
        coef[0] = intercept / c0;
        let mut set = vec![0];
        set.extend_from_slice(active);
        LarsStep { active: set, coefficients: coef }
    };

    let mut beta = DVector::zeros(p);
    let mut resid = yc.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut signs: Vec<f64> = Vec::new();
    let mut steps = vec![snapshot(&beta, &active)];
    if y_norm == 0.0 {
        return Ok(steps);
    }
    let n_usable = usable.iter().filter(|u| **u).count();
    let max_active = (n - 1).min(n_usable);

    while active.len() < max_active {
        let corr = x.transpose() * &resid;
        let candidate = (1..p).filter(|&j| usable[j] && !active.contains(&j)).fold(None, |best: Option<usize>, j| match best {
            Some(b) if corr[b].abs() >= corr[j].abs() => Some(b),
            _ => Some(j),
        });
        let Some(j_new) = candidate else { break };
        if corr[j_new].abs() <= CORR_TOL * y_norm {
            break;
        }
        active.push(j_new);
        signs.push(corr[j_new].signum());

        let xa = x.select_columns(&active);
        let gram = xa.transpose() * &xa;
        let s = DVector::from_column_slice(&signs);
        let Some(chol) = gram.cholesky() else {
            // collinear with the active set; never eligible again
            active.pop();
            signs.pop();
            usable[j_new] = false;
            continue;
        };
        let w = chol.solve(&s);
        let norm_factor = 1.0 / s.dot(&w).sqrt();
        let wa = w * norm_factor;
        let u = &xa * &wa;
        let c_max = active.iter().map(|&j| corr[j].abs()).fold(0.0, f64::max);

        let mut gamma = c_max / norm_factor;
        if active.len() < max_active {
            let au = x.transpose() * &u;
            for j in 1..p {
                if !usable[j] || active.contains(&j) {
                    continue;
                }
                for cand in [(c_max - corr[j]) / (norm_factor - au[j]), (c_max + corr[j]) / (norm_factor + au[j])] {
                    if cand > 1e-14 * gamma && cand < gamma {
                        gamma = cand;
                    }
                }
            }
        }
        for (k, &j) in active.iter().enumerate() {
            beta[j] += gamma * wa[k];
        }
        resid -= gamma * &u;
        steps.push(snapshot(&beta, &active));
    }
    Ok(steps)
}

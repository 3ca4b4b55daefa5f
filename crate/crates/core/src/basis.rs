//! Truncated multivariate orthonormal bases.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::design::ExperimentDesign;
use crate::distributions::RecurrenceCoeffs;
use crate::error::{Error, Result};

/// Slack on the q-norm bound for fractional `q`.
const QNORM_SLACK: f64 = 1e-12;

/// Per-dimension polynomial degrees of one multivariate basis function.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn zero(m: usize) -> Self {
        MultiIndex(vec![0; m])
    }

    pub fn total_degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|a| *a == 0)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn q_norm(&self, q: f64) -> f64 {
        self.0.iter().map(|&a| (a as f64).powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Ordered candidate basis: zero index first, then by total degree and
/// descending lexicographic order within a degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSet {
    pub indices: Vec<MultiIndex>,
    pub p: usize,
    pub q: f64,
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.indices[0].dim()
    }

    /// Basis restricted to the given positions, keeping their order.
    pub fn subset(&self, positions: &[usize]) -> BasisSet {
        BasisSet { indices: positions.iter().map(|&i| self.indices[i].clone()).collect(), p: self.p, q: self.q }
    }
}

/// All multi-indices of dimension `m` with q-norm at most `p`.
pub fn qnorm_truncation(m: usize, p: usize, q: f64) -> Result<BasisSet> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!("q-norm parameter must lie in (0, 1], got {q}")));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("basis dimension must be at least 1".into()));
    }
    let mut indices = Vec::new();
    let mut current = vec![0; m];
    for degree in 0..=p {
        compositions(degree, 0, &mut current, &mut |alpha| {
            // q <= 1 means q-norm >= total degree, so only the fractional case can reject
            let keep = q == 1.0 || MultiIndex(alpha.to_vec()).q_norm(q) <= p as f64 + QNORM_SLACK;
            if keep {
                indices.push(MultiIndex(alpha.to_vec()));
            }
        });
    }
    Ok(BasisSet { indices, p, q })
}

/// Visits every composition of `remaining` into `slots[pos..]`, largest
/// leading part first.
fn compositions(remaining: usize, pos: usize, slots: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if pos == slots.len() - 1 {
        slots[pos] = remaining;
        visit(slots);
        return;
    }
    for a in (0..=remaining).rev() {
        slots[pos] = a;
        compositions(remaining - a, pos + 1, slots, visit);
    }
    slots[pos] = 0;
}

/// Univariate values `psi_k^{(i)}(x_i)` for `k <= degree`, per dimension.
fn univariate_table(recurrences: &[RecurrenceCoeffs], degree: usize, point: &[f64]) -> Vec<Vec<f64>> {
    recurrences
        .iter()
        .zip(point)
        .map(|(rc, x)| {
            let mut vals = vec![0.0; degree + 1];
            rc.eval_all(*x, &mut vals);
            vals
        })
        .collect()
}

fn check_shapes(bs: &BasisSet, recurrences: &[RecurrenceCoeffs], m: usize) -> Result<usize> {
    if recurrences.len() != bs.dim() || m != bs.dim() {
        return Err(Error::Shape(format!("basis dimension {}, {} recurrences, point dimension {m}", bs.dim(), recurrences.len())));
    }
    let degree = bs.indices.iter().flat_map(|a| a.0.iter().copied()).max().unwrap_or(0);
    if let Some(rc) = recurrences.iter().find(|rc| rc.p_max() < degree) {
        return Err(Error::Degree { requested: degree, max: rc.p_max() });
    }
    Ok(degree)
}

/// Values of every basis function at `point`.
pub fn eval_multivariate(bs: &BasisSet, recurrences: &[RecurrenceCoeffs], point: &[f64]) -> Result<Vec<f64>> {
    let degree = check_shapes(bs, recurrences, point.len())?;
    let table = univariate_table(recurrences, degree, point);
    Ok(bs.indices.iter().map(|alpha| product(&table, alpha)).collect())
}

fn product(table: &[Vec<f64>], alpha: &MultiIndex) -> f64 {
    alpha.0.iter().enumerate().map(|(i, &a)| table[i][a]).product()
}

/// `N_S x |bs|` matrix of basis evaluations at the design's samples.
pub fn design_matrix(bs: &BasisSet, recurrences: &[RecurrenceCoeffs], x: &ExperimentDesign) -> Result<DMatrix<f64>> {
    design_matrix_rows(bs, recurrences, &x.samples)
}

pub fn design_matrix_rows(bs: &BasisSet, recurrences: &[RecurrenceCoeffs], rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let m = rows.first().map(|r| r.len()).unwrap_or(bs.dim());
    let degree = check_shapes(bs, recurrences, m)?;
    let mut a = DMatrix::zeros(rows.len(), bs.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Shape(format!("row {i} has {} entries, expected {m}", row.len())));
        }
        let table = univariate_table(recurrences, degree, row);
        for (j, alpha) in bs.indices.iter().enumerate() {
            a[(i, j)] = product(&table, alpha);
        }
    }
    Ok(a)
}

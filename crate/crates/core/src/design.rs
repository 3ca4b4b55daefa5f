//! Experiment designs: Monte Carlo, Latin hypercube, and maximin Latin
//! hypercube (best of a pool of LHS candidates).

use std::io::{Read, Write};

use rand::distr::Open01;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::JointInput;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub const DEFAULT_CANDIDATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignMethod {
    Mcs,
    Lhs,
    Mmlhs,
}

impl DesignMethod {
    pub fn name(self) -> &'static str {
        match self {
            DesignMethod::Mcs => "mcs",
            DesignMethod::Lhs => "lhs",
            DesignMethod::Mmlhs => "mmlhs",
        }
    }
}

impl std::fmt::Display for DesignMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DesignMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mcs" => Ok(DesignMethod::Mcs),
            "lhs" => Ok(DesignMethod::Lhs),
            "mmlhs" => Ok(DesignMethod::Mmlhs),
            other => Err(Error::InvalidParameter(format!("unknown design method `{other}`"))),
        }
    }
}

/// `N_S x M` sample matrix in physical space, with the matching points in
/// quantile space `[0, 1]^M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDesign {
    pub method: DesignMethod,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_candidates: Option<usize>,
    pub names: Vec<String>,
    pub samples: Vec<Vec<f64>>,
    pub quantiles: Vec<Vec<f64>>,
}

impl ExperimentDesign {
    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::Shape(format!("{} names for {} columns", names.len(), self.dim())));
        }
        self.names = names;
        Ok(self)
    }

    /// CSV with a header row of column names and one row per sample.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_matrix_csv(w, &self.names, &self.samples)
    }

    /// Metadata JSON (method, seed, candidate count, column names, size).
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "method": self.method,
            "seed": self.seed,
            "n_candidates": self.n_candidates,
            "n_samples": self.n_samples(),
            "columns": self.names,
        })
    }
}

pub fn write_matrix_csv<W: Write>(w: W, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header)?;
    for row in rows {
        wr.write_record(row.iter().map(|v| v.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a headed numeric CSV into `(header, rows)`.
pub fn read_matrix_csv<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse { line: i + 2, message: e.to_string() })?;
        if row.len() != header.len() {
            return Err(Error::Parse { line: i + 2, message: format!("expected {} fields, got {}", header.len(), row.len()) });
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn default_names(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("x{i}")).collect()
}

fn to_physical(joint: &JointInput, quantiles: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    quantiles.iter().map(|row| row.iter().enumerate().map(|(j, u)| joint.marginal(j).quantile(*u)).collect()).collect()
}

/// Stratum index of `u` among `n` equiprobable strata.
pub fn stratum_of(u: f64, n: usize) -> usize {
    ((u * n as f64).floor() as usize).min(n - 1)
}

/// `n` independent draws from `joint`.
pub fn mcs_design(joint: &JointInput, n: usize, seed: u64) -> Result<ExperimentDesign> {
    if n == 0 {
        return Err(Error::Size { needed: 1, got: 0 });
    }
    let m = joint.dim();
    let mut rng = stream_rng(seed, 0);
    let quantiles: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.sample(Open01)).collect()).collect();
    Ok(ExperimentDesign {
        method: DesignMethod::Mcs,
        seed,
        n_candidates: None,
        names: default_names(m),
        samples: to_physical(joint, &quantiles)?,
        quantiles,
    })
}

fn lhs_quantiles(n: usize, m: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, stream);
    let mut q = vec![vec![0.0; m]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    #[allow(clippy::needless_range_loop)]
    for j in 0..m {
        strata.shuffle(&mut rng);
        for (i, &k) in strata.iter().enumerate() {
            let jitter: f64 = rng.sample(Open01);
            let mut u = (k as f64 + jitter) / n as f64;
            while stratum_of(u, n) > k {
                u = u.next_down();
            }
            q[i][j] = u;
        }
    }
    q
}

/// Latin hypercube with jittered strata. Equivalent to candidate 0 of the
/// maximin pool for the same seed.
pub fn lhs_design(joint: &JointInput, n: usize, seed: u64) -> Result<ExperimentDesign> {
    lhs_candidate(joint, n, seed, 0)
}

/// Candidate `index` of the maximin LHS pool for `seed`.
pub fn lhs_candidate(joint: &JointInput, n: usize, seed: u64, index: usize) -> Result<ExperimentDesign> {
    if n == 0 {
        return Err(Error::Size { needed: 1, got: 0 });
    }
    let quantiles = lhs_quantiles(n, joint.dim(), seed, index as u64);
    Ok(ExperimentDesign {
        method: DesignMethod::Lhs,
        seed,
        n_candidates: None,
        names: default_names(joint.dim()),
        samples: to_physical(joint, &quantiles)?,
        quantiles,
    })
}

/// Minimum quantile-space distance of every candidate in the pool, in
/// candidate order.
pub fn candidate_min_distances(m: usize, n: usize, n_candidates: usize, seed: u64) -> Vec<f64> {
    (0..n_candidates).into_par_iter().map(|i| min_distance(&lhs_quantiles(n, m, seed, i as u64))).collect()
}

/// Maximin LHS: the candidate with the largest minimum pairwise distance
/// among `n_candidates` LHS designs; ties go to the lowest index.
pub fn mmlhs_design(joint: &JointInput, n: usize, n_candidates: usize, seed: u64) -> Result<ExperimentDesign> {
    if n < 2 {
        return Err(Error::Size { needed: 2, got: n });
    }
    if n_candidates == 0 {
        return Err(Error::InvalidParameter("maximin LHS needs at least one candidate".into()));
    }
    let dmins = candidate_min_distances(joint.dim(), n, n_candidates, seed);
    let mut best = 0;
    for (i, d) in dmins.iter().enumerate() {
        if *d > dmins[best] {
            best = i;
        }
    }
    let mut design = lhs_candidate(joint, n, seed, best)?;
    design.method = DesignMethod::Mmlhs;
    design.n_candidates = Some(n_candidates);
    Ok(design)
}

pub fn build_design(joint: &JointInput, method: DesignMethod, n: usize, n_candidates: usize, seed: u64) -> Result<ExperimentDesign> {
    match method {
        DesignMethod::Mcs => mcs_design(joint, n, seed),
        DesignMethod::Lhs => lhs_design(joint, n, seed),
        DesignMethod::Mmlhs => mmlhs_design(joint, n, n_candidates, seed),
    }
}

/// Minimum Euclidean distance over all unordered pairs of the design's
/// quantile-space points.
pub fn min_pairwise_distance(d: &ExperimentDesign) -> Result<f64> {
    if d.n_samples() < 2 {
        return Err(Error::Size { needed: 2, got: d.n_samples() });
    }
    Ok(min_distance(&d.quantiles))
}

fn min_distance(points: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            best = best.min(d2);
        }
    }
    best.sqrt()
}

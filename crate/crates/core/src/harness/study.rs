//! Replicated design-fit-extract studies and the Monte Carlo oracle.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::qnorm_truncation;
use crate::design::{build_design, mcs_design, DesignMethod, DEFAULT_CANDIDATES};
use crate::error::{Error, Result};
use crate::postproc::{pce_mean, pce_variance, robust_std};
use crate::regression::{HybridOptions, PceModel};
use crate::rng::derive_seed;

use super::models::{Model, ModelSpec};

fn default_methods() -> Vec<DesignMethod> {
    vec![DesignMethod::Lhs, DesignMethod::Mmlhs]
}
fn default_sizes() -> Vec<usize> {
    (20..=100).step_by(10).collect()
}
fn default_replicates() -> usize {
    25
}
fn default_q() -> f64 {
    1.0
}
fn default_candidates() -> usize {
    DEFAULT_CANDIDATES
}
fn default_oracle() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityStudyConfig {
    #[serde(default = "default_methods")]
    pub methods: Vec<DesignMethod>,
    #[serde(default = "default_sizes")]
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub model: ModelSpec,
    #[serde(default)]
    pub seed: u64,
    /// Total degree; the model's default when absent.
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_candidates")]
    pub n_candidates: usize,
    /// Monte Carlo runs for the reference when the model has no analytic moments.
    #[serde(default = "default_oracle")]
    pub oracle_samples: usize,
}

impl StabilityStudyConfig {
    pub fn new(model: ModelSpec) -> Self {
        StabilityStudyConfig {
            methods: default_methods(),
            sample_sizes: default_sizes(),
            replicates: default_replicates(),
            model,
            seed: 0,
            p: None,
            q: default_q(),
            n_candidates: default_candidates(),
            oracle_samples: default_oracle(),
        }
    }

    pub fn degree(&self) -> usize {
        self.p.unwrap_or_else(|| self.model.default_degree())
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("at least one design method is required".into()));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.iter().any(|&n| n < 2) {
            return Err(Error::InvalidParameter("sample sizes must be non-empty and at least 2".into()));
        }
        if self.replicates < 2 {
            return Err(Error::InvalidParameter("at least 2 replicates are required".into()));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidParameter(format!("q must lie in (0, 1], got {}", self.q)));
        }
        if self.n_candidates == 0 {
            return Err(Error::InvalidParameter("candidate count must be positive".into()));
        }
        if self.oracle_samples < 2 {
            return Err(Error::InvalidParameter("oracle needs at least 2 samples".into()));
        }
        Ok(())
    }
}

/// Plain Monte Carlo moments of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleMoments {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
    /// Scaled median absolute deviation.
    pub robust_std: f64,
    pub mean_se: f64,
    pub std_se: f64,
    /// Spread of the robust estimate across 20 equal batches, scaled to the
    /// full sample; absent below 40 samples.
    pub robust_std_se: Option<f64>,
}

const ORACLE_BATCHES: usize = 20;

fn mean_and_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Evaluates `model` at every row, in parallel, preserving order.
pub fn evaluate(model: &dyn Model, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    rows.par_iter().map(|x| model.eval(x)).collect()
}

pub fn oracle_from_samples(y: &[f64]) -> Result<OracleMoments> {
    let n = y.len();
    if n < 2 {
        return Err(Error::Size { needed: 2, got: n });
    }
    let (mean, std) = mean_and_std(y);
    let robust = robust_std(y, true)?;
    let robust_std_se = if n >= 2 * ORACLE_BATCHES {
        let len = n / ORACLE_BATCHES;
        let batch: Vec<f64> = y.chunks_exact(len).take(ORACLE_BATCHES).map(|c| robust_std(c, true)).collect::<Result<_>>()?;
        Some(mean_and_std(&batch).1 / (ORACLE_BATCHES as f64).sqrt())
    } else {
        None
    };
    Ok(OracleMoments {
        n,
        mean,
        std,
        robust_std: robust,
        mean_se: std / (n as f64).sqrt(),
        std_se: std / (2.0 * (n as f64 - 1.0)).sqrt(),
        robust_std_se,
    })
}

/// Monte Carlo reference moments from `n` independent model runs.
pub fn mcs_oracle(model: &dyn Model, n: usize, seed: u64) -> Result<OracleMoments> {
    if n < 2 {
        return Err(Error::Size { needed: 2, got: n });
    }
    let design = mcs_design(model.input(), n, seed)?;
    oracle_from_samples(&evaluate(model, &design.samples)?)
}

/// Outcome of one design-fit-extract replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub method: DesignMethod,
    pub n_samples: usize,
    pub replicate: usize,
    pub seed: u64,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub loo_error: Option<f64>,
    pub active_set_size: Option<usize>,
    pub error: Option<String>,
}

/// Aggregate over the replicates of one (method, size) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub method: DesignMethod,
    pub n_samples: usize,
    pub successes: usize,
    pub failures: usize,
    pub mean_of_means: f64,
    pub std_of_means: f64,
    pub mean_of_stds: f64,
    pub std_of_stds: f64,
    pub std_of_variances: f64,
    pub ref_mean: f64,
    pub ref_std: f64,
    pub err_mean: f64,
    pub err_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub model: String,
    pub reference_source: String,
    pub ref_mean: f64,
    pub ref_std: f64,
    pub rows: Vec<StabilityRow>,
    pub replicates: Vec<ReplicateRecord>,
}

/// Relative error against a reference, or absolute error when the reference is zero.
pub fn relative_error(estimate: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        (estimate - reference).abs()
    } else {
        (estimate - reference).abs() / reference.abs()
    }
}

impl StabilityReport {
    pub fn row(&self, method: DesignMethod, n: usize) -> Option<&StabilityRow> {
        self.rows.iter().find(|r| r.method == method && r.n_samples == n)
    }

    pub fn total_failures(&self) -> usize {
        self.rows.iter().map(|r| r.failures).sum()
    }

    pub fn write_aggregate_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for row in &self.rows {
            wr.serialize(row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_replicates_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for rec in &self.replicates {
            wr.serialize(rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Seed of one replicate. It does not depend on the design method, so every
/// method sees the same replicate streams.
pub fn replicate_seed(master: u64, n: usize, replicate: usize) -> u64 {
    derive_seed(&[master, n as u64, replicate as u64])
}

fn run_replicate(cfg: &StabilityStudyConfig, model: &dyn Model, method: DesignMethod, n: usize, r: usize) -> ReplicateRecord {
    let seed = replicate_seed(cfg.seed, n, r);
    let fit = || -> Result<PceModel> {
        let joint = model.input();
        let design = build_design(joint, method, n, cfg.n_candidates, seed)?;
        let y = evaluate(model, &design.samples)?;
        let basis = qnorm_truncation(joint.dim(), cfg.degree(), cfg.q)?;
        PceModel::fit(&design, &y, joint, &basis, &HybridOptions::default())
    };
    let mut rec = ReplicateRecord {
        method,
        n_samples: n,
        replicate: r,
        seed,
        mean: None,
        std: None,
        loo_error: None,
        active_set_size: None,
        error: None,
    };
    match fit() {
        Ok(m) => {
            rec.mean = Some(pce_mean(&m));
            rec.std = Some(pce_variance(&m).sqrt());
            rec.loo_error = Some(m.diagnostics.loo_error);
            rec.active_set_size = Some(m.diagnostics.active_set_size);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Runs every (method, size, replicate) combination and aggregates the
/// moment estimates. Failed fits are recorded and left out of aggregates.
pub fn run_study(cfg: &StabilityStudyConfig, model: &dyn Model) -> Result<StabilityReport> {
    cfg.validate()?;
    let (ref_mean, ref_std, source) = match model.analytic_moments() {
        Some((m, s)) => (m, s, "analytic".to_string()),
        None => {
            let o = mcs_oracle(model, cfg.oracle_samples, derive_seed(&[cfg.seed, u64::MAX]))?;
            (o.mean, o.std, format!("mcs:{}", o.n))
        }
    };
    let jobs: Vec<(DesignMethod, usize, usize)> =
        cfg.methods.iter().flat_map(|&m| cfg.sample_sizes.iter().flat_map(move |&n| (0..cfg.replicates).map(move |r| (m, n, r)))).collect();
    let replicates: Vec<ReplicateRecord> = jobs.par_iter().map(|&(m, n, r)| run_replicate(cfg, model, m, n, r)).collect();

    let rows = replicates
        .chunks(cfg.replicates)
        .map(|cell| {
            let means: Vec<f64> = cell.iter().filter_map(|r| r.mean).collect();
            let stds: Vec<f64> = cell.iter().filter_map(|r| r.std).collect();
            let vars: Vec<f64> = stds.iter().map(|s| s * s).collect();
            let (mean_of_means, std_of_means) = if means.is_empty() { (f64::NAN, f64::NAN) } else { mean_and_std(&means) };
            let (mean_of_stds, std_of_stds) = if stds.is_empty() { (f64::NAN, f64::NAN) } else { mean_and_std(&stds) };
            let std_of_variances = if vars.is_empty() { f64::NAN } else { mean_and_std(&vars).1 };
            StabilityRow {
                method: cell[0].method,
                n_samples: cell[0].n_samples,
                successes: means.len(),
                failures: cell.len() - means.len(),
                mean_of_means,
                std_of_means,
                mean_of_stds,
                std_of_stds,
                std_of_variances,
                ref_mean,
                ref_std,
                err_mean: relative_error(mean_of_means, ref_mean),
                err_std: relative_error(mean_of_stds, ref_std),
            }
        })
        .collect();

    Ok(StabilityReport { model: model.name().to_string(), reference_source: source, ref_mean, ref_std, rows, replicates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{JointInput, Marginal};
    use crate::harness::{ConstantModel, Ishigami, SparsePolynomial};

    struct Identity(JointInput);

    impl Model for Identity {
        fn name(&self) -> &str {
            "identity"
        }
        fn input(&self) -> &JointInput {
            &self.0
        }
        fn eval(&self, x: &[f64]) -> Result<f64> {
            Ok(x[0])
        }
    }

    fn small(model: ModelSpec) -> StabilityStudyConfig {
        StabilityStudyConfig { sample_sizes: vec![20, 40], replicates: 2, p: Some(2), ..StabilityStudyConfig::new(model) }
    }

    #[test]
    fn constant_model_zero_spread() {
        let model = ConstantModel::new(5.0, 2).unwrap();
        let report = run_study(&small(ModelSpec::Constant { value: 5.0, dim: 2 }), &model).unwrap();
        assert_eq!(report.rows.len(), 4);
        for row in &report.rows {
            assert_eq!(row.failures, 0);
            assert!((row.mean_of_means - 5.0).abs() < 1e-12);
            assert!(row.std_of_means < 1e-12);
            assert_eq!(row.mean_of_stds, 0.0);
            assert_eq!(row.err_std, 0.0);
        }
        assert!(report.replicates.iter().all(|r| (r.mean.unwrap() - 5.0).abs() < 1e-12));
    }

    #[test]
    fn quadratic_recovered_in_every_replicate() {
        let model = SparsePolynomial::standard();
        let basis_len = qnorm_truncation(4, 3, 1.0).unwrap().len();
        let cfg = StabilityStudyConfig {
            sample_sizes: vec![3 * basis_len],
            replicates: 3,
            p: Some(3),
            ..StabilityStudyConfig::new(ModelSpec::SparsePolynomial)
        };
        let report = run_study(&cfg, &model).unwrap();
        for row in &report.rows {
            assert_eq!(row.failures, 0);
            assert!(row.std_of_means < 1e-6);
            assert!(row.err_mean < 1e-8 && row.err_std < 1e-8);
        }
    }

    #[test]
    fn reproducible() {
        let model = Ishigami::default();
        let cfg = small(ModelSpec::Ishigami { a: 7.0, b: 0.1 });
        let a = run_study(&cfg, &model).unwrap();
        let b = run_study(&cfg, &model).unwrap();
        assert_eq!(a, b);
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        a.write_aggregate_csv(&mut buf_a).unwrap();
        b.write_aggregate_csv(&mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
        assert!(String::from_utf8(buf_a).unwrap().starts_with("method,n_samples,successes,failures,mean_of_means"));
    }

    #[test]
    fn failures_are_counted() {
        // Two samples cannot support a fit; every replicate fails.
        let model = Ishigami::default();
        let cfg = StabilityStudyConfig {
            sample_sizes: vec![2],
            replicates: 2,
            methods: vec![DesignMethod::Lhs],
            ..StabilityStudyConfig::new(ModelSpec::Ishigami { a: 7.0, b: 0.1 })
        };
        let report = run_study(&cfg, &model).unwrap();
        assert_eq!(report.total_failures(), 2);
        assert!(report.replicates.iter().all(|r| r.error.is_some()));
        assert!(report.rows[0].mean_of_means.is_nan());
    }

    #[test]
    fn config_validation() {
        let mut cfg = small(ModelSpec::Ishigami { a: 7.0, b: 0.1 });
        cfg.replicates = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = small(ModelSpec::Ishigami { a: 7.0, b: 0.1 });
        cfg.sample_sizes = vec![1];
        assert!(cfg.validate().is_err());
        let json = r#"{"model": {"kind": "ishigami"}, "seed": 3}"#;
        let cfg: StabilityStudyConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.replicates, 25);
        assert_eq!(cfg.sample_sizes, (20..=100).step_by(10).collect::<Vec<_>>());
    }

    #[test]
    fn oracle_constant() {
        let o = mcs_oracle(&ConstantModel::new(3.0, 1).unwrap(), 100, 1).unwrap();
        assert_eq!(o.mean, 3.0);
        assert_eq!(o.std, 0.0);
        assert_eq!(o.robust_std, 0.0);
        assert!(mcs_oracle(&ConstantModel::new(3.0, 1).unwrap(), 1, 1).is_err());
    }

    #[test]
    fn oracle_uniform_identity() {
        let m = Identity(JointInput::iid(Marginal::uniform(0.0, 1.0).unwrap(), 1).unwrap());
        let o = mcs_oracle(&m, 100_000, 2).unwrap();
        assert!((o.mean - 0.5).abs() < 0.003);
        assert!((o.std - (1.0f64 / 12.0).sqrt()).abs() < 0.003);
        assert!((o.mean_se - (1.0f64 / 12.0 / 1e5).sqrt()).abs() < 1e-4);
        assert!(o.robust_std_se.unwrap() > 0.0);
    }

    #[test]
    fn ishigami_high_degree_fit() {
        let model = Ishigami::default();
        let design = build_design(model.input(), DesignMethod::Mmlhs, 300, DEFAULT_CANDIDATES, 17).unwrap();
        let y = evaluate(&model, &design.samples).unwrap();
        let basis = qnorm_truncation(3, 9, 1.0).unwrap();
        let pce = PceModel::fit(&design, &y, model.input(), &basis, &HybridOptions::default()).unwrap();
        assert!(pce.diagnostics.loo_error < 0.01, "{:?}", pce.diagnostics);
        let check = mcs_design(model.input(), 2000, 99).unwrap();
        let truth = evaluate(&model, &check.samples).unwrap();
        let sse: f64 = check.samples.iter().zip(&truth).map(|(x, t)| (pce.eval(x).unwrap() - t).powi(2)).sum();
        let rel = sse / truth.len() as f64 / model.variance();
        assert!(rel < 0.02, "{rel}");
    }

    #[test]
    fn std_spread_shrinks_with_size() {
        let model = Ishigami::default();
        let cfg = StabilityStudyConfig {
            sample_sizes: vec![20, 100],
            replicates: 10,
            methods: vec![DesignMethod::Lhs],
            ..StabilityStudyConfig::new(ModelSpec::Ishigami { a: 7.0, b: 0.1 })
        };
        let report = run_study(&cfg, &model).unwrap();
        let small = report.row(DesignMethod::Lhs, 20).unwrap();
        let large = report.row(DesignMethod::Lhs, 100).unwrap();
        assert!(large.std_of_means <= small.std_of_means);
        assert!(large.std_of_stds <= small.std_of_stds);
    }
}

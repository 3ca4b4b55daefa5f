//! Subcommand implementations.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use resilpce::basis::qnorm_truncation;
use resilpce::design::{build_design, read_matrix_csv, DesignMethod};
use resilpce::distributions::joint_recurrences;
use resilpce::grid::simulate_event;
use resilpce::harness::{run_study, GridStudy, Model, ModelSpec};
use resilpce::postproc::{surrogate_sample, write_samples_csv, MomentReport};
use resilpce::regression::{hybrid_lars_fit, DesignProvenance, HybridOptions, PceModel};

use crate::config::{read_json, StudyConfig};
use crate::error::{CliError, CliResult};

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
    }
    let f = File::create(path).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_csv(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let f = File::open(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    read_matrix_csv(f).map_err(|e| CliError::from(e).context(path.display()))
}

fn column_names(model: &dyn Model) -> Vec<String> {
    (1..=model.input().dim()).map(|i| format!("x{i}")).collect()
}

fn grid_names(g: &GridStudy) -> Vec<String> {
    g.weather.exposed_branches.iter().map(|k| format!("tau_{}", g.case.branch_label(*k).replace('-', "_"))).collect()
}

fn names_for(cfg: &StudyConfig, model: &dyn Model) -> CliResult<Vec<String>> {
    match cfg.model {
        ModelSpec::Grid => Ok(grid_names(&cfg.grid_study()?)),
        _ => Ok(column_names(model)),
    }
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Sampling method: mcs, lhs or mmlhs.
    #[arg(long)]
    pub method: Option<DesignMethod>,
    /// Number of samples.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: Option<u64>,
    /// Design CSV path; metadata is written next to it with a .json extension.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn design(cfg: &StudyConfig, args: &DesignArgs) -> CliResult<()> {
    let model = cfg.build_model()?;
    let joint = model.input();
    let method = args.method.unwrap_or(cfg.method);
    let n = args.n.map(|n| n as usize).or(cfg.n_samples).unwrap_or(10 * joint.dim());
    if method == DesignMethod::Mmlhs && n < 2 {
        return Err(CliError::usage("maximin designs need at least 2 samples"));
    }
    let design = build_design(joint, method, n, cfg.n_candidates, cfg.seed)?.with_names(names_for(cfg, model.as_ref())?)?;
    let out = args.output.clone().unwrap_or_else(|| cfg.output_dir.join("design.csv"));
    let mut w = create(&out)?;
    design.write_csv(&mut w)?;
    w.flush()?;
    write_json(&out.with_extension("json"), &design.metadata())?;
    eprintln!("wrote {} ({} x {})", out.display(), design.n_samples(), design.dim());
    Ok(())
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Experiment design CSV.
    #[arg(long)]
    pub design: PathBuf,
    /// Model outputs CSV, row-aligned with the design.
    #[arg(long)]
    pub outputs: PathBuf,
    /// Output column to fit; defaults to the only column or `phi_ls`.
    #[arg(long)]
    pub column: Option<String>,
    /// Stop at the first active set with LOO error at or below this value.
    #[arg(long)]
    pub target_loo: Option<f64>,
    /// Model JSON path.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn pick_column(header: &[String], wanted: Option<&str>, path: &Path) -> CliResult<usize> {
    let find = |name: &str| header.iter().position(|h| h == name);
    match wanted {
        Some(name) => find(name).ok_or_else(|| CliError::input(format!("{}: no column `{name}`", path.display()))),
        None if header.len() == 1 => Ok(0),
        None => find("phi_ls").ok_or_else(|| CliError::usage(format!("{}: several columns; choose one with --column", path.display()))),
    }
}

pub fn fit(cfg: &StudyConfig, args: &FitArgs) -> CliResult<()> {
    let model = cfg.build_model()?;
    let joint = model.input();
    let (names, samples) = read_csv(&args.design)?;
    if names.len() != joint.dim() {
        return Err(CliError::input(format!("design has {} columns but the model has {} inputs", names.len(), joint.dim())));
    }
    let (header, rows) = read_csv(&args.outputs)?;
    let col = pick_column(&header, args.column.as_deref(), &args.outputs)?;
    let y: Vec<f64> = rows.iter().map(|r| r[col]).collect();
    if y.len() != samples.len() {
        return Err(CliError::input(format!("design has {} rows but outputs have {}", samples.len(), y.len())));
    }
    if let Some(t) = args.target_loo.filter(|t| t.is_nan() || *t < 0.0) {
        return Err(CliError::usage(format!("target LOO must be non-negative, got {t}")));
    }
    let p = cfg.degree();
    let basis = qnorm_truncation(joint.dim(), p, cfg.q)?;
    let recurrences = joint_recurrences(joint, p)?;
    let opts = HybridOptions { target_loo: args.target_loo, ..HybridOptions::default() };
    let mut pce = hybrid_lars_fit(&samples, &y, &basis, &recurrences, joint, &opts)?;
    let meta_path = args.design.with_extension("json");
    if meta_path.is_file() {
        let meta: serde_json::Value = read_json(&meta_path)?;
        if let (Some(method), Some(seed)) = (meta.get("method"), meta.get("seed").and_then(|s| s.as_u64())) {
            let method: DesignMethod = serde_json::from_value(method.clone())?;
            let n_candidates = meta.get("n_candidates").and_then(|v| v.as_u64()).map(|v| v as usize);
            pce.design = Some(DesignProvenance { method, seed, n_candidates });
        }
    }
    let out = args.output.clone().unwrap_or_else(|| cfg.output_dir.join("model.json"));
    write_json(&out, &pce)?;
    println!("{}", serde_json::to_string(&pce.diagnostics)?);
    Ok(())
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    /// Fitted PCE model JSON.
    #[arg(long)]
    pub pce: PathBuf,
    /// Surrogate samples to draw for the output distribution.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub samples: Option<u64>,
    /// Raw model outputs for an empirical comparison.
    #[arg(long)]
    pub mcs: Option<PathBuf>,
    #[arg(long)]
    pub column: Option<String>,
}

#[derive(Serialize)]
struct MomentsOutput {
    pce: MomentReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    surrogate: Option<MomentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mcs: Option<MomentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    err_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    err_std: Option<f64>,
}

pub fn moments(cfg: &StudyConfig, args: &MomentsArgs) -> CliResult<()> {
    let pce: PceModel = read_json(&args.pce)?;
    let analytic = MomentReport::from_pce(&pce);
    let mut out = MomentsOutput { pce: analytic.clone(), surrogate: None, mcs: None, err_mean: None, err_std: None };
    if let Some(n) = args.samples {
        let s = surrogate_sample(&pce, n as usize, cfg.seed)?;
        let mut w = create(&cfg.output_dir.join("surrogate.csv"))?;
        write_samples_csv(&mut w, "y", &s)?;
        w.flush()?;
        out.surrogate = Some(MomentReport::from_samples(&s, cfg.mad_scale)?);
    }
    if let Some(path) = &args.mcs {
        let (header, rows) = read_csv(path)?;
        let col = pick_column(&header, args.column.as_deref(), path)?;
        let y: Vec<f64> = rows.iter().map(|r| r[col]).collect();
        let mcs = MomentReport::from_samples(&y, cfg.mad_scale)?;
        out.err_mean = Some(resilpce::harness::relative_error(analytic.mean, mcs.mean));
        out.err_std = Some(resilpce::harness::relative_error(analytic.std, mcs.std));
        out.mcs = Some(mcs);
    }
    write_json(&cfg.output_dir.join("moments.json"), &out)?;

    let mut w = csv::Writer::from_writer(create(&cfg.output_dir.join("moments.csv"))?);
    w.write_record(["estimate", "mean", "std", "three_sigma_lower"])?;
    let rows = [("pce", Some(&out.pce)), ("surrogate", out.surrogate.as_ref()), ("mcs", out.mcs.as_ref())];
    for (label, r) in rows.iter().filter_map(|(l, r)| r.map(|r| (l, r))) {
        w.write_record([label.to_string(), r.mean.to_string(), r.std.to_string(), r.three_sigma_lower.to_string()])?;
    }
    w.flush()?;
    println!("{}", serde_json::to_string(&out)?);
    Ok(())
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Failure times, one column per exposed branch.
    #[arg(long)]
    pub tau: PathBuf,
}

pub fn simulate(cfg: &StudyConfig, args: &SimulateArgs) -> CliResult<()> {
    use rayon::prelude::*;

    let study = cfg.grid_study()?;
    let (header, rows) = read_csv(&args.tau)?;
    if header.len() != study.weather.n_exposed() {
        return Err(CliError::input(format!("{} failure-time columns for {} exposed branches", header.len(), study.weather.n_exposed())));
    }
    let outcomes = rows.par_iter().map(|tau| simulate_event(&study.case, tau, &study.weather)).collect::<resilpce::Result<Vec<_>>>()?;

    let mut summary = csv::Writer::from_writer(create(&cfg.output_dir.join("outcomes.csv"))?);
    summary.write_record(["row", "phi_ls", "load_served_initial", "load_served_final", "n_tripped"])?;
    let mut traces = csv::Writer::from_writer(create(&cfg.output_dir.join("traces.csv"))?);
    traces.write_record(["row", "hour", "load_served", "tripped"])?;
    for (i, out) in outcomes.iter().enumerate() {
        let last = out.load_served.len() - 1;
        summary.write_record([
            i.to_string(),
            out.phi_ls.to_string(),
            out.load_served[0].to_string(),
            out.load_served[last].to_string(),
            out.n_tripped().to_string(),
        ])?;
        for (t, (p, trips)) in out.load_served.iter().zip(&out.tripped).enumerate() {
            let labels: Vec<String> = trips.iter().map(|c| c.to_string()).collect();
            traces.write_record([i.to_string(), t.to_string(), p.to_string(), labels.join(";")])?;
        }
    }
    summary.flush()?;
    traces.flush()?;
    eprintln!("simulated {} events", outcomes.len());
    Ok(())
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Comma-separated design methods.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<DesignMethod>>,
    /// Comma-separated experiment sizes.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Monte Carlo runs for the reference moments.
    #[arg(long)]
    pub oracle_samples: Option<usize>,
}

pub fn stability(cfg: &StudyConfig, args: &StabilityArgs) -> CliResult<()> {
    let mut study = cfg.stability_config();
    if let Some(m) = &args.methods {
        study.methods.clone_from(m);
    }
    if let Some(s) = &args.sizes {
        study.sample_sizes.clone_from(s);
    }
    if let Some(r) = args.replicates {
        study.replicates = r;
    }
    if let Some(n) = args.oracle_samples {
        study.oracle_samples = n;
    }
    study.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let model = cfg.build_model()?;
    let report = run_study(&study, model.as_ref())?;

    let mut w = create(&cfg.output_dir.join("aggregate.csv"))?;
    report.write_aggregate_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&cfg.output_dir.join("replicates.csv"))?;
    report.write_replicates_csv(&mut w)?;
    w.flush()?;
    write_json(&cfg.output_dir.join("stability.json"), &report)?;
    eprintln!("{} cells, {} failed fits", report.rows.len(), report.total_failures());
    Ok(())
}

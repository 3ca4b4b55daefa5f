//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resilpce::basis::qnorm_truncation;
use resilpce::design::{build_design, lhs_candidate, mcs_design, min_pairwise_distance, mmlhs_design, DesignMethod, DEFAULT_CANDIDATES};
use resilpce::distributions::quadrature::composite_gauss_legendre;
use resilpce::distributions::{stieltjes_recurrence, JointInput, Marginal, RecurrenceCoeffs};
use resilpce::grid::{parse_case, CASE39};
use resilpce::harness::{evaluate, mcs_oracle, run_study, GridStudy, Ishigami, Model, ModelSpec, SparsePolynomial, StabilityStudyConfig};
use resilpce::postproc::{pce_mean, pce_variance, robust_std, surrogate_sample};
use resilpce::regression::{HybridOptions, PceModel};
use resilpce::rng::derive_seed;
use resilpce::Error;

type Outcome = Result<String, String>;

/// Name, check and time budget.
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fmt_err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// Gram matrix of the orthonormal family against (nodes, weights).
fn gram_deviation(rc: &RecurrenceCoeffs, p: usize, nodes: &[f64], weights: &[f64]) -> f64 {
    let mut g = vec![vec![0.0; p + 1]; p + 1];
    let mut psi = vec![0.0; rc.p_max() + 1];
    for (x, w) in nodes.iter().zip(weights) {
        rc.eval_all(*x, &mut psi);
        for i in 0..=p {
            for j in 0..=p {
                g[i][j] += w * psi[i] * psi[j];
            }
        }
    }
    let mut worst: f64 = 0.0;
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}

fn orthonormality() -> Outcome {
    let mut worst_cont: f64 = 0.0;
    // Reference quadrature: 48-point Gauss-Legendre panels, independent of the
    // discretization used to build the recurrences.
    for (lo, hi) in [(-1.0, 1.0), (2.0, 5.0), (-PI, PI)] {
        let m = Marginal::uniform(lo, hi).map_err(fmt_err)?;
        let rc = stieltjes_recurrence(&m, 10).map_err(fmt_err)?;
        let (x, w) = composite_gauss_legendre(lo, hi, 4, 48);
        let w: Vec<f64> = w.iter().map(|v| v / (hi - lo)).collect();
        worst_cont = worst_cont.max(gram_deviation(&rc, 10, &x, &w));
    }
    for (mu, sigma) in [(0.0, 1.0), (3.0, 2.0), (-1.0, 0.1)] {
        let m = Marginal::gaussian(mu, sigma).map_err(fmt_err)?;
        let rc = stieltjes_recurrence(&m, 10).map_err(fmt_err)?;
        let (x, w) = composite_gauss_legendre(mu - 14.0 * sigma, mu + 14.0 * sigma, 56, 48);
        let pdf = |t: f64| (-(t - mu).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt());
        let w: Vec<f64> = x.iter().zip(&w).map(|(t, v)| v * pdf(*t)).collect();
        worst_cont = worst_cont.max(gram_deviation(&rc, 10, &x, &w));
    }
    let hours: Vec<u32> = (1..=24).collect();
    let probs: Vec<f64> = (1..=24).map(|h| 1.0 + (h as f64 * 0.7).sin().abs() + 0.05 * h as f64).collect();
    let total: f64 = probs.iter().sum();
    let m = Marginal::discrete_hourly(hours.clone(), probs.clone()).map_err(fmt_err)?;
    let rc = stieltjes_recurrence(&m, 8).map_err(fmt_err)?;
    let x: Vec<f64> = hours.iter().map(|&h| h as f64).collect();
    let w: Vec<f64> = probs.iter().map(|p| p / total).collect();
    let worst_disc = gram_deviation(&rc, 8, &x, &w);
    check(worst_cont <= 1e-8, || format!("continuous max |G - I| = {worst_cont:.2e} > 1e-8"))?;
    check(worst_disc <= 1e-6, || format!("discrete max |G - I| = {worst_disc:.2e} > 1e-6"))?;
    Ok(format!("continuous max |G - I| = {worst_cont:.2e}, 24-atom discrete = {worst_disc:.2e}"))
}

fn exact_recovery() -> Outcome {
    let truth = SparsePolynomial::standard();
    let joint = truth.input();
    let design = mmlhs_design(joint, 60, DEFAULT_CANDIDATES, 0).map_err(fmt_err)?;
    let y = evaluate(&truth, &design.samples).map_err(fmt_err)?;
    let basis = qnorm_truncation(4, 3, 1.0).map_err(fmt_err)?;
    let fit = PceModel::fit(&design, &y, joint, &basis, &HybridOptions::default()).map_err(fmt_err)?;
    let mut worst: f64 = 0.0;
    for (alpha, c) in truth.terms() {
        let got = fit.coefficient(alpha).ok_or_else(|| format!("term {alpha} missing from basis"))?;
        worst = worst.max((got - c).abs() / c.abs());
    }
    let (mean, std) = truth.analytic_moments().expect("analytic");
    let mean_err = (pce_mean(&fit) - mean).abs() / mean.abs();
    let var_err = (pce_variance(&fit) - std * std).abs() / (std * std);
    check(worst <= 1e-8, || format!("coefficient relative error {worst:.2e} > 1e-8"))?;
    check(mean_err <= 1e-8 && var_err <= 1e-8, || format!("moment errors {mean_err:.2e}, {var_err:.2e}"))?;
    Ok(format!(
        "6 terms, max coef rel err {worst:.1e}, mean err {mean_err:.1e}, var err {var_err:.1e}, active {}",
        fit.diagnostics.active_set_size
    ))
}

fn ishigami() -> Outcome {
    let model = Ishigami::default();
    let (a, b) = (model.a, model.b);
    let mean_ref = a / 2.0;
    let var_ref = a * a / 8.0 + b * PI.powi(4) / 5.0 + b * b * PI.powi(8) / 18.0 + 0.5;

    // Monte Carlo confirmation of the analytic reference.
    let mc = mcs_design(model.input(), 1_000_000, 123).map_err(fmt_err)?;
    let ys = evaluate(&model, &mc.samples).map_err(fmt_err)?;
    let n = ys.len() as f64;
    let mc_mean = ys.iter().sum::<f64>() / n;
    let mc_var = ys.iter().map(|v| (v - mc_mean).powi(2)).sum::<f64>() / (n - 1.0);
    check((mc_mean - mean_ref).abs() < 4.0 * (var_ref / n).sqrt(), || format!("MC mean {mc_mean} disagrees with {mean_ref}"))?;
    check((mc_var / var_ref - 1.0).abs() < 0.01, || format!("MC variance {mc_var} disagrees with {var_ref}"))?;

    let design = mmlhs_design(model.input(), 300, DEFAULT_CANDIDATES, 0).map_err(fmt_err)?;
    let y = evaluate(&model, &design.samples).map_err(fmt_err)?;
    let basis = qnorm_truncation(3, 9, 1.0).map_err(fmt_err)?;
    let fit = PceModel::fit(&design, &y, model.input(), &basis, &HybridOptions::default()).map_err(fmt_err)?;
    let mean_err = (pce_mean(&fit) - mean_ref).abs() / mean_ref;
    let var_err = (pce_variance(&fit) - var_ref).abs() / var_ref;
    check(mean_err <= 0.01, || format!("mean error {:.3}% > 1%", 100.0 * mean_err))?;
    check(var_err <= 0.02, || format!("variance error {:.3}% > 2%", 100.0 * var_err))?;
    Ok(format!(
        "mean err {:.3}%, variance err {:.3}%, LOO {:.2e}, {} of {} terms; 1e6-run MC confirms reference",
        100.0 * mean_err,
        100.0 * var_err,
        fit.diagnostics.loo_error,
        fit.diagnostics.active_set_size,
        basis.len()
    ))
}

fn stability() -> Outcome {
    let model = Ishigami::default();
    let cfg = StabilityStudyConfig::new(ModelSpec::Ishigami { a: 7.0, b: 0.1 });
    let report = run_study(&cfg, &model).map_err(fmt_err)?;
    let sizes = &cfg.sample_sizes;
    let metric = |m: DesignMethod, n: usize, f: fn(&resilpce::harness::StabilityRow) -> f64| report.row(m, n).map(f).unwrap_or(f64::NAN);
    let spread = |m: DesignMethod, n: usize| metric(m, n, |r| r.std_of_variances);
    let std_spread = |m: DesignMethod, n: usize| metric(m, n, |r| r.std_of_stds);
    let wins = sizes.iter().filter(|&&n| spread(DesignMethod::Mmlhs, n) <= spread(DesignMethod::Lhs, n)).count();
    let std_wins = sizes.iter().filter(|&&n| std_spread(DesignMethod::Mmlhs, n) <= std_spread(DesignMethod::Lhs, n)).count();
    let needed = (0.6 * sizes.len() as f64).ceil() as usize;
    let (first, last) = (sizes[0], *sizes.last().unwrap());
    let shrink = [DesignMethod::Lhs, DesignMethod::Mmlhs].iter().all(|&m| spread(m, last) < spread(m, first));
    let series: Vec<String> =
        sizes.iter().map(|&n| format!("{n}:{:.2}/{:.2}", spread(DesignMethod::Lhs, n), spread(DesignMethod::Mmlhs, n))).collect();
    let detail = format!(
        "MmLHS variance spread <= LHS at {wins}/{} sizes (need {needed}); shrinks {first}->{last}: {shrink}; failed fits {}; LHS/MmLHS std-of-variances {}; std-of-stds wins {std_wins}/{}",
        sizes.len(),
        report.total_failures(),
        series.join(" "),
        sizes.len()
    );
    if wins >= needed && shrink {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_marginal(rng: &mut ChaCha8Rng) -> Marginal {
    match rng.random_range(0..3) {
        0 => {
            let lo = rng.random_range(-5.0..5.0);
            Marginal::uniform(lo, lo + rng.random_range(0.1..4.0)).unwrap()
        }
        1 => Marginal::gaussian(rng.random_range(-3.0..3.0), rng.random_range(0.1..3.0)).unwrap(),
        _ => {
            let k = rng.random_range(2..26);
            let probs = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
            Marginal::discrete_hourly((1..=k as u32).collect(), probs).unwrap()
        }
    }
}

fn mmlhs_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..50 {
        let m = rng.random_range(1..=6);
        let joint = JointInput::new((0..m).map(|_| random_marginal(&mut rng)).collect()).map_err(fmt_err)?;
        let n = rng.random_range(2..=40);
        let nc = rng.random_range(1..=60);
        let seed: u64 = rng.random();
        let chosen = mmlhs_design(&joint, n, nc, seed).map_err(fmt_err)?;
        let got = min_pairwise_distance(&chosen).map_err(fmt_err)?;
        let mut best = f64::NEG_INFINITY;
        for i in 0..nc {
            let cand = lhs_candidate(&joint, n, seed, i).map_err(fmt_err)?;
            best = best.max(min_pairwise_distance(&cand).map_err(fmt_err)?);
        }
        check(got.to_bits() == best.to_bits(), || format!("trial {trial}: d_min {got} but pool maximum {best}"))?;
    }
    Ok("50/50 triples: selected d_min equals the regenerated pool maximum bit for bit".into())
}

fn grid_end_to_end() -> Outcome {
    let study = GridStudy::default_study();
    let m = study.input().dim();
    let n = 10 * m;
    let p = ModelSpec::Grid.default_degree();
    let seed = 0;
    let oracle = mcs_oracle(&study, 10_000, derive_seed(&[seed, u64::MAX])).map_err(fmt_err)?;
    let fit_at = |s: u64| -> Result<(f64, f64, f64), String> {
        let design = build_design(study.input(), DesignMethod::Mmlhs, n, DEFAULT_CANDIDATES, s).map_err(fmt_err)?;
        let y = evaluate(&study, &design.samples).map_err(fmt_err)?;
        let basis = qnorm_truncation(m, p, 1.0).map_err(fmt_err)?;
        let fit = PceModel::fit(&design, &y, study.input(), &basis, &HybridOptions::default()).map_err(fmt_err)?;
        let sur = surrogate_sample(&fit, 100_000, s).map_err(fmt_err)?;
        Ok((pce_mean(&fit), pce_variance(&fit).sqrt(), robust_std(&sur, true).map_err(fmt_err)?))
    };
    let (mean, std, sur_robust) = fit_at(seed)?;
    let err_mean = (mean - oracle.mean).abs() / oracle.mean.abs();
    let err_std = (std - oracle.robust_std).abs() / oracle.robust_std;
    let mut others = Vec::new();
    for s in 1..=2 {
        let (mu, sd, _) = fit_at(s)?;
        others.push(format!(
            "seed {s}: {:.1}%/{:.1}%",
            100.0 * (mu - oracle.mean).abs() / oracle.mean.abs(),
            100.0 * (sd - oracle.robust_std).abs() / oracle.robust_std
        ));
    }
    let detail = format!(
        "M={m}, N_S={n}, p={p}: PCE mean {mean:.2} vs MCS {:.2} (Err {:.2}%), PCE std {std:.2} vs MCS robust std {:.2} (Err {:.2}%); surrogate robust std {sur_robust:.2}; other design seeds {}",
        oracle.mean,
        100.0 * err_mean,
        oracle.robust_std,
        100.0 * err_std,
        others.join(", ")
    );
    if err_mean <= 0.10 && err_std <= 0.10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
        }
    }
    out
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_resilpce")).current_dir(dir).args(args).output().map_err(fmt_err)?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("`{}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn determinism() -> Outcome {
    let pipeline: Vec<Vec<&str>> = vec![
        vec!["design", "--method", "mmlhs", "--n", "30", "--seed", "7", "--output-dir", "out"],
        vec!["simulate", "--tau", "out/design.csv", "--output-dir", "out"],
        vec!["fit", "--design", "out/design.csv", "--outputs", "out/outcomes.csv", "--output-dir", "out"],
        vec!["moments", "--pce", "out/model.json", "--samples", "5000", "--mcs", "out/outcomes.csv", "--output-dir", "out"],
        vec!["stability", "--model", "ishigami", "--sizes", "20,40", "--replicates", "4", "--output-dir", "stab"],
        vec!["design", "--model", "ishigami", "--method", "lhs", "--n", "12", "--seed", "3", "--output-dir", "lhs"],
    ];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(fmt_err)?;
        // Files each step reads later, captured right after they are produced.
        let produced =
            [("design", "out/design.csv"), ("design", "out/design.json"), ("simulate", "out/outcomes.csv"), ("fit", "out/model.json")];
        let mut inputs = BTreeMap::new();
        for args in &pipeline {
            run_cli(dir.path(), args)?;
            for (cmd, file) in produced {
                if cmd == args[0] && !inputs.contains_key(file) {
                    inputs.insert(file, std::fs::read(dir.path().join(file)).map_err(fmt_err)?);
                }
            }
        }
        for (file, before) in &inputs {
            check(std::fs::read(dir.path().join(file)).map_err(fmt_err)? == *before, || format!("input file {file} was modified"))?;
        }
        let mut files = BTreeMap::new();
        for sub in ["out", "stab", "lhs"] {
            for (k, v) in snapshot(&dir.path().join(sub)) {
                files.insert(Path::new(sub).join(k), v);
            }
        }
        runs.push(files);
    }
    check(runs[0].keys().eq(runs[1].keys()), || "different output file sets".into())?;
    for (k, v) in &runs[0] {
        check(runs[1][k] == *v, || format!("{} differs between runs", k.display()))?;
    }
    Ok(format!("5 commands, {} output files byte-identical across reruns; inputs untouched", runs[0].len()))
}

/// Counts table rows by scanning the text directly.
fn count_rows(text: &str, table: &str) -> usize {
    let mut inside = false;
    let mut n = 0;
    for line in text.lines() {
        let t = line.trim();
        if t.starts_with(&format!("mpc.{table} = [")) {
            inside = true;
        } else if inside && t.starts_with("];") {
            inside = false;
        } else if inside && !t.is_empty() && !t.starts_with('%') {
            n += 1;
        }
    }
    n
}

fn line_of(text: &str, needle: &str) -> usize {
    text.lines().position(|l| l.contains(needle)).map(|i| i + 1).unwrap_or_else(|| panic!("`{needle}` not in case"))
}

fn replace_line(text: &str, line: usize, f: impl Fn(&str) -> String) -> String {
    text.lines().enumerate().map(|(i, l)| if i + 1 == line { f(l) } else { l.to_string() } + "\n").collect()
}

fn parser() -> Outcome {
    let case = parse_case(CASE39).map_err(fmt_err)?;
    let counts = (case.buses.len(), case.branches.len(), case.generators.len());
    let independent = (count_rows(CASE39, "bus"), count_rows(CASE39, "branch"), count_rows(CASE39, "gen"));
    check(counts == (39, 46, 10) && counts == independent, || format!("counts {counts:?}, independent {independent:?}"))?;

    let text = CASE39;
    let bus3 = line_of(text, "\t3\t1\t322\t");
    let bus7 = line_of(text, "\t7\t1\t233.8\t");
    let gen31 = line_of(text, "\t31\t677.871\t");
    let gen35 = line_of(text, "\t35\t650\t");
    let br_1_39 = line_of(text, "\t1\t39\t0.001\t");
    let br_2_3 = line_of(text, "\t2\t3\t0.0013\t");
    let br_4_5 = line_of(text, "\t4\t5\t0.0008\t");
    let base = line_of(text, "mpc.baseMVA");
    let branch_start = line_of(text, "mpc.branch = [");
    let bus_end = line_of(text, "mpc.gen = [") - 1;
    let bus_close = (1..=bus_end).rev().find(|&l| text.lines().nth(l - 1).unwrap().trim() == "];").unwrap();
    let branch_close = text.lines().enumerate().skip(branch_start).find(|(_, l)| l.trim() == "];").map(|(i, _)| i + 1).unwrap();

    let variants: Vec<(&str, String, usize)> = vec![
        ("non-numeric bus field", replace_line(text, bus3, |l| l.replacen("322", "3x2", 1)), bus3),
        ("dangling branch endpoint", replace_line(text, br_1_39, |l| l.replacen("\t39\t", "\t99\t", 1)), br_1_39),
        ("zero reactance", replace_line(text, br_2_3, |l| l.replacen("0.0151", "0", 1)), br_2_3),
        ("duplicate bus number", replace_line(text, bus7, |l| l.replacen("\t7\t", "\t3\t", 1)), bus7),
        ("short generator row", replace_line(text, gen31, |l| l.split('\t').take(6).collect::<Vec<_>>().join("\t") + ";"), gen31),
        ("unknown bus type", replace_line(text, bus7, |l| l.replacen("\t7\t1\t", "\t7\t9\t", 1)), bus7),
        ("unterminated branch table", replace_line(text, branch_close, |_| String::new()), branch_start),
        ("negative rating", replace_line(text, br_4_5, |l| l.replacen("\t600\t", "\t-600\t", 1)), br_4_5),
        ("generator on missing bus", replace_line(text, gen35, |l| l.replacen("\t35\t", "\t135\t", 1)), gen35),
        ("text after table end", replace_line(text, bus_close, |_| "]; junk".into()), bus_close),
        ("invalid baseMVA", replace_line(text, base, |_| "mpc.baseMVA = abc;".into()), base),
    ];
    let mut ok = 0;
    for (name, bad, want) in &variants {
        match parse_case(bad) {
            Err(Error::Parse { line, .. }) if line == *want => ok += 1,
            Err(Error::Parse { line, message }) => return Err(format!("{name}: reported line {line} ({message}), expected {want}")),
            other => return Err(format!("{name}: expected a parse error, got {other:?}")),
        }
    }
    Ok(format!(
        "39 buses, 46 branches, 10 generators (matches line count); {ok}/{} malformed variants rejected at the right line",
        variants.len()
    ))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("orthonormality", orthonormality, Duration::from_secs(5)),
        ("exact recovery", exact_recovery, Duration::from_secs(5)),
        ("Ishigami benchmark", ishigami, Duration::from_secs(60)),
        ("stability replication", stability, Duration::from_secs(15 * 60)),
        ("MmLHS optimality", mmlhs_optimality, Duration::from_secs(60 * 60)),
        ("grid end-to-end", grid_end_to_end, Duration::from_secs(30 * 60)),
        ("CLI determinism", determinism, Duration::from_secs(60 * 60)),
        ("case parser", parser, Duration::from_secs(60 * 60)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(d) if elapsed > *budget => Err(format!("{d}; exceeded time budget {budget:?}")),
            other => other,
        };
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{}] {name} ({:.2}s): {detail}", i + 1, elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

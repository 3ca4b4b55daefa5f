use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use resilpce::basis::qnorm_truncation;
use resilpce::design::{lhs_design, mmlhs_design};
use resilpce::distributions::{stieltjes_recurrence, Marginal};
use resilpce::harness::{GridStudy, Ishigami, Model};
use resilpce::regression::{HybridOptions, PceModel};
use resilpce_bench::training_set;

fn recurrences(c: &mut Criterion) {
    let mut group = c.benchmark_group("recurrence");
    let gaussian = Marginal::gaussian(0.0, 1.0).unwrap();
    let hourly = Marginal::discrete_hourly((1..=24).collect(), vec![1.0; 24]).unwrap();
    for p in [3, 6, 10] {
        group.bench_with_input(BenchmarkId::new("gaussian", p), &p, |b, &p| b.iter(|| stieltjes_recurrence(&gaussian, p).unwrap()));
        group.bench_with_input(BenchmarkId::new("hourly", p), &p, |b, &p| b.iter(|| stieltjes_recurrence(&hourly, p).unwrap()));
    }
    group.finish();
}

fn designs(c: &mut Criterion) {
    let study = GridStudy::default_study();
    let joint = study.input();
    let mut group = c.benchmark_group("design");
    group.sample_size(20);
    group.bench_function("lhs_150", |b| b.iter(|| lhs_design(joint, 150, 0).unwrap()));
    group.bench_function("mmlhs_150", |b| b.iter(|| mmlhs_design(joint, 150, 100, 0).unwrap()));
    group.finish();
}

fn fitting(c: &mut Criterion) {
    let model = Ishigami::default();
    let mut group = c.benchmark_group("hybrid_lars");
    group.sample_size(10);
    for (n, p) in [(100, 5), (300, 9)] {
        let (design, y) = training_set(&model, n, 0);
        let basis = qnorm_truncation(3, p, 1.0).unwrap();
        group.bench_function(format!("ishigami_n{n}_p{p}"), |b| {
            b.iter(|| PceModel::fit(&design, &y, model.input(), &basis, &HybridOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, recurrences, designs, fitting);
criterion_main!(benches);

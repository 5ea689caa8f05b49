use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use monodromy_core::continuation::{monodromy_numeric, PathPlan};
use monodromy_core::fixtures::{integer_poles, random_fuchsian_system, random_local_system, rng};
use monodromy_core::normal_form::normal_form;
use monodromy_core::param::{ParamPoint, ParamRational};
use monodromy_core::rationality::{detect_rational_in_x, DetectOptions, SampledFunction};
use monodromy_core::rh::matrix_log_tracked;
use monodromy_core::{CMatrix, Complex64};

fn recurrence(c: &mut Criterion) {
    let f = random_local_system(&mut rng(1), 3, 4);
    let t = ParamPoint::real(&[0.1]);
    c.bench_function("normal_form n=3 N=20", |b| {
        b.iter(|| normal_form(black_box(&f), &t, 20).unwrap())
    });
}

fn transport(c: &mut Criterion) {
    let sys = random_fuchsian_system(&mut rng(2), 2, integer_poles(3), 0.3);
    let ns = sys.at(&ParamPoint::real(&[0.0])).unwrap();
    let plan = PathPlan::default_for(&ns);
    let mut g = c.benchmark_group("monodromy 2x2 three poles");
    g.sample_size(20);
    for tol in [1e-9, 1e-12] {
        g.bench_function(format!("tol {tol:e}"), |b| {
            b.iter(|| monodromy_numeric(black_box(&ns), &plan, tol).unwrap())
        });
    }
    g.finish();
}

fn matrix_log(c: &mut Criterion) {
    let a = CMatrix::from_fn(4, 4, |i, j| Complex64::new(0.1 * (i as f64 - j as f64), 0.05 * (i + j) as f64));
    let m = monodromy_core::linalg::expm(&a);
    c.bench_function("matrix_log_tracked 4x4", |b| {
        b.iter_batched(|| m.clone(), |m| matrix_log_tracked(&m, None).unwrap(), BatchSize::SmallInput)
    });
}

fn detection(c: &mut Criterion) {
    // (t x + 1) / (x - t)
    let t = ParamRational::var(0);
    let one = ParamRational::real(1.0);
    let f = SampledFunction::rational(vec![one.clone(), t.clone()], vec![-&t, one], 0.2);
    let grid = [ParamPoint::real(&[0.3]), ParamPoint::real(&[0.45])];
    let opts = DetectOptions { m_max: 4, ..DetectOptions::default() };
    let mut g = c.benchmark_group("detect_rational_in_x");
    g.sample_size(20);
    g.bench_function("mobius", |b| b.iter(|| detect_rational_in_x(black_box(&f), &grid, &opts).unwrap()));
    g.finish();
}

criterion_group!(benches, recurrence, transport, matrix_log, detection);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use aosnet::build_model;
use aosnet::forecast::fit_gmm;
use aosnet::schedulers::build_scheduler;
use aosnet::simulator::run_with;
use aosnet::solvers::{solve_exact, SolveOptions};
use aosnet_bench::{environment, snapshot};

fn greedy_episode(c: &mut Criterion) {
    let mut group = c.benchmark_group("greedy_episode");
    for requests in [1, 3, 5, 7, 9] {
        let env = environment(requests, 1);
        group.bench_with_input(BenchmarkId::from_parameter(requests), &env, |b, env| {
            b.iter(|| {
                let mut p = build_scheduler("greedy", env).unwrap();
                black_box(run_with(env, p.as_mut()).unwrap())
            })
        });
    }
    group.finish();
}

fn exact_window(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_window");
    group.sample_size(10);
    let env = environment(3, 1);
    for slots in [1, 2, 4] {
        let snap = snapshot(&env, slots);
        let model = build_model(&snap).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(slots), &slots, |b, _| {
            b.iter(|| black_box(solve_exact(&model, &snap, &SolveOptions::default()).unwrap()))
        });
    }
    group.finish();
}

fn rhcop_episode(c: &mut Criterion) {
    let mut group = c.benchmark_group("rhcop_episode");
    group.sample_size(10);
    let env = environment(3, 1);
    group.bench_function("defaults", |b| {
        b.iter(|| {
            let mut p = build_scheduler("rhcop", &env).unwrap();
            black_box(run_with(&env, p.as_mut()).unwrap())
        })
    });
    group.finish();
}

fn em_fit(c: &mut Criterion) {
    let env = environment(3, 1);
    let samples = env.training_arrivals[0].clone();
    c.bench_function("em_fit_500x4", |b| b.iter(|| black_box(fit_gmm(&samples, 4, 200, 1e-6).unwrap())));
}

criterion_group!(benches, greedy_episode, exact_window, rhcop_episode, em_fit);
criterion_main!(benches);

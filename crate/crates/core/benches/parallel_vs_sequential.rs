use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spectral_vi::par::Executor;
use spectral_vi::theorems::instances::{random_forcing, random_obstacle, unit_interval};
use spectral_vi::theorems::{check_operator_theorems, CheckConfig};
use spectral_vi::vi_solver::{solve_active_set_enum_with, Obstacle, ObstacleProblem};
use spectral_vi::{NavierOperator, SpdOperator};

fn executors() -> [(&'static str, Executor); 2] {
    [("sequential", Executor::sequential()), ("parallel", Executor::default())]
}

fn enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("active_set_enum");
    group.sample_size(10);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in [10, 14] {
        let op = NavierOperator::new(unit_interval(m).unwrap(), 0.5).unwrap();
        let obstacle = Obstacle::Lower(random_obstacle(&mut rng, op.mask()));
        let f = random_forcing(&mut rng, op.mask(), 5.0);
        let problem = ObstacleProblem::new(&op, &obstacle, &f).unwrap();
        for (name, exec) in executors() {
            group.bench_with_input(BenchmarkId::new(name, m), &problem, |b, p| {
                b.iter(|| solve_active_set_enum_with(p, &exec).unwrap())
            });
        }
    }
    group.finish();
}

fn operator_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("operator_suite");
    group.sample_size(10);
    for (name, exec) in executors() {
        let config = CheckConfig { exec, ..CheckConfig::new(5, vec![31], vec![0.25, 0.5, 0.75]) };
        group.bench_function(name, |b| b.iter(|| check_operator_theorems(&config).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, enumeration, operator_suite);
criterion_main!(benches);

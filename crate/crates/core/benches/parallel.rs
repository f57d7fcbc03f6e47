//! Parallel vs sequential throughput on the three data-parallel hot spots:
//! per-student aggregation, per-component least-squares solves, and
//! randomized axiom trials.
//!
//! Run with `cargo bench` (the `parallel` feature is required and on by
//! default). Each pair shares one input, so the two lines are directly
//! comparable.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prefrank::axiomlab::{check_axiom_random, check_axiom_random_sequential, Axiom, TrialConfig};
use prefrank::graphcore::{components, derive, RankingProblem};
use prefrank::prefmodel::{
    aggregate, aggregate_sequential, AggregateOptions, Granularity, ObjectKey, ObjectUniverse,
    StudentPreferenceList, WeightingScheme,
};
use prefrank::scoring::{least_squares, least_squares_sequential, Method, SolveOptions};
use prefrank::Value;

fn synthetic_lists(students: usize, objects: usize, seed: u64) -> Vec<StudentPreferenceList> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys: Vec<ObjectKey> = (0..objects)
        .map(|i| ObjectKey::new(Granularity::Faculty, format!("F{i:03}")))
        .collect();
    (0..students)
        .map(|s| {
            let len = rng.gen_range(2..=7);
            let mut picked: Vec<usize> = Vec::with_capacity(len);
            while picked.len() < len {
                let k = rng.gen_range(0..objects);
                if !picked.contains(&k) {
                    picked.push(k);
                }
            }
            StudentPreferenceList::new(
                format!("s{s}"),
                picked.into_iter().map(|k| keys[k].clone()).collect(),
            )
        })
        .collect()
}

fn bench_aggregate(c: &mut Criterion) {
    let mut group = c.benchmark_group("aggregate");
    let scheme: WeightingScheme = "w".parse().unwrap();
    let opts = AggregateOptions::default();
    for &students in &[2_000usize, 20_000] {
        let lists = synthetic_lists(students, 200, 1);
        let universe = ObjectUniverse::from_lists(lists.iter());
        group.bench_with_input(
            BenchmarkId::new("parallel", students),
            &lists,
            |b, lists| {
                b.iter(|| aggregate(lists, scheme, &universe, &opts).unwrap());
            },
        );
        group.bench_with_input(
            BenchmarkId::new("sequential", students),
            &lists,
            |b, lists| {
                b.iter(|| aggregate_sequential(lists, scheme, &universe, &opts).unwrap());
            },
        );
    }
    group.finish();
}

/// Block-diagonal instance: many medium components, one direct solve each.
fn block_problem(blocks: usize, block_size: usize, seed: u64) -> RankingProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = blocks * block_size;
    let objects: Vec<ObjectKey> = (0..n)
        .map(|i| ObjectKey::new(Granularity::Faculty, format!("B{i:04}")))
        .collect();
    let mut triplets = Vec::new();
    for b in 0..blocks {
        let base = b * block_size;
        for i in 0..block_size - 1 {
            triplets.push((
                base + i,
                base + i + 1,
                Value::from_int(rng.gen_range(1..=20)),
            ));
        }
        for _ in 0..block_size * 3 {
            let i = base + rng.gen_range(0..block_size);
            let j = base + rng.gen_range(0..block_size);
            if i != j {
                triplets.push((i, j, Value::from_int(rng.gen_range(1..=20))));
            }
        }
    }
    RankingProblem::from_triplets(objects, triplets).unwrap()
}

fn bench_least_squares(c: &mut Criterion) {
    let mut group = c.benchmark_group("least_squares");
    let problem = block_problem(24, 50, 2);
    let derived = derive(&problem);
    let partition = components(&derived);
    let opts = SolveOptions::default();
    group.bench_function("parallel", |b| {
        b.iter(|| least_squares(&derived, &partition, &opts).unwrap());
    });
    group.bench_function("sequential", |b| {
        b.iter(|| least_squares_sequential(&derived, &partition, &opts).unwrap());
    });
    group.finish();
}

fn bench_axiom_trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("axiom_trials");
    group.sample_size(10);
    let config = TrialConfig {
        trials: 64,
        seed: 3,
        ..TrialConfig::default()
    };
    group.bench_function("parallel", |b| {
        b.iter(|| {
            check_axiom_random(Axiom::BridgeSetIndependence, Method::LeastSquares, &config).unwrap()
        });
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            check_axiom_random_sequential(
                Axiom::BridgeSetIndependence,
                Method::LeastSquares,
                &config,
            )
            .unwrap()
        });
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_aggregate,
    bench_least_squares,
    bench_axiom_trials
);
criterion_main!(benches);

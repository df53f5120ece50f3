use cgtc_core::{Algorithm, CostTable, SimConfig, Simulation};
use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn shapley(c: &mut Criterion) {
    let mut group = c.benchmark_group("shapley");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [3usize, 5, 8] {
        let mut costs: Vec<f64> = (0..1usize << n).map(|_| rng.gen_range(0.0..1.0)).collect();
        costs[0] = 0.0;
        let table = CostTable::from_costs(costs).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &table, |b, t| {
            b.iter(|| black_box(t.shapley()))
        });
    }
    group.finish();
}

fn rounds(c: &mut Criterion) {
    let mut group = c.benchmark_group("round");
    for (name, cfg) in [
        ("scenario1", SimConfig::scenario1()),
        ("scenario2", SimConfig::scenario2()),
    ] {
        for alg in Algorithm::ALL {
            group.bench_function(BenchmarkId::new(alg.name(), name), |b| {
                b.iter_batched(
                    || Simulation::new(&cfg, alg, Some(0.05), 7).unwrap(),
                    |mut sim| black_box(sim.step().unwrap()),
                    BatchSize::SmallInput,
                )
            });
        }
    }
    group.finish();
}

criterion_group!(benches, shapley, rounds);
criterion_main!(benches);

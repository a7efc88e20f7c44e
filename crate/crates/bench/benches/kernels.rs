use std::time::Duration;

use criterion::{black_box, criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use pda_bench::{compact_env, developed_field, uniform_batch};
use pda_core::dsft::{extract_windows, DatasetMeta, TrajectoryDataset, WindowSpec};
use pda_core::nn::DenseNet;
use pda_core::policy::gaussian_noise;

fn lattice(c: &mut Criterion) {
    let env = compact_env();
    let field = developed_field(&env, 50);
    let mut group = c.benchmark_group("lattice");
    group.bench_function("substep_128x64", |b| {
        b.iter_batched_ref(
            || field.clone(),
            |f| env.lattice().substep(f, [0.001, -0.001]).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.bench_function("control_step_128x64", |b| {
        b.iter_batched_ref(
            || env.reset(Some(&field)).unwrap(),
            |s| env.step(s, [0.002, -0.002]).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

fn networks(c: &mut Criterion) {
    let mut group = c.benchmark_group("dense");
    let x = uniform_batch(256, 98, 1);
    let y = uniform_batch(256, 64, 2);
    for hidden in [vec![], vec![128], vec![64, 64]] {
        let net = DenseNet::new(98, &hidden, 64, 0);
        let id = format!("{hidden:?}");
        group.bench_with_input(BenchmarkId::new("forward_b256", &id), &net, |b, net| {
            b.iter(|| net.forward_batch(black_box(x.view())).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("grad_b256", &id), &net, |b, net| {
            b.iter(|| net.grad(black_box(x.view()), y.view()).unwrap())
        });
    }
    let mlp = DenseNet::new(64, &[512, 512, 512], 2, 0);
    let obs = vec![0.1; 64];
    group.bench_function("forward_single_512x3", |b| {
        b.iter(|| mlp.forward(black_box(&obs)).unwrap())
    });
    group.bench_function("perturbation_noise_512x3", |b| {
        b.iter(|| gaussian_noise(black_box(7), mlp.num_params()))
    });
    group.finish();
}

fn windows(c: &mut Criterion) {
    let (k, horizon) = (24, 300);
    let trajectories = (0..k)
        .map(|i| {
            let pm = uniform_batch(horizon + 1, 8, i as u64);
            let fm = uniform_batch(horizon + 1, 64, 100 + i as u64);
            (0..=horizon)
                .map(|t| (pm.row(t).to_vec(), fm.row(t).to_vec(), [0.0, 0.0]))
                .collect()
        })
        .collect();
    let meta = DatasetMeta {
        env_fingerprint: 0,
        behavior: "bench".into(),
        noise: 0.0,
        seed: 0,
    };
    let data = TrajectoryDataset::from_records(trajectories, meta).unwrap();
    c.bench_function("extract_windows_n48_m1", |b| {
        b.iter(|| extract_windows(black_box(&data), WindowSpec::new(48, 1)).unwrap())
    });
}

criterion_group!(
    name = benches;
    config = Criterion::default()
        .warm_up_time(Duration::from_secs(1))
        .measurement_time(Duration::from_secs(3))
        .sample_size(20);
    targets = lattice, networks, windows
);
criterion_main!(benches);

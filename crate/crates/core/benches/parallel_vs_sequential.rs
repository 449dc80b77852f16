use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DVector;
use sigmak_core::bubbles::{
    bubble_field, harnack_sweep, verify_solution, BubbleSpec, HarnackConfig, SweepOptions,
};
use sigmak_core::sampling::halton_log_radial;
use sigmak_core::ExecPolicy;

const POLICIES: [(&str, ExecPolicy); 2] = [
    ("sequential", ExecPolicy::Sequential),
    ("parallel", ExecPolicy::Parallel),
];

fn verify(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_solution");
    let (n, k) = (5, 3);
    let field = bubble_field(&BubbleSpec::centered(n, k, 1.0).unwrap());
    let points = halton_log_radial(&DVector::zeros(n), 1e-3, 1e3, 4000);
    for (name, policy) in POLICIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &policy, |b, &policy| {
            b.iter(|| verify_solution(&field, n, k, &points, policy).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("harnack_sweep");
    group.sample_size(10);
    let a_grid: Vec<f64> = (0..12)
        .map(|i| 10f64.powf(-1.0 + 3.0 * i as f64 / 11.0))
        .collect();
    for (name, policy) in POLICIES {
        let opts = SweepOptions {
            config: HarnackConfig {
                policy,
                ..HarnackConfig::default()
            },
            ..SweepOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| harnack_sweep(4, 2, &a_grid, &[1.0, 2.0], opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, verify, sweep);
criterion_main!(benches);

//! Sequential vs rayon node sweeps on the hot paths: a volume integral, a
//! full residual report and a batch of Gateaux gaps.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use bulksurf::expr::parse;
use bulksurf::fixtures::{self, ChartName, FieldRng};
use bulksurf::geometry::{self, QuadratureRule, Region, Slip};
use bulksurf::numeric::Exec;
use bulksurf::residuals;
use bulksurf::variation;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn volume_integral(c: &mut Criterion) {
    let dom = ChartName::PerturbedSphere.domain(Slip::NoSlip);
    let f = parse("exp(-x1^2) * cos(x2 + x3) + x1*x2*x3").unwrap();
    let mut group = c.benchmark_group("volume_integral");
    for n in [16, 32] {
        let rule = QuadratureRule::new(n);
        for (name, mode) in MODES {
            Exec::set_global(Some(mode));
            group.bench_with_input(BenchmarkId::new(name, n), &rule, |b, rule| {
                b.iter(|| geometry::integrate_volume(&dom, Region::Shell, rule, &f, 0.0).unwrap())
            });
        }
    }
    group.finish();
    Exec::set_global(None);
}

fn residual_report(c: &mut Criterion) {
    let sys = fixtures::random_state(&mut FieldRng::new(3), ChartName::Ellipsoid, Slip::Slip);
    let rule = QuadratureRule::new(12);
    let mut group = c.benchmark_group("residual_report");
    group.sample_size(10);
    for (name, mode) in MODES {
        Exec::set_global(Some(mode));
        group.bench_function(name, |b| b.iter(|| residuals::residual_report(&sys, &rule, 0.0).unwrap()));
    }
    group.finish();
    Exec::set_global(None);
}

fn variation_batch(c: &mut Criterion) {
    let sys = fixtures::random_state(&mut FieldRng::new(5), ChartName::Sphere, Slip::NoSlip);
    let rule = QuadratureRule::new(10);
    let mut group = c.benchmark_group("variation_suite");
    group.sample_size(10);
    for (name, mode) in MODES {
        Exec::set_global(Some(mode));
        group.bench_function(name, |b| b.iter(|| variation::variation_suite(&sys, 4, 11, &rule, 0.0).unwrap()));
    }
    group.finish();
    Exec::set_global(None);
}

criterion_group!(benches, volume_integral, residual_report, variation_batch);
criterion_main!(benches);

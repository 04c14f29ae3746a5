//! Benchmarks for the load-bearing operations: unordered summation,
//! jump scans, path simulation, and rectangle counting.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use regulated::{
    empirical_jump_census, jump_count, simulate, stopping_times, ContinuousBase, FamilyRule,
    IndexKey, IndexSetExpr, IntervalSpec, JumpAtom, JumpDist, JumpTrain, PathModel, Rectangle,
    RegulatedFn, SizeSet, TrainRule, WeightFamily,
};

/// Explicit train with `n` atoms at integer locations and mixed sizes
/// spanning many layers.
fn explicit_subject(n: usize) -> RegulatedFn {
    let atoms = (1..=n)
        .map(|k| {
            let size = 1.0 / ((k % 97) as f64 + 1.0);
            let signed = if k % 2 == 0 { size } else { -size };
            JumpAtom::new(k as f64, signed, 0.0)
        })
        .collect();
    RegulatedFn::new(
        IntervalSpec::compact(0.0, n as f64 + 1.0).unwrap(),
        ContinuousBase::zero(),
        JumpTrain::explicit(atoms),
    )
}

fn explicit_family(n: usize) -> WeightFamily {
    WeightFamily::explicit(
        (0..n)
            .map(|k| (IndexKey::real(k as f64).unwrap(), 1.0 / ((k % 97) as f64 + 1.0)))
            .collect(),
    )
}

fn model(rate: f64, horizon: f64) -> PathModel {
    PathModel::CompoundPoisson {
        rate,
        jump_dist: JumpDist::Uniform { a: -1.0, b: 1.0 },
        drift: ContinuousBase::zero(),
        horizon,
        seed: 1,
    }
}

fn summation(c: &mut Criterion) {
    let mut group = c.benchmark_group("summation");
    for n in [1_000usize, 10_000] {
        let family = explicit_family(n);
        group.bench_with_input(BenchmarkId::new("explicit", n), &family, |b, fam| {
            b.iter(|| black_box(fam).sum().unwrap())
        });
    }
    let geometric = WeightFamily::generated(FamilyRule::Geometric { ratio: 0.5 });
    group.bench_function("geometric_tol_1e-12", |b| {
        b.iter(|| black_box(&geometric).sum().unwrap())
    });
    let evens = IndexSetExpr::Stride { modulus: 2, residue: 0 };
    group.bench_function("geometric_restricted", |b| {
        b.iter(|| black_box(&geometric).restrict(&evens).unwrap().sum().unwrap())
    });
    group.finish();
}

fn jump_scans(c: &mut Criterion) {
    let mut group = c.benchmark_group("jump_scans");
    for n in [1_000usize, 10_000] {
        let f = explicit_subject(n);
        group.bench_with_input(BenchmarkId::new("threshold_scan", n), &f, |b, f| {
            b.iter(|| f.jumps_at_least(black_box(0.05), &f.domain).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("layered_partition", n), &f, |b, f| {
            b.iter(|| f.layered_partition(&f.domain, None).unwrap())
        });
    }
    let geo = RegulatedFn::new(
        IntervalSpec::compact(0.0, 1.0).unwrap(),
        ContinuousBase::zero(),
        JumpTrain::generated(TrainRule::Geometric { ratio: 0.5 }),
    );
    group.bench_function("generated_scan", |b| {
        b.iter(|| geo.jumps_at_least(black_box(1e-9), &geo.domain).unwrap())
    });
    group.finish();
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulation");
    let m = model(50.0, 10.0);
    group.bench_function("simulate_500_jumps", |b| {
        b.iter(|| simulate(black_box(&m)).unwrap())
    });
    let path = simulate(&m).unwrap();
    group.bench_function("stopping_times", |b| {
        b.iter(|| stopping_times(black_box(&path)))
    });
    group.finish();
}

fn counting(c: &mut Criterion) {
    let mut group = c.benchmark_group("counting");
    let path = simulate(&model(50.0, 10.0)).unwrap();
    let rect = Rectangle {
        time: IndexSetExpr::half_open(0.0, 5.0),
        size: SizeSet::ComplementBall { eps: 0.25 },
    };
    group.bench_function("rectangle_count", |b| {
        b.iter(|| jump_count(black_box(&path.f), &rect).unwrap())
    });
    let m = model(5.0, 10.0);
    group.bench_function("census_50_members", |b| {
        b.iter(|| empirical_jump_census(black_box(&m), 50, &rect).unwrap())
    });
    group.finish();
}

criterion_group!(benches, summation, jump_scans, simulation, counting);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use sigma2_core::calculus::{make_manufactured, ConstantRhs, ManufacturedSpec};
use sigma2_core::grid::GridField;
use sigma2_core::linalg::dot;
use sigma2_core::pointwise::claim2_gap;
use sigma2_core::rng::{random_gamma2_matrix, random_gamma2_triple, stream};
use sigma2_core::solver::{evaluate, solve_dirichlet, SolveParams};
use sigma2_core::symfun::eigen_decompose;

fn eigen(c: &mut Criterion) {
    let mut rng = stream(7, 0);
    let mats: Vec<_> = (0..1024).map(|_| random_gamma2_matrix(&mut rng, 3.0).0).collect();
    c.bench_function("eigen_decompose/1024", |b| {
        b.iter(|| {
            for a in &mats {
                black_box(eigen_decompose(black_box(a)).unwrap());
            }
        })
    });
}

fn claim2(c: &mut Criterion) {
    let mut rng = stream(7, 1);
    let lams: Vec<_> = (0..1024).map(|_| random_gamma2_triple(&mut rng, 3.0)).collect();
    c.bench_function("claim2_gap/1024", |b| {
        b.iter(|| {
            lams.iter()
                .map(|l| claim2_gap(black_box(l), 0.05).unwrap())
                .sum::<f64>()
        })
    });
}

fn residual(c: &mut Criterion) {
    let m = make_manufactured(
        ManufacturedSpec::TrigPert {
            a: 1.0,
            eps: 0.05,
            k: 1.0,
        },
        -1.0,
        1.0,
    )
    .unwrap();
    for n in [17, 33] {
        let u = GridField::from_fn(-1.0, 1.0, n, |x| m.u(x)).unwrap();
        let g = u.values.clone();
        c.bench_function(&format!("residual/n{n}"), |b| {
            b.iter(|| black_box(evaluate(&u, &g, &m, 1e-8)))
        });
    }
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let rhs = ConstantRhs(3.0);
    let g = |x: &[f64; 3]| 0.5 * dot(x, x) + 0.1 * x[0] * x[1];
    group.bench_function("quadratic/n17", |b| {
        b.iter_batched(
            SolveParams::default,
            |p| solve_dirichlet(&rhs, &g, -1.0, 1.0, 17, &p).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(benches, eigen, claim2, residual, solve);
criterion_main!(benches);

//! Compares the data-parallel grid kernels against the sequential fallback.
//!
//! The sequential numbers are obtained by pinning the rayon pool to one
//! thread; chunk boundaries are fixed, so both modes produce bit-identical
//! fields.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use iia_core::flow::{rhs_primary, rhs_reparametrized, TypeIIAState};
use iia_core::lattice::calculus::exterior_derivative;
use iia_core::lattice::{calculus::random_band_limited, Grid};

fn bench_rhs(c: &mut Criterion) {
    let grid = Grid::isotropic(8, 2.0 * std::f64::consts::PI).unwrap();
    let state = TypeIIAState::flat_standard(grid);
    let mut group = c.benchmark_group("rhs");
    group.sample_size(10);
    for threads in [1usize, 0] {
        let label = if threads == 1 { "sequential" } else { "parallel" };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        group.bench_with_input(
            BenchmarkId::new("primary_n8", label),
            &threads,
            |b, _| {
                pool.install(|| {
                    b.iter(|| rhs_primary(&state.phi, &state.omega).unwrap());
                });
            },
        );
        group.bench_with_input(
            BenchmarkId::new("reparametrized_n8", label),
            &threads,
            |b, _| {
                pool.install(|| {
                    b.iter(|| rhs_reparametrized(&state.phi, &state.omega).unwrap());
                });
            },
        );
    }
    group.finish();
}

fn bench_transforms(c: &mut Criterion) {
    let grid = Grid::isotropic(8, 2.0 * std::f64::consts::PI).unwrap();
    let f = random_band_limited(grid, 3, 2, 11);
    let mut group = c.benchmark_group("spectral");
    group.sample_size(20);
    for threads in [1usize, 0] {
        let label = if threads == 1 { "sequential" } else { "parallel" };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        group.bench_with_input(BenchmarkId::new("d_3form_n8", label), &threads, |b, _| {
            pool.install(|| {
                b.iter(|| {
                    // fresh clone so the spectral cache is cold
                    let g = f.clone();
                    exterior_derivative(&g)
                });
            });
        });
    }
    group.finish();
}

criterion_group!(benches, bench_rhs, bench_transforms);
criterion_main!(benches);

//! Rayon-backed `exec::map` versus the always-sequential `exec::map_seq` on
//! the crate's three characteristic workloads:
//!
//! * `freq_sweep` — pointwise spectral test of the frequency-domain property
//!   across a log grid (medium work per item, thousands of items);
//! * `storage_probe` — evaluate a composite Lyapunov function and its
//!   gradient over a Sobol cloud (tiny work per item, where parallel
//!   dispatch may not pay for itself);
//! * `ic_batch` — full closed-loop simulations from a batch of initial
//!   conditions (heavy work per item, few items).
//!
//! Run with `cargo bench`, or with `--no-default-features` to measure the
//! build where `exec::map` itself degrades to the sequential loop.

use criterion::{criterion_group, criterion_main, Criterion};
use ni_core::lti::{ni_sweep_points, FrequencyGrid, StateSpace};
use ni_core::msd::msd_irc_loop;
use ni_core::nonlinear::simulate;
use ni_core::signal::Signal;
use ni_core::{exec, mat, sobol, Matrix};
use std::hint::black_box;

/// Deterministic 8-state stable test system: Gershgorin-dominant tridiagonal
/// `A`, trigonometric `B` and `C` so nothing is secretly sparse.
fn bench_system() -> StateSpace {
    let n = 8;
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = -2.0 - i as f64 / 8.0;
        if i + 1 < n {
            a[(i, i + 1)] = 0.5;
            a[(i + 1, i)] = -0.5;
        }
    }
    let mut b = Matrix::zeros(n, 1);
    let mut c = Matrix::zeros(1, n);
    for i in 0..n {
        b[(i, 0)] = (1.0 + i as f64).sin();
        c[(0, i)] = (1.0 + i as f64).cos();
    }
    StateSpace::new(a, b, c, Matrix::zeros(1, 1)).unwrap()
}

fn freq_sweep(c: &mut Criterion) {
    let sys = bench_system();
    let omegas: Vec<f64> = FrequencyGrid::log_space(1e-3, 1e3, 2000)
        .unwrap()
        .omegas()
        .to_vec();
    let work = |w: &f64| {
        let grid = FrequencyGrid::new(vec![*w]).unwrap();
        ni_sweep_points(&sys, &grid).unwrap()[0].1
    };

    let mut g = c.benchmark_group("freq_sweep");
    g.sample_size(20);
    g.bench_function("parallel", |bch| {
        bch.iter(|| exec::map(black_box(&omegas), work))
    });
    g.bench_function("sequential", |bch| {
        bch.iter(|| exec::map_seq(black_box(&omegas), work))
    });
    g.finish();
}

fn storage_probe(c: &mut Criterion) {
    let (_, w) = msd_irc_loop(1.0, 2.0).unwrap();
    let pts = sobol::sample_box(3, 4096, -2.0, 2.0, 7);
    let work = |z: &Vec<f64>| w.eval(z) + mat::norm2(&w.gradient(z));

    let mut g = c.benchmark_group("storage_probe");
    g.sample_size(30);
    g.bench_function("parallel", |bch| {
        bch.iter(|| exec::map(black_box(&pts), work))
    });
    g.bench_function("sequential", |bch| {
        bch.iter(|| exec::map_seq(black_box(&pts), work))
    });
    g.finish();
}

fn ic_batch(c: &mut Criterion) {
    let (fb, _) = msd_irc_loop(1.0, 2.0).unwrap();
    let sys = fb.system();
    let ics = sobol::sample_box(3, 16, -1.0, 1.0, 19);
    let work = |x0: &Vec<f64>| {
        let traj = simulate(&sys, x0, &Signal::Zero { channels: 2 }, 10.0, 1e-3).unwrap();
        mat::norm2(traj.states.last().unwrap())
    };

    let mut g = c.benchmark_group("ic_batch");
    g.sample_size(10);
    g.bench_function("parallel", |bch| {
        bch.iter(|| exec::map(black_box(&ics), work))
    });
    g.bench_function("sequential", |bch| {
        bch.iter(|| exec::map_seq(black_box(&ics), work))
    });
    g.finish();
}

criterion_group!(benches, freq_sweep, storage_probe, ic_batch);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use varlanczos_core::{
    chebyshev_propagate, gaussian_packet, hermitian_eig, lanczos_step, BasisWindow, ChebyshevPlan,
    DenseHermitianOracle, Grid2D, GridHamiltonian, HenonHeilesParams, HermitianOperator, Packet,
    WaveState, WindowConfig,
};

fn setup() -> (GridHamiltonian, WaveState) {
    let grid = Grid2D::default();
    let h = GridHamiltonian::new(grid, HenonHeilesParams::default()).unwrap();
    let psi = gaussian_packet(&grid, &Packet::default()).unwrap();
    (h, psi)
}

fn grid_matvec(c: &mut Criterion) {
    let (h, psi) = setup();
    c.bench_function("grid matvec 64x64", |b| b.iter(|| h.apply(&psi).unwrap()));
}

fn steppers(c: &mut Criterion) {
    let (h, psi) = setup();
    let dt = 0.02;
    let mut group = c.benchmark_group("one step, dt 0.02");

    group.bench_function("original mu 6", |b| {
        b.iter(|| lanczos_step(&h, &psi, 6, dt).unwrap())
    });

    // prime the window so the measured step recycles a full basis
    let mut window = BasisWindow::new(WindowConfig::new(5, 10, 1)).unwrap();
    let mut state = psi.clone();
    for _ in 0..4 {
        state = window.step(&h, &state, dt).unwrap().0;
    }
    group.bench_function("extended m 5 n 10", |b| {
        b.iter_batched(
            || (window.clone(), state.clone()),
            |(mut w, s)| w.step(&h, &s, dt).unwrap(),
            BatchSize::SmallInput,
        )
    });

    let plan = ChebyshevPlan::converged(h.spectral_bounds(), dt).unwrap();
    group.bench_function("chebyshev converged", |b| {
        b.iter(|| chebyshev_propagate(&h, &psi, &plan).unwrap())
    });
    group.finish();
}

fn subspace_eig(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = DenseHermitianOracle::random(12, 1.0, &mut rng).unwrap();
    let a = m.matrix().clone();
    c.bench_function("hermitian eig 12x12", |b| {
        b.iter(|| hermitian_eig(&a).unwrap())
    });
}

criterion_group!(benches, grid_matvec, steppers, subspace_eig);
criterion_main!(benches);

//! Dense-oracle property batteries with a machine-readable report.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use varlanczos_core::{
    chebyshev_propagate, inner, lanczos_step, BasisWindow, ChebyshevPlan, DenseHermitianOracle,
    Grid2D, GridHamiltonian, HenonHeilesParams, HermitianOperator, WaveState, WindowConfig,
};

pub const DEFAULT_SEED: u64 = 20;

#[derive(Clone, Debug, Serialize)]
pub struct OracleEntry {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub seed: u64,
    pub passed: bool,
    pub entries: Vec<OracleEntry>,
}

impl OracleReport {
    pub fn entry(&self, name: &str) -> Option<&OracleEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &OracleEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct OracleOptions {
    /// Breaks the Hermitian symmetry of the matrix fed to the Hermiticity
    /// check. Negative control: that entry must then fail.
    pub corrupt_hermitian: bool,
}

pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> WaveState {
    let amps = (0..dim)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let mut s = WaveState::new(amps).expect("dim >= 1");
    s.normalize().expect("random state is nonzero");
    s
}

/// Largest `|<u|Hv> - conj(<v|Hu>)|` over `pairs` random pairs, relative to
/// `|u||v| * scale`.
pub fn hermiticity_residual<H: HermitianOperator + ?Sized, R: Rng + ?Sized>(
    h: &H,
    scale: f64,
    pairs: usize,
    rng: &mut R,
) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let u = random_state(h.dim(), rng);
        let v = random_state(h.dim(), rng);
        let uhv = inner(&u, &h.apply(&v).unwrap()).unwrap();
        let vhu = inner(&v, &h.apply(&u).unwrap()).unwrap();
        worst = worst.max((uhv - vhu.conj()).norm() / scale);
    }
    worst
}

/// Single-step Lanczos errors `|exact - numeric|` on log-spaced steps in
/// `[dt_min, dt_max]`, with the least-squares log-log slope.
pub fn lanczos_order_fit(
    h: &DenseHermitianOracle,
    psi: &WaveState,
    mu: usize,
    dt_min: f64,
    dt_max: f64,
    points: usize,
) -> (f64, Vec<(f64, f64)>) {
    let ratio = (dt_max / dt_min).ln();
    let samples: Vec<(f64, f64)> = (0..points)
        .map(|j| {
            let dt = dt_min * (ratio * j as f64 / (points - 1) as f64).exp();
            let numeric = lanczos_step(h, psi, mu, dt).unwrap().state;
            let exact = h.exact_evolve(psi, dt).unwrap();
            (dt, numeric.distance(&exact).unwrap())
        })
        .collect();
    let slope = crate::run::loglog_slope(&samples).unwrap_or(f64::NAN);
    (slope, samples)
}

struct Battery {
    entries: Vec<OracleEntry>,
}

impl Battery {
    fn record(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        self.entries.push(OracleEntry {
            name: name.into(),
            passed: residual.is_finite() && residual <= tolerance,
            residual,
            tolerance,
        });
    }
}

pub fn run_oracle_suite(seed: u64) -> OracleReport {
    run_oracle_suite_with(seed, OracleOptions::default())
}

pub fn run_oracle_suite_with(seed: u64, options: OracleOptions) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Battery {
        entries: Vec::new(),
    };

    let h = DenseHermitianOracle::random(32, 1.0, &mut rng).unwrap();
    let psi0 = random_state(32, &mut rng);

    // Hermiticity
    let checked = if options.corrupt_hermitian {
        let mut m: DMatrix<Complex64> = h.matrix().clone();
        m[(0, 1)] += Complex64::new(1e-3, 0.0);
        DenseHermitianOracle::new_unchecked(m)
    } else {
        DenseHermitianOracle::new(h.matrix().clone()).unwrap()
    };
    let scale = checked
        .gershgorin_bounds()
        .1
        .abs()
        .max(checked.gershgorin_bounds().0.abs());
    b.record(
        "hermiticity/dense",
        hermiticity_residual(&checked, scale, 100, &mut rng),
        1e-10,
    );
    let grid = Grid2D::new(16, 16, (-6.0, 6.0), (-6.0, 6.0)).unwrap();
    let hg = GridHamiltonian::new(grid, HenonHeilesParams::default()).unwrap();
    let (lo, hi) = hg.spectral_bounds();
    b.record(
        "hermiticity/grid",
        hermiticity_residual(&hg, lo.abs().max(hi.abs()), 100, &mut rng),
        1e-10,
    );

    // Chebyshev against the eigendecomposition, and composability
    let plan = ChebyshevPlan::new(128, h.gershgorin_bounds(), 4.0).unwrap();
    let cheb = chebyshev_propagate(&h, &psi0, &plan).unwrap();
    b.record(
        "chebyshev/exact",
        cheb.distance(&h.exact_evolve(&psi0, 4.0).unwrap()).unwrap(),
        1e-12,
    );
    let mut chained = psi0.clone();
    for _ in 0..5 {
        chained = chebyshev_propagate(&h, &chained, &plan).unwrap();
    }
    let once = ChebyshevPlan::converged(h.gershgorin_bounds(), 20.0).unwrap();
    let single = chebyshev_propagate(&h, &psi0, &once).unwrap();
    b.record(
        "chebyshev/composability",
        chained.distance(&single).unwrap(),
        1e-11,
    );

    // Lanczos and extended against the eigendecomposition
    let exact = h.exact_evolve(&psi0, 2.0).unwrap();
    let mut lz = psi0.clone();
    for _ in 0..100 {
        lz = lanczos_step(&h, &lz, 6, 0.02).unwrap().state;
    }
    b.record("lanczos/exact", lz.distance(&exact).unwrap(), 1e-8);
    let mut window = BasisWindow::new(WindowConfig::new(3, 6, 1)).unwrap();
    let mut ex = psi0.clone();
    for _ in 0..100 {
        ex = window.step(&h, &ex, 0.02).unwrap().0;
    }
    b.record("extended/exact", ex.distance(&exact).unwrap(), 1e-8);

    // Norm conservation per step
    let mut drift = [0.0f64; 3];
    let mut states = [psi0.clone(), psi0.clone(), psi0.clone()];
    let mut window = BasisWindow::new(WindowConfig::new(3, 8, 2)).unwrap();
    let norm_plan = ChebyshevPlan::converged(h.gershgorin_bounds(), 0.5).unwrap();
    for _ in 0..200 {
        let next = [
            lanczos_step(&h, &states[0], 6, 0.5).unwrap().state,
            window.step(&h, &states[1], 0.5).unwrap().0,
            chebyshev_propagate(&h, &states[2], &norm_plan).unwrap(),
        ];
        for (i, s) in next.into_iter().enumerate() {
            drift[i] = drift[i].max((s.norm() - states[i].norm()).abs());
            states[i] = s;
        }
    }
    for (name, d) in ["lanczos", "extended", "chebyshev"].iter().zip(drift) {
        b.record(format!("norm/{name}"), d, 1e-10);
    }

    // Degenerate window equals original Lanczos
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let hd = DenseHermitianOracle::random(24, 1.0, &mut rng).unwrap();
        let m = rng.random_range(1..=4usize);
        let mut window = BasisWindow::new(WindowConfig::new(m, m + 1, 1)).unwrap();
        let mut a = random_state(24, &mut rng);
        let mut c = a.clone();
        for _ in 0..100 {
            a = window.step(&hd, &a, 0.05).unwrap().0;
            c = lanczos_step(&hd, &c, m + 1, 0.05).unwrap().state;
            worst = worst.max(a.distance(&c).unwrap());
        }
    }
    b.record("extended/degeneracy", worst, 1e-12);

    // Local order of the Lanczos step: error ~ dt^mu
    let h16 = DenseHermitianOracle::random(16, 1.0, &mut rng).unwrap();
    let psi16 = random_state(16, &mut rng);
    for mu in 2..=4 {
        let (slope, _) = lanczos_order_fit(&h16, &psi16, mu, 1e-3, 1e-1, 9);
        b.record(
            format!("lanczos/order-mu{mu}"),
            (slope - mu as f64).abs(),
            0.5,
        );
    }

    let passed = b.entries.iter().all(|e| e.passed);
    OracleReport {
        seed,
        passed,
        entries: b.entries,
    }
}

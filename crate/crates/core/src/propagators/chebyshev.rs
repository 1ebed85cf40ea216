use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::propagators::bessel::bessel_j_all;
use crate::state::{HermitianOperator, WaveState};
use crate::subspace::HBAR;

/// Tail ratio `|a_last| / max |a_k|` a converged plan must reach.
pub const TAIL_TOLERANCE: f64 = 1e-16;

/// Largest result-norm drift tolerated before the bounds are declared
/// violated.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;

/// Chebyshev expansion of `exp(-i H dt)` for a spectrum inside
/// `[e_min, e_max]`.
#[derive(Clone, Debug)]
pub struct ChebyshevPlan {
    n_terms: usize,
    e_min: f64,
    e_max: f64,
    dt: f64,
    coefficients: Vec<Complex64>,
}

impl ChebyshevPlan {
    /// Plan with exactly `n_terms` terms. See [`tail_ratio`](Self::tail_ratio)
    /// and [`validate`](Self::validate) for convergence.
    pub fn new(n_terms: usize, bounds: (f64, f64), dt: f64) -> Result<Self> {
        let (e_min, e_max) = bounds;
        if n_terms == 0 {
            return Err(Error::InvalidParameter(
                "Chebyshev plan needs >= 1 term".into(),
            ));
        }
        if !(e_max > e_min) || !e_min.is_finite() || !e_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "invalid spectral bounds [{e_min}, {e_max}]"
            )));
        }
        let half_width = 0.5 * (e_max - e_min);
        let j = bessel_j_all(n_terms - 1, half_width * dt / HBAR);
        let mut minus_i_pow = Complex64::new(1.0, 0.0);
        let coefficients = j
            .iter()
            .enumerate()
            .map(|(k, jk)| {
                let weight = if k == 0 { 1.0 } else { 2.0 };
                let c = minus_i_pow * (weight * jk);
                minus_i_pow *= Complex64::new(0.0, -1.0);
                c
            })
            .collect();
        Ok(Self {
            n_terms,
            e_min,
            e_max,
            dt,
            coefficients,
        })
    }

    /// Shortest plan whose last coefficient satisfies the tail tolerance.
    pub fn converged(bounds: (f64, f64), dt: f64) -> Result<Self> {
        let z = 0.5 * (bounds.1 - bounds.0) * dt.abs() / HBAR;
        let probe = (z + 60.0 + 30.0 * z.cbrt()).ceil() as usize;
        let j = bessel_j_all(probe, z);
        let peak = j.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let last = j
            .iter()
            .position(|v| v.abs() <= TAIL_TOLERANCE * peak)
            .unwrap_or(probe);
        Self::new(last + 1, bounds, dt)
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.e_min, self.e_max)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// `|a_{n-1}| / max_k |a_k|`.
    pub fn tail_ratio(&self) -> f64 {
        let peak = self
            .coefficients
            .iter()
            .fold(0.0f64, |a, c| a.max(c.norm()));
        self.coefficients.last().map_or(0.0, |c| c.norm()) / peak
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.tail_ratio();
        if r > TAIL_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "Chebyshev expansion not converged: tail ratio {r:e} with {} terms",
                self.n_terms
            )));
        }
        Ok(())
    }
}

/// `exp(-i H dt) psi` through the plan's Chebyshev expansion.
///
/// Spends exactly `n_terms - 1` applications of `h`. Fails when the result
/// changes the norm by more than [`NORM_DRIFT_LIMIT`], the signature of a
/// truncated series or bounds that miss part of the spectrum.
pub fn chebyshev_propagate<H: HermitianOperator + ?Sized>(
    h: &H,
    psi: &WaveState,
    plan: &ChebyshevPlan,
) -> Result<WaveState> {
    let out = chebyshev_series(h, psi, plan)?;
    let n_in = psi.norm();
    let drift = (out.norm() - n_in).abs() / n_in.max(f64::MIN_POSITIVE);
    if drift > NORM_DRIFT_LIMIT || !drift.is_finite() {
        return Err(Error::BoundsViolated { drift });
    }
    Ok(out)
}

/// The plan's truncated series applied to `psi`, without the norm check.
pub fn chebyshev_series<H: HermitianOperator + ?Sized>(
    h: &H,
    psi: &WaveState,
    plan: &ChebyshevPlan,
) -> Result<WaveState> {
    let center = 0.5 * (plan.e_max + plan.e_min);
    let half_width = 0.5 * (plan.e_max - plan.e_min);
    let c = &plan.coefficients;

    // H_n v = (H v - center v) / half_width
    let normalized = |v: &WaveState| -> Result<WaveState> {
        let mut out = h.apply(v)?;
        out.axpy(Complex64::new(-center, 0.0), v)?;
        out.scale(Complex64::new(1.0 / half_width, 0.0));
        Ok(out)
    };

    let mut acc = psi.scaled(c[0]);
    if plan.n_terms > 1 {
        let mut prev = psi.clone();
        let mut cur = normalized(psi)?;
        acc.axpy(c[1], &cur)?;
        for ck in &c[2..] {
            let mut next = normalized(&cur)?;
            next.scale(Complex64::new(2.0, 0.0));
            next.axpy(Complex64::new(-1.0, 0.0), &prev)?;
            acc.axpy(*ck, &next)?;
            prev = std::mem::replace(&mut cur, next);
        }
    }
    acc.scale(Complex64::from_polar(1.0, -center * plan.dt / HBAR));
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseHermitianOracle;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_unit(n: usize, seed: u64) -> WaveState {
        let mut s = WaveState::from_real(
            &(0..n)
                .map(|i| ((i as u64 * 7 + seed) as f64).cos())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        s.normalize().unwrap();
        s
    }

    #[test]
    fn zero_duration_is_identity() {
        let m = DenseHermitianOracle::from_real_diagonal(&[-1.0, 0.5, 2.0]).unwrap();
        let plan = ChebyshevPlan::new(16, m.gershgorin_bounds(), 0.0).unwrap();
        assert_eq!(plan.coefficients()[0], Complex64::new(1.0, 0.0));
        assert!(plan.coefficients()[1..].iter().all(|c| c.norm() == 0.0));
        let psi = random_unit(3, 1);
        let out = chebyshev_propagate(&m, &psi, &plan).unwrap();
        assert!(out.distance(&psi).unwrap() < 1e-15);
        assert_eq!(m.matvecs(), 15);
    }

    #[test]
    fn stationary_state_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let m = DenseHermitianOracle::random(10, 1.0, &mut rng).unwrap();
        let (vals, vecs) = m.eigen();
        let v = WaveState::new(vecs.column(2).iter().copied().collect()).unwrap();
        let plan = ChebyshevPlan::converged(m.gershgorin_bounds(), 3.0).unwrap();
        let out = chebyshev_propagate(&m, &v, &plan).unwrap();
        let want = v.scaled(Complex64::from_polar(1.0, -vals[2] * 3.0));
        assert!(out.distance(&want).unwrap() < 1e-12);
    }

    #[test]
    fn matches_dense_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let m = DenseHermitianOracle::random(16, 1.0, &mut rng).unwrap();
        let plan = ChebyshevPlan::converged(m.gershgorin_bounds(), 4.0).unwrap();
        plan.validate().unwrap();
        let psi = random_unit(16, 3);
        m.reset_matvecs();
        let out = chebyshev_propagate(&m, &psi, &plan).unwrap();
        assert_eq!(m.matvecs(), plan.n_terms() as u64 - 1);
        let want = m.exact_evolve(&psi, 4.0).unwrap();
        assert!(out.distance(&want).unwrap() < 1e-12);
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn converged_plan_meets_tail_invariant() {
        for (bounds, dt) in [
            ((-1.0, 1.0), 4.0),
            ((-16.0, 336.0), 4.0),
            ((0.0, 10.0), 0.02),
        ] {
            let plan = ChebyshevPlan::converged(bounds, dt).unwrap();
            assert!(plan.tail_ratio() <= TAIL_TOLERANCE);
            let shorter = ChebyshevPlan::new(plan.n_terms() - 1, bounds, dt).unwrap();
            assert!(shorter.tail_ratio() > TAIL_TOLERANCE);
        }
    }

    #[test]
    fn too_narrow_bounds_are_detected() {
        let m = DenseHermitianOracle::from_real_diagonal(&[0.0, 5.0]).unwrap();
        let plan = ChebyshevPlan::converged((-1.0, 1.0), 2.0).unwrap();
        let psi = random_unit(2, 0);
        assert!(matches!(
            chebyshev_propagate(&m, &psi, &plan),
            Err(Error::BoundsViolated { .. })
        ));
    }

    #[test]
    fn plan_argument_checks() {
        assert!(ChebyshevPlan::new(0, (0.0, 1.0), 1.0).is_err());
        assert!(ChebyshevPlan::new(4, (1.0, 1.0), 1.0).is_err());
        assert!(ChebyshevPlan::new(4, (0.0, 1.0), 100.0)
            .unwrap()
            .validate()
            .is_err());
    }
}

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{inner, linear_combination, HermitianOperator, WaveState};
use crate::subspace::{hermitian_eig, CMatrix, HBAR};

/// Off-diagonal Lanczos coefficient below which the Krylov space is taken
/// to be invariant (relative to the tridiagonal's scale, floored at one).
pub const BREAKDOWN_TOLERANCE: f64 = 1e-13;

/// Outcome of one Lanczos step.
#[derive(Clone, Debug)]
pub struct LanczosStep {
    pub state: WaveState,
    /// Dimension of the Krylov space actually used.
    pub dimension: usize,
    pub matvecs: usize,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

/// Propagates `psi` over `dt` in the Krylov space of dimension `budget`.
///
/// Uses exactly `budget` applications of `h` unless the recursion breaks
/// down earlier, in which case the invariant subspace makes the step exact.
pub fn lanczos_step<H: HermitianOperator + ?Sized>(
    h: &H,
    psi: &WaveState,
    budget: usize,
    dt: f64,
) -> Result<LanczosStep> {
    if budget == 0 {
        return Err(Error::InvalidParameter(
            "Lanczos budget must be >= 1".into(),
        ));
    }
    let mut q0 = psi.clone();
    let scale_in = q0.normalize()?;

    let mut basis = vec![q0];
    let mut alphas = Vec::with_capacity(budget);
    let mut betas: Vec<f64> = Vec::with_capacity(budget);
    let mut matvecs = 0;
    let mut t_scale = 0.0f64;

    for j in 0..budget {
        let mut w = h.apply(&basis[j])?;
        matvecs += 1;
        let alpha = inner(&basis[j], &w)?.re;
        alphas.push(alpha);
        t_scale = t_scale.max(alpha.abs());
        if j + 1 == budget {
            break;
        }
        w.axpy(Complex64::new(-alpha, 0.0), &basis[j])?;
        if j > 0 {
            w.axpy(Complex64::new(-betas[j - 1], 0.0), &basis[j - 1])?;
        }
        // one full reorthogonalization pass
        for q in &basis {
            let overlap = inner(q, &w)?;
            w.axpy(-overlap, q)?;
        }
        let beta = w.norm();
        t_scale = t_scale.max(beta);
        if beta <= BREAKDOWN_TOLERANCE * t_scale.max(1.0) {
            break;
        }
        w.scale(Complex64::new(1.0 / beta, 0.0));
        betas.push(beta);
        basis.push(w);
    }

    let dim = alphas.len();
    let t = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(alphas[i], 0.0)
        } else if i + 1 == j {
            Complex64::new(betas[i], 0.0)
        } else if j + 1 == i {
            Complex64::new(betas[j], 0.0)
        } else {
            Complex64::default()
        }
    });
    let (values, vecs) = hermitian_eig(&t)?;
    // c = |psi| Q exp(-i L dt) Q^dagger e1
    let coeffs: Vec<Complex64> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|k| {
                    vecs[(i, k)]
                        * Complex64::from_polar(scale_in, -values[k] * dt / HBAR)
                        * vecs[(0, k)].conj()
                })
                .sum()
        })
        .collect();
    let state = linear_combination(&coeffs, &basis[..dim])?;
    betas.truncate(dim.saturating_sub(1));
    Ok(LanczosStep {
        state,
        dimension: dim,
        matvecs,
        alphas,
        betas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseHermitianOracle;
    use crate::state::ZeroOperator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn eigenvector_exits_early_with_exact_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let m = DenseHermitianOracle::random(12, 1.0, &mut rng).unwrap();
        let (vals, vecs) = m.eigen();
        let v = WaveState::new(vecs.column(5).iter().copied().collect()).unwrap();
        for budget in [1, 3, 6] {
            m.reset_matvecs();
            let out = lanczos_step(&m, &v, budget, 0.37).unwrap();
            let want = v.scaled(Complex64::from_polar(1.0, -vals[5] * 0.37));
            assert!(out.state.distance(&want).unwrap() < 1e-12);
            assert_eq!(out.dimension, 1);
            assert_eq!(m.matvecs(), 1);
        }
    }

    #[test]
    fn full_krylov_space_is_exact() {
        let m = DenseHermitianOracle::from_real_diagonal(&[1.0, 2.0]).unwrap();
        let psi = WaveState::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let out = lanczos_step(&m, &psi, 2, 0.9).unwrap();
        let want = m.exact_evolve(&psi, 0.9).unwrap();
        assert!(out.state.distance(&want).unwrap() < 1e-12);
        assert_eq!(out.matvecs, 2);
    }

    #[test]
    fn zero_operator_leaves_state_alone() {
        let h = ZeroOperator::new(4);
        let psi = WaveState::from_real(&[0.1, -0.4, 0.3, 0.2]).unwrap();
        let out = lanczos_step(&h, &psi, 5, 1.0).unwrap();
        assert!(out.state.distance(&psi).unwrap() < 1e-15);
        assert_eq!(h.matvecs(), 1);
    }

    #[test]
    fn budget_is_spent_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let m = DenseHermitianOracle::random(20, 1.0, &mut rng).unwrap();
        let psi =
            WaveState::from_real(&(0..20).map(|i| (i as f64).sin()).collect::<Vec<_>>()).unwrap();
        for mu in 1..=8 {
            m.reset_matvecs();
            let out = lanczos_step(&m, &psi, mu, 0.02).unwrap();
            assert_eq!(m.matvecs(), mu as u64);
            assert_eq!(out.dimension, mu);
            assert!((out.state.norm() - psi.norm()).abs() < 1e-12 * psi.norm());
        }
    }

    #[test]
    fn zero_state_and_budget_errors() {
        let m = DenseHermitianOracle::from_real_diagonal(&[1.0, 2.0]).unwrap();
        assert!(matches!(
            lanczos_step(&m, &WaveState::zeros(2), 2, 0.1),
            Err(Error::ZeroState)
        ));
        assert!(lanczos_step(&m, &WaveState::basis(2, 0), 0, 0.1).is_err());
    }
}

//! Small dense Hermitian linear algebra for the variational subspace.
//!
//! The subspace equation `i S dC/dt = H C` is solved exactly for constant
//! `S` and `H`: with `S = L L^dagger` and `A = L^-1 H L^-dagger = Q diag(e) Q^dagger`,
//! `C(t) = L^-dagger Q exp(-i e t) Q^dagger L^dagger C(0)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Reduced Planck constant. Fixed to one throughout.
pub const HBAR: f64 = 1.0;

/// Default relative pivot below which a basis state counts as dependent.
pub const DEFAULT_DEPENDENCY_THRESHOLD: f64 = 1e-10;

/// Relative negative pivot still attributed to rounding. Once columns with
/// pivots near the dependency threshold have been accepted, later pivots
/// carry errors of order `eps * cond(S)`, which reaches `1e-4` for Gram
/// matrices of Krylov powers.
pub const NEGATIVE_PIVOT_TOLERANCE: f64 = 1e-2;

const JACOBI_MAX_SWEEPS: usize = 100;

pub type CMatrix = DMatrix<Complex64>;

/// Overlap and Hamiltonian matrices of a (possibly non-orthogonal) basis.
#[derive(Clone, Debug)]
pub struct SubspaceSystem {
    pub overlap: CMatrix,
    pub hamiltonian: CMatrix,
}

impl SubspaceSystem {
    /// Builds the system, Hermitian-symmetrizing both matrices.
    pub fn new(overlap: CMatrix, hamiltonian: CMatrix) -> Result<Self> {
        if !overlap.is_square() || overlap.shape() != hamiltonian.shape() || overlap.nrows() == 0 {
            return Err(Error::InvalidParameter(format!(
                "subspace matrices must be square and equal-sized, got {:?} and {:?}",
                overlap.shape(),
                hamiltonian.shape()
            )));
        }
        Ok(Self {
            overlap: symmetrize(&overlap),
            hamiltonian: symmetrize(&hamiltonian),
        })
    }

    pub fn dim(&self) -> usize {
        self.overlap.nrows()
    }

    /// Restriction to the listed indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            overlap: select(&self.overlap, indices),
            hamiltonian: select(&self.hamiltonian, indices),
        }
    }

    /// `C^dagger S C`.
    pub fn s_norm_sqr(&self, c: &[Complex64]) -> f64 {
        quadratic_form(&self.overlap, c)
    }
}

/// `(A + A^dagger) / 2`.
pub fn symmetrize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

fn select(a: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

fn quadratic_form(a: &CMatrix, c: &[Complex64]) -> f64 {
    let mut acc = Complex64::default();
    for i in 0..c.len() {
        for j in 0..c.len() {
            acc += c[i].conj() * a[(i, j)] * c[j];
        }
    }
    acc.re
}

/// Lower-triangular factor over the columns that survived, plus the columns
/// flagged as (nearly) linearly dependent on earlier ones.
#[derive(Clone, Debug)]
pub struct CholeskyResult {
    pub factor: CMatrix,
    /// Original column indices of the rows/columns of `factor`.
    pub kept: Vec<usize>,
    pub dependent: Vec<usize>,
    pub threshold: f64,
    /// Residual pivot of each flagged column, same order as `dependent`.
    pub dependent_pivots: Vec<f64>,
}

impl CholeskyResult {
    pub fn is_full_rank(&self) -> bool {
        self.dependent.is_empty()
    }
}

/// Column-ordered Cholesky that flags dependent columns instead of failing.
///
/// Column `j` is flagged when its residual pivot, after projecting out the
/// columns already accepted, is at most `threshold * S_jj`. Flagged columns
/// are left out of the factor. A pivot below
/// `-NEGATIVE_PIVOT_TOLERANCE * S_jj` means
/// the input is not positive semidefinite.
pub fn thresholded_cholesky(s: &CMatrix, threshold: f64) -> Result<CholeskyResult> {
    if !s.is_square() {
        return Err(Error::InvalidParameter(
            "overlap matrix must be square".into(),
        ));
    }
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!(
            "dependency threshold must lie in [0, 1), got {threshold}"
        )));
    }
    let n = s.nrows();
    // rows of the factor for accepted columns, indexed by position in `kept`
    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut kept = Vec::with_capacity(n);
    let mut dependent = Vec::new();
    let mut dependent_pivots = Vec::new();

    for j in 0..n {
        let scale = s[(j, j)].re;
        let mut row = Vec::with_capacity(kept.len() + 1);
        for (r, &kr) in kept.iter().enumerate() {
            let mut v = s[(j, kr)];
            for (q, lq) in row.iter().enumerate() {
                let lrq: Complex64 = rows[r][q];
                v -= *lq * lrq.conj();
            }
            row.push(v / rows[r][r]);
        }
        let pivot = scale - row.iter().map(|l| l.norm_sqr()).sum::<f64>();
        if pivot < -NEGATIVE_PIVOT_TOLERANCE * scale.abs() || !pivot.is_finite() {
            return Err(Error::NotPositiveSemidefinite { index: j, pivot });
        }
        if pivot <= threshold * scale {
            dependent.push(j);
            dependent_pivots.push(pivot);
            continue;
        }
        row.push(Complex64::new(pivot.sqrt(), 0.0));
        rows.push(row);
        kept.push(j);
    }

    let k = kept.len();
    let factor = CMatrix::from_fn(k, k, |i, j| {
        if j <= i {
            rows[i][j]
        } else {
            Complex64::default()
        }
    });
    Ok(CholeskyResult {
        factor,
        kept,
        dependent,
        threshold,
        dependent_pivots,
    })
}

/// Eigendecomposition `A = Q diag(values) Q^dagger` of a Hermitian matrix by
/// cyclic complex Jacobi rotations. Eigenvalues come back ascending.
pub fn hermitian_eig(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !a.is_square() {
        return Err(Error::InvalidParameter("matrix must be square".into()));
    }
    let n = a.nrows();
    let mut m = symmetrize(a);
    let mut q = CMatrix::identity(n, n);
    let total: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let tol = (f64::EPSILON * f64::EPSILON) * total;

    let mut converged = n < 2;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum();
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                rotate(&mut m, &mut q, p, r);
            }
        }
    }
    if !converged {
        return Err(Error::EigenConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[(x, x)].re.total_cmp(&m[(y, y)].re));
    let values = order.iter().map(|&k| m[(k, k)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| q[(i, order[j])]);
    Ok((values, vectors))
}

/// One Jacobi rotation zeroing `m[(p, r)]`.
fn rotate(m: &mut CMatrix, q: &mut CMatrix, p: usize, r: usize) {
    let g = m[(p, r)];
    let abs_g = g.norm();
    if abs_g == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let arr = m[(r, r)].re;
    // phase making the pivot real, then a real symmetric rotation
    let phase = g / abs_g;
    let theta = (arr - app) / (2.0 * abs_g);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // J = [[c, s], [-s conj(phase), c conj(phase)]] on (p, r)
    let jpp = Complex64::new(c, 0.0);
    let jpr = Complex64::new(s, 0.0);
    let jrp = -phase.conj() * s;
    let jrr = phase.conj() * c;

    let n = m.nrows();
    // M <- M J
    for k in 0..n {
        let mp = m[(k, p)];
        let mr = m[(k, r)];
        m[(k, p)] = mp * jpp + mr * jrp;
        m[(k, r)] = mp * jpr + mr * jrr;
    }
    // M <- J^dagger M
    for k in 0..n {
        let mp = m[(p, k)];
        let mr = m[(r, k)];
        m[(p, k)] = jpp.conj() * mp + jrp.conj() * mr;
        m[(r, k)] = jpr.conj() * mp + jrr.conj() * mr;
    }
    m[(p, r)] = Complex64::default();
    m[(r, p)] = Complex64::default();
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(r, r)] = Complex64::new(m[(r, r)].re, 0.0);
    // Q <- Q J
    for k in 0..n {
        let qp = q[(k, p)];
        let qr = q[(k, r)];
        q[(k, p)] = qp * jpp + qr * jrp;
        q[(k, r)] = qp * jpr + qr * jrr;
    }
}

/// Solves `L x = b` for lower-triangular `L`.
fn forward_solve(l: &CMatrix, b: &[Complex64]) -> Vec<Complex64> {
    let n = l.nrows();
    let mut x = vec![Complex64::default(); n];
    for i in 0..n {
        let mut v = b[i];
        for j in 0..i {
            v -= l[(i, j)] * x[j];
        }
        x[i] = v / l[(i, i)];
    }
    x
}

/// Solves `L^dagger x = b` for lower-triangular `L`.
fn backward_solve_adjoint(l: &CMatrix, b: &[Complex64]) -> Vec<Complex64> {
    let n = l.nrows();
    let mut x = vec![Complex64::default(); n];
    for i in (0..n).rev() {
        let mut v = b[i];
        for j in i + 1..n {
            v -= l[(j, i)].conj() * x[j];
        }
        x[i] = v / l[(i, i)].conj();
    }
    x
}

/// Congruence-transformed generator `A = L^-1 H L^-dagger`, symmetrized.
fn congruent_generator(l: &CMatrix, h: &CMatrix) -> CMatrix {
    let n = l.nrows();
    // X = L^-1 H, column by column
    let mut x = CMatrix::zeros(n, n);
    for j in 0..n {
        let col: Vec<Complex64> = h.column(j).iter().copied().collect();
        let sol = forward_solve(l, &col);
        for i in 0..n {
            x[(i, j)] = sol[i];
        }
    }
    // A = X L^-dagger  <=>  A^dagger = L^-1 X^dagger
    let xd = x.adjoint();
    let mut ad = CMatrix::zeros(n, n);
    for j in 0..n {
        let col: Vec<Complex64> = xd.column(j).iter().copied().collect();
        let sol = forward_solve(l, &col);
        for i in 0..n {
            ad[(i, j)] = sol[i];
        }
    }
    symmetrize(&ad.adjoint())
}

/// Exact propagator of `i hbar S dC/dt = H C` over time `dt`.
///
/// `S` must be positive definite; dependent columns have to be removed by the
/// caller beforehand (they surface here as [`Error::SingularOverlap`]).
pub fn evolve_subspace(sys: &SubspaceSystem, c0: &[Complex64], dt: f64) -> Result<Vec<Complex64>> {
    evolve_subspace_with_threshold(sys, c0, dt, 0.0)
}

/// [`evolve_subspace`] rejecting any pivot at or below `threshold`.
pub fn evolve_subspace_with_threshold(
    sys: &SubspaceSystem,
    c0: &[Complex64],
    dt: f64,
    threshold: f64,
) -> Result<Vec<Complex64>> {
    let n = sys.dim();
    if c0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: c0.len(),
        });
    }
    let chol = thresholded_cholesky(&sys.overlap, threshold)?;
    if let (Some(&index), Some(&pivot)) = (chol.dependent.first(), chol.dependent_pivots.first()) {
        return Err(Error::SingularOverlap { index, pivot });
    }
    let l = &chol.factor;
    let a = congruent_generator(l, &sys.hamiltonian);
    let (values, q) = hermitian_eig(&a)?;

    // y = Q^dagger L^dagger C0
    let lc: Vec<Complex64> = (0..n)
        .map(|i| (i..n).map(|j| l[(j, i)].conj() * c0[j]).sum())
        .collect();
    let mut y: Vec<Complex64> = (0..n)
        .map(|k| (0..n).map(|i| q[(i, k)].conj() * lc[i]).sum())
        .collect();
    for (yk, e) in y.iter_mut().zip(&values) {
        *yk *= Complex64::from_polar(1.0, -e * dt / HBAR);
    }
    let z: Vec<Complex64> = (0..n)
        .map(|i| (0..n).map(|k| q[(i, k)] * y[k]).sum())
        .collect();
    Ok(backward_solve_adjoint(l, &z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real(rows: usize, vals: &[f64]) -> CMatrix {
        CMatrix::from_row_slice(
            rows,
            rows,
            &vals.iter().map(|&v| c(v, 0.0)).collect::<Vec<_>>(),
        )
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let m = CMatrix::from_fn(n, n, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        symmetrize(&m)
    }

    /// Gram matrix of `n` random normalized vectors in dimension `dim`.
    fn random_overlap(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let mut vecs = CMatrix::from_fn(dim, n, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        for mut col in vecs.column_iter_mut() {
            let norm = col.norm();
            col /= c(norm, 0.0);
        }
        let g = vecs.adjoint() * vecs;
        let mut g = symmetrize(&g);
        for i in 0..n {
            g[(i, i)] = c(1.0, 0.0);
        }
        g
    }

    fn random_coeffs(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        (0..n)
            .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn cholesky_identity() {
        let r = thresholded_cholesky(&CMatrix::identity(4, 4), 1e-10).unwrap();
        assert!(r.is_full_rank());
        assert_eq!(r.factor, CMatrix::identity(4, 4));
    }

    #[test]
    fn cholesky_flags_duplicate() {
        let r = thresholded_cholesky(&real(2, &[1.0, 1.0, 1.0, 1.0]), 1e-10).unwrap();
        assert_eq!(r.dependent, vec![1]);
        assert_eq!(r.kept, vec![0]);
    }

    #[test]
    fn cholesky_two_by_two() {
        let r = thresholded_cholesky(&real(2, &[1.0, 0.5, 0.5, 1.0]), 1e-10).unwrap();
        assert!(r.is_full_rank());
        let want = real(2, &[1.0, 0.0, 0.5, 0.75f64.sqrt()]);
        assert!((r.factor - want).camax() < 1e-15);
    }

    #[test]
    fn cholesky_skips_dependent_middle_column() {
        // columns: e1, e1 again, e2
        let s = real(3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let r = thresholded_cholesky(&s, 1e-10).unwrap();
        assert_eq!(r.dependent, vec![1]);
        assert_eq!(r.kept, vec![0, 2]);
        assert!((r.factor.clone() - CMatrix::identity(2, 2)).camax() < 1e-15);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let err = thresholded_cholesky(&real(2, &[1.0, 2.0, 2.0, 1.0]), 1e-10).unwrap_err();
        assert!(matches!(
            err,
            Error::NotPositiveSemidefinite { index: 1, .. }
        ));
        assert!(thresholded_cholesky(&CMatrix::identity(2, 2), 1.5).is_err());
    }

    #[test]
    fn cholesky_reconstructs_pd_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 2..=10 {
            let s = random_overlap(n, 2 * n, &mut rng);
            let r = thresholded_cholesky(&s, 0.0).unwrap();
            assert!(r.is_full_rank());
            let ll = &r.factor * r.factor.adjoint();
            assert!((ll - &s).camax() <= 1e-10);
        }
    }

    #[test]
    fn eig_examples() {
        let (v, _) = hermitian_eig(&real(2, &[3.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(v, vec![1.0, 3.0]);

        let (v, q) = hermitian_eig(&real(2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // up to a phase: (1, -1)/sqrt2 and (1, 1)/sqrt2
        assert!(((q[(0, 0)] * q[(1, 0)].conj()).re + 0.5).abs() < 1e-15);
        assert!(((q[(0, 1)] * q[(1, 1)].conj()).re - 0.5).abs() < 1e-15);
        assert!((q[(0, 0)].norm() - s).abs() < 1e-15);
    }

    #[test]
    fn eig_round_trip_complex() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in [1, 2, 3, 6, 12, 16] {
            let a = random_hermitian(n, &mut rng);
            let (vals, q) = hermitian_eig(&a).unwrap();
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            let lam = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                n,
                vals.iter().map(|&v| c(v, 0.0)),
            ));
            let scale = a.camax();
            assert!((&a * &q - &q * &lam).camax() <= 1e-10 * scale);
            assert!((q.adjoint() * &q - CMatrix::identity(n, n)).camax() <= 1e-12);
            assert!((&q * lam * q.adjoint() - &a).camax() <= 1e-11 * scale.max(1.0));
        }
    }

    #[test]
    fn evolve_decoupled_mode() {
        let sys = SubspaceSystem::new(
            CMatrix::identity(3, 3),
            real(3, &[0.5, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0]),
        )
        .unwrap();
        let c0 = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let got = evolve_subspace(&sys, &c0, 0.3).unwrap();
        assert!(
            max_diff(
                &got,
                &[Complex64::from_polar(1.0, -0.15), c(0.0, 0.0), c(0.0, 0.0)]
            ) < 1e-15
        );
        assert!(max_diff(&evolve_subspace(&sys, &c0, 0.0).unwrap(), &c0) < 1e-15);
    }

    #[test]
    fn evolve_rejects_singular_overlap() {
        let sys =
            SubspaceSystem::new(real(2, &[1.0, 1.0, 1.0, 1.0]), CMatrix::identity(2, 2)).unwrap();
        let err = evolve_subspace_with_threshold(&sys, &[c(1.0, 0.0), c(0.0, 0.0)], 0.1, 1e-10)
            .unwrap_err();
        assert!(matches!(err, Error::SingularOverlap { index: 1, .. }));
        assert!(evolve_subspace(&sys, &[c(1.0, 0.0)], 0.1).is_err());
    }

    /// Classical fourth-order Runge-Kutta on dC/dt = -i S^-1 H C, with S^-1 H
    /// formed by nalgebra's LU so no code is shared with the solver.
    fn rk4_oracle(
        sys: &SubspaceSystem,
        c0: &[Complex64],
        dt: f64,
        substeps: usize,
    ) -> Vec<Complex64> {
        let n = sys.dim();
        let gen = sys.overlap.clone().lu().solve(&sys.hamiltonian).unwrap() * c(0.0, -1.0 / HBAR);
        let mut y = nalgebra::DVector::from_column_slice(c0);
        let h = c(dt / substeps as f64, 0.0);
        let half = c(0.5, 0.0);
        for _ in 0..substeps {
            let k1 = &gen * &y;
            let k2 = &gen * (&y + &k1 * (h * half));
            let k3 = &gen * (&y + &k2 * (h * half));
            let k4 = &gen * (&y + &k3 * h);
            y += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * (h / c(6.0, 0.0));
        }
        assert_eq!(y.len(), n);
        y.as_slice().to_vec()
    }

    #[test]
    fn evolve_matches_runge_kutta() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..3 {
            let sys = SubspaceSystem::new(
                random_overlap(4, 6, &mut rng),
                random_hermitian(4, &mut rng),
            )
            .unwrap();
            let c0 = random_coeffs(4, &mut rng);
            let got = evolve_subspace(&sys, &c0, 0.7).unwrap();
            let want = rk4_oracle(&sys, &c0, 0.7, 10_000);
            assert!(max_diff(&got, &want) < 1e-8, "{}", max_diff(&got, &want));
        }
    }

    #[test]
    fn evolve_conserves_s_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for k in 0..100 {
            let n = 2 + k % 11;
            let sys = SubspaceSystem::new(
                random_overlap(n, n + 4, &mut rng),
                random_hermitian(n, &mut rng),
            )
            .unwrap();
            let c0 = random_coeffs(n, &mut rng);
            let dt: f64 = rng.random_range(-2.0..2.0);
            let got = evolve_subspace(&sys, &c0, dt).unwrap();
            let before = sys.s_norm_sqr(&c0);
            let after = sys.s_norm_sqr(&got);
            assert!(
                (after - before).abs() <= 1e-12 * before,
                "n={n}: {before} -> {after}"
            );
        }
    }

    #[test]
    fn evolve_group_and_reversibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in [2, 5, 9] {
            let sys = SubspaceSystem::new(
                random_overlap(n, n + 3, &mut rng),
                random_hermitian(n, &mut rng),
            )
            .unwrap();
            let c0 = random_coeffs(n, &mut rng);
            let once = evolve_subspace(&sys, &c0, 0.4).unwrap();
            let twice = evolve_subspace(&sys, &once, 0.4).unwrap();
            let direct = evolve_subspace(&sys, &c0, 0.8).unwrap();
            let scale = c0.iter().map(|z| z.norm()).fold(1.0, f64::max);
            assert!(max_diff(&twice, &direct) <= 1e-10 * scale);
            let back = evolve_subspace(&sys, &once, -0.4).unwrap();
            assert!(max_diff(&back, &c0) <= 1e-10 * scale);
        }
    }

    #[test]
    fn subspace_system_shape_checks() {
        assert!(SubspaceSystem::new(CMatrix::identity(2, 2), CMatrix::identity(3, 3)).is_err());
        let sys = SubspaceSystem::new(CMatrix::identity(3, 3), CMatrix::identity(3, 3)).unwrap();
        assert_eq!(sys.select(&[2, 0]).dim(), 2);
    }
}

//! Dense Hermitian matrices used as exact test oracles.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::state::{HermitianOperator, MatvecCounter, WaveState};

/// A dense Hermitian matrix acting as a [`HermitianOperator`].
pub struct DenseHermitianOracle {
    matrix: DMatrix<Complex64>,
    counter: MatvecCounter,
}

impl DenseHermitianOracle {
    /// Builds the oracle, replacing `matrix` by `(M + M^dagger) / 2`.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidParameter(format!(
                "oracle matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let sym = (&matrix + matrix.adjoint()).scale(0.5);
        Ok(Self::new_unchecked(sym))
    }

    /// Skips Hermitian symmetrization. Exists so that verification
    /// harnesses can run negative controls.
    #[doc(hidden)]
    pub fn new_unchecked(matrix: DMatrix<Complex64>) -> Self {
        Self {
            matrix,
            counter: MatvecCounter::new(),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Self::new(DMatrix::from_diagonal(&d))
    }

    /// Random Hermitian matrix with entries drawn from a complex normal
    /// distribution, rescaled so its spectral radius equals `radius`.
    pub fn random<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Result<Self> {
        let m = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let herm = (&m + m.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(herm.clone());
        let rho = eig.eigenvalues.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        Self::new(herm.scale(radius / rho))
    }

    /// Reads a plain-text matrix: first token `n`, then `n^2`
    /// whitespace-separated `re im` pairs in row-major order.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let n: usize = tokens
            .next()
            .ok_or_else(|| Error::Parse("missing dimension".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("dimension: {e}")))?;
        let mut values = Vec::with_capacity(n * n);
        for k in 0..n * n {
            let mut next = |part: &str| -> Result<f64> {
                tokens
                    .next()
                    .ok_or_else(|| Error::Parse(format!("entry {k}: missing {part} part")))?
                    .parse()
                    .map_err(|e| Error::Parse(format!("entry {k} {part}: {e}")))
            };
            let re = next("real")?;
            let im = next("imaginary")?;
            values.push(Complex64::new(re, im));
        }
        if tokens.next().is_some() {
            return Err(Error::Parse(format!(
                "trailing data after {} entries",
                n * n
            )));
        }
        Self::new(DMatrix::from_row_slice(n, n, &values))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let n = self.matrix.nrows();
        let mut out = format!("{n}\n");
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| {
                    let z = self.matrix[(i, j)];
                    format!("{:e} {:e}", z.re, z.im)
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Largest `|M_ij - conj(M_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Gershgorin interval enclosing every eigenvalue.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let n = self.matrix.nrows();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let center = self.matrix[(i, i)].re;
            let radius: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| self.matrix[(i, j)].norm())
                .sum();
            lo = lo.min(center - radius);
            hi = hi.max(center + radius);
        }
        (lo, hi)
    }

    /// Ascending eigenvalues and matching eigenvectors (as columns).
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.matrix.nrows(), order.len(), |i, j| {
            eig.eigenvectors[(i, order[j])]
        });
        (values, vectors)
    }

    /// `exp(-i M t) psi` through the full eigendecomposition of `M`.
    pub fn exact_evolve(&self, psi: &WaveState, t: f64) -> Result<WaveState> {
        self.check_dim(psi)?;
        let eig = SymmetricEigen::try_new(self.matrix.clone(), f64::EPSILON, 0)
            .ok_or(Error::EigenConvergence { sweeps: 0 })?;
        let v = DVector::from_column_slice(psi.amplitudes());
        let mut coeffs = eig.eigenvectors.adjoint() * v;
        for (c, e) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
            *c *= Complex64::from_polar(1.0, -e * t);
        }
        let out = &eig.eigenvectors * coeffs;
        WaveState::new(out.as_slice().to_vec())
    }

    fn check_dim(&self, psi: &WaveState) -> Result<()> {
        if psi.dim() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                found: psi.dim(),
            });
        }
        Ok(())
    }
}

/// Free-function form of [`DenseHermitianOracle::exact_evolve`].
pub fn exact_evolve_dense(m: &DenseHermitianOracle, psi: &WaveState, t: f64) -> Result<WaveState> {
    m.exact_evolve(psi, t)
}

impl HermitianOperator for DenseHermitianOracle {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, psi: &WaveState) -> Result<WaveState> {
        self.check_dim(psi)?;
        let v = DVector::from_column_slice(psi.amplitudes());
        let out = &self.matrix * v;
        self.counter.increment();
        WaveState::new(out.as_slice().to_vec())
    }

    fn matvecs(&self) -> u64 {
        self.counter.get()
    }

    fn reset_matvecs(&self) {
        self.counter.reset()
    }
}

//! Wave-function vectors and the Hamiltonian application contract.
//!
//! Inner products are conjugate-linear in the first argument and carry no
//! grid measure: states are normalized in the plain l2 sense.

use std::ops::{Index, IndexMut};
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex amplitude vector on a flattened grid or an abstract basis.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    amplitudes: Vec<Complex64>,
}

impl WaveState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidParameter(
                "state dimension must be >= 1".into(),
            ));
        }
        Ok(Self { amplitudes })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "state dimension must be >= 1");
        Self {
            amplitudes: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// Unit vector along axis `index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut s = Self::zeros(dim);
        s.amplitudes[index] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(self)
    }

    pub fn scale(&mut self, factor: Complex64) {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    /// Normalizes in place and returns the norm it had before.
    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroState);
        }
        let inv = 1.0 / n;
        for a in &mut self.amplitudes {
            *a *= inv;
        }
        Ok(n)
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: Complex64, other: &WaveState) -> Result<()> {
        check_dims(self, other)?;
        for (a, b) in self.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += alpha * b;
        }
        Ok(())
    }

    /// Euclidean distance `||self - other||`.
    pub fn distance(&self, other: &WaveState) -> Result<f64> {
        check_dims(self, other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }
}

impl Index<usize> for WaveState {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.amplitudes[i]
    }
}

impl IndexMut<usize> for WaveState {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.amplitudes[i]
    }
}

fn check_dims(u: &WaveState, v: &WaveState) -> Result<()> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    Ok(())
}

/// `<u|v> = sum conj(u_j) v_j`.
pub fn inner(u: &WaveState, v: &WaveState) -> Result<Complex64> {
    check_dims(u, v)?;
    Ok(u.amplitudes
        .iter()
        .zip(&v.amplitudes)
        .map(|(a, b)| a.conj() * b)
        .sum())
}

pub fn norm(v: &WaveState) -> f64 {
    v.amplitudes
        .iter()
        .map(|a| a.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `sum_j coeffs[j] * states[j]`.
pub fn linear_combination<S: AsRef<WaveState>>(
    coeffs: &[Complex64],
    states: &[S],
) -> Result<WaveState> {
    if coeffs.len() != states.len() {
        return Err(Error::LengthMismatch {
            coeffs: coeffs.len(),
            states: states.len(),
        });
    }
    let first = states.first().ok_or(Error::Empty)?.as_ref();
    let mut out = WaveState::zeros(first.dim());
    for (c, s) in coeffs.iter().zip(states) {
        out.axpy(*c, s.as_ref())?;
    }
    Ok(out)
}

impl AsRef<WaveState> for WaveState {
    fn as_ref(&self) -> &WaveState {
        self
    }
}

/// Thread-safe count of Hamiltonian applications.
#[derive(Debug, Default)]
pub struct MatvecCounter(AtomicU64);

impl MatvecCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn increment(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.0.store(0, Ordering::Relaxed);
    }
}

/// A Hermitian operator that can be applied to states.
///
/// Every successful call to [`apply`](HermitianOperator::apply) increments
/// the operator's matvec counter by exactly one. Implementations must be
/// reentrant.
pub trait HermitianOperator: Sync {
    fn dim(&self) -> usize;

    fn apply(&self, psi: &WaveState) -> Result<WaveState>;

    fn matvecs(&self) -> u64;

    fn reset_matvecs(&self);
}

impl<T: HermitianOperator + ?Sized> HermitianOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, psi: &WaveState) -> Result<WaveState> {
        (**self).apply(psi)
    }

    fn matvecs(&self) -> u64 {
        (**self).matvecs()
    }

    fn reset_matvecs(&self) {
        (**self).reset_matvecs()
    }
}

/// `H = 0`, useful as a degenerate test case.
#[derive(Debug, Default)]
pub struct ZeroOperator {
    dim: usize,
    counter: MatvecCounter,
}

impl ZeroOperator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            counter: MatvecCounter::new(),
        }
    }
}

impl HermitianOperator for ZeroOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, psi: &WaveState) -> Result<WaveState> {
        if psi.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: psi.dim(),
            });
        }
        self.counter.increment();
        Ok(WaveState::zeros(self.dim))
    }

    fn matvecs(&self) -> u64 {
        self.counter.get()
    }

    fn reset_matvecs(&self) {
        self.counter.reset()
    }
}

//! Spectral-grid Hamiltonian for a particle in the Henon-Heiles potential.
//!
//! The kinetic term is applied in momentum space: forward 2D DFT, multiply by
//! `k^2 / 2m`, inverse 2D DFT. Boundaries are periodic.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::state::{HermitianOperator, MatvecCounter, WaveState};

/// Uniform periodic grid. The right endpoint of each axis is excluded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for Grid2D {
    fn default() -> Self {
        Self {
            nx: 64,
            ny: 64,
            x_min: -10.0,
            x_max: 10.0,
            y_min: -10.0,
            y_max: 10.0,
        }
    }
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        let g = Self {
            nx,
            ny,
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 points per axis, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.x_max > self.x_min) || !(self.y_max > self.y_min) {
            return Err(Error::InvalidParameter(
                "grid bounds must be increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.dx()
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.y_min + iy as f64 * self.dy()
    }

    /// Flattened index; `y` runs fastest.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny + iy
    }

    /// Periodic wavenumbers in DFT bin order: bins `0..n/2` hold
    /// `0, 1, ..., n/2 - 1` and bins `n/2..n` hold `-n/2, ..., -1`, all scaled
    /// by `2 pi / (n d)`.
    pub fn wavenumbers(n: usize, spacing: f64) -> Vec<f64> {
        let scale = 2.0 * PI / (n as f64 * spacing);
        (0..n)
            .map(|j| {
                let signed = if j < n / 2 {
                    j as isize
                } else {
                    j as isize - n as isize
                };
                signed as f64 * scale
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HenonHeilesParams {
    pub omega_x: f64,
    pub omega_y: f64,
    pub lambda: f64,
    pub eta: f64,
    pub mass: f64,
}

impl Default for HenonHeilesParams {
    fn default() -> Self {
        Self {
            omega_x: 1.3,
            omega_y: 0.7,
            lambda: -0.1,
            eta: 0.1,
            mass: 1.0,
        }
    }
}

impl HenonHeilesParams {
    /// Free particle (all potential terms zero).
    pub fn free() -> Self {
        Self {
            omega_x: 0.0,
            omega_y: 0.0,
            lambda: 0.0,
            eta: 0.0,
            mass: 1.0,
        }
    }
}

/// `v(x, y) = (wx^2 x^2 + wy^2 y^2) / 2 + lambda y (x^2 + eta y^2)`
pub fn henon_heiles_potential(x: f64, y: f64, p: &HenonHeilesParams) -> f64 {
    0.5 * (p.omega_x * p.omega_x * x * x + p.omega_y * p.omega_y * y * y)
        + p.lambda * y * (x * x + p.eta * y * y)
}

/// Gaussian wave packet description.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Packet {
    pub center: (f64, f64),
    pub momentum: (f64, f64),
    pub width: (f64, f64),
}

impl Default for Packet {
    fn default() -> Self {
        Self {
            center: (2.0, 2.0),
            momentum: (0.0, 0.0),
            width: (1.0, 1.0),
        }
    }
}

/// Normalized Gaussian `exp(-(x-x0)^2/2sx^2 - (y-y0)^2/2sy^2 + i(px x + py y))`.
pub fn gaussian_packet(g: &Grid2D, packet: &Packet) -> Result<WaveState> {
    g.validate()?;
    let (sx, sy) = packet.width;
    if !(sx > 0.0 && sy > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "packet width must be positive, got ({sx}, {sy})"
        )));
    }
    let (x0, y0) = packet.center;
    if !(g.x_min..g.x_max).contains(&x0) || !(g.y_min..g.y_max).contains(&y0) {
        return Err(Error::InvalidParameter(format!(
            "packet center ({x0}, {y0}) lies outside the grid"
        )));
    }
    let (px, py) = packet.momentum;
    let mut amps = Vec::with_capacity(g.len());
    for ix in 0..g.nx {
        let x = g.x(ix);
        for iy in 0..g.ny {
            let y = g.y(iy);
            let envelope =
                (-(x - x0).powi(2) / (2.0 * sx * sx) - (y - y0).powi(2) / (2.0 * sy * sy)).exp();
            amps.push(Complex64::from_polar(envelope, px * x + py * y));
        }
    }
    let mut psi = WaveState::new(amps)?;
    psi.normalize()?;
    Ok(psi)
}

/// `(<x>, <y>)` as discrete sums over the grid.
pub fn position_expectation(g: &Grid2D, psi: &WaveState) -> Result<(f64, f64)> {
    check_grid_dim(g, psi)?;
    let (mut sx, mut sy, mut total) = (0.0, 0.0, 0.0);
    for ix in 0..g.nx {
        for iy in 0..g.ny {
            let w = psi[g.index(ix, iy)].norm_sqr();
            sx += w * g.x(ix);
            sy += w * g.y(iy);
            total += w;
        }
    }
    Ok((sx / total, sy / total))
}

/// `(<p_x>, <p_y>)` from the DFT of the state.
pub fn momentum_expectation(g: &Grid2D, psi: &WaveState) -> Result<(f64, f64)> {
    check_grid_dim(g, psi)?;
    let fft = Fft2D::new(g.nx, g.ny);
    let mut buf = psi.amplitudes().to_vec();
    let mut scratch = fft.scratch();
    fft.forward(&mut buf, &mut scratch);
    // forward() leaves the spectrum transposed: index = ky_bin * nx + kx_bin
    let kx = Grid2D::wavenumbers(g.nx, g.dx());
    let ky = Grid2D::wavenumbers(g.ny, g.dy());
    let (mut px, mut py, mut total) = (0.0, 0.0, 0.0);
    for (jy, &ky) in ky.iter().enumerate() {
        for (jx, &kx) in kx.iter().enumerate() {
            let w = buf[jy * g.nx + jx].norm_sqr();
            px += w * kx;
            py += w * ky;
            total += w;
        }
    }
    Ok((px / total, py / total))
}

fn check_grid_dim(g: &Grid2D, psi: &WaveState) -> Result<()> {
    if psi.dim() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: g.len(),
            found: psi.dim(),
        });
    }
    Ok(())
}

/// Enclosing interval for the spectrum of the discrete Hamiltonian.
///
/// Lower end is the grid minimum of the potential, upper end the grid
/// maximum plus the largest kinetic energy on each axis. Both ends are then
/// widened by 5% of the range.
pub fn spectral_bounds(g: &Grid2D, p: &HenonHeilesParams) -> (f64, f64) {
    let (lo, hi) = raw_spectral_bounds(g, p);
    let margin = 0.05 * (hi - lo);
    (lo - margin, hi + margin)
}

/// [`spectral_bounds`] before the 5% widening.
pub fn raw_spectral_bounds(g: &Grid2D, p: &HenonHeilesParams) -> (f64, f64) {
    let mut vmin = f64::INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    for ix in 0..g.nx {
        for iy in 0..g.ny {
            let v = henon_heiles_potential(g.x(ix), g.y(iy), p);
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
    }
    let tx = (PI / g.dx()).powi(2) / (2.0 * p.mass);
    let ty = (PI / g.dy()).powi(2) / (2.0 * p.mass);
    (vmin, vmax + tx + ty)
}

/// Row/column 2D transform built from 1D rustfft plans.
struct Fft2D {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl Fft2D {
    fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        }
    }

    fn scratch(&self) -> Scratch {
        let len = [&self.fwd_x, &self.inv_x, &self.fwd_y, &self.inv_y]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Scratch {
            fft: vec![Complex64::default(); len],
            transpose: vec![Complex64::default(); self.nx * self.ny],
        }
    }

    /// Input laid out `[ix][iy]`; output spectrum laid out `[ky][kx]`.
    fn forward(&self, data: &mut [Complex64], s: &mut Scratch) {
        self.fwd_y.process_with_scratch(data, &mut s.fft);
        transpose(data, &mut s.transpose, self.nx, self.ny);
        self.fwd_x
            .process_with_scratch(&mut s.transpose, &mut s.fft);
        data.copy_from_slice(&s.transpose);
    }

    /// Inverse of [`forward`](Self::forward), unnormalized.
    fn inverse(&self, data: &mut [Complex64], s: &mut Scratch) {
        self.inv_x.process_with_scratch(data, &mut s.fft);
        transpose(data, &mut s.transpose, self.ny, self.nx);
        self.inv_y
            .process_with_scratch(&mut s.transpose, &mut s.fft);
        data.copy_from_slice(&s.transpose);
    }
}

struct Scratch {
    fft: Vec<Complex64>,
    transpose: Vec<Complex64>,
}

/// `src` is `rows x cols` row-major; `dst` becomes `cols x rows`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

/// `H = T + V` on a periodic grid.
pub struct GridHamiltonian {
    grid: Grid2D,
    params: HenonHeilesParams,
    potential: Vec<f64>,
    // k^2/2m in the transposed `[ky][kx]` layout, with the 1/(nx ny)
    // inverse-DFT normalization folded in
    kinetic: Vec<f64>,
    fft: Fft2D,
    counter: MatvecCounter,
}

impl GridHamiltonian {
    pub fn new(grid: Grid2D, params: HenonHeilesParams) -> Result<Self> {
        grid.validate()?;
        if !(params.mass > 0.0) {
            return Err(Error::InvalidParameter("mass must be positive".into()));
        }
        let mut potential = Vec::with_capacity(grid.len());
        for ix in 0..grid.nx {
            for iy in 0..grid.ny {
                potential.push(henon_heiles_potential(grid.x(ix), grid.y(iy), &params));
            }
        }
        let kx = Grid2D::wavenumbers(grid.nx, grid.dx());
        let ky = Grid2D::wavenumbers(grid.ny, grid.dy());
        let norm = 1.0 / grid.len() as f64;
        let mut kinetic = Vec::with_capacity(grid.len());
        for ky in &ky {
            for kx in &kx {
                kinetic.push((kx * kx + ky * ky) / (2.0 * params.mass) * norm);
            }
        }
        Ok(Self {
            fft: Fft2D::new(grid.nx, grid.ny),
            grid,
            params,
            potential,
            kinetic,
            counter: MatvecCounter::new(),
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn params(&self) -> &HenonHeilesParams {
        &self.params
    }

    pub fn spectral_bounds(&self) -> (f64, f64) {
        spectral_bounds(&self.grid, &self.params)
    }
}

impl HermitianOperator for GridHamiltonian {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, psi: &WaveState) -> Result<WaveState> {
        check_grid_dim(&self.grid, psi)?;
        let mut scratch = self.fft.scratch();
        let mut buf = psi.amplitudes().to_vec();
        self.fft.forward(&mut buf, &mut scratch);
        for (b, t) in buf.iter_mut().zip(&self.kinetic) {
            *b *= t;
        }
        self.fft.inverse(&mut buf, &mut scratch);
        for ((b, v), a) in buf.iter_mut().zip(&self.potential).zip(psi.amplitudes()) {
            *b += v * a;
        }
        self.counter.increment();
        WaveState::new(buf)
    }

    fn matvecs(&self) -> u64 {
        self.counter.get()
    }

    fn reset_matvecs(&self) {
        self.counter.reset()
    }
}

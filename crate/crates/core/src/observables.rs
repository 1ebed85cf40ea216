//! Autocorrelation, error metric, norm/energy tracking and the spectrum of
//! a sampled correlation function.

use std::f64::consts::PI;
use std::io::{self, BufRead, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::state::{inner, HermitianOperator, WaveState};

/// Relative tolerance on the sample spacing.
pub const SPACING_TOLERANCE: f64 = 1e-12;

/// Fewest samples [`spectrum`] accepts.
pub const MIN_SPECTRUM_SAMPLES: usize = 16;

/// Complex samples on a uniform, strictly increasing axis.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<Complex64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: values.len(),
            });
        }
        check_uniform(&times)?;
        Ok(Self { times, values })
    }

    /// Samples `values[k]` at `t0 + k * dt`.
    pub fn uniform(t0: f64, dt: f64, values: Vec<Complex64>) -> Result<Self> {
        let times = (0..values.len()).map(|k| t0 + k as f64 * dt).collect();
        Self::new(times, values)
    }

    pub fn empty() -> Self {
        Self {
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Appends a sample, keeping the spacing uniform.
    pub fn push(&mut self, t: f64, value: Complex64) -> Result<()> {
        self.times.push(t);
        if let Err(e) = check_uniform(&self.times) {
            self.times.pop();
            return Err(e);
        }
        self.values.push(value);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Sample spacing, if at least two samples exist.
    pub fn spacing(&self) -> Option<f64> {
        (self.len() >= 2)
            .then(|| (self.times[self.len() - 1] - self.times[0]) / (self.len() - 1) as f64)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// CSV with header `t,re,im` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,re,im")?;
        for (t, v) in self.iter() {
            writeln!(out, "{t:.16e},{:.16e},{:.16e}", v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?;
        if header.as_deref().map(str::trim) != Some("t,re,im") {
            return Err(Error::Parse("expected header t,re,im".into()));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", row + 1)))?;
            if fields.len() != 3 {
                return Err(Error::Parse(format!("row {}: expected 3 fields", row + 1)));
            }
            times.push(fields[0]);
            values.push(Complex64::new(fields[1], fields[2]));
        }
        Self::new(times, values)
    }
}

fn check_uniform(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample time".into()));
    }
    if times.len() < 2 {
        return Ok(());
    }
    let h = times[1] - times[0];
    if h <= 0.0 {
        return Err(Error::InvalidParameter("sample times must increase".into()));
    }
    let scale = times[0].abs().max(times[times.len() - 1].abs()).max(h);
    for (k, w) in times.windows(2).enumerate() {
        let d = w[1] - w[0];
        if d <= 0.0 {
            return Err(Error::InvalidParameter("sample times must increase".into()));
        }
        let expected = times[0] + (k + 1) as f64 * h;
        if (w[1] - expected).abs() > SPACING_TOLERANCE * scale * (k + 2) as f64
            && (d - h).abs() > SPACING_TOLERANCE * scale
        {
            return Err(Error::InvalidParameter(format!(
                "non-uniform spacing at sample {}",
                k + 1
            )));
        }
    }
    Ok(())
}

/// `<psi_t|psi_0>`.
pub fn autocorrelation(psi0: &WaveState, psi_t: &WaveState) -> Result<Complex64> {
    inner(psi_t, psi0)
}

/// The deficit `1 - <exact|numeric>` split into the readings worth logging.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorParts {
    /// `|1 - <exact|numeric>|`, the headline error.
    pub modulus: f64,
    /// `Re(1 - <exact|numeric>)`.
    pub re: f64,
    /// `Im(1 - <exact|numeric>)`.
    pub im: f64,
    /// `1 - |<exact|numeric>|`, blind to a global phase.
    pub phase_free: f64,
}

pub fn error_parts(exact: &WaveState, numeric: &WaveState) -> Result<ErrorParts> {
    let overlap = inner(exact, numeric)?;
    let deficit = Complex64::new(1.0, 0.0) - overlap;
    Ok(ErrorParts {
        modulus: deficit.norm(),
        re: deficit.re,
        im: deficit.im,
        phase_free: 1.0 - overlap.norm(),
    })
}

/// `|1 - <exact|numeric>|`.
pub fn error_metric(exact: &WaveState, numeric: &WaveState) -> Result<f64> {
    Ok(error_parts(exact, numeric)?.modulus)
}

/// `<psi|H|psi> / <psi|psi>`. Costs one application of `h`.
pub fn energy<H: HermitianOperator + ?Sized>(h: &H, psi: &WaveState) -> Result<f64> {
    let hpsi = h.apply(psi)?;
    let nrm = psi.norm();
    if nrm == 0.0 {
        return Err(Error::ZeroState);
    }
    Ok(inner(psi, &hpsi)?.re / (nrm * nrm))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    None,
    /// `cos(pi t / 2T)` taper over the record length `T`.
    Cosine,
}

/// Power spectrum `|sum_k w_k c(t_k) e^{i w t_k}|^2` on the frequencies
/// `2 pi j / (N dt)`, returned with an ascending (signed) frequency axis.
/// A component `e^{-iEt}` of the input shows up at `w = E`, so an energy
/// `E` in `<psi(t)|psi(0)>` appears at `w = -E`.
pub fn spectrum(ac: &TimeSeries, window: Window) -> Result<TimeSeries> {
    let n = ac.len();
    if n < MIN_SPECTRUM_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SPECTRUM_SAMPLES,
            found: n,
        });
    }
    let dt = ac.spacing().expect("at least two samples");
    let mut buf: Vec<Complex64> = ac
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| match window {
            Window::None => v,
            Window::Cosine => v * (PI * k as f64 / (2.0 * n as f64)).cos(),
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);

    let d_omega = 2.0 * PI / (n as f64 * dt);
    let half = n / 2;
    let mut omegas = Vec::with_capacity(n);
    let mut power = Vec::with_capacity(n);
    // bins n/2+1..n are the negative frequencies
    for j in (half + 1..n).chain(0..=half) {
        let signed = if j > half {
            j as f64 - n as f64
        } else {
            j as f64
        };
        omegas.push(signed * d_omega);
        power.push(Complex64::new(buf[j].norm_sqr(), 0.0));
    }
    // the phase reference sits at t_0; a shift only rotates the amplitudes
    TimeSeries::new(omegas, power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit(dim: usize, seed: u64) -> WaveState {
        let v: Vec<_> = (0..dim)
            .map(|k| {
                let x = ((k as u64 * 2654435761 + seed * 97) % 1000) as f64 / 1000.0;
                c(x - 0.5, (x * 7.0).sin())
            })
            .collect();
        let mut s = WaveState::new(v).unwrap();
        s.normalize().unwrap();
        s
    }

    #[test]
    fn autocorrelation_examples() {
        let psi = unit(8, 1);
        assert!((autocorrelation(&psi, &psi).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let rotated = psi.scaled(c(0.0, 1.0));
        assert!((autocorrelation(&psi, &rotated).unwrap() - c(0.0, -1.0)).norm() < 1e-15);
        let a = WaveState::basis(4, 0);
        let b = WaveState::basis(4, 2);
        assert_eq!(autocorrelation(&a, &b).unwrap(), c(0.0, 0.0));
        assert!(autocorrelation(&a, &WaveState::zeros(3)).is_err());
    }

    #[test]
    fn error_metric_examples() {
        let psi = unit(8, 2);
        assert!(error_metric(&psi, &psi).unwrap() < 1e-15);
        let a = WaveState::basis(3, 0);
        let b = WaveState::basis(3, 1);
        assert_eq!(error_metric(&a, &b).unwrap(), 1.0);
        let shifted = psi.scaled(Complex64::from_polar(1.0, 0.1));
        let expected = 2.0 * (0.05f64).sin();
        assert!((error_metric(&psi, &shifted).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 0.09996).abs() < 1e-5);
        let parts = error_parts(&psi, &shifted).unwrap();
        assert!(parts.phase_free.abs() < 1e-15);
        assert!((parts.re - (1.0 - 0.1f64.cos())).abs() < 1e-15);
        assert!((parts.im + 0.1f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn series_rejects_non_uniform_axis() {
        assert!(TimeSeries::new(vec![0.0, 1.0, 2.5], vec![c(0.0, 0.0); 3]).is_err());
        assert!(TimeSeries::new(vec![0.0, 0.0], vec![c(0.0, 0.0); 2]).is_err());
        assert!(TimeSeries::new(vec![0.0, 1.0], vec![c(0.0, 0.0); 3]).is_err());
        let mut s = TimeSeries::empty();
        for k in 0..1000 {
            s.push(k as f64 * 0.02, c(1.0, 0.0)).unwrap();
        }
        assert!(s.push(20.5, c(0.0, 0.0)).is_err());
        assert_eq!(s.len(), 1000);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = TimeSeries::uniform(
            0.0,
            0.02,
            (0..50)
                .map(|k| Complex64::from_polar(1.0, 0.3 * k as f64))
                .collect(),
        )
        .unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,re,im\n"));
        let back = TimeSeries::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn spectrum_of_single_exponential() {
        let n = 256;
        let dt = 0.05;
        let d_omega = 2.0 * PI / (n as f64 * dt);
        let e = 7.0 * d_omega;
        let ac = TimeSeries::uniform(
            0.0,
            dt,
            (0..n)
                .map(|k| Complex64::from_polar(1.0, -e * k as f64 * dt))
                .collect(),
        )
        .unwrap();
        let sp = spectrum(&ac, Window::None).unwrap();
        let (peak, _) = sp
            .iter()
            .max_by(|a, b| a.1.re.partial_cmp(&b.1.re).unwrap())
            .unwrap();
        assert!((peak - e).abs() < 1e-9);
        let top = sp.values().iter().map(|v| v.re).fold(0.0, f64::max);
        for (w, p) in sp.iter() {
            if (w - e).abs() > 1e-9 {
                assert!(top >= 100.0 * p.re);
            }
        }
    }

    #[test]
    fn spectrum_of_constant_is_zero_frequency() {
        let ac = TimeSeries::uniform(0.0, 0.1, vec![c(1.0, 0.0); 32]).unwrap();
        let sp = spectrum(&ac, Window::None).unwrap();
        for (w, p) in sp.iter() {
            if w == 0.0 {
                assert!((p.re - 1024.0).abs() < 1e-9);
            } else {
                assert!(p.re < 1e-20);
            }
        }
    }

    #[test]
    fn spectrum_of_two_phases() {
        let n = 400;
        let dt = 2.0 * PI / 100.0;
        let ac = TimeSeries::uniform(
            0.0,
            dt,
            (0..n)
                .map(|k| {
                    let t = k as f64 * dt;
                    Complex64::from_polar(1.0, -t) + Complex64::from_polar(1.0, -2.0 * t)
                })
                .collect(),
        )
        .unwrap();
        let sp = spectrum(&ac, Window::None).unwrap();
        let at = |omega: f64| {
            sp.iter()
                .find(|(w, _)| (w - omega).abs() < 1e-9)
                .map(|(_, p)| p.re)
                .unwrap()
        };
        let (p1, p2) = (at(1.0), at(2.0));
        assert!((p1 / p2 - 1.0).abs() < 0.01);
        for (w, p) in sp.iter() {
            if (w - 1.0).abs() > 1e-9 && (w - 2.0).abs() > 1e-9 {
                assert!(p.re < 1e-6 * p1);
            }
        }
    }

    #[test]
    fn cosine_window_keeps_peak() {
        let dt = 0.1;
        let n = 64;
        let e = 2.0 * PI * 5.0 / (n as f64 * dt);
        let ac = TimeSeries::uniform(
            0.0,
            dt,
            (0..n)
                .map(|k| Complex64::from_polar(1.0, -e * k as f64 * dt))
                .collect(),
        )
        .unwrap();
        let sp = spectrum(&ac, Window::Cosine).unwrap();
        let (peak, _) = sp
            .iter()
            .max_by(|a, b| a.1.re.partial_cmp(&b.1.re).unwrap())
            .unwrap();
        assert!((peak - e).abs() < 1e-9);
    }

    #[test]
    fn spectrum_needs_sixteen_samples() {
        let ac = TimeSeries::uniform(0.0, 0.1, vec![c(1.0, 0.0); 15]).unwrap();
        assert!(matches!(
            spectrum(&ac, Window::None),
            Err(Error::TooFewSamples {
                needed: 16,
                found: 15
            })
        ));
    }

    fn arb_state(dim: usize) -> impl Strategy<Value = WaveState> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
            .prop_filter("nonzero", |v| v.iter().any(|&(a, b)| a != 0.0 || b != 0.0))
            .prop_map(|v| {
                let mut s = WaveState::new(v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap();
                s.normalize().unwrap();
                s
            })
    }

    proptest! {
        #[test]
        fn autocorrelation_bounded(a in arb_state(12), b in arb_state(12)) {
            prop_assert!(autocorrelation(&a, &b).unwrap().norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn error_metric_phase_invariant(a in arb_state(10), b in arb_state(10), theta in -3.0f64..3.0) {
            let ph = Complex64::from_polar(1.0, theta);
            let e0 = error_metric(&a, &b).unwrap();
            let e1 = error_metric(&a.scaled(ph), &b.scaled(ph)).unwrap();
            prop_assert!((e0 - e1).abs() < 1e-12);
            prop_assert!(error_metric(&a, &a).unwrap() < 1e-15);
        }

        #[test]
        fn error_metric_below_distance(a in arb_state(10), b in arb_state(10)) {
            prop_assert!(error_metric(&a, &b).unwrap() <= a.distance(&b).unwrap() + 1e-12);
        }
    }
}

//! Propagation runs: stepping, reference checkpoints, matvec ledger and
//! output files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use varlanczos_core::{
    autocorrelation, chebyshev_propagate, error_parts, gaussian_packet, lanczos_step, BasisWindow,
    ChebyshevPlan, ErrorParts, GridHamiltonian, HermitianOperator, TimeSeries, WaveState,
};

use crate::config::{Method, RunConfig};
use crate::presets;

/// Error readings against the reference at one checkpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorSample {
    pub t: f64,
    pub err: f64,
    pub err_re: f64,
    pub err_im: f64,
    pub err_phase_free: f64,
}

impl ErrorSample {
    fn new(t: f64, p: ErrorParts) -> Self {
        Self {
            t,
            err: p.modulus,
            err_re: p.re,
            err_im: p.im,
            err_phase_free: p.phase_free,
        }
    }
}

/// Expected against counted Hamiltonian applications of the propagated
/// trajectory (the reference has its own operator and counter).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MatvecLedger {
    pub steps: usize,
    pub first_step_cost: u64,
    pub step_cost: u64,
    pub replacements: u64,
    pub expected: u64,
    pub counted: u64,
}

impl MatvecLedger {
    pub fn reconciles(&self) -> bool {
        self.expected == self.counted
    }
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub config: RunConfig,
    /// `<psi(t)|psi(0)>` before every step.
    pub autocorrelation: TimeSeries,
    /// `(t, |psi(t)|)` before every step.
    pub norms: Vec<(f64, f64)>,
    /// Errors at multiples of the reference step.
    pub errors: Vec<ErrorSample>,
    pub matvecs_total: u64,
    pub reference_matvecs: u64,
    pub replacements: u64,
    pub dropped: u64,
    pub steps_done: usize,
    pub ledger: MatvecLedger,
    pub wall_time: f64,
    pub final_state: Option<WaveState>,
    pub failure: Option<String>,
}

impl RunRecord {
    fn new(config: RunConfig) -> Self {
        Self {
            config,
            autocorrelation: TimeSeries::empty(),
            norms: Vec::new(),
            errors: Vec::new(),
            matvecs_total: 0,
            reference_matvecs: 0,
            replacements: 0,
            dropped: 0,
            steps_done: 0,
            ledger: MatvecLedger::default(),
            wall_time: 0.0,
            final_state: None,
            failure: None,
        }
    }

    pub fn final_error(&self) -> Option<f64> {
        self.errors.last().map(|e| e.err)
    }
}

enum Stepper {
    Original(usize),
    Extended(Box<BasisWindow>),
    Chebyshev(ChebyshevPlan),
}

struct StepOutcome {
    state: WaveState,
    replacements: usize,
    dropped: usize,
}

impl Stepper {
    fn new(cfg: &RunConfig, h: &GridHamiltonian) -> Result<Self> {
        Ok(match cfg.method {
            Method::Original => Self::Original(cfg.mu),
            Method::Extended => Self::Extended(Box::new(BasisWindow::new(cfg.window())?)),
            Method::Chebyshev => {
                Self::Chebyshev(ChebyshevPlan::converged(h.spectral_bounds(), cfg.dt)?)
            }
        })
    }

    /// Matvecs of the first and of every later step.
    fn costs(&self) -> (u64, u64) {
        match self {
            Self::Original(mu) => (*mu as u64, *mu as u64),
            Self::Extended(w) => (
                w.config().first_step_cost() as u64,
                w.config().step_cost() as u64,
            ),
            Self::Chebyshev(plan) => {
                let c = plan.n_terms() as u64 - 1;
                (c, c)
            }
        }
    }

    fn step(&mut self, h: &GridHamiltonian, psi: &WaveState, dt: f64) -> Result<StepOutcome> {
        Ok(match self {
            Self::Original(mu) => StepOutcome {
                state: lanczos_step(h, psi, *mu, dt)?.state,
                replacements: 0,
                dropped: 0,
            },
            Self::Extended(window) => {
                let (state, report) = window.step(h, psi, dt)?;
                StepOutcome {
                    state,
                    replacements: report.replacements,
                    dropped: report.dropped,
                }
            }
            Self::Chebyshev(plan) => StepOutcome {
                state: chebyshev_propagate(h, psi, plan)?,
                replacements: 0,
                dropped: 0,
            },
        })
    }
}

/// Runs one trajectory. Invalid configurations fail before any work; a
/// propagation failure still writes the partial series, with the error
/// recorded in `summary.json`.
pub fn run_propagation(cfg: &RunConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let mut record = RunRecord::new(cfg.clone());
    let started = Instant::now();
    let outcome = propagate(cfg, &mut record);
    record.wall_time = started.elapsed().as_secs_f64();
    if let Err(e) = &outcome {
        record.failure = Some(format!("{e:#}"));
    }
    if let Some(dir) = &cfg.output_dir {
        write_outputs(&record, dir)?;
    }
    outcome.map(|()| record)
}

fn propagate(cfg: &RunConfig, record: &mut RunRecord) -> Result<()> {
    let grid = cfg.grid();
    let h = GridHamiltonian::new(grid, cfg.potential())?;
    let psi0 = gaussian_packet(&grid, &cfg.packet())?;
    let mut stepper = Stepper::new(cfg, &h)?;
    let (first_cost, step_cost) = stepper.costs();

    let reference = if cfg.reference {
        let h_ref = GridHamiltonian::new(grid, cfg.potential())?;
        let plan = ChebyshevPlan::new(cfg.cheb_terms, h_ref.spectral_bounds(), cfg.cheb_dt)?;
        Some((h_ref, plan))
    } else {
        None
    };
    let stride = cfg.checkpoint_stride();
    let mut psi_ref = psi0.clone();

    let steps = cfg.steps();
    let mut psi = psi0.clone();
    h.reset_matvecs();
    let mut result = Ok(());
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        record
            .autocorrelation
            .push(t, autocorrelation(&psi0, &psi)?)?;
        record.norms.push((t, psi.norm()));
        match stepper.step(&h, &psi, cfg.dt) {
            Ok(out) => {
                psi = out.state;
                record.replacements += out.replacements as u64;
                record.dropped += out.dropped as u64;
            }
            Err(e) => {
                result = Err(e.context(format!("step {k} at t = {t}")));
                break;
            }
        }
        record.steps_done = k + 1;
        if let Some((h_ref, plan)) = &reference {
            if stride > 0 && (k + 1) % stride == 0 {
                psi_ref = chebyshev_propagate(h_ref, &psi_ref, plan)?;
                let tc = (k + 1) as f64 * cfg.dt;
                record
                    .errors
                    .push(ErrorSample::new(tc, error_parts(&psi_ref, &psi)?));
            }
        }
    }

    record.matvecs_total = h.matvecs();
    record.reference_matvecs = reference.as_ref().map_or(0, |(h_ref, _)| h_ref.matvecs());
    let done = record.steps_done as u64;
    record.ledger = MatvecLedger {
        steps: record.steps_done,
        first_step_cost: first_cost,
        step_cost,
        replacements: record.replacements,
        expected: if done == 0 {
            0
        } else {
            first_cost + (done - 1) * step_cost + record.replacements
        },
        counted: record.matvecs_total,
    };
    record.final_state = Some(psi);
    result
}

#[derive(Serialize)]
struct Summary<'a> {
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    config: &'a RunConfig,
    steps: usize,
    matvecs_total: u64,
    reference_matvecs: u64,
    replacements: u64,
    dropped: u64,
    final_error: Option<f64>,
    ledger: &'a MatvecLedger,
    ledger_reconciled: bool,
    counting_note: &'a str,
}

#[derive(Serialize)]
struct Timing {
    wall_time: f64,
}

/// Writes `autocorr.csv`, `errors.csv`, `norms.csv`, `summary.json` and,
/// separately so the others stay byte-identical across runs, `timing.json`.
pub fn write_outputs(record: &RunRecord, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let create = |name: &str| -> Result<BufWriter<File>> {
        let path = dir.join(name);
        Ok(BufWriter::new(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        ))
    };

    let mut out = create("autocorr.csv")?;
    record.autocorrelation.write_csv(&mut out)?;
    out.flush()?;

    let mut out = create("errors.csv")?;
    if record.config.verbose {
        writeln!(out, "t,err,err_re,err_im,err_phase_free")?;
    } else {
        writeln!(out, "t,err,err_re,err_im")?;
    }
    for e in &record.errors {
        write!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            e.t, e.err, e.err_re, e.err_im
        )?;
        if record.config.verbose {
            write!(out, ",{:.16e}", e.err_phase_free)?;
        }
        writeln!(out)?;
    }
    out.flush()?;

    let mut out = create("norms.csv")?;
    writeln!(out, "t,norm")?;
    for (t, n) in &record.norms {
        writeln!(out, "{t:.16e},{n:.16e}")?;
    }
    out.flush()?;

    let note = match record.config.method {
        Method::Extended => presets::COUNT_NOTE,
        Method::Original => "each step applies H exactly mu times",
        Method::Chebyshev => "each step applies H n_terms - 1 times",
    };
    let summary = Summary {
        status: if record.failure.is_some() {
            "error"
        } else {
            "ok"
        },
        error: record.failure.as_deref(),
        config: &record.config,
        steps: record.steps_done,
        matvecs_total: record.matvecs_total,
        reference_matvecs: record.reference_matvecs,
        replacements: record.replacements,
        dropped: record.dropped,
        final_error: record.final_error(),
        ledger: &record.ledger,
        ledger_reconciled: record.ledger.reconciles(),
        counting_note: note,
    };
    let mut out = create("summary.json")?;
    serde_json::to_writer_pretty(&mut out, &summary)?;
    writeln!(out)?;
    out.flush()?;

    let mut out = create("timing.json")?;
    serde_json::to_writer_pretty(
        &mut out,
        &Timing {
            wall_time: record.wall_time,
        },
    )?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Least-squares slope of `ln err` against `ln t` over positive samples.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, e)| *t > 0.0 && *e > 0.0)
        .map(|(t, e)| (t.ln(), e.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

//! Paired runs over the same physical setup.

use std::fs;
use std::path::Path;
use std::thread;

use anyhow::{anyhow, ensure, Context, Result};
use serde::Serialize;

use crate::config::RunConfig;
use crate::run::{loglog_slope, run_propagation, RunRecord};

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub checkpoints: Vec<f64>,
    pub err_a: Vec<f64>,
    pub err_b: Vec<f64>,
    /// `err_a / err_b` at each checkpoint.
    pub ratio: Vec<f64>,
    pub slope_a: Option<f64>,
    pub slope_b: Option<f64>,
    pub matvecs_a: u64,
    pub matvecs_b: u64,
    #[serde(skip)]
    pub record_a: Option<RunRecord>,
    #[serde(skip)]
    pub record_b: Option<RunRecord>,
}

impl ComparisonReport {
    pub fn final_ratio(&self) -> Option<f64> {
        self.ratio.last().copied()
    }
}

/// Runs both configurations concurrently and pairs their error curves.
/// With `out`, each run writes into `out/a` and `out/b` and the report goes
/// to `out/comparison.json`.
pub fn run_comparison(
    cfg_a: &RunConfig,
    cfg_b: &RunConfig,
    out: Option<&Path>,
) -> Result<ComparisonReport> {
    ensure!(
        cfg_a.same_setup(cfg_b),
        "configurations differ in grid, potential, packet, time stepping or reference"
    );
    ensure!(
        cfg_a.reference,
        "comparison needs the reference checkpoints"
    );
    cfg_a.validate()?;
    cfg_b.validate()?;

    let mut a = cfg_a.clone();
    let mut b = cfg_b.clone();
    if let Some(dir) = out {
        a.output_dir = Some(dir.join("a"));
        b.output_dir = Some(dir.join("b"));
    }
    let (ra, rb) = thread::scope(|s| {
        let ha = s.spawn(|| run_propagation(&a));
        let hb = s.spawn(|| run_propagation(&b));
        (
            ha.join().map_err(|_| anyhow!("run a panicked")),
            hb.join().map_err(|_| anyhow!("run b panicked")),
        )
    });
    let ra = ra?.context("run a")?;
    let rb = rb?.context("run b")?;

    let checkpoints: Vec<f64> = ra.errors.iter().map(|e| e.t).collect();
    let err_a: Vec<f64> = ra.errors.iter().map(|e| e.err).collect();
    let err_b: Vec<f64> = rb.errors.iter().map(|e| e.err).collect();
    let ratio = err_a.iter().zip(&err_b).map(|(x, y)| x / y).collect();
    let pts = |r: &RunRecord| r.errors.iter().map(|e| (e.t, e.err)).collect::<Vec<_>>();
    let report = ComparisonReport {
        checkpoints,
        slope_a: loglog_slope(&pts(&ra)),
        slope_b: loglog_slope(&pts(&rb)),
        err_a,
        err_b,
        ratio,
        matvecs_a: ra.matvecs_total,
        matvecs_b: rb.matvecs_total,
        record_a: Some(ra),
        record_b: Some(rb),
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(&report)?;
        fs::write(dir.join("comparison.json"), text + "\n")?;
    }
    Ok(report)
}

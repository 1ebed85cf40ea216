//! Flat run configuration, shared by config files and command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use varlanczos_core::{
    Grid2D, HenonHeilesParams, Packet, WindowConfig, DEFAULT_DEPENDENCY_THRESHOLD,
};

/// Relative slack when checking that a time span is a whole number of steps.
const STEP_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Original,
    Extended,
    Chebyshev,
}

impl std::str::FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Self::Original),
            "extended" => Ok(Self::Extended),
            "chebyshev" => Ok(Self::Chebyshev),
            other => bail!("unknown method {other:?} (expected original, extended or chebyshev)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,

    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,

    pub omega_x: f64,
    pub omega_y: f64,
    pub lambda: f64,
    pub eta: f64,
    pub mass: f64,

    pub x0: f64,
    pub y0: f64,
    pub px0: f64,
    pub py0: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,

    pub dt: f64,
    pub t_final: f64,

    pub m: usize,
    pub n: usize,
    #[serde(rename = "K")]
    pub max_age: usize,
    pub threshold: f64,
    pub power_cap: Option<usize>,
    pub auto_shrink: bool,

    pub mu: usize,

    pub cheb_terms: usize,
    #[serde(rename = "cheb_dT")]
    pub cheb_dt: f64,
    /// Co-propagate the Chebyshev reference and record errors.
    pub reference: bool,

    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Adds the `1 - |overlap|` column to `errors.csv`.
    pub verbose: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let grid = Grid2D::default();
        let pot = HenonHeilesParams::default();
        let packet = Packet::default();
        Self {
            method: Method::Extended,
            nx: grid.nx,
            ny: grid.ny,
            x_min: grid.x_min,
            x_max: grid.x_max,
            y_min: grid.y_min,
            y_max: grid.y_max,
            omega_x: pot.omega_x,
            omega_y: pot.omega_y,
            lambda: pot.lambda,
            eta: pot.eta,
            mass: pot.mass,
            x0: packet.center.0,
            y0: packet.center.1,
            px0: packet.momentum.0,
            py0: packet.momentum.1,
            sigma_x: packet.width.0,
            sigma_y: packet.width.1,
            dt: 0.02,
            t_final: 40.0,
            m: 5,
            n: 10,
            max_age: 1,
            threshold: DEFAULT_DEPENDENCY_THRESHOLD,
            power_cap: None,
            auto_shrink: false,
            mu: 6,
            cheb_terms: 1024,
            cheb_dt: 4.0,
            reference: true,
            seed: 0,
            output_dir: None,
            verbose: false,
        }
    }
}

/// Whole number of `step`s in `span`, if there is one.
pub fn whole_steps(span: f64, step: f64) -> Option<usize> {
    let k = (span / step).round();
    ((k * step - span).abs() <= STEP_TOLERANCE * span.abs().max(step)).then_some(k as usize)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Overlays the keys present in a JSON object onto `self`.
    pub fn merge_json(&self, overlay: &serde_json::Value) -> Result<Self> {
        let mut base = serde_json::to_value(self)?;
        let (Some(base_map), Some(over)) = (base.as_object_mut(), overlay.as_object()) else {
            bail!("config overlay must be a JSON object");
        };
        for (k, v) in over {
            base_map.insert(k.clone(), v.clone());
        }
        Ok(serde_json::from_value(base)?)
    }

    pub fn grid(&self) -> Grid2D {
        Grid2D {
            nx: self.nx,
            ny: self.ny,
            x_min: self.x_min,
            x_max: self.x_max,
            y_min: self.y_min,
            y_max: self.y_max,
        }
    }

    pub fn potential(&self) -> HenonHeilesParams {
        HenonHeilesParams {
            omega_x: self.omega_x,
            omega_y: self.omega_y,
            lambda: self.lambda,
            eta: self.eta,
            mass: self.mass,
        }
    }

    pub fn packet(&self) -> Packet {
        Packet {
            center: (self.x0, self.y0),
            momentum: (self.px0, self.py0),
            width: (self.sigma_x, self.sigma_y),
        }
    }

    pub fn window(&self) -> WindowConfig {
        WindowConfig {
            m: self.m,
            n: self.n,
            max_age: self.max_age,
            threshold: self.threshold,
            power_cap: self.power_cap,
            auto_shrink: self.auto_shrink,
        }
    }

    pub fn steps(&self) -> usize {
        whole_steps(self.t_final, self.dt).unwrap_or(0)
    }

    /// Steps between reference checkpoints.
    pub fn checkpoint_stride(&self) -> usize {
        whole_steps(self.cheb_dt, self.dt).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid().validate()?;
        ensure!(self.mass > 0.0, "mass must be positive");
        ensure!(self.dt > 0.0 && self.dt.is_finite(), "dt must be positive");
        ensure!(self.t_final >= self.dt, "t_final must be >= dt");
        ensure!(
            whole_steps(self.t_final, self.dt).is_some(),
            "t_final = {} is not a whole number of steps dt = {}",
            self.t_final,
            self.dt
        );
        ensure!(
            self.sigma_x > 0.0 && self.sigma_y > 0.0,
            "packet widths must be positive"
        );
        ensure!(
            (self.x_min..self.x_max).contains(&self.x0)
                && (self.y_min..self.y_max).contains(&self.y0),
            "packet center lies outside the grid"
        );
        match self.method {
            Method::Extended => self.window().validate()?,
            Method::Original => ensure!(self.mu >= 1, "mu must be >= 1"),
            Method::Chebyshev => {}
        }
        if self.reference {
            ensure!(self.cheb_terms >= 2, "cheb_terms must be >= 2");
            ensure!(self.cheb_dt > 0.0, "cheb_dT must be positive");
            ensure!(
                whole_steps(self.cheb_dt, self.dt).is_some(),
                "cheb_dT = {} is not a whole number of steps dt = {}",
                self.cheb_dt,
                self.dt
            );
        }
        ensure!(
            (0.0..1.0).contains(&self.threshold),
            "threshold must lie in [0, 1)"
        );
        Ok(())
    }

    /// True when both configs describe the same physical experiment.
    pub fn same_setup(&self, other: &Self) -> bool {
        self.grid() == other.grid()
            && self.potential() == other.potential()
            && self.packet() == other.packet()
            && self.dt == other.dt
            && self.t_final == other.t_final
            && self.reference == other.reference
            && self.cheb_terms == other.cheb_terms
            && self.cheb_dt == other.cheb_dt
    }
}

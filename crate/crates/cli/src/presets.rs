//! Named parameter sets for the Hénon-Heiles experiments.

use anyhow::{anyhow, Result};

use crate::config::{Method, RunConfig};

#[derive(Clone, Debug)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: RunConfig,
    /// Original-Lanczos run the preset is meant to be compared against.
    pub baseline: Option<RunConfig>,
    /// How the matvec count relates to the "matrix-vector products per
    /// step" quoted for this setting.
    pub counting_note: &'static str,
}

/// Presets too long for routine runs.
pub fn is_long(name: &str) -> bool {
    name == "fig2-long"
}

pub const COUNT_NOTE: &str =
    "matvecs_total counts every application of H. A regular extended step \
applies H to the normalized powers 0..m, i.e. m + 1 products, because the matrix elements of the \
highest power need H times it; the m-product figure counts only the new Krylov powers H^1..H^m. \
The first step costs n products and each dependent-state replacement one more.";

fn extended(m: usize, n: usize, k: usize, dt: f64, t_final: f64) -> RunConfig {
    RunConfig {
        method: Method::Extended,
        m,
        n,
        max_age: k,
        dt,
        t_final,
        ..RunConfig::default()
    }
}

fn original(mu: usize, dt: f64, t_final: f64) -> RunConfig {
    RunConfig {
        method: Method::Original,
        mu,
        dt,
        t_final,
        ..RunConfig::default()
    }
}

fn fig2(name: &'static str, description: &'static str, m: usize, t_final: f64) -> Preset {
    Preset {
        name,
        description,
        config: extended(m, m + 5, 1, 0.02, t_final),
        baseline: Some(original(m + 1, 0.02, t_final)),
        counting_note: COUNT_NOTE,
    }
}

pub fn presets() -> Vec<Preset> {
    vec![
        Preset {
            name: "fig1",
            description:
                "dt = 0.02, powers 0..2 of the last four steps minus psi(t - 3 dt): n = 11",
            config: extended(2, 11, 3, 0.02, 40.0),
            baseline: Some(original(3, 0.02, 40.0)),
            counting_note: COUNT_NOTE,
        },
        Preset {
            name: "fig1-dt001",
            description: "dt = 0.01, powers 0..1 of the last four steps minus psi(t - 3 dt): n = 7",
            config: extended(1, 7, 3, 0.01, 40.0),
            baseline: Some(original(2, 0.01, 40.0)),
            counting_note: COUNT_NOTE,
        },
        fig2(
            "fig2-m5",
            "m = 5, n = 10 against original Lanczos mu = 6, t = 200",
            5,
            200.0,
        ),
        fig2(
            "fig2-m6",
            "m = 6, n = 11 against original Lanczos mu = 7, t = 200",
            6,
            200.0,
        ),
        fig2(
            "fig2-m7",
            "m = 7, n = 12 against original Lanczos mu = 8, t = 200",
            7,
            200.0,
        ),
        fig2(
            "fig2-long",
            "m = 5, n = 10 against mu = 6 out to t = 20000 (hours)",
            5,
            20000.0,
        ),
    ]
}

pub fn preset(name: &str) -> Result<Preset> {
    presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| anyhow!("unknown preset {name:?}; see `presets list`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for p in presets() {
            p.config.validate().unwrap();
            let b = p.baseline.as_ref().unwrap();
            b.validate().unwrap();
            assert!(p.config.same_setup(b), "{}", p.name);
        }
    }

    #[test]
    fn fig1_window_leaves_out_oldest_state() {
        let c = preset("fig1").unwrap().config;
        assert_eq!((c.max_age + 1) * (c.m + 1), c.n + 1);
    }

    #[test]
    fn unknown_preset() {
        assert!(preset("fig3").is_err());
    }
}

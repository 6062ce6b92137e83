//! Built-in experiment series.
//!
//! Grids are 8-point geometric sequences `h = h0·2^{−k}` whose first step
//! puts ten (logistic, Riccati) or twenty (linear) evaluations on the
//! interval.

use crate::config::{ConfigError, Exponent, HGrid, NoiseSpec, RunConfig};

pub const PRESET_NAMES: [&str; 4] = ["fig1", "fig2", "fig3", "figC"];

/// `K_R` values of the impermissible-noise series.
pub const FIG3_KR: [f64; 9] = [0.0, 1.0, 1e1, 1e2, 3.73e3, 1e4, 1e5, 1e6, 1e7];

/// Prefactor of the largest permissible noise in the calibration series.
pub const FIG2_KR: f64 = 5.0e3;

fn grid(h0: f64) -> Option<HGrid> {
    Some(HGrid {
        h0,
        factor: 2.0,
        count: 8,
    })
}

fn series(problem: &str, sigma: f64, h0: f64, q: Vec<usize>, noise: Vec<NoiseSpec>) -> RunConfig {
    RunConfig {
        problem: problem.into(),
        q,
        sigma,
        h_grid: grid(h0),
        noise,
        ..RunConfig::default()
    }
}

fn power(p: Exponent, k: f64) -> NoiseSpec {
    NoiseSpec::Power { p, k }
}

pub fn preset(name: &str) -> Result<Vec<RunConfig>, ConfigError> {
    let configs = match name {
        "fig1" => {
            let noise = vec![NoiseSpec::Zero, power(Exponent::PriorOrder, 1.0)];
            vec![
                series("logistic", 50.0, 0.15, vec![1, 2, 3, 4], noise.clone()),
                series("linear", 1.0, 0.5, vec![1, 2, 3, 4], noise),
            ]
        }
        "fig2" => {
            let noise = vec![NoiseSpec::Zero, power(Exponent::PriorOrder, FIG2_KR)];
            vec![
                series("logistic", 1.0, 0.15, vec![1], noise.clone()),
                series("linear", 1.0, 0.5, vec![1], noise),
            ]
        }
        "fig3" => vec![series(
            "logistic",
            1.0,
            0.15,
            vec![1],
            FIG3_KR
                .iter()
                .map(|&k| power(Exponent::Value(0.5), k))
                .collect(),
        )],
        "figC" => vec![series(
            "riccati",
            10f64.sqrt(),
            0.1,
            vec![1, 2, 3, 4],
            vec![NoiseSpec::Zero],
        )],
        other => {
            return Err(ConfigError::Invalid(format!(
                "unknown preset '{other}' (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(configs)
}

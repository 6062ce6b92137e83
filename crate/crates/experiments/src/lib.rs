//! Experiment harness for the Gaussian ODE filter: work-precision sweeps,
//! steady-state tables and misalignment studies, written as CSV with
//! optional SVG charts.

// Negated comparisons deliberately reject NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod presets;
pub mod runs;
pub mod svg;

use std::io::Write;

use config::ConfigError;
use odefilter_core::FilterError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("the run diverged after t = {t}")]
    Diverged { t: f64 },
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(ConfigError::Invalid(msg.into()))
    }

    /// Process exit code: 2 for divergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Diverged { .. } => 2,
            _ => 1,
        }
    }
}

/// Writes a header and rows as CSV.
pub fn write_csv<W: Write>(
    out: W,
    header: &[impl AsRef<str>],
    rows: &[Vec<String>],
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header.iter().map(|h| h.as_ref()))?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

//! Error type shared by all solver modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("temperature {t} K outside validity range [{t_min}, {t_max}] K")]
    TemperatureRange { t: f64, t_min: f64, t_max: f64 },

    #[error("energy {e} outside attainable range [{e_min}, {e_max}]")]
    EnergyRange { e: f64, e_min: f64, e_max: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence after {iterations} iterations (target {target}); this should not happen for monotone models")]
    NoConvergence { target: f64, iterations: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("moment projection failed: {0}; a larger velocity span or finer resolution may be needed")]
    Projection(String),

    #[error("step size error: {0}")]
    StepSize(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("run did not reach a steady state: {0}")]
    NotSteady(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

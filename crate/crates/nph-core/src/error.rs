//! Error type shared across the crate.

use crate::survival::Arm;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("no observations")]
    NoObservations,

    #[error("no events")]
    NoEvents,

    #[error("no events in {0} arm")]
    NoEventsInArm(Arm),

    #[error("{0} arm is empty")]
    EmptyArm(Arm),

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate variance")]
    DegenerateVariance,

    #[error("monotone likelihood: all events in one arm")]
    MonotoneLikelihood,

    #[error("weights vanish")]
    WeightsVanish,

    #[error("no convergence after {iterations} iterations (last estimate {last_estimate})")]
    NoConvergence { iterations: usize, last_estimate: f64 },

    #[error("t_star beyond data support (t_star {t_star}, max observed {max_observed})")]
    TStarBeyondSupport { t_star: f64, max_observed: f64 },

    #[error("zero RMST in {0} arm")]
    ZeroRmst(Arm),

    #[error("integration bounds [{a}, {b}] outside curve support (ends at {support_end})")]
    OutsideSupport { a: f64, b: f64, support_end: f64 },

    #[error("no sign change of f over [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error(
        "dropout calibration bracket failure (administrative-only censoring {admin_fraction:.4})"
    )]
    CalibrationBracket { admin_fraction: f64 },

    #[error("alternative power too low for normal approximation")]
    PowerTooLow,

    #[error("invalid design: {0}")]
    InvalidDesign(String),
}

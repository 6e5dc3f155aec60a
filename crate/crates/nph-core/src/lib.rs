//! Survival analysis and Monte Carlo trial simulation under
//! non-proportional hazards.
//!
//! The crate provides:
//!
//! - [`survival`] — right-censored two-arm data, risk tables, Kaplan-Meier;
//! - [`hypothesis`] — log-rank, Fleming-Harrington weighted log-rank, and
//!   RMST-based tests;
//! - [`effects`] — hazard ratio, weighted hazard ratio, RMST difference and
//!   ratio with confidence intervals;
//! - [`simgen`] — piecewise-exponential trial simulation with uniform
//!   accrual, dropout calibration, and event-driven or calendar cutoffs;
//! - [`harness`] — the Monte Carlo engine aggregating power, type-I error,
//!   and mean treatment-effect estimates over scenario grids;
//! - [`numerics`] — normal CDF/quantile, step-function integration,
//!   bisection, and reproducible random streams;
//! - [`io`] — dataset CSV and metadata export.

pub mod effects;
pub mod error;
pub mod harness;
pub mod hypothesis;
pub mod io;
pub mod numerics;
pub mod simgen;
pub mod survival;

pub use error::{Error, Result};
pub use survival::{Arm, SurvivalObservation, TwoArmDataset};

//! Core data model for right-censored two-arm survival data: observations,
//! risk tables over distinct event times, and Kaplan-Meier estimation.
//!
//! Conventions:
//! - Ties between an event and a censoring at the same time count the event
//!   first: the censored subject is still in the risk set at that time.
//! - Times are compared with exact equality; no epsilon merging.
//! - Risk-table rows exist only at times with at least one event.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::StepFunction;

/// Treatment arm of a two-arm trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Control = 0,
    Experimental = 1,
}

impl Arm {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Arm {
        match self {
            Arm::Control => Arm::Experimental,
            Arm::Experimental => Arm::Control,
        }
    }

    pub fn from_index(i: usize) -> Option<Arm> {
        match i {
            0 => Some(Arm::Control),
            1 => Some(Arm::Experimental),
            _ => None,
        }
    }
}

impl std::fmt::Display for Arm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Arm::Control => write!(f, "control"),
            Arm::Experimental => write!(f, "experimental"),
        }
    }
}

/// One right-censored observation: follow-up time in months, event indicator
/// (false = censored), and treatment arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalObservation {
    pub time: f64,
    pub event: bool,
    pub arm: Arm,
}

impl SurvivalObservation {
    pub fn new(time: f64, event: bool, arm: Arm) -> Result<Self> {
        if !time.is_finite() || time < 0.0 {
            return Err(Error::InvalidObservation(format!(
                "time must be finite and non-negative, got {time}"
            )));
        }
        Ok(Self { time, event, arm })
    }
}

/// An ordered collection of observations from both arms of a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoArmDataset {
    observations: Vec<SurvivalObservation>,
}

impl TwoArmDataset {
    pub fn new(observations: Vec<SurvivalObservation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::NoObservations);
        }
        for obs in &observations {
            if !obs.time.is_finite() || obs.time < 0.0 {
                return Err(Error::InvalidObservation(format!(
                    "time must be finite and non-negative, got {}",
                    obs.time
                )));
            }
        }
        Ok(Self { observations })
    }

    pub fn observations(&self) -> &[SurvivalObservation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn arm_observations(&self, arm: Arm) -> impl Iterator<Item = &SurvivalObservation> {
        self.observations.iter().filter(move |o| o.arm == arm)
    }

    pub fn arm_count(&self, arm: Arm) -> usize {
        self.arm_observations(arm).count()
    }

    pub fn event_count(&self) -> usize {
        self.observations.iter().filter(|o| o.event).count()
    }

    /// Largest observed (event or censored) time in an arm.
    pub fn max_observed_time(&self, arm: Arm) -> Option<f64> {
        self.arm_observations(arm)
            .map(|o| o.time)
            .max_by(f64::total_cmp)
    }

    /// Largest event time in an arm, if the arm has any events.
    pub fn max_event_time(&self, arm: Arm) -> Option<f64> {
        self.arm_observations(arm)
            .filter(|o| o.event)
            .map(|o| o.time)
            .max_by(f64::total_cmp)
    }

    /// The same data with arm labels exchanged.
    pub fn with_swapped_arms(&self) -> TwoArmDataset {
        TwoArmDataset {
            observations: self
                .observations
                .iter()
                .map(|o| SurvivalObservation {
                    arm: o.arm.other(),
                    ..*o
                })
                .collect(),
        }
    }

    /// Errors unless both arms contain at least one observation.
    pub fn require_both_arms(&self) -> Result<()> {
        for arm in [Arm::Control, Arm::Experimental] {
            if self.arm_count(arm) == 0 {
                return Err(Error::EmptyArm(arm));
            }
        }
        Ok(())
    }
}

/// Row of a risk table: one distinct event time with per-arm at-risk and
/// event counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskRow {
    pub time: f64,
    pub at_risk_control: u32,
    pub at_risk_experimental: u32,
    pub events_control: u32,
    pub events_experimental: u32,
}

impl RiskRow {
    pub fn at_risk_total(&self) -> u32 {
        self.at_risk_control + self.at_risk_experimental
    }

    pub fn events_total(&self) -> u32 {
        self.events_control + self.events_experimental
    }
}

/// Distinct ordered event times with per-arm at-risk and event counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTable {
    rows: Vec<RiskRow>,
}

impl RiskTable {
    pub fn rows(&self) -> &[RiskRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Build the risk table over the distinct event times of `dataset`.
///
/// At-risk counts include every subject with observed time ≥ t_j, so a
/// subject censored exactly at an event time is still at risk there.
/// Times with only censorings produce no row but do shrink later risk sets.
pub fn build_risk_table(dataset: &TwoArmDataset) -> Result<RiskTable> {
    let obs = dataset.observations();
    if obs.is_empty() {
        return Err(Error::NoObservations);
    }
    let mut order: Vec<usize> = (0..obs.len()).collect();
    order.sort_by(|&a, &b| obs[a].time.total_cmp(&obs[b].time));

    let mut at_risk = [0u32; 2];
    for o in obs {
        at_risk[o.arm.index()] += 1;
    }

    let mut rows = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let t = obs[order[i]].time;
        let mut events = [0u32; 2];
        let mut leaving = [0u32; 2];
        while i < order.len() && obs[order[i]].time == t {
            let o = &obs[order[i]];
            leaving[o.arm.index()] += 1;
            if o.event {
                events[o.arm.index()] += 1;
            }
            i += 1;
        }
        if events[0] + events[1] > 0 {
            rows.push(RiskRow {
                time: t,
                at_risk_control: at_risk[0],
                at_risk_experimental: at_risk[1],
                events_control: events[0],
                events_experimental: events[1],
            });
        }
        at_risk[0] -= leaving[0];
        at_risk[1] -= leaving[1];
    }

    if rows.is_empty() {
        return Err(Error::NoEvents);
    }
    Ok(RiskTable { rows })
}

/// Right-continuous Kaplan-Meier step function. The curve is 1 before the
/// first event time; each step records the post-drop survival value together
/// with the at-risk and event counts at that time.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    times: Vec<f64>,
    survival: Vec<f64>,
    at_risk: Vec<u32>,
    events: Vec<u32>,
    max_observed: f64,
}

impl SurvivalCurve {
    /// Event times at which the curve steps down.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Survival value on [times[i], times[i+1]).
    pub fn survival(&self) -> &[f64] {
        &self.survival
    }

    pub fn at_risk(&self) -> &[u32] {
        &self.at_risk
    }

    pub fn events(&self) -> &[u32] {
        &self.events
    }

    /// Largest observed (event or censored) time of the underlying data.
    pub fn max_observed_time(&self) -> f64 {
        self.max_observed
    }

    /// Ŝ(t), right-continuous.
    pub fn survival_at(&self, t: f64) -> f64 {
        self.step_fn().value_at(t)
    }

    /// Ŝ(t⁻), the left limit.
    pub fn survival_before(&self, t: f64) -> f64 {
        self.step_fn().value_before(t)
    }

    pub fn step_fn(&self) -> StepFunction<'_> {
        StepFunction {
            initial: 1.0,
            times: &self.times,
            values: &self.survival,
            support_end: self.max_observed,
        }
    }
}

/// Product-limit estimate over a collection of observations.
///
/// ```
/// use nph_core::survival::{kaplan_meier, Arm, SurvivalObservation};
///
/// let observations = [
///     SurvivalObservation::new(1.0, true, Arm::Control).unwrap(),
///     SurvivalObservation::new(2.0, false, Arm::Control).unwrap(),
///     SurvivalObservation::new(3.0, true, Arm::Control).unwrap(),
/// ];
/// let curve = kaplan_meier(&observations).unwrap();
/// assert!((curve.survival_at(2.5) - 2.0 / 3.0).abs() < 1e-12);
/// assert_eq!(curve.survival_at(3.0), 0.0);
/// ```
pub fn kaplan_meier(observations: &[SurvivalObservation]) -> Result<SurvivalCurve> {
    if observations.is_empty() {
        return Err(Error::NoObservations);
    }
    let mut order: Vec<usize> = (0..observations.len()).collect();
    order.sort_by(|&a, &b| observations[a].time.total_cmp(&observations[b].time));

    let mut times = Vec::new();
    let mut survival = Vec::new();
    let mut at_risk_col = Vec::new();
    let mut events_col = Vec::new();

    let mut at_risk = observations.len() as u32;
    let mut s = 1.0;
    let mut i = 0;
    while i < order.len() {
        let t = observations[order[i]].time;
        let mut events = 0u32;
        let mut leaving = 0u32;
        while i < order.len() && observations[order[i]].time == t {
            leaving += 1;
            if observations[order[i]].event {
                events += 1;
            }
            i += 1;
        }
        if events > 0 {
            s *= 1.0 - events as f64 / at_risk as f64;
            times.push(t);
            survival.push(s);
            at_risk_col.push(at_risk);
            events_col.push(events);
        }
        at_risk -= leaving;
    }

    let max_observed = observations[*order.last().unwrap()].time;
    Ok(SurvivalCurve {
        times,
        survival,
        at_risk: at_risk_col,
        events: events_col,
        max_observed,
    })
}

/// Pooled Kaplan-Meier survival immediately prior to each risk-table row:
/// Ŝ(t_j⁻) for j = 1..k, with the first entry exactly 1.
pub fn pooled_left_survival(table: &RiskTable) -> Vec<f64> {
    let mut out = Vec::with_capacity(table.len());
    let mut s = 1.0;
    for row in table.rows() {
        out.push(s);
        s *= 1.0 - row.events_total() as f64 / row.at_risk_total() as f64;
    }
    out
}

//! Treatment-effect estimation: hazard ratio from a two-group partial
//! likelihood, Fleming-Harrington weighted hazard ratio, and RMST difference
//! and ratio, each with a standard error and 95% confidence interval.

use crate::error::{Error, Result};
use crate::hypothesis::{fh_weights, rmst_by_arm, FlemingHarringtonParams};
use crate::numerics::CI_Z;
use crate::survival::{build_risk_table, pooled_left_survival, Arm, RiskTable, TwoArmDataset};

/// Scale on which an effect estimate and its interval live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectScale {
    LogHazardRatio,
    RmstDifferenceMonths,
    LogRmstRatio,
}

/// Point estimate with standard error and 95% CI on the stated scale, plus
/// the value transformed back to the natural scale (hazard ratio, months,
/// or RMST ratio).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectEstimate {
    pub scale: EffectScale,
    pub point: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reported: f64,
}

impl EffectEstimate {
    fn new(scale: EffectScale, point: f64, std_err: f64) -> Self {
        let reported = match scale {
            EffectScale::RmstDifferenceMonths => point,
            EffectScale::LogHazardRatio | EffectScale::LogRmstRatio => point.exp(),
        };
        EffectEstimate {
            scale,
            point,
            std_err,
            ci_low: point - CI_Z * std_err,
            ci_high: point + CI_Z * std_err,
            reported,
        }
    }

    /// Confidence bounds transformed to the natural scale.
    pub fn reported_ci(&self) -> (f64, f64) {
        match self.scale {
            EffectScale::RmstDifferenceMonths => (self.ci_low, self.ci_high),
            EffectScale::LogHazardRatio | EffectScale::LogRmstRatio => {
                (self.ci_low.exp(), self.ci_high.exp())
            }
        }
    }
}

const MAX_NEWTON_ITERATIONS: usize = 50;
const SCORE_TOLERANCE: f64 = 1e-8;
const STEP_TOLERANCE: f64 = 1e-10;

/// Weighted score and information of the two-group partial likelihood at β,
/// with the Breslow convention for ties. The score orients β toward the
/// experimental arm: U_w(0) equals the weighted excess of experimental
/// events over expectation.
fn score_and_information(table: &RiskTable, weights: &[f64], beta: f64) -> (f64, f64) {
    let eb = beta.exp();
    let mut score = 0.0;
    let mut information = 0.0;
    for (row, &w) in table.rows().iter().zip(weights) {
        let n0 = row.at_risk_control as f64;
        let n1 = row.at_risk_experimental as f64;
        let d = row.events_total() as f64;
        let p = n1 * eb / (n0 + n1 * eb);
        score += w * (row.events_experimental as f64 - d * p);
        information += w * d * p * (1.0 - p);
    }
    (score, information)
}

/// Damped Newton maximization of the (weighted) partial likelihood in β.
fn solve_weighted_partial_likelihood(table: &RiskTable, weights: &[f64]) -> Result<EffectEstimate> {
    let events_experimental: u32 = table.rows().iter().map(|r| r.events_experimental).sum();
    let events_control: u32 = table.rows().iter().map(|r| r.events_control).sum();
    if events_experimental + events_control < 2 {
        return Err(Error::InvalidParameter(
            "hazard ratio needs at least 2 events".into(),
        ));
    }
    if events_experimental == 0 || events_control == 0 {
        return Err(Error::MonotoneLikelihood);
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::WeightsVanish);
    }

    let mut beta = 0.0;
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let (score, information) = score_and_information(table, weights, beta);
        if !(information > 0.0) {
            return Err(Error::DegenerateVariance);
        }
        if score.abs() < SCORE_TOLERANCE {
            return Ok(EffectEstimate::new(
                EffectScale::LogHazardRatio,
                beta,
                1.0 / information.sqrt(),
            ));
        }
        // Newton step, damped to stay in the well-behaved region.
        let step = (score / information).clamp(-2.0, 2.0);
        beta += step;
        if step.abs() < STEP_TOLERANCE {
            let (_, information) = score_and_information(table, weights, beta);
            return Ok(EffectEstimate::new(
                EffectScale::LogHazardRatio,
                beta,
                1.0 / information.sqrt(),
            ));
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_NEWTON_ITERATIONS,
        last_estimate: beta,
    })
}

/// Hazard ratio (experimental vs control) from the two-group maximum partial
/// likelihood; `reported` is exp(β̂).
pub fn hazard_ratio(dataset: &TwoArmDataset) -> Result<EffectEstimate> {
    dataset.require_both_arms()?;
    hazard_ratio_from_table(&build_risk_table(dataset)?)
}

pub fn hazard_ratio_from_table(table: &RiskTable) -> Result<EffectEstimate> {
    solve_weighted_partial_likelihood(table, &vec![1.0; table.len()])
}

/// Weighted hazard ratio: each event row's score and information term is
/// multiplied by the Fleming-Harrington weight from the pooled left-limit
/// Kaplan-Meier curve. Weights are computed once and held fixed across
/// Newton iterations.
pub fn weighted_hazard_ratio(
    dataset: &TwoArmDataset,
    params: &FlemingHarringtonParams,
) -> Result<EffectEstimate> {
    dataset.require_both_arms()?;
    weighted_hazard_ratio_from_table(&build_risk_table(dataset)?, params)
}

pub fn weighted_hazard_ratio_from_table(
    table: &RiskTable,
    params: &FlemingHarringtonParams,
) -> Result<EffectEstimate> {
    let weights = fh_weights(&pooled_left_survival(table), params);
    solve_weighted_partial_likelihood(table, &weights)
}

/// RMST difference μ̂₁(t*) − μ̂₀(t*) in months, positive when the
/// experimental arm survives longer on average.
pub fn rmst_difference(dataset: &TwoArmDataset, t_star: f64) -> Result<EffectEstimate> {
    dataset.require_both_arms()?;
    let control = rmst_by_arm(dataset, Arm::Control, t_star)?;
    let experimental = rmst_by_arm(dataset, Arm::Experimental, t_star)?;
    Ok(EffectEstimate::new(
        EffectScale::RmstDifferenceMonths,
        experimental.mean - control.mean,
        (experimental.variance + control.variance).sqrt(),
    ))
}

/// RMST ratio μ̂₀(t*) / μ̂₁(t*), estimated on the log scale with a
/// delta-method standard error; a reported ratio below 1 favors the
/// experimental arm.
pub fn rmst_ratio(dataset: &TwoArmDataset, t_star: f64) -> Result<EffectEstimate> {
    dataset.require_both_arms()?;
    let control = rmst_by_arm(dataset, Arm::Control, t_star)?;
    let experimental = rmst_by_arm(dataset, Arm::Experimental, t_star)?;
    if control.mean <= 0.0 {
        return Err(Error::ZeroRmst(Arm::Control));
    }
    if experimental.mean <= 0.0 {
        return Err(Error::ZeroRmst(Arm::Experimental));
    }
    let point = (control.mean / experimental.mean).ln();
    let std_err = (control.variance / (control.mean * control.mean)
        + experimental.variance / (experimental.mean * experimental.mean))
        .sqrt();
    Ok(EffectEstimate::new(
        EffectScale::LogRmstRatio,
        point,
        std_err,
    ))
}

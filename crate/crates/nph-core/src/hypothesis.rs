//! Hypothesis tests for two-arm survival data: the standard log-rank test,
//! Fleming-Harrington weighted log-rank tests, and the restricted-mean
//! survival time (RMST) difference test.
//!
//! All tests share the sign convention z > 0 ⇔ the experimental arm is
//! favored, with a one-sided p-value 1 − Φ(z) against the alternative
//! S₁(t) > S₀(t).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::std_normal_cdf;
use crate::survival::{
    build_risk_table, kaplan_meier, pooled_left_survival, Arm, RiskTable, SurvivalCurve,
    TwoArmDataset,
};

/// Fleming-Harrington weight parameters (ρ, γ), both non-negative.
///
/// (0,0) reduces to the log-rank test; (0,1) stresses late differences,
/// (1,0) early, and (1,1) middle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlemingHarringtonParams {
    rho: f64,
    gamma: f64,
}

impl FlemingHarringtonParams {
    pub fn new(rho: f64, gamma: f64) -> Result<Self> {
        if !(rho.is_finite() && gamma.is_finite() && rho >= 0.0 && gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Fleming-Harrington parameters must be finite and non-negative, got ({rho}, {gamma})"
            )));
        }
        Ok(Self { rho, gamma })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Identity of the test that produced a [`TestResult`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestId {
    LogRank,
    FlemingHarrington(FlemingHarringtonParams),
    RmstDifference,
}

impl std::fmt::Display for TestId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TestId::LogRank => write!(f, "logrank"),
            TestId::FlemingHarrington(p) => write!(f, "fh({},{})", p.rho(), p.gamma()),
            TestId::RmstDifference => write!(f, "rmst_diff"),
        }
    }
}

/// Statistic U, its variance V(U), the normalized score z = U/√V(U), and the
/// one-sided p-value 1 − Φ(z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub variance: f64,
    pub z: f64,
    pub p_one_sided: f64,
    pub id: TestId,
}

impl TestResult {
    fn from_statistic(statistic: f64, variance: f64, id: TestId) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::DegenerateVariance);
        }
        let z = statistic / variance.sqrt();
        Ok(TestResult {
            statistic,
            variance,
            z,
            p_one_sided: 1.0 - std_normal_cdf(z),
            id,
        })
    }
}

/// Per-row U and V(U) contributions with weight w_j applied to U and w_j²
/// to V(U). Rows with a single subject at risk contribute no variance.
fn weighted_log_rank_stat(table: &RiskTable, weights: &[f64]) -> (f64, f64) {
    let mut u = 0.0;
    let mut v = 0.0;
    for (row, &w) in table.rows().iter().zip(weights) {
        let n0 = row.at_risk_control as f64;
        let n1 = row.at_risk_experimental as f64;
        let n = n0 + n1;
        let d = row.events_total() as f64;
        u += w * (row.events_control as f64 - d * n0 / n);
        if row.at_risk_total() > 1 {
            v += w * w * (n0 * n1 * d * (n - d)) / (n * n * (n - 1.0));
        }
    }
    (u, v)
}

/// Standard log-rank test: U sums the observed-minus-expected control-arm
/// events over the distinct event times.
///
/// ```
/// use nph_core::hypothesis::log_rank;
/// use nph_core::survival::{Arm, SurvivalObservation, TwoArmDataset};
///
/// let dataset = TwoArmDataset::new(vec![
///     SurvivalObservation::new(1.0, true, Arm::Control).unwrap(),
///     SurvivalObservation::new(2.0, false, Arm::Experimental).unwrap(),
/// ])
/// .unwrap();
/// let result = log_rank(&dataset).unwrap();
/// assert_eq!(result.statistic, 0.5);
/// assert_eq!(result.variance, 0.25);
/// assert_eq!(result.z, 1.0);
/// ```
pub fn log_rank(dataset: &TwoArmDataset) -> Result<TestResult> {
    dataset.require_both_arms()?;
    log_rank_from_table(&build_risk_table(dataset)?)
}

/// Log-rank test on a prebuilt risk table.
pub fn log_rank_from_table(table: &RiskTable) -> Result<TestResult> {
    let weights = vec![1.0; table.len()];
    let (u, v) = weighted_log_rank_stat(table, &weights);
    TestResult::from_statistic(u, v, TestId::LogRank)
}

/// Fleming-Harrington weights w_j = s_j^ρ (1 − s_j)^γ applied elementwise to
/// pooled left-limit survival values, with 0⁰ = 1.
pub fn fh_weights(pooled_left_surv: &[f64], params: &FlemingHarringtonParams) -> Vec<f64> {
    fn pow00(base: f64, exp: f64) -> f64 {
        if exp == 0.0 {
            1.0
        } else {
            base.powf(exp)
        }
    }
    pooled_left_surv
        .iter()
        .map(|&s| pow00(s, params.rho()) * pow00(1.0 - s, params.gamma()))
        .collect()
}

/// Weighted log-rank test with Fleming-Harrington weights computed from the
/// pooled Kaplan-Meier survival immediately prior to each event time.
pub fn weighted_log_rank(
    dataset: &TwoArmDataset,
    params: &FlemingHarringtonParams,
) -> Result<TestResult> {
    dataset.require_both_arms()?;
    weighted_log_rank_from_table(&build_risk_table(dataset)?, params)
}

/// Weighted log-rank test on a prebuilt risk table.
pub fn weighted_log_rank_from_table(
    table: &RiskTable,
    params: &FlemingHarringtonParams,
) -> Result<TestResult> {
    let weights = fh_weights(&pooled_left_survival(table), params);
    let (u, v) = weighted_log_rank_stat(table, &weights);
    TestResult::from_statistic(u, v, TestId::FlemingHarrington(*params))
}

/// Restricted mean survival time μ̂(t*) = ∫₀^t* Ŝ(t)dt with its variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmstEstimate {
    pub mean: f64,
    pub variance: f64,
    pub t_star: f64,
    /// Arm the estimate belongs to, or `None` when computed on pooled data.
    pub arm: Option<Arm>,
}

/// RMST of a Kaplan-Meier curve truncated at `t_star`.
///
/// The mean is the exact area under the step curve on [0, t*]. The variance
/// is Σ over event times t_i ≤ t* of [∫_{t_i}^{t*} Ŝ]² d_i / (Y_i (Y_i − d_i));
/// rows where the risk set is exhausted (Y_i = d_i) contribute zero because
/// the curve, and hence the leading integral, is zero beyond t_i.
pub fn rmst(curve: &SurvivalCurve, t_star: f64) -> Result<RmstEstimate> {
    if !(t_star > 0.0) || !t_star.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t_star must be positive and finite, got {t_star}"
        )));
    }
    if t_star > curve.max_observed_time() {
        return Err(Error::TStarBeyondSupport {
            t_star,
            max_observed: curve.max_observed_time(),
        });
    }
    let step = curve.step_fn();
    let mean = step.integrate(0.0, t_star)?;
    let mut variance = 0.0;
    for ((&t, &y), &d) in curve
        .times()
        .iter()
        .zip(curve.at_risk())
        .zip(curve.events())
    {
        if t > t_star || y == d {
            continue;
        }
        let tail = step.integrate(t, t_star)?;
        let y = y as f64;
        let d = d as f64;
        variance += tail * tail * d / (y * (y - d));
    }
    Ok(RmstEstimate {
        mean,
        variance,
        t_star,
        arm: None,
    })
}

/// Per-arm RMST of a dataset at a common `t_star`.
pub fn rmst_by_arm(dataset: &TwoArmDataset, arm: Arm, t_star: f64) -> Result<RmstEstimate> {
    let observations: Vec<_> = dataset.arm_observations(arm).copied().collect();
    if observations.is_empty() {
        return Err(Error::EmptyArm(arm));
    }
    let curve = kaplan_meier(&observations)?;
    let mut estimate = rmst(&curve, t_star)?;
    estimate.arm = Some(arm);
    Ok(estimate)
}

/// RMST difference test: U = μ̂₁(t*) − μ̂₀(t*), V(U) = V(μ̂₁) + V(μ̂₀).
pub fn rmst_difference_test(dataset: &TwoArmDataset, t_star: f64) -> Result<TestResult> {
    dataset.require_both_arms()?;
    let control = rmst_by_arm(dataset, Arm::Control, t_star)?;
    let experimental = rmst_by_arm(dataset, Arm::Experimental, t_star)?;
    TestResult::from_statistic(
        experimental.mean - control.mean,
        experimental.variance + control.variance,
        TestId::RmstDifference,
    )
}

/// Minimum over arms of the maximum observed (event or censored) time.
pub fn minimax_observed_time(dataset: &TwoArmDataset) -> Result<f64> {
    let mut minimax = f64::INFINITY;
    for arm in [Arm::Control, Arm::Experimental] {
        let max = dataset
            .max_observed_time(arm)
            .ok_or(Error::EmptyArm(arm))?;
        minimax = minimax.min(max);
    }
    Ok(minimax)
}

/// Minimum over arms of the maximum event time.
pub fn minimax_event_time(dataset: &TwoArmDataset) -> Result<f64> {
    let mut minimax = f64::INFINITY;
    for arm in [Arm::Control, Arm::Experimental] {
        let max = dataset
            .max_event_time(arm)
            .ok_or(Error::NoEventsInArm(arm))?;
        minimax = minimax.min(max);
    }
    Ok(minimax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::survival::SurvivalObservation;

    fn dataset(rows: &[(f64, bool, u8)]) -> TwoArmDataset {
        TwoArmDataset::new(
            rows.iter()
                .map(|&(t, e, a)| {
                    SurvivalObservation::new(t, e, Arm::from_index(a as usize).unwrap()).unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    /// Random dataset with exponential times, ~30% censoring, both arms.
    fn random_dataset(stream: &mut RngStream, n_per_arm: usize) -> TwoArmDataset {
        let mut rows = Vec::new();
        for arm in [Arm::Control, Arm::Experimental] {
            for _ in 0..n_per_arm {
                let t = -stream.uniform_open01().ln() * 6.0;
                let event = stream.uniform_open01() > 0.3;
                rows.push(SurvivalObservation::new(t, event, arm).unwrap());
            }
        }
        TwoArmDataset::new(rows).unwrap()
    }

    #[test]
    fn log_rank_hand_computed() {
        // U = 1 − 1·(1/2) = 0.5, V = (1·1·1·1)/(4·1) = 0.25, Z = 1.
        let ds = dataset(&[(1.0, true, 0), (2.0, false, 1)]);
        let r = log_rank(&ds).unwrap();
        assert!((r.statistic - 0.5).abs() < 1e-15);
        assert!((r.variance - 0.25).abs() < 1e-15);
        assert!((r.z - 1.0).abs() < 1e-15);
        assert!((r.p_one_sided - (1.0 - std_normal_cdf(1.0))).abs() < 1e-15);
    }

    #[test]
    fn log_rank_mirrored_data_is_exactly_null() {
        let ds = dataset(&[
            (1.0, true, 0),
            (1.0, true, 1),
            (2.0, false, 0),
            (2.0, false, 1),
            (3.0, true, 0),
            (3.0, true, 1),
        ]);
        let r = log_rank(&ds).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.z, 0.0);
        assert_eq!(r.p_one_sided, 0.5);
    }

    #[test]
    fn log_rank_degenerate_variance() {
        // Each event row has every at-risk subject in one arm.
        let ds = dataset(&[(1.0, true, 0), (2.0, true, 1)]);
        // Row t=1: n0=1, n1=1 — fine; row t=2: n0=0. Construct a truly
        // degenerate case instead: single event after the other arm is gone.
        let r = log_rank(&ds);
        assert!(r.is_ok());
        let degenerate = dataset(&[(1.0, false, 0), (2.0, true, 1)]);
        assert!(matches!(
            log_rank(&degenerate),
            Err(Error::DegenerateVariance)
        ));
    }

    #[test]
    fn fh_weight_examples() {
        let flat = FlemingHarringtonParams::new(0.0, 0.0).unwrap();
        assert_eq!(fh_weights(&[1.0, 0.5, 0.1], &flat), vec![1.0, 1.0, 1.0]);

        let late = FlemingHarringtonParams::new(0.0, 1.0).unwrap();
        let w = fh_weights(&[1.0, 0.6, 0.2], &late);
        assert!((w[0] - 0.0).abs() < 1e-15);
        assert!((w[1] - 0.4).abs() < 1e-15);
        assert!((w[2] - 0.8).abs() < 1e-15);

        let mid = FlemingHarringtonParams::new(1.0, 1.0).unwrap();
        assert_eq!(fh_weights(&[0.5], &mid), vec![0.25]);
    }

    #[test]
    fn fh_zero_to_zero_is_one() {
        let p = FlemingHarringtonParams::new(0.0, 0.0).unwrap();
        assert_eq!(fh_weights(&[0.0, 1.0], &p), vec![1.0, 1.0]);
    }

    #[test]
    fn fh_rejects_negative_parameters() {
        assert!(FlemingHarringtonParams::new(-0.1, 0.0).is_err());
        assert!(FlemingHarringtonParams::new(0.0, f64::NAN).is_err());
    }

    #[test]
    fn weighted_with_zero_params_is_bitwise_log_rank() {
        let mut stream = RngStream::new(2024, 0);
        let params = FlemingHarringtonParams::new(0.0, 0.0).unwrap();
        for _ in 0..1000 {
            let ds = random_dataset(&mut stream, 12);
            let plain = log_rank(&ds).unwrap();
            let weighted = weighted_log_rank(&ds, &params).unwrap();
            assert_eq!(plain.statistic, weighted.statistic);
            assert_eq!(plain.variance, weighted.variance);
            assert_eq!(plain.z, weighted.z);
            assert_eq!(plain.p_one_sided, weighted.p_one_sided);
        }
    }

    #[test]
    fn weighted_degenerate_on_single_event_row() {
        // G(0,1): the only event row has pooled left survival 1, so w = 0.
        let ds = dataset(&[(1.0, true, 0), (2.0, false, 1), (0.5, false, 1)]);
        let params = FlemingHarringtonParams::new(0.0, 1.0).unwrap();
        assert!(matches!(
            weighted_log_rank(&ds, &params),
            Err(Error::DegenerateVariance)
        ));
    }

    #[test]
    fn arm_swap_negates_z_for_all_tests() {
        let mut stream = RngStream::new(7, 1);
        for _ in 0..200 {
            let ds = random_dataset(&mut stream, 15);
            let swapped = ds.with_swapped_arms();

            let a = log_rank(&ds).unwrap();
            let b = log_rank(&swapped).unwrap();
            assert!((a.z + b.z).abs() < 1e-10);
            assert!((a.p_one_sided + b.p_one_sided - 1.0).abs() < 1e-10);

            let params = FlemingHarringtonParams::new(1.0, 1.0).unwrap();
            let a = weighted_log_rank(&ds, &params).unwrap();
            let b = weighted_log_rank(&swapped, &params).unwrap();
            assert!((a.z + b.z).abs() < 1e-10);

            let t_star = minimax_observed_time(&ds).unwrap();
            let a = rmst_difference_test(&ds, t_star).unwrap();
            let b = rmst_difference_test(&swapped, t_star).unwrap();
            assert!((a.z + b.z).abs() < 1e-10);
        }
    }

    #[test]
    fn time_scaling_leaves_rank_tests_unchanged() {
        let mut stream = RngStream::new(99, 4);
        let params = FlemingHarringtonParams::new(0.0, 1.0).unwrap();
        for _ in 0..100 {
            let ds = random_dataset(&mut stream, 10);
            let scaled = TwoArmDataset::new(
                ds.observations()
                    .iter()
                    .map(|o| SurvivalObservation::new(o.time * 3.25, o.event, o.arm).unwrap())
                    .collect(),
            )
            .unwrap();
            let a = log_rank(&ds).unwrap();
            let b = log_rank(&scaled).unwrap();
            assert_eq!(a.statistic, b.statistic);
            assert_eq!(a.variance, b.variance);
            let a = weighted_log_rank(&ds, &params).unwrap();
            let b = weighted_log_rank(&scaled, &params).unwrap();
            assert_eq!(a.z, b.z);
        }
    }

    #[test]
    fn rmst_flat_curve() {
        let curve = kaplan_meier(&[
            SurvivalObservation::new(8.0, false, Arm::Control).unwrap(),
            SurvivalObservation::new(9.0, true, Arm::Control).unwrap(),
        ])
        .unwrap();
        let est = rmst(&curve, 5.0).unwrap();
        assert_eq!(est.mean, 5.0);
        assert_eq!(est.variance, 0.0);
    }

    #[test]
    fn rmst_hand_integration() {
        // Events at 1 and 3, no censoring, t* = 2: area = 1·1 + 0.5·1 = 1.5.
        let curve = kaplan_meier(&[
            SurvivalObservation::new(1.0, true, Arm::Control).unwrap(),
            SurvivalObservation::new(3.0, true, Arm::Control).unwrap(),
        ])
        .unwrap();
        let est = rmst(&curve, 2.0).unwrap();
        assert!((est.mean - 1.5).abs() < 1e-15);
        // Variance at t*=2: only t=1 contributes, tail ∫₁² Ŝ = 0.5,
        // d/Y(Y−d) = 1/(2·1), so V = 0.25·0.5 = 0.125.
        assert!((est.variance - 0.125).abs() < 1e-15);
    }

    #[test]
    fn rmst_large_exponential_sample_matches_closed_form() {
        // λ = ln2/6, t* = 12: true RMST = (1/λ)(1 − e^{−12λ}) = 4.5/ln2.
        let lambda = std::f64::consts::LN_2 / 6.0;
        let truth = (1.0 - (-12.0 * lambda).exp()) / lambda;
        let mut stream = RngStream::new(314159, 0);
        let observations: Vec<_> = (0..200_000)
            .map(|_| {
                let t = -stream.uniform_open01().ln() / lambda;
                SurvivalObservation::new(t, true, Arm::Control).unwrap()
            })
            .collect();
        let curve = kaplan_meier(&observations).unwrap();
        let est = rmst(&curve, 12.0).unwrap();
        assert!(
            (est.mean - truth).abs() < 0.02,
            "mean {} vs closed form {truth}",
            est.mean
        );
    }

    #[test]
    fn rmst_beyond_support_is_error() {
        let curve = kaplan_meier(&[SurvivalObservation::new(2.0, true, Arm::Control).unwrap()])
            .unwrap();
        assert!(matches!(
            rmst(&curve, 2.5),
            Err(Error::TStarBeyondSupport { .. })
        ));
    }

    #[test]
    fn rmst_monotone_in_t_star() {
        let mut stream = RngStream::new(5, 5);
        let ds = random_dataset(&mut stream, 40);
        let observations: Vec<_> = ds.arm_observations(Arm::Control).copied().collect();
        let curve = kaplan_meier(&observations).unwrap();
        let max = curve.max_observed_time();
        let mut prev_mean = 0.0;
        let mut prev_var = 0.0;
        let mut t = max / 20.0;
        while t < max {
            let est = rmst(&curve, t).unwrap();
            assert!(est.mean >= prev_mean - 1e-12);
            assert!(est.variance >= prev_var - 1e-12);
            assert!(est.mean > 0.0 && est.mean <= t + 1e-12);
            prev_mean = est.mean;
            prev_var = est.variance;
            t += max / 20.0;
        }
    }

    /// Brute-force oracle: recompute the variance with explicit rectangle
    /// sums over the step curve, independently of `StepFunction::integrate`.
    fn rmst_variance_brute_force(curve: &SurvivalCurve, t_star: f64) -> f64 {
        let times = curve.times();
        let survival = curve.survival();
        let tail_area = |from: f64| -> f64 {
            let mut area = 0.0;
            let mut t = from;
            let mut value = {
                // survival value at `from` (right-continuous)
                let mut v = 1.0;
                for (i, &ti) in times.iter().enumerate() {
                    if ti <= from {
                        v = survival[i];
                    }
                }
                v
            };
            for (i, &ti) in times.iter().enumerate() {
                if ti <= from || ti >= t_star {
                    continue;
                }
                area += value * (ti - t);
                t = ti;
                value = survival[i];
            }
            area + value * (t_star - t)
        };
        let mut v = 0.0;
        for (i, &ti) in times.iter().enumerate() {
            if ti > t_star {
                continue;
            }
            let y = curve.at_risk()[i] as f64;
            let d = curve.events()[i] as f64;
            if y > d {
                let tail = tail_area(ti);
                v += tail * tail * d / (y * (y - d));
            }
        }
        v
    }

    #[test]
    fn rmst_variance_matches_brute_force_oracle() {
        let mut stream = RngStream::new(17, 3);
        for _ in 0..200 {
            let ds = random_dataset(&mut stream, 12);
            let observations: Vec<_> = ds.arm_observations(Arm::Control).copied().collect();
            let curve = kaplan_meier(&observations).unwrap();
            let t_star = curve.max_observed_time() * (0.3 + 0.7 * stream.uniform_open01());
            let est = rmst(&curve, t_star).unwrap();
            let oracle = rmst_variance_brute_force(&curve, t_star);
            assert!(
                (est.variance - oracle).abs() < 1e-10,
                "variance {} vs oracle {oracle}",
                est.variance
            );
        }
    }

    #[test]
    fn rmst_difference_mirrored_is_null() {
        let ds = dataset(&[
            (1.0, true, 0),
            (1.0, true, 1),
            (4.0, false, 0),
            (4.0, false, 1),
            (6.0, true, 0),
            (6.0, true, 1),
        ]);
        let r = rmst_difference_test(&ds, 5.0).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_one_sided, 0.5);
    }

    #[test]
    fn minimax_times() {
        let ds = dataset(&[
            (1.0, true, 0),
            (9.0, true, 0),
            (10.0, false, 0),
            (2.0, true, 1),
            (11.0, true, 1),
            (12.0, false, 1),
        ]);
        assert_eq!(minimax_observed_time(&ds).unwrap(), 10.0);
        assert_eq!(minimax_event_time(&ds).unwrap(), 9.0);

        let single = dataset(&[(3.0, true, 0), (7.0, true, 1)]);
        assert_eq!(minimax_observed_time(&single).unwrap(), 3.0);

        let tied = dataset(&[(5.0, true, 0), (5.0, true, 1)]);
        assert_eq!(minimax_event_time(&tied).unwrap(), 5.0);
    }

    #[test]
    fn minimax_event_requires_events_in_both_arms() {
        let ds = dataset(&[(1.0, true, 0), (2.0, false, 1)]);
        assert!(matches!(
            minimax_event_time(&ds),
            Err(Error::NoEventsInArm(Arm::Experimental))
        ));
    }

    #[test]
    fn null_exponential_rejection_rate_is_alpha() {
        // Both arms from the same exponential: the 2.5% one-sided log-rank
        // rejection fraction over 10⁴ replicates must sit inside the exact
        // binomial 99% interval around 0.025.
        let mut rejections = 0u32;
        let n_reps = 10_000;
        for rep in 0..n_reps {
            let mut stream = RngStream::new(31337, rep);
            let ds = {
                let mut rows = Vec::with_capacity(120);
                for arm in [Arm::Control, Arm::Experimental] {
                    for _ in 0..60 {
                        let t = -stream.uniform_open01().ln() * 6.0;
                        rows.push(SurvivalObservation::new(t, true, arm).unwrap());
                    }
                }
                TwoArmDataset::new(rows).unwrap()
            };
            if log_rank(&ds).unwrap().p_one_sided <= 0.025 {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / n_reps as f64;
        // 0.025 ± 2.576·sqrt(0.025·0.975/10⁴)
        assert!(
            (rate - 0.025).abs() < 2.576 * (0.025 * 0.975 / n_reps as f64).sqrt(),
            "null rejection rate {rate}"
        );
    }
}

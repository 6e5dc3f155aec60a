//! Monte Carlo engine: runs scenario grids across tests and estimators and
//! aggregates power, type-I error, and mean treatment-effect estimates with
//! Monte Carlo standard errors.
//!
//! Trial `i` of every cell always uses random stream `i` of the master
//! seed, so adding a test or estimator never perturbs the simulated data,
//! and per-trial results are folded in trial order, so summaries are
//! identical for any worker count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effects::{hazard_ratio_from_table, weighted_hazard_ratio_from_table};
use crate::error::{Error, Result};
use crate::hypothesis::{
    log_rank_from_table, minimax_event_time, minimax_observed_time, rmst,
    weighted_log_rank_from_table, FlemingHarringtonParams, TestResult,
};
use crate::numerics::RngStream;
use crate::simgen::{
    make_scenario, simulate_latent, simulate_trial_with_hazards, PiecewiseExponential,
    ScenarioSpec, SimulatedTrial, TrialDesign,
};
use crate::survival::{build_risk_table, kaplan_meier, Arm, SurvivalCurve, TwoArmDataset};

// ── Run specification ───────────────────────────────────────────────────────

/// A hypothesis test requested from the engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestSpec {
    LogRank,
    FlemingHarrington(FlemingHarringtonParams),
    RmstDifference,
}

impl TestSpec {
    /// Comma-free identifier used in CSV columns.
    pub fn csv_id(&self) -> String {
        match self {
            TestSpec::LogRank => "logrank".into(),
            TestSpec::FlemingHarrington(p) => format!("fh_{}_{}", p.rho(), p.gamma()),
            TestSpec::RmstDifference => "rmst_diff".into(),
        }
    }
}

impl std::fmt::Display for TestSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TestSpec::LogRank => write!(f, "logrank"),
            TestSpec::FlemingHarrington(p) => write!(f, "fh({},{})", p.rho(), p.gamma()),
            TestSpec::RmstDifference => write!(f, "rmst_diff"),
        }
    }
}

/// A treatment-effect estimator requested from the engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorSpec {
    HazardRatio,
    WeightedHazardRatio(FlemingHarringtonParams),
    RmstDifference,
    RmstRatio,
}

impl EstimatorSpec {
    /// Comma-free identifier used in CSV columns.
    pub fn csv_id(&self) -> String {
        match self {
            EstimatorSpec::HazardRatio => "hr".into(),
            EstimatorSpec::WeightedHazardRatio(p) => format!("whr_{}_{}", p.rho(), p.gamma()),
            EstimatorSpec::RmstDifference => "rmst_diff".into(),
            EstimatorSpec::RmstRatio => "rmst_ratio".into(),
        }
    }
}

impl std::fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimatorSpec::HazardRatio => write!(f, "hr"),
            EstimatorSpec::WeightedHazardRatio(p) => write!(f, "whr({},{})", p.rho(), p.gamma()),
            EstimatorSpec::RmstDifference => write!(f, "rmst_diff"),
            EstimatorSpec::RmstRatio => write!(f, "rmst_ratio"),
        }
    }
}

fn parse_fh_args(body: &str) -> Option<FlemingHarringtonParams> {
    let (rho, gamma) = body.split_once([',', ';', '_'])?;
    FlemingHarringtonParams::new(rho.trim().parse().ok()?, gamma.trim().parse().ok()?).ok()
}

impl std::str::FromStr for TestSpec {
    type Err = Error;

    /// Accepts `logrank`, `rmst_diff`, and `fh(ρ,γ)` (or `fh_ρ_γ`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "logrank" | "log-rank" => return Ok(TestSpec::LogRank),
            "rmst_diff" | "rmst-diff" => return Ok(TestSpec::RmstDifference),
            _ => {}
        }
        let body = s
            .strip_prefix("fh(")
            .and_then(|rest| rest.strip_suffix(')'))
            .or_else(|| s.strip_prefix("fh_"));
        body.and_then(parse_fh_args)
            .map(TestSpec::FlemingHarrington)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown test '{s}'")))
    }
}

impl std::str::FromStr for EstimatorSpec {
    type Err = Error;

    /// Accepts `hr`, `rmst_diff`, `rmst_ratio`, and `whr(ρ,γ)` (or `whr_ρ_γ`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "hr" => return Ok(EstimatorSpec::HazardRatio),
            "rmst_diff" | "rmst-diff" => return Ok(EstimatorSpec::RmstDifference),
            "rmst_ratio" | "rmst-ratio" => return Ok(EstimatorSpec::RmstRatio),
            _ => {}
        }
        let body = s
            .strip_prefix("whr(")
            .and_then(|rest| rest.strip_suffix(')'))
            .or_else(|| s.strip_prefix("whr_"));
        body.and_then(parse_fh_args)
            .map(EstimatorSpec::WeightedHazardRatio)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimator '{s}'")))
    }
}

impl std::str::FromStr for TStarRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "minimax-observed" | "minimax_observed" => return Ok(TStarRule::MinimaxObserved),
            "minimax-event" | "minimax_event" => return Ok(TStarRule::MinimaxEvent),
            "arm-event" | "arm_event" => return Ok(TStarRule::ArmEvent),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("fixed:") {
            let value: f64 = rest.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("invalid fixed t* '{rest}'"))
            })?;
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter("fixed t* must be positive".into()));
            }
            return Ok(TStarRule::Fixed(value));
        }
        Err(Error::InvalidParameter(format!("unknown t* rule '{s}'")))
    }
}

/// Rule choosing the RMST truncation time t* per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TStarRule {
    /// Minimum over arms of the maximum observed (event or censored) time.
    MinimaxObserved,
    /// Minimum over arms of the maximum event time.
    MinimaxEvent,
    /// Each arm truncated at its own last event time, the per-curve
    /// restricted-mean convention of standard survival software. Only
    /// meaningful for per-arm summaries; tests and two-arm estimands built
    /// on it mix truncation points.
    ArmEvent,
    /// Fixed truncation in months, capped per trial at the minimax observed
    /// time (caps are counted).
    Fixed(f64),
}

impl std::fmt::Display for TStarRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TStarRule::MinimaxObserved => write!(f, "minimax-observed"),
            TStarRule::MinimaxEvent => write!(f, "minimax-event"),
            TStarRule::ArmEvent => write!(f, "arm-event"),
            TStarRule::Fixed(x) => write!(f, "fixed:{x}"),
        }
    }
}

/// Null construction imposed on top of the scenario grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullMode {
    /// Simulate the scenario as specified (alternative hypothesis).
    None,
    /// Both arms draw from the plain control hazard: H₀: S₀ = S₁.
    EqualSurvival,
    /// Both arms draw from the scenario's experimental hazard, so two
    /// delayed-effects arms share the same change threshold: H₀: δ₀ = δ₁.
    EqualThreshold,
}

/// Statistic used to summarize per-trial effect estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryStat {
    Mean,
    Median,
}

/// Full specification of a Monte Carlo run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub design: TrialDesign,
    pub scenarios: Vec<ScenarioSpec>,
    pub tests: Vec<TestSpec>,
    pub estimators: Vec<EstimatorSpec>,
    pub n_sims: u32,
    pub master_seed: u64,
    pub null_mode: NullMode,
    pub tstar_rule: TStarRule,
    pub summary_stat: SummaryStat,
}

impl RunSpec {
    pub fn new(design: TrialDesign, scenarios: Vec<ScenarioSpec>) -> Self {
        Self {
            design,
            scenarios,
            tests: vec![TestSpec::LogRank],
            estimators: vec![],
            n_sims: 10_000,
            master_seed: 20250810,
            null_mode: NullMode::None,
            tstar_rule: TStarRule::MinimaxObserved,
            summary_stat: SummaryStat::Mean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.design.validate()?;
        if self.scenarios.is_empty() {
            return Err(Error::InvalidDesign("scenario grid is empty".into()));
        }
        for s in &self.scenarios {
            s.validate()?;
        }
        if self.tests.is_empty() {
            return Err(Error::InvalidDesign("tests list is empty".into()));
        }
        if self.n_sims < 100 {
            return Err(Error::InvalidDesign("n_sims must be at least 100".into()));
        }
        if let TStarRule::Fixed(x) = self.tstar_rule {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidDesign("fixed t* must be positive".into()));
            }
        }
        Ok(())
    }
}

// ── Per-trial analysis ──────────────────────────────────────────────────────

#[derive(Debug, Clone)]
struct TrialOutcome {
    shortfall: bool,
    t_star: Option<f64>,
    t_star_capped: bool,
    rmst_control: Option<f64>,
    rmst_experimental: Option<f64>,
    /// One entry per requested test: Some(reject?) or None on failure.
    tests: Vec<Option<bool>>,
    /// One entry per requested estimator, on the natural scale.
    estimates: Vec<Option<f64>>,
}

fn arm_curve(dataset: &TwoArmDataset, arm: Arm) -> Result<SurvivalCurve> {
    let observations: Vec<_> = dataset.arm_observations(arm).copied().collect();
    if observations.is_empty() {
        return Err(Error::EmptyArm(arm));
    }
    kaplan_meier(&observations)
}

/// Per-arm truncation times (control, experimental) plus whether a fixed
/// rule had to be capped. All rules except `ArmEvent` use a common time.
fn choose_t_star(dataset: &TwoArmDataset, rule: TStarRule) -> Result<(f64, f64, bool)> {
    match rule {
        TStarRule::MinimaxObserved => {
            let t = minimax_observed_time(dataset)?;
            Ok((t, t, false))
        }
        TStarRule::MinimaxEvent => {
            let t = minimax_event_time(dataset)?;
            Ok((t, t, false))
        }
        TStarRule::ArmEvent => {
            let control = dataset
                .max_event_time(Arm::Control)
                .ok_or(Error::NoEventsInArm(Arm::Control))?;
            let experimental = dataset
                .max_event_time(Arm::Experimental)
                .ok_or(Error::NoEventsInArm(Arm::Experimental))?;
            Ok((control, experimental, false))
        }
        TStarRule::Fixed(x) => {
            let cap = minimax_observed_time(dataset)?;
            if x > cap {
                Ok((cap, cap, true))
            } else {
                Ok((x, x, false))
            }
        }
    }
}

fn rmst_difference_result(
    control: &crate::hypothesis::RmstEstimate,
    experimental: &crate::hypothesis::RmstEstimate,
) -> Result<TestResult> {
    let variance = control.variance + experimental.variance;
    if !(variance > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    let statistic = experimental.mean - control.mean;
    let z = statistic / variance.sqrt();
    Ok(TestResult {
        statistic,
        variance,
        z,
        p_one_sided: 1.0 - crate::numerics::std_normal_cdf(z),
        id: crate::hypothesis::TestId::RmstDifference,
    })
}

fn analyze_trial(
    trial: &SimulatedTrial,
    tests: &[TestSpec],
    estimators: &[EstimatorSpec],
    tstar_rule: TStarRule,
    alpha: f64,
) -> TrialOutcome {
    let dataset = &trial.dataset;
    let table = build_risk_table(dataset);

    // Per-arm RMSTs are computed for every trial: tests and estimators share
    // them, and the cell summary reports their means regardless.
    let mut t_star = None;
    let mut t_star_capped = false;
    let mut rmst_pair = None;
    if let Ok((ts_control, ts_experimental, capped)) = choose_t_star(dataset, tstar_rule) {
        t_star = Some(0.5 * (ts_control + ts_experimental));
        t_star_capped = capped;
        let control = arm_curve(dataset, Arm::Control).and_then(|c| rmst(&c, ts_control));
        let experimental =
            arm_curve(dataset, Arm::Experimental).and_then(|c| rmst(&c, ts_experimental));
        if let (Ok(c), Ok(e)) = (control, experimental) {
            rmst_pair = Some((c, e));
        }
    }

    let test_outcomes = tests
        .iter()
        .map(|spec| {
            let result = match spec {
                TestSpec::LogRank => table.as_ref().ok().and_then(|t| log_rank_from_table(t).ok()),
                TestSpec::FlemingHarrington(p) => table
                    .as_ref()
                    .ok()
                    .and_then(|t| weighted_log_rank_from_table(t, p).ok()),
                TestSpec::RmstDifference => rmst_pair
                    .as_ref()
                    .and_then(|(c, e)| rmst_difference_result(c, e).ok()),
            };
            result.map(|r| r.p_one_sided <= alpha)
        })
        .collect();

    let estimates = estimators
        .iter()
        .map(|spec| match spec {
            EstimatorSpec::HazardRatio => table
                .as_ref()
                .ok()
                .and_then(|t| hazard_ratio_from_table(t).ok())
                .map(|e| e.reported),
            EstimatorSpec::WeightedHazardRatio(p) => table
                .as_ref()
                .ok()
                .and_then(|t| weighted_hazard_ratio_from_table(t, p).ok())
                .map(|e| e.reported),
            EstimatorSpec::RmstDifference => rmst_pair.as_ref().map(|(c, e)| e.mean - c.mean),
            EstimatorSpec::RmstRatio => rmst_pair.as_ref().and_then(|(c, e)| {
                (c.mean > 0.0 && e.mean > 0.0).then(|| c.mean / e.mean)
            }),
        })
        .collect();

    TrialOutcome {
        shortfall: trial.shortfall,
        t_star,
        t_star_capped,
        rmst_control: rmst_pair.as_ref().map(|(c, _)| c.mean),
        rmst_experimental: rmst_pair.as_ref().map(|(_, e)| e.mean),
        tests: test_outcomes,
        estimates,
    }
}

// ── Summaries ───────────────────────────────────────────────────────────────

/// Rejection counts for one test in one scenario cell.
#[derive(Debug, Clone)]
pub struct TestSummary {
    pub spec: TestSpec,
    pub n_rejected: u32,
    pub n_used: u32,
    pub n_failed: u32,
}

impl TestSummary {
    pub fn rejection_rate(&self) -> f64 {
        self.n_rejected as f64 / self.n_used as f64
    }

    /// Binomial Monte Carlo standard error √(p̂(1−p̂)/n).
    pub fn mc_std_err(&self) -> f64 {
        let p = self.rejection_rate();
        (p * (1.0 - p) / self.n_used as f64).sqrt()
    }
}

/// Per-trial effect estimates for one estimator in one scenario cell.
#[derive(Debug, Clone)]
pub struct EstimatorSummary {
    pub spec: EstimatorSpec,
    /// Natural-scale estimates from the trials where estimation succeeded.
    pub values: Vec<f64>,
    pub n_failed: u32,
}

impl EstimatorSummary {
    pub fn n_used(&self) -> u32 {
        self.values.len() as u32
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn median(&self) -> f64 {
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        }
    }

    pub fn point(&self, stat: SummaryStat) -> f64 {
        match stat {
            SummaryStat::Mean => self.mean(),
            SummaryStat::Median => self.median(),
        }
    }

    fn sd(&self) -> f64 {
        let n = self.values.len() as f64;
        let mean = self.mean();
        (self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }

    /// Standard error of the reported summary across trials. The median SE
    /// uses the normal-approximation factor 1.2533.
    pub fn mc_std_err(&self, stat: SummaryStat) -> f64 {
        let se = self.sd() / (self.values.len() as f64).sqrt();
        match stat {
            SummaryStat::Mean => se,
            SummaryStat::Median => 1.2533 * se,
        }
    }
}

/// Simple running mean for auxiliary per-trial quantities.
#[derive(Debug, Clone, Default)]
pub struct RunningMean {
    pub sum: f64,
    pub count: u32,
}

impl RunningMean {
    fn push(&mut self, v: f64) {
        self.sum += v;
        self.count += 1;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}

/// Aggregated results for one scenario cell.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub scenario: ScenarioSpec,
    pub n_sims: u32,
    pub shortfall_count: u32,
    pub t_star_cap_count: u32,
    pub mean_t_star: RunningMean,
    pub mean_rmst_control: RunningMean,
    pub mean_rmst_experimental: RunningMean,
    pub tests: Vec<TestSummary>,
    pub estimators: Vec<EstimatorSummary>,
}

impl CellSummary {
    pub fn test(&self, spec: TestSpec) -> Option<&TestSummary> {
        self.tests.iter().find(|t| t.spec == spec)
    }

    pub fn estimator(&self, spec: EstimatorSpec) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|e| e.spec == spec)
    }
}

/// Results of a full grid run.
#[derive(Debug, Clone)]
pub struct SimulationSummary {
    pub design: TrialDesign,
    pub dropout_rate: f64,
    pub n_sims: u32,
    pub master_seed: u64,
    pub summary_stat: SummaryStat,
    pub cells: Vec<CellSummary>,
}

// ── Engine ──────────────────────────────────────────────────────────────────

fn hazards_for_cell(
    scenario: &ScenarioSpec,
    null_mode: NullMode,
) -> Result<(PiecewiseExponential, PiecewiseExponential)> {
    match null_mode {
        NullMode::None => make_scenario(scenario),
        NullMode::EqualSurvival => {
            let control = PiecewiseExponential::constant(scenario.control_rate())?;
            Ok((control.clone(), control))
        }
        NullMode::EqualThreshold => {
            let (_, experimental) = make_scenario(scenario)?;
            Ok((experimental.clone(), experimental))
        }
    }
}

fn run_cell(
    spec: &RunSpec,
    scenario: &ScenarioSpec,
    dropout_rate: f64,
) -> Result<CellSummary> {
    let hazards = hazards_for_cell(scenario, spec.null_mode)?;
    let design = spec.design;
    let alpha = design.alpha_one_sided;

    let outcomes: Vec<TrialOutcome> = (0..spec.n_sims)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(spec.master_seed, i as u64);
            let trial = simulate_trial_with_hazards(&design, &hazards, dropout_rate, &mut stream);
            analyze_trial(&trial, &spec.tests, &spec.estimators, spec.tstar_rule, alpha)
        })
        .collect();

    // Sequential fold in trial order keeps summaries worker-count invariant.
    let mut cell = CellSummary {
        scenario: *scenario,
        n_sims: spec.n_sims,
        shortfall_count: 0,
        t_star_cap_count: 0,
        mean_t_star: RunningMean::default(),
        mean_rmst_control: RunningMean::default(),
        mean_rmst_experimental: RunningMean::default(),
        tests: spec
            .tests
            .iter()
            .map(|&t| TestSummary {
                spec: t,
                n_rejected: 0,
                n_used: 0,
                n_failed: 0,
            })
            .collect(),
        estimators: spec
            .estimators
            .iter()
            .map(|&e| EstimatorSummary {
                spec: e,
                values: Vec::with_capacity(spec.n_sims as usize),
                n_failed: 0,
            })
            .collect(),
    };

    for outcome in &outcomes {
        if outcome.shortfall {
            cell.shortfall_count += 1;
        }
        if outcome.t_star_capped {
            cell.t_star_cap_count += 1;
        }
        if let Some(ts) = outcome.t_star {
            cell.mean_t_star.push(ts);
        }
        if let Some(v) = outcome.rmst_control {
            cell.mean_rmst_control.push(v);
        }
        if let Some(v) = outcome.rmst_experimental {
            cell.mean_rmst_experimental.push(v);
        }
        for (summary, result) in cell.tests.iter_mut().zip(&outcome.tests) {
            match result {
                Some(reject) => {
                    summary.n_used += 1;
                    if *reject {
                        summary.n_rejected += 1;
                    }
                }
                None => summary.n_failed += 1,
            }
        }
        for (summary, estimate) in cell.estimators.iter_mut().zip(&outcome.estimates) {
            match estimate {
                Some(v) => summary.values.push(*v),
                None => summary.n_failed += 1,
            }
        }
    }
    Ok(cell)
}

/// Run every scenario cell of `spec`, applying each requested test and
/// estimator to each of `n_sims` simulated trials.
///
/// ```
/// use nph_core::harness::{run_grid, RunSpec, TestSpec};
/// use nph_core::simgen::{ScenarioSpec, TrialDesign};
///
/// let mut spec = RunSpec::new(TrialDesign::default(), vec![ScenarioSpec::proportional()]);
/// spec.n_sims = 100;
/// spec.tests = vec![TestSpec::LogRank];
/// let summary = run_grid(&spec, 0.0).unwrap();
/// let power = summary.cells[0].tests[0].rejection_rate();
/// assert!(power > 0.75, "log-rank power {power}");
/// ```
pub fn run_grid(spec: &RunSpec, dropout_rate: f64) -> Result<SimulationSummary> {
    spec.validate()?;
    let mut cells = Vec::with_capacity(spec.scenarios.len());
    for scenario in &spec.scenarios {
        cells.push(run_cell(spec, scenario, dropout_rate)?);
    }
    Ok(SimulationSummary {
        design: spec.design,
        dropout_rate,
        n_sims: spec.n_sims,
        master_seed: spec.master_seed,
        summary_stat: spec.summary_stat,
        cells,
    })
}

/// Null grid where both arms receive the delayed-effects hazard with the
/// same threshold, one cell per threshold.
pub fn run_null_equal_threshold(
    spec: &RunSpec,
    threshold_grid: &[f64],
    dropout_rate: f64,
) -> Result<SimulationSummary> {
    let mut null_spec = spec.clone();
    null_spec.null_mode = NullMode::EqualThreshold;
    null_spec.scenarios = threshold_grid
        .iter()
        .map(|&t| ScenarioSpec::delayed(t))
        .collect();
    run_grid(&null_spec, dropout_rate)
}

/// One point of a power-versus-events curve.
#[derive(Debug, Clone, Copy)]
pub struct EventPowerPoint {
    pub target_events: u32,
    pub power: f64,
    pub mc_std_err: f64,
    pub shortfall_count: u32,
}

/// Power of one test across a grid of event targets, event-driven analyses.
/// All grid points share the same simulated trials (earlier looks at the
/// same data), which removes between-point Monte Carlo noise.
pub fn power_vs_events(
    design: &TrialDesign,
    scenario: &ScenarioSpec,
    event_grid: &[u32],
    test: TestSpec,
    n_sims: u32,
    master_seed: u64,
    dropout_rate: f64,
) -> Result<Vec<EventPowerPoint>> {
    design.validate()?;
    if event_grid.iter().any(|&e| e == 0 || e > 2 * design.n_per_arm) {
        return Err(Error::InvalidDesign(
            "event grid entries must lie in [1, 2·n_per_arm]".into(),
        ));
    }
    let hazards = make_scenario(scenario)?;
    let alpha = design.alpha_one_sided;

    let per_trial: Vec<Vec<(Option<bool>, bool)>> = (0..n_sims)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(master_seed, i as u64);
            let latent = simulate_latent(design, &hazards, dropout_rate, &mut stream);
            event_grid
                .iter()
                .map(|&target| {
                    let trial = latent.observe_event_driven(target, design.max_study_duration);
                    let outcome =
                        analyze_trial(&trial, &[test], &[], TStarRule::MinimaxObserved, alpha);
                    (outcome.tests[0], trial.shortfall)
                })
                .collect()
        })
        .collect();

    Ok(event_grid
        .iter()
        .enumerate()
        .map(|(k, &target)| {
            let mut used = 0u32;
            let mut rejected = 0u32;
            let mut shortfalls = 0u32;
            for trial in &per_trial {
                let (result, shortfall) = trial[k];
                if shortfall {
                    shortfalls += 1;
                }
                if let Some(reject) = result {
                    used += 1;
                    if reject {
                        rejected += 1;
                    }
                }
            }
            let p = rejected as f64 / used as f64;
            EventPowerPoint {
                target_events: target,
                power: p,
                mc_std_err: (p * (1.0 - p) / used as f64).sqrt(),
                shortfall_count: shortfalls,
            }
        })
        .collect())
}

/// One point of a power-versus-t* curve for the RMST difference test.
#[derive(Debug, Clone, Copy)]
pub struct TStarPowerPoint {
    pub t_star: f64,
    pub power: f64,
    pub mc_std_err: f64,
    /// Trials where t* had to be capped at the data support.
    pub cap_count: u32,
}

/// RMST-difference-test power across a grid of fixed truncation times,
/// sharing trials across grid points. Each trial caps t* at its own minimax
/// observed time.
pub fn power_vs_tstar(
    design: &TrialDesign,
    scenario: &ScenarioSpec,
    tstar_grid: &[f64],
    n_sims: u32,
    master_seed: u64,
    dropout_rate: f64,
) -> Result<Vec<TStarPowerPoint>> {
    design.validate()?;
    if tstar_grid.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidDesign("t* grid entries must be positive".into()));
    }
    let hazards = make_scenario(scenario)?;
    let alpha = design.alpha_one_sided;

    let per_trial: Vec<Vec<(Option<bool>, bool)>> = (0..n_sims)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(master_seed, i as u64);
            let trial = simulate_trial_with_hazards(design, &hazards, dropout_rate, &mut stream);
            let trial_ref = &trial;
            tstar_grid
                .iter()
                .map(|&t| {
                    let outcome = analyze_trial(
                        trial_ref,
                        &[TestSpec::RmstDifference],
                        &[],
                        TStarRule::Fixed(t),
                        alpha,
                    );
                    (outcome.tests[0], outcome.t_star_capped)
                })
                .collect()
        })
        .collect();

    Ok(tstar_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut used = 0u32;
            let mut rejected = 0u32;
            let mut capped = 0u32;
            for trial in &per_trial {
                let (result, cap) = trial[k];
                if cap {
                    capped += 1;
                }
                if let Some(reject) = result {
                    used += 1;
                    if reject {
                        rejected += 1;
                    }
                }
            }
            let p = rejected as f64 / used as f64;
            TStarPowerPoint {
                t_star: t,
                power: p,
                mc_std_err: (p * (1.0 - p) / used as f64).sqrt(),
                cap_count: capped,
            }
        })
        .collect())
}

// ── CSV export ──────────────────────────────────────────────────────────────

/// Write a summary as CSV with one row per (scenario, method, metric):
/// `pattern,threshold,method,metric,value,mc_se,n_used,n_failed`.
pub fn write_summary_csv<W: Write>(
    summary: &SimulationSummary,
    writer: &mut W,
) -> std::io::Result<()> {
    writeln!(writer, "pattern,threshold,method,metric,value,mc_se,n_used,n_failed")?;
    let stat_name = match summary.summary_stat {
        SummaryStat::Mean => "mean_estimate",
        SummaryStat::Median => "median_estimate",
    };
    for cell in &summary.cells {
        let pattern = cell.scenario.pattern;
        let threshold = cell.scenario.threshold;
        let mut row = |method: &str, metric: &str, value: f64, se: f64, used: u32, failed: u32| {
            writeln!(
                writer,
                "{pattern},{threshold},{method},{metric},{value:.6},{se:.6},{used},{failed}"
            )
        };
        for test in &cell.tests {
            row(
                &test.spec.csv_id(),
                "rejection_rate",
                test.rejection_rate(),
                test.mc_std_err(),
                test.n_used,
                test.n_failed,
            )?;
        }
        for est in &cell.estimators {
            row(
                &est.spec.csv_id(),
                stat_name,
                est.point(summary.summary_stat),
                est.mc_std_err(summary.summary_stat),
                est.n_used(),
                est.n_failed,
            )?;
        }
        if let Some(mean) = cell.mean_rmst_control.mean() {
            row("rmst", "mean_rmst_control", mean, 0.0, cell.mean_rmst_control.count, 0)?;
        }
        if let Some(mean) = cell.mean_rmst_experimental.mean() {
            row(
                "rmst",
                "mean_rmst_experimental",
                mean,
                0.0,
                cell.mean_rmst_experimental.count,
                0,
            )?;
        }
        if let Some(mean) = cell.mean_t_star.mean() {
            row("rmst", "mean_tstar", mean, 0.0, cell.mean_t_star.count, 0)?;
        }
        row(
            "design",
            "shortfall_count",
            cell.shortfall_count as f64,
            0.0,
            cell.n_sims,
            0,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(n_sims: u32) -> RunSpec {
        let mut spec = RunSpec::new(TrialDesign::default(), vec![ScenarioSpec::proportional()]);
        spec.n_sims = n_sims;
        spec.tests = vec![
            TestSpec::LogRank,
            TestSpec::FlemingHarrington(FlemingHarringtonParams::new(0.0, 1.0).unwrap()),
            TestSpec::RmstDifference,
        ];
        spec.estimators = vec![
            EstimatorSpec::HazardRatio,
            EstimatorSpec::RmstDifference,
            EstimatorSpec::RmstRatio,
        ];
        spec
    }

    #[test]
    fn summaries_are_worker_count_invariant() {
        let spec = small_spec(300);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run_grid(&spec, 0.0).unwrap())
        };
        let a = run(1);
        let b = run(4);
        for (ca, cb) in a.cells.iter().zip(&b.cells) {
            for (ta, tb) in ca.tests.iter().zip(&cb.tests) {
                assert_eq!(ta.n_rejected, tb.n_rejected);
                assert_eq!(ta.n_used, tb.n_used);
            }
            for (ea, eb) in ca.estimators.iter().zip(&cb.estimators) {
                assert_eq!(ea.values, eb.values);
            }
            assert_eq!(ca.mean_t_star.sum.to_bits(), cb.mean_t_star.sum.to_bits());
        }
    }

    #[test]
    fn reruns_are_identical() {
        let spec = small_spec(200);
        let a = run_grid(&spec, 0.001).unwrap();
        let b = run_grid(&spec, 0.001).unwrap();
        for (ca, cb) in a.cells.iter().zip(&b.cells) {
            for (ea, eb) in ca.estimators.iter().zip(&cb.estimators) {
                let bits =
                    |v: &Vec<f64>| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
                assert_eq!(bits(&ea.values), bits(&eb.values));
            }
        }
    }

    #[test]
    fn null_equal_survival_centers_estimates() {
        let mut spec = small_spec(400);
        spec.null_mode = NullMode::EqualSurvival;
        spec.estimators = vec![EstimatorSpec::HazardRatio, EstimatorSpec::RmstDifference];
        let summary = run_grid(&spec, 0.0).unwrap();
        let cell = &summary.cells[0];
        let hr = cell.estimator(EstimatorSpec::HazardRatio).unwrap();
        assert!(
            (hr.mean() - 1.0).abs() < 3.0 * hr.mc_std_err(SummaryStat::Mean) + 0.02,
            "mean HR {} under the null",
            hr.mean()
        );
        let diff = cell.estimator(EstimatorSpec::RmstDifference).unwrap();
        assert!(
            diff.mean().abs() < 3.0 * diff.mc_std_err(SummaryStat::Mean) + 0.02,
            "mean RMST difference {} under the null",
            diff.mean()
        );
    }

    #[test]
    fn csv_export_is_deterministic_and_well_formed() {
        let spec = small_spec(150);
        let summary = run_grid(&spec, 0.0).unwrap();
        let mut a = Vec::new();
        write_summary_csv(&summary, &mut a).unwrap();
        let summary2 = run_grid(&spec, 0.0).unwrap();
        let mut b = Vec::new();
        write_summary_csv(&summary2, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "pattern,threshold,method,metric,value,mc_se,n_used,n_failed"
        );
        for line in lines {
            assert_eq!(line.split(',').count(), 8, "bad row: {line}");
        }
        assert!(text.contains("proportional,0,logrank,rejection_rate,"));
    }

    #[test]
    fn power_vs_events_shares_trials() {
        let design = TrialDesign::default();
        let grid = [100, 200, 258];
        let points = power_vs_events(
            &design,
            &ScenarioSpec::proportional(),
            &grid,
            TestSpec::LogRank,
            300,
            11,
            0.0,
        )
        .unwrap();
        assert_eq!(points.len(), 3);
        // Power should increase with the event target under proportional
        // hazards, and shared trials make the comparison exact in noise.
        assert!(points[0].power < points[2].power);
    }

    #[test]
    fn null_log_rank_z_is_standard_normal() {
        // Exchangeable arms: over 10⁴ trials the log-rank Z has mean
        // 0 ± 0.03 and variance 1 ± 0.05.
        let design = TrialDesign::default();
        let hazards = hazards_for_cell(&ScenarioSpec::proportional(), NullMode::EqualSurvival)
            .unwrap();
        let zs: Vec<f64> = (0..10_000u32)
            .into_par_iter()
            .map(|i| {
                let mut stream = RngStream::new(606, i as u64);
                let trial = simulate_trial_with_hazards(&design, &hazards, 0.0, &mut stream);
                log_rank_from_table(&build_risk_table(&trial.dataset).unwrap())
                    .unwrap()
                    .z
            })
            .collect();
        let n = zs.len() as f64;
        let mean = zs.iter().sum::<f64>() / n;
        let variance = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.03, "null Z mean {mean}");
        assert!((variance - 1.0).abs() < 0.05, "null Z variance {variance}");
    }

    #[test]
    fn reported_mc_std_err_matches_empirical_spread() {
        // Rejection rates over 10 independent master seeds scatter with a
        // standard deviation within a factor 1.5 of the reported mc_std_err.
        let mut rates = Vec::new();
        let mut reported = 0.0;
        for seed in 0..10u64 {
            let mut spec = small_spec(500);
            spec.tests = vec![TestSpec::LogRank];
            spec.estimators.clear();
            spec.master_seed = 1000 + seed;
            let summary = run_grid(&spec, 0.0).unwrap();
            let test = &summary.cells[0].tests[0];
            rates.push(test.rejection_rate());
            reported = test.mc_std_err();
        }
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        let empirical =
            (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / 9.0).sqrt();
        let ratio = empirical / reported;
        assert!(
            (1.0 / 1.5..=1.5).contains(&ratio),
            "empirical {empirical:.5} vs reported {reported:.5} (ratio {ratio:.2})"
        );
    }

    #[test]
    fn invalid_specs_rejected_before_simulation() {
        let mut spec = small_spec(50);
        assert!(run_grid(&spec, 0.0).is_err()); // n_sims too small
        spec.n_sims = 100;
        spec.tests.clear();
        assert!(run_grid(&spec, 0.0).is_err());
        let design = TrialDesign::default();
        assert!(power_vs_events(
            &design,
            &ScenarioSpec::proportional(),
            &[0],
            TestSpec::LogRank,
            100,
            1,
            0.0
        )
        .is_err());
    }
}

//! Implementations of the `analyze`, `simulate`, `reproduce`, and `selftest`
//! commands.

use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use serde::Serialize;

use nph_core::effects::{
    hazard_ratio, rmst_difference, rmst_ratio, weighted_hazard_ratio, EffectEstimate,
};
use nph_core::harness::{
    power_vs_events, power_vs_tstar, run_grid, run_null_equal_threshold, CellSummary,
    EstimatorSpec, NullMode, RunSpec, SimulationSummary, SummaryStat, TStarRule, TestSpec,
    write_summary_csv,
};
use nph_core::hypothesis::{
    log_rank, minimax_event_time, minimax_observed_time, rmst_by_arm, rmst_difference_test,
    weighted_log_rank, TestResult,
};
use nph_core::numerics::relative_efficiency;
use nph_core::simgen::{calibrate_dropout, CalibrationResult, ScenarioSpec, TrialDesign};
use nph_core::survival::Arm;

use crate::config::{default_scenario_grid, RunConfig};

/// Command failure with the exit code contract: 2 config, 3 data, 4 numeric.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", out.display())))
}

// ── analyze ─────────────────────────────────────────────────────────────────

pub struct AnalyzeOptions {
    pub tests: Vec<TestSpec>,
    pub estimators: Vec<EstimatorSpec>,
    pub tstar_rule: TStarRule,
    pub alpha: f64,
}

fn push_test_rows(report: &mut String, name: &str, result: &TestResult, alpha: f64) {
    let _ = writeln!(report, "test,{name},statistic,{}", result.statistic);
    let _ = writeln!(report, "test,{name},variance,{}", result.variance);
    let _ = writeln!(report, "test,{name},z,{}", result.z);
    let _ = writeln!(report, "test,{name},p_one_sided,{}", result.p_one_sided);
    let _ = writeln!(
        report,
        "test,{name},reject_at_alpha,{}",
        (result.p_one_sided <= alpha) as u8
    );
}

fn push_effect_rows(report: &mut String, name: &str, effect: &EffectEstimate) {
    let (lo, hi) = effect.reported_ci();
    let _ = writeln!(report, "effect,{name},point,{}", effect.point);
    let _ = writeln!(report, "effect,{name},std_err,{}", effect.std_err);
    let _ = writeln!(report, "effect,{name},reported,{}", effect.reported);
    let _ = writeln!(report, "effect,{name},reported_ci_low,{lo}");
    let _ = writeln!(report, "effect,{name},reported_ci_high,{hi}");
}

/// Analyze one dataset file: run the requested tests and estimators and
/// write `analysis.csv` (kind,name,metric,value). Individual method
/// failures become `error` rows rather than aborting the report.
pub fn cmd_analyze(
    dataset_path: &Path,
    options: &AnalyzeOptions,
    out: &Path,
) -> Result<(), CliError> {
    let file = fs::File::open(dataset_path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", dataset_path.display())))?;
    let dataset = nph_core::io::read_dataset_csv(BufReader::new(file))
        .map_err(|e| CliError::Data(format!("{}: {e}", dataset_path.display())))?;
    dataset
        .require_both_arms()
        .map_err(|e| CliError::Data(e.to_string()))?;

    let t_star = match options.tstar_rule {
        TStarRule::MinimaxObserved => minimax_observed_time(&dataset),
        TStarRule::MinimaxEvent => minimax_event_time(&dataset),
        TStarRule::Fixed(x) => minimax_observed_time(&dataset).map(|cap| x.min(cap)),
        TStarRule::ArmEvent => {
            return Err(CliError::Config(
                "t* rule arm-event is not supported by analyze; use minimax-observed, \
                 minimax-event, or fixed:X"
                    .into(),
            ))
        }
    };

    let mut report = String::from("kind,name,metric,value\n");
    let _ = writeln!(report, "dataset,,observations,{}", dataset.len());
    let _ = writeln!(report, "dataset,,events,{}", dataset.event_count());
    let _ = writeln!(
        report,
        "dataset,,arm_control,{}",
        dataset.arm_count(Arm::Control)
    );
    let _ = writeln!(
        report,
        "dataset,,arm_experimental,{}",
        dataset.arm_count(Arm::Experimental)
    );
    match &t_star {
        Ok(ts) => {
            let _ = writeln!(report, "rmst,t_star,value,{ts}");
        }
        Err(e) => {
            let _ = writeln!(report, "error,t_star,message,{e}");
        }
    }

    for spec in &options.tests {
        let name = spec.csv_id();
        let result = match spec {
            TestSpec::LogRank => log_rank(&dataset),
            TestSpec::FlemingHarrington(p) => weighted_log_rank(&dataset, p),
            TestSpec::RmstDifference => t_star
                .clone()
                .and_then(|ts| rmst_difference_test(&dataset, ts)),
        };
        match result {
            Ok(r) => push_test_rows(&mut report, &name, &r, options.alpha),
            Err(e) => {
                let _ = writeln!(report, "error,{name},message,{e}");
            }
        }
    }

    for spec in &options.estimators {
        let name = spec.csv_id();
        let result = match spec {
            EstimatorSpec::HazardRatio => hazard_ratio(&dataset),
            EstimatorSpec::WeightedHazardRatio(p) => weighted_hazard_ratio(&dataset, p),
            EstimatorSpec::RmstDifference => {
                t_star.clone().and_then(|ts| rmst_difference(&dataset, ts))
            }
            EstimatorSpec::RmstRatio => t_star.clone().and_then(|ts| rmst_ratio(&dataset, ts)),
        };
        match result {
            Ok(e) => push_effect_rows(&mut report, &name, &e),
            Err(e) => {
                let _ = writeln!(report, "error,{name},message,{e}");
            }
        }
    }

    if let Ok(ts) = &t_star {
        for arm in [Arm::Control, Arm::Experimental] {
            match rmst_by_arm(&dataset, arm, *ts) {
                Ok(est) => {
                    let _ = writeln!(report, "rmst,{arm},mean,{}", est.mean);
                    let _ = writeln!(report, "rmst,{arm},variance,{}", est.variance);
                }
                Err(e) => {
                    let _ = writeln!(report, "error,rmst_{arm},message,{e}");
                }
            }
        }
    }

    ensure_out_dir(out)?;
    let path = out.join("analysis.csv");
    write_file(&path, &report)?;
    print!("{report}");
    eprintln!("report written to {}", path.display());
    Ok(())
}

// ── simulate ────────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct SimulateMetadata<'a> {
    version: &'static str,
    master_seed: u64,
    n_sims: u32,
    tests: Vec<String>,
    estimators: Vec<String>,
    tstar_rule: String,
    null_mode: NullMode,
    summary_stat: SummaryStat,
    design: TrialDesign,
    scenarios: &'a [ScenarioSpec],
    calibration: CalibrationResult,
}

/// Proportional-hazards scenario sharing a grid's survival constants, used
/// to calibrate dropout once before the grid runs.
fn calibration_scenario(scenarios: &[ScenarioSpec]) -> ScenarioSpec {
    let mut spec = ScenarioSpec::proportional();
    if let Some(first) = scenarios.first() {
        spec.control_median = first.control_median;
        spec.full_effect_hr = first.full_effect_hr;
    }
    spec
}

pub fn cmd_simulate(
    config_path: &Path,
    seed_override: Option<u64>,
    analysis_mode_override: Option<nph_core::simgen::AnalysisMode>,
    out: &Path,
) -> Result<(), CliError> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let config = RunConfig::parse(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", config_path.display())))?;
    let mut spec = config
        .resolve(seed_override)
        .map_err(CliError::Config)?;
    if let Some(mode) = analysis_mode_override {
        spec.design.analysis_mode = mode;
    }

    let calibration = calibrate_dropout(&spec.design, &calibration_scenario(&spec.scenarios))
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    if calibration.administrative_floor_exceeds_target {
        eprintln!(
            "warning: administrative censoring alone gives {:.4} > target {:.4}; dropout rate pinned at 0",
            calibration.administrative_censoring, spec.design.target_censoring
        );
    }

    let summary = run_grid(&spec, calibration.dropout_rate)
        .map_err(|e| CliError::Numeric(e.to_string()))?;

    ensure_out_dir(out)?;
    let mut csv = Vec::new();
    write_summary_csv(&summary, &mut csv).map_err(|e| CliError::Data(e.to_string()))?;
    let csv_path = out.join("summary.csv");
    write_file(&csv_path, &String::from_utf8(csv).expect("csv is utf-8"))?;

    let metadata = SimulateMetadata {
        version: env!("CARGO_PKG_VERSION"),
        master_seed: spec.master_seed,
        n_sims: spec.n_sims,
        tests: spec.tests.iter().map(|t| t.to_string()).collect(),
        estimators: spec.estimators.iter().map(|e| e.to_string()).collect(),
        tstar_rule: spec.tstar_rule.to_string(),
        null_mode: spec.null_mode,
        summary_stat: spec.summary_stat,
        design: spec.design,
        scenarios: &spec.scenarios,
        calibration,
    };
    let meta_path = out.join("metadata.json");
    write_file(
        &meta_path,
        &serde_json::to_string_pretty(&metadata).expect("metadata serializes"),
    )?;

    let failures: u32 = summary
        .cells
        .iter()
        .flat_map(|c| c.tests.iter().map(|t| t.n_failed))
        .chain(summary.cells.iter().flat_map(|c| c.estimators.iter().map(|e| e.n_failed)))
        .sum();
    println!(
        "simulated {} cells x {} trials (dropout rate {:.5}); {} method failures",
        summary.cells.len(),
        summary.n_sims,
        summary.dropout_rate,
        failures
    );
    println!("wrote {} and {}", csv_path.display(), meta_path.display());
    Ok(())
}

// ── reproduce ───────────────────────────────────────────────────────────────

const FULL_TESTS: [&str; 5] = ["logrank", "fh(0,1)", "fh(1,1)", "fh(1,0)", "rmst_diff"];
const FULL_ESTIMATORS: [&str; 6] =
    ["hr", "whr(0,1)", "whr(1,1)", "whr(1,0)", "rmst_diff", "rmst_ratio"];

fn parse_specs<T: std::str::FromStr<Err = nph_core::Error>>(names: &[&str]) -> Vec<T> {
    names
        .iter()
        .map(|s| s.parse().expect("built-in spec parses"))
        .collect()
}

fn grid_spec(scenarios: Vec<ScenarioSpec>, n_sims: u32, seed: u64) -> RunSpec {
    let mut spec = RunSpec::new(TrialDesign::default(), scenarios);
    spec.n_sims = n_sims;
    spec.master_seed = seed;
    spec
}

/// Power/test results under the minimax-observed rule plus treatment-effect
/// estimates under the minimax-event rule (the truncation the reference RMST
/// levels correspond to), run on identical trial data.
fn pattern_grid_summary(
    scenarios: Vec<ScenarioSpec>,
    n_sims: u32,
    seed: u64,
    dropout_rate: f64,
) -> Result<SimulationSummary, CliError> {
    let mut power_spec = grid_spec(scenarios.clone(), n_sims, seed);
    power_spec.tests = parse_specs(&FULL_TESTS);
    power_spec.tstar_rule = TStarRule::MinimaxObserved;
    let power = run_grid(&power_spec, dropout_rate).map_err(|e| CliError::Numeric(e.to_string()))?;

    let mut effect_spec = grid_spec(scenarios, n_sims, seed);
    effect_spec.estimators = parse_specs(&FULL_ESTIMATORS);
    effect_spec.tstar_rule = TStarRule::MinimaxEvent;
    let effects = run_grid(&effect_spec, dropout_rate).map_err(|e| CliError::Numeric(e.to_string()))?;

    let cells = power
        .cells
        .into_iter()
        .zip(effects.cells)
        .map(|(p, e)| CellSummary {
            tests: p.tests,
            ..e
        })
        .collect();
    Ok(SimulationSummary {
        cells,
        ..power
    })
}

fn summary_to_csv(summary: &SimulationSummary) -> String {
    let mut buffer = Vec::new();
    write_summary_csv(summary, &mut buffer).expect("in-memory write");
    String::from_utf8(buffer).expect("csv is utf-8")
}

fn table_csv(summary: &SimulationSummary) -> String {
    let mut out = String::from("threshold,control_rmst,experimental_rmst,difference\n");
    for cell in &summary.cells {
        let control = cell.mean_rmst_control.mean().unwrap_or(f64::NAN);
        let experimental = cell.mean_rmst_experimental.mean().unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{},{control:.4},{experimental:.4},{:.4}",
            cell.scenario.threshold,
            experimental - control
        );
    }
    out
}

fn delayed_grid() -> Vec<ScenarioSpec> {
    [0.0, 1.0, 2.0, 3.0, 4.0].map(ScenarioSpec::delayed).to_vec()
}

fn crossing_grid() -> Vec<ScenarioSpec> {
    [0.0, 3.0, 6.0, 9.0, 12.0].map(ScenarioSpec::crossing).to_vec()
}

fn decreasing_grid() -> Vec<ScenarioSpec> {
    [0.0, 2.0, 4.0, 6.0, 8.0, 10.0].map(ScenarioSpec::decreasing).to_vec()
}

/// Tables built from per-arm RMST means under the minimax-event truncation.
fn table_summary(
    scenarios: Vec<ScenarioSpec>,
    n_sims: u32,
    seed: u64,
    dropout_rate: f64,
) -> Result<SimulationSummary, CliError> {
    let mut spec = grid_spec(scenarios, n_sims, seed);
    spec.estimators = parse_specs(&["rmst_diff", "rmst_ratio"]);
    spec.tstar_rule = TStarRule::MinimaxEvent;
    run_grid(&spec, dropout_rate).map_err(|e| CliError::Numeric(e.to_string()))
}

#[derive(Serialize)]
struct ReproduceMetadata {
    version: &'static str,
    target: String,
    seed: u64,
    n_sims: u32,
    design: TrialDesign,
    dropout_rate: f64,
    null_mode: Option<NullMode>,
    notes: &'static str,
}

pub fn cmd_reproduce(target: &str, seed: u64, n_sims: u32, out: &Path) -> Result<(), CliError> {
    ensure_out_dir(out)?;
    let design = TrialDesign::default();
    let mut null_mode = None;
    let mut notes = "";
    let mut dropout_used = 0.0;

    // The deterministic target needs no simulation at all.
    let csv = if target == "releff" {
        let value = relative_efficiency(0.90, 0.67, 0.025)
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        format!("quantity,value\nrelative_efficiency,{value:.6}\n")
    } else {
        let calibration = calibrate_dropout(&design, &ScenarioSpec::proportional())
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        let dropout = calibration.dropout_rate;
        dropout_used = dropout;
        match target {
            "fig1" => {
                let grid = [100, 140, 180, 220, 258, 300];
                let mut out = String::from(
                    "pattern,threshold,target_events,power,mc_se,shortfall_count\n",
                );
                for scenario in [ScenarioSpec::proportional(), ScenarioSpec::delayed(2.0)] {
                    let points = power_vs_events(
                        &design,
                        &scenario,
                        &grid,
                        TestSpec::LogRank,
                        n_sims,
                        seed,
                        dropout,
                    )
                    .map_err(|e| CliError::Numeric(e.to_string()))?;
                    for p in points {
                        let _ = writeln!(
                            out,
                            "{},{},{},{:.6},{:.6},{}",
                            scenario.pattern,
                            scenario.threshold,
                            p.target_events,
                            p.power,
                            p.mc_std_err,
                            p.shortfall_count
                        );
                    }
                }
                notes = "log-rank power as a function of the event target";
                out
            }
            "fig3" => {
                let grid = [6.0, 9.0, 12.0, 15.0, 18.0, 21.0];
                let scenarios = [
                    ScenarioSpec::proportional(),
                    ScenarioSpec::delayed(4.0),
                    ScenarioSpec::crossing(9.0),
                    ScenarioSpec::decreasing(9.0),
                ];
                let mut out = String::from("pattern,threshold,tstar,power,mc_se,cap_count\n");
                for scenario in scenarios {
                    let points =
                        power_vs_tstar(&design, &scenario, &grid, n_sims, seed, dropout)
                            .map_err(|e| CliError::Numeric(e.to_string()))?;
                    for p in points {
                        let _ = writeln!(
                            out,
                            "{},{},{},{:.6},{:.6},{}",
                            scenario.pattern,
                            scenario.threshold,
                            p.t_star,
                            p.power,
                            p.mc_std_err,
                            p.cap_count
                        );
                    }
                }
                notes = "RMST-difference-test power as a function of the truncation time";
                out
            }
            "fig5" => summary_to_csv(&pattern_grid_summary(delayed_grid(), n_sims, seed, dropout)?),
            "fig6" => summary_to_csv(&pattern_grid_summary(crossing_grid(), n_sims, seed, dropout)?),
            "fig7" => {
                summary_to_csv(&pattern_grid_summary(decreasing_grid(), n_sims, seed, dropout)?)
            }
            "fig8" => {
                null_mode = Some(NullMode::EqualSurvival);
                let mut spec = grid_spec(vec![ScenarioSpec::proportional()], n_sims, seed);
                spec.tests = parse_specs(&FULL_TESTS);
                spec.null_mode = NullMode::EqualSurvival;
                let summary =
                    run_grid(&spec, dropout).map_err(|e| CliError::Numeric(e.to_string()))?;
                notes = "type-I error under H0: S0 = S1 (both arms on the control hazard)";
                summary_to_csv(&summary)
            }
            "fig10" => {
                null_mode = Some(NullMode::EqualThreshold);
                let mut spec = grid_spec(vec![ScenarioSpec::delayed(0.0)], n_sims, seed);
                spec.tests = parse_specs(&FULL_TESTS);
                let summary =
                    run_null_equal_threshold(&spec, &[0.0, 1.0, 2.0, 3.0, 4.0], dropout)
                        .map_err(|e| CliError::Numeric(e.to_string()))?;
                notes = "type-I error under H0: delta0 = delta1 (both arms delayed)";
                summary_to_csv(&summary)
            }
            "table1" => table_csv(&table_summary(delayed_grid(), n_sims, seed, dropout)?),
            "table2" => table_csv(&table_summary(crossing_grid(), n_sims, seed, dropout)?),
            "table3" => table_csv(&table_summary(decreasing_grid(), n_sims, seed, dropout)?),
            other => {
                return Err(CliError::Config(format!(
                    "unknown reproduce target '{other}'; expected one of releff, fig1, fig3, \
                     fig5, fig6, fig7, fig8, fig10, table1, table2, table3"
                )))
            }
        }
    };

    let csv_path = out.join(format!("{target}.csv"));
    write_file(&csv_path, &csv)?;
    let metadata = ReproduceMetadata {
        version: env!("CARGO_PKG_VERSION"),
        target: target.to_string(),
        seed,
        n_sims,
        design,
        dropout_rate: dropout_used,
        null_mode,
        notes,
    };
    write_file(
        &out.join(format!("{target}.meta.json")),
        &serde_json::to_string_pretty(&metadata).expect("metadata serializes"),
    )?;
    print!("{csv}");
    eprintln!("wrote {}", csv_path.display());
    Ok(())
}

// ── selftest ────────────────────────────────────────────────────────────────

fn check(name: &str, ok: bool, detail: String) -> Result<(), CliError> {
    if ok {
        println!("selftest: {name} ok");
        Ok(())
    } else {
        Err(CliError::Numeric(format!("selftest: {name} FAILED ({detail})")))
    }
}

/// Assert the resolved defaults against the reference design constants and
/// run a handful of fast numeric invariants.
pub fn cmd_selftest() -> Result<(), CliError> {
    let resolved = RunConfig::parse("")
        .map_err(CliError::Config)?
        .resolve(None)
        .map_err(CliError::Config)?;
    let d = resolved.design;
    check(
        "default design constants",
        d.n_per_arm == 165
            && d.accrual_duration == 17.5
            && d.max_study_duration == 25.0
            && d.target_events == 258
            && d.target_censoring == 0.22
            && d.alpha_one_sided == 0.025,
        format!("{d:?}"),
    )?;
    check(
        "default scenario grid",
        resolved.scenarios == default_scenario_grid() && resolved.scenarios.len() == 16,
        format!("{} scenarios", resolved.scenarios.len()),
    )?;

    let releff = relative_efficiency(0.90, 0.67, 0.025)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    check(
        "relative efficiency 1.82",
        (releff - 1.82).abs() < 0.005,
        format!("{releff}"),
    )?;

    let toy = nph_core::io::read_dataset_csv("time,event,arm\n1,1,0\n2,0,1\n".as_bytes())
        .map_err(|e| CliError::Data(e.to_string()))?;
    let lr = log_rank(&toy).map_err(|e| CliError::Numeric(e.to_string()))?;
    check(
        "log-rank hand example",
        (lr.statistic - 0.5).abs() < 1e-12
            && (lr.variance - 0.25).abs() < 1e-12
            && (lr.z - 1.0).abs() < 1e-12,
        format!("U={} V={} z={}", lr.statistic, lr.variance, lr.z),
    )?;

    let fh0 = weighted_log_rank(
        &toy,
        &nph_core::hypothesis::FlemingHarringtonParams::new(0.0, 0.0)
            .map_err(|e| CliError::Numeric(e.to_string()))?,
    )
    .map_err(|e| CliError::Numeric(e.to_string()))?;
    check(
        "fh(0,0) equals log-rank",
        fh0.statistic == lr.statistic && fh0.variance == lr.variance,
        format!("{} vs {}", fh0.statistic, lr.statistic),
    )?;

    println!("selftest passed");
    Ok(())
}

// ── shared helpers for main ─────────────────────────────────────────────────

pub fn parse_test_list(text: &str) -> Result<Vec<TestSpec>, CliError> {
    split_list(text)
        .map(|s| s.parse().map_err(|e: nph_core::Error| CliError::Config(e.to_string())))
        .collect()
}

pub fn parse_estimator_list(text: &str) -> Result<Vec<EstimatorSpec>, CliError> {
    split_list(text)
        .map(|s| s.parse().map_err(|e: nph_core::Error| CliError::Config(e.to_string())))
        .collect()
}

/// Split a comma-separated method list, keeping parenthesized arguments like
/// `fh(0,1)` intact.
fn split_list(text: &str) -> impl Iterator<Item = String> + '_ {
    let mut items = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '(' => {
                depth += 1;
                current.push(c);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                current.push(c);
            }
            ',' if depth == 0 => {
                items.push(std::mem::take(&mut current));
            }
            _ => current.push(c),
        }
    }
    items.push(current);
    items
        .into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
}

//! Simulation run configuration: a TOML file with `[design]`, `[run]`, and
//! `[[scenario]]` sections. Unknown keys are rejected; missing keys take the
//! reference defaults (330 patients, 17.5-month accrual, 25-month duration,
//! 258 target events, 22% target censoring, one-sided alpha 0.025).

use serde::{Deserialize, Serialize};

use nph_core::harness::{EstimatorSpec, NullMode, RunSpec, SummaryStat, TStarRule, TestSpec};
use nph_core::simgen::{HazardPattern, ScenarioSpec, TrialDesign};

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub design: Option<TrialDesign>,
    #[serde(default)]
    pub run: Option<RunSection>,
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<ScenarioSection>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_n_sims")]
    pub n_sims: u32,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    /// Test names: `logrank`, `fh(rho,gamma)`, `rmst_diff`.
    #[serde(default = "default_tests")]
    pub tests: Vec<String>,
    /// Estimator names: `hr`, `whr(rho,gamma)`, `rmst_diff`, `rmst_ratio`.
    #[serde(default = "default_estimators")]
    pub estimators: Vec<String>,
    /// `minimax-observed`, `minimax-event`, `arm-event`, or `fixed:X`.
    #[serde(default = "default_tstar_rule")]
    pub tstar_rule: String,
    #[serde(default = "default_null_mode")]
    pub null_mode: NullMode,
    #[serde(default = "default_summary_stat")]
    pub summary_stat: SummaryStat,
}

impl Default for RunSection {
    fn default() -> Self {
        toml::from_str("").expect("empty run section deserializes from defaults")
    }
}

fn default_n_sims() -> u32 {
    10_000
}
fn default_seed() -> u64 {
    20250810
}
fn default_tests() -> Vec<String> {
    ["logrank", "fh(0,1)", "fh(1,1)", "fh(1,0)", "rmst_diff"]
        .map(String::from)
        .to_vec()
}
fn default_estimators() -> Vec<String> {
    ["hr", "whr(0,1)", "whr(1,1)", "whr(1,0)", "rmst_diff", "rmst_ratio"]
        .map(String::from)
        .to_vec()
}
fn default_tstar_rule() -> String {
    "minimax-observed".into()
}
fn default_null_mode() -> NullMode {
    NullMode::None
}
fn default_summary_stat() -> SummaryStat {
    SummaryStat::Mean
}

/// One scenario block, expanded to one cell per threshold.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub pattern: HazardPattern,
    #[serde(default)]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub control_median: Option<f64>,
    #[serde(default)]
    pub full_effect_hr: Option<f64>,
    #[serde(default)]
    pub post_threshold_hr: Option<f64>,
}

impl ScenarioSection {
    fn expand(&self) -> Vec<ScenarioSpec> {
        let thresholds: &[f64] = if self.thresholds.is_empty() {
            &[0.0]
        } else {
            &self.thresholds
        };
        thresholds
            .iter()
            .map(|&threshold| {
                let mut spec = match self.pattern {
                    HazardPattern::Proportional => ScenarioSpec::proportional(),
                    HazardPattern::Delayed => ScenarioSpec::delayed(threshold),
                    HazardPattern::Crossing => ScenarioSpec::crossing(threshold),
                    HazardPattern::Decreasing => ScenarioSpec::decreasing(threshold),
                };
                if let Some(m) = self.control_median {
                    spec.control_median = m;
                }
                if let Some(hr) = self.full_effect_hr {
                    spec.full_effect_hr = hr;
                }
                spec.post_threshold_hr = self.post_threshold_hr;
                spec
            })
            .collect()
    }
}

/// The reference scenario grid: delayed 0–4, crossing 0–12, decreasing 0–10.
pub fn default_scenario_grid() -> Vec<ScenarioSpec> {
    let mut grid = Vec::new();
    grid.extend([0.0, 1.0, 2.0, 3.0, 4.0].map(ScenarioSpec::delayed));
    grid.extend([0.0, 3.0, 6.0, 9.0, 12.0].map(ScenarioSpec::crossing));
    grid.extend([0.0, 2.0, 4.0, 6.0, 8.0, 10.0].map(ScenarioSpec::decreasing));
    grid
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Resolve into an executable run spec, applying defaults.
    pub fn resolve(&self, seed_override: Option<u64>) -> Result<RunSpec, String> {
        let design = self.design.unwrap_or_default();
        let run = self.run.clone().unwrap_or_default();

        let scenarios = if self.scenarios.is_empty() {
            default_scenario_grid()
        } else {
            self.scenarios.iter().flat_map(|s| s.expand()).collect()
        };

        let tests = run
            .tests
            .iter()
            .map(|s| s.parse::<TestSpec>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        let estimators = run
            .estimators
            .iter()
            .map(|s| s.parse::<EstimatorSpec>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        let tstar_rule: TStarRule = run.tstar_rule.parse().map_err(|e: nph_core::Error| e.to_string())?;

        let mut spec = RunSpec::new(design, scenarios);
        spec.tests = tests;
        spec.estimators = estimators;
        spec.n_sims = run.n_sims;
        spec.master_seed = seed_override.unwrap_or(run.master_seed);
        spec.null_mode = run.null_mode;
        spec.tstar_rule = tstar_rule;
        spec.summary_stat = run.summary_stat;
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nph_core::simgen::AnalysisMode;

    #[test]
    fn empty_config_resolves_to_reference_defaults() {
        let spec = RunConfig::parse("").unwrap().resolve(None).unwrap();
        assert_eq!(spec.design.n_per_arm, 165);
        assert_eq!(spec.design.accrual_duration, 17.5);
        assert_eq!(spec.design.max_study_duration, 25.0);
        assert_eq!(spec.design.target_events, 258);
        assert_eq!(spec.design.analysis_mode, AnalysisMode::Event);
        assert_eq!(spec.design.target_censoring, 0.22);
        assert_eq!(spec.design.alpha_one_sided, 0.025);
        assert_eq!(spec.n_sims, 10_000);
        assert_eq!(spec.scenarios.len(), 16);
        assert_eq!(spec.tests.len(), 5);
        assert_eq!(spec.estimators.len(), 6);
        assert_eq!(spec.tstar_rule, TStarRule::MinimaxObserved);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = RunConfig::parse("[run]\ntstar_rul = \"minimax-observed\"\n").unwrap_err();
        assert!(err.contains("tstar_rul"), "{err}");
        let err = RunConfig::parse("[design]\nn_per_am = 10\n").unwrap_err();
        assert!(err.contains("n_per_am"), "{err}");
    }

    #[test]
    fn scenario_blocks_expand_per_threshold() {
        let text = r#"
[run]
n_sims = 500

[[scenario]]
pattern = "delayed"
thresholds = [0.0, 2.0]

[[scenario]]
pattern = "crossing"
thresholds = [6.0]
post_threshold_hr = 2.0
"#;
        let spec = RunConfig::parse(text).unwrap().resolve(None).unwrap();
        assert_eq!(spec.scenarios.len(), 3);
        assert_eq!(spec.scenarios[1].threshold, 2.0);
        assert_eq!(spec.scenarios[2].post_threshold_hr, Some(2.0));
    }

    #[test]
    fn seed_override_wins() {
        let spec = RunConfig::parse("[run]\nmaster_seed = 7\n")
            .unwrap()
            .resolve(Some(99))
            .unwrap();
        assert_eq!(spec.master_seed, 99);
    }
}

//! Dataset CSV reading/writing and the metadata sidecar for simulated
//! trials.
//!
//! Dataset format: UTF-8, LF line endings, header `time,event,arm`, one
//! observation per line with time in decimal months, event in {0,1} and arm
//! in {0,1}. Written floats use the shortest representation that round-trips
//! exactly, so export followed by analyze reproduces in-memory results.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simgen::{ScenarioSpec, SimulatedTrial, TrialDesign};
use crate::survival::{Arm, SurvivalObservation, TwoArmDataset};

pub const DATASET_HEADER: &str = "time,event,arm";

/// Write a dataset in the `time,event,arm` CSV format.
pub fn write_dataset_csv<W: Write>(dataset: &TwoArmDataset, writer: &mut W) -> std::io::Result<()> {
    writeln!(writer, "{DATASET_HEADER}")?;
    for obs in dataset.observations() {
        writeln!(
            writer,
            "{},{},{}",
            obs.time,
            obs.event as u8,
            obs.arm.index()
        )?;
    }
    Ok(())
}

/// Parse a dataset from the `time,event,arm` CSV format. Errors name the
/// offending 1-based line number.
pub fn read_dataset_csv<R: BufRead>(reader: R) -> Result<TwoArmDataset> {
    let mut observations = Vec::new();
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, Ok(line))) => line,
        Some((_, Err(e))) => return Err(Error::InvalidObservation(format!("line 1: {e}"))),
        None => return Err(Error::NoObservations),
    };
    if header.trim() != DATASET_HEADER {
        return Err(Error::InvalidObservation(format!(
            "line 1: expected header '{DATASET_HEADER}', got '{}'",
            header.trim()
        )));
    }

    for (index, line) in lines {
        let line_no = index + 1;
        let line = line.map_err(|e| Error::InvalidObservation(format!("line {line_no}: {e}")))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (time, event, arm) = match (fields.next(), fields.next(), fields.next(), fields.next())
        {
            (Some(t), Some(e), Some(a), None) => (t.trim(), e.trim(), a.trim()),
            _ => {
                return Err(Error::InvalidObservation(format!(
                    "line {line_no}: expected 3 comma-separated fields"
                )))
            }
        };
        let time: f64 = time.parse().map_err(|_| {
            Error::InvalidObservation(format!("line {line_no}: invalid time '{time}'"))
        })?;
        let event = match event {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::InvalidObservation(format!(
                    "line {line_no}: event must be 0 or 1, got '{other}'"
                )))
            }
        };
        let arm = match arm {
            "0" => Arm::Control,
            "1" => Arm::Experimental,
            other => {
                return Err(Error::InvalidObservation(format!(
                    "line {line_no}: arm must be 0 or 1, got '{other}'"
                )))
            }
        };
        observations.push(SurvivalObservation::new(time, event, arm).map_err(|e| {
            Error::InvalidObservation(format!("line {line_no}: {e}"))
        })?);
    }
    TwoArmDataset::new(observations)
}

/// Sidecar metadata written next to an exported trial dataset.
#[derive(Debug, Clone, Serialize)]
pub struct TrialMetadata<'a> {
    pub seed: u64,
    pub stream_id: u64,
    pub scenario: &'a ScenarioSpec,
    pub design: &'a TrialDesign,
    pub dropout_rate: f64,
    pub analysis_time: f64,
    pub events_at_analysis: u32,
    pub shortfall: bool,
}

/// Export a simulated trial as dataset CSV plus a JSON metadata sidecar.
pub fn write_trial_export<W: Write, M: Write>(
    trial: &SimulatedTrial,
    scenario: &ScenarioSpec,
    design: &TrialDesign,
    dropout_rate: f64,
    dataset_writer: &mut W,
    metadata_writer: &mut M,
) -> std::io::Result<()> {
    write_dataset_csv(&trial.dataset, dataset_writer)?;
    let metadata = TrialMetadata {
        seed: trial.rng_seed,
        stream_id: trial.rng_stream,
        scenario,
        design,
        dropout_rate,
        analysis_time: trial.analysis_time,
        events_at_analysis: trial.events_at_analysis,
        shortfall: trial.shortfall,
    };
    let json = serde_json::to_string_pretty(&metadata).expect("metadata serializes");
    writeln!(metadata_writer, "{json}")
}
